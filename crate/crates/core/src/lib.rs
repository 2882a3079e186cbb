//! Procedurally generated cooking text games and a hierarchical
//! actor-critic agent that plays them.

pub mod nn;
pub mod lexicon;
pub mod engine;
pub mod generator;
pub mod observe;
pub mod recipe;
pub mod navigator;
pub mod commands;
pub mod episode;
pub mod agent;
pub mod a2c;
pub mod eval;

pub use a2c::{EpisodeMetrics, LossBreakdown, TrainError, TrainerConfig};
pub use agent::{AgentDims, AgentModel};
pub use commands::{Candidate, CandidateSet, Helpers};
pub use engine::{apply_command, Feedback, GameState, Status, World};
pub use eval::{EvalReport, Policy, PolicyKind};
pub use generator::{GenConfig, NavSample, RecipeSample, Split};
pub use lexicon::{FoodLexicon, Vocab};
pub use navigator::{NavDims, NavMetrics, NavModel};
pub use recipe::{RecipeDims, RecipeMetrics, RecipeModel, SupervisedConfig};
