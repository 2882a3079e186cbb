//! Text cooking game: world model, command semantics, scoring and rendering.

mod state;
pub mod text;
mod walkthrough;
mod world;

pub use state::{
    admissible_commands, apply_command, render_observation, Command, Feedback, GameState, Held, ItemState,
    LossReason, Status, STEP_LIMIT,
};
pub use walkthrough::{shortest_path, walkthrough};
pub use world::{
    Action, Cut, Direction, Door, Exit, Heat, Ingredient, Item, Location, Recipe, RecipeDirection, Room, Utility,
    World,
};

pub const DEFAULT_CAPACITY: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("unwinnable: {0}")]
    Unwinnable(String),
}
