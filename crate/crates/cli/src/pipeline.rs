//! Generation, training and evaluation steps shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ldc_core::a2c::{self, EpisodeMetrics};
use ldc_core::eval::{self, EvalReport, Policy, PolicyKind};
use ldc_core::generator::{build_vocab, generate_nav_dataset, generate_recipe_dataset, generate_world};
use ldc_core::lexicon::load_embeddings;
use ldc_core::navigator::{evaluate_nav_model, train_nav_model};
use ldc_core::nn::Tensor;
use ldc_core::recipe::{evaluate_recipe_model, train_recipe_model};
use ldc_core::{
    AgentDims, AgentModel, FoodLexicon, Helpers, NavDims, NavMetrics, NavModel, NavSample, RecipeDims, RecipeMetrics,
    RecipeModel, RecipeSample, Split, Vocab, World,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;

pub const RECIPE_CHECKPOINT: &str = "recipe.ckpt";
pub const NAV_CHECKPOINT: &str = "nav.ckpt";
pub const AGENT_CHECKPOINT: &str = "agent.ckpt";
pub const RECIPE_METRICS: &str = "recipe_metrics.csv";
pub const NAV_METRICS: &str = "nav_metrics.csv";
pub const TRAIN_METRICS: &str = "train_metrics.csv";
pub const EVAL_SUMMARY: &str = "eval_summary.csv";
pub const EVAL_GAMES: &str = "eval_games.csv";

/// Independent random stream `stream` derived from a run seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Lexicon, vocabulary and the embedding source of a run.
pub struct Resources {
    pub lexicon: FoodLexicon,
    pub vocab: Vocab,
    pub embeddings: Option<PathBuf>,
}

impl Resources {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let lexicon = match &cfg.lexicon {
            Some(p) => FoodLexicon::load(p).with_context(|| format!("loading lexicon {}", p.display()))?,
            None => FoodLexicon::bundled(),
        };
        let vocab = build_vocab(&lexicon);
        Ok(Resources { lexicon, vocab, embeddings: cfg.embeddings.clone() })
    }

    /// Embedding table: pretrained rows where available, small random values
    /// elsewhere.
    pub fn embedding_table(&self, seed: u64, stream: u64) -> Result<Tensor> {
        let mut rng = rng_for(seed, stream);
        load_embeddings(self.embeddings.as_deref(), &self.vocab, &mut rng).context("loading embeddings")
    }
}

pub fn worlds(cfg: &RunConfig, res: &Resources, split: Split, count: usize) -> Vec<World> {
    let world_cfg = ldc_core::GenConfig { split, ..cfg.world.clone() };
    (0..count as u64).map(|i| generate_world(split.seed(i), &world_cfg, &res.lexicon)).collect()
}

pub struct RecipeData {
    pub train: Vec<RecipeSample>,
    pub valid: Vec<RecipeSample>,
}

/// Training and held-out recipe samples; each split uses its own seed range.
pub fn recipe_data(cfg: &RunConfig, res: &Resources) -> RecipeData {
    RecipeData {
        train: generate_recipe_dataset(Split::Train.seed(cfg.seed), cfg.recipe_samples, &res.lexicon),
        valid: generate_recipe_dataset(Split::Valid.seed(cfg.seed), cfg.valid_samples, &res.lexicon),
    }
}

pub struct NavData {
    pub train: Vec<NavSample>,
    pub valid: Vec<NavSample>,
}

pub fn nav_data(cfg: &RunConfig, res: &Resources) -> NavData {
    NavData {
        train: generate_nav_dataset(Split::Train.seed(cfg.seed), cfg.nav_samples, &res.lexicon),
        valid: generate_nav_dataset(Split::Valid.seed(cfg.seed), cfg.valid_samples, &res.lexicon),
    }
}

pub fn new_recipe_model(cfg: &RunConfig, res: &Resources) -> Result<RecipeModel> {
    let emb = res.embedding_table(cfg.seed, 1)?;
    Ok(RecipeModel::new(res.vocab.clone(), emb, RecipeDims::default(), &mut rng_for(cfg.seed, 2)))
}

pub fn new_nav_model(cfg: &RunConfig, res: &Resources) -> Result<NavModel> {
    let emb = res.embedding_table(cfg.seed, 3)?;
    Ok(NavModel::new(res.vocab.clone(), emb, NavDims::default(), &mut rng_for(cfg.seed, 4)))
}

pub fn new_agent(cfg: &RunConfig, res: &Resources) -> Result<AgentModel> {
    let emb = res.embedding_table(cfg.seed, 5)?;
    Ok(AgentModel::new(res.vocab.clone(), emb, AgentDims::default(), &mut rng_for(cfg.seed, 6)))
}

pub fn train_recipe(
    cfg: &RunConfig,
    res: &Resources,
    data: &RecipeData,
    on_epoch: impl FnMut(usize, f32, &RecipeMetrics),
) -> Result<(RecipeModel, RecipeMetrics)> {
    let mut model = new_recipe_model(cfg, res)?;
    let metrics = train_recipe_model(&mut model, &data.train, &data.valid, &cfg.recipe, &mut rng_for(cfg.seed, 7), on_epoch)?;
    Ok((model, metrics))
}

pub fn train_nav(
    cfg: &RunConfig,
    res: &Resources,
    data: &NavData,
    on_epoch: impl FnMut(usize, f32, &NavMetrics),
) -> Result<(NavModel, NavMetrics)> {
    let mut model = new_nav_model(cfg, res)?;
    let metrics = train_nav_model(&mut model, &data.train, &data.valid, &cfg.nav, &mut rng_for(cfg.seed, 8), on_epoch)?;
    Ok((model, metrics))
}

pub fn recipe_metrics(model: &RecipeModel, samples: &[RecipeSample]) -> RecipeMetrics {
    evaluate_recipe_model(model, samples)
}

pub fn nav_metrics(model: &NavModel, samples: &[NavSample]) -> NavMetrics {
    evaluate_nav_model(model, samples)
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if !path.is_file() {
        bail!("{} not found; {hint}", path.display());
    }
    Ok(())
}

/// Trained helper models read from the output directory.
pub fn load_helpers(cfg: &RunConfig, res: &Resources) -> Result<(RecipeModel, NavModel)> {
    let hint = "run train-recipe and train-nav first, or pass --oracle-helpers";
    let (rp, np) = (cfg.path(RECIPE_CHECKPOINT), cfg.path(NAV_CHECKPOINT));
    require(&rp, hint)?;
    require(&np, hint)?;
    let mut recipe = new_recipe_model(cfg, res)?;
    recipe.load_weights(&rp).with_context(|| format!("loading {}", rp.display()))?;
    let mut nav = new_nav_model(cfg, res)?;
    nav.load_weights(&np).with_context(|| format!("loading {}", np.display()))?;
    Ok((recipe, nav))
}

pub fn load_agent(cfg: &RunConfig, res: &Resources) -> Result<AgentModel> {
    let path = cfg.path(AGENT_CHECKPOINT);
    require(&path, "run train-agent first")?;
    let mut agent = new_agent(cfg, res)?;
    agent.load_weights(&path).with_context(|| format!("loading {}", path.display()))?;
    Ok(agent)
}

/// Trains a fresh agent on the training family: `episodes` games from the
/// train split, visited `epochs` times.
pub fn train_agent(
    cfg: &RunConfig,
    res: &Resources,
    helpers: &Helpers,
    on_episode: impl FnMut(&EpisodeMetrics),
) -> Result<(AgentModel, Vec<EpisodeMetrics>)> {
    let family = worlds(cfg, res, Split::Train, cfg.trainer.episodes);
    let mut agent = new_agent(cfg, res)?;
    let trainer = ldc_core::TrainerConfig { seed: cfg.seed, ..cfg.trainer };
    let log = a2c::train(&mut agent, &family, helpers, &trainer, on_episode)?;
    Ok((agent, log))
}

/// Evaluates each selected policy on the first `eval_games` worlds of
/// `split`, `eval_runs` times with seeds `seed, seed + 1, ...`.
pub fn evaluate(
    cfg: &RunConfig,
    res: &Resources,
    split: Split,
    policies: &[PolicyKind],
    helpers: Helpers,
    agent: Option<&AgentModel>,
) -> Result<Vec<EvalReport>> {
    let games = worlds(cfg, res, split, cfg.eval_games);
    let mut reports = Vec::with_capacity(policies.len());
    for &kind in policies {
        let policy = match kind {
            PolicyKind::Agent => match agent {
                Some(model) => Policy::Agent { model, helpers, greedy: cfg.greedy, horizon: cfg.trainer.horizon },
                None => bail!("agent policy requested without a trained agent"),
            },
            PolicyKind::RandomWl => Policy::RandomWl,
            PolicyKind::RandomAc => Policy::RandomAc,
            PolicyKind::RandomPruned => Policy::RandomPruned { helpers },
            PolicyKind::Walkthrough => Policy::Walkthrough,
        };
        reports.push(eval::evaluate(&policy, &games, cfg.seed, cfg.eval_runs));
    }
    Ok(reports)
}

/// Per-game rows of several reports under one header.
pub fn games_csv(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    for (i, r) in reports.iter().enumerate() {
        let csv = r.games_csv();
        let body = if i == 0 { csv.as_str() } else { csv.split_once('\n').map_or("", |x| x.1) };
        out.push_str(body);
    }
    out
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn recipe_metrics_row(epoch: usize, loss: f32, m: &RecipeMetrics) -> String {
    format!(
        "{epoch},{loss:.6},{:.4},{:.4},{:.4},{:.4}",
        m.accuracy, m.needed_accuracy, m.collect_accuracy, m.unseen_accuracy
    )
}

pub const RECIPE_METRICS_HEADER: &str = "epoch,loss,accuracy,needed_accuracy,collect_accuracy,unseen_accuracy";

pub fn nav_metrics_row(epoch: usize, loss: f32, m: &NavMetrics) -> String {
    format!("{epoch},{loss:.6},{:.4},{:.4}", m.direction_accuracy, m.door_f1)
}

pub const NAV_METRICS_HEADER: &str = "epoch,loss,direction_accuracy,door_f1";
