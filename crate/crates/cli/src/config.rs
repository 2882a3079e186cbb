//! Run configuration: built-in defaults, then a `key=value` file, then
//! command-line flags.

use std::path::{Path, PathBuf};

use ldc_core::eval::PolicyKind;
use ldc_core::{GenConfig, SupervisedConfig, TrainerConfig};

pub const DATA_DIR_ENV: &str = "LDC_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "ldc-data";

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    /// Root for checkpoints, metrics and generated files.
    pub out: PathBuf,
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub world: GenConfig,
    pub trainer: TrainerConfig,
    pub recipe: SupervisedConfig,
    pub nav: SupervisedConfig,
    pub recipe_samples: usize,
    pub nav_samples: usize,
    /// Size of each held-out dataset.
    pub valid_samples: usize,
    pub oracle_helpers: bool,
    pub greedy: bool,
    pub eval_games: usize,
    pub eval_runs: usize,
    pub policies: Vec<PolicyKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from(DEFAULT_DATA_DIR),
            lexicon: None,
            embeddings: None,
            world: GenConfig::default(),
            trainer: TrainerConfig::default(),
            recipe: SupervisedConfig::default(),
            nav: SupervisedConfig { epochs: 8, ..SupervisedConfig::default() },
            recipe_samples: 8000,
            nav_samples: 2000,
            valid_samples: 1000,
            oracle_helpers: false,
            greedy: false,
            eval_games: 100,
            eval_runs: 10,
            policies: PolicyKind::ALL.to_vec(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| format!("{key}: cannot parse {value:?}: {e}"))
}

fn flag(key: &str, value: &str) -> Result<bool, String> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(format!("{key}: expected a boolean, got {other:?}")),
    }
}

impl RunConfig {
    /// Defaults rooted at `$LDC_DATA_DIR` when set.
    pub fn from_env() -> Self {
        let mut cfg = RunConfig::default();
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.out = PathBuf::from(dir);
        }
        cfg
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let t = &mut self.trainer;
        match key {
            "seed" => {
                self.seed = num(key, value)?;
                t.seed = self.seed;
            }
            "out" => self.out = PathBuf::from(value.trim()),
            "lexicon" => self.lexicon = Some(PathBuf::from(value.trim())),
            "embeddings" => self.embeddings = Some(PathBuf::from(value.trim())),
            "epochs" => t.epochs = num(key, value)?,
            "episodes" => t.episodes = num(key, value)?,
            "gamma" => t.gamma = num(key, value)?,
            "lambda_v" => t.lambda_v = num(key, value)?,
            "lambda_e" => t.lambda_e = num(key, value)?,
            "horizon" => t.horizon = num(key, value)?,
            "lr" => t.lr = num(key, value)?,
            "clip" => {
                let c: f32 = num(key, value)?;
                t.clip = (c > 0.0).then_some(c);
            }
            "recipe_epochs" => self.recipe.epochs = num(key, value)?,
            "nav_epochs" => self.nav.epochs = num(key, value)?,
            "helper_lr" => {
                self.recipe.lr = num(key, value)?;
                self.nav.lr = self.recipe.lr;
            }
            "recipe_samples" => self.recipe_samples = num(key, value)?,
            "nav_samples" => self.nav_samples = num(key, value)?,
            "valid_samples" => self.valid_samples = num(key, value)?,
            "oracle_helpers" => self.oracle_helpers = flag(key, value)?,
            "greedy" => self.greedy = flag(key, value)?,
            "eval_games" => self.eval_games = num(key, value)?,
            "eval_runs" => self.eval_runs = num(key, value)?,
            "policies" => {
                self.policies = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| PolicyKind::parse(s).ok_or_else(|| format!("policies: unknown policy {s:?}")))
                    .collect::<Result<_, _>>()?;
            }
            _ => {
                if !self.world.apply(key, value)? {
                    return Err(format!("unknown configuration key {key:?}"));
                }
            }
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text`. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), String> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("{origin}:{}: expected key=value, got {line:?}", i + 1))?;
            self.apply(key.trim(), value).map_err(|e| format!("{origin}:{}: {e}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), String> {
        self.world.validate()?;
        self.trainer.validate()?;
        for (name, n) in [
            ("episodes", self.trainer.episodes),
            ("epochs", self.trainer.epochs),
            ("eval_games", self.eval_games),
            ("eval_runs", self.eval_runs),
            ("recipe_samples", self.recipe_samples),
            ("nav_samples", self.nav_samples),
            ("valid_samples", self.valid_samples),
        ] {
            if n == 0 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        if self.policies.is_empty() {
            return Err("no policies selected".into());
        }
        for (name, path) in [("lexicon", &self.lexicon), ("embeddings", &self.embeddings)] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(format!("{name} file {} does not exist", p.display()));
                }
            }
        }
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}
