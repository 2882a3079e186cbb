use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ldc_core::a2c::metrics_csv;
use ldc_core::engine::{self, render_observation, walkthrough, GameState};
use ldc_core::eval::{summary_csv, summary_table, PolicyKind};
use ldc_core::generator::to_jsonl;
use ldc_core::{Helpers, Split};

use crate::config::RunConfig;
use crate::pipeline::{self as pipe, Resources};

#[derive(Parser, Debug)]
#[command(name = "ldc", version, about = "Cooking text games: generate, train, evaluate, play")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key=value configuration file; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Food lexicon file (one name per line); defaults to the bundled list.
    #[arg(long, global = true, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Pretrained word vectors, one "word v1 .. v100" per line.
    #[arg(long, global = true, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Output directory [default: $LDC_DATA_DIR or ./ldc-data].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Training games (episodes per epoch).
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long = "lambda-v", global = true)]
    lambda_v: Option<f64>,
    #[arg(long = "lambda-e", global = true)]
    lambda_e: Option<f64>,
    /// Agent decisions per update.
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Use ground-truth recipe and navigation labels instead of the trained helper models.
    #[arg(long = "oracle-helpers", global = true)]
    oracle_helpers: bool,
    /// Pick the highest-scoring command instead of sampling.
    #[arg(long, global = true)]
    greedy: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write world sets and helper datasets.
    Gen {
        /// train, valid, test or all.
        #[arg(long, default_value = "all")]
        split: String,
        /// Worlds per split.
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Train the recipe classifier.
    TrainRecipe,
    /// Train the navigation model.
    TrainNav,
    /// Train the actor-critic agent.
    TrainAgent,
    /// Evaluate policies on held-out worlds.
    Eval {
        /// Comma-separated policies; defaults to all.
        #[arg(long)]
        policies: Option<String>,
        #[arg(long, default_value = "test")]
        split: String,
        /// Games per run.
        #[arg(long)]
        count: Option<usize>,
        /// Runs with consecutive seeds.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Play a game interactively from standard input.
    Play {
        #[arg(long, default_value = "test")]
        split: String,
        /// Game index within the split.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
}

/// Error in how the program was invoked, as opposed to a failure while
/// running.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn parse_split(s: &str) -> Result<Split> {
    match Split::parse(s) {
        Some(split) => Ok(split),
        None => usage(format!("unknown split {s:?} (expected train, valid or test)")),
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on usage errors, 2 on runtime failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_env();
    let config_file = common.config.clone().or_else(|| {
        let default = cfg.path("ldc.conf");
        default.is_file().then_some(default)
    });
    if let Some(path) = &config_file {
        if !path.is_file() {
            return usage(format!("config file {} does not exist", path.display()));
        }
        cfg.apply_file(path).or_else(usage)?;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
        cfg.trainer.seed = v;
    }
    if let Some(v) = &common.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &common.lexicon {
        cfg.lexicon = Some(v.clone());
    }
    if let Some(v) = &common.embeddings {
        cfg.embeddings = Some(v.clone());
    }
    let t = &mut cfg.trainer;
    if let Some(v) = common.epochs {
        t.epochs = v;
    }
    if let Some(v) = common.episodes {
        t.episodes = v;
    }
    if let Some(v) = common.gamma {
        t.gamma = v;
    }
    if let Some(v) = common.lambda_v {
        t.lambda_v = v;
    }
    if let Some(v) = common.lambda_e {
        t.lambda_e = v;
    }
    if let Some(v) = common.horizon {
        t.horizon = v;
    }
    cfg.oracle_helpers |= common.oracle_helpers;
    cfg.greedy |= common.greedy;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = resolve(&cli.common)?;
    if let Command::Eval { policies, count, runs, .. } = &cli.command {
        if let Some(p) = policies {
            cfg.apply("policies", p).or_else(usage)?;
        }
        if let Some(c) = count {
            cfg.eval_games = *c;
        }
        if let Some(r) = runs {
            cfg.eval_runs = *r;
        }
    }
    cfg.validate().or_else(usage)?;
    let res = Resources::load(&cfg)?;
    match cli.command {
        Command::Gen { split, count } => gen(&cfg, &res, &split, count),
        Command::TrainRecipe => train_recipe(&cfg, &res),
        Command::TrainNav => train_nav(&cfg, &res),
        Command::TrainAgent => train_agent(&cfg, &res),
        Command::Eval { split, .. } => eval(&cfg, &res, parse_split(&split)?),
        Command::Play { split, index } => play(&cfg, &res, parse_split(&split)?, index),
    }
}

fn gen(cfg: &RunConfig, res: &Resources, split: &str, count: usize) -> Result<()> {
    let splits = if split == "all" { vec![Split::Train, Split::Valid, Split::Test] } else { vec![parse_split(split)?] };
    if count == 0 {
        return usage("--count must be at least 1");
    }
    for s in splits {
        let worlds = pipe::worlds(cfg, res, s, count);
        for w in &worlds {
            walkthrough(w).with_context(|| format!("world {} has no walkthrough", w.seed))?;
        }
        pipe::write(&cfg.path(&format!("worlds/{}.jsonl", s.name())), to_jsonl(&worlds))?;
        let n = if s == Split::Train { cfg.recipe_samples } else { cfg.valid_samples };
        let recipe = ldc_core::generator::generate_recipe_dataset(s.seed(cfg.seed), n, &res.lexicon);
        pipe::write(&cfg.path(&format!("datasets/recipe_{}.jsonl", s.name())), to_jsonl(&recipe))?;
        let n = if s == Split::Train { cfg.nav_samples } else { cfg.valid_samples };
        let nav = ldc_core::generator::generate_nav_dataset(s.seed(cfg.seed), n, &res.lexicon);
        pipe::write(&cfg.path(&format!("datasets/nav_{}.jsonl", s.name())), to_jsonl(&nav))?;
        println!("{}: {} worlds, {} recipe samples, {} navigation samples", s.name(), worlds.len(), recipe.len(), nav.len());
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn train_recipe(cfg: &RunConfig, res: &Resources) -> Result<()> {
    let data = pipe::recipe_data(cfg, res);
    let mut rows = vec![pipe::RECIPE_METRICS_HEADER.to_string()];
    let (model, m) = pipe::train_recipe(cfg, res, &data, |epoch, loss, m| {
        println!(
            "epoch {:>3}  loss {loss:.5}  accuracy {:.2}%  unseen {:.2}%",
            epoch + 1,
            100.0 * m.accuracy,
            100.0 * m.unseen_accuracy
        );
        rows.push(pipe::recipe_metrics_row(epoch + 1, loss, m));
    })?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    model.save(&cfg.path(pipe::RECIPE_CHECKPOINT))?;
    pipe::write(&cfg.path(pipe::RECIPE_METRICS), rows.join("\n") + "\n")?;
    println!("held-out accuracy {:.2}% (unseen {:.2}%)", 100.0 * m.accuracy, 100.0 * m.unseen_accuracy);
    Ok(())
}

fn train_nav(cfg: &RunConfig, res: &Resources) -> Result<()> {
    let data = pipe::nav_data(cfg, res);
    let mut rows = vec![pipe::NAV_METRICS_HEADER.to_string()];
    let (model, m) = pipe::train_nav(cfg, res, &data, |epoch, loss, m| {
        println!(
            "epoch {:>3}  loss {loss:.5}  direction {:.2}%  door F1 {:.3}",
            epoch + 1,
            100.0 * m.direction_accuracy,
            m.door_f1
        );
        rows.push(pipe::nav_metrics_row(epoch + 1, loss, m));
    })?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    model.save(&cfg.path(pipe::NAV_CHECKPOINT))?;
    pipe::write(&cfg.path(pipe::NAV_METRICS), rows.join("\n") + "\n")?;
    println!("held-out direction accuracy {:.2}%, door F1 {:.3}", 100.0 * m.direction_accuracy, m.door_f1);
    Ok(())
}

fn train_agent(cfg: &RunConfig, res: &Resources) -> Result<()> {
    let learned = if cfg.oracle_helpers { None } else { Some(pipe::load_helpers(cfg, res)?) };
    let helpers = match &learned {
        Some((recipe, nav)) => Helpers::Learned { recipe, nav },
        None => Helpers::Oracle,
    };
    let total = cfg.trainer.episodes * cfg.trainer.epochs;
    let mut window: Vec<(f64, u32)> = Vec::new();
    let (agent, log) = pipe::train_agent(cfg, res, &helpers, |m| {
        window.push((m.normalized, m.steps));
        let done = m.episode + 1;
        if done % 50 == 0 || done == total {
            let n = window.len() as f64;
            println!(
                "episode {done:>5}/{total}  score {:.1}%  steps {:.1}",
                window.iter().map(|w| w.0).sum::<f64>() / n,
                window.iter().map(|w| w.1 as f64).sum::<f64>() / n
            );
            window.clear();
        }
    })?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    agent.save(&cfg.path(pipe::AGENT_CHECKPOINT))?;
    pipe::write(&cfg.path(pipe::TRAIN_METRICS), metrics_csv(&log))?;
    println!("wrote {} and {}", cfg.path(pipe::AGENT_CHECKPOINT).display(), cfg.path(pipe::TRAIN_METRICS).display());
    Ok(())
}

fn eval(cfg: &RunConfig, res: &Resources, split: Split) -> Result<()> {
    let mut policies = cfg.policies.clone();
    let agent_path = cfg.path(pipe::AGENT_CHECKPOINT);
    if policies == PolicyKind::ALL && !agent_path.is_file() {
        eprintln!("note: no agent checkpoint at {}, evaluating baselines only", agent_path.display());
        policies.retain(|p| *p != PolicyKind::Agent);
    }
    let needs_helpers = policies.iter().any(|p| matches!(p, PolicyKind::Agent | PolicyKind::RandomPruned));
    let learned = if cfg.oracle_helpers || !needs_helpers { None } else { Some(pipe::load_helpers(cfg, res)?) };
    let helpers = match &learned {
        Some((recipe, nav)) => Helpers::Learned { recipe, nav },
        None => Helpers::Oracle,
    };
    let agent = if policies.contains(&PolicyKind::Agent) { Some(pipe::load_agent(cfg, res)?) } else { None };
    let reports = pipe::evaluate(cfg, res, split, &policies, helpers, agent.as_ref())?;
    pipe::write(&cfg.path(pipe::EVAL_SUMMARY), summary_csv(&reports))?;
    pipe::write(&cfg.path(pipe::EVAL_GAMES), pipe::games_csv(&reports))?;
    println!(
        "{} games x {} runs on the {} split ({} helpers)",
        cfg.eval_games,
        cfg.eval_runs,
        split.name(),
        if cfg.oracle_helpers { "oracle" } else { "learned" }
    );
    print!("{}", summary_table(&reports));
    Ok(())
}

fn play(cfg: &RunConfig, res: &Resources, split: Split, index: u64) -> Result<()> {
    let world = pipe::worlds(cfg, res, split, index as usize + 1).pop().expect("at least one world");
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    let mut state = GameState::initial(&world);
    writeln!(out, "{}\n", render_observation(&world, &state, None))?;
    let mut lines = stdin.lock().lines();
    while !state.is_over() {
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = lines.next() else { break };
        let line = line.context("reading standard input")?;
        let command = line.trim();
        if command.is_empty() {
            continue;
        }
        if command == "quit" || command == "exit" {
            break;
        }
        let (next, feedback) = engine::apply_command(&world, &state, command);
        state = next;
        writeln!(out, "{}\n", feedback.text)?;
    }
    writeln!(
        out,
        "Score {}/{} in {} steps ({}).",
        state.score,
        world.max_score(),
        state.steps,
        match state.status {
            engine::Status::Won => "won",
            engine::Status::Lost(_) => "lost",
            engine::Status::Ongoing => "unfinished",
        }
    )?;
    Ok(())
}
