//! Policy evaluation over world sets and the random baseline ladder.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{greedy, sample, AgentModel, EncodingCache};
use crate::commands::{Candidate, Helpers, Provenance};
use crate::engine::{self, Direction, LossReason, Status, Utility, World, STEP_LIMIT};
use crate::episode::{normalized, Episode};
use crate::nn::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Agent,
    RandomWl,
    RandomAc,
    RandomPruned,
    Walkthrough,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::Agent, PolicyKind::RandomWl, PolicyKind::RandomAc, PolicyKind::RandomPruned, PolicyKind::Walkthrough];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Agent => "agent",
            PolicyKind::RandomWl => "random-wl",
            PolicyKind::RandomAc => "random-ac",
            PolicyKind::RandomPruned => "random-pruned",
            PolicyKind::Walkthrough => "walkthrough-oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// A policy with whatever it needs to act.
#[derive(Clone, Copy, Debug)]
pub enum Policy<'m> {
    Agent { model: &'m AgentModel, helpers: Helpers<'m>, greedy: bool, horizon: usize },
    RandomWl,
    RandomAc,
    RandomPruned { helpers: Helpers<'m> },
    Walkthrough,
}

impl Policy<'_> {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Agent { .. } => PolicyKind::Agent,
            Policy::RandomWl => PolicyKind::RandomWl,
            Policy::RandomAc => PolicyKind::RandomAc,
            Policy::RandomPruned { .. } => PolicyKind::RandomPruned,
            Policy::Walkthrough => PolicyKind::Walkthrough,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Won,
    Lost,
    Timeout,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Won => "won",
            Outcome::Lost => "lost",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameRecord {
    pub world_seed: u64,
    pub run_seed: u64,
    pub score: u32,
    pub max_score: u32,
    pub steps: u32,
    pub outcome: Outcome,
}

impl GameRecord {
    pub fn normalized(&self) -> f64 {
        normalized(self.score, self.max_score)
    }
}

pub const WL_VERBS: [&str; 13] =
    ["go", "open", "take", "drop", "examine", "look", "inventory", "prepare", "eat", "slice", "dice", "chop", "cook"];

/// Object words of a world: items, doors, the cookbook, the meal and the
/// utilities.
pub fn wl_objects(world: &World) -> Vec<String> {
    let mut out: Vec<String> = world.items.iter().map(|i| i.name.clone()).collect();
    out.extend(world.doors.iter().map(|d| d.name.clone()));
    out.push("cookbook".into());
    out.push("meal".into());
    out.extend(Utility::ALL.iter().map(|u| u.name().to_string()));
    out
}

/// A verb drawn uniformly, then each of its slots filled uniformly from
/// the matching word set.
pub fn random_wl_command<R: Rng>(objects: &[String], rng: &mut R) -> String {
    let verb = *WL_VERBS.choose(rng).unwrap();
    match verb {
        "look" | "inventory" => verb.to_string(),
        "go" => format!("go {}", Direction::ALL.choose(rng).unwrap().name()),
        "slice" | "dice" | "chop" | "cook" => {
            let o = objects.choose(rng).unwrap();
            let tool = Utility::ALL.choose(rng).unwrap().name();
            format!("{verb} {o} with {tool}")
        }
        _ => format!("{verb} {}", objects.choose(rng).unwrap()),
    }
}

fn outcome(status: Status) -> Outcome {
    match status {
        Status::Won => Outcome::Won,
        Status::Lost(LossReason::Timeout) | Status::Ongoing => Outcome::Timeout,
        Status::Lost(_) => Outcome::Lost,
    }
}

/// Plays `policy` on `world` until the game ends or the step limit.
pub fn run_episode(policy: &Policy, world: &World, seed: u64) -> GameRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ep = Episode::new(world);
    match policy {
        Policy::Walkthrough => {
            for cmd in engine::walkthrough(world).expect("generated worlds are winnable") {
                if ep.is_over() {
                    break;
                }
                ep.step(&Candidate::single(cmd, Provenance::Fixed));
            }
        }
        Policy::RandomWl => {
            let objects = wl_objects(world);
            while !ep.is_over() {
                let cmd = random_wl_command(&objects, &mut rng);
                ep.step(&Candidate::single(cmd, Provenance::Fixed));
            }
        }
        Policy::RandomAc => {
            while !ep.is_over() {
                let cmds = engine::admissible_commands(world, &ep.state);
                let cmd = cmds.choose(&mut rng).cloned().unwrap_or_else(|| "look".into());
                ep.step(&Candidate::single(cmd, Provenance::Fixed));
            }
        }
        Policy::RandomPruned { helpers } => {
            while !ep.is_over() {
                let view = ep.view(helpers);
                let c = view.candidates.candidates.choose(&mut rng).unwrap().clone();
                ep.step(&c);
            }
        }
        Policy::Agent { model, helpers, greedy: is_greedy, horizon } => {
            let mut hidden = model.initial_hidden();
            while !ep.is_over() {
                let mut g = Graph::new(&model.store);
                let mut cache = EncodingCache::default();
                let mut h = g.input(hidden.clone());
                for _ in 0..(*horizon).max(1) {
                    let view = ep.view(helpers);
                    let texts: Vec<String> = view.candidates.candidates.iter().map(|c| c.text.clone()).collect();
                    let out = model.forward(&mut g, &mut cache, &view.features, h, &texts);
                    let chosen = if *is_greedy {
                        greedy(g.value(out.scores).data())
                    } else {
                        sample(g.value(out.log_probs).data(), &mut rng)
                    };
                    ep.step(&view.candidates.candidates[chosen]);
                    h = out.hidden;
                    if ep.is_over() {
                        break;
                    }
                }
                hidden = g.value(h).clone();
            }
        }
    }
    debug_assert!(ep.state.steps <= STEP_LIMIT);
    GameRecord {
        world_seed: world.seed,
        run_seed: seed,
        score: ep.state.score,
        max_score: world.max_score(),
        steps: ep.state.steps,
        outcome: outcome(ep.state.status),
    }
}

/// Per-run aggregate and the cross-run summary.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub policy: PolicyKind,
    pub games: Vec<GameRecord>,
    /// Mean normalized score of each run (one per seed).
    pub run_scores: Vec<f64>,
    pub run_steps: Vec<f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl EvalReport {
    pub fn score(&self) -> (f64, f64) {
        mean_std(&self.run_scores)
    }

    pub fn steps(&self) -> (f64, f64) {
        mean_std(&self.run_steps)
    }

    pub fn win_rate(&self) -> f64 {
        let won = self.games.iter().filter(|g| g.outcome == Outcome::Won).count();
        100.0 * won as f64 / self.games.len().max(1) as f64
    }

    pub fn games_csv(&self) -> String {
        let mut out = String::from("policy,run_seed,world_seed,score,max_score,normalized,steps,outcome\n");
        for g in &self.games {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.4},{},{}",
                self.policy.name(),
                g.run_seed,
                g.world_seed,
                g.score,
                g.max_score,
                g.normalized(),
                g.steps,
                g.outcome.name()
            );
        }
        out
    }
}

/// Runs every world once per seed. Run `i` uses seed `base_seed + i`.
pub fn evaluate(policy: &Policy, worlds: &[World], base_seed: u64, n_seeds: usize) -> EvalReport {
    assert!(!worlds.is_empty(), "evaluate: no worlds");
    let mut games = Vec::with_capacity(worlds.len() * n_seeds);
    let mut run_scores = Vec::with_capacity(n_seeds);
    let mut run_steps = Vec::with_capacity(n_seeds);
    for i in 0..n_seeds as u64 {
        let run_seed = base_seed + i;
        let start = games.len();
        for (wi, w) in worlds.iter().enumerate() {
            let seed = run_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ wi as u64;
            let mut rec = run_episode(policy, w, seed);
            rec.run_seed = run_seed;
            games.push(rec);
        }
        let run = &games[start..];
        run_scores.push(run.iter().map(GameRecord::normalized).sum::<f64>() / run.len() as f64);
        run_steps.push(run.iter().map(|g| g.steps as f64).sum::<f64>() / run.len() as f64);
    }
    EvalReport { policy: policy.kind(), games, run_scores, run_steps }
}

pub const SUMMARY_HEADER: &str = "policy,runs,games,score_mean,score_std,steps_mean,steps_std,win_rate";

/// One CSV row per report.
pub fn summary_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        let (s, sd) = r.score();
        let (st, std) = r.steps();
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.policy.name(),
            r.run_scores.len(),
            r.games.len(),
            s,
            sd,
            st,
            std,
            r.win_rate()
        );
    }
    out
}

/// Fixed-width table for terminals.
pub fn summary_table(reports: &[EvalReport]) -> String {
    let mut out = format!("{:<20} {:>16} {:>16} {:>8}\n", "policy", "score %", "steps", "won %");
    for r in reports {
        let (s, sd) = r.score();
        let (st, std) = r.steps();
        let _ = writeln!(
            out,
            "{:<20} {:>16} {:>16} {:>8.1}",
            r.policy.name(),
            format!("{s:.1} ± {sd:.1}"),
            format!("{st:.1} ± {std:.1}"),
            r.win_rate()
        );
    }
    out
}
