//! Online advantage actor-critic training.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agent::{entropy, sample, AgentModel, EncodingCache};
use crate::commands::Helpers;
use crate::engine::World;
use crate::episode::Episode;
use crate::nn::{AdamState, Graph, NnError, Var};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub lambda_v: f64,
    pub lambda_e: f64,
    /// Agent decisions per update.
    pub horizon: usize,
    /// Episodes per epoch; the world list is cycled if shorter.
    pub episodes: usize,
    pub epochs: usize,
    pub seed: u64,
    pub lr: f32,
    /// Global gradient-norm clip.
    pub clip: Option<f32>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            gamma: 0.9,
            lambda_v: 0.5,
            lambda_e: 0.01,
            horizon: 16,
            episodes: 500,
            epochs: 3,
            seed: 0,
            lr: 1e-3,
            clip: Some(10.0),
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if self.lambda_v < 0.0 || self.lambda_e < 0.0 {
            return Err("loss weights must be non-negative".into());
        }
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        if !(self.lr > 0.0) {
            return Err("learning rate must be positive".into());
        }
        Ok(())
    }
}

/// `R_t = g^(T-t) v_T + sum_{k=0}^{T-t} g^k r_{t+k}` with `T` the last index.
pub fn n_step_returns(rewards: &[f64], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        acc = if t + 1 == rewards.len() { rewards[t] + bootstrap } else { rewards[t] + gamma * acc };
        out[t] = acc;
    }
    out
}

pub fn advantages(returns: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(returns.len(), values.len(), "advantages: length mismatch");
    returns.iter().zip(values).map(|(r, v)| r - v).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
}

/// One agent decision within a rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub command: String,
    pub reward: f64,
    pub value: f64,
    pub probs: Vec<f64>,
    pub chosen: usize,
}

impl StepRecord {
    pub fn log_prob(&self) -> f64 {
        self.probs[self.chosen].ln()
    }

    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }
}

/// A rollout segment and the value used to bootstrap past its end.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<StepRecord>,
    pub bootstrap: f64,
    pub terminal: bool,
}

impl EpisodeTrace {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }

    pub fn dump(&self) -> String {
        let mut out = format!("bootstrap={} terminal={}\n", self.bootstrap, self.terminal);
        for (i, s) in self.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i}\t{}\treward={}\tvalue={}\tchosen={}\tprobs={:?}",
                s.command, s.reward, s.value, s.chosen, s.probs
            );
        }
        out
    }
}

/// Loss terms evaluated directly from recorded numbers.
pub fn compute_losses(trace: &EpisodeTrace, returns: &[f64], advantages: &[f64], config: &TrainerConfig) -> LossBreakdown {
    let t = trace.steps.len() as f64;
    let policy = -trace.steps.iter().zip(advantages).map(|(s, a)| a * s.log_prob()).sum::<f64>() / t;
    let value = trace.steps.iter().zip(returns).map(|(s, r)| (r - s.value).powi(2)).sum::<f64>() / (2.0 * t);
    let entropy = trace.steps.iter().map(StepRecord::entropy).sum::<f64>() / t;
    let total = policy + config.lambda_v * value - config.lambda_e * entropy;
    LossBreakdown { policy, value, entropy, total }
}

/// Graph nodes of one decision needed by the loss.
#[derive(Clone, Copy, Debug)]
pub struct StepVars {
    pub log_prob: Var,
    pub value: Var,
    pub entropy: Var,
}

/// The same loss as [`compute_losses`] built on the graph. Advantages enter
/// as constants, so the policy term sends no gradient into the critic.
pub fn loss_graph(
    g: &mut Graph,
    steps: &[StepVars],
    returns: &[f64],
    advantages: &[f64],
    config: &TrainerConfig,
) -> (Var, [Var; 3]) {
    let t = steps.len() as f32;
    let mut policy = Vec::with_capacity(steps.len());
    let mut value = Vec::with_capacity(steps.len());
    let mut ent = Vec::with_capacity(steps.len());
    for ((s, &r), &a) in steps.iter().zip(returns).zip(advantages) {
        policy.push(g.scale(s.log_prob, -(a as f32) / t));
        let target = g.input(crate::nn::Tensor::scalar(r as f32));
        let diff = g.sub(s.value, target);
        let sq = g.square(diff);
        value.push(g.scale(sq, 1.0 / (2.0 * t)));
        ent.push(g.scale(s.entropy, 1.0 / t));
    }
    let lp = sum_all(g, &policy);
    let lv = sum_all(g, &value);
    let le = sum_all(g, &ent);
    let wv = g.scale(lv, config.lambda_v as f32);
    let we = g.scale(le, -(config.lambda_e as f32));
    let partial = g.add(lp, wv);
    let total = g.add(partial, we);
    (total, [lp, lv, le])
}

fn sum_all(g: &mut Graph, parts: &[Var]) -> Var {
    let stacked = g.concat_rows(parts);
    g.sum(stacked)
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss in episode {episode}:\n{dump}")]
    NonFinite { episode: usize, dump: String },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Per-episode training log row.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub score: u32,
    pub max_score: u32,
    pub normalized: f64,
    pub steps: u32,
    pub losses: LossBreakdown,
}

pub const METRICS_HEADER: &str = "episode,score,max_score,normalized,steps,L_p,L_v,L_e,total";

pub fn metrics_csv(rows: &[EpisodeMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for m in rows {
        let l = &m.losses;
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{},{:.6},{:.6},{:.6},{:.6}",
            m.episode, m.score, m.max_score, m.normalized, m.steps, l.policy, l.value, l.entropy, l.total
        );
    }
    out
}

/// Plays one episode with sampling and applies one Adam step per rollout
/// segment of at most `config.horizon` decisions.
pub fn train_episode(
    model: &mut AgentModel,
    adam: &mut AdamState,
    world: &World,
    helpers: &Helpers,
    config: &TrainerConfig,
    rng: &mut ChaCha8Rng,
    episode: usize,
) -> Result<EpisodeMetrics, TrainError> {
    let mut ep = Episode::new(world);
    let mut hidden = model.initial_hidden();
    let mut sums = LossBreakdown::default();
    let mut segments = 0usize;
    while !ep.is_over() {
        let (grads, next_hidden, breakdown) = {
            let mut g = Graph::new(&model.store);
            let mut cache = EncodingCache::default();
            let mut h = g.input(hidden.clone());
            let mut trace = EpisodeTrace::default();
            let mut vars = Vec::new();
            for _ in 0..config.horizon {
                let view = ep.view(helpers);
                let texts: Vec<String> = view.candidates.candidates.iter().map(|c| c.text.clone()).collect();
                let out = model.forward(&mut g, &mut cache, &view.features, h, &texts);
                let lp = g.value(out.log_probs).data().to_vec();
                let chosen = sample(&lp, rng);
                let value = g.value(out.value).item() as f64;
                let log_prob = g.pick(out.log_probs, 0, chosen);
                let ent = entropy(&mut g, out.log_probs);
                vars.push(StepVars { log_prob, value: out.value, entropy: ent });
                let fb = ep.step(&view.candidates.candidates[chosen]);
                trace.steps.push(StepRecord {
                    command: texts[chosen].clone(),
                    reward: fb.reward as f64,
                    value,
                    probs: lp.iter().map(|l| (*l as f64).exp()).collect(),
                    chosen,
                });
                h = out.hidden;
                if ep.is_over() {
                    break;
                }
            }
            trace.terminal = ep.is_over();
            trace.bootstrap = if trace.terminal {
                0.0
            } else {
                let view = ep.view(helpers);
                let hb = model.encode_context(&mut g, &mut cache, &view.features, h);
                let v = model.value(&mut g, hb);
                g.value(v).item() as f64
            };
            let returns = n_step_returns(&trace.rewards(), trace.bootstrap, config.gamma);
            let adv = advantages(&returns, &trace.values());
            let (total, [lp, lv, le]) = loss_graph(&mut g, &vars, &returns, &adv, config);
            let breakdown = LossBreakdown {
                policy: g.value(lp).item() as f64,
                value: g.value(lv).item() as f64,
                entropy: g.value(le).item() as f64,
                total: g.value(total).item() as f64,
            };
            if !breakdown.total.is_finite() || !trace.bootstrap.is_finite() {
                return Err(TrainError::NonFinite { episode, dump: trace.dump() });
            }
            let next_hidden = g.value(h).clone();
            (g.backward(total)?, next_hidden, breakdown)
        };
        let mut grads = grads;
        if let Some(c) = config.clip {
            grads.clip_norm(c);
        }
        adam.step(&mut model.store, &grads);
        hidden = next_hidden;
        sums.policy += breakdown.policy;
        sums.value += breakdown.value;
        sums.entropy += breakdown.entropy;
        sums.total += breakdown.total;
        segments += 1;
    }
    let n = segments.max(1) as f64;
    let max_score = world.max_score();
    Ok(EpisodeMetrics {
        episode,
        score: ep.state.score,
        max_score,
        normalized: ep.normalized_score(),
        steps: ep.state.steps,
        losses: LossBreakdown {
            policy: sums.policy / n,
            value: sums.value / n,
            entropy: sums.entropy / n,
            total: sums.total / n,
        },
    })
}

/// Trains for `config.epochs` passes of `config.episodes` episodes over
/// `worlds`, shuffled per epoch.
pub fn train(
    model: &mut AgentModel,
    worlds: &[World],
    helpers: &Helpers,
    config: &TrainerConfig,
    mut on_episode: impl FnMut(&EpisodeMetrics),
) -> Result<Vec<EpisodeMetrics>, TrainError> {
    assert!(!worlds.is_empty(), "train: no worlds");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(&model.store, config.lr);
    let mut log = Vec::with_capacity(config.epochs * config.episodes);
    for _ in 0..config.epochs {
        let mut order: Vec<usize> = (0..config.episodes).map(|i| i % worlds.len()).collect();
        order.shuffle(&mut rng);
        for wi in order {
            let m = train_episode(model, &mut adam, &worlds[wi], helpers, config, &mut rng, log.len())?;
            on_episode(&m);
            log.push(m);
        }
    }
    Ok(log)
}
