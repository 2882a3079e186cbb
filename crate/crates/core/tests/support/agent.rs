//! Gradient checks of the actor-critic loss on a miniature agent against an
//! f64 re-implementation of the forward pass and loss.

use ldc_core::a2c::{advantages, loss_graph, n_step_returns, StepVars, TrainerConfig};
use ldc_core::agent::{entropy, AgentDims, AgentModel, EncodingCache, MAX_TOKENS};
use ldc_core::commands::Helpers;
use ldc_core::episode::{ContextFeatures, Episode};
use ldc_core::generator::{generate_world, GenConfig, Split};
use ldc_core::lexicon::{FoodLexicon, Vocab};
use ldc_core::nn::{Graph, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub const STEP: f64 = 1e-4;
pub const TOL: f64 = 1e-3;

struct Decision {
    features: ContextFeatures,
    commands: Vec<String>,
    chosen: usize,
    reward: f64,
}

struct Trajectory {
    decisions: Vec<Decision>,
    /// Features after the last decision when the segment was cut early.
    tail: Option<ContextFeatures>,
}

fn trajectory(seed: u64, len: usize) -> Trajectory {
    let lex = FoodLexicon::bundled();
    let cfg = GenConfig { rooms: (2, 3), ingredients: (1, 2), ..GenConfig::default() };
    let world = generate_world(Split::Train.seed(seed), &cfg, &lex);
    let mut ep = Episode::new(&world);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut decisions = Vec::new();
    while decisions.len() < len && !ep.is_over() {
        let view = ep.view(&Helpers::Oracle);
        let chosen = rng.gen_range(0..view.candidates.len());
        let fb = ep.step(&view.candidates.candidates[chosen]);
        decisions.push(Decision {
            features: view.features,
            commands: view.candidates.texts().into_iter().map(String::from).collect(),
            chosen,
            reward: fb.reward as f64,
        });
    }
    let tail = (!ep.is_over()).then(|| ep.view(&Helpers::Oracle).features);
    Trajectory { decisions, tail }
}

fn tiny_model(traj: &Trajectory, rng: &mut ChaCha8Rng) -> AgentModel {
    let mut texts: Vec<&str> = Vec::new();
    for d in &traj.decisions {
        texts.extend(d.features.texts.iter().map(String::as_str));
        texts.extend(d.commands.iter().map(String::as_str));
    }
    if let Some(t) = &traj.tail {
        texts.extend(t.texts.iter().map(String::as_str));
    }
    let vocab = Vocab::build(texts);
    let dims = AgentDims {
        embed: rng.gen_range(4..=8),
        feature_hidden: rng.gen_range(2..=4),
        context_hidden: rng.gen_range(4..=8),
        command_hidden: rng.gen_range(3..=8),
        mlp_hidden: rng.gen_range(4..=8),
    };
    let emb = Tensor::matrix(vocab.len(), dims.embed, (0..vocab.len() * dims.embed).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mut model = AgentModel::new(vocab, emb, dims, rng);
    jitter_all(&mut model.store, rng);
    model
}

fn jitter_all(store: &mut ParamStore, rng: &mut ChaCha8Rng) {
    for id in store.ids().collect::<Vec<_>>() {
        for v in store.get_mut(id).data_mut() {
            if *v == 0.0 {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
    }
}

/// f64 context step: eight bi-GRU feature encodings into the context GRU.
fn context(p: &P64, m: &AgentModel, features: &ContextFeatures, h: &[f64]) -> Vec<f64> {
    let mut x = Vec::new();
    for (i, text) in features.texts.iter().enumerate() {
        let ids = m.vocab.encode(text, MAX_TOKENS);
        let (f, b) = &m.features[i];
        x.extend(bigru(p, f, b, &embed_rows(p, m.embed, m.dims.embed, &ids)));
    }
    gru_step(p, &m.context, &x, h)
}

fn command(p: &P64, m: &AgentModel, text: &str) -> Vec<f64> {
    let ids = m.vocab.encode(text, MAX_TOKENS);
    gru_run(p, &m.command, &embed_rows(p, m.embed, m.dims.embed, &ids), false).pop().unwrap()
}

struct Forward64 {
    values: Vec<f64>,
    log_probs: Vec<Vec<f64>>,
    bootstrap: f64,
}

fn forward64(p: &P64, m: &AgentModel, traj: &Trajectory) -> Forward64 {
    let mut h = vec![0.0; m.dims.context_hidden];
    let mut out = Forward64 { values: Vec::new(), log_probs: Vec::new(), bootstrap: 0.0 };
    for d in &traj.decisions {
        h = context(p, m, &d.features, &h);
        out.values.push(mlp(p, &m.critic, &h)[0]);
        let scores: Vec<f64> = d
            .commands
            .iter()
            .map(|c| {
                let x: Vec<f64> = h.iter().copied().chain(command(p, m, c)).collect();
                mlp(p, &m.scorer, &x)[0]
            })
            .collect();
        out.log_probs.push(log_softmax(&scores));
    }
    if let Some(t) = &traj.tail {
        out.bootstrap = mlp(p, &m.critic, &context(p, m, t, &h))[0];
    }
    out
}

/// Total loss with returns and advantages held fixed, as the trainer does.
fn loss64(p: &P64, m: &AgentModel, traj: &Trajectory, returns: &[f64], adv: &[f64], cfg: &TrainerConfig) -> f64 {
    let f = forward64(p, m, traj);
    let t = traj.decisions.len() as f64;
    let mut lp = 0.0;
    let mut lv = 0.0;
    let mut le = 0.0;
    for (i, d) in traj.decisions.iter().enumerate() {
        let logp = &f.log_probs[i];
        lp -= adv[i] * logp[d.chosen] / t;
        lv += (returns[i] - f.values[i]).powi(2) / (2.0 * t);
        le -= logp.iter().map(|l| l.exp() * l).sum::<f64>() / t;
    }
    lp + cfg.lambda_v * lv - cfg.lambda_e * le
}

struct Built {
    total: ldc_core::nn::Var,
    policy: ldc_core::nn::Var,
    returns: Vec<f64>,
    adv: Vec<f64>,
}

fn build(g: &mut Graph, m: &AgentModel, traj: &Trajectory, cfg: &TrainerConfig) -> Built {
    let mut cache = EncodingCache::default();
    let mut h = g.input(m.initial_hidden());
    let mut vars = Vec::new();
    let mut values = Vec::new();
    for d in &traj.decisions {
        let out = m.forward(g, &mut cache, &d.features, h, &d.commands);
        values.push(g.value(out.value).item() as f64);
        let log_prob = g.pick(out.log_probs, 0, d.chosen);
        let ent = entropy(g, out.log_probs);
        vars.push(StepVars { log_prob, value: out.value, entropy: ent });
        h = out.hidden;
    }
    let bootstrap = match &traj.tail {
        Some(t) => {
            let hb = m.encode_context(g, &mut cache, t, h);
            let v = m.value(g, hb);
            g.value(v).item() as f64
        }
        None => 0.0,
    };
    let rewards: Vec<f64> = traj.decisions.iter().map(|d| d.reward).collect();
    let returns = n_step_returns(&rewards, bootstrap, cfg.gamma);
    let adv = advantages(&returns, &values);
    let (total, [policy, _, _]) = loss_graph(g, &vars, &returns, &adv, cfg);
    Built { total, policy, returns, adv }
}

pub fn actor_critic_loss_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    let cfg = TrainerConfig { lambda_e: 0.05, ..TrainerConfig::default() };
    for seed in 0..3u64 {
        let traj = trajectory(seed, 4);
        assert!(traj.decisions.len() >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let model = tiny_model(&traj, &mut rng);
        let mut g = Graph::new(&model.store);
        let b = build(&mut g, &model, &traj, &cfg);
        let value = g.value(b.total).item() as f64;
        let grads = g.backward(b.total).unwrap();
        let p = to_f64(&model.store);
        let f = forward64(&p, &model, &traj);
        let oracle_returns = n_step_returns(&traj.decisions.iter().map(|d| d.reward).collect::<Vec<_>>(), f.bootstrap, cfg.gamma);
        for (a, o) in b.returns.iter().zip(&oracle_returns) {
            assert!((a - o).abs() < 1e-4, "returns {a} vs {o}");
        }
        let oracle = loss64(&p, &model, &traj, &b.returns, &b.adv, &cfg);
        assert!((value - oracle).abs() < 1e-4 * oracle.abs().max(1.0), "loss {value} vs oracle {oracle}");
        let loss = |q: &P64| loss64(q, &model, &traj, &b.returns, &b.adv, &cfg);
        let (err, name) = check_gradients(&model.store, &grads, &loss, STEP, 24, &[]);
        keep(&mut worst, err, format!("seed {seed}: {name}"));
    }
    worst
}

pub fn policy_loss_sends_no_gradient_to_critic() {
    let cfg = TrainerConfig::default();
    let traj = trajectory(7, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = tiny_model(&traj, &mut rng);
    let mut g = Graph::new(&model.store);
    let b = build(&mut g, &model, &traj, &cfg);
    assert!(b.adv.iter().any(|a| *a != 0.0));
    let grads = g.backward(b.policy).unwrap();
    let mut scorer_moved = false;
    for id in model.store.ids() {
        let name = model.store.name(id);
        let norm: f32 = grads.get(id).map(|v| v.iter().map(|x| x * x).sum()).unwrap_or(0.0);
        if name.starts_with("agent.critic") {
            assert_eq!(norm, 0.0, "{name} received policy gradient");
        }
        if name.starts_with("agent.scorer") {
            scorer_moved |= norm > 0.0;
        }
    }
    assert!(scorer_moved);
}
