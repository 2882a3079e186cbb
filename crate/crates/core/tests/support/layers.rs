//! Layer-level gradient checks against f64 central differences (h = 1e-4).

use ldc_core::nn::{bigru_encode, bigru_encode_tokens, Activation, Graph, GruParams, MlpParams, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub const STEP: f64 = 1e-4;
pub const TOL: f64 = 1e-4;

fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0f32..1.0) as f64).collect()).collect()
}

fn flat32(rows: &[Vec<f64>]) -> Tensor {
    let cols = rows[0].len();
    Tensor::matrix(rows.len(), cols, rows.iter().flatten().map(|&v| v as f32).collect())
}

/// Shifts biases away from zero so every path carries gradient.
fn jitter_all(store: &mut ParamStore, rng: &mut ChaCha8Rng) {
    for id in store.ids().collect::<Vec<_>>() {
        for v in store.get_mut(id).data_mut() {
            if *v == 0.0 {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
    }
}

pub fn gru_step_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (din, dh) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let mut store = ParamStore::new();
        let gru = GruParams::new(&mut store, "g", din, dh, &mut rng);
        jitter_all(&mut store, &mut rng);
        let x = random_rows(&mut rng, 1, din);
        let h = random_rows(&mut rng, 1, dh);
        let coef = random_rows(&mut rng, 1, dh).remove(0);

        let mut g = Graph::new(&store);
        let xv = g.input(flat32(&x));
        let hv = g.input(flat32(&h));
        let out = gru.step(&mut g, xv, hv);
        let c = g.input(flat32(&[coef.clone()]));
        let prod = g.mul(out, c);
        let loss = g.sum(prod);
        let grads = g.backward(loss).unwrap();

        let f = |p: &P64| gru_step(p, &gru, &x[0], &h[0]).iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let (err, name) = check_gradients(&store, &grads, &f, STEP, 64, &[]);
        keep(&mut worst, err, format!("seed {seed}: {name}"));
    }
    worst
}

pub fn bigru_sequence_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (din, dh, t) = (rng.gen_range(1..=8), rng.gen_range(1..=8), rng.gen_range(1..=6));
        let mut store = ParamStore::new();
        let fwd = GruParams::new(&mut store, "f", din, dh, &mut rng);
        let bwd = GruParams::new(&mut store, "b", din, dh, &mut rng);
        jitter_all(&mut store, &mut rng);
        let xs = random_rows(&mut rng, t, din);
        let coef = random_rows(&mut rng, 1, 2 * dh).remove(0);

        let mut g = Graph::new(&store);
        let xv = g.input(flat32(&xs));
        let out = bigru_encode(&mut g, xv, &fwd, &bwd);
        let c = g.input(flat32(&[coef.clone()]));
        let prod = g.mul(out, c);
        let loss = g.sum(prod);
        let grads = g.backward(loss).unwrap();

        let f = |p: &P64| bigru(p, &fwd, &bwd, &xs).iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let (err, name) = check_gradients(&store, &grads, &f, STEP, 64, &[]);
        keep(&mut worst, err, format!("seed {seed}: {name}"));
    }
    worst
}

pub fn mlp_with_log_softmax_pick_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let (din, hid, k) = (rng.gen_range(1..=8), rng.gen_range(1..=8), rng.gen_range(1..=6));
        let mut store = ParamStore::new();
        let m = MlpParams::new(&mut store, "m", &[din, hid, 1], Activation::Relu, &mut rng);
        jitter_all(&mut store, &mut rng);
        let xs = random_rows(&mut rng, k, din);
        let chosen = rng.gen_range(0..k);

        // loss = -log softmax(scores)[chosen] - 0.1 * entropy
        let mut g = Graph::new(&store);
        let xv = g.input(flat32(&xs));
        let s = m.forward(&mut g, xv); // k x 1
        let s_row = reshape_row(&mut g, s, k);
        let lp = g.log_softmax(s_row);
        let picked = g.pick(lp, 0, chosen);
        let p = g.exp(lp);
        let plp = g.mul(p, lp);
        let neg_ent = g.sum(plp);
        let a = g.scale(picked, -1.0);
        let b = g.scale(neg_ent, 0.1);
        let loss = g.add(a, b);
        let grads = g.backward(loss).unwrap();

        let f = |p: &P64| {
            let scores: Vec<f64> = xs.iter().map(|x| mlp(p, &m, x)[0]).collect();
            let lp = log_softmax(&scores);
            let neg_ent: f64 = lp.iter().map(|l| l.exp() * l).sum();
            -lp[chosen] + 0.1 * neg_ent
        };
        let (err, name) = check_gradients(&store, &grads, &f, STEP, 64, &[]);
        keep(&mut worst, err, format!("seed {seed}: {name}"));
    }
    worst
}

/// `k x 1` column to `1 x k` row through row selection and concatenation.
fn reshape_row(g: &mut Graph, col: ldc_core::nn::Var, k: usize) -> ldc_core::nn::Var {
    let parts: Vec<_> = (0..k).map(|i| g.select_row(col, i)).collect();
    g.concat_cols(&parts)
}

pub fn embedding_and_bce_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut store = ParamStore::new();
    let table = store.add_uniform("emb", &[6, 4], 0.5, &mut rng);
    let gru = GruParams::new(&mut store, "g", 4, 5, &mut rng);
    let head = MlpParams::new(&mut store, "h", &[5, 3, 2], Activation::Tanh, &mut rng);
    jitter_all(&mut store, &mut rng);
    let ids = [1usize, 3, 3, 5];
    let targets = [1.0f32, 0.0];

    let mut g = Graph::new(&store);
    let xs = g.embed(table, &ids);
    let h = gru.encode(&mut g, xs);
    let logits = head.forward(&mut g, h);
    let loss = g.bce_with_logits(logits, &targets);
    let grads = g.backward(loss).unwrap();

    let f = |p: &P64| {
        let xs = embed_rows(p, table, 4, &ids);
        let h = gru_run(p, &gru, &xs, false).pop().unwrap();
        let l = mlp(p, &head, &h);
        (bce_logit(l[0], 1.0) + bce_logit(l[1], 0.0)) / 2.0
    };
    let (err, name) = check_gradients(&store, &grads, &f, STEP, 64, &[]);
    keep(&mut worst, err, name);
    // rows never looked up get no gradient
    let g_emb = grads.get(table).unwrap();
    assert!(g_emb[0..4].iter().chain(&g_emb[8..12]).all(|&v| v == 0.0));
    worst
}

pub fn batched_token_bigru_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let (vocab, dim, dh) = (7, rng.gen_range(1..=6), rng.gen_range(1..=6));
        let mut store = ParamStore::new();
        let table = store.add_uniform("emb", &[vocab, dim], 0.5, &mut rng);
        let fwd = GruParams::new(&mut store, "f", dim, dh, &mut rng);
        let bwd = GruParams::new(&mut store, "b", dim, dh, &mut rng);
        jitter_all(&mut store, &mut rng);
        let seqs: Vec<Vec<usize>> =
            (0..3).map(|_| (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(0..vocab)).collect()).collect();
        let coef = random_rows(&mut rng, 3, 2 * dh);

        let mut g = Graph::new(&store);
        let out = bigru_encode_tokens(&mut g, table, &seqs, &fwd, &bwd);
        let picked = g.gather_rows(out, &[2, 0, 1]);
        let c = g.input(flat32(&[coef[2].clone(), coef[0].clone(), coef[1].clone()]));
        let prod = g.mul(picked, c);
        let loss = g.sum(prod);
        let grads = g.backward(loss).unwrap();

        let f = |p: &P64| {
            seqs.iter()
                .zip(&coef)
                .map(|(s, c)| {
                    let xs = embed_rows(p, table, dim, s);
                    bigru(p, &fwd, &bwd, &xs).iter().zip(c).map(|(a, b)| a * b).sum::<f64>()
                })
                .sum::<f64>()
        };
        let (err, name) = check_gradients(&store, &grads, &f, STEP, 64, &[]);
        keep(&mut worst, err, format!("seed {seed}: {name}"));
    }
    worst
}
