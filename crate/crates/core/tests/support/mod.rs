//! f64 reference forward passes and a central-difference gradient driver.
//!
//! These re-derive each layer from its defining formula in double precision.
//! They share parameter ids with the library (to address tensors) but none of
//! its arithmetic.
#![allow(dead_code)]

use ldc_core::nn::{Activation, Gradients, GruParams, MlpParams, ParamId, ParamStore};

pub mod agent;
pub mod helpers;
pub mod layers;

pub type P64 = Vec<Vec<f64>>;

pub fn to_f64(store: &ParamStore) -> P64 {
    store.iter().map(|(_, t)| t.data().iter().map(|&v| v as f64).collect()).collect()
}

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `x W` for a row vector `x` and a row-major `rows x cols` matrix.
pub fn vec_mat(x: &[f64], w: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (i, xi) in x.iter().enumerate() {
        for j in 0..cols {
            out[j] += xi * w[i * cols + j];
        }
    }
    out
}

pub fn gru_step(p: &P64, g: &GruParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    let hd = g.hidden_dim;
    let pr = |id: ParamId| &p[id.index()];
    let lin = |w: ParamId, u: ParamId, b: ParamId, hh: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let a = vec_mat(x, pr(w), hd);
        let c = vec_mat(hh, pr(u), hd);
        (a.iter().zip(pr(b)).map(|(a, b)| a + b).collect(), c)
    };
    let (xz, hz) = lin(g.w_z, g.u_z, g.b_z, h);
    let (xr, hr) = lin(g.w_r, g.u_r, g.b_r, h);
    let (xn, hn) = lin(g.w_n, g.u_n, g.b_n, h);
    (0..hd)
        .map(|j| {
            let z = sig(xz[j] + hz[j]);
            let r = sig(xr[j] + hr[j]);
            let n = (xn[j] + r * hn[j]).tanh();
            (1.0 - z) * n + z * h[j]
        })
        .collect()
}

pub fn gru_run(p: &P64, g: &GruParams, xs: &[Vec<f64>], reverse: bool) -> Vec<Vec<f64>> {
    let mut h = vec![0.0; g.hidden_dim];
    let mut states = Vec::new();
    let order: Vec<usize> = if reverse { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
    for i in order {
        h = gru_step(p, g, &xs[i], &h);
        states.push(h.clone());
    }
    states
}

pub fn bigru(p: &P64, f: &GruParams, b: &GruParams, xs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = gru_run(p, f, xs, false).pop().unwrap();
    out.extend(gru_run(p, b, xs, true).pop().unwrap());
    out
}

pub fn mlp(p: &P64, m: &MlpParams, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for layer in &m.layers {
        let b = &p[layer.bias.index()];
        let mut y = vec_mat(&h, &p[layer.weight.index()], b.len());
        for (v, bb) in y.iter_mut().zip(b) {
            *v += bb;
        }
        h = match layer.activation {
            Activation::Relu => y.into_iter().map(|v| v.max(0.0)).collect(),
            Activation::Tanh => y.into_iter().map(f64::tanh).collect(),
            Activation::Identity => y,
        };
    }
    h
}

pub fn log_softmax(s: &[f64]) -> Vec<f64> {
    let max = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    s.iter().map(|v| v - lse).collect()
}

pub fn bce_logit(x: f64, y: f64) -> f64 {
    let p = sig(x);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

pub fn embed_rows(p: &P64, table: ParamId, dim: usize, ids: &[usize]) -> Vec<Vec<f64>> {
    ids.iter().map(|&i| p[table.index()][i * dim..(i + 1) * dim].to_vec()).collect()
}

/// Largest per-tensor relative error `|a - n| / max(|a| + |n|, 1e-3)` (L2
/// norms) between analytic gradients and central differences of `loss`.
///
/// The floor keeps analytically-zero gradients (e.g. a bias that shifts all
/// softmax scores) from turning f32 round-off into a relative error of 1.
///
/// At most `max_per_tensor` coordinates of each tensor are probed.
pub fn check_gradients(
    store: &ParamStore,
    analytic: &Gradients,
    loss: &dyn Fn(&P64) -> f64,
    step: f64,
    max_per_tensor: usize,
    skip: &[ParamId],
) -> (f64, String) {
    let base = to_f64(store);
    let mut worst = (0.0f64, String::new());
    for id in store.ids() {
        if skip.contains(&id) {
            continue;
        }
        let len = base[id.index()].len();
        let stride = (len / max_per_tensor).max(1);
        let (mut diff2, mut a2, mut n2) = (0.0, 0.0, 0.0);
        let mut idx = 0;
        while idx < len {
            let mut p = base.clone();
            p[id.index()][idx] = base[id.index()][idx] + step;
            let up = loss(&p);
            p[id.index()][idx] = base[id.index()][idx] - step;
            let down = loss(&p);
            let numeric = (up - down) / (2.0 * step);
            let a = analytic.get(id).map(|g| g[idx] as f64).unwrap_or(0.0);
            diff2 += (a - numeric).powi(2);
            a2 += a * a;
            n2 += numeric * numeric;
            idx += stride;
        }
        let denom = a2.sqrt() + n2.sqrt();
        let rel = diff2.sqrt() / denom.max(1e-3);
        if rel > worst.0 {
            worst = (rel, store.name(id).to_string());
        }
    }
    worst
}

/// Keeps the larger of two labeled errors.
pub fn keep(worst: &mut (f64, String), err: f64, label: impl Into<String>) {
    if err > worst.0 || worst.1.is_empty() {
        *worst = (err, label.into());
    }
}
