//! Gradient checks of the recipe and navigator training losses against f64
//! re-implementations of their forward passes.

use ldc_core::generator::{NavSample, RecipeSample};
use ldc_core::lexicon::Vocab;
use ldc_core::navigator::{NavDims, NavModel};
use ldc_core::nn::{Graph, ParamStore, Tensor};
use ldc_core::recipe::{match_flags, RecipeDims, RecipeModel, MAX_TOKENS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

pub const STEP: f64 = 1e-4;
pub const TOL: f64 = 1e-3;

fn jitter_all(store: &mut ParamStore, rng: &mut ChaCha8Rng) {
    for id in store.ids().collect::<Vec<_>>() {
        for v in store.get_mut(id).data_mut() {
            if *v == 0.0 {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
    }
}

fn table(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn recipe_samples() -> Vec<RecipeSample> {
    let s = |d: &str, i: &str, n: u8, c: u8| RecipeSample {
        direction: d.into(),
        inventory: i.into(),
        needed: n,
        collect: c,
        unseen: false,
    };
    vec![
        s("fry the red hot pepper", "You are carrying: a sliced red hot pepper, an apple.", 1, 0),
        s("slice the red hot pepper", "You are carrying: a sliced red hot pepper, an apple.", 0, 0),
        s("carrot", "You are carrying nothing.", 1, 1),
        s("roast the apple", "You are carrying: a carrot, a fried apple.", 0, 0),
    ]
}

fn recipe_oracle(p: &P64, m: &RecipeModel, samples: &[RecipeSample]) -> f64 {
    let e = m.dims.embed;
    let mut total = 0.0;
    for s in samples {
        let line_ids = m.vocab.encode(&s.direction, MAX_TOKENS);
        let inv_ids = m.vocab.encode(&s.inventory, MAX_TOKENS);
        let flags: Vec<f64> = match_flags(&s.direction, &s.inventory).iter().map(|&f| f as f64).collect();
        let line = bigru(p, &m.line_fwd, &m.line_bwd, &embed_rows(p, m.embed, e, &line_ids));
        let xs: Vec<Vec<f64>> = embed_rows(p, m.embed, e, &inv_ids)
            .into_iter()
            .zip(&flags)
            .map(|(mut x, &f)| {
                x.push(f);
                x
            })
            .collect();
        let count: f64 = flags.iter().sum();
        let pool = |states: Vec<Vec<f64>>, reverse: bool| -> Vec<f64> {
            let h = states[0].len();
            let mut out = vec![0.0; h];
            if count == 0.0 {
                return out;
            }
            for (k, st) in states.iter().enumerate() {
                let pos = if reverse { states.len() - 1 - k } else { k };
                for j in 0..h {
                    out[j] += flags[pos] / count * st[j];
                }
            }
            out
        };
        let mut inv = pool(gru_run(p, &m.inv_fwd, &xs, false), false);
        inv.extend(pool(gru_run(p, &m.inv_bwd, &xs, true), true));
        let both: Vec<f64> = line.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let x: Vec<f64> = line.iter().chain(&inv).chain(&both).copied().collect();
        let logits = mlp(p, &m.classifier, &x);
        total += bce_logit(logits[0], s.needed as f64) + bce_logit(logits[1], s.collect as f64);
    }
    total / (2 * samples.len()) as f64
}

pub fn recipe_loss_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    let samples = recipe_samples();
    let vocab = Vocab::build(samples.iter().flat_map(|s| [s.direction.as_str(), s.inventory.as_str()]));
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = RecipeDims { embed: 6, hidden: rng.gen_range(3..=8), classifier_hidden: rng.gen_range(3..=8) };
        let emb = table(&mut rng, vocab.len(), dims.embed);
        let mut model = RecipeModel::new(vocab.clone(), emb, dims, &mut rng);
        jitter_all(&mut model.store, &mut rng);
        let refs: Vec<&RecipeSample> = samples.iter().collect();
        let mut g = Graph::new(&model.store);
        let loss = model.batch_loss(&mut g, &refs);
        let value = g.value(loss).item() as f64;
        let grads = g.backward(loss).unwrap();
        let oracle = recipe_oracle(&to_f64(&model.store), &model, &samples);
        assert!((value - oracle).abs() < 1e-4 * oracle.abs().max(1.0), "loss {value} vs oracle {oracle}");
        let f = |p: &P64| recipe_oracle(p, &model, &samples);
        let (err, name) = check_gradients(&model.store, &grads, &f, STEP, 48, &[]);
        keep(&mut worst, err, format!("seed {seed}: {name}"));
    }
    worst
}

fn nav_samples() -> Vec<NavSample> {
    let s = |d: &str, exits: [bool; 4], labels: &[u8]| NavSample {
        description: d.into(),
        exits,
        tokens: Vec::new(),
        door_labels: labels.to_vec(),
    };
    vec![
        s("-= Shed =- There is a closed barn door leading east .", [false, true, false, false], &[0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0]),
        s("-= Pantry =- There is an exit to the north .", [true, false, false, false], &[]),
    ]
}

fn nav_oracle(p: &P64, m: &NavModel, samples: &[NavSample]) -> f64 {
    let e = m.dims.embed;
    let (mut dir_loss, mut dir_n, mut tok_loss, mut tok_n) = (0.0, 0usize, 0.0, 0usize);
    for s in samples {
        let ids = m.vocab.encode(&s.description, MAX_TOKENS);
        let states = gru_run(p, &m.encoder, &embed_rows(p, m.embed, e, &ids), false);
        let last = states.last().unwrap();
        for (head, &target) in m.direction_heads.iter().zip(&s.exits) {
            dir_loss += bce_logit(mlp(p, head, last)[0], target as u8 as f64);
            dir_n += 1;
        }
        for (t, st) in states.iter().enumerate() {
            let y = s.door_labels.get(t).copied().unwrap_or(0) as f64;
            tok_loss += bce_logit(mlp(p, &m.door_head, st)[0], y);
            tok_n += 1;
        }
    }
    dir_loss / dir_n as f64 + tok_loss / tok_n as f64
}

pub fn navigator_loss_gradients() -> (f64, String) {
    let mut worst = (0.0f64, String::new());
    let samples = nav_samples();
    let vocab = Vocab::build(samples.iter().map(|s| s.description.as_str()));
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = NavDims { embed: 5, hidden: rng.gen_range(3..=8), head_hidden: rng.gen_range(3..=8) };
        let emb = table(&mut rng, vocab.len(), dims.embed);
        let mut model = NavModel::new(vocab.clone(), emb, dims, &mut rng);
        jitter_all(&mut model.store, &mut rng);
        let refs: Vec<&NavSample> = samples.iter().collect();
        let mut g = Graph::new(&model.store);
        let loss = model.batch_loss(&mut g, &refs);
        let value = g.value(loss).item() as f64;
        let grads = g.backward(loss).unwrap();
        let oracle = nav_oracle(&to_f64(&model.store), &model, &samples);
        assert!((value - oracle).abs() < 1e-4 * oracle.abs().max(1.0), "loss {value} vs oracle {oracle}");
        let f = |p: &P64| nav_oracle(p, &model, &samples);
        let (err, name) = check_gradients(&model.store, &grads, &f, STEP, 48, &[]);
        keep(&mut worst, err, format!("seed {seed}: {name}"));
    }
    worst
}
