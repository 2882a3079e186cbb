//! Navigator: exits and closed-door names read from room descriptions.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::commands::{Candidate, Provenance};
use crate::engine::{Direction, GameState, World};
use crate::generator::NavSample;
use crate::lexicon::{tokenize, Vocab};
use crate::nn::{checkpoint, Activation, AdamState, Graph, GruParams, MlpParams, NnError, ParamId, ParamStore, Tensor, Var};
use crate::recipe::SupervisedConfig;

pub const MAX_TOKENS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NavDims {
    pub embed: usize,
    pub hidden: usize,
    pub head_hidden: usize,
}

impl Default for NavDims {
    fn default() -> Self {
        NavDims { embed: crate::lexicon::EMBED_DIM, hidden: 64, head_hidden: 64 }
    }
}

#[derive(Clone, Debug)]
pub struct NavModel {
    pub store: ParamStore,
    pub vocab: Vocab,
    pub dims: NavDims,
    pub embed: ParamId,
    pub encoder: GruParams,
    pub direction_heads: Vec<MlpParams>,
    pub door_head: MlpParams,
}

/// Ground-truth or predicted navigation facts for one room.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NavOutput {
    /// North, east, south, west.
    pub exits: [bool; 4],
    pub closed_doors: Vec<String>,
}

struct Forward {
    directions: Var,
    tokens: Var,
}

impl NavModel {
    pub fn new<R: Rng>(vocab: Vocab, embeddings: Tensor, dims: NavDims, rng: &mut R) -> Self {
        assert_eq!(embeddings.shape(), &[vocab.len(), dims.embed], "embedding table shape");
        let mut store = ParamStore::new();
        let embed = store.add("nav.embed", embeddings);
        let encoder = GruParams::new(&mut store, "nav.encoder", dims.embed, dims.hidden, rng);
        let direction_heads = Direction::ALL
            .iter()
            .map(|d| {
                let name = format!("nav.head.{}", d.name());
                MlpParams::new(&mut store, &name, &[dims.hidden, dims.head_hidden, 1], Activation::Relu, rng)
            })
            .collect();
        let door_head =
            MlpParams::new(&mut store, "nav.door", &[dims.hidden, dims.head_hidden, 1], Activation::Relu, rng);
        NavModel { store, vocab, dims, embed, encoder, direction_heads, door_head }
    }

    fn encode(&self, text: &str) -> Vec<usize> {
        self.vocab.encode(text, MAX_TOKENS)
    }

    /// Direction logits `B x 4` and door logits for every real token,
    /// ordered by sequence then position.
    fn forward(&self, g: &mut Graph, seqs: &[Vec<usize>]) -> Forward {
        let states = self.encoder.run_tokens(g, self.embed, seqs, false);
        let last = *states.last().unwrap();
        let heads: Vec<Var> = self.direction_heads.iter().map(|h| h.forward(g, last)).collect();
        let directions = g.concat_cols(&heads);
        let all = g.concat_rows(&states);
        let b = seqs.len();
        let rows: Vec<usize> =
            seqs.iter().enumerate().flat_map(|(i, s)| (0..s.len()).map(move |t| t * b + i)).collect();
        let picked = g.gather_rows(all, &rows);
        let tokens = self.door_head.forward(g, picked);
        Forward { directions, tokens }
    }

    /// Exit flags and per-token door probabilities for one description.
    pub fn predict(&self, description: &str) -> ([bool; 4], Vec<f32>) {
        let seq = self.encode(description);
        let mut g = Graph::new(&self.store);
        let f = self.forward(&mut g, &[seq]);
        let d = g.value(f.directions).data();
        let exits = [0, 1, 2, 3].map(|i| d[i] >= 0.0);
        let probs = g.value(f.tokens).data().iter().map(|&x| 1.0 / (1.0 + (-x).exp())).collect();
        (exits, probs)
    }

    pub fn batch_loss(&self, g: &mut Graph, batch: &[&NavSample]) -> Var {
        let seqs: Vec<Vec<usize>> = batch.iter().map(|s| self.encode(&s.description)).collect();
        let f = self.forward(g, &seqs);
        let dir_targets: Vec<f32> = batch.iter().flat_map(|s| s.exits.map(|e| e as u8 as f32)).collect();
        let tok_targets: Vec<f32> = batch
            .iter()
            .zip(&seqs)
            .flat_map(|(s, seq)| (0..seq.len()).map(move |t| s.door_labels.get(t).copied().unwrap_or(0) as f32))
            .collect();
        let ld = g.bce_with_logits(f.directions, &dir_targets);
        let lt = g.bce_with_logits(f.tokens, &tok_targets);
        g.add(ld, lt)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        checkpoint::save(&self.store, path)
    }

    pub fn load_weights(&mut self, path: &Path) -> Result<(), NnError> {
        checkpoint::load_into(&mut self.store, path)
    }
}

/// Maximal runs of positive tokens joined by spaces.
pub fn spans(tokens: &[String], positive: &[bool]) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for (tok, &p) in tokens.iter().zip(positive) {
        if p {
            cur.push(tok);
        } else if !cur.is_empty() {
            out.push(cur.join(" "));
            cur.clear();
        }
    }
    if !cur.is_empty() {
        out.push(cur.join(" "));
    }
    out
}

pub fn predict_exits(description: &str, model: &NavModel) -> [bool; 4] {
    model.predict(description).0
}

pub fn predict_closed_doors(description: &str, model: &NavModel) -> Vec<String> {
    let (_, probs) = model.predict(description);
    let mut tokens = tokenize(description);
    tokens.truncate(MAX_TOKENS);
    let positive: Vec<bool> = probs.iter().map(|p| *p >= 0.5).collect();
    spans(&tokens, &positive)
}

pub fn predict(description: &str, model: &NavModel) -> NavOutput {
    let (exits, probs) = model.predict(description);
    let mut tokens = tokenize(description);
    tokens.truncate(MAX_TOKENS);
    let positive: Vec<bool> = probs.iter().map(|p| *p >= 0.5).collect();
    NavOutput { exits, closed_doors: spans(&tokens, &positive) }
}

/// Navigation facts for the current room taken from the game state.
pub fn oracle_nav(world: &World, state: &GameState) -> NavOutput {
    let room = &world.rooms[state.room];
    let exits = Direction::ALL.map(|d| room.exit(d).is_some());
    let closed_doors = Direction::ALL
        .iter()
        .filter_map(|d| room.exit(*d).and_then(|e| e.door))
        .filter(|door| !state.doors_open[*door])
        .map(|door| world.doors[door].name.clone())
        .collect();
    NavOutput { exits, closed_doors }
}

/// One `go` per exit, then one `open` per closed door.
pub fn build_nav_commands(nav: &NavOutput) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Direction::ALL
        .iter()
        .zip(nav.exits)
        .filter(|(_, e)| *e)
        .map(|(d, _)| Candidate::single(format!("go {}", d.name()), Provenance::Nav))
        .collect();
    for door in &nav.closed_doors {
        out.push(Candidate::single(format!("open {door}"), Provenance::Nav));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NavMetrics {
    pub loss: f32,
    /// Fraction of correct per-direction decisions.
    pub direction_accuracy: f32,
    /// Micro-averaged exact-match F1 over closed-door spans.
    pub door_f1: f32,
}

pub fn evaluate_nav_model(model: &NavModel, samples: &[NavSample]) -> NavMetrics {
    let mut loss = 0.0f64;
    let (mut dir_ok, mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for chunk in samples.chunks(32) {
        let refs: Vec<&NavSample> = chunk.iter().collect();
        let seqs: Vec<Vec<usize>> = refs.iter().map(|s| model.encode(&s.description)).collect();
        let mut g = Graph::new(&model.store);
        let l = model.batch_loss(&mut g, &refs);
        loss += g.value(l).item() as f64 * chunk.len() as f64;
        let f = model.forward(&mut g, &seqs);
        let d = g.value(f.directions).data();
        let t = g.value(f.tokens).data();
        let mut offset = 0;
        for (i, s) in chunk.iter().enumerate() {
            for k in 0..4 {
                dir_ok += ((d[i * 4 + k] >= 0.0) == s.exits[k]) as usize;
            }
            let n = seqs[i].len();
            let toks = &s.tokens[..n.min(s.tokens.len())];
            let pred: Vec<bool> = t[offset..offset + n].iter().map(|x| *x >= 0.0).collect();
            let gold: Vec<bool> = s.door_labels[..n.min(s.door_labels.len())].iter().map(|l| *l == 1).collect();
            offset += n;
            let ps = spans(toks, &pred);
            let mut gs = spans(toks, &gold);
            for p in &ps {
                if let Some(j) = gs.iter().position(|g| g == p) {
                    gs.remove(j);
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
            fneg += gs.len();
        }
    }
    let f1 = if tp == 0 { if fp + fneg == 0 { 1.0 } else { 0.0 } } else { 2.0 * tp as f32 / (2 * tp + fp + fneg) as f32 };
    NavMetrics {
        loss: (loss / samples.len().max(1) as f64) as f32,
        direction_accuracy: dir_ok as f32 / (4 * samples.len().max(1)) as f32,
        door_f1: f1,
    }
}

pub fn train_nav_model<R: Rng>(
    model: &mut NavModel,
    train: &[NavSample],
    valid: &[NavSample],
    config: &SupervisedConfig,
    rng: &mut R,
    mut on_epoch: impl FnMut(usize, f32, &NavMetrics),
) -> Result<NavMetrics, NnError> {
    let mut adam = AdamState::new(&model.store, config.lr);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut last = evaluate_nav_model(model, valid);
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0f64;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&NavSample> = chunk.iter().map(|&i| &train[i]).collect();
            let mut grads = {
                let mut g = Graph::new(&model.store);
                let loss = model.batch_loss(&mut g, &batch);
                let value = g.value(loss).item();
                if !value.is_finite() {
                    return Err(NnError::NonFinite(format!("navigator loss at epoch {epoch}")));
                }
                total += value as f64 * chunk.len() as f64;
                g.backward(loss)?
            };
            grads.clip_norm(config.clip);
            adam.step(&mut model.store, &grads);
        }
        last = evaluate_nav_model(model, valid);
        on_epoch(epoch, (total / train.len().max(1) as f64) as f32, &last);
    }
    Ok(last)
}
