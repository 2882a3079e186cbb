//! Actor-critic network: feature encoders, recurrent context, command
//! encoder, critic and scoring heads.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;

use crate::episode::{ContextFeatures, FEATURES, FEATURE_NAMES};
use crate::lexicon::Vocab;
use crate::nn::{bigru_encode_tokens, checkpoint, Activation, Graph, GruParams, MlpParams, NnError, ParamId, ParamStore, Tensor, Var};

pub const MAX_TOKENS: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgentDims {
    pub embed: usize,
    /// Per direction; each feature encodes to twice this width.
    pub feature_hidden: usize,
    pub context_hidden: usize,
    pub command_hidden: usize,
    pub mlp_hidden: usize,
}

impl Default for AgentDims {
    fn default() -> Self {
        AgentDims { embed: crate::lexicon::EMBED_DIM, feature_hidden: 16, context_hidden: 256, command_hidden: 32, mlp_hidden: 256 }
    }
}

impl AgentDims {
    pub fn context_input(&self) -> usize {
        FEATURES * 2 * self.feature_hidden
    }
}

#[derive(Clone, Debug)]
pub struct AgentModel {
    pub store: ParamStore,
    pub vocab: Vocab,
    pub dims: AgentDims,
    pub embed: ParamId,
    pub features: Vec<(GruParams, GruParams)>,
    pub context: GruParams,
    pub command: GruParams,
    pub critic: MlpParams,
    pub scorer: MlpParams,
}

/// Graph handles produced by one decision.
#[derive(Clone, Copy, Debug)]
pub struct StepOutput {
    /// `1 x k` raw scores.
    pub scores: Var,
    /// `1 x k` log-probabilities.
    pub log_probs: Var,
    /// `1 x 1` critic value.
    pub value: Var,
    /// `1 x context_hidden` updated recurrent state.
    pub hidden: Var,
}

/// Memoized encodings within one graph. Parameters are fixed while a graph
/// lives, so equal texts encode identically.
#[derive(Default)]
pub struct EncodingCache {
    features: HashMap<(usize, String), Var>,
    commands: HashMap<String, Var>,
}

impl AgentModel {
    pub fn new<R: Rng>(vocab: Vocab, embeddings: Tensor, dims: AgentDims, rng: &mut R) -> Self {
        assert_eq!(embeddings.shape(), &[vocab.len(), dims.embed], "embedding table shape");
        let mut store = ParamStore::new();
        let embed = store.add("agent.embed", embeddings);
        let features = FEATURE_NAMES
            .iter()
            .map(|name| {
                let key = name.replace(' ', "_");
                let f = GruParams::new(&mut store, &format!("agent.feature.{key}.fwd"), dims.embed, dims.feature_hidden, rng);
                let b = GruParams::new(&mut store, &format!("agent.feature.{key}.bwd"), dims.embed, dims.feature_hidden, rng);
                (f, b)
            })
            .collect();
        let context = GruParams::new(&mut store, "agent.context", dims.context_input(), dims.context_hidden, rng);
        let command = GruParams::new(&mut store, "agent.command", dims.embed, dims.command_hidden, rng);
        let critic = MlpParams::new(&mut store, "agent.critic", &[dims.context_hidden, dims.mlp_hidden, 1], Activation::Relu, rng);
        let scorer = MlpParams::new(
            &mut store,
            "agent.scorer",
            &[dims.context_hidden + dims.command_hidden, dims.mlp_hidden, 1],
            Activation::Relu,
            rng,
        );
        AgentModel { store, vocab, dims, embed, features, context, command, critic, scorer }
    }

    pub fn initial_hidden(&self) -> Tensor {
        Tensor::zeros(&[1, self.dims.context_hidden])
    }

    fn encode(&self, text: &str) -> Vec<usize> {
        self.vocab.encode(text, MAX_TOKENS)
    }

    /// `1 x context_input` concatenation of the eight feature encodings.
    pub fn encode_features(&self, g: &mut Graph, cache: &mut EncodingCache, features: &ContextFeatures) -> Var {
        let parts: Vec<Var> = features
            .texts
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let key = (i, text.clone());
                if let Some(&v) = cache.features.get(&key) {
                    return v;
                }
                let (f, b) = &self.features[i];
                let v = bigru_encode_tokens(g, self.embed, &[self.encode(text)], f, b);
                cache.features.insert(key, v);
                v
            })
            .collect();
        g.concat_cols(&parts)
    }

    /// One recurrent context step: `h* = GRU_s(features, hidden)`.
    pub fn encode_context(&self, g: &mut Graph, cache: &mut EncodingCache, features: &ContextFeatures, hidden: Var) -> Var {
        let x = self.encode_features(g, cache, features);
        self.context.step(g, x, hidden)
    }

    /// `k x command_hidden` encodings, one row per command.
    pub fn encode_commands(&self, g: &mut Graph, cache: &mut EncodingCache, commands: &[String]) -> Var {
        assert!(!commands.is_empty(), "encode_commands: no commands");
        let mut fresh: Vec<&String> = Vec::new();
        for c in commands {
            if !cache.commands.contains_key(c) && !fresh.contains(&c) {
                fresh.push(c);
            }
        }
        if !fresh.is_empty() {
            let seqs: Vec<Vec<usize>> = fresh.iter().map(|c| self.encode(c)).collect();
            let enc = self.command.encode_tokens(g, self.embed, &seqs);
            for (i, c) in fresh.into_iter().enumerate() {
                let row = g.select_row(enc, i);
                cache.commands.insert(c.clone(), row);
            }
        }
        let rows: Vec<Var> = commands.iter().map(|c| cache.commands[c]).collect();
        g.concat_rows(&rows)
    }

    /// Critic value of a context encoding.
    pub fn value(&self, g: &mut Graph, context: Var) -> Var {
        self.critic.forward(g, context)
    }

    /// Full decision pass: context, critic value and command scores.
    pub fn forward(
        &self,
        g: &mut Graph,
        cache: &mut EncodingCache,
        features: &ContextFeatures,
        hidden: Var,
        commands: &[String],
    ) -> StepOutput {
        let h = self.encode_context(g, cache, features, hidden);
        let value = self.value(g, h);
        let c = self.encode_commands(g, cache, commands);
        let k = commands.len();
        let hs = g.repeat_rows(h, k);
        let x = g.concat_cols(&[hs, c]);
        let s = self.scorer.forward(g, x);
        let scores = g.reshape(s, 1, k);
        let log_probs = g.log_softmax(scores);
        StepOutput { scores, log_probs, value, hidden: h }
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        checkpoint::save(&self.store, path)
    }

    pub fn load_weights(&mut self, path: &Path) -> Result<(), NnError> {
        checkpoint::load_into(&mut self.store, path)
    }
}

/// Entropy `-sum p log p` of a `1 x k` log-probability row, as a graph node.
pub fn entropy(g: &mut Graph, log_probs: Var) -> Var {
    let p = g.exp(log_probs);
    let plogp = g.mul(p, log_probs);
    let s = g.sum(plogp);
    g.scale(s, -1.0)
}

/// Index of the highest score; ties go to the lowest index.
pub fn greedy(scores: &[f32]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Samples an index from probabilities `exp(log_probs)`.
pub fn sample<R: Rng>(log_probs: &[f32], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0f64;
    for (i, &lp) in log_probs.iter().enumerate() {
        acc += (lp as f64).exp();
        if u < acc {
            return i;
        }
    }
    log_probs.len() - 1
}
