use rand::Rng;

use super::{Graph, NnError, ParamId, ParamStore, Tensor, Var};

/// Weights of a single-direction GRU.
///
/// Input projections are `input_dim x hidden_dim` and applied as `x W`;
/// recurrent matrices are `hidden_dim x hidden_dim`.
#[derive(Clone, Debug)]
pub struct GruParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_z: ParamId,
    pub w_r: ParamId,
    pub w_n: ParamId,
    pub u_z: ParamId,
    pub u_r: ParamId,
    pub u_n: ParamId,
    pub b_z: ParamId,
    pub b_r: ParamId,
    pub b_n: ParamId,
}

impl GruParams {
    /// Registers a GRU with weights from `uniform(-1/sqrt(hidden), 1/sqrt(hidden))`
    /// and zero biases.
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden_dim as f32).sqrt();
        let mut w = |gate: &str, rows: usize| store_uniform(store, &format!("{prefix}.{gate}"), rows, hidden_dim, bound, rng);
        let w_z = w("w_z", input_dim);
        let w_r = w("w_r", input_dim);
        let w_n = w("w_n", input_dim);
        let u_z = w("u_z", hidden_dim);
        let u_r = w("u_r", hidden_dim);
        let u_n = w("u_n", hidden_dim);
        let b_z = store.add_zeros(format!("{prefix}.b_z"), &[1, hidden_dim]);
        let b_r = store.add_zeros(format!("{prefix}.b_r"), &[1, hidden_dim]);
        let b_n = store.add_zeros(format!("{prefix}.b_n"), &[1, hidden_dim]);
        Self { input_dim, hidden_dim, w_z, w_r, w_n, u_z, u_r, u_n, b_z, b_r, b_n }
    }

    fn projections(&self, g: &mut Graph, xs: Var) -> [Var; 3] {
        assert_eq!(g.value(xs).cols(), self.input_dim, "gru: input width");
        [(self.w_z, self.b_z), (self.w_r, self.b_r), (self.w_n, self.b_n)].map(|(w, b)| {
            let wv = g.param(w);
            let bv = g.param(b);
            let p = g.matmul(xs, wv);
            g.add(p, bv)
        })
    }

    fn recurrent(&self, g: &mut Graph) -> [Var; 3] {
        [self.u_z, self.u_r, self.u_n].map(|u| g.param(u))
    }

    /// One transition `h -> h'` for a single input row `x`.
    pub fn step(&self, g: &mut Graph, x: Var, h: Var) -> Var {
        assert_eq!(g.value(x).rows(), 1, "gru step takes one input row");
        assert_eq!(g.value(h).cols(), self.hidden_dim, "gru: hidden width");
        let [pz, pr, pn] = self.projections(g, x);
        let [uz, ur, un] = self.recurrent(g);
        g.gru_cell(pz, pr, pn, 0, h, uz, ur, un)
    }

    /// Runs over all rows of `xs` (`T x input_dim`), optionally in reverse
    /// order, and returns every hidden state in processing order.
    pub fn run(&self, g: &mut Graph, xs: Var, h0: Option<Var>, reverse: bool) -> Vec<Var> {
        let t = g.value(xs).rows();
        assert!(t >= 1, "gru: empty sequence");
        let [pz, pr, pn] = self.projections(g, xs);
        let [uz, ur, un] = self.recurrent(g);
        let mut h = match h0 {
            Some(h) => h,
            None => g.input(Tensor::zeros(&[1, self.hidden_dim])),
        };
        let mut states = Vec::with_capacity(t);
        for i in 0..t {
            let row = if reverse { t - 1 - i } else { i };
            h = g.gru_cell(pz, pr, pn, row, h, uz, ur, un);
            states.push(h);
        }
        states
    }

    /// Runs over a padded batch of token sequences looked up in `table`.
    ///
    /// Returns the hidden state after each time step (`B x H` each); a row
    /// stops changing once its sequence is exhausted, so the last entry holds
    /// every sequence's final state. With `reverse`, each sequence is read
    /// right to left.
    pub fn run_tokens(&self, g: &mut Graph, table: ParamId, seqs: &[Vec<usize>], reverse: bool) -> Vec<Var> {
        self.run_tokens_with(g, table, seqs, None, reverse)
    }

    /// [`GruParams::run_tokens`] with per-token features appended to each
    /// embedding. `features[b]` holds `seqs[b].len() * F` values, row-major,
    /// where `F = input_dim - embedding width`.
    pub fn run_tokens_with(
        &self,
        g: &mut Graph,
        table: ParamId,
        seqs: &[Vec<usize>],
        features: Option<&[Vec<f32>]>,
        reverse: bool,
    ) -> Vec<Var> {
        assert!(!seqs.is_empty() && seqs.iter().all(|s| !s.is_empty()), "gru: empty sequence");
        let batch = seqs.len();
        let steps = seqs.iter().map(Vec::len).max().unwrap();
        let width = g.params().get(table).cols();
        let extra = self.input_dim.saturating_sub(width);
        let mut ids = Vec::with_capacity(batch * steps);
        let mut feats = Vec::with_capacity(batch * steps * extra);
        for t in 0..steps {
            for (b, s) in seqs.iter().enumerate() {
                let pos = if t < s.len() {
                    if reverse { s.len() - 1 - t } else { t }
                } else {
                    0
                };
                ids.push(s[pos]);
                if let Some(f) = features {
                    assert_eq!(f[b].len(), s.len() * extra, "gru: feature length");
                    feats.extend_from_slice(&f[b][pos * extra..(pos + 1) * extra]);
                }
            }
        }
        let mut xs = g.embed(table, &ids);
        if features.is_some() {
            let f = g.input(Tensor::new(vec![batch * steps, extra], feats).expect("feature tensor"));
            xs = g.concat_cols(&[xs, f]);
        }
        let [pz, pr, pn] = self.projections(g, xs);
        let [uz, ur, un] = self.recurrent(g);
        let mut h = g.input(Tensor::zeros(&[batch, self.hidden_dim]));
        let mut states = Vec::with_capacity(steps);
        for t in 0..steps {
            let active: Vec<bool> = seqs.iter().map(|s| t < s.len()).collect();
            let mask = if active.iter().all(|a| *a) { None } else { Some(active) };
            h = g.gru_cell_masked(pz, pr, pn, t * batch, h, uz, ur, un, mask);
            states.push(h);
        }
        states
    }

    /// Final states (`B x H`) of a padded batch of token sequences.
    pub fn encode_tokens(&self, g: &mut Graph, table: ParamId, seqs: &[Vec<usize>]) -> Var {
        *self.run_tokens(g, table, seqs, false).last().unwrap()
    }

    /// Final hidden state after consuming `xs` left to right from a zero state.
    pub fn encode(&self, g: &mut Graph, xs: Var) -> Var {
        *self.run(g, xs, None, false).last().unwrap()
    }
}

fn store_uniform<R: Rng>(store: &mut ParamStore, name: &str, rows: usize, cols: usize, bound: f32, rng: &mut R) -> ParamId {
    store.add_uniform(name, &[rows, cols], bound, rng)
}

/// Encodes `xs` with a forward and a backward GRU and concatenates the two
/// final hidden states (`[forward | backward]`).
pub fn bigru_encode(g: &mut Graph, xs: Var, fwd: &GruParams, bwd: &GruParams) -> Var {
    let f = *fwd.run(g, xs, None, false).last().unwrap();
    let b = *bwd.run(g, xs, None, true).last().unwrap();
    g.concat_cols(&[f, b])
}

/// Batched [`bigru_encode`] over token sequences: `B x (Hf + Hb)`.
pub fn bigru_encode_tokens(g: &mut Graph, table: ParamId, seqs: &[Vec<usize>], fwd: &GruParams, bwd: &GruParams) -> Var {
    let f = *fwd.run_tokens(g, table, seqs, false).last().unwrap();
    let b = *bwd.run_tokens(g, table, seqs, true).last().unwrap();
    g.concat_cols(&[f, b])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
}

/// Multi-layer perceptron; the last layer is always linear.
#[derive(Clone, Debug)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

impl MlpParams {
    /// `dims = [in, hidden.., out]`, hidden layers use `activation`.
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, dims: &[usize], activation: Activation, rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "mlp needs at least input and output dims");
        let mut layers = Vec::new();
        for (i, pair) in dims.windows(2).enumerate() {
            let bound = 1.0 / (pair[0] as f32).sqrt();
            let weight = store.add_uniform(format!("{prefix}.{i}.weight"), &[pair[0], pair[1]], bound, rng);
            let bias = store.add_zeros(format!("{prefix}.{i}.bias"), &[1, pair[1]]);
            let act = if i + 2 == dims.len() { Activation::Identity } else { activation };
            layers.push(Dense { weight, bias, activation: act });
        }
        Self { layers }
    }

    pub fn input_dim(&self, store: &ParamStore) -> usize {
        store.get(self.layers[0].weight).rows()
    }

    /// Applies the layer chain to every row of `x`.
    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let mut h = x;
        for layer in &self.layers {
            let w = g.param(layer.weight);
            let b = g.param(layer.bias);
            let y = g.matmul(h, w);
            let y = g.add(y, b);
            h = match layer.activation {
                Activation::Relu => g.relu(y),
                Activation::Tanh => g.tanh(y),
                Activation::Identity => y,
            };
        }
        h
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f32]) -> Result<Vec<f32>, NnError> {
    if scores.is_empty() {
        return Err(NnError::Shape("softmax of empty vector".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(NnError::NonFinite("softmax input".into()));
    }
    let max = scores.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f32 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}
