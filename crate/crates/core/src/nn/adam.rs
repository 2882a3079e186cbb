use super::{Gradients, ParamStore};

/// Adam optimizer state with bias-corrected moments.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    step: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl AdamState {
    pub fn new(store: &ParamStore, lr: f32) -> Self {
        Self::with_betas(store, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(store: &ParamStore, lr: f32, beta1: f32, beta2: f32, eps: f32) -> Self {
        let m: Vec<Vec<f32>> = store.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        let v = m.clone();
        Self { lr, beta1, beta2, eps, step: 0, m, v }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update. Parameters without a gradient slot are left as is.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) {
        assert_eq!(grads.len(), store.len(), "adam: gradient count does not match parameter count");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for id in store.ids().collect::<Vec<_>>() {
            let Some(g) = grads.get(id) else { continue };
            let p = store.get_mut(id).data_mut();
            assert_eq!(p.len(), g.len(), "adam: gradient shape mismatch for parameter {}", id.index());
            let (m, v) = (&mut self.m[id.index()], &mut self.v[id.index()]);
            for j in 0..p.len() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}
