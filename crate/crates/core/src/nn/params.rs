use std::collections::HashMap;

use rand::Rng;

use super::{NnError, Tensor};

/// Handle to a tensor registered in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named collection of trainable tensors.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `tensor` under `name`. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter name {name}");
        let id = ParamId(self.tensors.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(tensor);
        id
    }

    /// Registers a tensor filled from `uniform(-bound, bound)`.
    pub fn add_uniform<R: Rng>(&mut self, name: impl Into<String>, shape: &[usize], bound: f32, rng: &mut R) -> ParamId {
        let mut t = Tensor::zeros(shape);
        for v in t.data_mut() {
            *v = rng.gen_range(-bound..=bound);
        }
        self.add(name, t)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::zeros(shape))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Copies values from `other` for every name present in both stores.
    pub fn copy_from(&mut self, other: &ParamStore) -> Result<usize, NnError> {
        let mut copied = 0;
        for (name, t) in other.iter() {
            if let Some(id) = self.id(name) {
                let dst = self.get_mut(id);
                if dst.shape() != t.shape() {
                    return Err(NnError::Shape(format!(
                        "parameter {name}: have {:?}, loading {:?}",
                        dst.shape(),
                        t.shape()
                    )));
                }
                dst.data_mut().copy_from_slice(t.data());
                copied += 1;
            }
        }
        Ok(copied)
    }
}

/// Dense gradient buffers, one optional slot per parameter.
#[derive(Clone, Debug)]
pub struct Gradients {
    slots: Vec<Option<Vec<f32>>>,
}

impl Gradients {
    pub fn new(num_params: usize) -> Self {
        Self { slots: vec![None; num_params] }
    }

    pub fn get(&self, id: ParamId) -> Option<&[f32]> {
        self.slots.get(id.0).and_then(|s| s.as_deref())
    }

    pub fn slot_mut(&mut self, id: ParamId, len: usize) -> &mut [f32] {
        self.slots[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, g: &[f32]) {
        let slot = self.slot_mut(id, g.len());
        for (s, v) in slot.iter_mut().zip(g) {
            *s += v;
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Adds `other` into `self` slot by slot.
    pub fn merge(&mut self, other: &Gradients) {
        for (i, g) in other.slots.iter().enumerate() {
            if let Some(g) = g {
                self.accumulate(ParamId(i), g);
            }
        }
    }

    pub fn scale(&mut self, factor: f32) {
        for g in self.slots.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn global_norm(&self) -> f32 {
        self.slots
            .iter()
            .flatten()
            .flat_map(|g| g.iter())
            .map(|v| (*v as f64) * (*v as f64))
            .sum::<f64>()
            .sqrt() as f32
    }

    /// Rescales all gradients so their global L2 norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f32) -> f32 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn all_finite(&self) -> bool {
        self.slots.iter().flatten().all(|g| g.iter().all(|v| v.is_finite()))
    }
}
