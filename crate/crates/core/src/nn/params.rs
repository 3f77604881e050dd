use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::array::DenseArray;
use crate::error::{Error, Result};

/// How a parameter is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    Glorot { fan_in: usize, fan_out: usize },
    Constant(f64),
}

/// Learnable arrays in a fixed slot order plus non-learnable buffers
/// (batch-norm running statistics). Names are stable across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<DenseArray>,
    index: BTreeMap<String, usize>,
    pub buffers: BTreeMap<String, Vec<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            values: Vec::new(),
            index: BTreeMap::new(),
            buffers: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn insert(&mut self, name: &str, value: DenseArray) -> usize {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        self.names.push(name.to_string());
        self.values.push(value);
        self.index.insert(name.to_string(), self.values.len() - 1);
        self.values.len() - 1
    }

    pub fn slot(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("missing parameter '{name}'")))
    }

    pub fn name(&self, slot: usize) -> &str {
        &self.names[slot]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn value(&self, slot: usize) -> &DenseArray {
        &self.values[slot]
    }

    pub fn value_mut(&mut self, slot: usize) -> &mut DenseArray {
        &mut self.values[slot]
    }

    pub fn get(&self, name: &str) -> Option<&DenseArray> {
        self.index.get(name).map(|i| &self.values[*i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut DenseArray> {
        self.index.get(name).map(|i| &mut self.values[*i])
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(DenseArray::len).sum()
    }

    /// Batch-norm parameters and attention priors carry no weight decay.
    pub fn decays(&self, slot: usize) -> bool {
        let n = &self.names[slot];
        !(n.ends_with(".gamma") || n.ends_with(".beta") || n.ends_with(".mu"))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(DenseArray::all_finite)
    }
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

/// Collects parameter declarations and draws them in declaration order from
/// one seeded stream.
pub struct ParamBuilder {
    store: ParamStore,
    rng: ChaCha8Rng,
}

impl ParamBuilder {
    pub fn new(seed: u64) -> Self {
        Self {
            store: ParamStore::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn add(&mut self, name: &str, rows: usize, cols: usize, init: Init) -> usize {
        let value = match init {
            Init::Constant(c) => DenseArray::filled(rows, cols, c),
            Init::Glorot { fan_in, fan_out } => {
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let rng = &mut self.rng;
                DenseArray::from_fn(rows, cols, |_, _| rng.gen_range(-a..=a))
            }
        };
        self.store.insert(name, value)
    }

    pub fn glorot(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        self.add(name, rows, cols, Init::Glorot { fan_in: rows, fan_out: cols })
    }

    pub fn buffer(&mut self, name: &str, value: Vec<f64>) {
        self.store.buffers.insert(name.to_string(), value);
    }

    pub fn finish(self) -> ParamStore {
        self.store
    }
}
