use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Handle to one named array inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Parameter values, indexable by [`ParamId`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Values(Vec<Vec<f64>>);

/// Gradient buffers, one per parameter and of identical length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grads(Vec<Vec<f64>>);

impl Index<ParamId> for Values {
    type Output = [f64];
    fn index(&self, id: ParamId) -> &[f64] {
        &self.0[id.0]
    }
}

impl Index<ParamId> for Grads {
    type Output = [f64];
    fn index(&self, id: ParamId) -> &[f64] {
        &self.0[id.0]
    }
}

impl IndexMut<ParamId> for Grads {
    fn index_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.0[id.0]
    }
}

impl Grads {
    /// Zeroed buffers with the same layout as `values`.
    pub fn zeros_like(values: &Values) -> Self {
        Grads(values.0.iter().map(|v| vec![0.0; v.len()]).collect())
    }

    pub fn add_scaled(&mut self, other: &Grads, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn zero(&mut self) {
        for g in &mut self.0 {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    name: String,
    shape: Vec<usize>,
}

/// Named flat parameter arrays, each with a shape and a paired gradient
/// buffer. Names are unique within a store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<Entry>,
    values: Values,
    grads: Grads,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, shape: &[usize], values: Vec<f64>) -> Result<ParamId> {
        if self.find(name).is_some() {
            return Err(Error::DuplicateParam(name.to_string()));
        }
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                context: "parameter shape",
                expected: len,
                actual: values.len(),
            });
        }
        let id = ParamId(self.entries.len());
        self.entries.push(Entry {
            name: name.to_string(),
            shape: shape.to_vec(),
        });
        self.grads.0.push(vec![0.0; values.len()]);
        self.values.0.push(values);
        Ok(id)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        &self.entries[id.0].shape
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.0.iter().map(Vec::len).sum()
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn grads(&self) -> &Grads {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut Grads {
        &mut self.grads
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.values[id]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.values.0[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.grads[id]
    }

    /// Values for reading and gradients for writing at the same time.
    pub fn split(&mut self) -> (&Values, &mut Grads) {
        (&self.values, &mut self.grads)
    }

    pub fn zero_grads(&mut self) {
        self.grads.zero();
    }

    /// Replace the values of a named parameter, keeping its shape.
    pub fn set_values(&mut self, name: &str, values: &[f64]) -> Result<()> {
        let id = self
            .find(name)
            .ok_or_else(|| Error::UnknownParam(name.to_string()))?;
        let dst = &mut self.values.0[id.0];
        if dst.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "parameter values",
                expected: dst.len(),
                actual: values.len(),
            });
        }
        dst.copy_from_slice(values);
        Ok(())
    }

    /// `(name, shape, values)` in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize], &[f64])> {
        self.entries
            .iter()
            .zip(&self.values.0)
            .map(|(e, v)| (e.name.as_str(), e.shape.as_slice(), v.as_slice()))
    }
}
