use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::glorot;
use crate::numcore::{gemv_acc, gemv_t_acc, outer_acc, Grads, ParamId, ParamStore, Rng, Values};
use crate::{Error, Result};

/// Affine map `y = W x + b` with `W` stored `out x in`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dense {
    input_dim: usize,
    output_dim: usize,
    weight: ParamId,
    bias: ParamId,
}

impl Dense {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        output_dim: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        let w = glorot(rng, input_dim, output_dim, input_dim * output_dim);
        Ok(Dense {
            input_dim,
            output_dim,
            weight: store.add(&format!("{prefix}.weight"), &[output_dim, input_dim], w)?,
            bias: store.add(&format!("{prefix}.bias"), &[output_dim], vec![0.0; output_dim])?,
        })
    }

    pub fn bind(store: &ParamStore, prefix: &str) -> Result<Self> {
        let wn = format!("{prefix}.weight");
        let bn = format!("{prefix}.bias");
        let weight = store.find(&wn).ok_or(Error::UnknownParam(wn))?;
        let bias = store.find(&bn).ok_or(Error::UnknownParam(bn))?;
        let shape = store.shape(weight);
        if shape.len() != 2 || store.value(bias).len() != shape[0] {
            return Err(Error::MalformedCheckpoint(format!("{prefix} shapes disagree")));
        }
        Ok(Dense {
            input_dim: shape[1],
            output_dim: shape[0],
            weight,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn weight(&self) -> ParamId {
        self.weight
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }

    pub fn param_count(&self) -> usize {
        self.output_dim * (self.input_dim + 1)
    }

    pub fn forward(&self, p: &Values, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "dense input",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        let mut y = p[self.bias].to_vec();
        gemv_acc(&p[self.weight], self.output_dim, self.input_dim, x, &mut y);
        Ok(y)
    }

    /// Accumulate parameter gradients, return `dL/dx`.
    pub fn backward(&self, p: &Values, g: &mut Grads, x: &[f64], dy: &[f64]) -> Vec<f64> {
        outer_acc(&mut g[self.weight], dy, x);
        for (b, d) in g[self.bias].iter_mut().zip(dy) {
            *b += d;
        }
        let mut dx = vec![0.0; self.input_dim];
        gemv_t_acc(&p[self.weight], self.output_dim, self.input_dim, dy, &mut dx);
        dx
    }
}

/// Stack of dense layers with ReLU between them and an affine last layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// input of every layer
    inputs: Vec<Vec<f64>>,
    /// pre-activations of the hidden layers
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    /// `widths` lists every layer width including input and output,
    /// e.g. `[2048, 256, 128]`.
    pub fn new(store: &mut ParamStore, prefix: &str, widths: &[usize], rng: &mut Rng) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidConfig("an MLP needs at least two widths".into()));
        }
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::new(store, &format!("{prefix}.{i}"), w[0], w[1], rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Mlp { layers })
    }

    pub fn bind(store: &ParamStore, prefix: &str) -> Result<Self> {
        let mut layers = Vec::new();
        while store.find(&format!("{prefix}.{}.weight", layers.len())).is_some() {
            layers.push(Dense::bind(store, &format!("{prefix}.{}", layers.len()))?);
        }
        if layers.is_empty() {
            return Err(Error::UnknownParam(format!("{prefix}.0.weight")));
        }
        for w in layers.windows(2) {
            if w[0].output_dim != w[1].input_dim {
                return Err(Error::MalformedCheckpoint(format!("{prefix} widths do not chain")));
            }
        }
        Ok(Mlp { layers })
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].input_dim];
        w.extend(self.layers.iter().map(|l| l.output_dim));
        w
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn forward(&self, p: &Values, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len() - 1),
        };
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let y = layer.forward(p, &cur)?;
            cache.inputs.push(core::mem::take(&mut cur));
            if i < last {
                cur = y.iter().map(|&v| v.max(0.0)).collect();
                cache.pre.push(y);
            } else {
                cur = y;
            }
        }
        Ok((cur, cache))
    }

    pub fn backward(&self, p: &Values, g: &mut Grads, cache: &MlpCache, dout: &[f64]) -> Vec<f64> {
        let mut d = dout.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < self.layers.len() - 1 {
                for (dv, &z) in d.iter_mut().zip(&cache.pre[i]) {
                    if z <= 0.0 {
                        *dv = 0.0;
                    }
                }
            }
            d = self.layers[i].backward(p, g, &cache.inputs[i], &d);
        }
        d
    }
}
