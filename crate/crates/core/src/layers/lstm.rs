use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::glorot;
use crate::numcore::{gemv_acc, gemv_t_acc, outer_acc, sigmoid, Grads, ParamId, ParamStore, Rng, Values};
use crate::{Error, Result};

/// Forget-gate LSTM cell without peepholes.
///
/// Gate rows are stacked in the order input, forget, candidate, output:
/// `w_ih` is `4H x input_dim`, `w_hh` is `4H x H`, `bias` is `4H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmCell {
    input_dim: usize,
    hidden: usize,
    w_ih: ParamId,
    w_hh: ParamId,
    bias: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().chain(&self.c).all(|v| v.is_finite())
    }
}

/// Everything the backward pass needs from one step.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// post-activation gates, same stacking as the weights
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmCell {
    /// Register a freshly initialised cell under `prefix` in `store`.
    /// Forget-gate bias starts at 1, all other biases at 0.
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::InvalidConfig("LSTM dimensions must be positive".into()));
        }
        let w_ih = glorot(rng, input_dim, hidden, 4 * hidden * input_dim);
        let w_hh = glorot(rng, hidden, hidden, 4 * hidden * hidden);
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].iter_mut().for_each(|b| *b = 1.0);
        Ok(LstmCell {
            input_dim,
            hidden,
            w_ih: store.add(&format!("{prefix}.w_ih"), &[4 * hidden, input_dim], w_ih)?,
            w_hh: store.add(&format!("{prefix}.w_hh"), &[4 * hidden, hidden], w_hh)?,
            bias: store.add(&format!("{prefix}.bias"), &[4 * hidden], bias)?,
        })
    }

    /// Rebind to parameters already present in `store` (e.g. after loading).
    pub fn bind(store: &ParamStore, prefix: &str) -> Result<Self> {
        let w_ih = find(store, &format!("{prefix}.w_ih"))?;
        let w_hh = find(store, &format!("{prefix}.w_hh"))?;
        let bias = find(store, &format!("{prefix}.bias"))?;
        let shape = store.shape(w_ih);
        if shape.len() != 2 || !shape[0].is_multiple_of(4) {
            return Err(Error::MalformedCheckpoint(format!("{prefix}.w_ih shape")));
        }
        let hidden = shape[0] / 4;
        let input_dim = shape[1];
        if store.value(w_hh).len() != 4 * hidden * hidden || store.value(bias).len() != 4 * hidden {
            return Err(Error::MalformedCheckpoint(format!("{prefix} shapes disagree")));
        }
        Ok(LstmCell {
            input_dim,
            hidden,
            w_ih,
            w_hh,
            bias,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// `4 (H * input_dim + H^2 + H)`.
    pub fn param_count(&self) -> usize {
        Self::count_for(self.input_dim, self.hidden)
    }

    pub fn count_for(input_dim: usize, hidden: usize) -> usize {
        4 * (hidden * input_dim + hidden * hidden + hidden)
    }

    pub fn step(&self, p: &Values, x: &[f64], state: &LstmState) -> Result<LstmState> {
        self.step_cached(p, x, state).map(|(s, _)| s)
    }

    pub fn step_cached(
        &self,
        p: &Values,
        x: &[f64],
        state: &LstmState,
    ) -> Result<(LstmState, LstmStepCache)> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "LSTM input",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        if state.h.len() != self.hidden || state.c.len() != self.hidden {
            return Err(Error::DimensionMismatch {
                context: "LSTM state",
                expected: self.hidden,
                actual: state.h.len(),
            });
        }
        let h = self.hidden;
        let mut a = p[self.bias].to_vec();
        gemv_acc(&p[self.w_ih], 4 * h, self.input_dim, x, &mut a);
        gemv_acc(&p[self.w_hh], 4 * h, h, &state.h, &mut a);
        for (j, v) in a.iter_mut().enumerate() {
            *v = if (2 * h..3 * h).contains(&j) {
                libm::tanh(*v)
            } else {
                sigmoid(*v)
            };
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut hn = vec![0.0; h];
        for j in 0..h {
            c[j] = a[h + j] * state.c[j] + a[j] * a[2 * h + j];
            tanh_c[j] = libm::tanh(c[j]);
            hn[j] = a[3 * h + j] * tanh_c[j];
        }
        let cache = LstmStepCache {
            x: x.to_vec(),
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            gates: a,
            tanh_c,
        };
        Ok((LstmState { h: hn, c }, cache))
    }

    /// Backward through one step given `dL/dh'` and `dL/dc'` (the latter is
    /// the gradient arriving from the following step's cell state).
    /// Accumulates weight gradients into `g` and returns
    /// `(dL/dx, dL/dh, dL/dc)` for the step's inputs.
    pub fn step_backward(
        &self,
        p: &Values,
        g: &mut Grads,
        cache: &LstmStepCache,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let h = self.hidden;
        let gates = &cache.gates;
        let mut da = vec![0.0; 4 * h];
        let mut dc_prev = vec![0.0; h];
        for j in 0..h {
            let (i, f, gg, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = cache.tanh_c[j];
            let dct = dc[j] + dh[j] * o * (1.0 - tc * tc);
            da[j] = dct * gg * i * (1.0 - i);
            da[h + j] = dct * cache.c_prev[j] * f * (1.0 - f);
            da[2 * h + j] = dct * i * (1.0 - gg * gg);
            da[3 * h + j] = dh[j] * tc * o * (1.0 - o);
            dc_prev[j] = dct * f;
        }
        outer_acc(&mut g[self.w_ih], &da, &cache.x);
        outer_acc(&mut g[self.w_hh], &da, &cache.h_prev);
        for (b, d) in g[self.bias].iter_mut().zip(&da) {
            *b += d;
        }
        let mut dx = vec![0.0; self.input_dim];
        gemv_t_acc(&p[self.w_ih], 4 * h, self.input_dim, &da, &mut dx);
        let mut dh_prev = vec![0.0; h];
        gemv_t_acc(&p[self.w_hh], 4 * h, h, &da, &mut dh_prev);
        (dx, dh_prev, dc_prev)
    }
}

fn find(store: &ParamStore, name: &str) -> Result<ParamId> {
    store
        .find(name)
        .ok_or_else(|| Error::UnknownParam(name.into()))
}
