use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::plan::{plan_segments, SegmentationPlan};
use crate::layers::{Dense, LstmCell, LstmState, LstmStepCache, RbfCache, RbfLayer};
use crate::numcore::{gemv_acc, outer_acc, Grads, HasParams, Matrix, ParamId, ParamStore, Rng, Values};
use crate::{Error, Result};

/// Which network maps a history to its next frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastMode {
    /// Shared scalar LSTM over the time-major flattened sub-vector history;
    /// state is carried across all `t * D` scalars.
    Flattened,
    /// Shared scalar LSTM run independently over each coordinate's history.
    PerChannel,
    /// A single `D x D` matrix applied to the last sub-vector.
    Linear,
    /// Conventional LSTM over whole `d`-dimensional frames.
    Vanilla,
}

impl ForecastMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ForecastMode::Flattened => "flattened",
            ForecastMode::PerChannel => "per_channel",
            ForecastMode::Linear => "linear",
            ForecastMode::Vanilla => "vanilla",
        }
    }
}

impl fmt::Display for ForecastMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForecastMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flattened" => Ok(ForecastMode::Flattened),
            "per_channel" | "per-channel" => Ok(ForecastMode::PerChannel),
            "linear" => Ok(ForecastMode::Linear),
            "vanilla" | "vanilla_lstm" => Ok(ForecastMode::Vanilla),
            other => Err(Error::InvalidConfig(alloc::format!("unknown forecaster mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutKind {
    Linear,
    Rbf,
}

impl ReadoutKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReadoutKind::Linear => "linear",
            ReadoutKind::Rbf => "rbf",
        }
    }
}

impl fmt::Display for ReadoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReadoutKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ReadoutKind::Linear),
            "rbf" => Ok(ReadoutKind::Rbf),
            other => Err(Error::InvalidConfig(alloc::format!("unknown readout `{other}`"))),
        }
    }
}

/// Shape of a forecaster. For [`ForecastMode::Vanilla`] the step and
/// stride are forced to `feature_dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecasterConfig {
    pub mode: ForecastMode,
    pub readout: ReadoutKind,
    pub feature_dim: usize,
    pub step: usize,
    pub stride: usize,
    pub hidden: usize,
    pub kernels: usize,
    pub horizon: usize,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        ForecasterConfig {
            mode: ForecastMode::Flattened,
            readout: ReadoutKind::Rbf,
            feature_dim: 2048,
            step: 128,
            stride: 64,
            hidden: 4,
            kernels: 6,
            horizon: 1,
        }
    }
}

impl ForecasterConfig {
    fn plan(&self) -> Result<SegmentationPlan> {
        match self.mode {
            ForecastMode::Vanilla => plan_segments(self.feature_dim, self.feature_dim, self.feature_dim),
            _ => plan_segments(self.feature_dim, self.step, self.stride),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Readout {
    Linear(Dense),
    Rbf(RbfLayer),
}

#[derive(Debug, Clone)]
enum ReadoutCache {
    Linear(Vec<f64>),
    Rbf(RbfCache),
}

impl Readout {
    fn forward(&self, p: &Values, h: &[f64]) -> Result<(Vec<f64>, ReadoutCache)> {
        match self {
            Readout::Linear(d) => Ok((d.forward(p, h)?, ReadoutCache::Linear(h.to_vec()))),
            Readout::Rbf(r) => {
                let (out, cache) = r.forward(p, h)?;
                Ok((out, ReadoutCache::Rbf(cache)))
            }
        }
    }

    fn backward(&self, p: &Values, g: &mut Grads, cache: &ReadoutCache, dout: &[f64]) -> Vec<f64> {
        match (self, cache) {
            (Readout::Linear(d), ReadoutCache::Linear(h)) => d.backward(p, g, h, dout),
            (Readout::Rbf(r), ReadoutCache::Rbf(c)) => r.backward(p, g, c, dout),
            _ => unreachable!("readout cache kind matches readout"),
        }
    }

    fn param_count(&self) -> usize {
        match self {
            Readout::Linear(d) => d.param_count(),
            Readout::Rbf(r) => r.param_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Net {
    Recurrent { cell: LstmCell, readout: Readout },
    Linear { weight: ParamId },
}

/// Exact stored-parameter counts plus the closed-form approximation the
/// method is usually quoted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub cell: usize,
    pub readout: usize,
    pub total: usize,
    /// `4(H + 1)` for the scalar LSTM, `4(dH + d^2)` for the vanilla LSTM,
    /// `D^2` for the linear baseline.
    pub quoted_formula: usize,
}

/// Intermediate values of one sub-vector forecast, kept for the backward
/// pass.
#[derive(Debug, Clone)]
pub struct SegmentTrace {
    kind: TraceKind,
}

#[derive(Debug, Clone)]
enum TraceKind {
    /// steps over the whole scalar stream; readouts of the last `D` steps
    Flattened {
        steps: Vec<LstmStepCache>,
        readouts: Vec<ReadoutCache>,
    },
    PerChannel {
        channels: Vec<(Vec<LstmStepCache>, ReadoutCache)>,
    },
    Vanilla {
        steps: Vec<LstmStepCache>,
        readout: ReadoutCache,
    },
    Linear {
        x: Vec<f64>,
    },
}

/// A trained or freshly initialised next-frame feature forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterModel {
    config: ForecasterConfig,
    plan: SegmentationPlan,
    net: Net,
    params: ParamStore,
}

impl HasParams for ForecasterModel {
    fn params(&self) -> &ParamStore {
        &self.params
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }
}

impl ForecasterModel {
    pub fn new(config: ForecasterConfig, rng: &mut Rng) -> Result<Self> {
        if config.horizon == 0 {
            return Err(Error::InvalidConfig("prediction horizon k must be >= 1".into()));
        }
        if config.hidden == 0 {
            return Err(Error::InvalidConfig("hidden size must be positive".into()));
        }
        let mut config = config;
        if config.mode == ForecastMode::Vanilla {
            config.step = config.feature_dim;
            config.stride = config.feature_dim;
        }
        let plan = config.plan()?;
        let mut params = ParamStore::new();
        let net = match config.mode {
            ForecastMode::Linear => {
                let d = config.step;
                let w = crate::layers::glorot(rng, d, d, d * d);
                Net::Linear {
                    weight: params.add("linear.weight", &[d, d], w)?,
                }
            }
            mode => {
                let (input, out) = if mode == ForecastMode::Vanilla {
                    (config.feature_dim, config.feature_dim)
                } else {
                    (1, 1)
                };
                let cell = LstmCell::new(&mut params, "cell", input, config.hidden, rng)?;
                let readout = match config.readout {
                    ReadoutKind::Linear => {
                        Readout::Linear(Dense::new(&mut params, "readout", config.hidden, out, rng)?)
                    }
                    ReadoutKind::Rbf => Readout::Rbf(RbfLayer::new(
                        &mut params,
                        "readout",
                        config.kernels,
                        config.hidden,
                        out,
                        rng,
                    )?),
                };
                Net::Recurrent { cell, readout }
            }
        };
        Ok(ForecasterModel {
            config,
            plan,
            net,
            params,
        })
    }

    /// Rebuild a model around existing parameters (e.g. from a checkpoint).
    /// The config must agree with the stored shapes.
    pub fn from_params(config: ForecasterConfig, params: ParamStore) -> Result<Self> {
        let mut fresh = ForecasterModel::new(config, &mut Rng::new(0))?;
        if fresh.params.len() != params.len() {
            return Err(Error::MalformedCheckpoint("parameter table does not match config".into()));
        }
        for (name, shape, values) in params.iter() {
            let id = fresh
                .params
                .find(name)
                .ok_or_else(|| Error::MalformedCheckpoint(alloc::format!("unexpected parameter `{name}`")))?;
            if fresh.params.shape(id) != shape {
                return Err(Error::MalformedCheckpoint(alloc::format!("shape of `{name}`")));
            }
            fresh.params.set_values(name, values)?;
        }
        Ok(fresh)
    }

    pub fn config(&self) -> &ForecasterConfig {
        &self.config
    }

    pub fn plan(&self) -> &SegmentationPlan {
        &self.plan
    }

    pub fn mode(&self) -> ForecastMode {
        self.config.mode
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn readout(&self) -> Option<&Readout> {
        match &self.net {
            Net::Recurrent { readout, .. } => Some(readout),
            Net::Linear { .. } => None,
        }
    }

    pub fn cell(&self) -> Option<&LstmCell> {
        match &self.net {
            Net::Recurrent { cell, .. } => Some(cell),
            Net::Linear { .. } => None,
        }
    }

    pub fn param_count(&self) -> ParamCount {
        let total = self.params.scalar_count();
        match &self.net {
            Net::Recurrent { cell, readout } => {
                let h = self.config.hidden;
                let quoted_formula = if self.config.mode == ForecastMode::Vanilla {
                    let d = self.config.feature_dim;
                    4 * (d * h + d * d)
                } else {
                    4 * (h + 1)
                };
                ParamCount {
                    cell: cell.param_count(),
                    readout: readout.param_count(),
                    total,
                    quoted_formula,
                }
            }
            Net::Linear { .. } => ParamCount {
                cell: 0,
                readout: total,
                total,
                quoted_formula: self.config.step * self.config.step,
            },
        }
    }

    /// Width of one forecasting unit: `D`, or `d` for the vanilla LSTM.
    pub fn unit_width(&self) -> usize {
        self.plan.step()
    }

    /// Predict sub-vector `t + k` from a `t x D` history (for the vanilla
    /// LSTM the history is `t x d`).
    pub fn forecast_subvector(&self, history: &Matrix) -> Result<Vec<f64>> {
        self.check_history(history)?;
        let p = self.params.values();
        match (&self.net, self.config.mode) {
            (Net::Linear { weight }, _) => Ok(self.linear_apply(p, *weight, history)),
            (Net::Recurrent { cell, readout }, ForecastMode::Flattened) => {
                let d = history.cols();
                let scalars = history.as_slice();
                let tail = scalars.len() - d;
                let mut state = LstmState::zeros(cell.hidden());
                let mut out = Vec::with_capacity(d);
                for (i, &x) in scalars.iter().enumerate() {
                    state = cell.step(p, &[x], &state)?;
                    if i >= tail {
                        out.push(readout.forward(p, &state.h)?.0[0]);
                    }
                }
                Ok(out)
            }
            (Net::Recurrent { cell, readout }, ForecastMode::PerChannel) => (0..history.cols())
                .map(|l| {
                    let mut state = LstmState::zeros(cell.hidden());
                    for r in 0..history.rows() {
                        state = cell.step(p, &[history.get(r, l)], &state)?;
                    }
                    Ok(readout.forward(p, &state.h)?.0[0])
                })
                .collect(),
            (Net::Recurrent { cell, readout }, _) => {
                let mut state = LstmState::zeros(cell.hidden());
                for row in history.iter_rows() {
                    state = cell.step(p, row, &state)?;
                }
                Ok(readout.forward(p, &state.h)?.0)
            }
        }
    }

    /// Same as [`forecast_subvector`](Self::forecast_subvector) but keeps
    /// the intermediates needed by [`segment_backward`](Self::segment_backward).
    pub fn segment_forward(&self, history: &Matrix) -> Result<(Vec<f64>, SegmentTrace)> {
        self.check_history(history)?;
        let p = self.params.values();
        let (out, kind) = match (&self.net, self.config.mode) {
            (Net::Linear { weight }, _) => (
                self.linear_apply(p, *weight, history),
                TraceKind::Linear {
                    x: history.row(history.rows() - 1).to_vec(),
                },
            ),
            (Net::Recurrent { cell, readout }, ForecastMode::Flattened) => {
                let d = history.cols();
                let scalars = history.as_slice();
                let tail = scalars.len() - d;
                let mut state = LstmState::zeros(cell.hidden());
                let mut steps = Vec::with_capacity(scalars.len());
                let mut readouts = Vec::with_capacity(d);
                let mut out = Vec::with_capacity(d);
                for (i, &x) in scalars.iter().enumerate() {
                    let (next, cache) = cell.step_cached(p, &[x], &state)?;
                    state = next;
                    steps.push(cache);
                    if i >= tail {
                        let (y, rc) = readout.forward(p, &state.h)?;
                        out.push(y[0]);
                        readouts.push(rc);
                    }
                }
                (out, TraceKind::Flattened { steps, readouts })
            }
            (Net::Recurrent { cell, readout }, ForecastMode::PerChannel) => {
                let mut out = Vec::with_capacity(history.cols());
                let mut channels = Vec::with_capacity(history.cols());
                for l in 0..history.cols() {
                    let mut state = LstmState::zeros(cell.hidden());
                    let mut steps = Vec::with_capacity(history.rows());
                    for r in 0..history.rows() {
                        let (next, cache) = cell.step_cached(p, &[history.get(r, l)], &state)?;
                        state = next;
                        steps.push(cache);
                    }
                    let (y, rc) = readout.forward(p, &state.h)?;
                    out.push(y[0]);
                    channels.push((steps, rc));
                }
                (out, TraceKind::PerChannel { channels })
            }
            (Net::Recurrent { cell, readout }, _) => {
                let mut state = LstmState::zeros(cell.hidden());
                let mut steps = Vec::with_capacity(history.rows());
                for row in history.iter_rows() {
                    let (next, cache) = cell.step_cached(p, row, &state)?;
                    state = next;
                    steps.push(cache);
                }
                let (y, rc) = readout.forward(p, &state.h)?;
                (y, TraceKind::Vanilla { steps, readout: rc })
            }
        };
        Ok((out, SegmentTrace { kind }))
    }

    /// Accumulate parameter gradients for `dL/dprediction`.
    pub fn segment_backward(&mut self, trace: &SegmentTrace, dpred: &[f64]) {
        let (p, g) = self.params.split();
        match (&self.net, &trace.kind) {
            (Net::Linear { weight }, TraceKind::Linear { x }) => {
                outer_acc(&mut g[*weight], dpred, x);
            }
            (Net::Recurrent { cell, readout }, TraceKind::Flattened { steps, readouts }) => {
                let tail = steps.len() - readouts.len();
                let h = cell.hidden();
                let mut dh = vec![0.0; h];
                let mut dc = vec![0.0; h];
                for i in (0..steps.len()).rev() {
                    if i >= tail {
                        let l = i - tail;
                        let dr = readout.backward(p, g, &readouts[l], &dpred[l..l + 1]);
                        for (a, b) in dh.iter_mut().zip(dr) {
                            *a += b;
                        }
                    }
                    let (_, dhp, dcp) = cell.step_backward(p, g, &steps[i], &dh, &dc);
                    dh = dhp;
                    dc = dcp;
                }
            }
            (Net::Recurrent { cell, readout }, TraceKind::PerChannel { channels }) => {
                for ((steps, rc), d) in channels.iter().zip(dpred) {
                    let dh0 = readout.backward(p, g, rc, &[*d]);
                    bptt(cell, p, g, steps, dh0);
                }
            }
            (Net::Recurrent { cell, readout }, TraceKind::Vanilla { steps, readout: rc }) => {
                let dh0 = readout.backward(p, g, rc, dpred);
                bptt(cell, p, g, steps, dh0);
            }
            _ => unreachable!("trace produced by this model"),
        }
    }

    /// Predict frame `t + k` from a `t x d` history: every segment is
    /// forecast independently and overlapping coordinates are averaged.
    pub fn forecast_frame(&self, history: &Matrix) -> Result<Vec<f64>> {
        if history.rows() == 0 {
            return Err(Error::Empty("forecast history"));
        }
        if history.cols() != self.plan.dim() {
            return Err(Error::DimensionMismatch {
                context: "history width",
                expected: self.plan.dim(),
                actual: history.cols(),
            });
        }
        let segments = self
            .plan
            .offsets()
            .iter()
            .map(|&o| self.forecast_subvector(&history.column_block(history.rows(), o, self.plan.step())))
            .collect::<Result<Vec<_>>>()?;
        self.plan.merge(&segments)
    }

    /// Recursive rollout: append `steps` forecast frames, each conditioned
    /// on everything before it (including earlier generated frames).
    pub fn generate_future(&self, observed: &Matrix, steps: usize) -> Result<Matrix> {
        if observed.rows() == 0 {
            return Err(Error::Empty("observed frames"));
        }
        if steps > 0 && self.config.horizon != 1 {
            return Err(Error::HorizonNotOne(self.config.horizon));
        }
        let mut frames = observed.clone();
        for _ in 0..steps {
            let next = self.forecast_frame(&frames)?;
            frames.push_row(&next)?;
        }
        Ok(frames)
    }

    fn check_history(&self, history: &Matrix) -> Result<()> {
        if history.rows() == 0 {
            return Err(Error::Empty("forecast history"));
        }
        if history.cols() != self.plan.step() {
            return Err(Error::DimensionMismatch {
                context: "sub-vector width",
                expected: self.plan.step(),
                actual: history.cols(),
            });
        }
        Ok(())
    }

    fn linear_apply(&self, p: &Values, weight: ParamId, history: &Matrix) -> Vec<f64> {
        let d = self.plan.step();
        let mut y = vec![0.0; d];
        gemv_acc(&p[weight], d, d, history.row(history.rows() - 1), &mut y);
        y
    }

    /// Human-readable one-line summary.
    pub fn describe(&self) -> String {
        alloc::format!(
            "{} forecaster ({} readout), d={} D={} S={} H={} n={} k={}",
            self.config.mode,
            self.config.readout,
            self.config.feature_dim,
            self.config.step,
            self.config.stride,
            self.config.hidden,
            self.config.kernels,
            self.config.horizon
        )
    }
}

/// Backpropagate through a run of cached steps, with gradient only on the
/// final hidden state.
fn bptt(cell: &LstmCell, p: &Values, g: &mut Grads, steps: &[LstmStepCache], dh_last: Vec<f64>) {
    let mut dh = dh_last;
    let mut dc = vec![0.0; cell.hidden()];
    for cache in steps.iter().rev() {
        let (_, dhp, dcp) = cell.step_backward(p, g, cache, &dh, &dc);
        dh = dhp;
        dc = dcp;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::l2_loss;
    use crate::numcore::{check_points, grad_check};

    fn cfg(mode: ForecastMode, readout: ReadoutKind) -> ForecasterConfig {
        ForecasterConfig {
            mode,
            readout,
            feature_dim: 8,
            step: 4,
            stride: 2,
            hidden: 3,
            kernels: 3,
            horizon: 1,
        }
    }

    fn zeroed(mut m: ForecasterModel) -> ForecasterModel {
        for id in m.params.ids().collect::<Vec<_>>() {
            m.params.value_mut(id).iter_mut().for_each(|v| *v = 0.0);
        }
        m
    }

    fn random_history(rows: usize, cols: usize, seed: u64) -> Matrix {
        Matrix::from_vec(rows, cols, Rng::new(seed).gaussian_vec(rows * cols)).unwrap()
    }

    #[test]
    fn zero_model_predicts_zero() {
        for mode in [ForecastMode::Flattened, ForecastMode::PerChannel] {
            let m = zeroed(ForecasterModel::new(cfg(mode, ReadoutKind::Linear), &mut Rng::new(1)).unwrap());
            let out = m.forecast_subvector(&random_history(3, 4, 2)).unwrap();
            assert_eq!(out, vec![0.0; 4]);
        }
    }

    #[test]
    fn rbf_constant_readout() {
        let mut m = zeroed(ForecasterModel::new(cfg(ForecastMode::Flattened, ReadoutKind::Rbf), &mut Rng::new(1)).unwrap());
        let coeffs = m.params.find("readout.coeffs").unwrap();
        m.params.value_mut(coeffs).copy_from_slice(&[1.75, 0.0, 0.0]);
        // remaining kernels sit at the origin too; give them zero weight
        let out = m.forecast_subvector(&random_history(2, 4, 3)).unwrap();
        assert_eq!(out, vec![1.75; 4]);
    }

    #[test]
    fn flattened_and_per_channel_differ() {
        let c1 = cfg(ForecastMode::Flattened, ReadoutKind::Linear);
        let c2 = cfg(ForecastMode::PerChannel, ReadoutKind::Linear);
        let a = ForecasterModel::new(c1, &mut Rng::new(9)).unwrap();
        let b = ForecasterModel::from_params(c2, a.params.clone()).unwrap();
        let h = random_history(3, 4, 4);
        let ya = a.forecast_subvector(&h).unwrap();
        let yb = b.forecast_subvector(&h).unwrap();
        assert_ne!(ya, yb);
        // with a single frame the first coordinate sees the same input
        // stream in both modes
        let h1 = random_history(1, 4, 5);
        assert_eq!(a.forecast_subvector(&h1).unwrap()[0], b.forecast_subvector(&h1).unwrap()[0]);
    }

    #[test]
    fn traced_forward_matches_plain_forward() {
        for mode in [ForecastMode::Flattened, ForecastMode::PerChannel, ForecastMode::Linear, ForecastMode::Vanilla] {
            let m = ForecasterModel::new(cfg(mode, ReadoutKind::Rbf), &mut Rng::new(3)).unwrap();
            let h = random_history(3, m.unit_width(), 6);
            assert_eq!(m.forecast_subvector(&h).unwrap(), m.segment_forward(&h).unwrap().0, "{mode}");
        }
    }

    #[test]
    fn per_channel_coordinates_are_independent() {
        let m = ForecasterModel::new(cfg(ForecastMode::PerChannel, ReadoutKind::Rbf), &mut Rng::new(3)).unwrap();
        let h = random_history(4, 4, 7);
        let base = m.forecast_subvector(&h).unwrap();
        let mut h2 = h.clone();
        for r in 0..4 {
            for c in [0, 2, 3] {
                h2.set(r, c, h2.get(r, c) + 0.5);
            }
        }
        let moved = m.forecast_subvector(&h2).unwrap();
        assert_eq!(base[1], moved[1]);
        assert_ne!(base[0], moved[0]);
    }

    #[test]
    fn parameter_counts() {
        let mut c = ForecasterConfig {
            mode: ForecastMode::Flattened,
            readout: ReadoutKind::Linear,
            feature_dim: 128,
            step: 128,
            stride: 128,
            hidden: 4,
            kernels: 6,
            horizon: 1,
        };
        let small = ForecasterModel::new(c, &mut Rng::new(0)).unwrap().param_count();
        assert_eq!(small.cell, 96);
        assert_eq!(small.readout, 5);
        assert_eq!(small.total, 101);
        assert_eq!(small.quoted_formula, 20);
        c.feature_dim = 2048;
        c.stride = 64;
        let big = ForecasterModel::new(c, &mut Rng::new(0)).unwrap().param_count();
        assert_eq!(big, small);
    }

    #[test]
    fn rollout_contract() {
        let m = ForecasterModel::new(cfg(ForecastMode::Flattened, ReadoutKind::Rbf), &mut Rng::new(2)).unwrap();
        let x = random_history(3, 8, 8);
        assert_eq!(m.generate_future(&x, 0).unwrap(), x);
        let three = m.generate_future(&x, 3).unwrap();
        assert_eq!(three.rows(), 6);
        assert!(three.is_finite());
        assert_eq!(three.head(3), x);
        let one = m.generate_future(&x, 1).unwrap();
        let two = m.generate_future(&x, 2).unwrap();
        assert_eq!(two.row(4), m.forecast_frame(&one).unwrap().as_slice());

        let mut k2 = cfg(ForecastMode::Flattened, ReadoutKind::Rbf);
        k2.horizon = 2;
        let m2 = ForecasterModel::new(k2, &mut Rng::new(2)).unwrap();
        assert_eq!(m2.generate_future(&x, 1), Err(Error::HorizonNotOne(2)));
        assert!(m2.generate_future(&x, 0).is_ok());
    }

    #[test]
    fn history_width_checked() {
        let m = ForecasterModel::new(cfg(ForecastMode::Flattened, ReadoutKind::Rbf), &mut Rng::new(2)).unwrap();
        assert!(m.forecast_frame(&random_history(2, 7, 1)).is_err());
        assert!(m.forecast_subvector(&random_history(2, 3, 1)).is_err());
    }

    #[test]
    fn gradients_all_modes() {
        for mode in [ForecastMode::Flattened, ForecastMode::PerChannel, ForecastMode::Linear, ForecastMode::Vanilla] {
            for readout in [ReadoutKind::Linear, ReadoutKind::Rbf] {
                let summary = check_points(5, 20, 1e-5, |seed| {
                    let mut m = ForecasterModel::new(cfg(mode, readout), &mut Rng::new(seed))?;
                    let h = random_history(3, m.unit_width(), 100 + seed);
                    let target = Rng::new(200 + seed).gaussian_vec(m.unit_width());
                    grad_check(&mut m, 1e-5, |m| {
                        let (pred, trace) = m.segment_forward(&h)?;
                        let n = pred.len() as f64;
                        let d: Vec<f64> = pred.iter().zip(&target).map(|(p, t)| 2.0 * (p - t) / n).collect();
                        m.segment_backward(&trace, &d);
                        l2_loss(&target, &pred)
                    })
                })
                .unwrap();
                assert!(summary.worst.max_rel_error < 1e-4, "{mode}/{readout}: {summary:?}");
            }
        }
    }
}
