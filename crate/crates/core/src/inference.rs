//! Forward evaluation for dense and factored stacks.
//!
//! The step functions take the layer's incoming pre-activation (`feed`,
//! already multiplied by the upstream matrix) rather than the raw input, so
//! the same code serves every position in the stack. For a factored layer
//! the product `P * h` is computed once per step, cached in the state, and
//! then consumed twice: by the next step's recurrence (`Z_h * (P h)`) and
//! by the outgoing feed (`Z_x * (P h)`). That single shared projection is
//! where the runtime savings of the factorization come from.
//!
//! Gated steps use the canonical gate blocks [input, forget, cell, output]
//! laid out row-wise in the stacked matrices. The input and forget gates
//! read their peepholes against the previous cell state; the output gate
//! reads the freshly updated one.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{LinalgError, Matrix};
use crate::math;
use crate::model::{CellType, LayerParams, LayerWeights, Model, ModelError};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub enum InferenceError {
    /// A vector length disagrees with the layer or model shape.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Sequences must contain at least one step to evaluate.
    EmptySequence,
    /// A gated step needs the previous cell state.
    MissingCellState,
    /// A factored layer's state must carry the cached projection.
    MissingProjection,
    Model(ModelError),
    Linalg(LinalgError),
}

impl From<ModelError> for InferenceError {
    fn from(e: ModelError) -> Self {
        InferenceError::Model(e)
    }
}

impl From<LinalgError> for InferenceError {
    fn from(e: LinalgError) -> Self {
        InferenceError::Linalg(e)
    }
}

impl core::fmt::Display for InferenceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            InferenceError::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected length {expected}, got {got}"),
            InferenceError::EmptySequence => write!(f, "sequence has no steps"),
            InferenceError::MissingCellState => write!(f, "gated step without cell state"),
            InferenceError::MissingProjection => {
                write!(f, "factored layer state lacks cached projection")
            }
            InferenceError::Model(e) => write!(f, "{e}"),
            InferenceError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for InferenceError {}

/// A time-major input sequence, `steps x dim`, row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    dim: usize,
    data: Vec<f64>,
}

impl Sequence {
    /// Wraps a row-major buffer whose length must be a multiple of `dim`.
    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self, InferenceError> {
        if dim == 0 {
            return Err(InferenceError::DimensionMismatch {
                what: "sequence dim",
                expected: 1,
                got: 0,
            });
        }
        if data.len() % dim != 0 {
            return Err(InferenceError::DimensionMismatch {
                what: "sequence buffer",
                expected: (data.len() / dim + 1) * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Reproducible uniform draws in `[-1, 1)`, rounded through f32 so the
    /// values survive the f32 sequence file encoding bit-exactly.
    pub fn generate_random(dim: usize, steps: usize, seed: u64) -> Result<Self, InferenceError> {
        let mut rng = SplitMix64::new(seed);
        let data = (0..steps * dim)
            .map(|_| rng.uniform(-1.0, 1.0) as f32 as f64)
            .collect();
        Self::from_vec(dim, data)
    }

    pub fn steps(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Input vector at time `t`. Panics if `t >= steps()`.
    pub fn step(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Recurrent state of one layer between steps.
///
/// Invariant: for a factored layer, `projected` always equals `P * hidden`
/// for the stored `hidden`; the step functions maintain it and the
/// constructors establish it. Dense layers carry no projection.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    hidden: Vec<f64>,
    cell: Option<Vec<f64>>,
    projected: Option<Vec<f64>>,
}

impl LayerState {
    /// All-zero start state for `layer` under the given cell type.
    pub fn zeros(cell: CellType, layer: &LayerWeights) -> Self {
        let n = layer.hidden_size();
        Self {
            hidden: vec![0.0; n],
            cell: match cell {
                CellType::Lstm => Some(vec![0.0; n]),
                CellType::Rnn => None,
            },
            // P * 0 = 0 exactly; no need to multiply.
            projected: layer.rank().map(|r| vec![0.0; r]),
        }
    }

    /// State with explicit contents; computes the cached projection for
    /// factored layers so the invariant holds from the start.
    pub fn from_parts(
        layer: &LayerWeights,
        hidden: Vec<f64>,
        cell: Option<Vec<f64>>,
    ) -> Result<Self, InferenceError> {
        let n = layer.hidden_size();
        if hidden.len() != n {
            return Err(InferenceError::DimensionMismatch {
                what: "hidden state",
                expected: n,
                got: hidden.len(),
            });
        }
        if let Some(c) = &cell {
            if c.len() != n {
                return Err(InferenceError::DimensionMismatch {
                    what: "cell state",
                    expected: n,
                    got: c.len(),
                });
            }
        }
        let projected = match &layer.params {
            LayerParams::Full { .. } => None,
            LayerParams::Factored { p, .. } => Some(p.matvec(&hidden)?),
        };
        Ok(Self {
            hidden,
            cell,
            projected,
        })
    }

    /// Hidden activation `m_t` (the value the layer exposes upward).
    pub fn hidden(&self) -> &[f64] {
        &self.hidden
    }

    /// Cell state `c_t` for gated layers.
    pub fn cell(&self) -> Option<&[f64]> {
        self.cell.as_deref()
    }

    /// Cached `P * hidden` for factored layers.
    pub fn projected(&self) -> Option<&[f64]> {
        self.projected.as_deref()
    }
}

/// Recurrent pre-activation contribution: `W_h * h` dense, `Z_h * (P h)`
/// factored (consuming the projection cached in `state`).
fn recurrent_feed(layer: &LayerWeights, state: &LayerState) -> Result<Vec<f64>, InferenceError> {
    match &layer.params {
        LayerParams::Full { w_h, .. } => Ok(w_h.matvec(&state.hidden)?),
        LayerParams::Factored { z_h, .. } => {
            let proj = state
                .projected
                .as_ref()
                .ok_or(InferenceError::MissingProjection)?;
            Ok(z_h.matvec(proj)?)
        }
    }
}

/// Pre-activation this layer passes to its successor: `W_x * m` dense,
/// `Z_x * (P m)` factored, reusing the projection the step already paid
/// for.
pub fn interlayer_feed(
    layer: &LayerWeights,
    state: &LayerState,
) -> Result<Vec<f64>, InferenceError> {
    match &layer.params {
        LayerParams::Full { w_x, .. } => Ok(w_x.matvec(&state.hidden)?),
        LayerParams::Factored { z_x, .. } => {
            let proj = state
                .projected
                .as_ref()
                .ok_or(InferenceError::MissingProjection)?;
            Ok(z_x.matvec(proj)?)
        }
    }
}

/// Caches `P * hidden` for the next consumer; dense layers skip it.
fn project(layer: &LayerWeights, hidden: &[f64]) -> Result<Option<Vec<f64>>, InferenceError> {
    match &layer.params {
        LayerParams::Full { .. } => Ok(None),
        LayerParams::Factored { p, .. } => Ok(Some(p.matvec(hidden)?)),
    }
}

/// One vanilla step: `h_t = tanh(feed + W_h h_prev + b)`.
pub fn rnn_step(
    layer: &LayerWeights,
    feed: &[f64],
    state: &LayerState,
) -> Result<LayerState, InferenceError> {
    let n = layer.hidden_size();
    if layer.bias.len() != n {
        return Err(InferenceError::DimensionMismatch {
            what: "vanilla step on gate-stacked layer",
            expected: n,
            got: layer.bias.len(),
        });
    }
    if feed.len() != n {
        return Err(InferenceError::DimensionMismatch {
            what: "feed",
            expected: n,
            got: feed.len(),
        });
    }
    if state.hidden.len() != n {
        return Err(InferenceError::DimensionMismatch {
            what: "hidden state",
            expected: n,
            got: state.hidden.len(),
        });
    }

    let recur = recurrent_feed(layer, state)?;
    let mut hidden = vec![0.0; n];
    for i in 0..n {
        hidden[i] = math::tanh(feed[i] + recur[i] + layer.bias[i]);
    }
    let projected = project(layer, &hidden)?;
    Ok(LayerState {
        hidden,
        cell: None,
        projected,
    })
}

/// One gated step over the stacked pre-activation
/// `a = feed + W_h m_prev + b`, split into quarters `[a_i, a_f, a_c, a_o]`:
///
/// ```text
/// i = sig(a_i + peep_i . c_prev)      f = sig(a_f + peep_f . c_prev)
/// c = f . c_prev + i . tanh(a_c)      o = sig(a_o + peep_o . c)
/// m = o . tanh(c)
/// ```
///
/// Missing peepholes contribute zero.
pub fn lstm_step(
    layer: &LayerWeights,
    feed: &[f64],
    state: &LayerState,
) -> Result<LayerState, InferenceError> {
    let n = layer.hidden_size();
    if layer.bias.len() != 4 * n {
        return Err(InferenceError::DimensionMismatch {
            what: "gated step needs a 4-gate stacked bias",
            expected: 4 * n,
            got: layer.bias.len(),
        });
    }
    if feed.len() != 4 * n {
        return Err(InferenceError::DimensionMismatch {
            what: "feed",
            expected: 4 * n,
            got: feed.len(),
        });
    }
    if state.hidden.len() != n {
        return Err(InferenceError::DimensionMismatch {
            what: "hidden state",
            expected: n,
            got: state.hidden.len(),
        });
    }
    let c_prev = state.cell.as_ref().ok_or(InferenceError::MissingCellState)?;
    if c_prev.len() != n {
        return Err(InferenceError::DimensionMismatch {
            what: "cell state",
            expected: n,
            got: c_prev.len(),
        });
    }
    if let Some(p) = &layer.peepholes {
        for v in [&p.input, &p.forget, &p.output] {
            if v.len() != n {
                return Err(InferenceError::DimensionMismatch {
                    what: "peephole",
                    expected: n,
                    got: v.len(),
                });
            }
        }
    }

    let recur = recurrent_feed(layer, state)?;
    let mut pre = vec![0.0; 4 * n];
    for i in 0..4 * n {
        pre[i] = feed[i] + recur[i] + layer.bias[i];
    }
    let (a_i, rest) = pre.split_at(n);
    let (a_f, rest) = rest.split_at(n);
    let (a_c, a_o) = rest.split_at(n);

    let zero = vec![0.0; 0];
    let (p_i, p_f, p_o) = match &layer.peepholes {
        Some(p) => (&p.input[..], &p.forget[..], &p.output[..]),
        None => (&zero[..], &zero[..], &zero[..]),
    };
    let peep = |p: &[f64], i: usize, c: f64| if p.is_empty() { 0.0 } else { p[i] * c };

    let mut hidden = vec![0.0; n];
    let mut cell = vec![0.0; n];
    for i in 0..n {
        let gate_in = math::sigmoid(a_i[i] + peep(p_i, i, c_prev[i]));
        let gate_forget = math::sigmoid(a_f[i] + peep(p_f, i, c_prev[i]));
        let c = gate_forget * c_prev[i] + gate_in * math::tanh(a_c[i]);
        let gate_out = math::sigmoid(a_o[i] + peep(p_o, i, c));
        cell[i] = c;
        hidden[i] = gate_out * math::tanh(c);
    }
    let projected = project(layer, &hidden)?;
    Ok(LayerState {
        hidden,
        cell: Some(cell),
        projected,
    })
}

/// Runs the full stack over a sequence from zero states; returns the raw
/// per-step outputs (no nonlinearity), `steps x output_dim`.
pub fn forward(model: &Model, seq: &Sequence) -> Result<Matrix, InferenceError> {
    model.validate()?;
    if seq.dim() != model.input_dim {
        return Err(InferenceError::DimensionMismatch {
            what: "sequence dim",
            expected: model.input_dim,
            got: seq.dim(),
        });
    }
    if seq.steps() == 0 {
        return Err(InferenceError::EmptySequence);
    }

    let mut states: Vec<LayerState> = model
        .layers
        .iter()
        .map(|l| LayerState::zeros(model.cell, l))
        .collect();
    let mut out = Matrix::zeros(seq.steps(), model.output_dim);
    for t in 0..seq.steps() {
        let mut feed = model.input_matrix.matvec(seq.step(t))?;
        for (layer, state) in model.layers.iter().zip(states.iter_mut()) {
            *state = match model.cell {
                CellType::Rnn => rnn_step(layer, &feed, state)?,
                CellType::Lstm => lstm_step(layer, &feed, state)?,
            };
            feed = interlayer_feed(layer, state)?;
        }
        let row = out.row_mut(t);
        for (o, (f, b)) in row.iter_mut().zip(feed.iter().zip(&model.output_bias)) {
            *o = f + b;
        }
    }
    Ok(out)
}

/// Output divergence between two models over the same input sequences,
/// taken over the stacked step-by-output logit matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceMetrics {
    /// Largest absolute difference over all steps and output units.
    pub max_abs_diff: f64,
    /// Mean absolute difference over the same set.
    pub mean_abs_diff: f64,
    /// Frobenius norm of the difference, relative to the reference
    /// outputs' norm; absolute when that norm is zero.
    pub relative_frobenius: f64,
}

/// Evaluates both models on every sequence and aggregates the output
/// differences. The models must agree on input and output dimensions.
/// The max and mean fields are symmetric in the two models; the relative
/// Frobenius norm is anchored to `reference`.
pub fn compare(
    reference: &Model,
    candidate: &Model,
    seqs: &[Sequence],
) -> Result<DivergenceMetrics, InferenceError> {
    if reference.input_dim != candidate.input_dim {
        return Err(InferenceError::DimensionMismatch {
            what: "candidate input dim",
            expected: reference.input_dim,
            got: candidate.input_dim,
        });
    }
    if reference.output_dim != candidate.output_dim {
        return Err(InferenceError::DimensionMismatch {
            what: "candidate output dim",
            expected: reference.output_dim,
            got: candidate.output_dim,
        });
    }

    let mut max_abs = 0.0f64;
    let mut sum_abs = 0.0f64;
    let mut diff_sq = 0.0f64;
    let mut ref_sq = 0.0f64;
    let mut compared = 0usize;
    for seq in seqs {
        let a = forward(reference, seq)?;
        let b = forward(candidate, seq)?;
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            let d = math::abs(x - y);
            max_abs = max_abs.max(d);
            sum_abs += d;
            diff_sq += d * d;
            ref_sq += x * x;
        }
        compared += a.as_slice().len();
    }
    let mean_abs_diff = if compared == 0 { 0.0 } else { sum_abs / compared as f64 };
    let diff_norm = math::sqrt(diff_sq);
    let ref_norm = math::sqrt(ref_sq);
    let relative_frobenius = if ref_norm > 0.0 { diff_norm / ref_norm } else { diff_norm };
    Ok(DivergenceMetrics {
        max_abs_diff: max_abs,
        mean_abs_diff,
        relative_frobenius,
    })
}
