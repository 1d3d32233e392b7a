//! Rank selection and the joint factorization of a layer's matrices.
//!
//! Per layer, the recurrent matrix is decomposed as `W_h = U S V^T` and
//! truncated to `Z_h * P` with `P = V_r^T`. The outgoing matrix is then
//! refit against the same projection, `Z_x = argmin_Y |Y P - W_x|_F`, so
//! one projected hidden state serves both matrices at inference time.
//! Biases and peepholes pass through untouched.

use alloc::vec::Vec;

use crate::linalg::{least_squares_rowspace, svd, truncate, LinalgError};
use crate::model::{LayerParams, LayerWeights, Model, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub enum CompressError {
    /// Energy threshold outside `(0, 1]` (or NaN).
    InvalidTau { tau: f64 },
    /// Rank selection needs at least one singular value.
    EmptySpectrum,
    /// Every singular value is zero, so no energy share is defined.
    DegenerateSpectrum,
    /// Spectrum entry at `index` is negative, non-finite, or out of order.
    InvalidSpectrum { index: usize },
    /// The layer is already factored; compression does not nest.
    AlreadyFactored { layer: usize },
    Model(ModelError),
    Linalg(LinalgError),
}

impl From<ModelError> for CompressError {
    fn from(e: ModelError) -> Self {
        CompressError::Model(e)
    }
}

impl From<LinalgError> for CompressError {
    fn from(e: LinalgError) -> Self {
        CompressError::Linalg(e)
    }
}

impl core::fmt::Display for CompressError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CompressError::InvalidTau { tau } => {
                write!(f, "energy threshold {tau} outside (0, 1]")
            }
            CompressError::EmptySpectrum => write!(f, "empty singular value spectrum"),
            CompressError::DegenerateSpectrum => {
                write!(f, "all singular values are zero")
            }
            CompressError::InvalidSpectrum { index } => {
                write!(f, "spectrum entry {index} is negative or out of order")
            }
            CompressError::AlreadyFactored { layer } => {
                write!(f, "layer {layer} is already factored")
            }
            CompressError::Model(e) => write!(f, "{e}"),
            CompressError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CompressError {}

/// How ranks are chosen during compression.
#[derive(Debug, Clone, PartialEq)]
pub enum RankPolicy {
    /// Explicit rank per layer, outermost first.
    Fixed(Vec<usize>),
    /// Keep the largest rank whose share of squared spectral energy stays
    /// at or below the threshold; see [`select_rank`].
    Energy(f64),
}

/// Per-layer compression outcome. Relative errors are against the dense
/// matrix's Frobenius norm, and 0 when that norm is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    /// 1-based layer index, matching tensor names in the container.
    pub layer: usize,
    pub hidden: usize,
    /// Number of singular values in the recurrent spectrum.
    pub spectrum_len: usize,
    pub rank: usize,
    /// `|W_h - Z_h P|_F`.
    pub recurrent_residual: f64,
    pub recurrent_residual_rel: f64,
    /// `|W_x - Z_x P|_F`.
    pub inter_residual: f64,
    pub inter_residual_rel: f64,
    /// Fraction of squared spectral energy retained by the chosen rank.
    pub energy_kept: f64,
}

/// Whole-model compression outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub layers: Vec<LayerReport>,
    pub params_before: u64,
    pub params_after: u64,
}

impl CompressionReport {
    /// Parameters before over parameters after (>= 1 for any real
    /// compression).
    pub fn ratio(&self) -> f64 {
        self.params_before as f64 / self.params_after as f64
    }
}

/// Picks the largest rank `k` whose cumulative squared-energy share
/// `sum(sigma_1..k^2) / sum(sigma^2)` is at most `tau`, with a floor of 1
/// when even the leading value exceeds the threshold.
///
/// `sigma` must be non-negative, non-increasing (as produced by [`svd`]),
/// and not identically zero. At `tau = 1.0` the full rank is always
/// selected, because the final cumulative share is computed as
/// `total / total == 1.0` exactly.
pub fn select_rank(sigma: &[f64], tau: f64) -> Result<usize, CompressError> {
    validate_tau(tau)?;
    if sigma.is_empty() {
        return Err(CompressError::EmptySpectrum);
    }
    for (i, w) in sigma.windows(2).enumerate() {
        if w[0] < w[1] {
            return Err(CompressError::InvalidSpectrum { index: i + 1 });
        }
    }
    if sigma.iter().any(|s| !s.is_finite()) || sigma[0] < 0.0 {
        let index = sigma
            .iter()
            .position(|s| !s.is_finite() || *s < 0.0)
            .unwrap_or(0);
        return Err(CompressError::InvalidSpectrum { index });
    }

    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(CompressError::DegenerateSpectrum);
    }
    let mut cumulative = 0.0;
    let mut rank = 0usize;
    for (k, s) in sigma.iter().enumerate() {
        cumulative += s * s;
        if cumulative / total <= tau {
            rank = k + 1;
        } else {
            break; // cumulative share only grows from here
        }
    }
    Ok(rank.max(1))
}

fn validate_tau(tau: f64) -> Result<(), CompressError> {
    if tau.is_finite() && tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(CompressError::InvalidTau { tau })
    }
}

/// Cumulative squared-energy share of the leading `rank` values; 1.0 for an
/// all-zero spectrum.
fn kept_fraction(sigma: &[f64], rank: usize) -> f64 {
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 1.0;
    }
    let kept: f64 = sigma[..rank].iter().map(|s| s * s).sum();
    kept / total
}

/// Singular values of the layer's recurrent matrix. Factored layers report
/// the spectrum of the reconstructed product `Z_h * P`.
pub fn recurrent_spectrum(layer: &LayerWeights) -> Result<Vec<f64>, LinalgError> {
    let sigma = match &layer.params {
        LayerParams::Full { w_h, .. } => svd(w_h)?.sigma,
        LayerParams::Factored { z_h, p, .. } => svd(&z_h.matmul(p)?)?.sigma,
    };
    Ok(sigma)
}

/// Factors one dense layer. `layer_index` is the 1-based position in the
/// stack; it selects the entry of a [`RankPolicy::Fixed`] vector and labels
/// the report. Fails on already-factored layers.
pub fn compress_layer(
    layer: &LayerWeights,
    policy: &RankPolicy,
    layer_index: usize,
) -> Result<(LayerWeights, LayerReport), CompressError> {
    let (w_h, w_x) = match &layer.params {
        LayerParams::Full { w_h, w_x } => (w_h, w_x),
        LayerParams::Factored { .. } => {
            return Err(CompressError::AlreadyFactored { layer: layer_index })
        }
    };

    let decomp = svd(w_h)?;
    let rank = match policy {
        RankPolicy::Fixed(ranks) => *layer_index
            .checked_sub(1)
            .and_then(|i| ranks.get(i))
            .ok_or(ModelError::RankCount {
                expected: layer_index,
                got: ranks.len(),
            })?,
        RankPolicy::Energy(tau) => select_rank(&decomp.sigma, *tau)?,
    };
    let (z_h, p) = truncate(&decomp, rank)?;
    let z_x = least_squares_rowspace(&p, w_x)?;

    let recurrent_residual = w_h.sub(&z_h.matmul(&p)?)?.frobenius_norm();
    let inter_residual = w_x.sub(&z_x.matmul(&p)?)?.frobenius_norm();
    let rel = |err: f64, denom: f64| if denom > 0.0 { err / denom } else { 0.0 };
    let report = LayerReport {
        layer: layer_index,
        hidden: layer.hidden_size(),
        spectrum_len: decomp.sigma.len(),
        rank,
        recurrent_residual,
        recurrent_residual_rel: rel(recurrent_residual, w_h.frobenius_norm()),
        inter_residual,
        inter_residual_rel: rel(inter_residual, w_x.frobenius_norm()),
        energy_kept: kept_fraction(&decomp.sigma, rank),
    };
    let compressed = LayerWeights {
        params: LayerParams::Factored { z_h, p, z_x },
        bias: layer.bias.clone(),
        peepholes: layer.peepholes.clone(),
    };
    Ok((compressed, report))
}

/// Checks a policy against a model without doing numerical work: fixed
/// vectors must name one in-range rank per layer, energy thresholds must
/// lie in `(0, 1]`. [`compress_model`] runs this before touching any
/// layer; drivers that fan layers out to threads should run it too, so a
/// bad policy fails the same way on every path.
pub fn validate_policy(model: &Model, policy: &RankPolicy) -> Result<(), CompressError> {
    match policy {
        RankPolicy::Fixed(ranks) => {
            if ranks.len() != model.layers.len() {
                return Err(ModelError::RankCount {
                    expected: model.layers.len(),
                    got: ranks.len(),
                }
                .into());
            }
            for (idx, (&rank, layer)) in ranks.iter().zip(&model.layers).enumerate() {
                let max = layer.hidden_size();
                if rank == 0 || rank > max {
                    return Err(ModelError::RankRange {
                        layer: idx + 1,
                        rank,
                        max,
                    }
                    .into());
                }
            }
            Ok(())
        }
        RankPolicy::Energy(tau) => validate_tau(*tau),
    }
}

/// Factors every layer of a dense model, leaving the input projection,
/// biases, and peepholes untouched. Layers are processed independently, so
/// callers may parallelize by layer and reassemble; this entry point is the
/// sequential reference.
pub fn compress_model(
    model: &Model,
    policy: &RankPolicy,
) -> Result<(Model, CompressionReport), CompressError> {
    model.validate()?;
    validate_policy(model, policy)?;

    let mut layers = Vec::with_capacity(model.layers.len());
    let mut reports = Vec::with_capacity(model.layers.len());
    for (idx, layer) in model.layers.iter().enumerate() {
        let (compressed, report) = compress_layer(layer, policy, idx + 1)?;
        layers.push(compressed);
        reports.push(report);
    }

    let compressed = Model {
        cell: model.cell,
        input_dim: model.input_dim,
        output_dim: model.output_dim,
        input_matrix: model.input_matrix.clone(),
        layers,
        output_bias: model.output_bias.clone(),
    };
    debug_assert!(compressed.validate().is_ok());
    let report = CompressionReport {
        params_before: model.param_count(),
        params_after: compressed.param_count(),
        layers: reports,
    };
    Ok((compressed, report))
}
