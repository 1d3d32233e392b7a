//! JSON views of models, compression reports, spectra, and divergence
//! metrics.
//!
//! These structs exist so every command prints through one serializer
//! with a fixed field order. Two runs over the same inputs produce
//! byte-identical JSON, which keeps the output diffable and lets tests
//! compare it verbatim.

use rnnpress_core::compress::{CompressionReport, LayerReport};
use rnnpress_core::inference::DivergenceMetrics;
use rnnpress_core::model::Model;
use serde::Serialize;

#[derive(Serialize)]
pub struct ModelJson {
    pub cell_type: String,
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub output_dim: usize,
    pub factored: bool,
    pub ranks: Vec<Option<usize>>,
    pub params: u64,
}

impl ModelJson {
    pub fn new(model: &Model) -> Self {
        let ranks = model.ranks();
        ModelJson {
            cell_type: model.cell.as_str().into(),
            input_dim: model.input_dim,
            layer_sizes: model.layers.iter().map(|l| l.hidden_size()).collect(),
            output_dim: model.output_dim,
            factored: ranks.iter().any(|r| r.is_some()),
            ranks,
            params: model.param_count(),
        }
    }
}

#[derive(Serialize)]
pub struct LayerReportJson {
    /// 1-based layer index.
    pub index: usize,
    pub rank: usize,
    pub explained_fraction: f64,
    pub rec_err_abs: f64,
    pub rec_err_rel: f64,
    pub inter_err_abs: f64,
    pub inter_err_rel: f64,
}

#[derive(Serialize)]
pub struct CompressionJson {
    pub params_before: u64,
    pub params_after: u64,
    pub ratio: f64,
    pub layers: Vec<LayerReportJson>,
}

impl CompressionJson {
    pub fn new(report: &CompressionReport) -> Self {
        CompressionJson {
            params_before: report.params_before,
            params_after: report.params_after,
            ratio: report.ratio(),
            layers: report.layers.iter().map(layer_json).collect(),
        }
    }
}

fn layer_json(r: &LayerReport) -> LayerReportJson {
    LayerReportJson {
        index: r.layer,
        rank: r.rank,
        explained_fraction: r.energy_kept,
        rec_err_abs: r.recurrent_residual,
        rec_err_rel: r.recurrent_residual_rel,
        inter_err_abs: r.inter_residual,
        inter_err_rel: r.inter_residual_rel,
    }
}

#[derive(Serialize)]
pub struct SpectrumJson {
    pub layer: usize,
    pub hidden: usize,
    pub sigma: Vec<f64>,
}

#[derive(Serialize)]
pub struct SpectraJson {
    pub layers: Vec<SpectrumJson>,
}

#[derive(Serialize)]
pub struct MetricsJson {
    pub max_abs_diff: f64,
    pub mean_abs_diff: f64,
    pub relative_frobenius: f64,
}

impl MetricsJson {
    pub fn new(m: &DivergenceMetrics) -> Self {
        MetricsJson {
            max_abs_diff: m.max_abs_diff,
            mean_abs_diff: m.mean_abs_diff,
            relative_frobenius: m.relative_frobenius,
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline. Everything the
/// CLI prints goes through here, so output is canonical: the same data
/// always serializes to the same bytes, regardless of struct field
/// order.
pub fn render<T: Serialize>(value: &T) -> String {
    // serde_json's default map is a BTreeMap, so bouncing through Value
    // sorts the keys.
    let v = serde_json::to_value(value).expect("report types always serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("value serialization is infallible");
    s.push('\n');
    s
}
