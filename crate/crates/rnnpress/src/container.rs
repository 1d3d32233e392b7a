//! Model container format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   4 bytes  "RNNZ"
//! version u32      currently 1
//! hlen    u64      byte length of the JSON header
//! header  hlen bytes of UTF-8 JSON
//! payload tensor data, row-major f32, contiguous, no padding
//! ```
//!
//! The header describes the architecture (`cell_type`, `input_dim`,
//! `layer_sizes`, `output_dim`, `gate_order`) and carries one entry per
//! tensor with its shape and byte offset into the payload. Tensor names
//! are fixed by the format:
//!
//! * `W_x.0` input matrix
//! * per layer `l` (1-based): `W_h.<l>` for a dense recurrent matrix, or
//!   `Z_h.<l>` plus `P.<l>` for a factored one; `W_x.<l>` or `Z_x.<l>`
//!   for the matrix feeding the next stage; `b.<l>`; and for LSTM cells
//!   `peep_i.<l>`, `peep_f.<l>`, `peep_o.<l>`
//! * `b.out` output bias
//!
//! Vectors are stored as single-column matrices. `gate_order` is pinned
//! to `["i", "f", "c", "o"]`: it documents how gate blocks are stacked
//! inside the gated tensors, and readers must reject anything else
//! rather than silently permute gates.
//!
//! Weights are computed in f64 but stored as f32; `load` promotes them
//! back. A model whose values sit on the f32 grid (anything produced by
//! `generate` or a previous `load`) therefore round-trips bitwise.

use std::collections::BTreeMap;
use std::path::Path;

use rnnpress_core::model::{
    Architecture, CellType, LayerParams, LayerWeights, Model, ModelError, Peepholes,
};
use rnnpress_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::write_atomic;

pub const MAGIC: [u8; 4] = *b"RNNZ";
pub const VERSION: u32 = 1;

/// Upper bound on the JSON header, to fail fast on garbage length fields.
const MAX_HEADER_LEN: u64 = 1 << 24;

const GATE_ORDER: [&str; 4] = ["i", "f", "c", "o"];

#[derive(Debug, thiserror::Error)]
pub enum ContainerError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model container: magic {found:?}, expected {MAGIC:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported container version {found} (supported: {VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("file truncated: need {expected} bytes, have {got}")]
    Truncated { expected: u64, got: u64 },
    #[error("{extra} trailing bytes after the payload")]
    TrailingBytes { extra: u64 },
    #[error("header length {len} exceeds the {MAX_HEADER_LEN} byte cap")]
    HeaderTooLarge { len: u64 },
    #[error("header is not valid JSON: {0}")]
    HeaderJson(#[from] serde_json::Error),
    #[error("unknown cell type {found:?}")]
    UnknownCellType { found: String },
    #[error("gate_order {found:?} differs from the required {GATE_ORDER:?}")]
    BadGateOrder { found: Vec<String> },
    #[error("tensor {name}: dtype {found:?}, only \"f32\" is defined")]
    BadDtype { name: String, found: String },
    #[error("missing tensor {name}")]
    MissingTensor { name: String },
    #[error("unexpected tensor {name}")]
    UnexpectedTensor { name: String },
    #[error("tensor {name}: shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: (u64, u64),
        got: (u64, u64),
    },
    #[error("tensor {name}: offset {got}, expected {expected} (payload must be contiguous)")]
    BadOffset { name: String, expected: u64, got: u64 },
    #[error("layer {layer} mixes dense and factored tensors")]
    MixedLayer { layer: usize },
    #[error("tensor {name}: projection rank {rank} not in 1..={max}")]
    BadRank { name: String, rank: u64, max: u64 },
    #[error("tensor {name}: non-finite value at element {index}")]
    NonFinite { name: String, index: usize },
    #[error("dimension too large: {what}")]
    SizeOverflow { what: String },
    #[error("model fails validation: {0}")]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct Header {
    cell_type: String,
    input_dim: u64,
    layer_sizes: Vec<u64>,
    output_dim: u64,
    gate_order: Vec<String>,
    tensors: Vec<TensorDesc>,
}

#[derive(Serialize, Deserialize)]
struct TensorDesc {
    name: String,
    rows: u64,
    cols: u64,
    dtype: String,
    offset: u64,
}

struct Builder {
    tensors: Vec<TensorDesc>,
    payload: Vec<u8>,
}

impl Builder {
    fn push(&mut self, name: String, rows: usize, cols: usize, data: &[f64]) {
        debug_assert_eq!(rows * cols, data.len());
        let offset = self.payload.len() as u64;
        for &x in data {
            self.payload.extend_from_slice(&(x as f32).to_le_bytes());
        }
        self.tensors.push(TensorDesc {
            name,
            rows: rows as u64,
            cols: cols as u64,
            dtype: "f32".into(),
            offset,
        });
    }

    fn push_matrix(&mut self, name: String, m: &Matrix) {
        self.push(name, m.rows(), m.cols(), m.as_slice());
    }

    fn push_column(&mut self, name: String, v: &[f64]) {
        self.push(name, v.len(), 1, v);
    }
}

/// Serializes `model` into container bytes.
pub fn to_bytes(model: &Model) -> Result<Vec<u8>, ContainerError> {
    model.validate()?;

    let mut b = Builder { tensors: Vec::new(), payload: Vec::new() };
    b.push_matrix("W_x.0".into(), &model.input_matrix);
    for (i, layer) in model.layers.iter().enumerate() {
        let l = i + 1;
        match &layer.params {
            LayerParams::Full { w_h, w_x } => {
                b.push_matrix(format!("W_h.{l}"), w_h);
                b.push_matrix(format!("W_x.{l}"), w_x);
            }
            LayerParams::Factored { z_h, p, z_x } => {
                b.push_matrix(format!("Z_h.{l}"), z_h);
                b.push_matrix(format!("P.{l}"), p);
                b.push_matrix(format!("Z_x.{l}"), z_x);
            }
        }
        b.push_column(format!("b.{l}"), &layer.bias);
        if let Some(peep) = &layer.peepholes {
            b.push_column(format!("peep_i.{l}"), &peep.input);
            b.push_column(format!("peep_f.{l}"), &peep.forget);
            b.push_column(format!("peep_o.{l}"), &peep.output);
        }
    }
    b.push_column("b.out".into(), &model.output_bias);

    let header = Header {
        cell_type: model.cell.as_str().into(),
        input_dim: model.input_dim as u64,
        layer_sizes: model.layers.iter().map(|l| l.hidden_size() as u64).collect(),
        output_dim: model.output_dim as u64,
        gate_order: GATE_ORDER.iter().map(|s| s.to_string()).collect(),
        tensors: b.tensors,
    };
    // Field order in the structs above is the canonical one; serializing
    // them (rather than a map) is what makes saves byte-reproducible.
    let header_json = serde_json::to_vec(&header)?;

    let mut out = Vec::with_capacity(16 + header_json.len() + b.payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    out.extend_from_slice(&b.payload);
    Ok(out)
}

/// Saves `model` to `path`, writing via a temp file so a crash cannot
/// leave a half-written container behind.
pub fn save(model: &Model, path: &Path) -> Result<(), ContainerError> {
    let bytes = to_bytes(model)?;
    write_atomic(path, &bytes)?;
    Ok(())
}

/// Parses container bytes back into a model.
pub fn from_bytes(bytes: &[u8]) -> Result<Model, ContainerError> {
    let (header, payload) = split_header(bytes)?;

    let cell = match header.cell_type.as_str() {
        "rnn" => CellType::Rnn,
        "lstm" => CellType::Lstm,
        other => return Err(ContainerError::UnknownCellType { found: other.into() }),
    };
    if header.gate_order != GATE_ORDER {
        return Err(ContainerError::BadGateOrder { found: header.gate_order });
    }
    let input_dim = cast_dim(header.input_dim, "input_dim")?;
    let output_dim = cast_dim(header.output_dim, "output_dim")?;
    let layer_sizes = header
        .layer_sizes
        .iter()
        .map(|&n| cast_dim(n, "layer size"))
        .collect::<Result<Vec<_>, _>>()?;
    // Catches empty or zero-sized dimensions before any tensor is built.
    Architecture::new(cell, input_dim, layer_sizes.clone(), output_dim)?;

    // The payload must be exactly the declared tensors, in order, packed
    // tight. Walk the descriptors once, checking offsets as we go.
    let mut expected_offset = 0u64;
    let mut map = BTreeMap::new();
    for t in &header.tensors {
        if t.dtype != "f32" {
            return Err(ContainerError::BadDtype {
                name: t.name.clone(),
                found: t.dtype.clone(),
            });
        }
        if t.offset != expected_offset {
            return Err(ContainerError::BadOffset {
                name: t.name.clone(),
                expected: expected_offset,
                got: t.offset,
            });
        }
        let elems = t.rows.checked_mul(t.cols).ok_or_else(|| {
            ContainerError::SizeOverflow { what: format!("{} element count", t.name) }
        })?;
        let nbytes = elems.checked_mul(4).ok_or_else(|| {
            ContainerError::SizeOverflow { what: format!("{} byte count", t.name) }
        })?;
        expected_offset = t.offset.checked_add(nbytes).ok_or_else(|| {
            ContainerError::SizeOverflow { what: "payload length".into() }
        })?;
        if map.insert(t.name.clone(), t).is_some() {
            return Err(ContainerError::UnexpectedTensor { name: t.name.clone() });
        }
    }
    let have = payload.len() as u64;
    if have < expected_offset {
        return Err(ContainerError::Truncated { expected: expected_offset, got: have });
    }
    if have > expected_offset {
        return Err(ContainerError::TrailingBytes { extra: have - expected_offset });
    }

    let mut taken = Taken { map, payload };
    let gates = cell.gate_count() as u64;

    let first_rows = gates * header.layer_sizes[0];
    let input_matrix = taken.matrix("W_x.0", first_rows, header.input_dim)?;

    let mut layers = Vec::with_capacity(layer_sizes.len());
    for (i, &n) in header.layer_sizes.iter().enumerate() {
        let l = i + 1;
        let rows = gates * n;
        let out_rows = match header.layer_sizes.get(i + 1) {
            Some(&next) => gates * next,
            None => header.output_dim,
        };

        let dense = taken.map.contains_key(&format!("W_h.{l}"));
        let factored = taken.map.contains_key(&format!("P.{l}"))
            || taken.map.contains_key(&format!("Z_h.{l}"))
            || taken.map.contains_key(&format!("Z_x.{l}"));
        let params = match (dense, factored) {
            (true, false) => LayerParams::Full {
                w_h: taken.matrix(&format!("W_h.{l}"), rows, n)?,
                w_x: taken.matrix(&format!("W_x.{l}"), out_rows, n)?,
            },
            (false, true) => {
                let p_name = format!("P.{l}");
                let rank = taken
                    .map
                    .get(&p_name)
                    .ok_or_else(|| ContainerError::MissingTensor { name: p_name.clone() })?
                    .rows;
                if rank < 1 || rank > n {
                    return Err(ContainerError::BadRank { name: p_name, rank, max: n });
                }
                LayerParams::Factored {
                    z_h: taken.matrix(&format!("Z_h.{l}"), rows, rank)?,
                    p: taken.matrix(&p_name, rank, n)?,
                    z_x: taken.matrix(&format!("Z_x.{l}"), out_rows, rank)?,
                }
            }
            (true, true) => return Err(ContainerError::MixedLayer { layer: l }),
            (false, false) => {
                return Err(ContainerError::MissingTensor { name: format!("W_h.{l}") })
            }
        };

        let bias = taken.vector(&format!("b.{l}"), rows)?;
        let peepholes = match cell {
            CellType::Lstm => Some(Peepholes {
                input: taken.vector(&format!("peep_i.{l}"), n)?,
                forget: taken.vector(&format!("peep_f.{l}"), n)?,
                output: taken.vector(&format!("peep_o.{l}"), n)?,
            }),
            CellType::Rnn => None,
        };
        layers.push(LayerWeights { params, bias, peepholes });
    }

    let output_bias = taken.vector("b.out", header.output_dim)?;
    if let Some(name) = taken.map.keys().next() {
        return Err(ContainerError::UnexpectedTensor { name: name.clone() });
    }

    let model = Model {
        cell,
        input_dim,
        output_dim,
        input_matrix,
        layers,
        output_bias,
    };
    model.validate()?;
    Ok(model)
}

/// Loads a model from `path`.
pub fn load(path: &Path) -> Result<Model, ContainerError> {
    let bytes = std::fs::read(path)?;
    from_bytes(&bytes)
}

/// Read-only view of the header, for `inspect` style tooling that does
/// not need the payload decoded.
pub struct Summary {
    pub cell_type: String,
    pub input_dim: u64,
    pub layer_sizes: Vec<u64>,
    pub output_dim: u64,
    pub tensors: Vec<(String, u64, u64)>,
}

/// Parses just the header of a container, leaving the payload untouched.
pub fn summary(bytes: &[u8]) -> Result<Summary, ContainerError> {
    let (header, _) = split_header(bytes)?;
    Ok(Summary {
        cell_type: header.cell_type,
        input_dim: header.input_dim,
        layer_sizes: header.layer_sizes,
        output_dim: header.output_dim,
        tensors: header
            .tensors
            .iter()
            .map(|t| (t.name.clone(), t.rows, t.cols))
            .collect(),
    })
}

fn split_header(bytes: &[u8]) -> Result<(Header, &[u8]), ContainerError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        let mut found = [0u8; 4];
        found.copy_from_slice(magic);
        return Err(ContainerError::BadMagic { found });
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(ContainerError::UnsupportedVersion { found: version });
    }
    let hlen = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    if hlen > MAX_HEADER_LEN {
        return Err(ContainerError::HeaderTooLarge { len: hlen });
    }
    let header_bytes = r.take(hlen as usize)?;
    let header: Header = serde_json::from_slice(header_bytes)?;
    Ok((header, &bytes[r.pos..]))
}

fn cast_dim(x: u64, what: &str) -> Result<usize, ContainerError> {
    usize::try_from(x).map_err(|_| ContainerError::SizeOverflow { what: what.into() })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        let end = self.pos.checked_add(n).ok_or(ContainerError::Truncated {
            expected: u64::MAX,
            got: self.bytes.len() as u64,
        })?;
        if end > self.bytes.len() {
            return Err(ContainerError::Truncated {
                expected: end as u64,
                got: self.bytes.len() as u64,
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}

/// Tensor lookup that consumes entries, so leftovers are detectable.
struct Taken<'a> {
    map: BTreeMap<String, &'a TensorDesc>,
    payload: &'a [u8],
}

impl Taken<'_> {
    fn matrix(&mut self, name: &str, rows: u64, cols: u64) -> Result<Matrix, ContainerError> {
        let data = self.raw(name, rows, cols)?;
        Ok(Matrix::from_vec(rows as usize, cols as usize, data)
            .expect("shape checked against data length"))
    }

    fn vector(&mut self, name: &str, len: u64) -> Result<Vec<f64>, ContainerError> {
        self.raw(name, len, 1)
    }

    fn raw(&mut self, name: &str, rows: u64, cols: u64) -> Result<Vec<f64>, ContainerError> {
        let desc = self
            .map
            .remove(name)
            .ok_or_else(|| ContainerError::MissingTensor { name: name.into() })?;
        if (desc.rows, desc.cols) != (rows, cols) {
            return Err(ContainerError::ShapeMismatch {
                name: name.into(),
                expected: (rows, cols),
                got: (desc.rows, desc.cols),
            });
        }
        let elems = cast_dim(rows * cols, "tensor length")?;
        let start = cast_dim(desc.offset, "tensor offset")?;
        // Bounds were established by the contiguity walk in from_bytes.
        let data_bytes = &self.payload[start..start + elems * 4];
        let mut data = Vec::with_capacity(elems);
        for (i, chunk) in data_bytes.chunks_exact(4).enumerate() {
            let x = f32::from_le_bytes(chunk.try_into().unwrap());
            if !x.is_finite() {
                return Err(ContainerError::NonFinite { name: name.into(), index: i });
            }
            data.push(x as f64);
        }
        Ok(data)
    }
}
