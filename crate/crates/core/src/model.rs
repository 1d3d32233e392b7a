//! Model structure: architectures, per-layer weights, parameter counting,
//! and reproducible random initialization.
//!
//! A model is a stack of recurrent layers between an input projection and a
//! linear output layer. Gated layers keep their per-gate parameter blocks
//! stacked row-wise in one matrix, in the fixed order input gate, forget
//! gate, cell candidate, output gate; every consumer of a stacked matrix in
//! this crate and in the container format assumes that order.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::rng::SplitMix64;

/// Recurrent cell family. Determines the gate multiplicity of stacked
/// parameter blocks: 1 for the vanilla cell, 4 for the gated cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellType {
    Rnn,
    Lstm,
}

impl CellType {
    pub fn gate_count(self) -> usize {
        match self {
            CellType::Rnn => 1,
            CellType::Lstm => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellType::Rnn => "rnn",
            CellType::Lstm => "lstm",
        }
    }
}

/// Shape of a model, without the weights themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub cell: CellType,
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub output_dim: usize,
}

/// Structural errors: impossible shapes, mismatched tensors, bad ranks.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// The architecture has no recurrent layers.
    NoLayers,
    /// A dimension that must be positive was zero.
    ZeroDimension { what: &'static str },
    /// A tensor's shape disagrees with the architecture. `layer` is
    /// 1-based; 0 denotes the input projection. Vectors report `(len, 1)`.
    BadShape {
        tensor: &'static str,
        layer: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Gated-cell layers need peephole vectors; vanilla layers must not
    /// have them.
    MissingPeepholes { layer: usize },
    UnexpectedPeepholes { layer: usize },
    /// A requested rank falls outside `1..=hidden`.
    RankRange { layer: usize, rank: usize, max: usize },
    /// One rank per layer is required.
    RankCount { expected: usize, got: usize },
    /// Stacked gate matrices must have a row count divisible by the gate
    /// multiplicity.
    GateRows { rows: usize, gates: usize },
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::NoLayers => write!(f, "architecture needs at least one layer"),
            ModelError::ZeroDimension { what } => write!(f, "{what} must be positive"),
            ModelError::BadShape {
                tensor,
                layer,
                expected,
                got,
            } => write!(
                f,
                "layer {layer}: {tensor} has shape {}x{}, expected {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
            ModelError::MissingPeepholes { layer } => {
                write!(f, "layer {layer}: gated cell requires peephole vectors")
            }
            ModelError::UnexpectedPeepholes { layer } => {
                write!(f, "layer {layer}: vanilla cell cannot carry peepholes")
            }
            ModelError::RankRange { layer, rank, max } => {
                write!(f, "layer {layer}: rank {rank} outside 1..={max}")
            }
            ModelError::RankCount { expected, got } => {
                write!(f, "expected {expected} ranks, got {got}")
            }
            ModelError::GateRows { rows, gates } => {
                write!(f, "{rows} rows not divisible by {gates} gates")
            }
        }
    }
}

impl core::error::Error for ModelError {}

impl Architecture {
    pub fn new(
        cell: CellType,
        input_dim: usize,
        layer_sizes: Vec<usize>,
        output_dim: usize,
    ) -> Result<Self, ModelError> {
        let arch = Self {
            cell,
            input_dim,
            layer_sizes,
            output_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layer_sizes.is_empty() {
            return Err(ModelError::NoLayers);
        }
        if self.input_dim == 0 {
            return Err(ModelError::ZeroDimension { what: "input_dim" });
        }
        if self.output_dim == 0 {
            return Err(ModelError::ZeroDimension { what: "output_dim" });
        }
        if self.layer_sizes.iter().any(|&n| n == 0) {
            return Err(ModelError::ZeroDimension { what: "layer size" });
        }
        Ok(())
    }

    pub fn layer_count(&self) -> usize {
        self.layer_sizes.len()
    }

    /// Exact parameter count, from shapes alone. With `ranks` the recurrent
    /// and inter-layer matrices of layer `l` are counted in factored form
    /// (`Z_h`: gates*N x r, `P`: r x N, `Z_x`: next x r); without, dense.
    /// Biases, peepholes, and the input projection are never factored.
    pub fn param_count(&self, ranks: Option<&[usize]>) -> Result<u64, ModelError> {
        self.validate()?;
        if let Some(rs) = ranks {
            if rs.len() != self.layer_sizes.len() {
                return Err(ModelError::RankCount {
                    expected: self.layer_sizes.len(),
                    got: rs.len(),
                });
            }
            for (l, (&r, &n)) in rs.iter().zip(&self.layer_sizes).enumerate() {
                if r == 0 || r > n {
                    return Err(ModelError::RankRange {
                        layer: l + 1,
                        rank: r,
                        max: n,
                    });
                }
            }
        }
        let g = self.cell.gate_count() as u64;
        let mut total = 0u64;
        for (l, &n) in self.layer_sizes.iter().enumerate() {
            let n = n as u64;
            // Rows of the matrix leaving this layer: gate-stacked for the
            // next recurrent layer, plain for the output layer.
            let out_rows = if l + 1 < self.layer_sizes.len() {
                g * self.layer_sizes[l + 1] as u64
            } else {
                self.output_dim as u64
            };
            let (recurrent, inter) = match ranks {
                Some(rs) => {
                    let r = rs[l] as u64;
                    (g * n * r + r * n, out_rows * r)
                }
                None => (g * n * n, out_rows * n),
            };
            total += recurrent + inter;
            total += g * n; // bias
            if self.cell == CellType::Lstm {
                total += 3 * n; // peepholes
            }
        }
        total += self.cell.gate_count() as u64 * self.layer_sizes[0] as u64 * self.input_dim as u64;
        total += self.output_dim as u64;
        Ok(total)
    }
}

/// Per-gate blocks of a stacked parameter matrix, canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct GateBundle {
    pub input: Matrix,
    pub forget: Matrix,
    pub cell: Matrix,
    pub output: Matrix,
}

/// Concatenates the four gate blocks row-wise into one stacked matrix.
/// All blocks must share the same shape.
pub fn stack_gates(bundle: &GateBundle) -> Result<Matrix, ModelError> {
    let blocks = [&bundle.input, &bundle.forget, &bundle.cell, &bundle.output];
    let (rows, cols) = (blocks[0].rows(), blocks[0].cols());
    for b in &blocks[1..] {
        if b.rows() != rows || b.cols() != cols {
            return Err(ModelError::BadShape {
                tensor: "gate block",
                layer: 0,
                expected: (rows, cols),
                got: (b.rows(), b.cols()),
            });
        }
    }
    let mut data = Vec::with_capacity(4 * rows * cols);
    for b in blocks {
        data.extend_from_slice(b.as_slice());
    }
    Ok(Matrix::from_vec(4 * rows, cols, data).expect("block shapes validated"))
}

/// Splits a stacked matrix back into its four gate blocks.
pub fn unstack_gates(stacked: &Matrix) -> Result<GateBundle, ModelError> {
    if stacked.rows() % 4 != 0 {
        return Err(ModelError::GateRows {
            rows: stacked.rows(),
            gates: 4,
        });
    }
    let rows = stacked.rows() / 4;
    let cols = stacked.cols();
    let block = |g: usize| {
        let data = stacked.as_slice()[g * rows * cols..(g + 1) * rows * cols].to_vec();
        Matrix::from_vec(rows, cols, data).expect("block shape is exact")
    };
    Ok(GateBundle {
        input: block(0),
        forget: block(1),
        cell: block(2),
        output: block(3),
    })
}

/// Peephole vectors of a gated layer (diagonal cell-to-gate connections).
/// The cell candidate has no peephole, so there are exactly three.
#[derive(Debug, Clone, PartialEq)]
pub struct Peepholes {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub output: Vec<f64>,
}

/// Recurrent and outgoing matrices of one layer, dense or factored.
///
/// In factored form both matrices share the projection `p`: the recurrent
/// matrix is `z_h * p` and the outgoing matrix is `z_x * p`. That coupling
/// is the point of the scheme (the hidden state is projected once per
/// step), so the two forms cannot be mixed within a layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    Full {
        /// Recurrent matrix, `gates*hidden x hidden`.
        w_h: Matrix,
        /// Outgoing matrix, `next_rows x hidden`.
        w_x: Matrix,
    },
    Factored {
        /// Recurrent left factor, `gates*hidden x rank`.
        z_h: Matrix,
        /// Shared projection, `rank x hidden`.
        p: Matrix,
        /// Outgoing left factor, `next_rows x rank`.
        z_x: Matrix,
    },
}

/// One recurrent layer: parameter matrices, stacked bias, and (for gated
/// cells) peepholes.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub params: LayerParams,
    /// Stacked bias, `gates * hidden`.
    pub bias: Vec<f64>,
    pub peepholes: Option<Peepholes>,
}

impl LayerWeights {
    /// Hidden width N of this layer.
    pub fn hidden_size(&self) -> usize {
        match &self.params {
            LayerParams::Full { w_h, .. } => w_h.cols(),
            LayerParams::Factored { p, .. } => p.cols(),
        }
    }

    /// Factorization rank, if this layer is factored.
    pub fn rank(&self) -> Option<usize> {
        match &self.params {
            LayerParams::Full { .. } => None,
            LayerParams::Factored { p, .. } => Some(p.rows()),
        }
    }

    /// Row count of the outgoing matrix (gate-stacked width of the next
    /// layer, or the output dimension for the last layer).
    pub fn out_rows(&self) -> usize {
        match &self.params {
            LayerParams::Full { w_x, .. } => w_x.rows(),
            LayerParams::Factored { z_x, .. } => z_x.rows(),
        }
    }

    fn tensor_params(&self) -> u64 {
        let count = |m: &Matrix| (m.rows() * m.cols()) as u64;
        let mats = match &self.params {
            LayerParams::Full { w_h, w_x } => count(w_h) + count(w_x),
            LayerParams::Factored { z_h, p, z_x } => count(z_h) + count(p) + count(z_x),
        };
        let peep = self
            .peepholes
            .as_ref()
            .map_or(0, |p| (p.input.len() + p.forget.len() + p.output.len()) as u64);
        mats + self.bias.len() as u64 + peep
    }
}

/// A complete stack: input projection, recurrent layers, output bias.
///
/// Tensor chain for an input x_t: `input_matrix * x_t` feeds layer 1; each
/// layer's outgoing matrix feeds the next; the last layer's outgoing matrix
/// plus `output_bias` produces the raw output (no nonlinearity).
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cell: CellType,
    pub input_dim: usize,
    pub output_dim: usize,
    /// `gates * layer_sizes[0] x input_dim`.
    pub input_matrix: Matrix,
    pub layers: Vec<LayerWeights>,
    /// Length `output_dim`.
    pub output_bias: Vec<f64>,
}

impl Model {
    pub fn architecture(&self) -> Architecture {
        Architecture {
            cell: self.cell,
            input_dim: self.input_dim,
            layer_sizes: self.layers.iter().map(|l| l.hidden_size()).collect(),
            output_dim: self.output_dim,
        }
    }

    /// Ranks per layer; `None` for dense layers.
    pub fn ranks(&self) -> Vec<Option<usize>> {
        self.layers.iter().map(|l| l.rank()).collect()
    }

    /// Exact number of stored scalars, straight from tensor shapes.
    pub fn param_count(&self) -> u64 {
        let mut total = (self.input_matrix.rows() * self.input_matrix.cols()) as u64;
        for layer in &self.layers {
            total += layer.tensor_params();
        }
        total + self.output_bias.len() as u64
    }

    /// Full structural check of every tensor against the architecture.
    pub fn validate(&self) -> Result<(), ModelError> {
        let arch = self.architecture();
        arch.validate()?;
        let g = self.cell.gate_count();
        let shape = |m: &Matrix| (m.rows(), m.cols());

        let expect_in = (g * self.layers[0].hidden_size(), self.input_dim);
        if shape(&self.input_matrix) != expect_in {
            return Err(ModelError::BadShape {
                tensor: "input matrix",
                layer: 0,
                expected: expect_in,
                got: shape(&self.input_matrix),
            });
        }

        for (idx, layer) in self.layers.iter().enumerate() {
            let l = idx + 1;
            let n = layer.hidden_size();
            let out_rows = if idx + 1 < self.layers.len() {
                g * self.layers[idx + 1].hidden_size()
            } else {
                self.output_dim
            };
            match &layer.params {
                LayerParams::Full { w_h, w_x } => {
                    if shape(w_h) != (g * n, n) {
                        return Err(ModelError::BadShape {
                            tensor: "recurrent matrix",
                            layer: l,
                            expected: (g * n, n),
                            got: shape(w_h),
                        });
                    }
                    if shape(w_x) != (out_rows, n) {
                        return Err(ModelError::BadShape {
                            tensor: "outgoing matrix",
                            layer: l,
                            expected: (out_rows, n),
                            got: shape(w_x),
                        });
                    }
                }
                LayerParams::Factored { z_h, p, z_x } => {
                    let r = p.rows();
                    if r > n {
                        return Err(ModelError::RankRange {
                            layer: l,
                            rank: r,
                            max: n,
                        });
                    }
                    if shape(p) != (r, n) {
                        return Err(ModelError::BadShape {
                            tensor: "projection",
                            layer: l,
                            expected: (r, n),
                            got: shape(p),
                        });
                    }
                    if shape(z_h) != (g * n, r) {
                        return Err(ModelError::BadShape {
                            tensor: "recurrent factor",
                            layer: l,
                            expected: (g * n, r),
                            got: shape(z_h),
                        });
                    }
                    if shape(z_x) != (out_rows, r) {
                        return Err(ModelError::BadShape {
                            tensor: "outgoing factor",
                            layer: l,
                            expected: (out_rows, r),
                            got: shape(z_x),
                        });
                    }
                }
            }
            if layer.bias.len() != g * n {
                return Err(ModelError::BadShape {
                    tensor: "bias",
                    layer: l,
                    expected: (g * n, 1),
                    got: (layer.bias.len(), 1),
                });
            }
            match (self.cell, &layer.peepholes) {
                (CellType::Lstm, Some(peep)) => {
                    for (name, v) in [
                        ("input peephole", &peep.input),
                        ("forget peephole", &peep.forget),
                        ("output peephole", &peep.output),
                    ] {
                        if v.len() != n {
                            return Err(ModelError::BadShape {
                                tensor: name,
                                layer: l,
                                expected: (n, 1),
                                got: (v.len(), 1),
                            });
                        }
                    }
                }
                (CellType::Lstm, None) => return Err(ModelError::MissingPeepholes { layer: l }),
                (CellType::Rnn, Some(_)) => {
                    return Err(ModelError::UnexpectedPeepholes { layer: l })
                }
                (CellType::Rnn, None) => {}
            }
        }

        if self.output_bias.len() != self.output_dim {
            return Err(ModelError::BadShape {
                tensor: "output bias",
                layer: self.layers.len(),
                expected: (self.output_dim, 1),
                got: (self.output_bias.len(), 1),
            });
        }
        Ok(())
    }

    /// Builds a dense model with reproducible pseudo-random weights.
    ///
    /// The draw order is part of the format contract: input matrix
    /// row-major, then per layer the recurrent matrix, the outgoing matrix,
    /// and (gated cells) the three peephole vectors. Weight matrices draw
    /// from `[-0.2, 0.2)`, peepholes from `[-0.1, 0.1)`; biases start at
    /// zero. Every value is rounded through f32 so that models survive the
    /// f32 container encoding bit-exactly.
    pub fn generate_random(arch: &Architecture, seed: u64) -> Result<Model, ModelError> {
        arch.validate()?;
        let mut rng = SplitMix64::new(seed);
        let g = arch.cell.gate_count();

        let input_matrix = draw_matrix(&mut rng, g * arch.layer_sizes[0], arch.input_dim, 0.2);
        let mut layers = Vec::with_capacity(arch.layer_sizes.len());
        for (idx, &n) in arch.layer_sizes.iter().enumerate() {
            let out_rows = if idx + 1 < arch.layer_sizes.len() {
                g * arch.layer_sizes[idx + 1]
            } else {
                arch.output_dim
            };
            let w_h = draw_matrix(&mut rng, g * n, n, 0.2);
            let w_x = draw_matrix(&mut rng, out_rows, n, 0.2);
            let peepholes = match arch.cell {
                CellType::Lstm => Some(Peepholes {
                    input: draw_vec(&mut rng, n, 0.1),
                    forget: draw_vec(&mut rng, n, 0.1),
                    output: draw_vec(&mut rng, n, 0.1),
                }),
                CellType::Rnn => None,
            };
            layers.push(LayerWeights {
                params: LayerParams::Full { w_h, w_x },
                bias: vec![0.0; g * n],
                peepholes,
            });
        }

        let model = Model {
            cell: arch.cell,
            input_dim: arch.input_dim,
            output_dim: arch.output_dim,
            input_matrix,
            layers,
            output_bias: vec![0.0; arch.output_dim],
        };
        debug_assert!(model.validate().is_ok());
        Ok(model)
    }
}

/// Uniform `[-half_width, half_width)` draws, rounded through f32 so the
/// values survive the f32 container encoding bit-exactly.
fn draw_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, half_width: f64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.uniform(-half_width, half_width) as f32 as f64)
        .collect();
    Matrix::from_vec(rows, cols, data).expect("generated shape is valid")
}

fn draw_vec(rng: &mut SplitMix64, n: usize, half_width: f64) -> Vec<f64> {
    (0..n)
        .map(|_| rng.uniform(-half_width, half_width) as f32 as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> Architecture {
        Architecture::new(CellType::Lstm, 320, vec![500; 5], 42).unwrap()
    }

    #[test]
    fn dense_baseline_param_count() {
        assert_eq!(baseline().param_count(None).unwrap(), 9_678_542);
    }

    #[test]
    fn factored_baseline_param_count() {
        let ranks = [80, 105, 130, 145, 150];
        assert_eq!(
            baseline().param_count(Some(&ranks)).unwrap(),
            3_108_842
        );
    }

    #[test]
    fn tiny_vanilla_param_count() {
        // input 3x2 + recurrent 3x3 + bias 3 + output 2x3 + output bias 2.
        let arch = Architecture::new(CellType::Rnn, 2, vec![3], 2).unwrap();
        assert_eq!(arch.param_count(None).unwrap(), 26);
    }

    #[test]
    fn counts_agree_with_generated_tensors() {
        for arch in [
            Architecture::new(CellType::Lstm, 7, vec![5, 9, 4], 3).unwrap(),
            Architecture::new(CellType::Rnn, 4, vec![6, 2], 5).unwrap(),
            Architecture::new(CellType::Lstm, 1, vec![1], 1).unwrap(),
        ] {
            let model = Model::generate_random(&arch, 9).unwrap();
            assert_eq!(model.param_count(), arch.param_count(None).unwrap());
            assert_eq!(model.architecture(), arch);
            model.validate().unwrap();
        }
    }

    #[test]
    fn param_count_validates_ranks() {
        let arch = baseline();
        assert!(matches!(
            arch.param_count(Some(&[10, 10, 10])),
            Err(ModelError::RankCount { expected: 5, got: 3 })
        ));
        assert!(matches!(
            arch.param_count(Some(&[10, 10, 501, 10, 10])),
            Err(ModelError::RankRange { layer: 3, rank: 501, max: 500 })
        ));
        assert!(matches!(
            arch.param_count(Some(&[10, 0, 10, 10, 10])),
            Err(ModelError::RankRange { layer: 2, rank: 0, max: 500 })
        ));
    }

    #[test]
    fn architecture_rejects_degenerate_shapes() {
        assert!(matches!(
            Architecture::new(CellType::Lstm, 4, vec![], 2),
            Err(ModelError::NoLayers)
        ));
        assert!(matches!(
            Architecture::new(CellType::Lstm, 0, vec![3], 2),
            Err(ModelError::ZeroDimension { what: "input_dim" })
        ));
        assert!(matches!(
            Architecture::new(CellType::Lstm, 4, vec![3, 0], 2),
            Err(ModelError::ZeroDimension { what: "layer size" })
        ));
        assert!(matches!(
            Architecture::new(CellType::Lstm, 4, vec![3], 0),
            Err(ModelError::ZeroDimension { what: "output_dim" })
        ));
    }

    #[test]
    fn generation_is_deterministic_and_bounded() {
        let arch = Architecture::new(CellType::Lstm, 3, vec![4, 2], 2).unwrap();
        let a = Model::generate_random(&arch, 42).unwrap();
        let b = Model::generate_random(&arch, 42).unwrap();
        assert_eq!(a, b);
        let c = Model::generate_random(&arch, 43).unwrap();
        assert_ne!(a, c);
        for x in a.input_matrix.as_slice() {
            assert!(x.abs() <= 0.2000001);
            // Values must sit exactly on the f32 grid.
            assert_eq!(*x, *x as f32 as f64);
        }
        let peep = a.layers[0].peepholes.as_ref().unwrap();
        for x in &peep.forget {
            assert!(x.abs() <= 0.1000001);
        }
        for x in &a.layers[0].bias {
            assert_eq!(*x, 0.0);
        }
    }

    #[test]
    fn vanilla_generation_has_no_peepholes() {
        let arch = Architecture::new(CellType::Rnn, 3, vec![4], 2).unwrap();
        let m = Model::generate_random(&arch, 1).unwrap();
        assert!(m.layers[0].peepholes.is_none());
        assert_eq!(m.layers[0].bias.len(), 4);
        assert_eq!(m.input_matrix.rows(), 4);
    }

    #[test]
    fn gate_stack_roundtrip() {
        let bundle = GateBundle {
            input: Matrix::from_rows(&[&[1.0, 2.0]]),
            forget: Matrix::from_rows(&[&[3.0, 4.0]]),
            cell: Matrix::from_rows(&[&[5.0, 6.0]]),
            output: Matrix::from_rows(&[&[7.0, 8.0]]),
        };
        let stacked = stack_gates(&bundle).unwrap();
        assert_eq!(stacked.rows(), 4);
        assert_eq!(stacked.get(1, 1), 4.0);
        assert_eq!(unstack_gates(&stacked).unwrap(), bundle);
    }

    #[test]
    fn gate_stack_validates_shapes() {
        let bundle = GateBundle {
            input: Matrix::zeros(2, 2),
            forget: Matrix::zeros(2, 3),
            cell: Matrix::zeros(2, 2),
            output: Matrix::zeros(2, 2),
        };
        assert!(matches!(
            stack_gates(&bundle),
            Err(ModelError::BadShape { tensor: "gate block", .. })
        ));
        assert!(matches!(
            unstack_gates(&Matrix::zeros(6, 2)),
            Err(ModelError::GateRows { rows: 6, gates: 4 })
        ));
    }

    #[test]
    fn validate_rejects_inconsistent_tensors() {
        let arch = Architecture::new(CellType::Lstm, 3, vec![4], 2).unwrap();
        let mut m = Model::generate_random(&arch, 1).unwrap();
        m.layers[0].bias.push(0.0);
        assert!(matches!(
            m.validate(),
            Err(ModelError::BadShape { tensor: "bias", layer: 1, .. })
        ));

        let mut m = Model::generate_random(&arch, 1).unwrap();
        m.layers[0].peepholes = None;
        assert!(matches!(
            m.validate(),
            Err(ModelError::MissingPeepholes { layer: 1 })
        ));

        let vanilla = Architecture::new(CellType::Rnn, 3, vec![4], 2).unwrap();
        let mut m = Model::generate_random(&vanilla, 1).unwrap();
        m.layers[0].peepholes = Some(Peepholes {
            input: vec![0.0; 4],
            forget: vec![0.0; 4],
            output: vec![0.0; 4],
        });
        assert!(matches!(
            m.validate(),
            Err(ModelError::UnexpectedPeepholes { layer: 1 })
        ));
    }
}
