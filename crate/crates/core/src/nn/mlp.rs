use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense network with tanh hidden layers and an identity output layer.
///
/// Weights are stored per layer as a flat row-major `in x out` matrix, so the
/// forward pass walks contiguous rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpDoc", into = "MlpDoc")]
pub struct Mlp {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Activation record of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    /// `activations[l]` is the input to layer `l`; the last entry is the output.
    activations: Vec<Vec<f64>>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Network output, flat `batch x out_dim`.
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("tape has at least input and output")
    }

    pub fn into_output(mut self) -> Vec<f64> {
        self.activations.pop().expect("tape has at least input and output")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn segments(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }
}

impl Mlp {
    /// Uniform `±sqrt(1/fan_in)` weights, zero biases; the output layer's
    /// weights are further multiplied by `output_scale`.
    pub fn new<R: Rng + ?Sized>(layer_dims: &[usize], output_scale: f64, rng: &mut R) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::Config(format!("invalid layer dims {layer_dims:?}")));
        }
        let n_layers = layer_dims.len() - 1;
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for (l, pair) in layer_dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (1.0 / fan_in as f64).sqrt();
            let scale = if l + 1 == n_layers { output_scale } else { 1.0 };
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-bound..bound) * scale)
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    pub fn zeros(layer_dims: &[usize]) -> Self {
        Self {
            layer_dims: layer_dims.to_vec(),
            weights: layer_dims.windows(2).map(|p| vec![0.0; p[0] * p[1]]).collect(),
            biases: layer_dims.windows(2).map(|p| vec![0.0; p[1]]).collect(),
        }
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Layer weights, flat `in x out`: entry `k * out + j` connects input `k`
    /// to unit `j`.
    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    /// Parameter slices in the order used by [`MlpGrads::segments`].
    pub fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|x| x.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        let tape = self.forward_batch(x, 1)?;
        Ok((tape.output().to_vec(), tape))
    }

    /// Output only, for callers that do not backpropagate.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(x, 1)?.into_output())
    }

    /// Forward a flat `batch x input_dim` matrix.
    ///
    /// A sample's output does not depend on the batch it is evaluated in:
    /// every output unit is reduced in the same fixed order, so evaluating a
    /// sample alone or inside a batch is bitwise identical.
    pub fn forward_batch(&self, xs: &[f64], batch: usize) -> Result<Tape> {
        let in_dim = self.input_dim();
        if xs.len() != batch * in_dim {
            return Err(Error::DimensionMismatch {
                context: "mlp input",
                expected: batch * in_dim,
                actual: xs.len(),
            });
        }
        let n_layers = self.n_layers();
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(xs.to_vec());
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let mut out = vec![0.0; batch * fan_out];
            dense_forward(&self.weights[l], &self.biases[l], &activations[l], fan_in, &mut out);
            if l + 1 < n_layers {
                out.iter_mut().for_each(|z| *z = z.tanh());
            }
            activations.push(out);
        }
        Ok(Tape { batch, activations })
    }

    /// Reverse pass for the scalar `sum(output * dy)`.
    ///
    /// Returns the input gradient (flat `batch x input_dim`) and parameter
    /// gradients summed over the batch.
    pub fn backward(&self, tape: &Tape, dy: &[f64]) -> Result<(Vec<f64>, MlpGrads)> {
        let mut grads = self.zero_grads();
        let dx = self.backward_into(tape, dy, &mut grads)?;
        Ok((dx, grads))
    }

    /// Like [`Mlp::backward`] but accumulates into existing gradients.
    pub fn backward_into(&self, tape: &Tape, dy: &[f64], grads: &mut MlpGrads) -> Result<Vec<f64>> {
        let batch = tape.batch;
        if dy.len() != batch * self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "mlp output gradient",
                expected: batch * self.output_dim(),
                actual: dy.len(),
            });
        }
        let n_layers = self.n_layers();
        let mut delta = dy.to_vec();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            if l + 1 < n_layers {
                // through tanh: d pre = d out * (1 - out^2)
                for (d, h) in delta.iter_mut().zip(&tape.activations[l + 1]) {
                    *d *= 1.0 - h * h;
                }
            }
            for row in delta.chunks_exact(fan_out) {
                for (g, d) in grads.biases[l].iter_mut().zip(row) {
                    *g += d;
                }
            }
            // gW (in x out) += X^T (in x B) * delta (B x out)
            gemm(
                Dims { m: fan_in, k: batch, n: fan_out },
                Operand { data: &tape.activations[l], rs: 1, cs: fan_in },
                Operand { data: &delta, rs: fan_out, cs: 1 },
                &mut grads.weights[l],
                1.0,
            );
            // dX (B x in) = delta (B x out) * W^T (out x in)
            let mut dx = vec![0.0; batch * fan_in];
            gemm(
                Dims { m: batch, k: fan_out, n: fan_in },
                Operand { data: &delta, rs: fan_out, cs: 1 },
                Operand { data: &self.weights[l], rs: 1, cs: fan_out },
                &mut dx,
                0.0,
            );
            delta = dx;
        }
        Ok(delta)
    }
}

/// `out[s] = b + x[s] * W` for every sample, with `W` stored `in x out`.
fn dense_forward(wt: &[f64], b: &[f64], input: &[f64], fan_in: usize, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            unsafe { dense_forward_avx2(wt, b, input, fan_in, out) };
            return;
        }
    }
    dense_forward_impl(wt, b, input, fan_in, out);
}

// Wider registers only; no FMA, so results match the portable build bit for bit.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dense_forward_avx2(wt: &[f64], b: &[f64], input: &[f64], fan_in: usize, out: &mut [f64]) {
    dense_forward_impl(wt, b, input, fan_in, out);
}

#[inline(always)]
fn dense_forward_impl(wt: &[f64], b: &[f64], input: &[f64], fan_in: usize, out: &mut [f64]) {
    let fan_out = b.len();
    for (x, z) in input.chunks_exact(fan_in).zip(out.chunks_exact_mut(fan_out)) {
        z.copy_from_slice(b);
        for (&xk, w_row) in x.iter().zip(wt.chunks_exact(fan_out)) {
            for (zj, wkj) in z.iter_mut().zip(w_row) {
                *zj += xk * wkj;
            }
        }
    }
}

struct Dims {
    m: usize,
    k: usize,
    n: usize,
}

/// Strided view of a dense matrix.
struct Operand<'a> {
    data: &'a [f64],
    rs: usize,
    cs: usize,
}

impl Operand<'_> {
    fn fits(&self, rows: usize, cols: usize) -> bool {
        rows == 0 || cols == 0 || (rows - 1) * self.rs + (cols - 1) * self.cs < self.data.len()
    }
}

/// `c (m x n, row-major) = a (m x k) * b (k x n) + beta * c`
fn gemm(dims: Dims, a: Operand<'_>, b: Operand<'_>, c: &mut [f64], beta: f64) {
    let Dims { m, k, n } = dims;
    assert!(a.fits(m, k) && b.fits(k, n) && c.len() == m * n, "gemm operand shapes");
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the assertion above keeps every strided access inside the
    // borrowed slices, and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Portable form: weights as nested arrays, one row per output unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpDoc {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<Mlp> for MlpDoc {
    fn from(m: Mlp) -> Self {
        let weights = m
            .weights
            .iter()
            .zip(m.layer_dims.windows(2))
            .map(|(w, dims)| {
                let (fan_in, fan_out) = (dims[0], dims[1]);
                (0..fan_out)
                    .map(|j| (0..fan_in).map(|k| w[k * fan_out + j]).collect())
                    .collect()
            })
            .collect();
        MlpDoc {
            layer_dims: m.layer_dims,
            weights,
            biases: m.biases,
        }
    }
}

impl TryFrom<MlpDoc> for Mlp {
    type Error = Error;

    fn try_from(doc: MlpDoc) -> Result<Self> {
        let dims = &doc.layer_dims;
        let bad = |why: String| Error::Config(format!("malformed network: {why}"));
        if dims.len() < 2 || doc.weights.len() != dims.len() - 1 || doc.biases.len() != dims.len() - 1 {
            return Err(bad(format!("layer count does not match dims {dims:?}")));
        }
        let mut weights = Vec::with_capacity(doc.weights.len());
        for (l, rows) in doc.weights.into_iter().enumerate() {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            if rows.len() != fan_out || rows.iter().any(|r| r.len() != fan_in) {
                return Err(bad(format!("layer {l} weights are not {fan_out}x{fan_in}")));
            }
            if doc.biases[l].len() != fan_out {
                return Err(bad(format!("layer {l} bias length")));
            }
            let mut wt = vec![0.0; fan_in * fan_out];
            for (j, row) in rows.iter().enumerate() {
                for (k, &w) in row.iter().enumerate() {
                    wt[k * fan_out + j] = w;
                }
            }
            weights.push(wt);
        }
        let mlp = Mlp {
            layer_dims: doc.layer_dims,
            weights,
            biases: doc.biases,
        };
        if !mlp.is_finite() {
            return Err(bad("non-finite parameter".into()));
        }
        Ok(mlp)
    }
}
