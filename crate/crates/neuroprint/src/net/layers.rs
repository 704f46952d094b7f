//! Network building blocks with hand-written backward passes: a single
//! 2×2 convolution (stride 1, same-shape zero padding), dense layers,
//! the fused softmax/cross-entropy gradient, and inverted dropout.

use ndarray::{Array1, Array2, Array3};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Cross-entropy probability floor.
pub const P_FLOOR: f64 = 1e-12;

/// D filters of shape 2×2 over a single input plane, stride 1.
///
/// "Same" padding for an even kernel is asymmetric by necessity; the
/// convention here is pad-after: zero row below, zero column to the
/// right, so output (i,j) reads x[i..i+2, j..j+2] with out-of-range
/// taps contributing zero.
#[derive(Debug, Clone)]
pub struct ConvLayer {
    /// (D, 2, 2)
    pub filters: Array3<f64>,
    pub biases: Vec<f64>,
}

impl ConvLayer {
    pub fn depth(&self) -> usize {
        self.filters.dim().0
    }

    /// tanh(conv(x)) for x of shape M×L; output (D, M, L).
    pub fn forward(&self, x: &Array2<f64>) -> Array3<f64> {
        let (m, l) = x.dim();
        let d = self.depth();
        let mut y = Array3::<f64>::zeros((d, m, l));
        for f in 0..d {
            for i in 0..m {
                for j in 0..l {
                    let mut z = self.biases[f];
                    for di in 0..2usize {
                        for dj in 0..2usize {
                            let (p, q) = (i + di, j + dj);
                            if p < m && q < l {
                                z += self.filters[(f, di, dj)] * x[(p, q)];
                            }
                        }
                    }
                    y[(f, i, j)] = z.tanh();
                }
            }
        }
        y
    }

    /// Gradients given the forward input, forward output, and upstream
    /// dL/dy. Returns (d filters, d biases, d input).
    pub fn backward(
        &self,
        x: &Array2<f64>,
        y: &Array3<f64>,
        upstream: &Array3<f64>,
    ) -> (Array3<f64>, Vec<f64>, Array2<f64>) {
        let (m, l) = x.dim();
        let d = self.depth();
        let mut gf = Array3::<f64>::zeros((d, 2, 2));
        let mut gb = vec![0.0f64; d];
        let mut gx = Array2::<f64>::zeros((m, l));
        for f in 0..d {
            for i in 0..m {
                for j in 0..l {
                    let yv = y[(f, i, j)];
                    let dz = upstream[(f, i, j)] * (1.0 - yv * yv);
                    if dz == 0.0 {
                        continue;
                    }
                    gb[f] += dz;
                    for di in 0..2usize {
                        for dj in 0..2usize {
                            let (p, q) = (i + di, j + dj);
                            if p < m && q < l {
                                gf[(f, di, dj)] += dz * x[(p, q)];
                                gx[(p, q)] += dz * self.filters[(f, di, dj)];
                            }
                        }
                    }
                }
            }
        }
        (gf, gb, gx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Tanh,
    Softmax,
}

/// Fully-connected layer y = act(W·x + b).
#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// out × in
    pub weights: Array2<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn forward(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.weights.ncols() {
            return Err(Error::DimensionMismatch {
                what: "dense layer input".into(),
                expected: self.weights.ncols().to_string(),
                actual: x.len().to_string(),
            });
        }
        let mut z = self.weights.dot(x);
        for (zi, b) in z.iter_mut().zip(&self.biases) {
            *zi += b;
        }
        Ok(match self.activation {
            Activation::None => z,
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Softmax => softmax(&z),
        })
    }

    /// Gradients given forward input/output and upstream dL/dy.
    /// Returns (dW, db, dx).
    pub fn backward(
        &self,
        x: &Array1<f64>,
        y: &Array1<f64>,
        upstream: &Array1<f64>,
    ) -> (Array2<f64>, Vec<f64>, Array1<f64>) {
        let dz: Array1<f64> = match self.activation {
            Activation::None => upstream.clone(),
            Activation::Tanh => upstream * &y.mapv(|v| 1.0 - v * v),
            Activation::Softmax => {
                // Full softmax Jacobian: dz_i = y_i (u_i − Σ_j u_j y_j).
                let s = upstream.dot(y);
                upstream.mapv(|u| u - s) * y
            }
        };
        let gw = outer(&dz, x);
        let gb = dz.to_vec();
        let gx = self.weights.t().dot(&dz);
        (gw, gb, gx)
    }
}

pub(crate) fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((a.len(), b.len()));
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[(i, j)] = a[i] * b[j];
        }
    }
    out
}

/// Numerically stable softmax.
pub fn softmax(z: &Array1<f64>) -> Array1<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp = z.mapv(|v| (v - max).exp());
    let sum = exp.sum();
    exp / sum
}

/// Cross-entropy against a one-hot target given softmax output `p`.
///
/// Returns the loss −log p[true] (floored at [`P_FLOOR`]) and the fused
/// gradient with respect to the logits, p − y.
pub fn softmax_xent(p: &Array1<f64>, true_class: usize) -> (f64, Array1<f64>) {
    let loss = -p[true_class].max(P_FLOOR).ln();
    let mut grad = p.clone();
    grad[true_class] -= 1.0;
    (loss, grad)
}

/// Inverted dropout: zero with probability `rate`, scale survivors by
/// 1/(1−rate) so expectations match inference. Identity when not
/// training. Returns the output and the applied mask (multiply upstream
/// gradients by the mask to backpropagate).
pub fn dropout(
    x: &Array1<f64>,
    rate: f64,
    rng: &mut SplitMix64,
    training: bool,
) -> (Array1<f64>, Array1<f64>) {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0,1)");
    if !training || rate == 0.0 {
        let mask = Array1::ones(x.len());
        return (x.clone(), mask);
    }
    let mask = dropout_mask(x.len(), rate, rng);
    (x * &mask, mask)
}

/// Samples a dropout mask alone: entries are 0 with probability `rate`,
/// 1/(1−rate) otherwise.
pub fn dropout_mask(len: usize, rate: f64, rng: &mut SplitMix64) -> Array1<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0,1)");
    let keep = 1.0 - rate;
    Array1::from_shape_fn(len, |_| {
        if rng.next_f64() < rate {
            0.0
        } else {
            1.0 / keep
        }
    })
}
