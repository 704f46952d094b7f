//! Learnable channel-graph layer: E' = (A + I)·Ē with a symmetric,
//! zero-diagonal adjacency A over the spatially filtered channels.
//!
//! A starts at zero, so the layer begins as the identity map and any
//! cross-channel mixing is learned. Constraints are kept by Euclidean
//! projection after every optimizer step.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Symmetric, zero-diagonal adjacency over M channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    a: Array2<f64>,
}

impl Adjacency {
    /// The zero graph: the layer is exactly the identity.
    pub fn zeros(m: usize) -> Self {
        Self {
            a: Array2::zeros((m, m)),
        }
    }

    /// Wraps a matrix that already satisfies the constraints; rejects
    /// anything asymmetric or with a nonzero diagonal.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                what: "adjacency".into(),
                expected: format!("{r}x{r}"),
                actual: format!("{r}x{c}"),
            });
        }
        for i in 0..r {
            if a[(i, i)] != 0.0 {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: i,
                    delta: a[(i, i)].abs(),
                });
            }
            for j in (i + 1)..r {
                if a[(i, j)] != a[(j, i)] {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        delta: (a[(i, j)] - a[(j, i)]).abs(),
                    });
                }
            }
        }
        Ok(Self { a })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.a
    }
}

/// Forward pass: exact product (A + I)·Ē.
pub fn dgr_forward(adj: &Adjacency, e_bar: &Array2<f64>) -> Result<Array2<f64>> {
    let m = adj.order();
    if e_bar.nrows() != m {
        return Err(Error::DimensionMismatch {
            what: "graph layer input".into(),
            expected: m.to_string(),
            actual: e_bar.nrows().to_string(),
        });
    }
    Ok(adj.a.dot(e_bar) + e_bar)
}

/// Backward pass. Returns the adjacency gradient already projected onto
/// the constraint set (symmetrized, zero diagonal) and the input
/// gradient (A + I)ᵀ·upstream.
pub fn dgr_grad(
    adj: &Adjacency,
    e_bar: &Array2<f64>,
    upstream: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let m = adj.order();
    if e_bar.dim() != upstream.dim() || e_bar.nrows() != m {
        return Err(Error::DimensionMismatch {
            what: "graph layer gradient".into(),
            expected: format!("{m}x{}", e_bar.ncols()),
            actual: format!("{}x{}", upstream.nrows(), upstream.ncols()),
        });
    }
    let raw = upstream.dot(&e_bar.t());
    let grad_adj = project_raw(&raw);
    let grad_input = adj.a.t().dot(upstream) + upstream;
    Ok((grad_adj, grad_input))
}

/// Euclidean projection onto the constraint set: (G + Gᵀ)/2 with the
/// diagonal zeroed.
pub fn project_adjacency(a_raw: &Array2<f64>) -> Adjacency {
    Adjacency {
        a: project_raw(a_raw),
    }
}

fn project_raw(g: &Array2<f64>) -> Array2<f64> {
    let n = g.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[(i, j)] = 0.5 * (g[(i, j)] + g[(j, i)]);
            }
        }
    }
    out
}
