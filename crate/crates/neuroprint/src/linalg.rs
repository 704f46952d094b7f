//! Dense symmetric eigendecomposition, whitening, and generalized
//! symmetric eigenproblems — the numeric substrate for spatial filtering.
//!
//! The solver is a cyclic Jacobi rotation scheme. Channel counts here are
//! at most a few dozen, so robustness and determinism matter more than
//! asymptotic speed. All arithmetic is `f64`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Asymmetry tolerated when validating an input matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// SPD floor: eigenvalues at or below `EPS_FLOOR_REL * lambda_max` fail
/// loudly instead of being regularized away.
pub const EPS_FLOOR_REL: f64 = 1e-10;

/// A validated real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    entries: Array2<f64>,
}

impl SymMatrix {
    /// Validates squareness, finiteness, and symmetry (within
    /// [`SYMMETRY_TOL`], scaled by the largest magnitude present).
    /// On asymmetric input the error names the worst offending pair.
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                what: "symmetric matrix".into(),
                expected: format!("{r}x{r}"),
                actual: format!("{r}x{c}"),
            });
        }
        if let Some(((i, j), _)) = entries.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("matrix entry ({i},{j})"),
            });
        }
        let scale = entries.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut worst = (0usize, 0usize, 0.0_f64);
        for i in 0..r {
            for j in (i + 1)..r {
                let d = (entries[(i, j)] - entries[(j, i)]).abs();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        if worst.2 > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric {
                row: worst.0,
                col: worst.1,
                delta: worst.2,
            });
        }
        Ok(Self { entries })
    }

    /// Builds from an arbitrary square matrix by averaging `(A + Aᵀ)/2`.
    /// Used for products that are symmetric up to rounding.
    pub fn symmetrized(mut entries: Array2<f64>) -> Result<Self> {
        let n = entries.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                entries[(i, j)] = m;
                entries[(j, i)] = m;
            }
        }
        Self::new(entries)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: Array2::eye(n),
        }
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }
}

/// Eigenvalues (descending) with the matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Eigenvalues come back sorted descending; column `k` of `vectors` is the
/// unit eigenvector for `values[k]`, with its largest-magnitude component
/// made positive so repeated runs agree bit-for-bit.
pub fn sym_eig(c: &SymMatrix) -> Result<EigenPair> {
    let n = c.order();
    let mut a = c.entries().clone();
    let mut v = Array2::<f64>::eye(n);

    if n > 1 {
        let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let stop = (frob * 1e-15).max(f64::MIN_POSITIVE);
        for _sweep in 0..100 {
            let off: f64 = {
                let mut s = 0.0;
                for p in 0..n {
                    for q in (p + 1)..n {
                        s += a[(p, q)] * a[(p, q)];
                    }
                }
                (2.0 * s).sqrt()
            };
            if off <= stop {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= stop / (n as f64 * n as f64) {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (theta * theta + 1.0).sqrt())
                    } else {
                        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                    };
                    let cos = 1.0 / (t * t + 1.0).sqrt();
                    let sin = t * cos;

                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    a[(p, p)] = app - t * apq;
                    a[(q, q)] = aqq + t * apq;
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for k in 0..n {
                        if k != p && k != q {
                            let akp = a[(k, p)];
                            let akq = a[(k, q)];
                            a[(k, p)] = cos * akp - sin * akq;
                            a[(p, k)] = a[(k, p)];
                            a[(k, q)] = sin * akp + cos * akq;
                            a[(q, k)] = a[(k, q)];
                        }
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = cos * vkp - sin * vkq;
                        v[(k, q)] = sin * vkp + cos * vkq;
                    }
                }
            }
        }
    }

    // Sort descending and fix each eigenvector's sign.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let mut values = Array1::<f64>::zeros(n);
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[(src, src)];
        let mut col: Vec<f64> = (0..n).map(|k| v[(k, src)]).collect();
        fix_sign(&mut col);
        for k in 0..n {
            vectors[(k, dst)] = col[k];
        }
    }
    Ok(EigenPair { values, vectors })
}

/// Make the largest-magnitude component positive (first such index wins).
fn fix_sign(col: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0_f64;
    for (k, &x) in col.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = k;
        }
    }
    if col[idx] < 0.0 {
        for x in col.iter_mut() {
            *x = -*x;
        }
    }
}

/// Whitening transform `P` with `P · c_bar · Pᵀ = I`.
///
/// Row `k` of `P` is the k-th eigenvector (descending eigenvalue order)
/// scaled by `1/sqrt(lambda_k)`. Fails with a rank-deficiency error if any
/// eigenvalue sits at or below the SPD floor.
pub fn whitening(c_bar: &SymMatrix) -> Result<Array2<f64>> {
    let eig = sym_eig(c_bar)?;
    let n = c_bar.order();
    let floor = spd_floor(&eig.values);
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam <= floor {
            return Err(Error::RankDeficient {
                index: i,
                value: lam,
                hint: String::new(),
            });
        }
    }
    let mut p = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let s = 1.0 / eig.values[i].sqrt();
        for j in 0..n {
            p[(i, j)] = eig.vectors[(j, i)] * s;
        }
    }
    Ok(p)
}

fn spd_floor(values: &Array1<f64>) -> f64 {
    let lam_max = values.iter().fold(0.0_f64, |m, &v| m.max(v));
    EPS_FLOOR_REL * lam_max.max(f64::MIN_POSITIVE)
}

/// Generalized symmetric eigenproblem `a·v = λ·b·v` for SPD `b`.
///
/// Solved by whitening `b` and running [`sym_eig`] on the transformed `a`;
/// the returned eigenvectors are b-orthonormal (`vᵀ·b·v = 1`) and the
/// values are sorted descending.
pub fn gen_eig_sym(a: &SymMatrix, b: &SymMatrix) -> Result<EigenPair> {
    if a.order() != b.order() {
        return Err(Error::DimensionMismatch {
            what: "generalized eigenproblem".into(),
            expected: format!("{0}x{0}", a.order()),
            actual: format!("{0}x{0}", b.order()),
        });
    }
    let p = whitening(b)?;
    let a_t = p.dot(a.entries()).dot(&p.t());
    let eig = sym_eig(&SymMatrix::symmetrized(a_t)?)?;
    // Back-transform: v = Pᵀ·ṽ keeps b-orthonormality exactly.
    let mut vectors = p.t().dot(&eig.vectors);
    for mut col in vectors.columns_mut() {
        let mut tmp: Vec<f64> = col.to_vec();
        fix_sign(&mut tmp);
        for (dst, src) in col.iter_mut().zip(tmp) {
            *dst = src;
        }
    }
    Ok(EigenPair {
        values: eig.values,
        vectors,
    })
}
