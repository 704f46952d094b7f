//! Multi-class (one-vs-others) Common Spatial Pattern filtering.
//!
//! Per epoch, the trace-normalized covariance C = E·Eᵀ/tr(E·Eᵀ) is
//! amplitude-invariant. Class means are whitened jointly, each class is
//! contrasted against the pooled rest via a generalized eigenproblem, and
//! the filter bank W (one row per spatial filter) is assembled
//! round-robin across classes.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{gen_eig_sym, sym_eig, whitening, SymMatrix};
use crate::pipeline::Epoch;

/// Tolerance for the generalized-eigenpair residual of every retained
/// filter, relative to (1 + λ).
pub const RESIDUAL_TOL: f64 = 1e-8;

/// A fitted spatial filter bank.
#[derive(Debug, Clone)]
pub struct CspModel {
    /// M×M; row r is a spatial filter acting directly on raw epochs.
    pub w: Array2<f64>,
    /// Class ids in fitting order (1..=K).
    pub class_order: Vec<u32>,
    /// Per class, all M generalized eigenvalues, sorted descending.
    pub per_class_eigvals: Vec<Vec<f64>>,
    pub num_channels: usize,
}

/// Trace-normalized covariance of one epoch: symmetric, PSD, trace 1.
pub fn normalized_cov(epoch: &Epoch) -> Result<SymMatrix> {
    let e = &epoch.data;
    let prod = e.dot(&e.t());
    let trace: f64 = (0..prod.nrows()).map(|i| prod[(i, i)]).sum();
    if !(trace > 0.0) {
        return Err(Error::ZeroTrace);
    }
    SymMatrix::symmetrized(prod / trace)
}

/// Arithmetic mean of normalized covariances per class, indexed by
/// class − 1 for classes 1..=K (K = highest label present).
pub fn class_mean_covs(epochs: &[Epoch]) -> Result<Vec<SymMatrix>> {
    let k = epochs.iter().map(|e| e.label).max().unwrap_or(0) as usize;
    if k == 0 {
        return Err(Error::NoSamples);
    }
    let m = epochs[0].num_channels();
    let mut sums: Vec<Array2<f64>> = vec![Array2::zeros((m, m)); k];
    let mut counts = vec![0usize; k];
    for ep in epochs {
        let c = normalized_cov(ep)?;
        sums[(ep.label - 1) as usize] += c.entries();
        counts[(ep.label - 1) as usize] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (sum, n))| {
            if n == 0 {
                return Err(Error::EmptyClass {
                    class: (i + 1) as u32,
                });
            }
            SymMatrix::symmetrized(sum / n as f64)
        })
        .collect()
}

/// Fits the full CSP filter bank for `k` classes.
///
/// Whitens the composite covariance ΣC̄, poses one generalized
/// eigenproblem per class (that class against the sum of the others in
/// the whitened basis), then assembles W by taking each class's
/// next-best eigenvector in rotation, skipping directions already
/// spanned, until M rows are kept. Rows are unit-normalized (eigenvector
/// scale is free; unit rows keep downstream feature scale tame).
pub fn fit_csp(epochs: &[Epoch], k: usize) -> Result<CspModel> {
    for ep in epochs {
        if ep.label < 1 || ep.label as usize > k {
            return Err(Error::LabelOutOfRange {
                label: ep.label,
                num_classes: k,
            });
        }
    }
    if epochs.is_empty() {
        return Err(Error::NoSamples);
    }
    let m = epochs[0].num_channels();

    let mut means = class_mean_covs(epochs)?;
    if means.len() < k {
        return Err(Error::EmptyClass {
            class: (means.len() + 1) as u32,
        });
    }
    means.truncate(k);

    let mut composite = Array2::<f64>::zeros((m, m));
    for c in &means {
        composite += c.entries();
    }
    let p = whitening(&SymMatrix::symmetrized(composite)?).map_err(|e| match e {
        Error::RankDeficient { index, value, .. } => Error::RankDeficient {
            index,
            value,
            hint: " (possible cause: too few or too short epochs)".into(),
        },
        other => other,
    })?;

    // Whitened class covariances; these sum to the identity.
    let s: Vec<SymMatrix> = means
        .iter()
        .map(|c| SymMatrix::symmetrized(p.dot(c.entries()).dot(&p.t())))
        .collect::<Result<_>>()?;

    // One generalized problem per class; K=1 degrades to a plain
    // eigendecomposition of the single class covariance.
    let mut class_vectors: Vec<Vec<Array1<f64>>> = Vec::with_capacity(k);
    let mut per_class_eigvals = Vec::with_capacity(k);
    for i in 0..k {
        let eig = if k == 1 {
            sym_eig(&s[0])?
        } else {
            let mut rest = Array2::<f64>::zeros((m, m));
            for (j, sj) in s.iter().enumerate() {
                if j != i {
                    rest += sj.entries();
                }
            }
            gen_eig_sym(&s[i], &SymMatrix::symmetrized(rest)?)?
        };
        let vectors: Vec<Array1<f64>> = (0..m)
            .map(|c| {
                let v = eig.vectors.column(c).to_owned();
                let n = v.dot(&v).sqrt();
                v / n
            })
            .collect();
        // Residual of the class-i eigen equation for every candidate.
        if k > 1 {
            let mut rest = Array2::<f64>::zeros((m, m));
            for (j, sj) in s.iter().enumerate() {
                if j != i {
                    rest += sj.entries();
                }
            }
            for (c, v) in vectors.iter().enumerate() {
                let lam = eig.values[c];
                let lhs = s[i].entries().dot(v);
                let rhs = rest.dot(v) * lam;
                let resid = (&lhs - &rhs).mapv(|x| x * x).sum().sqrt();
                if resid > RESIDUAL_TOL * (1.0 + lam.abs()) {
                    return Err(Error::FilterResidual {
                        class: (i + 1) as u32,
                        residual: resid,
                    });
                }
            }
        }
        class_vectors.push(vectors);
        per_class_eigvals.push(eig.values.to_vec());
    }

    // Round-robin assembly with a span check (Gram–Schmidt residual).
    let mut w = Array2::<f64>::zeros((m, m));
    let mut ortho: Vec<Array1<f64>> = Vec::with_capacity(m);
    let mut selected = 0usize;
    let mut next = vec![0usize; k];
    while selected < m {
        let mut advanced = false;
        for class in 0..k {
            if selected == m {
                break;
            }
            while next[class] < m {
                let v = &class_vectors[class][next[class]];
                next[class] += 1;
                advanced = true;
                // Row in the raw basis, then unit-normalized.
                let row = p.t().dot(v);
                let norm = row.dot(&row).sqrt();
                let row = row / norm;
                let mut resid = row.clone();
                for q in &ortho {
                    let coeff = resid.dot(q);
                    resid -= &(q * coeff);
                }
                let rnorm = resid.dot(&resid).sqrt();
                // ‖projection‖ > (1−1e-8)·‖row‖ ⟺ residual² < 1−(1−1e-8)².
                if rnorm * rnorm < 1.0 - (1.0 - 1e-8f64).powi(2) {
                    continue; // already spanned
                }
                w.row_mut(selected).assign(&row);
                ortho.push(resid / rnorm);
                selected += 1;
                break;
            }
        }
        if !advanced {
            return Err(Error::RankDeficient {
                index: selected,
                value: 0.0,
                hint: " (filter assembly ran out of independent directions)".into(),
            });
        }
    }

    Ok(CspModel {
        w,
        class_order: (1..=k as u32).collect(),
        per_class_eigvals,
        num_channels: m,
    })
}

/// Projects an epoch through the filter bank: Ē = W·E.
pub fn apply_csp(model: &CspModel, epoch: &Epoch) -> Result<Epoch> {
    if epoch.num_channels() != model.num_channels {
        return Err(Error::DimensionMismatch {
            what: "spatial filter input".into(),
            expected: model.num_channels.to_string(),
            actual: epoch.num_channels().to_string(),
        });
    }
    Ok(Epoch {
        data: model.w.dot(&epoch.data),
        ..epoch.clone()
    })
}
