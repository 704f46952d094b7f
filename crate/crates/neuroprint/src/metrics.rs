//! Evaluation: confusion matrix, macro precision/recall/F1, one-vs-rest
//! ROC with AUC, and a wall-clock latency probe for the decision path.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::dgr_forward;
use crate::net::ClassifierModel;
use crate::rng::SplitMix64;

/// K×K prediction counts; rows are true classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "need at least one class");
        Self {
            counts: vec![vec![0; k]; k],
        }
    }

    /// Wraps literal counts, validating squareness.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 || counts.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                what: "confusion matrix".into(),
                expected: format!("{k}x{k}"),
                actual: counts
                    .iter()
                    .map(|r| r.len().to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            });
        }
        Ok(Self { counts })
    }

    pub fn order(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    /// Count at (true class t, predicted p), both 1-based.
    pub fn at(&self, t: u32, p: u32) -> u64 {
        self.counts[(t - 1) as usize][(p - 1) as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.order()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let k = self.order();
        (0..k).map(|j| (0..k).map(|i| self.counts[i][j]).sum()).collect()
    }

    /// K lines of K comma-separated integers.
    pub fn to_csv(&self) -> String {
        self.counts
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }
}

/// Tallies prediction/label pairs (labels are 1-based class ids).
pub fn confusion_matrix(preds: &[u32], labels: &[u32], k: usize) -> Result<ConfusionMatrix> {
    assert_eq!(preds.len(), labels.len(), "preds and labels must pair up");
    let mut cm = ConfusionMatrix::new(k);
    for (&p, &t) in preds.iter().zip(labels) {
        for v in [p, t] {
            if v < 1 || v as usize > k {
                return Err(Error::LabelOutOfRange {
                    label: v,
                    num_classes: k,
                });
            }
        }
        cm.counts[(t - 1) as usize][(p - 1) as usize] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassPrf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of true instances (row sum).
    pub support: u64,
    /// True when a zero denominator forced any of the above to 0.
    pub zero_denominator: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrfReport {
    pub per_class: Vec<ClassPrf>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// Harmonic mean of the macro precision and macro recall (the F1 of
    /// the macro-averaged rates, not the mean of per-class F1 scores).
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class and macro precision/recall/F1 plus overall accuracy.
/// Zero-denominator cases (empty class or never-predicted class) yield
/// 0 and set the per-class flag.
pub fn prf1(cm: &ConfusionMatrix) -> PrfReport {
    assert!(cm.total() > 0, "confusion matrix is empty");
    let k = cm.order();
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let mut per_class = Vec::with_capacity(k);
    for i in 0..k {
        let hit = cm.counts[i][i] as f64;
        let zero = rows[i] == 0 || cols[i] == 0;
        let precision = if cols[i] == 0 { 0.0 } else { hit / cols[i] as f64 };
        let recall = if rows[i] == 0 { 0.0 } else { hit / rows[i] as f64 };
        per_class.push(ClassPrf {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: rows[i],
            zero_denominator: zero,
        });
    }
    let kf = k as f64;
    let macro_precision = per_class.iter().map(|c| c.precision).sum::<f64>() / kf;
    let macro_recall = per_class.iter().map(|c| c.recall).sum::<f64>() / kf;
    PrfReport {
        macro_precision,
        macro_recall,
        macro_f1: harmonic(macro_precision, macro_recall),
        accuracy: cm.trace() as f64 / cm.total() as f64,
        per_class,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRoc {
    pub class: u32,
    /// None when the class has no positives or no negatives.
    pub auc: Option<f64>,
    pub points: Vec<RocPoint>,
}

impl ClassRoc {
    /// Lines of `threshold,fpr,tpr` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocReport {
    pub per_class: Vec<ClassRoc>,
    /// Mean AUC over classes where it is defined; None if none are.
    pub macro_auc: Option<f64>,
}

/// One-vs-rest ROC and AUC for every class.
///
/// AUC is the rank statistic: the probability that a positive outranks
/// a negative, ties counting one half. ROC thresholds are the distinct
/// observed scores plus ±∞ endpoints, swept from high to low with
/// prediction rule score ≥ threshold; the trapezoid area under those
/// points equals the rank statistic.
pub fn roc_auc_ovr(prob_rows: &[Vec<f64>], labels: &[u32], k: usize) -> Result<RocReport> {
    assert_eq!(prob_rows.len(), labels.len(), "rows and labels must pair up");
    for row in prob_rows {
        assert_eq!(row.len(), k, "each probability row must have K entries");
        let sum: f64 = row.iter().sum();
        assert!(
            row.iter().all(|v| v.is_finite()) && (sum - 1.0).abs() < 1e-6,
            "probability rows must lie on the simplex"
        );
    }
    for &t in labels {
        if t < 1 || t as usize > k {
            return Err(Error::LabelOutOfRange {
                label: t,
                num_classes: k,
            });
        }
    }

    let mut per_class = Vec::with_capacity(k);
    for class in 1..=k as u32 {
        let j = (class - 1) as usize;
        let scores: Vec<f64> = prob_rows.iter().map(|r| r[j]).collect();
        let positive: Vec<bool> = labels.iter().map(|&t| t == class).collect();
        let n_pos = positive.iter().filter(|&&b| b).count();
        let n_neg = positive.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            per_class.push(ClassRoc {
                class,
                auc: None,
                points: Vec::new(),
            });
            continue;
        }
        per_class.push(ClassRoc {
            class,
            auc: Some(rank_auc(&scores, &positive, n_pos, n_neg)),
            points: roc_points(&scores, &positive, n_pos, n_neg),
        });
    }
    let defined: Vec<f64> = per_class.iter().filter_map(|c| c.auc).collect();
    let macro_auc = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(RocReport {
        per_class,
        macro_auc,
    })
}

/// Mann–Whitney AUC with average ranks over tie groups.
fn rank_auc(scores: &[f64], positive: &[bool], n_pos: usize, n_neg: usize) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j averaged across the tie group
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &t in &idx[i..j] {
            if positive[t] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let n_pos_f = n_pos as f64;
    (rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64)
}

fn roc_points(scores: &[f64], positive: &[bool], n_pos: usize, n_neg: usize) -> Vec<RocPoint> {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| b.partial_cmp(a).expect("finite scores"));
    distinct.dedup();

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    for &th in &distinct {
        for (s, &pos) in scores.iter().zip(positive) {
            if *s == th {
                if pos {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        points.push(RocPoint {
            threshold: th,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    points
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageStats {
    pub name: String,
    pub mean_s: f64,
    pub p95_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatencyReport {
    pub stages: Vec<StageStats>,
    /// Whole-pass wall clock per repetition (≥ the sum of stage times).
    pub total: StageStats,
    pub reps: usize,
}

fn percentile95(sorted: &[f64]) -> f64 {
    let idx = ((sorted.len() as f64) * 0.95).ceil() as usize;
    sorted[idx.saturating_sub(1).min(sorted.len() - 1)]
}

fn stage_stats(name: &str, mut durations: Vec<f64>) -> StageStats {
    let mean_s = durations.iter().sum::<f64>() / durations.len() as f64;
    durations.sort_by(|a, b| a.partial_cmp(b).expect("finite durations"));
    StageStats {
        name: name.to_string(),
        mean_s,
        p95_s: percentile95(&durations),
    }
}

/// Times each named stage over at least 20 repetitions and reports
/// mean and 95th-percentile seconds, plus the whole-pass total.
pub fn latency_probe(stages: &mut [(&str, Box<dyn FnMut() + '_>)], reps: usize) -> LatencyReport {
    let reps = reps.max(20);
    let mut per_stage: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); stages.len()];
    let mut totals = Vec::with_capacity(reps);
    for _ in 0..reps {
        let rep_start = Instant::now();
        for (i, (_, f)) in stages.iter_mut().enumerate() {
            let t0 = Instant::now();
            f();
            per_stage[i].push(t0.elapsed().as_secs_f64());
        }
        totals.push(rep_start.elapsed().as_secs_f64());
    }
    LatencyReport {
        stages: stages
            .iter()
            .zip(per_stage)
            .map(|((name, _), d)| stage_stats(name, d))
            .collect(),
        total: stage_stats("total", totals),
        reps,
    }
}

/// Seconds of signal a decision window represents: L / sampling rate.
pub fn acquisition_equivalent(window: usize, rate: f64) -> f64 {
    window as f64 / rate
}

/// Four-stage decision latency for a trained model on random input:
/// an acquisition-equivalent constant (window/rate, not measured), the
/// measured normalize+spatial-filter+graph stage, the measured network
/// stage, and the whole-pass total (acquisition constant added in).
pub fn decision_latency(
    model: &ClassifierModel,
    rate: f64,
    reps: usize,
    seed: u64,
) -> Result<LatencyReport> {
    let m = model.num_channels();
    let l = model.window_len();
    let mut rng = SplitMix64::new(seed);
    let data = Array2::from_shape_fn((m, l), |_| rng.next_gaussian());

    // Pre-flight to surface errors before the timed closures unwrap.
    model.predict_raw(&data)?;

    let acq = acquisition_equivalent(l, rate);
    let features = std::cell::RefCell::new(Array2::<f64>::zeros((m, l)));
    let mut stages: Vec<(&str, Box<dyn FnMut() + '_>)> = vec![
        (
            "spatial+graph",
            Box::new(|| {
                let normed = model.norm.apply_matrix(&data).expect("checked above");
                let e_bar = model.csp.w.dot(&normed);
                *features.borrow_mut() =
                    dgr_forward(&model.adjacency, &e_bar).expect("checked above");
            }),
        ),
        (
            "network",
            Box::new(|| {
                let x1 = features.borrow();
                let y = model.conv.forward(&x1);
                let flat = ndarray::Array1::from_iter(y.iter().cloned());
                let h = model.fc_hidden.forward(&flat).expect("checked above");
                model.fc_out.forward(&h).expect("checked above");
            }),
        ),
    ];
    let measured = latency_probe(&mut stages, reps);

    let mut stages = vec![StageStats {
        name: "acquisition".into(),
        mean_s: acq,
        p95_s: acq,
    }];
    stages.extend(measured.stages);
    Ok(LatencyReport {
        total: StageStats {
            name: "total".into(),
            mean_s: measured.total.mean_s + acq,
            p95_s: measured.total.p95_s + acq,
        },
        stages,
        reps: measured.reps,
    })
}
