//! Recording → labeled epochs: sliding-window segmentation inside event
//! intervals, pooled per-channel z-scoring, and deterministic stratified
//! train/test splitting with mini-batches.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::edf::Recording;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Variance floor for z-scoring; dead channels degrade gracefully.
pub const EPS_STD: f64 = 1e-8;

/// One fixed-length training window: channels × time plus its class.
#[derive(Debug, Clone)]
pub struct Epoch {
    pub data: Array2<f64>,
    pub label: u32,
    pub subject_id: String,
    /// Offset of the window start within its source recording, seconds.
    pub t0: f64,
}

impl Epoch {
    pub fn num_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn window_len(&self) -> usize {
        self.data.ncols()
    }
}

/// Per-channel normalization parameters fitted on the training pool and
/// reused verbatim on test and live data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Channels whose pooled std fell below [`EPS_STD`] and was floored.
    pub floored_channels: Vec<usize>,
}

/// Train/test partition parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub num_batches: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            num_batches: 4,
            seed: 0,
        }
    }
}

/// Cuts overlapping windows from every labeled event interval.
///
/// An event whose text parses as a positive integer is a labeled
/// interval; all others (rest markers, free text) are skipped. Windows
/// never cross an interval boundary, so an interval of `T` samples
/// yields `(T - window)/step + 1` epochs (0 if `T < window`) with
/// `step = round(window·(1 - overlap))`.
///
/// Panics if `window < 2`, `overlap` is outside `[0, 1)`, or the
/// resulting step is zero — those are caller bugs, not data conditions.
pub fn segment(recording: &Recording, window: usize, overlap: f64) -> Vec<Epoch> {
    assert!(window >= 2, "window must be at least 2 samples");
    assert!(
        (0.0..1.0).contains(&overlap),
        "overlap must be in [0, 1), got {overlap}"
    );
    let step = (window as f64 * (1.0 - overlap)).round() as usize;
    assert!(step >= 1, "window {window} with overlap {overlap} gives step 0");

    let rate = recording.sampling_rate;
    let total = recording.num_samples();
    let mut epochs = Vec::new();
    for ev in &recording.events {
        let label: u32 = match ev.text.parse() {
            Ok(l) if l >= 1 => l,
            _ => continue,
        };
        let start = (ev.onset_s * rate).round() as usize;
        let len = (ev.duration_s * rate).round() as usize;
        let end = (start + len).min(total);
        if start >= end {
            continue;
        }
        let t_interval = end - start;
        if t_interval < window {
            continue;
        }
        let count = (t_interval - window) / step + 1;
        for k in 0..count {
            let s = start + k * step;
            let data = recording
                .data
                .slice(ndarray::s![.., s..s + window])
                .to_owned();
            epochs.push(Epoch {
                data,
                label,
                subject_id: String::new(),
                t0: s as f64 / rate,
            });
        }
    }
    epochs
}

/// Fits pooled per-channel mean and standard deviation over every epoch
/// and time point in the training pool.
pub fn zscore_fit(epochs: &[Epoch]) -> Result<NormStats> {
    let first = epochs.first().ok_or(Error::NoSamples)?;
    let m = first.num_channels();
    let mut sum = vec![0.0f64; m];
    let mut sum_sq = vec![0.0f64; m];
    let mut n = 0usize;
    for ep in epochs {
        if ep.num_channels() != m {
            return Err(Error::DimensionMismatch {
                what: "epoch channel count".into(),
                expected: m.to_string(),
                actual: ep.num_channels().to_string(),
            });
        }
        for ch in 0..m {
            for &v in ep.data.row(ch) {
                sum[ch] += v;
                sum_sq[ch] += v * v;
            }
        }
        n += ep.window_len();
    }
    let n = n as f64;
    let mut mean = vec![0.0f64; m];
    let mut std = vec![0.0f64; m];
    let mut floored_channels = Vec::new();
    for ch in 0..m {
        mean[ch] = sum[ch] / n;
        let var = (sum_sq[ch] / n - mean[ch] * mean[ch]).max(0.0);
        std[ch] = var.sqrt();
        if std[ch] < EPS_STD {
            std[ch] = EPS_STD;
            floored_channels.push(ch);
        }
    }
    Ok(NormStats {
        mean,
        std,
        floored_channels,
    })
}

impl NormStats {
    /// Normalizes a channels × time matrix with the saved parameters.
    pub fn apply_matrix(&self, data: &Array2<f64>) -> Result<Array2<f64>> {
        if data.nrows() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                what: "normalization channel count".into(),
                expected: self.mean.len().to_string(),
                actual: data.nrows().to_string(),
            });
        }
        let mut out = data.clone();
        for (ch, mut row) in out.rows_mut().into_iter().enumerate() {
            let (mu, sd) = (self.mean[ch], self.std[ch]);
            row.mapv_inplace(|v| (v - mu) / sd);
        }
        Ok(out)
    }
}

/// Applies saved normalization to one epoch. Apply exactly once per
/// pipeline site: the transform is affine, not idempotent.
pub fn zscore_apply(stats: &NormStats, epoch: &Epoch) -> Result<Epoch> {
    Ok(Epoch {
        data: stats.apply_matrix(&epoch.data)?,
        ..epoch.clone()
    })
}

/// Stratified shuffle-split into mini-batches plus a held-out test set.
///
/// Per class, `round(N_k · train_fraction)` epochs go to training; the
/// pooled training set is reshuffled and cut into `num_batches`
/// near-equal batches (sizes differ by at most one). Fully determined
/// by `spec.seed`.
pub fn split_and_batch(
    epochs: Vec<Epoch>,
    spec: &SplitSpec,
) -> Result<(Vec<Vec<Epoch>>, Vec<Epoch>)> {
    assert!(
        spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
        "train_fraction must be in (0, 1)"
    );
    assert!(spec.num_batches >= 1, "need at least one mini-batch");
    let k = epochs.iter().map(|e| e.label).max().unwrap_or(0) as usize;
    let needed = spec.num_batches * k.max(1);
    if epochs.is_empty() || epochs.len() < needed {
        return Err(Error::TooFewEpochs {
            needed,
            got: epochs.len(),
        });
    }

    let mut rng = SplitMix64::new(spec.seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    for (i, ep) in epochs.iter().enumerate() {
        by_class[ep.label as usize].push(i);
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class_indices in by_class.iter_mut().skip(1) {
        rng.shuffle(class_indices);
        let n_train = (class_indices.len() as f64 * spec.train_fraction).round() as usize;
        train_idx.extend_from_slice(&class_indices[..n_train]);
        test_idx.extend_from_slice(&class_indices[n_train..]);
    }
    rng.shuffle(&mut train_idx);
    rng.shuffle(&mut test_idx);

    let mut slots: Vec<Option<Epoch>> = epochs.into_iter().map(Some).collect();
    let mut take = |idx: &[usize]| -> Vec<Epoch> {
        idx.iter().map(|&i| slots[i].take().unwrap()).collect()
    };
    let train = take(&train_idx);
    let test = take(&test_idx);

    let n = train.len();
    let base = n / spec.num_batches;
    let rem = n % spec.num_batches;
    let mut batches = Vec::with_capacity(spec.num_batches);
    let mut iter = train.into_iter();
    for b in 0..spec.num_batches {
        let size = base + usize::from(b < rem);
        batches.push(iter.by_ref().take(size).collect());
    }
    Ok((batches, test))
}
