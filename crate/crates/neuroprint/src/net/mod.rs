//! The convolutional classifier over spatially filtered epochs, its
//! hand-written training loop (Adam, dropout, mini-batches, early
//! stopping), inference, and model persistence.
//!
//! Architecture, per sample: Ē (M×L, from CSP) → graph layer (A+I)·Ē →
//! one 2×2 conv with D filters and tanh → flatten (M·L·D) → dropout →
//! dense D′ with tanh → dense K with softmax → cross-entropy.

pub mod adam;
pub mod container;
pub mod layers;

pub use adam::{adam_step, AdamParams, AdamState};
pub use layers::{dropout, softmax, softmax_xent, Activation, ConvLayer, DenseLayer};

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::csp::{apply_csp, fit_csp, CspModel};
use crate::error::{Error, Result};
use crate::graph::{dgr_forward, dgr_grad, project_adjacency, Adjacency};
use crate::pipeline::{zscore_apply, zscore_fit, Epoch, NormStats};
use crate::rng::SplitMix64;

/// Training hyperparameters. `hidden` (D′) is dataset-dependent; the
/// other defaults follow the reference configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout_rate: f64,
    /// D, the number of 2×2 conv filters.
    pub conv_depth: usize,
    /// D′, the width of the hidden dense layer.
    pub hidden: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Early-stop patience, in epochs without a new best test accuracy.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            epochs: 100,
            dropout_rate: 0.5,
            conv_depth: 10,
            hidden: 120,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            patience: 20,
        }
    }
}

impl TrainConfig {
    fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// One training epoch's bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpochStats {
    pub train_loss: f64,
    pub test_accuracy: f64,
}

pub type TrainHistory = Vec<EpochStats>;

/// The full trained pipeline: normalization, spatial filters, graph
/// layer, and the network, with everything needed for inference.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    pub csp: CspModel,
    pub adjacency: Adjacency,
    pub conv: ConvLayer,
    pub fc_hidden: DenseLayer,
    pub fc_out: DenseLayer,
    pub norm: NormStats,
    pub hyper: TrainConfig,
    pub class_order: Vec<u32>,
}

/// Per-sample gradients for every trainable tensor.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub adjacency: Array2<f64>,
    pub conv_filters: Array3<f64>,
    pub conv_biases: Vec<f64>,
    pub fc_hidden_weights: Array2<f64>,
    pub fc_hidden_biases: Vec<f64>,
    pub fc_out_weights: Array2<f64>,
    pub fc_out_biases: Vec<f64>,
}

impl Gradients {
    fn zeros(m: usize, d: usize, flat: usize, hidden: usize, k: usize) -> Self {
        Self {
            adjacency: Array2::zeros((m, m)),
            conv_filters: Array3::zeros((d, 2, 2)),
            conv_biases: vec![0.0; d],
            fc_hidden_weights: Array2::zeros((hidden, flat)),
            fc_hidden_biases: vec![0.0; hidden],
            fc_out_weights: Array2::zeros((k, hidden)),
            fc_out_biases: vec![0.0; k],
        }
    }

    fn accumulate(&mut self, other: &Gradients) {
        self.adjacency += &other.adjacency;
        self.conv_filters += &other.conv_filters;
        for (a, b) in self.conv_biases.iter_mut().zip(&other.conv_biases) {
            *a += b;
        }
        self.fc_hidden_weights += &other.fc_hidden_weights;
        for (a, b) in self.fc_hidden_biases.iter_mut().zip(&other.fc_hidden_biases) {
            *a += b;
        }
        self.fc_out_weights += &other.fc_out_weights;
        for (a, b) in self.fc_out_biases.iter_mut().zip(&other.fc_out_biases) {
            *a += b;
        }
    }

    fn scale(&mut self, f: f64) {
        self.adjacency *= f;
        self.conv_filters *= f;
        self.conv_biases.iter_mut().for_each(|v| *v *= f);
        self.fc_hidden_weights *= f;
        self.fc_hidden_biases.iter_mut().for_each(|v| *v *= f);
        self.fc_out_weights *= f;
        self.fc_out_biases.iter_mut().for_each(|v| *v *= f);
    }
}

impl ClassifierModel {
    pub fn num_channels(&self) -> usize {
        self.csp.num_channels
    }

    pub fn num_classes(&self) -> usize {
        self.fc_out.weights.nrows()
    }

    /// L, recovered from the dimension chain M·L·D → D′.
    pub fn window_len(&self) -> usize {
        self.fc_hidden.weights.ncols() / (self.num_channels() * self.conv.depth())
    }

    /// Softmax probabilities for a raw (unnormalized) epoch matrix.
    pub fn predict_raw(&self, data: &Array2<f64>) -> Result<Array1<f64>> {
        if data.nrows() != self.num_channels() {
            return Err(Error::DimensionMismatch {
                what: "prediction channels".into(),
                expected: self.num_channels().to_string(),
                actual: data.nrows().to_string(),
            });
        }
        if data.ncols() != self.window_len() {
            return Err(Error::DimensionMismatch {
                what: "prediction window".into(),
                expected: self.window_len().to_string(),
                actual: data.ncols().to_string(),
            });
        }
        let normed = self.norm.apply_matrix(data)?;
        self.predict_features(&self.csp.w.dot(&normed))
    }

    /// Inference forward pass from spatially filtered features Ē.
    pub fn predict_features(&self, e_bar: &Array2<f64>) -> Result<Array1<f64>> {
        let x1 = dgr_forward(&self.adjacency, e_bar)?;
        let y = self.conv.forward(&x1);
        let flat = Array1::from_iter(y.iter().cloned());
        let h = self.fc_hidden.forward(&flat)?;
        self.fc_out.forward(&h)
    }

    /// Most probable class id with the full probability vector.
    pub fn predict_class(&self, data: &Array2<f64>) -> Result<(u32, Array1<f64>)> {
        let p = self.predict_raw(data)?;
        let idx = argmax(&p);
        Ok((self.class_order[idx], p))
    }

    /// Loss and gradients of one spatially filtered sample; `mask` is a
    /// pre-sampled dropout mask over the flatten (None = no dropout).
    /// Exposed so gradient checks and custom loops can drive the exact
    /// training computation.
    pub fn sample_grads(
        &self,
        e_bar: &Array2<f64>,
        label: u32,
        mask: Option<&Array1<f64>>,
    ) -> Result<(f64, Gradients)> {
        let class_idx = self.class_index(label)?;
        let (m, l) = e_bar.dim();
        let d = self.conv.depth();

        // Forward with caches.
        let x1 = dgr_forward(&self.adjacency, e_bar)?;
        let y = self.conv.forward(&x1);
        let flat = Array1::from_iter(y.iter().cloned());
        let dropped = match mask {
            Some(mk) => &flat * mk,
            None => flat.clone(),
        };
        let h = self.fc_hidden.forward(&dropped)?;
        let p = self.fc_out.forward(&h)?;
        let (loss, grad_logits) = softmax_xent(&p, class_idx);

        // Backward. The softmax and the loss are fused: grad_logits is
        // already dL/dz for the output layer.
        let gw2 = layers::outer(&grad_logits, &h);
        let gb2 = grad_logits.to_vec();
        let gh = self.fc_out.weights.t().dot(&grad_logits);
        let (gw1, gb1, gflat) = self.fc_hidden.backward(&dropped, &h, &gh);
        let gdrop = match mask {
            Some(mk) => gflat * mk,
            None => gflat,
        };
        let upstream = Array3::from_shape_vec((d, m, l), gdrop.to_vec()).expect("flatten layout");
        let (gf, gb, gx1) = self.conv.backward(&x1, &y, &upstream);
        let (ga, _) = dgr_grad(&self.adjacency, e_bar, &gx1)?;

        Ok((
            loss,
            Gradients {
                adjacency: ga,
                conv_filters: gf,
                conv_biases: gb,
                fc_hidden_weights: gw1,
                fc_hidden_biases: gb1,
                fc_out_weights: gw2,
                fc_out_biases: gb2,
            },
        ))
    }

    /// Loss only, same computation as [`Self::sample_grads`].
    pub fn sample_loss(
        &self,
        e_bar: &Array2<f64>,
        label: u32,
        mask: Option<&Array1<f64>>,
    ) -> Result<f64> {
        let class_idx = self.class_index(label)?;
        let x1 = dgr_forward(&self.adjacency, e_bar)?;
        let y = self.conv.forward(&x1);
        let flat = Array1::from_iter(y.iter().cloned());
        let dropped = match mask {
            Some(mk) => &flat * mk,
            None => flat,
        };
        let h = self.fc_hidden.forward(&dropped)?;
        let p = self.fc_out.forward(&h)?;
        Ok(softmax_xent(&p, class_idx).0)
    }

    fn class_index(&self, label: u32) -> Result<usize> {
        self.class_order
            .iter()
            .position(|&c| c == label)
            .ok_or(Error::LabelOutOfRange {
                label,
                num_classes: self.class_order.len(),
            })
    }
}

pub fn argmax(p: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn glorot2(rng: &mut SplitMix64, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.next_in(-limit, limit))
}

fn glorot_conv(rng: &mut SplitMix64, depth: usize) -> Array3<f64> {
    // fan_in = 2·2·1 taps, fan_out = 2·2·D.
    let limit = (6.0 / (4 + 4 * depth) as f64).sqrt();
    Array3::from_shape_fn((depth, 2, 2), |_| rng.next_in(-limit, limit))
}

/// Conv biases start at a small constant rather than zero: with zero
/// biases every layer is an odd function of the zero-mean input, so
/// class-conditional activation means vanish identically and amplitude
/// structure takes many steps to surface. A nonzero bias puts each tanh
/// in its asymmetric regime, where input variance shifts the output
/// mean from the first step.
const CONV_BIAS_INIT: f64 = 0.5;

/// An untrained model: fitted normalization and spatial filters, Glorot
/// weights, zero adjacency.
fn init_model(
    csp: CspModel,
    norm: NormStats,
    config: &TrainConfig,
    window: usize,
    k: usize,
    rng: &mut SplitMix64,
) -> ClassifierModel {
    let m = csp.num_channels;
    let d = config.conv_depth;
    let flat = m * window * d;
    ClassifierModel {
        adjacency: Adjacency::zeros(m),
        conv: ConvLayer {
            filters: glorot_conv(rng, d),
            biases: vec![CONV_BIAS_INIT; d],
        },
        fc_hidden: DenseLayer {
            weights: glorot2(rng, config.hidden, flat),
            biases: vec![0.0; config.hidden],
            activation: Activation::Tanh,
        },
        fc_out: DenseLayer {
            weights: glorot2(rng, k, config.hidden),
            biases: vec![0.0; k],
            activation: Activation::Softmax,
        },
        class_order: csp.class_order.clone(),
        csp,
        norm,
        hyper: config.clone(),
    }
}

struct OptStates {
    adj: AdamState,
    conv_f: AdamState,
    conv_b: AdamState,
    w1: AdamState,
    b1: AdamState,
    w2: AdamState,
    b2: AdamState,
}

fn apply_updates(
    model: &mut ClassifierModel,
    g: &Gradients,
    st: &mut OptStates,
    cfg: &AdamParams,
) -> Result<()> {
    let m = model.num_channels();
    let mut a_flat: Vec<f64> = model.adjacency.entries().iter().cloned().collect();
    let a_grad: Vec<f64> = g.adjacency.iter().cloned().collect();
    adam_step(&mut a_flat, &a_grad, &mut st.adj, cfg, "adjacency")?;
    let raw = Array2::from_shape_vec((m, m), a_flat).expect("adjacency shape");
    model.adjacency = project_adjacency(&raw);

    adam_step(
        model.conv.filters.as_slice_mut().expect("layout"),
        g.conv_filters.as_slice().expect("layout"),
        &mut st.conv_f,
        cfg,
        "conv.filters",
    )?;
    adam_step(&mut model.conv.biases, &g.conv_biases, &mut st.conv_b, cfg, "conv.biases")?;
    adam_step(
        model.fc_hidden.weights.as_slice_mut().expect("layout"),
        g.fc_hidden_weights.as_slice().expect("layout"),
        &mut st.w1,
        cfg,
        "fc_hidden.weights",
    )?;
    adam_step(
        &mut model.fc_hidden.biases,
        &g.fc_hidden_biases,
        &mut st.b1,
        cfg,
        "fc_hidden.biases",
    )?;
    adam_step(
        model.fc_out.weights.as_slice_mut().expect("layout"),
        g.fc_out_weights.as_slice().expect("layout"),
        &mut st.w2,
        cfg,
        "fc_out.weights",
    )?;
    adam_step(
        &mut model.fc_out.biases,
        &g.fc_out_biases,
        &mut st.b2,
        cfg,
        "fc_out.biases",
    )?;
    Ok(())
}

/// Trains the full pipeline on pre-split mini-batches.
///
/// Normalization and spatial filters are fitted on the training pool
/// only; the network then trains on the fixed CSP features with
/// per-batch mean gradients, Adam, dropout on the flatten, and the
/// adjacency re-projected after every update. Stops early after
/// `patience` epochs without a new best test accuracy. Fully
/// deterministic for a given seed.
pub fn train_model(
    train_batches: &[Vec<Epoch>],
    test: &[Epoch],
    config: &TrainConfig,
) -> Result<(ClassifierModel, TrainHistory)> {
    assert!(config.learning_rate > 0.0, "learning rate must be positive");
    assert!(
        (0.0..1.0).contains(&config.dropout_rate),
        "dropout rate must be in [0,1)"
    );
    let pool: Vec<Epoch> = train_batches.iter().flatten().cloned().collect();
    let first = pool.first().ok_or(Error::NoSamples)?;
    let (m, l) = first.data.dim();
    for ep in pool.iter().chain(test) {
        if ep.data.dim() != (m, l) {
            return Err(Error::DimensionMismatch {
                what: "epoch shape".into(),
                expected: format!("{m}x{l}"),
                actual: format!("{}x{}", ep.data.nrows(), ep.data.ncols()),
            });
        }
    }
    let k = pool
        .iter()
        .chain(test)
        .map(|e| e.label)
        .max()
        .unwrap_or(0) as usize;

    let norm = zscore_fit(&pool)?;
    let pool_norm: Vec<Epoch> = pool
        .iter()
        .map(|e| zscore_apply(&norm, e))
        .collect::<Result<_>>()?;
    let csp = fit_csp(&pool_norm, k)?;

    let featurize = |e: &Epoch| -> Result<(Array2<f64>, u32)> {
        let normed = zscore_apply(&norm, e)?;
        Ok((apply_csp(&csp, &normed)?.data, e.label))
    };
    let train_feats: Vec<Vec<(Array2<f64>, u32)>> = train_batches
        .iter()
        .map(|b| b.iter().map(&featurize).collect())
        .collect::<Result<_>>()?;
    let test_feats: Vec<(Array2<f64>, u32)> =
        test.iter().map(&featurize).collect::<Result<_>>()?;

    let mut rng = SplitMix64::new(config.seed);
    let mut model = init_model(csp, norm, config, l, k, &mut rng);
    let d = config.conv_depth;
    let flat_len = m * l * d;
    let adam_cfg = config.adam();
    let mut states = OptStates {
        adj: AdamState::new(m * m),
        conv_f: AdamState::new(4 * d),
        conv_b: AdamState::new(d),
        w1: AdamState::new(config.hidden * flat_len),
        b1: AdamState::new(config.hidden),
        w2: AdamState::new(k * config.hidden),
        b2: AdamState::new(k),
    };

    let mut history = Vec::new();
    let mut best_acc = f64::NEG_INFINITY;
    let mut stale = 0usize;
    let n_train: usize = train_feats.iter().map(Vec::len).sum();

    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        for (bi, batch) in train_feats.iter().enumerate() {
            if batch.is_empty() {
                continue;
            }
            let mut acc = Gradients::zeros(m, d, flat_len, config.hidden, k);
            let mut batch_loss = 0.0;
            for (e_bar, label) in batch {
                let mask = if config.dropout_rate > 0.0 {
                    Some(layers::dropout_mask(
                        flat_len,
                        config.dropout_rate,
                        &mut rng,
                    ))
                } else {
                    None
                };
                let (loss, g) = model.sample_grads(e_bar, *label, mask.as_ref())?;
                batch_loss += loss;
                acc.accumulate(&g);
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: bi });
            }
            acc.scale(1.0 / batch.len() as f64);
            apply_updates(&mut model, &acc, &mut states, &adam_cfg)?;
            loss_sum += batch_loss;
        }

        let test_accuracy = feature_accuracy(&model, &test_feats)?;
        history.push(EpochStats {
            train_loss: loss_sum / n_train as f64,
            test_accuracy,
        });
        if test_accuracy > best_acc {
            best_acc = test_accuracy;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok((model, history))
}

fn feature_accuracy(model: &ClassifierModel, feats: &[(Array2<f64>, u32)]) -> Result<f64> {
    if feats.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (e_bar, label) in feats {
        let p = model.predict_features(e_bar)?;
        if model.class_order[argmax(&p)] == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / feats.len() as f64)
}

/// Argmax predictions and probability rows for a set of raw epochs.
pub fn predict_batch(
    model: &ClassifierModel,
    epochs: &[Epoch],
) -> Result<(Vec<u32>, Vec<Vec<f64>>)> {
    let mut preds = Vec::with_capacity(epochs.len());
    let mut probs = Vec::with_capacity(epochs.len());
    for ep in epochs {
        let (class, p) = model.predict_class(&ep.data)?;
        preds.push(class);
        probs.push(p.to_vec());
    }
    Ok((preds, probs))
}
