//! Acceptance checklist. Each test prints one `criterion N: PASS` line
//! (run with `--nocapture` to see them all); an assertion failure is the
//! corresponding FAIL. Runtime budgets are asserted where the checklist
//! sets one.

use std::time::Instant;

use ndarray::{Array1, Array2, Array3};

use neuroprint::csp::CspModel;
use neuroprint::edf::{
    fixture::{pack_tal, tal_event, tal_timekeeping, write_edf, FixtureSignal},
    parse_edf_bytes, parse_tal, Annotation,
};
use neuroprint::graph::{dgr_forward, dgr_grad, project_adjacency, Adjacency};
use neuroprint::linalg::{gen_eig_sym, whitening, SymMatrix};
use neuroprint::metrics::{confusion_matrix, decision_latency};
use neuroprint::net::layers::{softmax, softmax_xent, Activation, ConvLayer, DenseLayer};
use neuroprint::net::{train_model, ClassifierModel, TrainConfig};
use neuroprint::pipeline::{segment, split_and_batch, NormStats, SplitSpec};
use neuroprint::rng::SplitMix64;
use neuroprint::stream::frame::FRAME_MAGIC;
use neuroprint::stream::{
    decode_frame, encode_frame, serve, simulate, DecisionWindow, Frame, ServeOptions,
    PROTOCOL_VERSION, VOTE_THRESHOLD, VOTE_WINDOW,
};
use neuroprint::synth::{generate_epochs, generate_stream, SynthSpec};

fn random_spd(n: usize, rng: &mut SplitMix64) -> SymMatrix {
    let r = Array2::from_shape_fn((n, n), |_| rng.next_gaussian());
    let mut c = r.dot(&r.t());
    for i in 0..n {
        c[(i, i)] += 1e-3 * n as f64;
    }
    SymMatrix::symmetrized(c).unwrap()
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

/// criterion 1 — whitening, generalized-eigenpair residuals, and the
/// complementary-eigenvalue identity on random SPD inputs, M ∈ {4,14,64}.
#[test]
fn criterion_1_spatial_filter_math() {
    let t0 = Instant::now();
    for (mi, &m) in [4usize, 14, 64].iter().enumerate() {
        let mut rng = SplitMix64::new(100 + mi as u64);
        let s1 = random_spd(m, &mut rng);
        let s2 = random_spd(m, &mut rng);
        let comp = SymMatrix::symmetrized(s1.entries() + s2.entries()).unwrap();

        // Whitening: P·C·Pᵀ = I within 1e-8.
        let p = whitening(&comp).unwrap();
        let should_be_eye = p.dot(comp.entries()).dot(&p.t());
        let eye = Array2::<f64>::eye(m);
        assert!(
            max_abs(&(&should_be_eye - &eye)) <= 1e-8,
            "whitening residual too large for M={m}"
        );

        // Generalized eigenpairs s1·v = λ·comp·v: residual ≤ 1e-8
        // relative to (1 + λ) for every pair.
        let eig = gen_eig_sym(&s1, &comp).unwrap();
        for i in 0..m {
            let v = eig.vectors.column(i).to_owned();
            let lhs = s1.entries().dot(&v);
            let rhs = comp.entries().dot(&v) * eig.values[i];
            let resid = (&lhs - &rhs).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(
                resid / (1.0 + eig.values[i].abs()) <= 1e-8,
                "eigenpair residual {resid} too large for M={m}, i={i}"
            );
        }

        // In the shared basis both class matrices are diagonal and their
        // eigenvalue matrices sum to the identity within 1e-6.
        let d1 = eig.vectors.t().dot(s1.entries()).dot(&eig.vectors);
        let d2 = eig.vectors.t().dot(s2.entries()).dot(&eig.vectors);
        assert!(
            max_abs(&(&d1 + &d2 - &eye)) <= 1e-6,
            "eigenvalue matrices do not sum to identity for M={m}"
        );
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 10.0, "criterion 1 exceeded 10 s: {secs:.1}");
    println!("criterion 1: PASS — whitening, eigen residuals, complementary eigenvalues (M = 4/14/64, {secs:.2}s)");
}

/// |a − b| with a mixed absolute/relative yardstick.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / f64::max(1.0, f64::max(a.abs(), b.abs()))
}

/// Central finite difference of a scalar function.
fn central<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn tiny_model(rng: &mut SplitMix64) -> ClassifierModel {
    let (m, l, d, hidden, k) = (3usize, 4usize, 2usize, 5usize, 4usize);
    let adjacency =
        project_adjacency(&Array2::from_shape_fn((m, m), |_| rng.next_in(-0.5, 0.5)));
    let conv = ConvLayer {
        filters: Array3::from_shape_fn((d, 2, 2), |_| rng.next_in(-0.5, 0.5)),
        biases: (0..d).map(|_| rng.next_in(-0.5, 0.5)).collect(),
    };
    let fc_hidden = DenseLayer {
        weights: Array2::from_shape_fn((hidden, d * m * l), |_| rng.next_in(-0.3, 0.3)),
        biases: (0..hidden).map(|_| rng.next_in(-0.2, 0.2)).collect(),
        activation: Activation::Tanh,
    };
    let fc_out = DenseLayer {
        weights: Array2::from_shape_fn((k, hidden), |_| rng.next_in(-0.4, 0.4)),
        biases: (0..k).map(|_| rng.next_in(-0.2, 0.2)).collect(),
        activation: Activation::Softmax,
    };
    ClassifierModel {
        csp: CspModel {
            w: Array2::eye(m),
            class_order: (1..=k as u32).collect(),
            per_class_eigvals: vec![vec![1.0 / m as f64; m]; k],
            num_channels: m,
        },
        adjacency,
        conv,
        fc_hidden,
        fc_out,
        norm: NormStats {
            mean: vec![0.0; m],
            std: vec![1.0; m],
            floored_channels: vec![],
        },
        hyper: TrainConfig::default(),
        class_order: (1..=k as u32).collect(),
    }
}

/// criterion 2 — every layer's analytic gradient matches central finite
/// differences (1e-6 relative per layer, 1e-5 end to end).
#[test]
fn criterion_2_gradient_suite() {
    let t0 = Instant::now();
    let h = 1e-5;
    let mut rng = SplitMix64::new(22);

    // Conv layer: weighted-sum loss L = Σ g ⊙ forward(x).
    {
        let (m, l, d) = (3usize, 4usize, 2usize);
        let conv = ConvLayer {
            filters: Array3::from_shape_fn((d, 2, 2), |_| rng.next_in(-0.7, 0.7)),
            biases: (0..d).map(|_| rng.next_in(-0.7, 0.7)).collect(),
        };
        let x = Array2::from_shape_fn((m, l), |_| rng.next_gaussian());
        let g = Array3::from_shape_fn((d, m, l), |_| rng.next_gaussian());
        let y = conv.forward(&x);
        let (gf, gb, gx) = conv.backward(&x, &y, &g);
        let loss = |c: &ConvLayer, xin: &Array2<f64>| (&c.forward(xin) * &g).sum();
        for f in 0..d {
            for di in 0..2 {
                for dj in 0..2 {
                    let fd = central(
                        |v| {
                            let mut c = conv.clone();
                            c.filters[(f, di, dj)] = v;
                            loss(&c, &x)
                        },
                        conv.filters[(f, di, dj)],
                        h,
                    );
                    assert!(rel_err(fd, gf[(f, di, dj)]) <= 1e-6, "conv filter grad");
                }
            }
            let fd = central(
                |v| {
                    let mut c = conv.clone();
                    c.biases[f] = v;
                    loss(&c, &x)
                },
                conv.biases[f],
                h,
            );
            assert!(rel_err(fd, gb[f]) <= 1e-6, "conv bias grad");
        }
        for i in 0..m {
            for j in 0..l {
                let fd = central(
                    |v| {
                        let mut xi = x.clone();
                        xi[(i, j)] = v;
                        loss(&conv, &xi)
                    },
                    x[(i, j)],
                    h,
                );
                assert!(rel_err(fd, gx[(i, j)]) <= 1e-6, "conv input grad");
            }
        }
    }

    // Dense layers, all three activations.
    for act in [Activation::None, Activation::Tanh, Activation::Softmax] {
        let (out, inp) = (4usize, 6usize);
        let layer = DenseLayer {
            weights: Array2::from_shape_fn((out, inp), |_| rng.next_in(-0.8, 0.8)),
            biases: (0..out).map(|_| rng.next_in(-0.5, 0.5)).collect(),
            activation: act,
        };
        let x = Array1::from_shape_fn(inp, |_| rng.next_gaussian());
        let g = Array1::from_shape_fn(out, |_| rng.next_gaussian());
        let y = layer.forward(&x).unwrap();
        let (gw, gb, gx) = layer.backward(&x, &y, &g);
        let loss =
            |ly: &DenseLayer, xin: &Array1<f64>| ly.forward(xin).unwrap().dot(&g);
        for i in 0..out {
            for j in 0..inp {
                let fd = central(
                    |v| {
                        let mut l2 = layer.clone();
                        l2.weights[(i, j)] = v;
                        loss(&l2, &x)
                    },
                    layer.weights[(i, j)],
                    h,
                );
                assert!(rel_err(fd, gw[(i, j)]) <= 1e-6, "dense weight grad ({act:?})");
            }
            let fd = central(
                |v| {
                    let mut l2 = layer.clone();
                    l2.biases[i] = v;
                    loss(&l2, &x)
                },
                layer.biases[i],
                h,
            );
            assert!(rel_err(fd, gb[i]) <= 1e-6, "dense bias grad ({act:?})");
        }
        for j in 0..inp {
            let fd = central(
                |v| {
                    let mut xi = x.clone();
                    xi[j] = v;
                    loss(&layer, &xi)
                },
                x[j],
                h,
            );
            assert!(rel_err(fd, gx[j]) <= 1e-6, "dense input grad ({act:?})");
        }
    }

    // Softmax + cross-entropy, fused gradient p − onehot w.r.t. logits.
    {
        let z = Array1::from_shape_fn(5, |_| rng.next_gaussian());
        let true_class = 2usize;
        let p = softmax(&z);
        let (_, grad) = softmax_xent(&p, true_class);
        for j in 0..z.len() {
            let fd = central(
                |v| {
                    let mut zi = z.clone();
                    zi[j] = v;
                    softmax_xent(&softmax(&zi), true_class).0
                },
                z[j],
                h,
            );
            assert!(rel_err(fd, grad[j]) <= 1e-6, "softmax+xent logit grad");
        }
    }

    // Graph layer: adjacency (tied symmetric pairs) and input gradients.
    {
        let m = 4usize;
        let l = 5usize;
        let adj = project_adjacency(&Array2::from_shape_fn((m, m), |_| rng.next_in(-0.6, 0.6)));
        let e_bar = Array2::from_shape_fn((m, l), |_| rng.next_gaussian());
        let g = Array2::from_shape_fn((m, l), |_| rng.next_gaussian());
        let (ga, gx) = dgr_grad(&adj, &e_bar, &g).unwrap();
        let loss = |a: &Adjacency, e: &Array2<f64>| (&dgr_forward(a, e).unwrap() * &g).sum();
        for i in 0..m {
            for j in (i + 1)..m {
                // One free parameter drives both tied entries.
                let fd = central(
                    |v| {
                        let mut entries = adj.entries().clone();
                        entries[(i, j)] = v;
                        entries[(j, i)] = v;
                        loss(&Adjacency::new(entries).unwrap(), &e_bar)
                    },
                    adj.entries()[(i, j)],
                    h,
                );
                assert!(
                    rel_err(fd, ga[(i, j)] + ga[(j, i)]) <= 1e-6,
                    "adjacency grad ({i},{j})"
                );
            }
        }
        for i in 0..m {
            for j in 0..l {
                let fd = central(
                    |v| {
                        let mut e = e_bar.clone();
                        e[(i, j)] = v;
                        loss(&adj, &e)
                    },
                    e_bar[(i, j)],
                    h,
                );
                assert!(rel_err(fd, gx[(i, j)]) <= 1e-6, "graph input grad");
            }
        }
    }

    // Full tiny model end to end, every trainable scalar, 1e-5 relative.
    {
        let model = tiny_model(&mut rng);
        let m = model.num_channels();
        let l = model.window_len();
        let e_bar = Array2::from_shape_fn((m, l), |_| rng.next_gaussian());
        let label = 3u32;
        let (_, grads) = model.sample_grads(&e_bar, label, None).unwrap();
        let loss_of = |mo: &ClassifierModel| mo.sample_loss(&e_bar, label, None).unwrap();

        for i in 0..m {
            for j in (i + 1)..m {
                let fd = central(
                    |v| {
                        let mut mo = model.clone();
                        let mut entries = mo.adjacency.entries().clone();
                        entries[(i, j)] = v;
                        entries[(j, i)] = v;
                        mo.adjacency = Adjacency::new(entries).unwrap();
                        loss_of(&mo)
                    },
                    model.adjacency.entries()[(i, j)],
                    h,
                );
                assert!(
                    rel_err(fd, grads.adjacency[(i, j)] + grads.adjacency[(j, i)]) <= 1e-5,
                    "model adjacency grad"
                );
            }
        }
        let d = model.conv.depth();
        for f in 0..d {
            for di in 0..2 {
                for dj in 0..2 {
                    let fd = central(
                        |v| {
                            let mut mo = model.clone();
                            mo.conv.filters[(f, di, dj)] = v;
                            loss_of(&mo)
                        },
                        model.conv.filters[(f, di, dj)],
                        h,
                    );
                    assert!(rel_err(fd, grads.conv_filters[(f, di, dj)]) <= 1e-5, "model conv filter grad");
                }
            }
            let fd = central(
                |v| {
                    let mut mo = model.clone();
                    mo.conv.biases[f] = v;
                    loss_of(&mo)
                },
                model.conv.biases[f],
                h,
            );
            assert!(rel_err(fd, grads.conv_biases[f]) <= 1e-5, "model conv bias grad");
        }
        for r in 0..model.fc_hidden.weights.nrows() {
            for c in 0..model.fc_hidden.weights.ncols() {
                let fd = central(
                    |v| {
                        let mut mo = model.clone();
                        mo.fc_hidden.weights[(r, c)] = v;
                        loss_of(&mo)
                    },
                    model.fc_hidden.weights[(r, c)],
                    h,
                );
                assert!(rel_err(fd, grads.fc_hidden_weights[(r, c)]) <= 1e-5, "model hidden weight grad");
            }
        }
        for r in 0..model.fc_hidden.biases.len() {
            let fd = central(
                |v| {
                    let mut mo = model.clone();
                    mo.fc_hidden.biases[r] = v;
                    loss_of(&mo)
                },
                model.fc_hidden.biases[r],
                h,
            );
            assert!(rel_err(fd, grads.fc_hidden_biases[r]) <= 1e-5, "model hidden bias grad");
        }
        for r in 0..model.num_classes() {
            for c in 0..model.fc_hidden.biases.len() {
                let fd = central(
                    |v| {
                        let mut mo = model.clone();
                        mo.fc_out.weights[(r, c)] = v;
                        loss_of(&mo)
                    },
                    model.fc_out.weights[(r, c)],
                    h,
                );
                assert!(rel_err(fd, grads.fc_out_weights[(r, c)]) <= 1e-5, "model output weight grad");
            }
            let fd = central(
                |v| {
                    let mut mo = model.clone();
                    mo.fc_out.biases[r] = v;
                    loss_of(&mo)
                },
                model.fc_out.biases[r],
                h,
            );
            assert!(rel_err(fd, grads.fc_out_biases[r]) <= 1e-5, "model output bias grad");
        }
    }

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 30.0, "criterion 2 exceeded 30 s: {secs:.1}");
    println!("criterion 2: PASS — per-layer and end-to-end gradients match finite differences ({secs:.2}s)");
}

/// criterion 3 — seed-fixed synthetic four-class run (M=14, L=16, 400
/// generated epochs, default hyperparameters: lr 0.0005, 10 conv
/// filters, 120 hidden units) reaches ≥ 0.95 test accuracy within 100
/// training epochs in under five minutes.
#[test]
fn criterion_3_synthetic_end_to_end() {
    let t0 = Instant::now();
    let spec = SynthSpec::default();
    assert_eq!((spec.channels, spec.window, spec.num_classes), (14, 16, 4));
    let epochs = generate_epochs(&spec, 100); // 400 total
    assert_eq!(epochs.len(), 400);

    let split = SplitSpec {
        num_batches: 16,
        ..SplitSpec::default()
    };
    let config = TrainConfig::default();
    assert_eq!(config.learning_rate, 5e-4);
    assert_eq!(config.conv_depth, 10);
    assert_eq!(config.hidden, 120);
    assert!(config.epochs <= 100);

    let (batches, test) = split_and_batch(epochs, &split).unwrap();
    let (_, history) = train_model(&batches, &test, &config).unwrap();

    let crossing = history
        .iter()
        .position(|s| s.test_accuracy >= 0.95)
        .expect("accuracy never reached 0.95");
    let best = history
        .iter()
        .map(|s| s.test_accuracy)
        .fold(0.0f64, f64::max);
    assert!(crossing < 100, "crossed 0.95 only at epoch {}", crossing + 1);

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 300.0, "criterion 3 exceeded 5 min: {secs:.1}s");
    println!(
        "criterion 3: PASS — test accuracy ≥ 0.95 at epoch {} (best {best:.3}, {secs:.1}s)",
        crossing + 1
    );
}

/// criterion 4 — optional smoke run on real 64-channel motor-imagery
/// data (subject S001). Skips when the dataset is not on disk.
#[test]
fn criterion_4_real_data_smoke() {
    let candidates: Vec<std::path::PathBuf> = std::env::var("EEGMMIDB_DIR")
        .ok()
        .map(|d| std::path::PathBuf::from(d).join("S001"))
        .into_iter()
        .chain([
            std::path::PathBuf::from("data/eegmmidb/S001"),
            std::path::PathBuf::from("data/S001"),
            std::path::PathBuf::from("/root/data/eegmmidb/S001"),
        ])
        .collect();
    let Some(dir) = candidates.iter().find(|p| p.is_dir()) else {
        println!("criterion 4: SKIP — subject S001 not on disk (optional)");
        return;
    };

    let recordings =
        neuroprint::edf::load_subject_dir(dir, &neuroprint::edf::IMAGINED_RUNS).unwrap();
    let mut epochs = Vec::new();
    for rec in &recordings {
        epochs.extend(segment(rec, 64, 0.5));
    }
    let (batches, test) = split_and_batch(
        epochs,
        &SplitSpec {
            num_batches: 32,
            ..SplitSpec::default()
        },
    )
    .unwrap();
    let config = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let (_, history) = train_model(&batches, &test, &config).unwrap();
    let best = history
        .iter()
        .map(|s| s.test_accuracy)
        .fold(0.0f64, f64::max);
    assert!(best > 0.25, "did not beat 4-class chance: {best:.3}");
    println!("criterion 4: PASS — real-data smoke beat chance ({best:.3} after 5 epochs)");
}

/// Recount oracle: same contract as the decision window, recomputed from
/// scratch on the raw prediction list after every push.
fn check_votes(seq: &[u32]) {
    let mut dw = DecisionWindow::new();
    let mut hist: Vec<u32> = Vec::new();
    for (i, &p) in seq.iter().enumerate() {
        let got = dw.update(p);
        hist.push(p);
        let want = if hist.len() >= VOTE_WINDOW {
            let tail = &hist[hist.len() - VOTE_WINDOW..];
            tail.iter()
                .find_map(|&c| {
                    let n = tail.iter().filter(|&&x| x == c).count();
                    (n >= VOTE_THRESHOLD).then_some((c, n))
                })
        } else {
            None
        };
        assert_eq!(got, want, "divergence at step {i} of {seq:?}");
        if want.is_some() {
            hist.clear();
        }
    }
}

/// criterion 5 — voting equals a brute-force recount: exhaustively for
/// every 4-class sequence of length 10, plus a sampled 10⁶ subset of
/// length-12 sequences (each checked after every push, covering all
/// shorter prefixes).
#[test]
fn criterion_5_voting_oracle() {
    let t0 = Instant::now();

    let mut exhaustive = 0u64;
    for code in 0..4u64.pow(10) {
        let mut c = code;
        let mut seq = [0u32; 10];
        for slot in &mut seq {
            *slot = (c % 4) as u32 + 1;
            c /= 4;
        }
        check_votes(&seq);
        exhaustive += 1;
    }

    let mut rng = SplitMix64::new(55);
    let mut sampled = 0u64;
    let mut seq = [0u32; 12];
    for _ in 0..1_000_000u64 {
        for slot in &mut seq {
            *slot = rng.next_below(4) as u32 + 1;
        }
        check_votes(&seq);
        sampled += 1;
    }

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 5 exceeded 60 s: {secs:.1}");
    println!(
        "criterion 5: PASS — {exhaustive} exhaustive length-10 + {sampled} sampled length-12 sequences match the recount ({secs:.1}s)"
    );
}

fn arb_frame(rng: &mut SplitMix64) -> Frame {
    match rng.next_below(4) {
        0 => Frame::Hello {
            version: rng.next_u64() as u16,
            channels: rng.next_u64() as u16,
            rate: rng.next_in(0.0, 10_000.0) as f32,
        },
        1 => {
            let n = rng.next_below(65);
            Frame::Sample {
                values: (0..n).map(|_| rng.next_in(-1e6, 1e6) as f32).collect(),
            }
        }
        2 => Frame::Decision {
            class: rng.next_u64() as u16,
            confidence: rng.next_f64() as f32,
            votes: rng.next_below(11) as u16,
            timestamp_us: rng.next_u64(),
        },
        _ => {
            let n = rng.next_below(48);
            Frame::Error {
                message: (0..n)
                    .map(|_| char::from(b' ' + rng.next_below(95) as u8))
                    .collect(),
            }
        }
    }
}

/// criterion 6 — protocol: 10⁵ frame round-trips, 10⁵ fuzzed decodes
/// without a crash, and a full loopback replay that recovers the
/// planted class.
#[test]
fn criterion_6_protocol() {
    let t0 = Instant::now();

    let mut rng = SplitMix64::new(66);
    for i in 0..100_000u64 {
        let frame = arb_frame(&mut rng);
        let decoded = decode_frame(&encode_frame(&frame)).unwrap();
        assert_eq!(decoded, frame, "round-trip {i}");
    }

    for _ in 0..100_000u64 {
        let n = rng.next_below(128);
        let mut bytes: Vec<u8> = (0..n).map(|_| rng.next_u64() as u8).collect();
        // Half the corpus gets a plausible prefix to reach deeper paths.
        if !bytes.is_empty() && rng.next_f64() < 0.5 {
            bytes[0] = FRAME_MAGIC;
            if bytes.len() > 1 {
                bytes[1] = PROTOCOL_VERSION;
            }
            if bytes.len() > 2 {
                bytes[2] = (rng.next_below(6)) as u8;
            }
        }
        let _ = decode_frame(&bytes); // any Result is fine; panics are not
    }

    // Loopback: train a small two-class model, serve it, replay a
    // single-class stream, expect that class back.
    let spec = SynthSpec {
        channels: 4,
        window: 8,
        num_classes: 2,
        seed: 5,
        ..SynthSpec::default()
    };
    let epochs = generate_epochs(&spec, 40);
    let (batches, test) = split_and_batch(
        epochs,
        &SplitSpec {
            num_batches: 8,
            seed: 1,
            ..SplitSpec::default()
        },
    )
    .unwrap();
    let config = TrainConfig {
        learning_rate: 2e-3,
        epochs: 40,
        conv_depth: 4,
        hidden: 16,
        seed: 9,
        patience: 100,
        ..TrainConfig::default()
    };
    let (model, _) = train_model(&batches, &test, &config).unwrap();
    let handle = serve(
        "127.0.0.1:0",
        model,
        ServeOptions {
            max_sessions: Some(1),
            ..ServeOptions::default()
        },
    )
    .unwrap();
    let planted = 2u32;
    let recording = generate_stream(&spec, planted, 160);
    let decisions = simulate(&handle.addr().to_string(), &recording, 0.0).unwrap();
    assert!(!decisions.is_empty(), "no decisions over 160 samples");
    assert_eq!(decisions[0].class, planted, "wrong class decoded");
    assert!(decisions[0].votes >= VOTE_THRESHOLD);

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 60.0, "criterion 6 exceeded 60 s: {secs:.1}");
    println!("criterion 6: PASS — 10⁵ round-trips, 10⁵ fuzzed decodes, loopback decoded class {planted} ({secs:.1}s)");
}

/// criterion 7 — biosignal file parsing: digital↔physical round-trip is
/// bit-exact, the reference scaling point is exact to 1e-12, and the
/// annotation grammar fixtures parse field by field.
#[test]
fn criterion_7_edf_parser() {
    // Fixture with two data channels and one annotation channel.
    let ch0: Vec<i16> = vec![0, 1, -1, 1000, -32768, 32767, 57, -212];
    let ch1: Vec<i16> = vec![7, -7, 300, -300, 12345, -12345, 0, 1];
    let mut ann = pack_tal(&tal_event(0.0, 1.25, 0.5, "T1"), 32);
    ann.extend(pack_tal(&tal_timekeeping(1.0), 32));
    let bytes = write_edf(
        2,
        1.0,
        &[
            FixtureSignal::data("C3", 4, ch0.clone()),
            FixtureSignal::data("C4", 4, ch1.clone()),
            FixtureSignal::annotations(32, ann),
        ],
    );
    let (header, rec) = parse_edf_bytes(&bytes).unwrap();
    assert_eq!(rec.num_channels(), 2);
    assert_eq!(rec.num_samples(), 8);
    assert_eq!(rec.sampling_rate, 4.0);
    assert_eq!(rec.channel_labels, vec!["C3", "C4"]);

    // Bit-exact round-trip: inverting the affine map recovers every
    // digital sample exactly.
    for (ch, samples) in [(0usize, &ch0), (1, &ch1)] {
        let sig = &header.signals[ch];
        for (k, &d) in samples.iter().enumerate() {
            let p = rec.data[(ch, k)];
            let back = sig.digital_min as f64
                + (p - sig.physical_min) * (sig.digital_max - sig.digital_min) as f64
                    / (sig.physical_max - sig.physical_min);
            assert_eq!(back.round() as i16, d, "channel {ch} sample {k}");
        }
    }
    assert_eq!(
        rec.events,
        vec![Annotation {
            onset_s: 1.25,
            duration_s: 0.5,
            text: "T1".into(),
        }]
    );

    // Reference scaling point: digital 0 on a [-32768, 32767] → [-1, 1]
    // channel maps to 1/65535.
    assert!((rec.data[(0, 0)] - 1.0 / 65535.0).abs() <= 1e-12);

    // Annotation grammar fixtures.
    let parsed = parse_tal(b"+4.2\x154.1\x14T1\x14\x00");
    assert_eq!(
        parsed,
        vec![Annotation {
            onset_s: 4.2,
            duration_s: 4.1,
            text: "T1".into(),
        }]
    );
    // Timekeeping record (empty text) produces nothing.
    assert!(parse_tal(b"+12.75\x14\x14\x00").is_empty());
    // No duration → 0; two texts in one record → two annotations.
    assert_eq!(
        parse_tal(b"+3\x14left\x14right\x14\x00"),
        vec![
            Annotation {
                onset_s: 3.0,
                duration_s: 0.0,
                text: "left".into()
            },
            Annotation {
                onset_s: 3.0,
                duration_s: 0.0,
                text: "right".into()
            },
        ]
    );
    // Malformed onset is skipped, not fatal.
    let (anns, skipped) = neuroprint::edf::parse_tal_counting(b"bogus\x14oops\x14\x00+1\x14ok\x14\x00");
    assert_eq!(skipped, 1);
    assert_eq!(anns.len(), 1);
    assert_eq!(anns[0].text, "ok");

    println!("criterion 7: PASS — bit-exact sample round-trip, 1/65535 scaling point, annotation grammar");
}

/// criterion 8 — AUC equals the O(n²) pairwise oracle to 1e-12 on
/// 30-row instances; confusion-matrix row sums recount exactly.
#[test]
fn criterion_8_metrics_oracles() {
    let mut rng = SplitMix64::new(88);
    for trial in 0..50 {
        // 30 rows, deliberately tie-heavy scores.
        let n = 30usize;
        let scores: Vec<f64> = (0..n).map(|_| (rng.next_f64() * 8.0).round() / 8.0).collect();
        let labels: Vec<u32> = (0..n).map(|_| rng.next_below(2) as u32 + 1).collect();
        if !labels.contains(&1) || !labels.contains(&2) {
            continue;
        }
        let rows: Vec<Vec<f64>> = scores.iter().map(|&s| vec![s, 1.0 - s]).collect();
        let report = neuroprint::metrics::roc_auc_ovr(&rows, &labels, 2).unwrap();
        let auc = report.per_class[0].auc.unwrap();

        // Pairwise oracle: P(score⁺ > score⁻) + ½·P(tie).
        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for i in 0..n {
            if labels[i] != 1 {
                continue;
            }
            for j in 0..n {
                if labels[j] != 2 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        assert!(
            (auc - wins / pairs).abs() <= 1e-12,
            "AUC mismatch on trial {trial}: {auc} vs {}",
            wins / pairs
        );
    }

    // Confusion-matrix row sums recount exactly.
    let k = 5usize;
    let n = 1000usize;
    let preds: Vec<u32> = (0..n).map(|_| rng.next_below(k) as u32 + 1).collect();
    let labels: Vec<u32> = (0..n).map(|_| rng.next_below(k) as u32 + 1).collect();
    let cm = confusion_matrix(&preds, &labels, k).unwrap();
    for class in 1..=k as u32 {
        let expected = labels.iter().filter(|&&t| t == class).count() as u64;
        assert_eq!(cm.row_sums()[(class - 1) as usize], expected);
        let expected_col = preds.iter().filter(|&&p| p == class).count() as u64;
        assert_eq!(cm.col_sums()[(class - 1) as usize], expected_col);
    }
    assert_eq!(cm.total(), n as u64);

    println!("criterion 8: PASS — rank AUC matches the pairwise oracle to 1e-12; confusion counts recount");
}

/// criterion 9 — the latency probe on a 64-channel, 64-sample model
/// reports the four-stage decomposition (acquisition, spatial+graph,
/// network, total). No absolute timing asserted.
#[test]
fn criterion_9_latency_report() {
    let spec = SynthSpec {
        channels: 64,
        window: 64,
        ..SynthSpec::default()
    };
    let epochs = generate_epochs(&spec, 20);
    let (batches, test) = split_and_batch(
        epochs,
        &SplitSpec {
            num_batches: 2,
            ..SplitSpec::default()
        },
    )
    .unwrap();
    let config = TrainConfig {
        epochs: 0, // initialization only; the probe needs shapes, not skill
        ..TrainConfig::default()
    };
    let (model, _) = train_model(&batches, &test, &config).unwrap();
    assert_eq!((model.num_channels(), model.window_len()), (64, 64));

    let rate = 160.0;
    let report = decision_latency(&model, rate, 30, 7).unwrap();
    let names: Vec<&str> = report.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["acquisition", "spatial+graph", "network"]);
    assert_eq!(report.total.name, "total");
    assert!(report.reps >= 20);
    assert!((report.stages[0].mean_s - 64.0 / rate).abs() < 1e-12);
    for s in report.stages.iter().chain([&report.total]) {
        assert!(s.mean_s.is_finite() && s.mean_s >= 0.0);
        assert!(s.p95_s.is_finite() && s.p95_s >= 0.0);
    }
    // The total includes the acquisition constant plus measured compute.
    assert!(report.total.mean_s >= report.stages[0].mean_s);

    let detail: Vec<String> = report
        .stages
        .iter()
        .map(|s| format!("{} {:.1}ms", s.name, s.mean_s * 1e3))
        .collect();
    println!(
        "criterion 9: PASS — four-stage latency decomposition ({}, total {:.1}ms)",
        detail.join(", "),
        report.total.mean_s * 1e3
    );
}
