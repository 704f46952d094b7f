//! Cut a continuous recording into labeled windows, fit per-channel
//! z-score statistics on the training pool, and split into mini-batches.

use neuroprint::pipeline::{segment, split_and_batch, zscore_apply, zscore_fit, SplitSpec};
use neuroprint::synth::{generate_stream, SynthSpec};

fn main() {
    let spec = SynthSpec {
        channels: 4,
        window: 16,
        num_classes: 2,
        ..SynthSpec::default()
    };

    // One continuous recording per class; each carries a single event
    // interval spanning the whole signal.
    let recordings = [
        generate_stream(&spec, 1, 640),
        generate_stream(&spec, 2, 640),
    ];
    let mut epochs = Vec::new();
    for rec in &recordings {
        let windows = segment(rec, 16, 0.5);
        println!(
            "recording ({} samples, event {:?}) -> {} windows",
            rec.num_samples(),
            rec.events[0].text,
            windows.len()
        );
        epochs.extend(windows);
    }

    let stats = zscore_fit(&epochs).expect("pooled statistics");
    println!("per-channel pooled mean/std:");
    for ch in 0..stats.mean.len() {
        println!("  ch{ch}: mean {:+.4}, std {:.4}", stats.mean[ch], stats.std[ch]);
    }
    if !stats.floored_channels.is_empty() {
        println!("floored channels: {:?}", stats.floored_channels);
    }
    let normalized: Vec<_> = epochs
        .iter()
        .map(|e| zscore_apply(&stats, e).expect("same channel count"))
        .collect();

    // After normalization the pooled mean is 0 and the std 1.
    let check = zscore_fit(&normalized).expect("restats");
    println!(
        "post-normalization: |mean| ≤ {:.1e}, |std − 1| ≤ {:.1e}",
        check.mean.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        check
            .std
            .iter()
            .fold(0.0f64, |m, v| m.max((v - 1.0).abs()))
    );

    let split = SplitSpec {
        train_fraction: 0.8,
        num_batches: 6,
        seed: 0,
    };
    let (batches, test) = split_and_batch(normalized, &split).expect("split");
    let sizes: Vec<usize> = batches.iter().map(Vec::len).collect();
    println!("mini-batch sizes {sizes:?}, held-out test {}", test.len());
    let per_class: Vec<usize> = (1..=2)
        .map(|c| test.iter().filter(|e| e.label == c).count())
        .collect();
    println!("test split per class: {per_class:?} (stratified)");
}
