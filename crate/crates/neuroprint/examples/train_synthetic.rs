//! Train the full pipeline on the synthetic 4-class generator and watch
//! the loss/accuracy trajectory. No files are read or written.

use neuroprint::net::{train_model, TrainConfig};
use neuroprint::pipeline::{split_and_batch, SplitSpec};
use neuroprint::synth::{generate_epochs, SynthSpec};

fn main() {
    let spec = SynthSpec::default(); // 4 classes, 14 channels, window 16
    let epochs = generate_epochs(&spec, 100);
    println!(
        "generated {} epochs ({} classes, {} channels, window {})",
        epochs.len(),
        spec.num_classes,
        spec.channels,
        spec.window
    );

    let split = SplitSpec {
        num_batches: 16,
        ..SplitSpec::default()
    };
    let (batches, test) = split_and_batch(epochs, &split).expect("split");
    println!(
        "train {} epochs in {} batches, test {}",
        batches.iter().map(Vec::len).sum::<usize>(),
        batches.len(),
        test.len()
    );

    let config = TrainConfig::default(); // lr 5e-4, D=10, D'=120, dropout 0.5
    let t0 = std::time::Instant::now();
    let (model, history) = train_model(&batches, &test, &config).expect("training");
    for (i, stats) in history.iter().enumerate() {
        println!(
            "epoch {:>3}  loss {:.4}  test accuracy {:.3}",
            i + 1,
            stats.train_loss,
            stats.test_accuracy
        );
    }
    let best = history
        .iter()
        .map(|s| s.test_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "best test accuracy {:.3} in {:.1}s ({} classes: {:?})",
        best,
        t0.elapsed().as_secs_f64(),
        model.num_classes(),
        model.class_order
    );
}
