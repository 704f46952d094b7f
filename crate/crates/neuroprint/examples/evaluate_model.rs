//! Train briefly, save and reload the model container, then produce the
//! full evaluation report: confusion matrix, precision/recall/F1,
//! one-vs-rest ROC/AUC, and the decision-latency breakdown.

use neuroprint::metrics::{confusion_matrix, decision_latency, prf1, roc_auc_ovr};
use neuroprint::net::container::{read_model, write_model};
use neuroprint::net::{predict_batch, train_model, TrainConfig};
use neuroprint::pipeline::{split_and_batch, SplitSpec};
use neuroprint::synth::{generate_epochs, SynthSpec};

fn main() {
    let spec = SynthSpec {
        channels: 6,
        window: 16,
        num_classes: 3,
        ..SynthSpec::default()
    };
    let epochs = generate_epochs(&spec, 80);
    let (batches, test) = split_and_batch(
        epochs,
        &SplitSpec {
            num_batches: 12,
            ..SplitSpec::default()
        },
    )
    .expect("split");
    let config = TrainConfig {
        learning_rate: 2e-3,
        epochs: 40,
        conv_depth: 6,
        hidden: 32,
        ..TrainConfig::default()
    };
    let (model, history) = train_model(&batches, &test, &config).expect("training");
    println!(
        "trained {} epochs, final test accuracy {:.3}",
        history.len(),
        history.last().map(|s| s.test_accuracy).unwrap_or(0.0)
    );

    // Round-trip through the container to prove the report reflects
    // exactly what lands on disk.
    let dir = std::env::temp_dir().join("neuroprint_evaluate_model");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("model.bin");
    write_model(&path, &model).expect("write container");
    let model = read_model(&path).expect("read container");
    println!("container round-trip via {}", path.display());

    let labels: Vec<u32> = test.iter().map(|e| e.label).collect();
    let (preds, probs) = predict_batch(&model, &test).expect("inference");

    let cm = confusion_matrix(&preds, &labels, model.num_classes()).expect("counts");
    println!("confusion matrix (rows: true class):");
    print!("{}", cm.to_csv());

    let report = prf1(&cm);
    for (i, c) in report.per_class.iter().enumerate() {
        println!(
            "class {}: precision {:.3}, recall {:.3}, F1 {:.3} (n={})",
            i + 1,
            c.precision,
            c.recall,
            c.f1,
            c.support
        );
    }
    println!(
        "macro precision {:.4}, macro recall {:.4}, macro F1 {:.4}, accuracy {:.4}",
        report.macro_precision, report.macro_recall, report.macro_f1, report.accuracy
    );

    let roc = roc_auc_ovr(&probs, &labels, model.num_classes()).expect("roc");
    for c in &roc.per_class {
        match c.auc {
            Some(auc) => println!("class {} AUC {:.4} ({} roc points)", c.class, auc, c.points.len()),
            None => println!("class {} AUC undefined (single-class slice)", c.class),
        }
    }
    if let Some(macro_auc) = roc.macro_auc {
        println!("macro AUC {macro_auc:.4}");
    }

    let latency = decision_latency(&model, spec.sampling_rate, 50, 0).expect("probe");
    println!("decision latency over {} reps:", latency.reps);
    for s in &latency.stages {
        println!("  {:<14} mean {:8.3} ms   p95 {:8.3} ms", s.name, s.mean_s * 1e3, s.p95_s * 1e3);
    }
    println!(
        "  {:<14} mean {:8.3} ms   p95 {:8.3} ms",
        latency.total.name,
        latency.total.mean_s * 1e3,
        latency.total.p95_s * 1e3
    );
}
