//! Serve a freshly trained model over TCP, replay a single-class stream
//! against it, and print the smoothed decisions as they arrive.

use neuroprint::net::{train_model, TrainConfig};
use neuroprint::pipeline::{split_and_batch, SplitSpec};
use neuroprint::stream::{serve, simulate, ServeOptions};
use neuroprint::synth::{generate_epochs, generate_stream, SynthSpec};

fn main() {
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
    .expect("split");
    let config = TrainConfig {
        learning_rate: 2e-3,
        epochs: 40,
        conv_depth: 4,
        hidden: 16,
        seed: 9,
        patience: 100,
        ..TrainConfig::default()
    };
    let (model, history) = train_model(&batches, &test, &config).expect("training");
    println!(
        "model ready (test accuracy {:.3})",
        history.last().map(|s| s.test_accuracy).unwrap_or(0.0)
    );

    let dir = std::env::temp_dir().join("neuroprint_stream_loopback");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let handle = serve(
        "127.0.0.1:0",
        model,
        ServeOptions {
            max_sessions: Some(1),
            audit_log: Some(dir.join("audit.ndjson")),
            dispatch_log: Some(dir.join("dispatch.ndjson")),
            model_path: "loopback".into(),
            ..ServeOptions::default()
        },
    )
    .expect("bind");
    let addr = handle.addr().to_string();
    println!("serving on {addr}");

    // Replay 240 samples of pure class: window 8, step 4 → inference
    // every 4 samples, a decision each time 10 votes fill and ≥7 agree.
    let planted = 2u32;
    let recording = generate_stream(&spec, planted, 240);
    let decisions = simulate(&addr, &recording, 0.0).expect("replay");
    for d in &decisions {
        println!(
            "decision: class {} ({} of 10 votes, confidence {:.3}) at t+{}us",
            d.class, d.votes, d.confidence, d.timestamp_us
        );
    }
    println!(
        "planted class {planted}, decoded {} decision(s)",
        decisions.len()
    );

    handle.wait(); // the session cap already ended the accept loop
    let audit = std::fs::read_to_string(dir.join("audit.ndjson")).expect("audit log");
    println!("audit log carries {} records", audit.lines().count());
}
