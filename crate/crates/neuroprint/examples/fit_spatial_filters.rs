//! Fit the one-vs-rest spatial filter bank on synthetic epochs and show
//! how log-variance features separate the classes before any network
//! sees them.

use neuroprint::csp::{apply_csp, fit_csp};
use neuroprint::synth::{generate_epochs, SynthSpec};

fn main() {
    let spec = SynthSpec {
        channels: 6,
        window: 32,
        num_classes: 3,
        ..SynthSpec::default()
    };
    let epochs = generate_epochs(&spec, 60);
    let (train, test) = epochs.split_at(150);

    let model = fit_csp(train, spec.num_classes).expect("filter bank");
    println!(
        "fitted {}x{} filter bank over classes {:?}",
        model.w.nrows(),
        model.w.ncols(),
        model.class_order
    );
    for (k, vals) in model.per_class_eigvals.iter().enumerate() {
        let head: Vec<String> = vals.iter().take(3).map(|v| format!("{v:.3}")).collect();
        println!("  class {} top eigenvalues: {}", k + 1, head.join(" "));
    }

    // Per class, the mean log-variance profile across filtered channels.
    // Rows belonging to a class's own filters light up on its epochs.
    let m = spec.channels;
    let mut profiles = vec![vec![0.0f64; m]; spec.num_classes];
    let mut counts = vec![0usize; spec.num_classes];
    for ep in test {
        let filtered = apply_csp(&model, ep).expect("same channel count");
        let k = (ep.label - 1) as usize;
        counts[k] += 1;
        for ch in 0..m {
            let row = filtered.data.row(ch);
            let var = row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64;
            profiles[k][ch] += var.ln();
        }
    }
    println!("mean log-variance per filtered channel (rows: true class):");
    for (k, profile) in profiles.iter().enumerate() {
        let cells: Vec<String> = profile
            .iter()
            .map(|v| format!("{:+6.2}", v / counts[k] as f64))
            .collect();
        println!("  class {}: {}", k + 1, cells.join(" "));
    }

    // Nearest-profile classification on those features alone.
    let mut hits = 0usize;
    for ep in test {
        let filtered = apply_csp(&model, ep).expect("same channel count");
        let feat: Vec<f64> = (0..m)
            .map(|ch| {
                let row = filtered.data.row(ch);
                (row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64).ln()
            })
            .collect();
        let best = (0..spec.num_classes)
            .min_by(|&a, &b| {
                let da: f64 = feat
                    .iter()
                    .zip(&profiles[a])
                    .map(|(f, p)| (f - p / counts[a] as f64).powi(2))
                    .sum();
                let db: f64 = feat
                    .iter()
                    .zip(&profiles[b])
                    .map(|(f, p)| (f - p / counts[b] as f64).powi(2))
                    .sum();
                da.partial_cmp(&db).expect("finite distances")
            })
            .expect("nonempty classes");
        if best as u32 + 1 == ep.label {
            hits += 1;
        }
    }
    println!(
        "nearest-profile accuracy on {} test epochs: {:.3}",
        test.len(),
        hits as f64 / test.len() as f64
    );
}
