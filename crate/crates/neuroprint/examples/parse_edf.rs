//! Write a small EDF+ file with the bundled fixture writer, parse it
//! back, and print the header, signal matrix, and annotations.

use neuroprint::edf::fixture::{pack_tal, tal_event, tal_timekeeping, write_edf, FixtureSignal};
use neuroprint::edf::parse_edf_bytes;

fn main() {
    // Two data channels at 4 samples per 1 s record, two records, plus
    // an annotation channel carrying one event marker.
    let mut ann = pack_tal(&tal_event(0.0, 0.5, 1.0, "T1"), 24);
    ann.extend(pack_tal(&tal_timekeeping(1.0), 24));
    let bytes = write_edf(
        2,
        1.0,
        &[
            FixtureSignal::data("C3", 4, vec![0, 8192, -8192, 16384, -16384, 24576, -24576, 32767]),
            FixtureSignal::data("C4", 4, vec![100, 200, 300, 400, 500, 600, 700, 800]),
            FixtureSignal::annotations(24, ann),
        ],
    );
    println!("fixture file: {} bytes", bytes.len());

    let (header, recording) = parse_edf_bytes(&bytes).expect("parse");
    println!(
        "header: version {:?}, {} records x {} s, {} signals",
        header.version, header.num_records, header.record_duration_s, header.num_signals
    );
    for sig in &header.signals {
        println!(
            "  {:<16} phys [{}, {}] {}  dig [{}, {}]  {}/record",
            sig.label,
            sig.physical_min,
            sig.physical_max,
            sig.physical_dimension,
            sig.digital_min,
            sig.digital_max,
            sig.samples_per_record
        );
    }

    println!(
        "recording: {} channels x {} samples at {} Hz",
        recording.num_channels(),
        recording.num_samples(),
        recording.sampling_rate
    );
    for (ch, label) in recording.channel_labels.iter().enumerate() {
        let row: Vec<String> = recording
            .data
            .row(ch)
            .iter()
            .map(|v| format!("{v:+.4}"))
            .collect();
        println!("  {label}: {}", row.join(" "));
    }
    for ev in &recording.events {
        println!(
            "event at {:.2}s for {:.2}s: {:?}",
            ev.onset_s, ev.duration_s, ev.text
        );
    }
    if recording.warnings.clamped_samples + recording.warnings.skipped_tal_records > 0 {
        println!("warnings: {:?}", recording.warnings);
    }
}
