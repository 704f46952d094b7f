//! EDF/EDF+ ingestion: fixed-width ASCII headers, 16-bit little-endian
//! samples scaled to physical units, and TAL event annotations. A CSV
//! path (with a key=value sidecar) covers headset exports that never
//! touched an EDF container.
//!
//! Parsing is pure per-file; nothing here holds global state.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Signal label that marks a TAL annotation stream rather than data.
pub const ANNOTATION_LABEL: &str = "EDF Annotations";

/// Per-signal slice of the EDF header.
#[derive(Debug, Clone)]
pub struct EdfSignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
}

impl EdfSignalHeader {
    pub fn is_annotation(&self) -> bool {
        self.label == ANNOTATION_LABEL
    }

    /// Affine digital→physical conversion.
    pub fn to_physical(&self, digital: i32) -> f64 {
        self.physical_min
            + (digital - self.digital_min) as f64 * (self.physical_max - self.physical_min)
                / (self.digital_max - self.digital_min) as f64
    }
}

/// The fixed 256-byte header plus all per-signal fields.
#[derive(Debug, Clone)]
pub struct EdfHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    pub start_date: String,
    pub start_time: String,
    pub header_bytes: usize,
    pub num_records: usize,
    pub record_duration_s: f64,
    pub num_signals: usize,
    pub signals: Vec<EdfSignalHeader>,
}

impl EdfHeader {
    /// Bytes occupied by one data record.
    pub fn record_bytes(&self) -> usize {
        2 * self
            .signals
            .iter()
            .map(|s| s.samples_per_record)
            .sum::<usize>()
    }
}

/// One event marker: onset, optional duration (0 when absent), and text.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub onset_s: f64,
    pub duration_s: f64,
    pub text: String,
}

/// Non-fatal oddities found while decoding a file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseWarnings {
    /// Digital samples outside [digital_min, digital_max], clamped.
    pub clamped_samples: usize,
    /// TAL records dropped for malformed or negative onsets.
    pub skipped_tal_records: usize,
}

/// A continuous multichannel recording in physical units, with its
/// event markers. `data` is channels × time.
#[derive(Debug, Clone)]
pub struct Recording {
    pub channel_labels: Vec<String>,
    pub sampling_rate: f64,
    pub data: Array2<f64>,
    pub events: Vec<Annotation>,
    pub warnings: ParseWarnings,
}

impl Recording {
    pub fn num_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.num_samples() as f64 / self.sampling_rate
    }
}

// ---- header parsing ------------------------------------------------------

fn ascii(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).trim().to_string()
}

fn int_field(bytes: &[u8], field: &'static str) -> Result<i64> {
    let s = ascii(bytes);
    s.parse().map_err(|_| Error::BadNumericField {
        field,
        value: s.clone(),
    })
}

fn real_field(bytes: &[u8], field: &'static str) -> Result<f64> {
    let s = ascii(bytes);
    let v: f64 = s.parse().map_err(|_| Error::BadNumericField {
        field,
        value: s.clone(),
    })?;
    if !v.is_finite() {
        return Err(Error::BadNumericField { field, value: s });
    }
    Ok(v)
}

/// Decodes the 256-byte fixed header and the 256·ns signal headers.
///
/// Signal fields are stored grouped by type (all labels, then all
/// transducers, …), not interleaved per signal. Verifies the stated
/// header size against `256·(1+ns)` and the digital/physical ranges.
pub fn parse_edf_header(bytes: &[u8]) -> Result<EdfHeader> {
    if bytes.len() < 256 {
        return Err(Error::ShortInput {
            needed: 256,
            got: bytes.len(),
        });
    }
    let version = ascii(&bytes[0..8]);
    let patient_id = ascii(&bytes[8..88]);
    let recording_id = ascii(&bytes[88..168]);
    let start_date = ascii(&bytes[168..176]);
    let start_time = ascii(&bytes[176..184]);
    let header_bytes = int_field(&bytes[184..192], "header_bytes")?;
    let num_records = int_field(&bytes[236..244], "num_records")?;
    let record_duration_s = real_field(&bytes[244..252], "record_duration")?;
    let num_signals = int_field(&bytes[252..256], "num_signals")?;

    if num_signals < 0 || num_records < 0 || header_bytes < 0 {
        return Err(Error::BadNumericField {
            field: "header counts",
            value: format!("signals {num_signals}, records {num_records}"),
        });
    }
    let ns = num_signals as usize;
    let computed = 256 * (1 + ns);
    if header_bytes as usize != computed {
        return Err(Error::HeaderSizeMismatch {
            stated: header_bytes as usize,
            signals: ns,
            computed,
        });
    }
    if bytes.len() < computed {
        return Err(Error::ShortInput {
            needed: computed,
            got: bytes.len(),
        });
    }

    // Grouped field blocks, in on-disk order.
    let widths = [16usize, 80, 8, 8, 8, 8, 8, 80, 8, 32];
    let mut starts = [0usize; 10];
    let mut pos = 256;
    for (i, w) in widths.iter().enumerate() {
        starts[i] = pos;
        pos += w * ns;
    }
    let block = |field: usize, sig: usize| -> &[u8] {
        let w = widths[field];
        let at = starts[field] + sig * w;
        &bytes[at..at + w]
    };

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let sig = EdfSignalHeader {
            label: ascii(block(0, i)),
            transducer: ascii(block(1, i)),
            physical_dimension: ascii(block(2, i)),
            physical_min: real_field(block(3, i), "physical_min")?,
            physical_max: real_field(block(4, i), "physical_max")?,
            digital_min: int_field(block(5, i), "digital_min")? as i32,
            digital_max: int_field(block(6, i), "digital_max")? as i32,
            prefiltering: ascii(block(7, i)),
            samples_per_record: int_field(block(8, i), "samples_per_record")?.max(0) as usize,
        };
        if sig.digital_min >= sig.digital_max {
            return Err(Error::BadRange {
                index: i,
                what: "digital",
            });
        }
        if !sig.is_annotation() && sig.physical_min == sig.physical_max {
            return Err(Error::BadRange {
                index: i,
                what: "physical",
            });
        }
        signals.push(sig);
    }
    let has_data = signals.iter().any(|s| !s.is_annotation());
    if has_data && record_duration_s <= 0.0 {
        return Err(Error::BadNumericField {
            field: "record_duration",
            value: record_duration_s.to_string(),
        });
    }

    Ok(EdfHeader {
        version,
        patient_id,
        recording_id,
        start_date,
        start_time,
        header_bytes: header_bytes as usize,
        num_records: num_records as usize,
        record_duration_s,
        num_signals: ns,
        signals,
    })
}

// ---- data records --------------------------------------------------------

/// Decodes the data records that follow the header.
///
/// `payload` is everything after the header bytes. Samples are 16-bit
/// little-endian two's-complement; out-of-range values are clamped and
/// counted rather than rejected (real files contain saturated samples).
/// Annotation signals are routed to [`parse_tal`] instead of the data
/// matrix.
pub fn read_signal_data(payload: &[u8], header: &EdfHeader) -> Result<Recording> {
    let record_bytes = header.record_bytes();
    let expected = header.num_records * record_bytes;
    if payload.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            got: payload.len(),
        });
    }

    let data_signals: Vec<usize> = (0..header.num_signals)
        .filter(|&i| !header.signals[i].is_annotation())
        .collect();
    let spr = data_signals
        .first()
        .map(|&i| header.signals[i].samples_per_record)
        .unwrap_or(0);
    for &i in &data_signals {
        if header.signals[i].samples_per_record != spr {
            return Err(Error::DimensionMismatch {
                what: "samples per record across data signals".into(),
                expected: spr.to_string(),
                actual: header.signals[i].samples_per_record.to_string(),
            });
        }
    }

    let m = data_signals.len();
    let t = header.num_records * spr;
    let mut data = Array2::<f64>::zeros((m, t));
    let mut events = Vec::new();
    let mut warnings = ParseWarnings::default();

    for rec in 0..header.num_records {
        let mut off = rec * record_bytes;
        let mut row = 0usize;
        for (i, sig) in header.signals.iter().enumerate() {
            let n = sig.samples_per_record;
            let chunk = &payload[off..off + 2 * n];
            off += 2 * n;
            if sig.is_annotation() {
                let (mut anns, skipped) = parse_tal_counting(chunk);
                events.append(&mut anns);
                warnings.skipped_tal_records += skipped;
                continue;
            }
            debug_assert_eq!(data_signals[row], i);
            for (k, pair) in chunk.chunks_exact(2).enumerate() {
                let mut d = i16::from_le_bytes([pair[0], pair[1]]) as i32;
                if d < sig.digital_min {
                    d = sig.digital_min;
                    warnings.clamped_samples += 1;
                } else if d > sig.digital_max {
                    d = sig.digital_max;
                    warnings.clamped_samples += 1;
                }
                data[(row, rec * spr + k)] = sig.to_physical(d);
            }
            row += 1;
        }
    }

    events.sort_by(|a, b| a.onset_s.partial_cmp(&b.onset_s).unwrap());
    Ok(Recording {
        channel_labels: data_signals
            .iter()
            .map(|&i| header.signals[i].label.clone())
            .collect(),
        sampling_rate: spr as f64 / header.record_duration_s,
        data,
        events,
        warnings,
    })
}

/// Parses a whole EDF byte buffer: header, then data records.
pub fn parse_edf_bytes(bytes: &[u8]) -> Result<(EdfHeader, Recording)> {
    let header = parse_edf_header(bytes)?;
    let recording = read_signal_data(&bytes[header.header_bytes..], &header)?;
    Ok((header, recording))
}

pub fn parse_edf_file(path: &Path) -> Result<(EdfHeader, Recording)> {
    parse_edf_bytes(&fs::read(path)?)
}

// ---- TAL annotations -----------------------------------------------------

/// Parses a Time-stamped Annotations List buffer.
///
/// Records are 0x00-terminated; within a record the onset and optional
/// duration are separated by 0x15 and each annotation text ends with
/// 0x14. Timekeeping records (empty text) produce nothing. Records with
/// malformed or negative onsets are skipped, never fatal.
pub fn parse_tal(bytes: &[u8]) -> Vec<Annotation> {
    parse_tal_counting(bytes).0
}

/// [`parse_tal`] plus the count of records that had to be skipped.
pub fn parse_tal_counting(bytes: &[u8]) -> (Vec<Annotation>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for record in bytes.split(|&b| b == 0x00) {
        if record.is_empty() {
            continue;
        }
        let mut parts = record.splitn(2, |&b| b == 0x14);
        let head = parts.next().unwrap_or(&[]);
        let rest = parts.next().unwrap_or(&[]);
        if !matches!(head.first(), Some(b'+') | Some(b'-')) {
            skipped += 1;
            continue;
        }
        // Onset and duration; empty pieces between 0x15 bytes are ignored.
        let mut nums = head.split(|&b| b == 0x15).filter(|p| !p.is_empty());
        let onset: Option<f64> = nums
            .next()
            .and_then(|p| String::from_utf8_lossy(p).parse().ok());
        let duration: f64 = nums
            .next()
            .and_then(|p| String::from_utf8_lossy(p).parse().ok())
            .unwrap_or(0.0);
        let onset = match onset {
            Some(o) if o.is_finite() && o >= 0.0 && duration.is_finite() => o,
            _ => {
                skipped += 1;
                continue;
            }
        };
        for text in rest.split(|&b| b == 0x14) {
            if text.is_empty() {
                continue;
            }
            out.push(Annotation {
                onset_s: onset,
                duration_s: duration,
                text: String::from_utf8_lossy(text).into_owned(),
            });
        }
    }
    (out, skipped)
}

// ---- motor-imagery run labeling ------------------------------------------

/// Default imagined-task runs of the 64-channel public motor-imagery set.
pub const IMAGINED_RUNS: [u32; 6] = [4, 6, 8, 10, 12, 14];

/// Class id for a marker within a given run, or None for rest/unmapped.
///
/// Runs 3/4/7/8/11/12 carry single-fist tasks (T1 → class 1 left,
/// T2 → class 2 right); runs 5/6/9/10/13/14 carry the two-limb tasks
/// (T1 → class 3 both fists, T2 → class 4 both feet).
pub fn run_class_label(run: u32, marker: &str) -> Option<u32> {
    let group = match run {
        3 | 4 | 7 | 8 | 11 | 12 => 0,
        5 | 6 | 9 | 10 | 13 | 14 => 1,
        _ => return None,
    };
    match (marker, group) {
        ("T1", 0) => Some(1),
        ("T2", 0) => Some(2),
        ("T1", 1) => Some(3),
        ("T2", 1) => Some(4),
        _ => None,
    }
}

/// Extracts the run number from a file name like `S001R04.edf`.
pub fn run_number_from_name(name: &str) -> Option<u32> {
    let idx = name.rfind(['R', 'r'])?;
    let digits: String = name[idx + 1..]
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    if digits.is_empty() {
        None
    } else {
        digits.parse().ok()
    }
}

/// Loads one run file and rewrites its T1/T2 markers to numeric class
/// labels per [`run_class_label`]. Unmapped markers (rest periods) keep
/// their original text and are ignored downstream.
pub fn load_run(path: &Path) -> Result<Recording> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let run = run_number_from_name(&name);
    let (_, mut recording) = parse_edf_file(path)?;
    if let Some(run) = run {
        for ev in &mut recording.events {
            if let Some(class) = run_class_label(run, &ev.text) {
                ev.text = class.to_string();
            }
        }
    }
    Ok(recording)
}

/// Loads every requested run of a subject directory (files named
/// `*R<nn>.edf`), labeled and sorted by run number.
pub fn load_subject_dir(dir: &Path, runs: &[u32]) -> Result<Vec<Recording>> {
    let mut found: Vec<(u32, std::path::PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !name.to_ascii_lowercase().ends_with(".edf") {
            continue;
        }
        if let Some(run) = run_number_from_name(&name) {
            if runs.contains(&run) {
                found.push((run, entry.path()));
            }
        }
    }
    found.sort();
    found.iter().map(|(_, p)| load_run(p)).collect()
}

// ---- CSV ingestion --------------------------------------------------------

/// Reads a `key = value` sidecar/config file. `#` starts a comment.
pub fn read_sidecar(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::BadSidecar {
        path: path.display().to_string(),
        problem: e.to_string(),
    })?;
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::BadSidecar {
            path: path.display().to_string(),
            problem: format!("line {line:?} is not key=value"),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Loads a headset CSV export: header row of channel names plus one
/// `label` column, numeric body. The sampling rate comes from a sidecar
/// config next to the file (same name, `.cfg` extension) holding
/// `sampling_rate = <Hz>`.
///
/// Rows labeled 0 are dropped; each maximal run of rows sharing a
/// nonzero label becomes one event interval (runs split by dropped rows
/// stay separate even when the labels match, so no window can straddle
/// a gap).
pub fn load_local_csv(path: &Path) -> Result<Recording> {
    let sidecar_path = path.with_extension("cfg");
    let sidecar = read_sidecar(&sidecar_path)?;
    let sampling_rate: f64 = sidecar
        .get("sampling_rate")
        .ok_or_else(|| Error::BadSidecar {
            path: sidecar_path.display().to_string(),
            problem: "missing sampling_rate".into(),
        })?
        .parse()
        .map_err(|_| Error::BadSidecar {
            path: sidecar_path.display().to_string(),
            problem: "sampling_rate is not a number".into(),
        })?;
    if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
        return Err(Error::BadSidecar {
            path: sidecar_path.display().to_string(),
            problem: "sampling_rate must be positive".into(),
        });
    }

    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::NoSamples)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_col = columns
        .iter()
        .position(|c| *c == "label")
        .ok_or(Error::MissingLabelColumn)?;
    let channel_labels: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_col)
        .map(|(_, c)| c.to_string())
        .collect();
    let m = channel_labels.len();

    let mut rows: Vec<(u32, Vec<f64>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::RaggedRow {
                row: lineno + 2,
                expected: columns.len(),
                got: cells.len(),
            });
        }
        let mut values = Vec::with_capacity(m);
        let mut label = 0u32;
        for (i, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::BadNumericField {
                field: "csv cell",
                value: (*cell).to_string(),
            })?;
            if i == label_col {
                if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0) {
                    return Err(Error::BadNumericField {
                        field: "label",
                        value: (*cell).to_string(),
                    });
                }
                label = v as u32;
            } else {
                values.push(v);
            }
        }
        rows.push((label, values));
    }
    if rows.is_empty() {
        return Err(Error::NoSamples);
    }

    // Runs over the original row order; label-0 runs are dropped.
    let mut kept_rows: Vec<&Vec<f64>> = Vec::new();
    let mut events = Vec::new();
    let mut i = 0usize;
    while i < rows.len() {
        let label = rows[i].0;
        let mut j = i;
        while j < rows.len() && rows[j].0 == label {
            j += 1;
        }
        if label != 0 {
            let onset = kept_rows.len() as f64 / sampling_rate;
            let duration = (j - i) as f64 / sampling_rate;
            events.push(Annotation {
                onset_s: onset,
                duration_s: duration,
                text: label.to_string(),
            });
            kept_rows.extend(rows[i..j].iter().map(|(_, v)| v));
        }
        i = j;
    }
    if kept_rows.is_empty() {
        return Err(Error::NoSamples);
    }

    let t = kept_rows.len();
    let mut data = Array2::<f64>::zeros((m, t));
    for (col, row) in kept_rows.iter().enumerate() {
        for ch in 0..m {
            data[(ch, col)] = row[ch];
        }
    }
    Ok(Recording {
        channel_labels,
        sampling_rate,
        data,
        events,
        warnings: ParseWarnings::default(),
    })
}

// ---- fixture writer --------------------------------------------------------

/// Minimal EDF writer for fixtures, demos, and round-trip tests. Not a
/// general-purpose exporter: continuous records, 16-bit samples, and
/// ASCII headers only.
pub mod fixture {
    use super::ANNOTATION_LABEL;

    /// One signal's worth of fixture data, already in digital units.
    #[derive(Debug, Clone)]
    pub struct FixtureSignal {
        pub label: String,
        pub physical_dimension: String,
        pub physical_min: f64,
        pub physical_max: f64,
        pub digital_min: i32,
        pub digital_max: i32,
        pub samples_per_record: usize,
        /// Length must equal `num_records * samples_per_record`.
        pub samples: Vec<i16>,
    }

    impl FixtureSignal {
        /// A plain data channel with the full 16-bit digital range
        /// mapped to ±1 physical units.
        pub fn data(label: &str, samples_per_record: usize, samples: Vec<i16>) -> Self {
            Self {
                label: label.to_string(),
                physical_dimension: "uV".into(),
                physical_min: -1.0,
                physical_max: 1.0,
                digital_min: -32768,
                digital_max: 32767,
                samples_per_record,
                samples,
            }
        }

        /// An annotation signal carrying pre-packed TAL bytes.
        pub fn annotations(samples_per_record: usize, samples: Vec<i16>) -> Self {
            Self {
                label: ANNOTATION_LABEL.into(),
                physical_dimension: String::new(),
                physical_min: -1.0,
                physical_max: 1.0,
                digital_min: -32768,
                digital_max: 32767,
                samples_per_record,
                samples,
            }
        }
    }

    fn field(dst: &mut Vec<u8>, text: &str, width: usize) {
        let mut bytes = text.as_bytes().to_vec();
        bytes.truncate(width);
        bytes.resize(width, b' ');
        dst.extend_from_slice(&bytes);
    }

    /// Serializes a complete EDF byte buffer.
    pub fn write_edf(
        num_records: usize,
        record_duration_s: f64,
        signals: &[FixtureSignal],
    ) -> Vec<u8> {
        let ns = signals.len();
        let mut out = Vec::new();
        field(&mut out, "0", 8);
        field(&mut out, "X X X X", 80);
        field(&mut out, "Startdate X X X X", 80);
        field(&mut out, "01.01.01", 8);
        field(&mut out, "00.00.00", 8);
        field(&mut out, &(256 * (1 + ns)).to_string(), 8);
        let plus = signals.iter().any(|s| s.label == ANNOTATION_LABEL);
        field(&mut out, if plus { "EDF+C" } else { "" }, 44);
        field(&mut out, &num_records.to_string(), 8);
        field(&mut out, &record_duration_s.to_string(), 8);
        field(&mut out, &ns.to_string(), 4);

        for s in signals {
            field(&mut out, &s.label, 16);
        }
        for _ in signals {
            field(&mut out, "", 80);
        }
        for s in signals {
            field(&mut out, &s.physical_dimension, 8);
        }
        for s in signals {
            field(&mut out, &s.physical_min.to_string(), 8);
        }
        for s in signals {
            field(&mut out, &s.physical_max.to_string(), 8);
        }
        for s in signals {
            field(&mut out, &s.digital_min.to_string(), 8);
        }
        for s in signals {
            field(&mut out, &s.digital_max.to_string(), 8);
        }
        for _ in signals {
            field(&mut out, "", 80);
        }
        for s in signals {
            field(&mut out, &s.samples_per_record.to_string(), 8);
        }
        for _ in signals {
            field(&mut out, "", 32);
        }

        for rec in 0..num_records {
            for s in signals {
                let n = s.samples_per_record;
                assert_eq!(
                    s.samples.len(),
                    num_records * n,
                    "fixture signal {} sample count",
                    s.label
                );
                for v in &s.samples[rec * n..(rec + 1) * n] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    /// TAL bytes for one event record, preceded by its timekeeping TAL.
    pub fn tal_event(record_onset_s: f64, onset_s: f64, duration_s: f64, text: &str) -> Vec<u8> {
        let mut b = tal_timekeeping(record_onset_s);
        b.extend_from_slice(format!("+{onset_s}").as_bytes());
        b.push(0x15);
        b.extend_from_slice(format!("{duration_s}").as_bytes());
        b.push(0x14);
        b.extend_from_slice(text.as_bytes());
        b.push(0x14);
        b.push(0x00);
        b
    }

    /// The mandatory record-start timekeeping TAL.
    pub fn tal_timekeeping(record_onset_s: f64) -> Vec<u8> {
        let mut b = format!("+{record_onset_s}").into_bytes();
        b.push(0x14);
        b.push(0x14);
        b.push(0x00);
        b
    }

    /// Packs raw TAL bytes into 16-bit annotation samples, zero-padded.
    pub fn pack_tal(bytes: &[u8], samples_per_record: usize) -> Vec<i16> {
        assert!(
            bytes.len() <= 2 * samples_per_record,
            "TAL bytes exceed annotation signal capacity"
        );
        let mut padded = bytes.to_vec();
        padded.resize(2 * samples_per_record, 0x00);
        padded
            .chunks_exact(2)
            .map(|p| i16::from_le_bytes([p[0], p[1]]))
            .collect()
    }
}
