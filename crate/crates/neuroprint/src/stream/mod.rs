//! Online decision loop: framed TCP streaming of samples into a served
//! model, windowed inference at a fixed step, ten-vote smoothing, and
//! structured audit/dispatch records.

pub mod frame;
pub mod vote;

pub use frame::{decode_frame, encode_frame, read_frame, write_frame, Frame, PROTOCOL_VERSION};
pub use vote::{voting_update, DecisionWindow, VOTE_THRESHOLD, VOTE_WINDOW};

use std::collections::{BTreeMap, VecDeque};
use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::thread::JoinHandle;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{argmax, ClassifierModel};
use crate::edf::Recording;

/// Strictly increasing microseconds since process start.
pub fn mono_us() -> u64 {
    static START: OnceLock<Instant> = OnceLock::new();
    static LAST: AtomicU64 = AtomicU64::new(0);
    let now = START.get_or_init(Instant::now).elapsed().as_micros() as u64;
    LAST.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |last| {
        Some(now.max(last + 1))
    })
    .expect("u64 update")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DecisionRecord {
    pub class: u32,
    pub confidence: f64,
    pub votes: usize,
    pub timestamp_us: u64,
}

#[derive(Debug, Clone, Default)]
pub struct SessionSummary {
    pub samples: usize,
    pub windows: usize,
    pub decisions: Vec<DecisionRecord>,
}

/// Issued print command: which catalog object a decision selected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DispatchRecord {
    pub class: u32,
    pub object: String,
    pub model_path: String,
    pub issued_us: u64,
}

/// The four demo objects, labelled 1–4.
pub fn default_catalog() -> BTreeMap<u32, String> {
    [(1, "Mario"), (2, "car"), (3, "boat"), (4, "PinkiePie")]
        .into_iter()
        .map(|(k, v)| (k, v.to_string()))
        .collect()
}

/// Resolves a decided class against the object catalog.
pub fn dispatch(
    class: u32,
    catalog: &BTreeMap<u32, String>,
    model_path: &str,
) -> Result<DispatchRecord> {
    let object = catalog
        .get(&class)
        .ok_or(Error::UnknownClass { class })?
        .clone();
    Ok(DispatchRecord {
        class,
        object,
        model_path: model_path.to_string(),
        issued_us: mono_us(),
    })
}

fn send_error<S: Write>(conn: &mut S, message: &str) {
    // Best effort: the session is already failing.
    let _ = write_frame(
        conn,
        &Frame::Error {
            message: message.to_string(),
        },
    );
}

/// Serves one connection: HELLO handshake, then SAMPLE frames windowed
/// into the model every `step` new samples (0 → half a window), with
/// decisive vote windows answered by DECISION frames. `on_decision`
/// sees every emitted decision (for audit/dispatch logging).
pub fn run_session<S: Read + Write, F: FnMut(&DecisionRecord)>(
    conn: &mut S,
    model: &ClassifierModel,
    step: usize,
    mut on_decision: F,
) -> Result<SessionSummary> {
    let m = model.num_channels();
    let l = model.window_len();
    let step = if step == 0 { (l / 2).max(1) } else { step };

    let hello = match read_frame(conn) {
        Ok(Some(f)) => f,
        Ok(None) => return Ok(SessionSummary::default()),
        Err(e) => {
            send_error(conn, &e.to_string());
            return Err(e);
        }
    };
    let (channels, rate) = match hello {
        Frame::Hello {
            version,
            channels,
            rate,
        } => {
            if version != PROTOCOL_VERSION as u16 {
                let e = Error::BadProtocolVersion {
                    got: version.min(u8::MAX as u16) as u8,
                };
                send_error(conn, &e.to_string());
                return Err(e);
            }
            (channels as usize, rate)
        }
        other => {
            let e = Error::UnexpectedFrame {
                expected: "HELLO",
                got: other.kind_name(),
            };
            send_error(conn, &e.to_string());
            return Err(e);
        }
    };
    if channels != m {
        let e = Error::ChannelCountMismatch {
            expected: m,
            got: channels,
        };
        send_error(conn, &e.to_string());
        return Err(e);
    }
    write_frame(
        conn,
        &Frame::Hello {
            version: PROTOCOL_VERSION as u16,
            channels: m as u16,
            rate,
        },
    )?;

    let mut summary = SessionSummary::default();
    let mut buffer: VecDeque<Vec<f64>> = VecDeque::with_capacity(l);
    let mut since_last = 0usize;
    let mut window = DecisionWindow::new();

    loop {
        let frame = match read_frame(conn) {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) => {
                send_error(conn, &e.to_string());
                return Err(e);
            }
        };
        match frame {
            Frame::Sample { values } => {
                if values.len() != m {
                    let e = Error::ChannelCountMismatch {
                        expected: m,
                        got: values.len(),
                    };
                    send_error(conn, &e.to_string());
                    return Err(e);
                }
                if buffer.len() == l {
                    buffer.pop_front();
                }
                buffer.push_back(values.iter().map(|&v| v as f64).collect());
                summary.samples += 1;
                since_last += 1;
                if buffer.len() == l && since_last >= step {
                    since_last = 0;
                    summary.windows += 1;
                    let data =
                        Array2::from_shape_fn((m, l), |(i, j)| buffer[j][i]);
                    let (class, probs) = model.predict_class(&data)?;
                    let confidence = probs[argmax(&probs)];
                    if let Some((winner, votes)) = window.update(class) {
                        let record = DecisionRecord {
                            class: winner,
                            confidence,
                            votes,
                            timestamp_us: mono_us(),
                        };
                        write_frame(
                            conn,
                            &Frame::Decision {
                                class: winner as u16,
                                confidence: confidence as f32,
                                votes: votes as u16,
                                timestamp_us: record.timestamp_us,
                            },
                        )?;
                        on_decision(&record);
                        summary.decisions.push(record);
                    }
                }
            }
            Frame::Error { message } => {
                return Err(Error::PeerError { message });
            }
            other => {
                let e = Error::UnexpectedFrame {
                    expected: "SAMPLE",
                    got: other.kind_name(),
                };
                send_error(conn, &e.to_string());
                return Err(e);
            }
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// New samples between classifications; 0 means half a window.
    pub step: usize,
    /// Stop accepting after this many sessions (None = run until shutdown).
    pub max_sessions: Option<usize>,
    pub audit_log: Option<PathBuf>,
    pub dispatch_log: Option<PathBuf>,
    pub catalog: BTreeMap<u32, String>,
    /// Recorded in dispatch records.
    pub model_path: String,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            step: 0,
            max_sessions: None,
            audit_log: None,
            dispatch_log: None,
            catalog: default_catalog(),
            model_path: String::new(),
        }
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    join: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting, wakes the listener, and joins all sessions.
    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Blocks until the accept loop ends on its own (only happens when
    /// a session cap was configured).
    pub fn wait(mut self) {
        if let Some(j) = self.join.take() {
            let _ = j.join();
        }
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr); // wake the accept loop
        if let Some(j) = self.join.take() {
            let _ = j.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.join.is_some() {
            self.stop();
        }
    }
}

fn append_line(file: &Arc<Mutex<std::fs::File>>, line: &str) {
    if let Ok(mut f) = file.lock() {
        let _ = writeln!(f, "{line}");
    }
}

/// Binds a listener and serves sessions, one thread per connection.
/// Decisions are appended to the audit log and resolved against the
/// catalog into the dispatch log (both newline-delimited JSON).
pub fn serve(bind: &str, model: ClassifierModel, opts: ServeOptions) -> Result<ServerHandle> {
    let listener = TcpListener::bind(bind)?;
    let addr = listener.local_addr()?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let model = Arc::new(model);

    let audit = match &opts.audit_log {
        Some(p) => Some(Arc::new(Mutex::new(
            OpenOptions::new().create(true).append(true).open(p)?,
        ))),
        None => None,
    };
    let dispatch_log = match &opts.dispatch_log {
        Some(p) => Some(Arc::new(Mutex::new(
            OpenOptions::new().create(true).append(true).open(p)?,
        ))),
        None => None,
    };

    let accept_shutdown = Arc::clone(&shutdown);
    let join = std::thread::spawn(move || {
        let mut sessions: Vec<JoinHandle<()>> = Vec::new();
        let mut served = 0usize;
        for stream in listener.incoming() {
            if accept_shutdown.load(Ordering::SeqCst) {
                break;
            }
            let Ok(mut stream) = stream else { continue };
            served += 1;
            let model = Arc::clone(&model);
            let audit = audit.clone();
            let dispatch_files = dispatch_log.clone();
            let catalog = opts.catalog.clone();
            let model_path = opts.model_path.clone();
            let step = opts.step;
            sessions.push(std::thread::spawn(move || {
                let result = run_session(&mut stream, &model, step, |record| {
                    if let Some(f) = &audit {
                        if let Ok(line) = serde_json::to_string(record) {
                            append_line(f, &line);
                        }
                    }
                    if let Some(f) = &dispatch_files {
                        if let Ok(rec) = dispatch(record.class, &catalog, &model_path) {
                            if let Ok(line) = serde_json::to_string(&rec) {
                                append_line(f, &line);
                            }
                        }
                    }
                });
                if let Err(e) = result {
                    eprintln!("session error: {e}");
                }
            }));
            if Some(served) == opts.max_sessions {
                break;
            }
        }
        for s in sessions {
            let _ = s.join();
        }
    });

    Ok(ServerHandle {
        addr,
        shutdown,
        join: Some(join),
    })
}

/// Streams a recording to a serving endpoint as a client and collects
/// the decisions sent back. `speed` is a real-time multiple (1.0 plays
/// at the recording's sampling rate; 0 or less streams at full speed).
pub fn simulate(addr: &str, recording: &Recording, speed: f64) -> Result<Vec<DecisionRecord>> {
    let mut conn = TcpStream::connect(addr)?;
    let m = recording.num_channels();
    write_frame(
        &mut conn,
        &Frame::Hello {
            version: PROTOCOL_VERSION as u16,
            channels: m as u16,
            rate: recording.sampling_rate as f32,
        },
    )?;
    match read_frame(&mut conn)? {
        Some(Frame::Hello { .. }) => {}
        Some(Frame::Error { message }) => return Err(Error::PeerError { message }),
        Some(other) => {
            return Err(Error::UnexpectedFrame {
                expected: "HELLO",
                got: other.kind_name(),
            })
        }
        None => {
            return Err(Error::UnexpectedFrame {
                expected: "HELLO",
                got: "end of stream",
            })
        }
    }

    let pause = if speed > 0.0 {
        Some(std::time::Duration::from_secs_f64(
            1.0 / (recording.sampling_rate * speed),
        ))
    } else {
        None
    };
    for j in 0..recording.num_samples() {
        let values: Vec<f32> = (0..m).map(|i| recording.data[(i, j)] as f32).collect();
        write_frame(&mut conn, &Frame::Sample { values })?;
        if let Some(p) = pause {
            std::thread::sleep(p);
        }
    }
    conn.shutdown(std::net::Shutdown::Write)?;

    let mut decisions = Vec::new();
    while let Some(frame) = read_frame(&mut conn)? {
        match frame {
            Frame::Decision {
                class,
                confidence,
                votes,
                timestamp_us,
            } => decisions.push(DecisionRecord {
                class: class as u32,
                confidence: confidence as f64,
                votes: votes as usize,
                timestamp_us,
            }),
            Frame::Error { message } => return Err(Error::PeerError { message }),
            _ => {}
        }
    }
    Ok(decisions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{train_model, TrainConfig};
    use crate::pipeline::Epoch;
    use crate::synth::{generate_epochs, generate_stream, SynthSpec};

    fn quick_model() -> (ClassifierModel, SynthSpec) {
        let spec = SynthSpec {
            channels: 4,
            window: 8,
            num_classes: 2,
            ..SynthSpec::default()
        };
        let mut epochs = generate_epochs(&spec, 40);
        let test: Vec<Epoch> = epochs.split_off(64);
        let batches: Vec<Vec<Epoch>> = epochs.chunks(8).map(<[Epoch]>::to_vec).collect();
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
        (model, spec)
    }

    #[test]
    fn dispatch_resolves_catalog_names() {
        let catalog = default_catalog();
        let rec = dispatch(4, &catalog, "model.bin").unwrap();
        assert_eq!(rec.object, "PinkiePie");
        assert_eq!(rec.model_path, "model.bin");

        assert!(matches!(
            dispatch(9, &catalog, "model.bin"),
            Err(Error::UnknownClass { class: 9 })
        ));

        let a = dispatch(1, &catalog, "m").unwrap();
        let b = dispatch(2, &catalog, "m").unwrap();
        assert!(b.issued_us > a.issued_us, "timestamps are monotonic");
    }

    #[test]
    fn short_stream_yields_no_decisions() {
        let (model, spec) = quick_model();
        let stream = generate_stream(&spec, 1, 4); // shorter than the window
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&encode_frame(&Frame::Hello {
            version: 1,
            channels: spec.channels as u16,
            rate: spec.sampling_rate as f32,
        }));
        for j in 0..stream.num_samples() {
            let values: Vec<f32> = (0..spec.channels)
                .map(|i| stream.data[(i, j)] as f32)
                .collect();
            bytes.extend_from_slice(&encode_frame(&Frame::Sample { values }));
        }
        let mut duplex = Duplex {
            input: std::io::Cursor::new(bytes),
            output: Vec::new(),
        };
        let summary = run_session(&mut duplex, &model, 0, |_| {}).unwrap();
        assert_eq!(summary.samples, 4);
        assert_eq!(summary.windows, 0);
        assert!(summary.decisions.is_empty());
    }

    /// Read from a canned buffer, capture writes.
    struct Duplex {
        input: std::io::Cursor<Vec<u8>>,
        output: Vec<u8>,
    }

    impl Read for Duplex {
        fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
            self.input.read(buf)
        }
    }

    impl Write for Duplex {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.output.write(buf)
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn channel_mismatch_sends_error_and_closes() {
        let (model, _) = quick_model();
        let bytes = encode_frame(&Frame::Hello {
            version: 1,
            channels: 9, // model has 4
            rate: 128.0,
        });
        let mut duplex = Duplex {
            input: std::io::Cursor::new(bytes),
            output: Vec::new(),
        };
        let err = run_session(&mut duplex, &model, 0, |_| {}).unwrap_err();
        assert!(matches!(
            err,
            Error::ChannelCountMismatch {
                expected: 4,
                got: 9
            }
        ));
        let reply = decode_frame(&duplex.output).unwrap();
        assert!(matches!(reply, Frame::Error { .. }));
    }

    #[test]
    fn loopback_decodes_the_planted_class() {
        let (model, spec) = quick_model();
        let planted = 2u32;
        // window 8, step 4: ten votes need 8 + 10*4 = 48 samples
        let stream = generate_stream(&spec, planted, 120);

        let dir = tempfile::tempdir().unwrap();
        let audit_path = dir.path().join("audit.ndjson");
        let handle = serve(
            "127.0.0.1:0",
            model,
            ServeOptions {
                max_sessions: Some(1),
                audit_log: Some(audit_path.clone()),
                dispatch_log: Some(dir.path().join("dispatch.ndjson")),
                model_path: "loopback.bin".into(),
                ..ServeOptions::default()
            },
        )
        .unwrap();
        let decisions = simulate(&handle.addr().to_string(), &stream, 0.0).unwrap();
        handle.shutdown();

        assert!(!decisions.is_empty(), "expected at least one decision");
        assert_eq!(decisions[0].class, planted);
        assert!(decisions[0].votes >= VOTE_THRESHOLD);

        let audit = std::fs::read_to_string(&audit_path).unwrap();
        let lines: Vec<&str> = audit.trim().lines().collect();
        assert_eq!(lines.len(), decisions.len());
        let first: DecisionRecord = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first.class, planted);

        let dispatches = std::fs::read_to_string(dir.path().join("dispatch.ndjson")).unwrap();
        let rec: DispatchRecord = serde_json::from_str(dispatches.lines().next().unwrap()).unwrap();
        assert_eq!(rec.object, "car");
        assert_eq!(rec.model_path, "loopback.bin");
    }
}
