//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ---- numeric kernel ----
    #[error("matrix is not symmetric: worst pair ({row},{col}) differs by {delta:e}")]
    NotSymmetric { row: usize, col: usize, delta: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
    #[error("matrix is rank deficient: eigenvalue {value:e} at index {index} is below the SPD floor{hint}")]
    RankDeficient {
        index: usize,
        value: f64,
        hint: String,
    },
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: String,
        expected: String,
        actual: String,
    },

    // ---- EDF / CSV ingestion ----
    #[error("input too short: need at least {needed} bytes, got {got}")]
    ShortInput { needed: usize, got: usize },
    #[error("header field `{field}` is not numeric: {value:?}")]
    BadNumericField { field: &'static str, value: String },
    #[error("header byte count {stated} does not match 256*(1+{signals}) = {computed}")]
    HeaderSizeMismatch {
        stated: usize,
        signals: usize,
        computed: usize,
    },
    #[error("signal {index} has an invalid {what} range")]
    BadRange { index: usize, what: &'static str },
    #[error("data payload truncated: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("CSV has no `label` column")]
    MissingLabelColumn,
    #[error("CSV row {row} has {got} fields, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("no samples in input")]
    NoSamples,
    #[error("sidecar config {path}: {problem}")]
    BadSidecar { path: String, problem: String },

    // ---- pipeline / CSP ----
    #[error("class {class} has no epochs")]
    EmptyClass { class: u32 },
    #[error("too few epochs: need at least {needed}, got {got}")]
    TooFewEpochs { needed: usize, got: usize },
    #[error("epoch has zero total power; covariance is undefined")]
    ZeroTrace,
    #[error("label {label} outside 1..={num_classes}")]
    LabelOutOfRange { label: u32, num_classes: usize },
    #[error("spatial filter residual {residual:e} exceeds tolerance for class {class}")]
    FilterResidual { class: u32, residual: f64 },

    // ---- network / training ----
    #[error("non-finite gradient for parameter `{param}`")]
    NonFiniteGradient { param: &'static str },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    // ---- model container ----
    #[error("bad magic: not a model container")]
    BadMagic,
    #[error("unsupported container version {got}")]
    UnsupportedVersion { got: u32 },
    #[error("tensor `{tensor}` blob length mismatch: manifest says {expected} bytes, {got} available")]
    BlobLengthMismatch {
        tensor: String,
        expected: usize,
        got: usize,
    },
    #[error("manifest missing tensor `{name}`")]
    MissingTensor { name: String },

    // ---- streaming protocol ----
    #[error("bad frame magic byte {got:#04x}")]
    BadFrameMagic { got: u8 },
    #[error("unsupported protocol version {got}")]
    BadProtocolVersion { got: u8 },
    #[error("unknown frame kind {kind:#04x}")]
    UnknownFrameKind { kind: u8 },
    #[error("frame payload length mismatch: declared {declared}, decoded {decoded}")]
    FramePayloadMismatch { declared: usize, decoded: usize },
    #[error("channel count mismatch: model expects {expected}, peer sent {got}")]
    ChannelCountMismatch { expected: usize, got: usize },
    #[error("class {class} not in the object catalog")]
    UnknownClass { class: u32 },
    #[error("peer reported error: {message}")]
    PeerError { message: String },
    #[error("unexpected frame {got} while waiting for {expected}")]
    UnexpectedFrame {
        expected: &'static str,
        got: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest JSON: {0}")]
    Json(#[from] serde_json::Error),
}
