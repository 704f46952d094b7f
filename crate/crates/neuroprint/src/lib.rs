//! EEG motor-imagery decoding: spatial filtering, a learnable channel-graph
//! layer, a compact convolutional classifier, and a streaming decision loop.

pub mod csp;
pub mod edf;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod net;
pub mod pipeline;
pub mod rng;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
