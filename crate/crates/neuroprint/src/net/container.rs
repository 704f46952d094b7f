//! Binary model container: a `B2O1` magic, a little-endian u32 manifest
//! length, a JSON manifest (tensor directory, dimensions,
//! hyperparameters, class order, normalization metadata), then the raw
//! tensor blobs as little-endian f64, row-major, in manifest order.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::{ClassifierModel, ConvLayer, DenseLayer, TrainConfig};
use crate::csp::CspModel;
use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::net::Activation;
use crate::pipeline::NormStats;

pub const MAGIC: &[u8; 4] = b"B2O1";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Dims {
    channels: usize,
    window: usize,
    conv_depth: usize,
    hidden: usize,
    classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the data region.
    offset: usize,
    /// Byte length of the blob.
    len: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    dims: Dims,
    hyperparameters: TrainConfig,
    class_order: Vec<u32>,
    per_class_eigvals: Vec<Vec<f64>>,
    floored_channels: Vec<usize>,
    tensors: Vec<TensorEntry>,
}

/// Tensor blobs in their fixed serialization order.
fn tensor_table(model: &ClassifierModel) -> Vec<(&'static str, Vec<usize>, Vec<f64>)> {
    vec![
        (
            "csp.w",
            model.csp.w.shape().to_vec(),
            model.csp.w.iter().cloned().collect(),
        ),
        (
            "adjacency",
            model.adjacency.entries().shape().to_vec(),
            model.adjacency.entries().iter().cloned().collect(),
        ),
        (
            "conv.filters",
            model.conv.filters.shape().to_vec(),
            model.conv.filters.iter().cloned().collect(),
        ),
        ("conv.biases", vec![model.conv.biases.len()], model.conv.biases.clone()),
        (
            "fc_hidden.weights",
            model.fc_hidden.weights.shape().to_vec(),
            model.fc_hidden.weights.iter().cloned().collect(),
        ),
        (
            "fc_hidden.biases",
            vec![model.fc_hidden.biases.len()],
            model.fc_hidden.biases.clone(),
        ),
        (
            "fc_out.weights",
            model.fc_out.weights.shape().to_vec(),
            model.fc_out.weights.iter().cloned().collect(),
        ),
        (
            "fc_out.biases",
            vec![model.fc_out.biases.len()],
            model.fc_out.biases.clone(),
        ),
        ("norm.mean", vec![model.norm.mean.len()], model.norm.mean.clone()),
        ("norm.std", vec![model.norm.std.len()], model.norm.std.clone()),
    ]
}

/// Encodes the model into the container byte format.
pub fn serialize_model(model: &ClassifierModel) -> Vec<u8> {
    let table = tensor_table(model);
    let mut entries = Vec::with_capacity(table.len());
    let mut offset = 0usize;
    for (name, shape, values) in &table {
        let len = values.len() * 8;
        entries.push(TensorEntry {
            name: (*name).to_string(),
            shape: shape.clone(),
            offset,
            len,
        });
        offset += len;
    }
    let manifest = Manifest {
        version: VERSION,
        dims: Dims {
            channels: model.num_channels(),
            window: model.window_len(),
            conv_depth: model.conv.depth(),
            hidden: model.fc_hidden.weights.nrows(),
            classes: model.num_classes(),
        },
        hyperparameters: model.hyper.clone(),
        class_order: model.class_order.clone(),
        per_class_eigvals: model.csp.per_class_eigvals.clone(),
        floored_channels: model.norm.floored_channels.clone(),
        tensors: entries,
    };
    let manifest_json = serde_json::to_vec(&manifest).expect("manifest serializes");

    let mut out = Vec::with_capacity(8 + manifest_json.len() + offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(manifest_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&manifest_json);
    for (_, _, values) in &table {
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn read_blob(data: &[u8], entry: &TensorEntry) -> Result<Vec<f64>> {
    let end = entry.offset.checked_add(entry.len);
    let available = data.len().saturating_sub(entry.offset.min(data.len()));
    match end {
        Some(e) if e <= data.len() && entry.len % 8 == 0 => {
            let bytes = &data[entry.offset..e];
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        }
        _ => Err(Error::BlobLengthMismatch {
            tensor: entry.name.clone(),
            expected: entry.len,
            got: available,
        }),
    }
}

struct TensorReader<'a> {
    manifest: &'a Manifest,
    data: &'a [u8],
}

impl TensorReader<'_> {
    fn take(&self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let entry = self
            .manifest
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::MissingTensor { name: name.to_string() })?;
        let expected = shape.iter().product::<usize>() * 8;
        if entry.len != expected || entry.shape != shape {
            return Err(Error::BlobLengthMismatch {
                tensor: name.to_string(),
                expected,
                got: entry.len,
            });
        }
        read_blob(self.data, entry)
    }

    fn take2(&self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let v = self.take(name, &[rows, cols])?;
        Ok(Array2::from_shape_vec((rows, cols), v).expect("checked shape"))
    }
}

/// Decodes a model from container bytes, validating magic, version,
/// manifest/blob consistency, and adjacency structure.
pub fn deserialize_model(bytes: &[u8]) -> Result<ClassifierModel> {
    if bytes.len() < 8 || &bytes[0..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let manifest_len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let manifest_end = 8 + manifest_len;
    if bytes.len() < manifest_end {
        return Err(Error::TruncatedPayload {
            expected: manifest_end,
            got: bytes.len(),
        });
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[8..manifest_end])?;
    if manifest.version != VERSION {
        return Err(Error::UnsupportedVersion { got: manifest.version });
    }
    let dims = &manifest.dims;
    let m = dims.channels;
    let flat = m * dims.window * dims.conv_depth;
    let r = TensorReader {
        manifest: &manifest,
        data: &bytes[manifest_end..],
    };

    let w = r.take2("csp.w", m, m)?;
    let adjacency = Adjacency::new(r.take2("adjacency", m, m)?)?;
    let filters = Array3::from_shape_vec(
        (dims.conv_depth, 2, 2),
        r.take("conv.filters", &[dims.conv_depth, 2, 2])?,
    )
    .expect("checked shape");
    let conv_biases = r.take("conv.biases", &[dims.conv_depth])?;
    let fc_hidden = DenseLayer {
        weights: r.take2("fc_hidden.weights", dims.hidden, flat)?,
        biases: r.take("fc_hidden.biases", &[dims.hidden])?,
        activation: Activation::Tanh,
    };
    let fc_out = DenseLayer {
        weights: r.take2("fc_out.weights", dims.classes, dims.hidden)?,
        biases: r.take("fc_out.biases", &[dims.classes])?,
        activation: Activation::Softmax,
    };
    let mean = r.take("norm.mean", &[m])?;
    let std = r.take("norm.std", &[m])?;

    Ok(ClassifierModel {
        csp: CspModel {
            w,
            class_order: manifest.class_order.clone(),
            per_class_eigvals: manifest.per_class_eigvals,
            num_channels: m,
        },
        adjacency,
        conv: ConvLayer {
            filters,
            biases: conv_biases,
        },
        fc_hidden,
        fc_out,
        norm: NormStats {
            mean,
            std,
            floored_channels: manifest.floored_channels,
        },
        hyper: manifest.hyperparameters,
        class_order: manifest.class_order,
    })
}

pub fn write_model(path: &Path, model: &ClassifierModel) -> Result<()> {
    fs::write(path, serialize_model(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ClassifierModel> {
    deserialize_model(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::project_adjacency;
    use crate::rng::SplitMix64;

    fn sample_model() -> ClassifierModel {
        let mut rng = SplitMix64::new(42);
        let m = 3;
        let csp = CspModel {
            w: Array2::from_shape_fn((m, m), |_| rng.next_gaussian()),
            class_order: vec![1, 2],
            per_class_eigvals: vec![vec![0.9, 0.3, 0.1], vec![0.8, 0.4, 0.2]],
            num_channels: m,
        };
        let norm = NormStats {
            mean: vec![0.1, -0.2, 0.3],
            std: vec![1.0, 2.0, 0.5],
            floored_channels: vec![2],
        };
        let config = TrainConfig {
            conv_depth: 2,
            hidden: 5,
            ..TrainConfig::default()
        };
        let mut model = super::super::init_model(csp, norm, &config, 4, 2, &mut rng);
        let raw = Array2::from_shape_fn((m, m), |_| rng.next_gaussian());
        model.adjacency = project_adjacency(&raw);
        model
    }

    fn bits(v: &[f64]) -> Vec<u64> {
        v.iter().map(|x| x.to_bits()).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let model = sample_model();
        let bytes = serialize_model(&model);
        let back = deserialize_model(&bytes).unwrap();

        let pairs: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (model.csp.w.iter().cloned().collect(), back.csp.w.iter().cloned().collect()),
            (
                model.adjacency.entries().iter().cloned().collect(),
                back.adjacency.entries().iter().cloned().collect(),
            ),
            (
                model.conv.filters.iter().cloned().collect(),
                back.conv.filters.iter().cloned().collect(),
            ),
            (model.conv.biases.clone(), back.conv.biases.clone()),
            (
                model.fc_hidden.weights.iter().cloned().collect(),
                back.fc_hidden.weights.iter().cloned().collect(),
            ),
            (model.fc_hidden.biases.clone(), back.fc_hidden.biases.clone()),
            (
                model.fc_out.weights.iter().cloned().collect(),
                back.fc_out.weights.iter().cloned().collect(),
            ),
            (model.fc_out.biases.clone(), back.fc_out.biases.clone()),
            (model.norm.mean.clone(), back.norm.mean.clone()),
            (model.norm.std.clone(), back.norm.std.clone()),
        ];
        for (a, b) in pairs {
            assert_eq!(bits(&a), bits(&b));
        }
        assert_eq!(model.hyper, back.hyper);
        assert_eq!(model.class_order, back.class_order);
        assert_eq!(model.csp.per_class_eigvals, back.csp.per_class_eigvals);
        assert_eq!(model.norm.floored_channels, back.norm.floored_channels);
        assert_eq!(model.window_len(), back.window_len());
    }

    #[test]
    fn round_trip_through_a_file() {
        let model = sample_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(
            bits(&model.fc_hidden.weights.iter().cloned().collect::<Vec<_>>()),
            bits(&back.fc_hidden.weights.iter().cloned().collect::<Vec<_>>())
        );
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let mut bytes = serialize_model(&sample_model());
        bytes[0] = b'X';
        assert!(matches!(deserialize_model(&bytes), Err(Error::BadMagic)));
        assert!(matches!(deserialize_model(&[]), Err(Error::BadMagic)));
    }

    #[test]
    fn truncated_blob_names_the_tensor() {
        let bytes = serialize_model(&sample_model());
        // Drop the tail; "norm.std" is the last blob in the container.
        let cut = &bytes[..bytes.len() - 4];
        match deserialize_model(cut) {
            Err(Error::BlobLengthMismatch { tensor, .. }) => assert_eq!(tensor, "norm.std"),
            other => panic!("expected blob mismatch, got {other:?}"),
        }
    }

    #[test]
    fn future_version_is_rejected() {
        let model = sample_model();
        let bytes = serialize_model(&model);
        let manifest_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let mut manifest: Manifest = serde_json::from_slice(&bytes[8..8 + manifest_len]).unwrap();
        manifest.version = 9;
        let mj = serde_json::to_vec(&manifest).unwrap();
        let mut patched = Vec::new();
        patched.extend_from_slice(MAGIC);
        patched.extend_from_slice(&(mj.len() as u32).to_le_bytes());
        patched.extend_from_slice(&mj);
        patched.extend_from_slice(&bytes[8 + manifest_len..]);
        assert!(matches!(
            deserialize_model(&patched),
            Err(Error::UnsupportedVersion { got: 9 })
        ));
    }

    #[test]
    fn missing_tensor_is_reported_by_name() {
        let model = sample_model();
        let bytes = serialize_model(&model);
        let manifest_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let mut manifest: Manifest = serde_json::from_slice(&bytes[8..8 + manifest_len]).unwrap();
        manifest.tensors.retain(|t| t.name != "adjacency");
        let mj = serde_json::to_vec(&manifest).unwrap();
        let mut patched = Vec::new();
        patched.extend_from_slice(MAGIC);
        patched.extend_from_slice(&(mj.len() as u32).to_le_bytes());
        patched.extend_from_slice(&mj);
        patched.extend_from_slice(&bytes[8 + manifest_len..]);
        match deserialize_model(&patched) {
            Err(Error::MissingTensor { name }) => assert_eq!(name, "adjacency"),
            other => panic!("expected missing tensor, got {other:?}"),
        }
    }

    #[test]
    fn predictions_survive_the_round_trip() {
        let model = sample_model();
        let mut rng = SplitMix64::new(7);
        let data = Array2::from_shape_fn((3, 4), |_| rng.next_gaussian());
        let back = deserialize_model(&serialize_model(&model)).unwrap();
        let p1 = model.predict_raw(&data).unwrap();
        let p2 = back.predict_raw(&data).unwrap();
        assert_eq!(bits(&p1.to_vec()), bits(&p2.to_vec()));
    }
}
