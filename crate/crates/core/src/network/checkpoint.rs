//! Model checkpoints: a directory of `BIMX` tensors plus a JSON manifest
//! with sha256 digests, verified on load.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inception::InceptionParams;
use crate::mat::Mat;
use crate::superpixel::FeatureKind;

use super::{Activation, DenseLayer, NetLayer, ParamGroup, ToyNet, TrainConfig};

const MANIFEST_NAME: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CheckpointManifest {
    format_version: u32,
    num_classes: usize,
    train_config: TrainConfig,
    layers: Vec<LayerManifest>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LayerManifest {
    Dense {
        group: ParamGroup,
        activation: Activation,
        in_channels: usize,
        out_channels: usize,
        files: BTreeMap<String, String>,
        sha256: BTreeMap<String, String>,
    },
    Inception {
        feature_kind: FeatureKind,
        #[serde(rename = "H")]
        h: usize,
        #[serde(rename = "D")]
        d: usize,
        #[serde(rename = "C")]
        c: usize,
        rho: Vec<f64>,
        files: BTreeMap<String, String>,
        sha256: BTreeMap<String, String>,
    },
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_tensor(
    dir: &Path,
    name: String,
    mat: &Mat,
    files: &mut BTreeMap<String, String>,
    digests: &mut BTreeMap<String, String>,
    key: &str,
) -> Result<()> {
    let path = dir.join(&name);
    mat.write_bimx(&path)?;
    digests.insert(key.to_string(), file_sha256(&path)?);
    files.insert(key.to_string(), name);
    Ok(())
}

/// Writes `manifest.json` plus one tensor file per parameter into `dir`
/// (created if needed).
pub fn save_checkpoint(dir: impl AsRef<Path>, net: &ToyNet, config: &TrainConfig) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::with_capacity(net.layers.len());
    for (idx, layer) in net.layers.iter().enumerate() {
        let mut files = BTreeMap::new();
        let mut digests = BTreeMap::new();
        match layer {
            NetLayer::Dense { layer, group } => {
                write_tensor(dir, format!("layer{idx}_w.bimx"), &layer.w, &mut files, &mut digests, "w")?;
                let b = Mat::from_vec(1, layer.b.len(), layer.b.clone());
                write_tensor(dir, format!("layer{idx}_b.bimx"), &b, &mut files, &mut digests, "b")?;
                layers.push(LayerManifest::Dense {
                    group: *group,
                    activation: layer.activation,
                    in_channels: layer.c_in(),
                    out_channels: layer.c_out(),
                    files,
                    sha256: digests,
                });
            }
            NetLayer::Bi { params, kind } => {
                write_tensor(
                    dir,
                    format!("layer{idx}_lambda.bimx"),
                    &params.lambda,
                    &mut files,
                    &mut digests,
                    "lambda",
                )?;
                write_tensor(
                    dir,
                    format!("layer{idx}_weights.bimx"),
                    &params.weights,
                    &mut files,
                    &mut digests,
                    "weights",
                )?;
                layers.push(LayerManifest::Inception {
                    feature_kind: *kind,
                    h: params.scale_count(),
                    d: params.feature_dims(),
                    c: params.channels(),
                    rho: params.rho.clone(),
                    files,
                    sha256: digests,
                });
            }
        }
    }
    let manifest = CheckpointManifest {
        format_version: FORMAT_VERSION,
        num_classes: net.num_classes,
        train_config: config.clone(),
        layers,
    };
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format(&path, e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

fn read_tensor(
    dir: &Path,
    files: &BTreeMap<String, String>,
    digests: &BTreeMap<String, String>,
    key: &str,
) -> Result<Mat> {
    let name = files
        .get(key)
        .ok_or_else(|| Error::format(dir.join(MANIFEST_NAME), format!("missing tensor entry {key}")))?;
    let path = dir.join(name);
    let expected = digests
        .get(key)
        .ok_or_else(|| Error::format(dir.join(MANIFEST_NAME), format!("missing digest for {key}")))?;
    let actual = file_sha256(&path)?;
    if &actual != expected {
        return Err(Error::Checksum(name.clone()));
    }
    Mat::read_bimx(&path)
}

/// Loads a checkpoint written by [`save_checkpoint`], verifying every
/// tensor's digest.
pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<(ToyNet, TrainConfig)> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: CheckpointManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&manifest_path, e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::format(
            &manifest_path,
            format!("unsupported checkpoint version {}", manifest.format_version),
        ));
    }
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for layer in &manifest.layers {
        match layer {
            LayerManifest::Dense { group, activation, in_channels, out_channels, files, sha256 } => {
                let w = read_tensor(dir, files, sha256, "w")?;
                let b = read_tensor(dir, files, sha256, "b")?;
                if w.rows() != *out_channels || w.cols() != *in_channels || b.data().len() != *out_channels {
                    return Err(Error::format(&manifest_path, "dense tensor shapes disagree"));
                }
                layers.push(NetLayer::Dense {
                    layer: DenseLayer {
                        w,
                        b: b.data().to_vec(),
                        activation: *activation,
                    },
                    group: *group,
                });
            }
            LayerManifest::Inception { feature_kind, h, d, c, rho, files, sha256 } => {
                let lambda = read_tensor(dir, files, sha256, "lambda")?;
                let weights = read_tensor(dir, files, sha256, "weights")?;
                if rho.len() != *h
                    || lambda.rows() != *d
                    || lambda.cols() != *d
                    || weights.rows() != *h
                    || weights.cols() != *c
                {
                    return Err(Error::format(&manifest_path, "module tensor shapes disagree"));
                }
                layers.push(NetLayer::Bi {
                    params: InceptionParams { rho: rho.clone(), lambda, weights },
                    kind: *feature_kind,
                });
            }
        }
    }
    Ok((ToyNet { layers, num_classes: manifest.num_classes }, manifest.train_config))
}
