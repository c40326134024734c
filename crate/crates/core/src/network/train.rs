//! Configuration-driven training of the toy segmentation network.
//!
//! Each image is superpixelized once up front; its per-segment mean features
//! are both the network input and the filtering features. Training runs two
//! phases: a warmup that trains the dense stack with filtering layers
//! bypassed (standing in for a pre-trained base network), then the main
//! phase that enables the filtering layers and updates the parameter subset
//! selected by the regime.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{self, Image, LabelMap};
use crate::mat::Mat;
use crate::superpixel::{self, FeatureKind, SuperpixelPartition};

use super::{
    softmax_xent, Activation, AdamState, DenseLayer, NetLayer, ToyNet, TrainMask,
};

/// Which parameter subset the main phase updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Only the filtering modules.
    #[serde(rename = "BI")]
    Bi,
    /// Filtering modules plus dense layers in the `fc` group.
    #[serde(rename = "BI+FC")]
    BiFc,
    /// Every parameter tensor.
    #[serde(rename = "FULL")]
    Full,
}

impl Regime {
    pub fn mask(self) -> TrainMask {
        match self {
            Regime::Bi => TrainMask { backbone: false, fc: false, bi: true },
            Regime::BiFc => TrainMask { backbone: false, fc: true, bi: true },
            Regime::Full => TrainMask { backbone: true, fc: true, bi: true },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    Backbone,
    Fc,
}

/// One entry of the configured layer stack. A `bi` marker expands into one
/// filtering module per configured feature kind, in order.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { out: usize, activation: Activation, group: ParamGroup },
    Bi,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuperpixelConfig {
    pub count: usize,
    #[serde(default = "default_compactness")]
    pub compactness: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn default_compactness() -> f64 {
    10.0
}

fn default_iterations() -> usize {
    10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InceptionConfig {
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "featureKinds")]
    pub feature_kinds: Vec<FeatureKind>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    /// Epochs spent training the dense stack with filtering bypassed before
    /// the regime phase starts.
    #[serde(default)]
    pub warmup_epochs: usize,
    pub lr: f64,
    pub regime: Regime,
    pub layers: Vec<LayerSpec>,
    pub superpixels: SuperpixelConfig,
    pub inception: InceptionConfig,
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad config: {e}")))
    }

    /// The class count implied by the final dense layer.
    pub fn num_classes(&self) -> Result<usize> {
        match self.layers.last() {
            Some(LayerSpec::Dense { out, .. }) => Ok(*out),
            _ => Err(Error::invalid("layer stack must end with a dense classifier")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.superpixels.count == 0 {
            return Err(Error::invalid("superpixel count must be positive"));
        }
        if self.inception.h == 0 {
            return Err(Error::invalid("scale count must be at least 1"));
        }
        if self.inception.feature_kinds.is_empty()
            && self.layers.iter().any(|l| matches!(l, LayerSpec::Bi))
        {
            return Err(Error::invalid("bi layers configured without feature kinds"));
        }
        self.num_classes()?;
        Ok(())
    }

    /// Builds the network with seeded initialization.
    pub fn build_net(&self) -> Result<ToyNet> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut channels = FeatureKind::PositionColor.dims();
        let mut layers = Vec::new();
        for spec in &self.layers {
            match spec {
                LayerSpec::Dense { out, activation, group } => {
                    layers.push(NetLayer::Dense {
                        layer: DenseLayer::new_seeded(channels, *out, *activation, &mut rng),
                        group: *group,
                    });
                    channels = *out;
                }
                LayerSpec::Bi => {
                    for kind in &self.inception.feature_kinds {
                        layers.push(NetLayer::Bi {
                            params: crate::inception::init_params(
                                self.inception.h,
                                kind.dims(),
                                channels,
                            ),
                            kind: *kind,
                        });
                    }
                }
            }
        }
        Ok(ToyNet { layers, num_classes: self.num_classes()? })
    }
}

/// A superpixelized training/evaluation example.
#[derive(Clone, Debug)]
pub struct SpInstance {
    pub part: SuperpixelPartition,
    pub feats_pos: Mat,
    pub feats_poscol: Mat,
    /// Majority ground-truth class per segment.
    pub targets: Vec<usize>,
    /// Per-segment pixel counts, used as loss weights.
    pub sp_weights: Vec<f64>,
    pub gt: LabelMap,
}

pub fn prepare_instance(img: &Image, gt: &LabelMap, sp: &SuperpixelConfig) -> Result<SpInstance> {
    if img.width() != gt.width() || img.height() != gt.height() {
        return Err(Error::invalid("image and ground truth dimensions differ"));
    }
    let part = superpixel::slic(img, sp.count, sp.compactness, sp.iterations)?;
    let feats_pos = superpixel::mean_features(img, &part, FeatureKind::Position)?;
    let feats_poscol = superpixel::mean_features(img, &part, FeatureKind::PositionColor)?;
    let targets = superpixel::majority_labels(&part, gt)?
        .iter()
        .map(|&t| t as usize)
        .collect();
    let sp_weights = part.sizes().iter().map(|&s| s as f64).collect();
    Ok(SpInstance { part, feats_pos, feats_poscol, targets, sp_weights, gt: gt.clone() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub mean_iou: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub net: ToyNet,
    pub metrics: Vec<EpochMetrics>,
}

#[derive(Clone, Debug)]
pub struct EvalResult {
    pub per_image: Vec<f64>,
    pub mean_iou: f64,
}

/// Segment-level class predictions for one instance.
pub fn predict_segments(net: &ToyNet, inst: &SpInstance) -> Result<Vec<u16>> {
    let (logits, _) =
        net.forward(&inst.feats_poscol, &inst.feats_pos, &inst.feats_poscol, false)?;
    Ok(argmax_rows(&logits))
}

fn argmax_rows(logits: &Mat) -> Vec<u16> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0usize;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best as u16
        })
        .collect()
}

/// Full-resolution prediction: per-segment argmax projected to pixels.
pub fn predict_label_map(net: &ToyNet, inst: &SpInstance) -> Result<LabelMap> {
    let seg_labels = predict_segments(net, inst)?;
    superpixel::project_labels(&inst.part, &seg_labels, net.num_classes)
}

/// Mean-IoU evaluation over instances; per-image scores average IoU across
/// the classes present in that image's ground truth.
pub fn evaluate(net: &ToyNet, instances: &[SpInstance]) -> Result<EvalResult> {
    let mut per_image = Vec::with_capacity(instances.len());
    for inst in instances {
        let pred = predict_label_map(net, inst)?;
        per_image.push(image::mean_iou(&pred, &inst.gt)?);
    }
    if per_image.is_empty() {
        return Err(Error::invalid("no instances to evaluate"));
    }
    let mean_iou = per_image.iter().sum::<f64>() / per_image.len() as f64;
    Ok(EvalResult { per_image, mean_iou })
}

/// Trains from scratch on `dataset` and returns the network plus per-epoch
/// metrics. Deterministic for a fixed config.
///
/// Metric rows cover warmup and main epochs with a continuous epoch index.
/// The loss column is the mean per-image training loss seen during the
/// epoch; the IoU column always evaluates the full network (filtering
/// enabled) so the final row matches a later evaluation of the trained net.
pub fn train_toy(config: &TrainConfig, dataset: &[(Image, LabelMap)]) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let num_classes = config.num_classes()?;
    let mut instances = Vec::with_capacity(dataset.len());
    for (img, gt) in dataset {
        if gt.num_classes() > num_classes {
            return Err(Error::invalid(format!(
                "dataset has {} classes, classifier emits {num_classes}",
                gt.num_classes()
            )));
        }
        instances.push(prepare_instance(img, gt, &config.superpixels)?);
    }

    let mut net = config.build_net()?;
    let mut metrics = Vec::with_capacity(config.warmup_epochs + config.epochs);

    let warmup_mask = TrainMask { backbone: true, fc: true, bi: false };
    run_phase(
        &mut net,
        &instances,
        config,
        warmup_mask,
        true,
        config.warmup_epochs,
        0,
        &mut metrics,
    )?;
    run_phase(
        &mut net,
        &instances,
        config,
        config.regime.mask(),
        false,
        config.epochs,
        config.warmup_epochs,
        &mut metrics,
    )?;

    Ok(TrainOutcome { net, metrics })
}

#[allow(clippy::too_many_arguments)]
fn run_phase(
    net: &mut ToyNet,
    instances: &[SpInstance],
    config: &TrainConfig,
    mask: TrainMask,
    bypass_bi: bool,
    epochs: usize,
    epoch_offset: usize,
    metrics: &mut Vec<EpochMetrics>,
) -> Result<()> {
    if epochs == 0 {
        return Ok(());
    }
    let sizes: Vec<usize> = net
        .trainable_slices(&mask)
        .iter()
        .map(|s| s.len())
        .collect();
    let mut adam = AdamState::new(config.lr, &sizes);
    for epoch in 0..epochs {
        let mut loss_sum = 0.0;
        for inst in instances {
            let (logits, caches) =
                net.forward(&inst.feats_poscol, &inst.feats_pos, &inst.feats_poscol, bypass_bi)?;
            let (loss, d_logits) = softmax_xent(&logits, &inst.targets, &inst.sp_weights)?;
            loss_sum += loss;
            if sizes.is_empty() {
                continue;
            }
            let (grads, _) =
                net.backward(&caches, &inst.feats_pos, &inst.feats_poscol, &d_logits)?;
            let grad_slices = net.grad_slices(&grads, &mask);
            let mut param_slices = net.trainable_slices(&mask);
            adam.step(&mut param_slices, &grad_slices)?;
        }
        let eval = evaluate(net, instances)?;
        metrics.push(EpochMetrics {
            epoch: epoch_offset + epoch + 1,
            loss: loss_sum / instances.len() as f64,
            mean_iou: eval.mean_iou,
        });
    }
    Ok(())
}
