//! Trainable head around the filtering modules: per-point dense layers,
//! size-weighted softmax cross-entropy, Adam, a configurable toy network,
//! gradient checking, and a synthetic dataset generator.

mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod synthetic;
mod train;

pub use adam::AdamState;
pub use train::{
    evaluate, predict_label_map, predict_segments, prepare_instance, train_toy, EpochMetrics,
    EvalResult, InceptionConfig, LayerSpec, ParamGroup, Regime, SpInstance, SuperpixelConfig,
    TrainConfig, TrainOutcome,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inception::{self, InceptionCache, InceptionParams};
use crate::mat::Mat;
use crate::superpixel::FeatureKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    Relu,
}

/// Per-point linear map (a 1x1 convolution over points): `out = z W^T + b`,
/// then the activation.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// Cout×Cin weights.
    pub w: Mat,
    pub b: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Uniform init in `±sqrt(6 / (c_in + c_out))`, zero bias.
    pub fn new_seeded(c_in: usize, c_out: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (c_in + c_out) as f64).sqrt();
        let w = Mat::from_fn(c_out, c_in, |_, _| rng.gen_range(-bound..=bound));
        DenseLayer { w, b: vec![0.0; c_out], activation }
    }

    pub fn c_in(&self) -> usize {
        self.w.cols()
    }

    pub fn c_out(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, z: &Mat) -> Result<Mat> {
        Ok(self.forward_cached(z)?.0)
    }

    /// Returns `(out, pre)` where `pre` is the value before the activation.
    pub fn forward_cached(&self, z: &Mat) -> Result<(Mat, Mat)> {
        if z.cols() != self.c_in() {
            return Err(Error::invalid(format!(
                "signal has {} channels, layer expects {}",
                z.cols(),
                self.c_in()
            )));
        }
        let mut pre = z.mul_bt(&self.w);
        for i in 0..pre.rows() {
            for (v, &b) in pre.row_mut(i).iter_mut().zip(&self.b) {
                *v += b;
            }
        }
        let out = match self.activation {
            Activation::None => pre.clone(),
            Activation::Relu => {
                let mut out = pre.clone();
                for v in out.data_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                out
            }
        };
        Ok((out, pre))
    }

    /// Gradients from the upstream `d_out`: `(d_w, d_b, d_input)`.
    pub fn backward(&self, input: &Mat, pre: &Mat, d_out: &Mat) -> (Mat, Vec<f64>, Mat) {
        let mut d_pre = d_out.clone();
        if self.activation == Activation::Relu {
            for (g, &p) in d_pre.data_mut().iter_mut().zip(pre.data()) {
                if p <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        let d_w = d_pre.mul_at(input); // Cout×Cin
        let mut d_b = vec![0.0; self.c_out()];
        for i in 0..d_pre.rows() {
            for (acc, &g) in d_b.iter_mut().zip(d_pre.row(i)) {
                *acc += g;
            }
        }
        let d_input = d_pre.mul(&self.w);
        (d_w, d_b, d_input)
    }
}

/// Size-weighted softmax cross-entropy over points.
///
/// `loss = sum_i w_i * (-log softmax(logits_i)[t_i]) / sum_i w_i`, with the
/// exact gradient in the second return value. Weighting each point by its
/// pixel count makes the point-level loss track the pixel-level one.
pub fn softmax_xent(logits: &Mat, targets: &[usize], weights: &[f64]) -> Result<(f64, Mat)> {
    let (p, c) = (logits.rows(), logits.cols());
    if targets.len() != p || weights.len() != p {
        return Err(Error::invalid(format!(
            "{} targets / {} weights for {p} rows",
            targets.len(),
            weights.len()
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= c) {
        return Err(Error::invalid(format!("target {bad} out of range for {c} classes")));
    }
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::invalid("point weights must be positive and finite"));
    }
    let total_weight: f64 = weights.iter().sum();
    let mut d_logits = Mat::zeros(p, c);
    let mut loss = 0.0;
    for i in 0..p {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &v in row {
            sum += (v - max).exp();
        }
        let lse = max + sum.ln();
        loss += weights[i] * (lse - row[targets[i]]);
        let scale = weights[i] / total_weight;
        let drow = d_logits.row_mut(i);
        for (k, &v) in row.iter().enumerate() {
            let prob = (v - lse).exp();
            drow[k] = scale * (prob - if k == targets[i] { 1.0 } else { 0.0 });
        }
    }
    Ok((loss / total_weight, d_logits))
}

/// One stage of the toy network.
#[derive(Clone, Debug)]
pub enum NetLayer {
    Dense { layer: DenseLayer, group: ParamGroup },
    Bi { params: InceptionParams, kind: FeatureKind },
}

/// A stack of dense layers with filtering modules in between, applied to
/// per-segment features.
#[derive(Clone, Debug)]
pub struct ToyNet {
    pub layers: Vec<NetLayer>,
    pub num_classes: usize,
}

/// Per-layer forward state kept for the backward pass.
pub enum LayerCache {
    Dense { input: Mat, pre: Mat },
    Bi { input: Mat, cache: InceptionCache },
    Bypassed,
}

/// Gradients mirroring the tensors of one layer.
#[derive(Clone, Debug)]
pub enum LayerGrads {
    Dense { d_w: Mat, d_b: Vec<f64> },
    Bi { d_rho: Vec<f64>, d_lambda: Mat, d_weights: Mat },
}

impl ToyNet {
    /// Runs the stack on per-segment input features. Filtering layers use the
    /// feature matrix matching their kind; with `bypass_bi` they pass the
    /// signal through unchanged (used while pre-training the dense stack).
    pub fn forward(
        &self,
        input: &Mat,
        feats_pos: &Mat,
        feats_poscol: &Mat,
        bypass_bi: bool,
    ) -> Result<(Mat, Vec<LayerCache>)> {
        let mut z = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            match layer {
                NetLayer::Dense { layer, .. } => {
                    let (out, pre) = layer.forward_cached(&z)?;
                    caches.push(LayerCache::Dense { input: z, pre });
                    z = out;
                }
                NetLayer::Bi { params, kind } => {
                    if bypass_bi {
                        caches.push(LayerCache::Bypassed);
                        continue;
                    }
                    let feats = match kind {
                        FeatureKind::Position => feats_pos,
                        FeatureKind::PositionColor => feats_poscol,
                    };
                    let (out, cache) = inception::forward(&z, feats, feats, params)?;
                    caches.push(LayerCache::Bi { input: z, cache });
                    z = out;
                }
            }
        }
        Ok((z, caches))
    }

    /// Backpropagates `d_out` through the cached forward pass; returns
    /// per-layer gradients (in layer order) and the input gradient.
    pub fn backward(
        &self,
        caches: &[LayerCache],
        feats_pos: &Mat,
        feats_poscol: &Mat,
        d_out: &Mat,
    ) -> Result<(Vec<LayerGrads>, Mat)> {
        if caches.len() != self.layers.len() {
            return Err(Error::invalid("cache does not match the layer stack"));
        }
        let mut grad = d_out.clone();
        let mut grads_rev = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(caches).rev() {
            match (layer, cache) {
                (NetLayer::Dense { layer, .. }, LayerCache::Dense { input, pre }) => {
                    let (d_w, d_b, d_in) = layer.backward(input, pre, &grad);
                    grads_rev.push(LayerGrads::Dense { d_w, d_b });
                    grad = d_in;
                }
                (NetLayer::Bi { params, kind }, LayerCache::Bi { input, cache }) => {
                    let feats = match kind {
                        FeatureKind::Position => feats_pos,
                        FeatureKind::PositionColor => feats_poscol,
                    };
                    let g = inception::backward(cache, input, feats, feats, params, &grad)?;
                    grads_rev.push(LayerGrads::Bi {
                        d_rho: g.d_rho,
                        d_lambda: g.d_lambda,
                        d_weights: g.d_weights,
                    });
                    grad = g.d_input;
                }
                (NetLayer::Bi { params, .. }, LayerCache::Bypassed) => {
                    // Pass-through layer: parameters receive zero gradient.
                    grads_rev.push(LayerGrads::Bi {
                        d_rho: vec![0.0; params.scale_count()],
                        d_lambda: Mat::zeros(params.feature_dims(), params.feature_dims()),
                        d_weights: Mat::zeros(params.weights.rows(), params.weights.cols()),
                    });
                }
                _ => return Err(Error::invalid("cache entry does not match its layer")),
            }
        }
        grads_rev.reverse();
        Ok((grads_rev, grad))
    }

    /// Flat mutable views of the trainable tensors selected by `mask`,
    /// in deterministic layer order.
    pub fn trainable_slices(&mut self, mask: &TrainMask) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                NetLayer::Dense { layer, group } => {
                    if mask.includes_dense(*group) {
                        out.push(layer.w.data_mut());
                        out.push(layer.b.as_mut_slice());
                    }
                }
                NetLayer::Bi { params, .. } => {
                    if mask.bi {
                        out.push(params.rho.as_mut_slice());
                        out.push(params.lambda.data_mut());
                        out.push(params.weights.data_mut());
                    }
                }
            }
        }
        out
    }

    /// Gradient views matching [`ToyNet::trainable_slices`].
    pub fn grad_slices<'g>(&self, grads: &'g [LayerGrads], mask: &TrainMask) -> Vec<&'g [f64]> {
        let mut out = Vec::new();
        for (layer, g) in self.layers.iter().zip(grads) {
            match (layer, g) {
                (NetLayer::Dense { group, .. }, LayerGrads::Dense { d_w, d_b }) => {
                    if mask.includes_dense(*group) {
                        out.push(d_w.data());
                        out.push(d_b.as_slice());
                    }
                }
                (NetLayer::Bi { .. }, LayerGrads::Bi { d_rho, d_lambda, d_weights }) => {
                    if mask.bi {
                        out.push(d_rho.as_slice());
                        out.push(d_lambda.data());
                        out.push(d_weights.data());
                    }
                }
                _ => unreachable!("gradients always mirror the layer stack"),
            }
        }
        out
    }
}

/// Which parameter tensors a training phase updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainMask {
    pub backbone: bool,
    pub fc: bool,
    pub bi: bool,
}

impl TrainMask {
    pub fn includes_dense(&self, group: ParamGroup) -> bool {
        match group {
            ParamGroup::Backbone => self.backbone,
            ParamGroup::Fc => self.fc,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_dense_layer_passes_through() {
        let layer = DenseLayer { w: Mat::identity(3), b: vec![0.0; 3], activation: Activation::None };
        let z = Mat::from_fn(4, 3, |r, c| (r * 3 + c) as f64 * 0.1 - 0.5);
        assert_eq!(layer.forward(&z).unwrap().data(), z.data());
    }

    #[test]
    fn zero_input_yields_bias_rows() {
        let layer = DenseLayer {
            w: Mat::zeros(2, 3),
            b: vec![0.5, -0.25],
            activation: Activation::None,
        };
        let out = layer.forward(&Mat::zeros(3, 3)).unwrap();
        for i in 0..3 {
            assert_eq!(out.row(i), &[0.5, -0.25]);
        }
        let relu = DenseLayer { activation: Activation::Relu, ..layer };
        let out = relu.forward(&Mat::zeros(3, 3)).unwrap();
        for i in 0..3 {
            assert_eq!(out.row(i), &[0.5, 0.0]);
        }
    }

    #[test]
    fn dense_matches_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let layer = DenseLayer::new_seeded(4, 3, Activation::None, &mut rng);
        let z = Mat::from_fn(5, 4, |_, _| rand::Rng::gen::<f64>(&mut rng) - 0.5);
        let out = layer.forward(&z).unwrap();
        for i in 0..5 {
            for o in 0..3 {
                let mut want = layer.b[o];
                for k in 0..4 {
                    want += z.get(i, k) * layer.w.get(o, k);
                }
                assert!((out.get(i, o) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_rejects_channel_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let layer = DenseLayer::new_seeded(4, 3, Activation::None, &mut rng);
        assert!(layer.forward(&Mat::zeros(5, 3)).is_err());
    }

    #[test]
    fn uniform_logits_cost_ln_c() {
        for c in [2usize, 3, 7] {
            let logits = Mat::zeros(4, c);
            let (loss, _) = softmax_xent(&logits, &[0; 4], &[1.0; 4]).unwrap();
            assert!((loss - (c as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_logits_cost_nothing() {
        let targets = [1usize, 0, 2];
        let logits = Mat::from_fn(3, 3, |r, c| if c == targets[r] { 50.0 } else { 0.0 });
        let (loss, _) = softmax_xent(&logits, &targets, &[2.0, 1.0, 3.0]).unwrap();
        assert!(loss < 1e-9);
    }

    #[test]
    fn xent_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let logits = Mat::from_fn(5, 3, |_, _| rand::Rng::gen::<f64>(&mut rng) * 2.0 - 1.0);
        let targets = [0usize, 2, 1, 1, 0];
        let weights = [1.0, 3.0, 2.0, 0.5, 4.0];
        let (_, d) = softmax_xent(&logits, &targets, &weights).unwrap();
        let eps = 1e-5;
        for r in 0..5 {
            for c in 0..3 {
                let mut lp = logits.clone();
                lp.set(r, c, logits.get(r, c) + eps);
                let mut lm = logits.clone();
                lm.set(r, c, logits.get(r, c) - eps);
                let (fp, _) = softmax_xent(&lp, &targets, &weights).unwrap();
                let (fm, _) = softmax_xent(&lm, &targets, &weights).unwrap();
                let numeric = (fp - fm) / (2.0 * eps);
                let analytic = d.get(r, c);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(rel < 1e-4);
            }
        }
    }

    #[test]
    fn xent_rejects_bad_inputs() {
        let logits = Mat::zeros(2, 3);
        assert!(softmax_xent(&logits, &[0, 3], &[1.0, 1.0]).is_err());
        assert!(softmax_xent(&logits, &[0], &[1.0, 1.0]).is_err());
        assert!(softmax_xent(&logits, &[0, 1], &[1.0, 0.0]).is_err());
        assert!(softmax_xent(&logits, &[0, 1], &[1.0, -2.0]).is_err());
    }
}
