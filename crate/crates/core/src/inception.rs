//! Multi-scale bilateral filtering: H kernels over one shared feature
//! transform, combined per channel by learned weights.
//!
//! All scales reuse a single pairwise-distance matrix. Scales are stored as
//! unconstrained `rho` with `theta = exp(rho)` so positivity survives
//! gradient steps without projection.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bilateral::{self, BilateralKernel};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Learnable parameters of one module: H scales, a D×D feature transform
/// shared by every scale, and per-(scale, channel) combination weights.
#[derive(Clone, Debug, PartialEq)]
pub struct InceptionParams {
    /// Unconstrained log-scales; the h-th kernel uses `exp(rho[h])`.
    pub rho: Vec<f64>,
    /// D×D feature transform.
    pub lambda: Mat,
    /// H×C combination weights.
    pub weights: Mat,
}

impl InceptionParams {
    pub fn scale_count(&self) -> usize {
        self.rho.len()
    }

    pub fn feature_dims(&self) -> usize {
        self.lambda.rows()
    }

    pub fn channels(&self) -> usize {
        self.weights.cols()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.rho.iter().map(|&r| r.exp()).collect()
    }
}

/// Kernel scales start on a fixed well-separated ladder:
/// 1, 0.7, 0.3, 0.1, then each further value is 0.3x the previous one.
fn theta_ladder(h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(h);
    for i in 0..h {
        let v = match i {
            0 => 1.0,
            1 => 0.7,
            2 => 0.3,
            3 => 0.1,
            _ => out[i - 1] * 0.3,
        };
        out.push(v);
    }
    out
}

/// Fresh parameters: the scale ladder above, identity transform, and uniform
/// weights `1/H` so the module starts as an unweighted multi-scale average.
pub fn init_params(h: usize, d: usize, c: usize) -> InceptionParams {
    assert!(h >= 1, "need at least one scale");
    InceptionParams {
        rho: theta_ladder(h).iter().map(|t| t.ln()).collect(),
        lambda: Mat::identity(d),
        weights: Mat::from_fn(h, c, |_, _| 1.0 / h as f64),
    }
}

/// Everything the backward pass needs from a forward evaluation.
#[derive(Clone, Debug)]
pub struct InceptionCache {
    pub sq_dists: Arc<Mat>,
    pub kernels: Vec<BilateralKernel>,
    pub scale_outputs: Vec<Mat>,
}

/// Gradients for every parameter block plus the module input.
#[derive(Clone, Debug)]
pub struct InceptionGradients {
    pub d_input: Mat,
    pub d_rho: Vec<f64>,
    pub d_lambda: Mat,
    pub d_weights: Mat,
}

fn validate_shapes(z: &Mat, f_in: &Mat, f_out: &Mat, params: &InceptionParams) -> Result<()> {
    let d = params.feature_dims();
    if f_in.cols() != d || f_out.cols() != d {
        return Err(Error::invalid(format!(
            "features have {} / {} dims, transform expects {d}",
            f_in.cols(),
            f_out.cols()
        )));
    }
    if z.rows() != f_in.rows() {
        return Err(Error::invalid(format!(
            "signal has {} rows, input features have {}",
            z.rows(),
            f_in.rows()
        )));
    }
    if params.weights.rows() != params.scale_count() || params.weights.cols() != z.cols() {
        return Err(Error::invalid(format!(
            "weights are {}x{}, expected {}x{}",
            params.weights.rows(),
            params.weights.cols(),
            params.scale_count(),
            z.cols()
        )));
    }
    // Degenerate scales (NaN/inf rho) are caught by kernel construction.
    Ok(())
}

/// Filters `z` (P×C) at every scale and combines the results per channel:
/// `out[i][c] = sum_h weights[h][c] * (K_h z)[i][c]` (Q×C). Pairwise
/// distances are computed once and shared across scales.
pub fn forward(
    z: &Mat,
    f_in: &Mat,
    f_out: &Mat,
    params: &InceptionParams,
) -> Result<(Mat, InceptionCache)> {
    validate_shapes(z, f_in, f_out, params)?;
    let sq_dists = Arc::new(bilateral::pairwise_sq_dists(f_out, f_in, &params.lambda)?);
    let q = f_out.rows();
    let c = z.cols();
    let mut out = Mat::zeros(q, c);
    let mut kernels = Vec::with_capacity(params.scale_count());
    let mut scale_outputs = Vec::with_capacity(params.scale_count());
    for (h, theta) in params.thetas().into_iter().enumerate() {
        let kernel = bilateral::build_kernel(sq_dists.clone(), theta)?;
        let zh = bilateral::filter_forward(&kernel, z)?;
        let wrow = params.weights.row(h);
        for i in 0..q {
            let orow = out.row_mut(i);
            let zrow = zh.row(i);
            for cc in 0..c {
                orow[cc] += wrow[cc] * zrow[cc];
            }
        }
        kernels.push(kernel);
        scale_outputs.push(zh);
    }
    Ok((out, InceptionCache { sq_dists, kernels, scale_outputs }))
}

/// Backward pass matching [`forward`]: weight gradients come straight from
/// the cached per-scale outputs; each scale's upstream gradient is the
/// weighted `d_out`, pushed through the bilateral backward pass, and
/// `d_rho[h] = d_theta[h] * theta[h]` chains through the exponential.
pub fn backward(
    cache: &InceptionCache,
    z: &Mat,
    f_in: &Mat,
    f_out: &Mat,
    params: &InceptionParams,
    d_out: &Mat,
) -> Result<InceptionGradients> {
    validate_shapes(z, f_in, f_out, params)?;
    let h_count = params.scale_count();
    if cache.kernels.len() != h_count || cache.scale_outputs.len() != h_count {
        return Err(Error::invalid("cache does not match parameter scale count"));
    }
    let q = f_out.rows();
    let c = z.cols();
    if d_out.rows() != q || d_out.cols() != c {
        return Err(Error::invalid(format!(
            "upstream gradient is {}x{}, expected {q}x{c}",
            d_out.rows(),
            d_out.cols()
        )));
    }

    let d = params.feature_dims();
    let mut d_input = Mat::zeros(z.rows(), c);
    let mut d_lambda = Mat::zeros(d, d);
    let mut d_rho = vec![0.0; h_count];
    let mut d_weights = Mat::zeros(h_count, c);
    let thetas = params.thetas();

    for h in 0..h_count {
        let zh = &cache.scale_outputs[h];
        if zh.rows() != q || zh.cols() != c || cache.kernels[h].k.cols() != z.rows() {
            return Err(Error::invalid("cached scale outputs do not match the inputs"));
        }
        let dw = d_weights.row_mut(h);
        for i in 0..q {
            let drow = d_out.row(i);
            let zrow = zh.row(i);
            for cc in 0..c {
                dw[cc] += drow[cc] * zrow[cc];
            }
        }
        let wrow = params.weights.row(h);
        let d_out_h = Mat::from_fn(q, c, |i, cc| wrow[cc] * d_out.get(i, cc));
        let g = bilateral::filter_backward(&cache.kernels[h], f_out, f_in, &params.lambda, z, &d_out_h)?;
        d_input.add_assign(&g.d_input);
        d_lambda.add_assign(&g.d_lambda);
        d_rho[h] = g.d_theta * thetas[h];
    }

    Ok(InceptionGradients { d_input, d_rho, d_lambda, d_weights })
}

/// Two modules applied in sequence over the same partition: the first filters
/// with position features, the second with position+color features.
pub fn pair_forward(
    z: &Mat,
    position_feats: &Mat,
    position_color_feats: &Mat,
    position_params: &InceptionParams,
    position_color_params: &InceptionParams,
) -> Result<Mat> {
    if position_feats.rows() != position_color_feats.rows() {
        return Err(Error::invalid("feature sets come from different partitions"));
    }
    let (mid, _) = forward(z, position_feats, position_feats, position_params)?;
    let (out, _) = forward(
        &mid,
        position_color_feats,
        position_color_feats,
        position_color_params,
    )?;
    Ok(out)
}

/// Serialized form: one JSON manifest plus one `BIMX` file per tensor.
#[derive(Serialize, Deserialize)]
struct ParamsManifest {
    #[serde(rename = "H")]
    h: usize,
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "C")]
    c: usize,
    rho: Vec<f64>,
    files: ParamsFiles,
}

#[derive(Serialize, Deserialize)]
struct ParamsFiles {
    lambda: String,
    weights: String,
}

/// Writes `<stem>.json`, `<stem>_lambda.bimx`, `<stem>_weights.bimx` in `dir`.
pub fn save_params(dir: impl AsRef<Path>, stem: &str, params: &InceptionParams) -> Result<()> {
    let dir = dir.as_ref();
    let lambda_name = format!("{stem}_lambda.bimx");
    let weights_name = format!("{stem}_weights.bimx");
    params.lambda.write_bimx(dir.join(&lambda_name))?;
    params.weights.write_bimx(dir.join(&weights_name))?;
    let manifest = ParamsManifest {
        h: params.scale_count(),
        d: params.feature_dims(),
        c: params.channels(),
        rho: params.rho.clone(),
        files: ParamsFiles { lambda: lambda_name, weights: weights_name },
    };
    let path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format(&path, e.to_string()))?;
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

/// Loads parameters from a manifest written by [`save_params`]; tensor paths
/// are resolved relative to the manifest's directory.
pub fn load_params(manifest_path: impl AsRef<Path>) -> Result<InceptionParams> {
    let path = manifest_path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: ParamsManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let lambda = Mat::read_bimx(dir.join(&manifest.files.lambda))?;
    let weights = Mat::read_bimx(dir.join(&manifest.files.weights))?;
    if manifest.rho.len() != manifest.h
        || lambda.rows() != manifest.d
        || lambda.cols() != manifest.d
        || weights.rows() != manifest.h
        || weights.cols() != manifest.c
    {
        return Err(Error::format(path, "tensor shapes disagree with the manifest"));
    }
    Ok(InceptionParams { rho: manifest.rho, lambda, weights })
}
