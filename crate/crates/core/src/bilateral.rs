//! Row-normalized Gaussian kernels over transformed features: construction,
//! filtering, and exact gradients with respect to the input signal, the
//! kernel scale, and the feature transform.
//!
//! For output features `f_i` and input features `f_j`, the kernel is
//! `K_ij = exp(-theta * ||L f_i - L f_j||^2) / sum_j' exp(...)` and filtering
//! is the matrix product `K z`, applied to every channel separately.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Rows above which kernel construction fans out over the thread pool; each
/// row is normalized independently so results do not depend on thread count.
const PAR_ROW_THRESHOLD: usize = 192;

/// A Q×P row-stochastic Gaussian kernel together with the squared distances
/// it was built from (kept for the backward pass and for scale reuse).
#[derive(Clone, Debug)]
pub struct BilateralKernel {
    pub k: Mat,
    pub theta: f64,
    pub sq_dists: Arc<Mat>,
}

/// Gradients of a scalar loss through one bilateral filtering step.
#[derive(Clone, Debug)]
pub struct BilateralGradients {
    /// P×C gradient with respect to the filtered signal.
    pub d_input: Mat,
    /// Gradient with respect to the kernel scale.
    pub d_theta: f64,
    /// D×D gradient with respect to the feature transform.
    pub d_lambda: Mat,
}

/// Entry `(i, j)` is `||L f_i - L f_j||^2` for row `i` of `f_out` and row
/// `j` of `f_in`. The diagonal is exactly zero when both matrices hold
/// identical rows.
pub fn pairwise_sq_dists(f_out: &Mat, f_in: &Mat, lambda: &Mat) -> Result<Mat> {
    let d = f_in.cols();
    if f_out.cols() != d {
        return Err(Error::invalid(format!(
            "feature dims differ: {} vs {d}",
            f_out.cols()
        )));
    }
    if lambda.rows() != d || lambda.cols() != d {
        return Err(Error::invalid(format!(
            "transform is {}x{}, expected {d}x{d}",
            lambda.rows(),
            lambda.cols()
        )));
    }
    // Row i of F holds f_i^T, so transformed rows are F * lambda^T.
    let g_out = f_out.mul_bt(lambda);
    let g_in = f_in.mul_bt(lambda);
    let (q, p) = (g_out.rows(), g_in.rows());
    let mut out = Mat::zeros(q, p);
    let compute_row = |i: usize, orow: &mut [f64]| {
        let gi = g_out.row(i);
        for (j, o) in orow.iter_mut().enumerate() {
            let gj = g_in.row(j);
            let mut acc = 0.0;
            for (&a, &b) in gi.iter().zip(gj) {
                let diff = a - b;
                acc += diff * diff;
            }
            *o = acc;
        }
    };
    if q >= PAR_ROW_THRESHOLD {
        out.data_mut()
            .par_chunks_mut(p)
            .enumerate()
            .for_each(|(i, orow)| compute_row(i, orow));
    } else {
        for (i, orow) in out.data_mut().chunks_mut(p).enumerate() {
            compute_row(i, orow);
        }
    }
    Ok(out)
}

/// Builds the row-normalized kernel `K_ij = exp(-theta d_ij) / sum_j'`.
///
/// Rows are exponentiated after subtracting the per-row maximum of
/// `-theta d`, so large `theta * d` cannot overflow. `theta == 0` is allowed
/// (uniform rows); negative or non-finite values are rejected, as are
/// non-finite distances.
pub fn build_kernel(sq_dists: Arc<Mat>, theta: f64) -> Result<BilateralKernel> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::invalid(format!("scale must be finite and >= 0, got {theta}")));
    }
    if !sq_dists.is_finite() {
        return Err(Error::invalid("squared distances contain non-finite values"));
    }
    let (q, p) = (sq_dists.rows(), sq_dists.cols());
    if p == 0 || q == 0 {
        return Err(Error::invalid("kernel must have at least one row and column"));
    }
    let mut k = Mat::zeros(q, p);
    let normalize_row = |i: usize, krow: &mut [f64]| {
        let drow = sq_dists.row(i);
        let mut max_s = f64::NEG_INFINITY;
        for &dv in drow {
            let s = -theta * dv;
            if s > max_s {
                max_s = s;
            }
        }
        let mut sum = 0.0;
        for (kv, &dv) in krow.iter_mut().zip(drow) {
            let e = (-theta * dv - max_s).exp();
            *kv = e;
            sum += e;
        }
        let inv = 1.0 / sum;
        for kv in krow.iter_mut() {
            *kv *= inv;
        }
    };
    if q >= PAR_ROW_THRESHOLD {
        k.data_mut()
            .par_chunks_mut(p)
            .enumerate()
            .for_each(|(i, krow)| normalize_row(i, krow));
    } else {
        for (i, krow) in k.data_mut().chunks_mut(p).enumerate() {
            normalize_row(i, krow);
        }
    }
    Ok(BilateralKernel { k, theta, sq_dists })
}

/// Applies the kernel to every channel: `z_hat = K z` (Q×C).
pub fn filter_forward(kernel: &BilateralKernel, z: &Mat) -> Result<Mat> {
    if z.rows() != kernel.k.cols() {
        return Err(Error::invalid(format!(
            "signal has {} rows, kernel expects {}",
            z.rows(),
            kernel.k.cols()
        )));
    }
    Ok(kernel.k.mul(z))
}

/// Backward pass through `z_hat = K(theta, lambda) z` given the upstream
/// gradient `d_out` (Q×C).
///
/// With `G_ij = sum_c d_out_ic z_jc` (the gradient with respect to kernel
/// entries) and row sums `a_i = sum_j K_ij G_ij`, the softmax structure of
/// each row gives
///   dL/dd_ij  = -theta K_ij (G_ij - a_i)
///   d_theta   = sum_ij G_ij K_ij (sum_j' K_ij' d_ij' - d_ij)
///   d_lambda  = sum_ij dL/dd_ij * 2 L (f_i - f_j)(f_i - f_j)^T
/// and `d_input = K^T d_out`.
pub fn filter_backward(
    kernel: &BilateralKernel,
    f_out: &Mat,
    f_in: &Mat,
    lambda: &Mat,
    z: &Mat,
    d_out: &Mat,
) -> Result<BilateralGradients> {
    let (q, p) = (kernel.k.rows(), kernel.k.cols());
    let d = lambda.rows();
    if !kernel.sq_dists.same_shape(&kernel.k) {
        return Err(Error::invalid("cached distances do not match the kernel"));
    }
    if z.rows() != p || d_out.rows() != q || d_out.cols() != z.cols() {
        return Err(Error::invalid("signal/gradient shapes do not match the kernel"));
    }
    if f_out.rows() != q || f_in.rows() != p || f_out.cols() != d || f_in.cols() != d
        || lambda.cols() != d
    {
        return Err(Error::invalid("feature shapes do not match the kernel"));
    }

    let d_input = kernel.k.mul_at(d_out);
    let g = d_out.mul_bt(z); // Q×P

    let theta = kernel.theta;
    let dists = kernel.sq_dists.as_ref();
    let mut d_theta = 0.0;
    let mut w = Mat::zeros(q, p); // dL/dd_ij
    for i in 0..q {
        let krow = kernel.k.row(i);
        let grow = g.row(i);
        let drow = dists.row(i);
        let mut a = 0.0;
        let mut b = 0.0;
        for j in 0..p {
            a += krow[j] * grow[j];
            b += krow[j] * drow[j];
        }
        let wrow = w.row_mut(i);
        for j in 0..p {
            d_theta += grow[j] * krow[j] * (b - drow[j]);
            wrow[j] = -theta * krow[j] * (grow[j] - a);
        }
    }

    // d_lambda = 2 L * M with
    // M = Fout^T diag(r) Fout + Fin^T diag(c) Fin - B - B^T,
    // r/c the row/column sums of W and B = Fout^T W Fin.
    let mut m = Mat::zeros(d, d);
    let mut col_sums = vec![0.0f64; p];
    for i in 0..q {
        let wrow = w.row(i);
        let fi = f_out.row(i);
        let mut r = 0.0;
        for (j, &wv) in wrow.iter().enumerate() {
            r += wv;
            col_sums[j] += wv;
        }
        rank1_add(&mut m, fi, r);
    }
    for (j, &c) in col_sums.iter().enumerate() {
        rank1_add(&mut m, f_in.row(j), c);
    }
    let b = f_out.mul_at(&w.mul(f_in)); // D×D
    for r in 0..d {
        for c in 0..d {
            let v = m.get(r, c) - b.get(r, c) - b.get(c, r);
            m.set(r, c, v);
        }
    }
    let d_lambda = lambda.mul(&m).scaled(2.0);

    Ok(BilateralGradients { d_input, d_theta, d_lambda })
}

/// `m += weight * f f^T` for a feature row `f`.
fn rank1_add(m: &mut Mat, f: &[f64], weight: f64) {
    let d = f.len();
    for r in 0..d {
        let fr = f[r] * weight;
        let row = m.row_mut(r);
        for c in 0..d {
            row[c] += fr * f[c];
        }
    }
}
