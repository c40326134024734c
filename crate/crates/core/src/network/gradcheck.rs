//! Central-finite-difference verification of every analytic gradient.
//!
//! Each fragment builds a small seeded instance, computes a scalar objective
//! (an inner product with a fixed random upstream gradient, or the training
//! loss itself), and compares analytic gradients against central differences
//! entry by entry. Relative error is `|a - n| / max(|a|, |n|, 1e-8)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bilateral;
use crate::inception::{self, InceptionParams};
use crate::mat::Mat;

use super::{softmax_xent, Activation, DenseLayer};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Largest acceptable relative error for a non-linear fragment.
pub const PASS_THRESHOLD: f64 = 1e-4;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[derive(Clone, Debug, Serialize)]
pub struct TensorReport {
    pub name: String,
    pub max_rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradReport {
    pub fragment: String,
    pub seed: u64,
    pub tensors: Vec<TensorReport>,
}

impl GradReport {
    pub fn max_rel_err(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_err).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub threshold: f64,
    pub fragments: Vec<GradReport>,
}

impl SuiteReport {
    pub fn max_rel_err(&self) -> f64 {
        self.fragments.iter().map(|f| f.max_rel_err()).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_err() < self.threshold
    }

    /// `fragment/tensor` names of every entry over the threshold.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.fragments {
            for t in &f.tensors {
                if t.max_rel_err >= self.threshold {
                    out.push(format!("{}/{}", f.fragment, t.name));
                }
            }
        }
        out
    }
}

fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.gen::<f64>() - 0.5)
}

fn fd_tensor(
    name: &str,
    analytic: &[f64],
    mut loss_at: impl FnMut(usize, f64) -> f64,
) -> TensorReport {
    let mut max = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let numeric = (loss_at(k, FD_STEP) - loss_at(k, -FD_STEP)) / (2.0 * FD_STEP);
        max = max.max(rel_err(a, numeric));
    }
    TensorReport { name: name.to_string(), max_rel_err: max }
}

/// One bilateral filtering step: objective `<d_out, K(theta, lambda) z>`.
pub fn check_bilateral(seed: u64, p: usize, q: usize, c: usize, d: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f_out = random_mat(&mut rng, q, d);
    let f_in = if p == q { f_out.clone() } else { random_mat(&mut rng, p, d) };
    let lambda = random_mat(&mut rng, d, d);
    let z = random_mat(&mut rng, p, c);
    let d_out = random_mat(&mut rng, q, c);
    let theta = 0.3 + rng.gen::<f64>() * 1.2;

    let loss = |lambda: &Mat, theta: f64, z: &Mat| -> f64 {
        let dist = bilateral::pairwise_sq_dists(&f_out, &f_in, lambda).unwrap();
        let kernel = bilateral::build_kernel(Arc::new(dist), theta).unwrap();
        let zh = bilateral::filter_forward(&kernel, z).unwrap();
        zh.data().iter().zip(d_out.data()).map(|(a, b)| a * b).sum()
    };

    let dist = bilateral::pairwise_sq_dists(&f_out, &f_in, &lambda).unwrap();
    let kernel = bilateral::build_kernel(Arc::new(dist), theta).unwrap();
    let g = bilateral::filter_backward(&kernel, &f_out, &f_in, &lambda, &z, &d_out).unwrap();

    let tensors = vec![
        fd_tensor("theta", &[g.d_theta], |_, h| loss(&lambda, theta + h, &z)),
        fd_tensor("lambda", g.d_lambda.data(), |k, h| {
            let mut l = lambda.clone();
            l.data_mut()[k] += h;
            loss(&l, theta, &z)
        }),
        fd_tensor("input", g.d_input.data(), |k, h| {
            let mut zz = z.clone();
            zz.data_mut()[k] += h;
            loss(&lambda, theta, &zz)
        }),
    ];
    GradReport { fragment: "bilateral".into(), seed, tensors }
}

/// One multi-scale module: objective `<d_out, module(z)>`.
pub fn check_inception(seed: u64, p: usize, q: usize, c: usize, d: usize, h: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f_in = random_mat(&mut rng, p, d);
    let f_out = if p == q { f_in.clone() } else { random_mat(&mut rng, q, d) };
    let z = random_mat(&mut rng, p, c);
    let d_out = random_mat(&mut rng, q, c);
    let params = InceptionParams {
        rho: (0..h).map(|_| rng.gen::<f64>() - 0.5).collect(),
        lambda: random_mat(&mut rng, d, d),
        weights: random_mat(&mut rng, h, c),
    };

    let loss = |params: &InceptionParams, z: &Mat| -> f64 {
        let (out, _) = inception::forward(z, &f_in, &f_out, params).unwrap();
        out.data().iter().zip(d_out.data()).map(|(a, b)| a * b).sum()
    };

    let (_, cache) = inception::forward(&z, &f_in, &f_out, &params).unwrap();
    let g = inception::backward(&cache, &z, &f_in, &f_out, &params, &d_out).unwrap();

    let tensors = vec![
        fd_tensor("rho", &g.d_rho, |k, hh| {
            let mut pp = params.clone();
            pp.rho[k] += hh;
            loss(&pp, &z)
        }),
        fd_tensor("lambda", g.d_lambda.data(), |k, hh| {
            let mut pp = params.clone();
            pp.lambda.data_mut()[k] += hh;
            loss(&pp, &z)
        }),
        fd_tensor("weights", g.d_weights.data(), |k, hh| {
            let mut pp = params.clone();
            pp.weights.data_mut()[k] += hh;
            loss(&pp, &z)
        }),
        fd_tensor("input", g.d_input.data(), |k, hh| {
            let mut zz = z.clone();
            zz.data_mut()[k] += hh;
            loss(&params, &zz)
        }),
    ];
    GradReport { fragment: "inception".into(), seed, tensors }
}

/// A linear layer under the objective `<d_out, z W^T + b>`.
pub fn check_dense(seed: u64, p: usize, c_in: usize, c_out: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layer = DenseLayer::new_seeded(c_in, c_out, Activation::None, &mut rng);
    let z = random_mat(&mut rng, p, c_in);
    let d_out = random_mat(&mut rng, p, c_out);

    let loss = |layer: &DenseLayer, z: &Mat| -> f64 {
        let out = layer.forward(z).unwrap();
        out.data().iter().zip(d_out.data()).map(|(a, b)| a * b).sum()
    };

    let (_, pre) = layer.forward_cached(&z).unwrap();
    let (d_w, d_b, d_in) = layer.backward(&z, &pre, &d_out);

    let tensors = vec![
        fd_tensor("w", d_w.data(), |k, h| {
            let mut l = layer.clone();
            l.w.data_mut()[k] += h;
            loss(&l, &z)
        }),
        fd_tensor("b", &d_b, |k, h| {
            let mut l = layer.clone();
            l.b[k] += h;
            loss(&l, &z)
        }),
        fd_tensor("input", d_in.data(), |k, h| {
            let mut zz = z.clone();
            zz.data_mut()[k] += h;
            loss(&layer, &zz)
        }),
    ];
    GradReport { fragment: "dense".into(), seed, tensors }
}

/// The weighted cross-entropy loss itself.
pub fn check_softmax(seed: u64, p: usize, c: usize) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits = random_mat(&mut rng, p, c);
    let targets: Vec<usize> = (0..p).map(|_| rng.gen_range(0..c)).collect();
    let weights: Vec<f64> = (0..p).map(|_| 0.5 + rng.gen::<f64>() * 3.0).collect();
    let (_, d_logits) = softmax_xent(&logits, &targets, &weights).unwrap();
    let tensors = vec![fd_tensor("logits", d_logits.data(), |k, h| {
        let mut l = logits.clone();
        l.data_mut()[k] += h;
        softmax_xent(&l, &targets, &weights).unwrap().0
    })];
    GradReport { fragment: "softmax_xent".into(), seed, tensors }
}

/// Dense -> multi-scale module -> dense -> weighted cross-entropy, checking
/// every tensor in the chain including the raw input.
struct StackInstance {
    z0: Mat,
    dense1: DenseLayer,
    params: InceptionParams,
    dense2: DenseLayer,
    f_in: Mat,
    f_out: Mat,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

const STACK_IN: usize = 4;
const STACK_CLASSES: usize = 4;

impl StackInstance {
    /// Builds a random instance, re-drawing until every ReLU pre-activation
    /// sits at least 1e-3 from its kink so central differences stay valid.
    fn new(seed: u64, p: usize, q: usize, c: usize, d: usize, h: usize) -> Self {
        for attempt in 0..64u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(1_000_003)));
            let z0 = random_mat(&mut rng, p, STACK_IN);
            let dense1 = DenseLayer::new_seeded(STACK_IN, c, Activation::Relu, &mut rng);
            let f_in = random_mat(&mut rng, p, d);
            let f_out = if p == q { f_in.clone() } else { random_mat(&mut rng, q, d) };
            let params = InceptionParams {
                rho: (0..h).map(|_| rng.gen::<f64>() - 0.5).collect(),
                lambda: random_mat(&mut rng, d, d),
                weights: random_mat(&mut rng, h, c),
            };
            let dense2 = DenseLayer::new_seeded(c, STACK_CLASSES, Activation::None, &mut rng);
            let targets: Vec<usize> = (0..q).map(|_| rng.gen_range(0..STACK_CLASSES)).collect();
            let weights: Vec<f64> = (0..q).map(|_| 0.5 + rng.gen::<f64>() * 3.0).collect();
            let inst = StackInstance { z0, dense1, params, dense2, f_in, f_out, targets, weights };
            let (_, pre) = inst.dense1.forward_cached(&inst.z0).unwrap();
            if pre.data().iter().all(|&v| v.abs() > 1e-3) {
                return inst;
            }
        }
        unreachable!("could not place ReLU inputs away from the kink");
    }

    fn loss(&self) -> f64 {
        let z1 = self.dense1.forward(&self.z0).unwrap();
        let (z2, _) = inception::forward(&z1, &self.f_in, &self.f_out, &self.params).unwrap();
        let z3 = self.dense2.forward(&z2).unwrap();
        softmax_xent(&z3, &self.targets, &self.weights).unwrap().0
    }
}

pub fn check_stack(seed: u64, p: usize, q: usize, c: usize, d: usize, h: usize) -> GradReport {
    check_stack_inner(seed, p, q, c, d, h, false)
}

fn check_stack_inner(
    seed: u64,
    p: usize,
    q: usize,
    c: usize,
    d: usize,
    h: usize,
    inject_fault: bool,
) -> GradReport {
    let inst = StackInstance::new(seed, p, q, c, d, h);

    let (z1, pre1) = inst.dense1.forward_cached(&inst.z0).unwrap();
    let (z2, cache) = inception::forward(&z1, &inst.f_in, &inst.f_out, &inst.params).unwrap();
    let (z3, pre2) = inst.dense2.forward_cached(&z2).unwrap();
    let (_, d_logits) = softmax_xent(&z3, &inst.targets, &inst.weights).unwrap();
    let (d_w2, d_b2, d_z2) = inst.dense2.backward(&z2, &pre2, &d_logits);
    let gi = inception::backward(&cache, &z1, &inst.f_in, &inst.f_out, &inst.params, &d_z2).unwrap();
    let (d_w1, d_b1, d_z0) = inst.dense1.backward(&inst.z0, &pre1, &gi.d_input);

    let mut d_rho = gi.d_rho.clone();
    if inject_fault {
        // Deliberate sign flip used by the verification CLI's fault hook.
        for v in &mut d_rho {
            *v = -*v;
        }
    }

    let with = |f: &dyn Fn(&mut StackInstance)| -> f64 {
        let mut m = StackInstance {
            z0: inst.z0.clone(),
            dense1: inst.dense1.clone(),
            params: inst.params.clone(),
            dense2: inst.dense2.clone(),
            f_in: inst.f_in.clone(),
            f_out: inst.f_out.clone(),
            targets: inst.targets.clone(),
            weights: inst.weights.clone(),
        };
        f(&mut m);
        m.loss()
    };

    let tensors = vec![
        fd_tensor("input", d_z0.data(), |k, hh| with(&|m| m.z0.data_mut()[k] += hh)),
        fd_tensor("dense1_w", d_w1.data(), |k, hh| with(&|m| m.dense1.w.data_mut()[k] += hh)),
        fd_tensor("dense1_b", &d_b1, |k, hh| with(&|m| m.dense1.b[k] += hh)),
        fd_tensor("rho", &d_rho, |k, hh| with(&|m| m.params.rho[k] += hh)),
        fd_tensor("lambda", gi.d_lambda.data(), |k, hh| {
            with(&|m| m.params.lambda.data_mut()[k] += hh)
        }),
        fd_tensor("weights", gi.d_weights.data(), |k, hh| {
            with(&|m| m.params.weights.data_mut()[k] += hh)
        }),
        fd_tensor("dense2_w", d_w2.data(), |k, hh| with(&|m| m.dense2.w.data_mut()[k] += hh)),
        fd_tensor("dense2_b", &d_b2, |k, hh| with(&|m| m.dense2.b[k] += hh)),
    ];
    GradReport { fragment: "stack".into(), seed, tensors }
}

/// Runs `trials` instances of every fragment with sizes cycling through
/// small P/Q (equal and unequal), D in {2, 5} and H in {1, 2, 3}.
///
/// `inject_fault` flips the sign of one analytic tensor in every stack
/// instance; it exists so callers can verify that the suite actually fails
/// when gradients are wrong.
pub fn run_suite(seed: u64, trials: usize, inject_fault: bool) -> SuiteReport {
    let p_choices = [5usize, 7, 9];
    let q_choices = [5usize, 7, 9];
    let d_choices = [2usize, 5];
    let h_choices = [1usize, 2, 3];
    let c = 3;
    let mut fragments = Vec::new();
    for t in 0..trials {
        let p = p_choices[t % p_choices.len()];
        let q = q_choices[(t / 3) % q_choices.len()];
        let d = d_choices[t % d_choices.len()];
        let h = h_choices[t % h_choices.len()];
        let s = seed.wrapping_add(t as u64);
        fragments.push(check_stack_inner(s, p, q, c, d, h, inject_fault));
        match t % 4 {
            0 => fragments.push(check_bilateral(s, p, q, c, d)),
            1 => fragments.push(check_inception(s, p, q, c, d, h)),
            2 => fragments.push(check_dense(s, p, d, c)),
            _ => fragments.push(check_softmax(s, p, c)),
        }
    }
    SuiteReport { threshold: PASS_THRESHOLD, fragments }
}
