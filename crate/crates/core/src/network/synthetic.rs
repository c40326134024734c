//! Synthetic blob dataset: colored elliptical blobs on a textured background
//! with small blob-colored distractor patches and per-pixel Gaussian noise.
//!
//! Each class keeps a fixed color anchor across the dataset (with small
//! per-image jitter) so appearance predicts the class. Distractor patches
//! carry blob-like colors but background labels, which is exactly the kind
//! of local ambiguity that spatial information propagation resolves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::{Image, LabelMap};

/// Background plus four blob classes.
pub const NUM_CLASSES: usize = 5;

/// Fixed color anchors for classes 1..=4.
const PALETTE: [[f64; 3]; 4] = [
    [0.85, 0.15, 0.15],
    [0.15, 0.75, 0.20],
    [0.15, 0.25, 0.85],
    [0.80, 0.75, 0.15],
];

#[derive(Clone, Debug)]
pub struct BlobDatasetConfig {
    pub width: usize,
    pub height: usize,
    pub min_blobs: usize,
    pub max_blobs: usize,
    /// Blob radius range as a fraction of `min(width, height)`.
    pub blob_radius_frac: (f64, f64),
    /// Distractor patches per pixel (expected count = density * pixels).
    pub confuser_density: f64,
    /// Distractor radius range as a fraction of `min(width, height)`.
    pub confuser_radius_frac: (f64, f64),
    /// Blend factor of the blob color into the background inside a patch.
    pub confuser_mix: f64,
    /// Per-pixel Gaussian noise on every channel.
    pub noise_sigma: f64,
}

impl Default for BlobDatasetConfig {
    fn default() -> Self {
        BlobDatasetConfig {
            width: 128,
            height: 128,
            min_blobs: 2,
            max_blobs: 4,
            blob_radius_frac: (0.09, 0.17),
            confuser_density: 0.00073,
            confuser_radius_frac: (0.045, 0.065),
            confuser_mix: 1.0,
            noise_sigma: 0.05,
        }
    }
}

/// Generates `count` image/label pairs; deterministic in `seed`.
pub fn generate_blob_dataset(
    seed: u64,
    count: usize,
    cfg: &BlobDatasetConfig,
) -> Vec<(Image, LabelMap)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| generate_one(&mut rng, cfg)).collect()
}

fn generate_one(rng: &mut ChaCha8Rng, cfg: &BlobDatasetConfig) -> (Image, LabelMap) {
    let (w, h) = (cfg.width, cfg.height);
    let min_dim = w.min(h) as f64;
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("valid sigma");

    // Smooth two-component sinusoid texture per channel.
    let base = 0.40 + rng.gen::<f64>() * 0.10;
    let mut tex = Vec::with_capacity(6);
    for _ in 0..3 {
        tex.push((
            0.04 + rng.gen::<f64>() * 0.05,
            1.0 + rng.gen::<f64>() * 2.5,
            1.0 + rng.gen::<f64>() * 2.5,
            rng.gen::<f64>() * std::f64::consts::TAU,
        ));
        tex.push((
            0.02 + rng.gen::<f64>() * 0.03,
            2.0 + rng.gen::<f64>() * 3.0,
            2.0 + rng.gen::<f64>() * 3.0,
            rng.gen::<f64>() * std::f64::consts::TAU,
        ));
    }
    let bg = |x: usize, y: usize, ch: usize| -> f64 {
        let (xf, yf) = (x as f64 / w as f64, y as f64 / h as f64);
        let (a1, fx1, fy1, p1) = tex[ch * 2];
        let (a2, fx2, fy2, p2) = tex[ch * 2 + 1];
        base + a1 * (std::f64::consts::TAU * (fx1 * xf + fy1 * yf) + p1).sin()
            + a2 * (std::f64::consts::TAU * (fx2 * xf + fy2 * yf) + p2).sin()
    };

    let mut img = Image::from_fn(w, h, |x, y| [bg(x, y, 0), bg(x, y, 1), bg(x, y, 2)]);
    let mut labels = vec![0u16; w * h];

    // Per-image color jitter per class.
    let jitter: Vec<[f64; 3]> = (0..4)
        .map(|_| {
            [
                (rng.gen::<f64>() - 0.5) * 0.08,
                (rng.gen::<f64>() - 0.5) * 0.08,
                (rng.gen::<f64>() - 0.5) * 0.08,
            ]
        })
        .collect();
    let class_color = |class: usize| -> [f64; 3] {
        let a = PALETTE[class - 1];
        let j = jitter[class - 1];
        [a[0] + j[0], a[1] + j[1], a[2] + j[2]]
    };

    // Blobs: a random subset of the four classes, rotated ellipses.
    let n_blobs = rng.gen_range(cfg.min_blobs..=cfg.max_blobs);
    let mut classes = [1usize, 2, 3, 4];
    for i in (1..classes.len()).rev() {
        classes.swap(i, rng.gen_range(0..=i));
    }
    for &class in classes.iter().take(n_blobs) {
        let cx = (0.2 + rng.gen::<f64>() * 0.6) * w as f64;
        let cy = (0.2 + rng.gen::<f64>() * 0.6) * h as f64;
        let rx = (cfg.blob_radius_frac.0
            + rng.gen::<f64>() * (cfg.blob_radius_frac.1 - cfg.blob_radius_frac.0))
            * min_dim;
        let ry = (cfg.blob_radius_frac.0
            + rng.gen::<f64>() * (cfg.blob_radius_frac.1 - cfg.blob_radius_frac.0))
            * min_dim;
        let angle = rng.gen::<f64>() * std::f64::consts::PI;
        let (sin, cos) = angle.sin_cos();
        let color = class_color(class);
        let reach = rx.max(ry).ceil() as i64;
        let (icx, icy) = (cx.round() as i64, cy.round() as i64);
        for y in (icy - reach).max(0)..=(icy + reach).min(h as i64 - 1) {
            for x in (icx - reach).max(0)..=(icx + reach).min(w as i64 - 1) {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let u = (dx * cos + dy * sin) / rx;
                let v = (-dx * sin + dy * cos) / ry;
                if u * u + v * v <= 1.0 {
                    img.set_pixel(x as usize, y as usize, color);
                    labels[y as usize * w + x as usize] = class as u16;
                }
            }
        }
    }

    // Distractors: small blob-colored discs on background pixels only.
    let expected = (cfg.confuser_density * (w * h) as f64).round() as usize;
    let n_conf = rng.gen_range((expected * 3 / 4).max(1)..=expected * 5 / 4 + 1);
    for _ in 0..n_conf {
        let class = rng.gen_range(1..=4usize);
        let color = class_color(class);
        let r = (cfg.confuser_radius_frac.0
            + rng.gen::<f64>() * (cfg.confuser_radius_frac.1 - cfg.confuser_radius_frac.0))
            * min_dim;
        let cx = rng.gen_range(0..w) as f64;
        let cy = rng.gen_range(0..h) as f64;
        let reach = r.ceil() as i64;
        let (icx, icy) = (cx as i64, cy as i64);
        for y in (icy - reach).max(0)..=(icy + reach).min(h as i64 - 1) {
            for x in (icx - reach).max(0)..=(icx + reach).min(w as i64 - 1) {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                if dx * dx + dy * dy <= r * r && labels[y as usize * w + x as usize] == 0 {
                    let cur = img.pixel(x as usize, y as usize);
                    let mixed = [
                        cfg.confuser_mix * color[0] + (1.0 - cfg.confuser_mix) * cur[0],
                        cfg.confuser_mix * color[1] + (1.0 - cfg.confuser_mix) * cur[1],
                        cfg.confuser_mix * color[2] + (1.0 - cfg.confuser_mix) * cur[2],
                    ];
                    img.set_pixel(x as usize, y as usize, mixed);
                }
            }
        }
    }

    // Per-pixel noise, clamped back into range.
    for y in 0..h {
        for x in 0..w {
            let mut px = img.pixel(x, y);
            for ch in &mut px {
                *ch = (*ch + noise.sample(rng)).clamp(0.0, 1.0);
            }
            img.set_pixel(x, y, px);
        }
    }

    let gt = LabelMap::new(w, h, labels, NUM_CLASSES).expect("generator emits valid labels");
    (img, gt)
}
