//! Superpixel partitions: construction (SLIC), per-segment mean features,
//! label projection, oracle quantization scoring, and agglomerative merging.

mod slic;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{self, Image, LabelMap};
use crate::mat::Mat;

pub use slic::slic;

/// A disjoint cover of the image by M nonempty segments with contiguous ids.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpixelPartition {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    sizes: Vec<u32>,
}

/// Which per-segment features `mean_features` produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// `(u, v)`: mean column/row, each normalized by `max(width, height)`.
    Position,
    /// `(u, v, r, g, b)`: position plus per-segment channel means.
    PositionColor,
}

impl FeatureKind {
    pub fn dims(self) -> usize {
        match self {
            FeatureKind::Position => 2,
            FeatureKind::PositionColor => 5,
        }
    }
}

impl SuperpixelPartition {
    /// Validates that `labels` uses contiguous ids `0..M` with every segment
    /// nonempty, and computes segment sizes.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label length {} does not match {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        if labels.is_empty() {
            return Err(Error::invalid("empty partition"));
        }
        let m = *labels.iter().max().unwrap() as usize + 1;
        let mut sizes = vec![0u32; m];
        for &l in &labels {
            sizes[l as usize] += 1;
        }
        if let Some(gap) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("segment {gap} is empty")));
        }
        Ok(SuperpixelPartition { width, height, labels, sizes })
    }

    /// One segment per pixel.
    pub fn singletons(width: usize, height: usize) -> Self {
        let n = width * height;
        SuperpixelPartition {
            width,
            height,
            labels: (0..n as u32).collect(),
            sizes: vec![1; n],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of segments M.
    #[inline]
    pub fn segment_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    #[inline]
    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Re-checks the partition invariants (contiguous ids, nonempty segments,
    /// full coverage).
    pub fn validate(&self) -> Result<()> {
        let again = SuperpixelPartition::from_labels(self.width, self.height, self.labels.clone())?;
        if again.sizes != self.sizes {
            return Err(Error::invalid("cached sizes are stale"));
        }
        Ok(())
    }

    /// Writes segment ids as a 16-bit PGM; fails for M > 65536.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.segment_count() > 65536 {
            return Err(Error::invalid(format!(
                "{} segments exceed the 16-bit PGM id range",
                self.segment_count()
            )));
        }
        let samples: Vec<u16> = self.labels.iter().map(|&l| l as u16).collect();
        image::write_pgm16(path, self.width, self.height, &samples)
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (width, height, samples) = image::read_pgm16(path)?;
        let labels = samples.iter().map(|&s| s as u32).collect();
        SuperpixelPartition::from_labels(width, height, labels)
            .map_err(|e| Error::format(path, e.to_string()))
    }

    /// Copies the image and paints pixels whose right or lower neighbor lies
    /// in a different segment with `color`.
    pub fn boundary_overlay(&self, img: &Image, color: [f64; 3]) -> Result<Image> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::invalid("image and partition dimensions differ"));
        }
        let mut out = img.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                let l = self.label_at(x, y);
                let boundary = (x + 1 < self.width && self.label_at(x + 1, y) != l)
                    || (y + 1 < self.height && self.label_at(x, y + 1) != l);
                if boundary {
                    out.set_pixel(x, y, color);
                }
            }
        }
        Ok(out)
    }
}

/// Per-segment mean features: P = M rows, D = 2 or 5 columns.
///
/// Positions are 0-based pixel indices normalized by `max(width, height)`;
/// colors stay in `[0, 1]`.
pub fn mean_features(img: &Image, part: &SuperpixelPartition, kind: FeatureKind) -> Result<Mat> {
    if img.width() != part.width || img.height() != part.height {
        return Err(Error::invalid("image and partition dimensions differ"));
    }
    let m = part.segment_count();
    let d = kind.dims();
    let norm = 1.0 / part.width.max(part.height) as f64;
    let mut acc = Mat::zeros(m, d);
    for y in 0..part.height {
        for x in 0..part.width {
            let l = part.label_at(x, y) as usize;
            let row = acc.row_mut(l);
            row[0] += x as f64 * norm;
            row[1] += y as f64 * norm;
            if d == 5 {
                let rgb = img.pixel(x, y);
                row[2] += rgb[0];
                row[3] += rgb[1];
                row[4] += rgb[2];
            }
        }
    }
    for i in 0..m {
        let inv = 1.0 / part.sizes[i] as f64;
        for v in acc.row_mut(i) {
            *v *= inv;
        }
    }
    Ok(acc)
}

/// Extends one class id per segment to every pixel of that segment.
pub fn project_labels(
    part: &SuperpixelPartition,
    segment_labels: &[u16],
    num_classes: usize,
) -> Result<LabelMap> {
    if segment_labels.len() != part.segment_count() {
        return Err(Error::invalid(format!(
            "{} segment labels for {} segments",
            segment_labels.len(),
            part.segment_count()
        )));
    }
    if let Some(&bad) = segment_labels.iter().find(|&&l| l as usize >= num_classes) {
        return Err(Error::invalid(format!(
            "class id {bad} out of range for {num_classes} classes"
        )));
    }
    let labels = part.labels.iter().map(|&l| segment_labels[l as usize]).collect();
    LabelMap::new(part.width, part.height, labels, num_classes)
}

/// Best achievable score when every segment takes one label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizationScore {
    pub best_pixel_accuracy: f64,
    pub best_iou: f64,
}

/// Majority ground-truth label per segment (ties broken toward the smallest
/// class id), used both for quantization scoring and as training targets.
pub fn majority_labels(part: &SuperpixelPartition, gt: &LabelMap) -> Result<Vec<u16>> {
    if gt.width() != part.width || gt.height() != part.height {
        return Err(Error::invalid("label map and partition dimensions differ"));
    }
    let mut counts: Vec<BTreeMap<u16, u32>> = vec![BTreeMap::new(); part.segment_count()];
    for y in 0..part.height {
        for x in 0..part.width {
            let l = part.label_at(x, y) as usize;
            *counts[l].entry(gt.label_at(x, y)).or_insert(0) += 1;
        }
    }
    Ok(counts
        .iter()
        .map(|c| {
            let mut best = (0u16, 0u32);
            for (&class, &n) in c {
                // In-order scan keeps the smallest class on count ties.
                if n > best.1 {
                    best = (class, n);
                }
            }
            best.0
        })
        .collect())
}

/// Scores the oracle assignment: each segment takes its majority ground-truth
/// label and the projected map is compared against the ground truth.
pub fn quantization_error(
    part: &SuperpixelPartition,
    gt: &LabelMap,
) -> Result<QuantizationScore> {
    let majority = majority_labels(part, gt)?;
    let projected = project_labels(part, &majority, gt.num_classes())?;
    Ok(QuantizationScore {
        best_pixel_accuracy: image::pixel_accuracy(&projected, gt)?,
        best_iou: image::mean_iou(&projected, gt)?,
    })
}

/// Repeatedly merges the pair of segments with the smallest Euclidean
/// distance in feature space until `target_count` segments remain.
///
/// The merged segment's feature is the size-weighted mean of the pair and it
/// keeps the smaller of the two ids; ties on distance are broken by the
/// lexicographically smallest id pair. Ids are re-compacted at the end.
pub fn agglomerative_merge(
    part: &SuperpixelPartition,
    features: &Mat,
    target_count: usize,
) -> Result<SuperpixelPartition> {
    let m = part.segment_count();
    if features.rows() != m {
        return Err(Error::invalid(format!(
            "{} feature rows for {} segments",
            features.rows(),
            m
        )));
    }
    if target_count == 0 || target_count > m {
        return Err(Error::invalid(format!(
            "target count {target_count} outside 1..={m}"
        )));
    }

    let d = features.cols();
    let mut feats: Vec<Vec<f64>> = (0..m).map(|i| features.row(i).to_vec()).collect();
    let mut sizes: Vec<f64> = part.sizes.iter().map(|&s| s as f64).collect();
    let mut alive: Vec<bool> = vec![true; m];
    let mut parent: Vec<u32> = (0..m as u32).collect();

    let dist2 = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for k in 0..d {
            let diff = a[k] - b[k];
            acc += diff * diff;
        }
        acc
    };

    for _ in target_count..m {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..m {
            if !alive[i] {
                continue;
            }
            for j in i + 1..m {
                if !alive[j] {
                    continue;
                }
                let dd = dist2(&feats[i], &feats[j]);
                // Strict < keeps the lexicographically smallest (i, j) on ties.
                if best.map_or(true, |(b, _, _)| dd < b) {
                    best = Some((dd, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two live segments");
        let (si, sj) = (sizes[i], sizes[j]);
        let inv = 1.0 / (si + sj);
        for k in 0..d {
            feats[i][k] = (si * feats[i][k] + sj * feats[j][k]) * inv;
        }
        sizes[i] = si + sj;
        alive[j] = false;
        parent[j] = i as u32;
    }

    // Resolve merge chains, then compact surviving ids in increasing order.
    let mut root = vec![0u32; m];
    for i in 0..m {
        let mut r = i as u32;
        while parent[r as usize] != r {
            r = parent[r as usize];
        }
        root[i] = r;
    }
    let mut new_id = vec![u32::MAX; m];
    let mut next = 0u32;
    for i in 0..m {
        if alive[i] {
            new_id[i] = next;
            next += 1;
        }
    }
    let labels = part
        .labels
        .iter()
        .map(|&l| new_id[root[l as usize] as usize])
        .collect();
    SuperpixelPartition::from_labels(part.width, part.height, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
    }

    /// Random partition built as a nearest-seed assignment, so every segment
    /// is nonempty and ids are contiguous.
    fn random_partition(rng: &mut ChaCha8Rng, w: usize, h: usize, m: usize) -> SuperpixelPartition {
        let seeds: Vec<(f64, f64)> = (0..m)
            .map(|i| {
                // Spread seeds over distinct pixels to guarantee nonempty cells.
                let idx = (i * (w * h) / m) + rng.gen_range(0..(w * h / m).max(1)).min(w * h / m - 1);
                ((idx % w) as f64, (idx / w) as f64)
            })
            .collect();
        let labels: Vec<u32> = (0..w * h)
            .map(|p| {
                let (x, y) = ((p % w) as f64, (p / w) as f64);
                let mut best = (f64::INFINITY, 0u32);
                for (i, &(sx, sy)) in seeds.iter().enumerate() {
                    let dd = (x - sx).powi(2) + (y - sy).powi(2);
                    if dd < best.0 {
                        best = (dd, i as u32);
                    }
                }
                best.1
            })
            .collect();
        // Compact in case a seed lost every pixel to an identical twin.
        let mut remap = std::collections::BTreeMap::new();
        let mut compact = Vec::with_capacity(labels.len());
        for &l in &labels {
            let next = remap.len() as u32;
            let id = *remap.entry(l).or_insert(next);
            compact.push(id);
        }
        // Remap preserves first-appearance order but not id order; normalize.
        SuperpixelPartition::from_labels(w, h, compact).unwrap()
    }

    #[test]
    fn from_labels_validates() {
        assert!(SuperpixelPartition::from_labels(2, 1, vec![0, 2]).is_err()); // gap
        assert!(SuperpixelPartition::from_labels(2, 1, vec![0]).is_err()); // length
        let p = SuperpixelPartition::from_labels(2, 1, vec![1, 0]).unwrap();
        assert_eq!(p.segment_count(), 2);
        p.validate().unwrap();
    }

    #[test]
    fn mean_features_single_gray_segment() {
        let img = Image::from_fn(2, 2, |_, _| [0.5, 0.5, 0.5]);
        let part = SuperpixelPartition::from_labels(2, 2, vec![0; 4]).unwrap();
        let f = mean_features(&img, &part, FeatureKind::PositionColor).unwrap();
        assert_eq!(f.rows(), 1);
        assert_eq!(f.cols(), 5);
        for (got, want) in f.row(0).iter().zip([0.25, 0.25, 0.5, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_features_solid_colors_exact() {
        let img = Image::from_fn(4, 1, |x, _| if x < 2 { [1.0, 0.0, 0.25] } else { [0.0, 1.0, 0.75] });
        let part = SuperpixelPartition::from_labels(4, 1, vec![0, 0, 1, 1]).unwrap();
        let f = mean_features(&img, &part, FeatureKind::PositionColor).unwrap();
        assert_eq!(&f.row(0)[2..], &[1.0, 0.0, 0.25]);
        assert_eq!(&f.row(1)[2..], &[0.0, 1.0, 0.75]);
    }

    #[test]
    fn mean_features_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let img = random_image(&mut rng, 8, 8);
        let part = random_partition(&mut rng, 8, 8, 5);
        let f = mean_features(&img, &part, FeatureKind::PositionColor).unwrap();
        let norm = 8.0;
        for seg in 0..part.segment_count() {
            let mut sum = [0.0f64; 5];
            let mut count = 0.0;
            for y in 0..8 {
                for x in 0..8 {
                    if part.label_at(x, y) == seg as u32 {
                        let rgb = img.pixel(x, y);
                        sum[0] += x as f64 / norm;
                        sum[1] += y as f64 / norm;
                        sum[2] += rgb[0];
                        sum[3] += rgb[1];
                        sum[4] += rgb[2];
                        count += 1.0;
                    }
                }
            }
            for k in 0..5 {
                assert!((f.get(seg, k) - sum[k] / count).abs() < 1e-12);
            }
        }
        let fp = mean_features(&img, &part, FeatureKind::Position).unwrap();
        assert_eq!(fp.cols(), 2);
        for seg in 0..part.segment_count() {
            assert_eq!(fp.row(seg), &f.row(seg)[..2]);
        }
    }

    #[test]
    fn project_labels_basics() {
        let part = SuperpixelPartition::from_labels(2, 2, vec![0; 4]).unwrap();
        let lm = project_labels(&part, &[3], 4).unwrap();
        assert!(lm.labels().iter().all(|&l| l == 3));

        let ident = SuperpixelPartition::singletons(3, 1);
        let lm = project_labels(&ident, &[2, 0, 1], 3).unwrap();
        assert_eq!(lm.labels(), &[2, 0, 1]);

        assert!(project_labels(&ident, &[2, 0, 3], 3).is_err());
        assert!(project_labels(&ident, &[0, 1], 3).is_err());
    }

    #[test]
    fn project_labels_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let part = random_partition(&mut rng, 9, 7, 6);
        let seg_labels: Vec<u16> = (0..part.segment_count()).map(|_| rng.gen_range(0..4)).collect();
        let lm = project_labels(&part, &seg_labels, 4).unwrap();
        for y in 0..7 {
            for x in 0..9 {
                assert_eq!(lm.label_at(x, y), seg_labels[part.label_at(x, y) as usize]);
            }
        }
    }

    #[test]
    fn quantization_perfect_partition_scores_one() {
        let gt = LabelMap::new(4, 2, vec![0, 0, 1, 1, 0, 0, 1, 1], 2).unwrap();
        let part =
            SuperpixelPartition::from_labels(4, 2, vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
        let q = quantization_error(&part, &gt).unwrap();
        assert_eq!(q.best_pixel_accuracy, 1.0);
        assert_eq!(q.best_iou, 1.0);
    }

    #[test]
    fn quantization_majority_vote_forced() {
        // Single segment over 60% class 0, 40% class 1.
        let labels: Vec<u16> = (0..10).map(|i| if i < 6 { 0 } else { 1 }).collect();
        let gt = LabelMap::new(10, 1, labels, 2).unwrap();
        let part = SuperpixelPartition::from_labels(10, 1, vec![0; 10]).unwrap();
        let q = quantization_error(&part, &gt).unwrap();
        assert!((q.best_pixel_accuracy - 0.6).abs() < 1e-15);
    }

    #[test]
    fn quantization_singletons_always_perfect() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<u16> = (0..48).map(|_| rng.gen_range(0..5)).collect();
        let gt = LabelMap::new(8, 6, labels, 5).unwrap();
        let q = quantization_error(&SuperpixelPartition::singletons(8, 6), &gt).unwrap();
        assert_eq!(q.best_pixel_accuracy, 1.0);
        assert_eq!(q.best_iou, 1.0);
    }

    #[test]
    fn quantization_ties_take_smallest_class() {
        let gt = LabelMap::new(2, 1, vec![2, 1], 3).unwrap();
        let part = SuperpixelPartition::from_labels(2, 1, vec![0, 0]).unwrap();
        assert_eq!(majority_labels(&part, &gt).unwrap(), vec![1]);
    }

    #[test]
    fn quantization_monotone_along_nested_refinements() {
        // Coarsen a partition by merging segment ids; accuracy must not rise.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let gt_labels: Vec<u16> = (0..16 * 16)
            .map(|p| if (p % 16) < 8 { 0 } else { 1 })
            .collect();
        let gt = LabelMap::new(16, 16, gt_labels, 2).unwrap();
        let fine = random_partition(&mut rng, 16, 16, 24);
        let mut prev = quantization_error(&fine, &gt).unwrap().best_pixel_accuracy;
        let mut current = fine;
        while current.segment_count() > 1 {
            // Merge two random ids into one (a coarsening the old partition refines).
            let m = current.segment_count();
            let a = rng.gen_range(0..m as u32);
            let mut b = rng.gen_range(0..m as u32);
            while b == a {
                b = rng.gen_range(0..m as u32);
            }
            let (keep, drop) = (a.min(b), a.max(b));
            let labels: Vec<u32> = current
                .labels()
                .iter()
                .map(|&l| {
                    let l = if l == drop { keep } else { l };
                    if l > drop { l - 1 } else { l }
                })
                .collect();
            current = SuperpixelPartition::from_labels(16, 16, labels).unwrap();
            let acc = quantization_error(&current, &gt).unwrap().best_pixel_accuracy;
            assert!(acc <= prev + 1e-15, "coarsening improved accuracy");
            prev = acc;
        }
    }

    #[test]
    fn merge_trivial_cases() {
        let part = SuperpixelPartition::from_labels(2, 1, vec![0, 1]).unwrap();
        let feats = Mat::from_rows(&[vec![0.0], vec![1.0]]);
        let merged = agglomerative_merge(&part, &feats, 1).unwrap();
        assert_eq!(merged.segment_count(), 1);
        assert_eq!(merged.sizes(), &[2]);

        let same = agglomerative_merge(&part, &feats, 2).unwrap();
        assert_eq!(same.labels(), part.labels());

        assert!(agglomerative_merge(&part, &feats, 0).is_err());
        assert!(agglomerative_merge(&part, &feats, 3).is_err());
    }

    #[test]
    fn merge_order_matches_nearest_pair_simulation() {
        // 5 single-pixel segments on a line with hand-placed 1-d features.
        let part = SuperpixelPartition::singletons(5, 1);
        let feats = Mat::from_rows(&[
            vec![0.0],
            vec![0.1],
            vec![0.25],
            vec![0.6],
            vec![1.0],
        ]);
        // Exhaustive simulation: (0,1) merge at 0.05 -> (0,2) at ~0.117 ->
        // (3,4) merge -> two clusters {0,1,2} and {3,4}.
        let merged = agglomerative_merge(&part, &feats, 2).unwrap();
        assert_eq!(merged.labels(), &[0, 0, 0, 1, 1]);
        let merged3 = agglomerative_merge(&part, &feats, 3).unwrap();
        assert_eq!(merged3.labels(), &[0, 0, 0, 1, 2]);

        // Independent brute-force oracle over random instances.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let m = rng.gen_range(3..9usize);
            let part = SuperpixelPartition::singletons(m, 1);
            let feats = Mat::from_fn(m, 2, |_, _| rng.gen::<f64>());
            let target = rng.gen_range(1..=m);
            let got = agglomerative_merge(&part, &feats, target).unwrap();

            // Oracle: explicit member lists, full rescan each round.
            let mut clusters: Vec<(Vec<usize>, Vec<f64>, f64)> =
                (0..m).map(|i| (vec![i], feats.row(i).to_vec(), 1.0)).collect();
            while clusters.len() > target {
                let mut best = (f64::INFINITY, 0, 0);
                for i in 0..clusters.len() {
                    for j in i + 1..clusters.len() {
                        let d: f64 = clusters[i]
                            .1
                            .iter()
                            .zip(&clusters[j].1)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        if d < best.0 {
                            best = (d, i, j);
                        }
                    }
                }
                let (_, i, j) = best;
                let (mj, fj, sj) = clusters.remove(j);
                let (mi, fi, si) = clusters[i].clone();
                let f: Vec<f64> = fi
                    .iter()
                    .zip(&fj)
                    .map(|(a, b)| (si * a + sj * b) / (si + sj))
                    .collect();
                let mut members = mi;
                members.extend(mj);
                clusters[i] = (members, f, si + sj);
            }
            // Clusters sorted by smallest member id define the compact ids.
            let mut sorted: Vec<Vec<usize>> = clusters.into_iter().map(|c| c.0).collect();
            for c in &mut sorted {
                c.sort_unstable();
            }
            sorted.sort_by_key(|c| c[0]);
            for (new_id, members) in sorted.iter().enumerate() {
                for &px in members {
                    assert_eq!(got.labels()[px], new_id as u32, "seed mismatch");
                }
            }
        }
    }

    #[test]
    fn merge_conserves_pixels_and_reduces_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let part = random_partition(&mut rng, 12, 10, 9);
        let img = random_image(&mut rng, 12, 10);
        let feats = mean_features(&img, &part, FeatureKind::PositionColor).unwrap();
        let m = part.segment_count();
        let merged = agglomerative_merge(&part, &feats, 4).unwrap();
        assert_eq!(merged.segment_count(), 4);
        assert_eq!(m - 4, m - merged.segment_count());
        assert_eq!(
            merged.sizes().iter().map(|&s| s as usize).sum::<usize>(),
            12 * 10
        );
        merged.validate().unwrap();
    }

    #[test]
    fn partition_pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("part.pgm");
        let part = SuperpixelPartition::from_labels(3, 2, vec![0, 0, 1, 2, 2, 1]).unwrap();
        part.write_pgm(&path).unwrap();
        let back = SuperpixelPartition::read_pgm(&path).unwrap();
        assert_eq!(part, back);
    }

    #[test]
    fn boundary_overlay_marks_edges() {
        let img = Image::new(4, 1);
        let part = SuperpixelPartition::from_labels(4, 1, vec![0, 0, 1, 1]).unwrap();
        let overlay = part.boundary_overlay(&img, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(overlay.pixel(1, 0), [1.0, 0.0, 0.0]);
        assert_eq!(overlay.pixel(0, 0), [0.0, 0.0, 0.0]);
    }
}
