//! SLIC superpixels: local k-means in joint color/position space followed by
//! a connectivity-enforcement pass.

use crate::error::{Error, Result};
use crate::image::Image;

use super::SuperpixelPartition;

#[derive(Clone, Copy)]
struct Center {
    x: f64,
    y: f64,
    rgb: [f64; 3],
}

/// Segments `img` into roughly `target_count` compact superpixels.
///
/// Color distances are measured on a 0..255 scale so the conventional
/// compactness range (around 10) balances color and position the usual way.
/// The result is deterministic for fixed inputs: ties in the assignment step
/// keep the lowest center index, and the post-pass absorbs every orphan
/// (non-largest) connected component of a cluster into the largest adjacent
/// segment.
pub fn slic(
    img: &Image,
    target_count: usize,
    compactness: f64,
    iterations: usize,
) -> Result<SuperpixelPartition> {
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    if target_count == 0 {
        return Err(Error::invalid("superpixel count must be positive"));
    }
    if target_count > n {
        return Err(Error::invalid(format!(
            "superpixel count {target_count} exceeds pixel count {n}"
        )));
    }
    if !(compactness > 0.0) || !compactness.is_finite() {
        return Err(Error::invalid("compactness must be a positive real"));
    }
    if iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }

    // Color on a 0..100 scale (the magnitude classic compactness values are
    // calibrated for), position in pixels. The color field is lightly
    // smoothed before distance computation so per-pixel noise does not
    // dominate the joint metric; labels still cover the raw pixels.
    let colors: Vec<[f64; 3]> = (0..n)
        .map(|p| {
            let rgb = img.pixel(p % w, p / w);
            [rgb[0] * 100.0, rgb[1] * 100.0, rgb[2] * 100.0]
        })
        .collect();
    let colors = smooth_colors(&colors, w, h);

    let mut centers = seed_grid(&colors, w, h, target_count);
    perturb_to_lowest_gradient(&mut centers, &colors, w, h);

    let s = (n as f64 / target_count as f64).sqrt();
    let spatial_weight = (compactness / s) * (compactness / s);
    let reach = (2.0 * s).ceil() as isize;

    let mut labels = vec![u32::MAX; n];
    let mut dists = vec![f64::INFINITY; n];
    for _ in 0..iterations {
        dists.fill(f64::INFINITY);
        for (k, c) in centers.iter().enumerate() {
            let x0 = ((c.x as isize) - reach).max(0) as usize;
            let x1 = ((c.x as isize) + reach).min(w as isize - 1) as usize;
            let y0 = ((c.y as isize) - reach).max(0) as usize;
            let y1 = ((c.y as isize) + reach).min(h as isize - 1) as usize;
            for y in y0..=y1 {
                let dy = y as f64 - c.y;
                for x in x0..=x1 {
                    let p = y * w + x;
                    let rgb = colors[p];
                    let dr = rgb[0] - c.rgb[0];
                    let dg = rgb[1] - c.rgb[1];
                    let db = rgb[2] - c.rgb[2];
                    let dx = x as f64 - c.x;
                    let d = dr * dr + dg * dg + db * db + spatial_weight * (dx * dx + dy * dy);
                    if d < dists[p] {
                        dists[p] = d;
                        labels[p] = k as u32;
                    }
                }
            }
        }

        // Recompute centers as the mean of their assigned pixels.
        let mut acc = vec![[0.0f64; 6]; centers.len()];
        for (p, &l) in labels.iter().enumerate() {
            let a = &mut acc[l as usize];
            a[0] += (p % w) as f64;
            a[1] += (p / w) as f64;
            a[2] += colors[p][0];
            a[3] += colors[p][1];
            a[4] += colors[p][2];
            a[5] += 1.0;
        }
        for (c, a) in centers.iter_mut().zip(&acc) {
            if a[5] > 0.0 {
                c.x = a[0] / a[5];
                c.y = a[1] / a[5];
                c.rgb = [a[2] / a[5], a[3] / a[5], a[4] / a[5]];
            }
        }
    }

    let labels = enforce_connectivity(&labels, w, h);
    SuperpixelPartition::from_labels(w, h, labels)
}

/// Grid positions of the initial cluster centers for the given target count;
/// exposed for tests that bound centroid drift.
pub(crate) fn seed_positions(w: usize, h: usize, target_count: usize) -> Vec<(usize, usize)> {
    let k = target_count as f64;
    let mut nx = (k * w as f64 / h as f64).sqrt().ceil() as usize;
    nx = nx.clamp(1, w);
    let mut ny = ((k / nx as f64).ceil() as usize).clamp(1, h);
    // Rebalance so nx*ny stays close to the target when ny was clamped.
    nx = ((target_count + ny - 1) / ny).clamp(1, w);
    ny = ((target_count + nx - 1) / nx).clamp(1, h);
    let mut seeds = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let cx = (((gx as f64 + 0.5) * w as f64 / nx as f64) as usize).min(w - 1);
            let cy = (((gy as f64 + 0.5) * h as f64 / ny as f64) as usize).min(h - 1);
            seeds.push((cx, cy));
        }
    }
    seeds
}

/// Two passes of a separable binomial [1 2 1]/4 filter with clamped borders.
fn smooth_colors(colors: &[[f64; 3]], w: usize, h: usize) -> Vec<[f64; 3]> {
    if w < 3 || h < 3 {
        return colors.to_vec();
    }
    let mut tmp = vec![[0.0f64; 3]; colors.len()];
    for pass in 0..1 {
        let src: &[[f64; 3]] = if pass == 0 { colors } else { &tmp };
        let mut horiz = vec![[0.0f64; 3]; colors.len()];
        for y in 0..h {
            for x in 0..w {
                let xl = x.saturating_sub(1);
                let xr = (x + 1).min(w - 1);
                for ch in 0..3 {
                    horiz[y * w + x][ch] = 0.25
                        * (src[y * w + xl][ch] + 2.0 * src[y * w + x][ch] + src[y * w + xr][ch]);
                }
            }
        }
        for y in 0..h {
            let yu = y.saturating_sub(1);
            let yd = (y + 1).min(h - 1);
            for x in 0..w {
                for ch in 0..3 {
                    tmp[y * w + x][ch] = 0.25
                        * (horiz[yu * w + x][ch]
                            + 2.0 * horiz[y * w + x][ch]
                            + horiz[yd * w + x][ch]);
                }
            }
        }
    }
    tmp
}

fn seed_grid(colors: &[[f64; 3]], w: usize, h: usize, target_count: usize) -> Vec<Center> {
    seed_positions(w, h, target_count)
        .into_iter()
        .map(|(cx, cy)| Center { x: cx as f64, y: cy as f64, rgb: colors[cy * w + cx] })
        .collect()
}

/// Moves each seed to the lowest-gradient pixel in its 3x3 neighborhood so
/// seeds do not start on an edge. No-op for images thinner than 3 pixels.
fn perturb_to_lowest_gradient(centers: &mut [Center], colors: &[[f64; 3]], w: usize, h: usize) {
    if w < 3 || h < 3 {
        return;
    }
    let grad = |x: usize, y: usize| -> f64 {
        let x = x.clamp(1, w - 2);
        let y = y.clamp(1, h - 2);
        let mut g = 0.0;
        for ch in 0..3 {
            let dx = colors[y * w + x + 1][ch] - colors[y * w + x - 1][ch];
            let dy = colors[(y + 1) * w + x][ch] - colors[(y - 1) * w + x][ch];
            g += dx * dx + dy * dy;
        }
        g
    };
    for c in centers.iter_mut() {
        let (sx, sy) = (c.x as usize, c.y as usize);
        let mut best = (grad(sx, sy), sx, sy);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let nx = (sx as i64 + dx).clamp(1, w as i64 - 2) as usize;
                let ny = (sy as i64 + dy).clamp(1, h as i64 - 2) as usize;
                let g = grad(nx, ny);
                if g < best.0 {
                    best = (g, nx, ny);
                }
            }
        }
        c.x = best.1 as f64;
        c.y = best.2 as f64;
        c.rgb = colors[best.2 * w + best.1];
    }
}

/// Connected-component cleanup: for every cluster the largest 4-connected
/// component keeps the cluster; all other components are absorbed into the
/// largest adjacent settled segment (ties toward the smallest id). Ids are
/// compacted to 0..M in first-pixel scan order.
fn enforce_connectivity(labels: &[u32], w: usize, h: usize) -> Vec<u32> {
    let n = w * h;

    // 4-connected component labeling in row-major scan order.
    let mut comp = vec![usize::MAX; n];
    let mut comp_label = Vec::new();
    let mut comp_pixels: Vec<Vec<usize>> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comp_label.len();
        let label = labels[start];
        comp_label.push(label);
        comp_pixels.push(Vec::new());
        stack.push(start);
        comp[start] = id;
        while let Some(p) = stack.pop() {
            comp_pixels[id].push(p);
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if comp[q] == usize::MAX && labels[q] == label {
                    comp[q] = id;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
    }

    let comp_count = comp_label.len();
    // The main component of each cluster is its largest one (first-scanned on
    // size ties); everything else is an orphan.
    let max_label = comp_label.iter().copied().max().unwrap_or(0) as usize;
    let mut main_of_label = vec![usize::MAX; max_label + 1];
    for id in 0..comp_count {
        let l = comp_label[id] as usize;
        let cur = main_of_label[l];
        if cur == usize::MAX || comp_pixels[id].len() > comp_pixels[cur].len() {
            main_of_label[l] = id;
        }
    }

    let mut parent: Vec<usize> = (0..comp_count).collect();
    let mut seg_size: Vec<usize> = comp_pixels.iter().map(|p| p.len()).collect();
    let mut settled: Vec<bool> = (0..comp_count)
        .map(|id| main_of_label[comp_label[id] as usize] == id)
        .collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let mut queue: Vec<usize> = (0..comp_count).filter(|&id| !settled[id]).collect();
    while !queue.is_empty() {
        let mut deferred = Vec::new();
        let mut progressed = false;
        for &orphan in &queue {
            // Largest settled adjacent segment; ties toward the smaller root id.
            let mut best: Option<(usize, usize)> = None; // (size, root)
            for &p in &comp_pixels[orphan] {
                let (x, y) = (p % w, p / w);
                let mut consider = |q: usize| {
                    let c = comp[q];
                    if c == orphan {
                        return;
                    }
                    let root = find(&mut parent, c);
                    if !settled[root] || root == orphan {
                        return;
                    }
                    let size = seg_size[root];
                    let better = match best {
                        None => true,
                        Some((bs, br)) => size > bs || (size == bs && root < br),
                    };
                    if better {
                        best = Some((size, root));
                    }
                };
                if x > 0 {
                    consider(p - 1);
                }
                if x + 1 < w {
                    consider(p + 1);
                }
                if y > 0 {
                    consider(p - w);
                }
                if y + 1 < h {
                    consider(p + w);
                }
            }
            match best {
                Some((_, root)) => {
                    parent[orphan] = root;
                    seg_size[root] += comp_pixels[orphan].len();
                    settled[orphan] = true;
                    progressed = true;
                }
                None => deferred.push(orphan),
            }
        }
        if !progressed {
            // Cannot happen on a connected grid with at least one main
            // component, but never loop forever.
            break;
        }
        queue = deferred;
    }

    // Compact surviving roots in first-pixel scan order.
    let mut new_id = vec![u32::MAX; comp_count];
    let mut next = 0u32;
    let mut out = vec![0u32; n];
    for p in 0..n {
        let root = find(&mut parent, comp[p]);
        if new_id[root] == u32::MAX {
            new_id[root] = next;
            next += 1;
        }
        out[p] = new_id[root];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpixel::{mean_features, FeatureKind};

    #[test]
    fn single_pixel_single_segment() {
        let img = Image::new(1, 1);
        let part = slic(&img, 1, 10.0, 10).unwrap();
        assert_eq!(part.segment_count(), 1);
        assert_eq!(part.sizes(), &[1]);
    }

    #[test]
    fn rejects_bad_arguments() {
        let img = Image::new(4, 4);
        assert!(slic(&img, 0, 10.0, 10).is_err());
        assert!(slic(&img, 17, 10.0, 10).is_err());
        assert!(slic(&img, 4, 0.0, 10).is_err());
        assert!(slic(&img, 4, 10.0, 0).is_err());
    }

    #[test]
    fn uniform_image_keeps_grid_seeds() {
        let img = Image::from_fn(64, 64, |_, _| [0.3, 0.6, 0.9]);
        let part = slic(&img, 16, 10.0, 10).unwrap();
        assert_eq!(part.segment_count(), 16);
        part.validate().unwrap();

        // With no color signal the assignment is a spatial Voronoi of the
        // seeds, so each centroid stays within 4 px of its seed.
        let feats = mean_features(&img, &part, FeatureKind::Position).unwrap();
        let seeds = seed_positions(64, 64, 16);
        assert_eq!(seeds.len(), 16);
        for i in 0..16 {
            let cx = feats.get(i, 0) * 64.0;
            let cy = feats.get(i, 1) * 64.0;
            let hit = seeds
                .iter()
                .any(|&(sx, sy)| (cx - sx as f64).abs() <= 4.0 && (cy - sy as f64).abs() <= 4.0);
            assert!(hit, "centroid ({cx:.1},{cy:.1}) drifted from every seed");
        }
    }

    #[test]
    fn two_color_halves_split_on_the_edge() {
        let img = Image::from_fn(64, 64, |x, _| {
            if x < 32 {
                [1.0, 0.0, 0.0]
            } else {
                [0.0, 0.0, 1.0]
            }
        });
        let part = slic(&img, 2, 10.0, 10).unwrap();
        assert_eq!(part.segment_count(), 2);
        for y in 0..64 {
            // The first column whose label differs from column 0.
            let base = part.label_at(0, y);
            let boundary = (1..64)
                .find(|&x| part.label_at(x, y) != base)
                .expect("row never changes segment");
            assert!(
                (boundary as i64 - 32).abs() <= 1,
                "row {y} crosses at {boundary}"
            );
        }
    }

    #[test]
    fn deterministic_for_fixed_inputs() {
        let img = Image::from_fn(40, 30, |x, y| {
            [
                ((x * 7 + y * 3) % 11) as f64 / 10.0,
                ((x * 5 + y * 13) % 7) as f64 / 6.0,
                ((x + y) % 5) as f64 / 4.0,
            ]
        });
        let a = slic(&img, 12, 10.0, 10).unwrap();
        let b = slic(&img, 12, 10.0, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn segments_are_four_connected() {
        let img = Image::from_fn(48, 48, |x, y| {
            let noise = ((x * 31 + y * 17) % 13) as f64 / 13.0;
            let blob = if (x as i64 - 24).pow(2) + (y as i64 - 20).pow(2) < 100 {
                0.8
            } else {
                0.0
            };
            [noise * 0.3 + blob, 0.5 - noise * 0.2, blob]
        });
        let part = slic(&img, 20, 10.0, 10).unwrap();
        part.validate().unwrap();
        let m = part.segment_count();
        assert!(m >= 10 && m <= 40, "M = {m} far from target 20");

        // Flood fill each segment from its first pixel and verify coverage.
        let (w, h) = (48, 48);
        let mut seen_root = vec![false; m];
        let mut visited = vec![false; w * h];
        for start in 0..w * h {
            let l = part.labels()[start] as usize;
            if visited[start] {
                continue;
            }
            assert!(!seen_root[l], "segment {l} has a second component");
            seen_root[l] = true;
            let mut stack = vec![start];
            visited[start] = true;
            while let Some(p) = stack.pop() {
                let (x, y) = (p % w, p / w);
                for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if !visited[q] && part.labels()[q] as usize == l {
                        visited[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
    }

    #[test]
    fn segment_count_stays_near_target() {
        let img = Image::from_fn(96, 64, |x, y| {
            [
                (x as f64 / 96.0 * 6.0).sin().abs(),
                (y as f64 / 64.0 * 4.0).cos().abs(),
                ((x + y) as f64 / 40.0).sin().abs(),
            ]
        });
        for &k in &[8usize, 50, 200] {
            let part = slic(&img, k, 10.0, 10).unwrap();
            let m = part.segment_count();
            assert!(
                m >= k / 2 && m <= 2 * k,
                "target {k} produced {m} segments"
            );
        }
    }
}
