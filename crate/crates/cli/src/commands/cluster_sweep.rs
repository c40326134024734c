//! `bi cluster-sweep`: evaluate a trained checkpoint on progressively merged
//! superpixels without retraining, one CSV row per requested count.
//!
//! Counts must be descending; per image, each count is clamped to the current
//! segment count (a count at or above it evaluates the unmerged partition).

use std::path::PathBuf;

use serde::Serialize;

use bi_core::image;
use bi_core::network::{checkpoint, predict_label_map, SpInstance};
use bi_core::superpixel::{self, FeatureKind};
use bi_core::fmt_f64;

use crate::manifest::{ensure_out_dir, RunManifest, Stopwatch};
use crate::CliError;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Checkpoint directory written by `bi train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset directory of paired <stem>.ppm / <stem>.pgm files.
    #[arg(long)]
    pub input: PathBuf,
    /// Descending superpixel counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut watch = Stopwatch::new();
    if args.counts.iter().any(|&c| c == 0) {
        return Err(CliError::invalid("target counts must be positive"));
    }
    if args.counts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::invalid(
            "target counts must be strictly descending (merging cannot split segments)",
        ));
    }
    let (net, config) = checkpoint::load_checkpoint(&args.checkpoint)?;
    let dataset = super::load_dataset(&args.input)?;
    watch.mark("load");

    // Per count, mean IoU over all images; partitions merge progressively.
    let mut per_count_sum = vec![0.0f64; args.counts.len()];
    for (_, img, gt) in &dataset {
        let mut part = superpixel::slic(
            img,
            config.superpixels.count,
            config.superpixels.compactness,
            config.superpixels.iterations,
        )?;
        for (ci, &count) in args.counts.iter().enumerate() {
            if count < part.segment_count() {
                let feats = superpixel::mean_features(img, &part, FeatureKind::PositionColor)?;
                part = superpixel::agglomerative_merge(&part, &feats, count)?;
            }
            let inst = SpInstance {
                feats_pos: superpixel::mean_features(img, &part, FeatureKind::Position)?,
                feats_poscol: superpixel::mean_features(img, &part, FeatureKind::PositionColor)?,
                targets: superpixel::majority_labels(&part, gt)?
                    .iter()
                    .map(|&t| t as usize)
                    .collect(),
                sp_weights: part.sizes().iter().map(|&s| s as f64).collect(),
                part: part.clone(),
                gt: gt.clone(),
            };
            let pred = predict_label_map(&net, &inst)?;
            per_count_sum[ci] += image::mean_iou(&pred, gt)?;
        }
    }
    watch.mark("sweep");

    ensure_out_dir(&args.out_dir)?;
    let rows: Vec<Vec<String>> = args
        .counts
        .iter()
        .zip(&per_count_sum)
        .map(|(&count, &sum)| vec![count.to_string(), fmt_f64(sum / dataset.len() as f64)])
        .collect();
    let csv_path = args.out_dir.join("cluster_sweep.csv");
    super::write_csv(&csv_path, "M,meanIoU", &rows)?;
    watch.mark("write");

    let mut manifest = RunManifest::new("cluster-sweep", serde_json::to_value(args).unwrap());
    manifest.input(&args.checkpoint);
    manifest.input(&args.input);
    manifest.output(&csv_path);
    manifest.stat("images", dataset.len());
    manifest.write(&args.out_dir, watch)?;
    Ok(())
}
