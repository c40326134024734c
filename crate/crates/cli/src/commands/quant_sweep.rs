//! `bi quant-sweep`: best-achievable scores along a nested superpixel
//! hierarchy. The finest level comes from SLIC at the largest requested
//! count; coarser levels are agglomerative merges of it, so each level
//! refines the next and the scores are monotone in M by construction.

use std::path::PathBuf;

use serde::Serialize;

use bi_core::image::{Image, LabelMap};
use bi_core::superpixel::{self, FeatureKind};
use bi_core::{fmt_f64, Error};

use crate::manifest::{ensure_out_dir, RunManifest, Stopwatch};
use crate::CliError;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Input PPM image(s); repeat the flag for multiple images.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Ground-truth PGM per input, in the same order.
    #[arg(long = "gt", required = true)]
    pub gts: Vec<PathBuf>,
    /// Superpixel counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 10.0)]
    pub compactness: f64,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut watch = Stopwatch::new();
    if args.inputs.len() != args.gts.len() {
        return Err(CliError::invalid(format!(
            "{} images but {} ground-truth maps",
            args.inputs.len(),
            args.gts.len()
        )));
    }
    if args.counts.iter().any(|&c| c == 0) {
        return Err(CliError::invalid("superpixel counts must be positive"));
    }
    let mut pairs: Vec<(Image, LabelMap)> = Vec::new();
    for (img_path, gt_path) in args.inputs.iter().zip(&args.gts) {
        let img = Image::read_ppm(img_path)?;
        let gt = LabelMap::read_pgm(gt_path)?;
        if img.width() != gt.width() || img.height() != gt.height() {
            return Err(CliError::Core(Error::invalid(format!(
                "{}: image is {}x{} but ground truth is {}x{}",
                img_path.display(),
                img.width(),
                img.height(),
                gt.width(),
                gt.height()
            ))));
        }
        pairs.push((img, gt));
    }
    watch.mark("load");

    let mut rows: Vec<Vec<String>> = Vec::new();
    if !args.counts.is_empty() {
        let finest = *args.counts.iter().max().unwrap();
        let mut sorted = args.counts.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        for (img, gt) in &pairs {
            let mut image_rows = Vec::new();
            let mut part = superpixel::slic(img, finest, args.compactness, args.iters)?;
            for &count in &sorted {
                if count < part.segment_count() {
                    let feats = superpixel::mean_features(img, &part, FeatureKind::PositionColor)?;
                    part = superpixel::agglomerative_merge(&part, &feats, count)?;
                }
                let score = superpixel::quantization_error(&part, gt)?;
                image_rows.push(vec![
                    part.segment_count().to_string(),
                    fmt_f64(score.best_pixel_accuracy),
                    fmt_f64(score.best_iou),
                ]);
            }
            image_rows.reverse(); // ascending M per image
            rows.extend(image_rows);
        }
    }
    watch.mark("sweep");

    ensure_out_dir(&args.out_dir)?;
    let csv_path = args.out_dir.join("quant_sweep.csv");
    super::write_csv(&csv_path, "M,bestPixelAccuracy,bestIoU", &rows)?;
    watch.mark("write");

    let mut manifest = RunManifest::new("quant-sweep", serde_json::to_value(args).unwrap());
    for p in args.inputs.iter().chain(&args.gts) {
        manifest.input(p);
    }
    manifest.output(&csv_path);
    manifest.stat("rows", rows.len());
    manifest.write(&args.out_dir, watch)?;
    Ok(())
}
