//! `bi eval`: load a checkpoint, predict every image in a dataset directory,
//! and write predicted label maps plus per-image and mean IoU.

use std::path::PathBuf;

use serde::Serialize;

use bi_core::image;
use bi_core::network::{checkpoint, predict_label_map, prepare_instance};
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
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut watch = Stopwatch::new();
    let (net, config) = checkpoint::load_checkpoint(&args.checkpoint)?;
    let dataset = super::load_dataset(&args.input)?;
    watch.mark("load");

    let mut predictions = Vec::with_capacity(dataset.len());
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(dataset.len() + 1);
    let mut sum = 0.0;
    for (stem, img, gt) in &dataset {
        let inst = prepare_instance(img, gt, &config.superpixels)?;
        let pred = predict_label_map(&net, &inst)?;
        let iou = image::mean_iou(&pred, gt)?;
        sum += iou;
        rows.push(vec![stem.clone(), fmt_f64(iou)]);
        predictions.push((stem.clone(), pred));
    }
    let mean_iou = sum / dataset.len() as f64;
    rows.push(vec!["mean".to_string(), fmt_f64(mean_iou)]);
    watch.mark("predict");

    ensure_out_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new("eval", serde_json::to_value(args).unwrap());
    manifest.input(&args.checkpoint);
    manifest.input(&args.input);
    for (stem, pred) in &predictions {
        let path = args.out_dir.join(format!("pred_{stem}.pgm"));
        pred.write_pgm(&path)?;
        manifest.output(&path);
    }
    let csv_path = args.out_dir.join("eval.csv");
    super::write_csv(&csv_path, "image,iou", &rows)?;
    manifest.output(&csv_path);
    watch.mark("write");

    manifest.stat("meanIoU", mean_iou);
    manifest.stat("images", dataset.len());
    manifest.write(&args.out_dir, watch)?;
    Ok(())
}
