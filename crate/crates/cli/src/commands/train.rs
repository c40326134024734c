//! `bi train`: train the toy network on a dataset directory and write a
//! checkpoint plus per-epoch metrics.

use std::path::PathBuf;

use serde::Serialize;

use bi_core::network::{checkpoint, train_toy, TrainConfig};
use bi_core::{fmt_f64, Error};

use crate::manifest::{ensure_out_dir, RunManifest, Stopwatch};
use crate::CliError;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Training configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Dataset directory of paired <stem>.ppm / <stem>.pgm files.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override the config's main-phase epoch count.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut watch = Stopwatch::new();
    let text = std::fs::read_to_string(&args.config).map_err(|e| Error::io(&args.config, e))?;
    let mut config = TrainConfig::from_json(&text)?;
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let dataset = super::load_dataset(&args.input)?;
    let pairs: Vec<_> = dataset.iter().map(|(_, img, gt)| (img.clone(), gt.clone())).collect();
    watch.mark("load");

    let outcome = train_toy(&config, &pairs)?;
    watch.mark("train");

    ensure_out_dir(&args.out_dir)?;
    let ckpt_dir = args.out_dir.join("checkpoint");
    checkpoint::save_checkpoint(&ckpt_dir, &outcome.net, &config)?;
    let metrics_path = args.out_dir.join("metrics.csv");
    let rows: Vec<Vec<String>> = outcome
        .metrics
        .iter()
        .map(|m| vec![m.epoch.to_string(), fmt_f64(m.loss), fmt_f64(m.mean_iou)])
        .collect();
    super::write_csv(&metrics_path, "epoch,loss,meanIoU", &rows)?;
    watch.mark("write");

    let mut manifest = RunManifest::new("train", serde_json::to_value(args).unwrap());
    manifest.seed = Some(config.seed);
    manifest.input(&args.config);
    manifest.input(&args.input);
    manifest.output(&ckpt_dir);
    manifest.output(&metrics_path);
    manifest.stat("images", pairs.len());
    manifest.stat("epochs", config.warmup_epochs + config.epochs);
    if let Some(last) = outcome.metrics.last() {
        manifest.stat("finalLoss", last.loss);
        manifest.stat("finalMeanIoU", last.mean_iou);
    }
    manifest.write(&args.out_dir, watch)?;
    Ok(())
}
