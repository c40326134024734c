//! `bi filter`: run one multi-scale module over `BIMX` tensors, with an
//! optional per-scale superpixel rendering.

use std::path::PathBuf;

use serde::Serialize;

use bi_core::image::Image;
use bi_core::inception;
use bi_core::mat::Mat;
use bi_core::superpixel::SuperpixelPartition;

use crate::manifest::{ensure_out_dir, RunManifest, Stopwatch};
use crate::CliError;

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Input-point features (BIMX, P x D).
    #[arg(long)]
    pub features: PathBuf,
    /// Output-point features (BIMX, Q x D); defaults to --features.
    #[arg(long)]
    pub features_out: Option<PathBuf>,
    /// Activations to filter (BIMX, P x C).
    #[arg(long)]
    pub activations: PathBuf,
    /// Module parameter manifest (JSON with lambda/weights tensors).
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also render one grayscale PPM per scale (requires --partition).
    #[arg(long)]
    pub viz: bool,
    /// Segment map (PGM) used to paint per-scale outputs.
    #[arg(long)]
    pub partition: Option<PathBuf>,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut watch = Stopwatch::new();
    let f_in = Mat::read_bimx(&args.features)?;
    let f_out = match &args.features_out {
        Some(p) => Mat::read_bimx(p)?,
        None => f_in.clone(),
    };
    let z = Mat::read_bimx(&args.activations)?;
    let params = inception::load_params(&args.params)?;

    if f_in.cols() != params.feature_dims() || f_out.cols() != params.feature_dims() {
        return Err(CliError::invalid(format!(
            "features have {} / {} dims but lambda in {} is {d}x{d}",
            f_in.cols(),
            f_out.cols(),
            args.params.display(),
            d = params.feature_dims(),
        )));
    }
    if z.rows() != f_in.rows() {
        return Err(CliError::invalid(format!(
            "activations {} has {} rows but features {} has {}",
            args.activations.display(),
            z.rows(),
            args.features.display(),
            f_in.rows()
        )));
    }
    if z.cols() != params.channels() {
        return Err(CliError::invalid(format!(
            "activations {} has {} channels but weights in {} expect {}",
            args.activations.display(),
            z.cols(),
            args.params.display(),
            params.channels()
        )));
    }
    let part = match (&args.viz, &args.partition) {
        (true, Some(p)) => {
            let part = SuperpixelPartition::read_pgm(p)?;
            if part.segment_count() != f_out.rows() {
                return Err(CliError::invalid(format!(
                    "partition {} has {} segments but output features have {} rows",
                    p.display(),
                    part.segment_count(),
                    f_out.rows()
                )));
            }
            Some(part)
        }
        (true, None) => {
            return Err(CliError::invalid("--viz requires --partition"));
        }
        _ => None,
    };
    watch.mark("load");

    let (out, cache) = inception::forward(&z, &f_in, &f_out, &params)?;
    watch.mark("filter");

    ensure_out_dir(&args.out_dir)?;
    let out_path = args.out_dir.join("filtered.bimx");
    out.write_bimx(&out_path)?;

    let mut manifest = RunManifest::new("filter", serde_json::to_value(args).unwrap());
    manifest.input(&args.features);
    manifest.input(&args.activations);
    manifest.input(&args.params);
    manifest.output(&out_path);

    if let Some(part) = part {
        for (h, zh) in cache.scale_outputs.iter().enumerate() {
            let viz_path = args.out_dir.join(format!("scale_{h}.ppm"));
            render_segments(&part, zh).write_ppm(&viz_path)?;
            manifest.output(&viz_path);
        }
    }
    watch.mark("write");

    manifest.stat("P", z.rows());
    manifest.stat("Q", out.rows());
    manifest.stat("H", params.scale_count());
    manifest.write(&args.out_dir, watch)?;
    Ok(())
}

/// Paints every segment with its first-channel value, min-max mapped to gray.
fn render_segments(part: &SuperpixelPartition, values: &Mat) -> Image {
    let (min, max) = values
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if max > min { max - min } else { 1.0 };
    Image::from_fn(part.width(), part.height(), |x, y| {
        let v = values.get(part.label_at(x, y) as usize, 0);
        let g = ((v - min) / span).clamp(0.0, 1.0);
        [g, g, g]
    })
}
