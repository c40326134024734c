//! `bi superpixels`: partition PGM, boundary-overlay PPM, and stats.

use std::path::PathBuf;

use serde::Serialize;

use bi_core::image::Image;
use bi_core::superpixel;

use crate::manifest::{ensure_out_dir, RunManifest, Stopwatch};
use crate::CliError;

const BOUNDARY_COLOR: [f64; 3] = [1.0, 0.0, 0.0];

#[derive(clap::Args, Serialize)]
pub struct Args {
    /// Input PPM (P6) image.
    #[arg(long)]
    pub input: PathBuf,
    /// Target superpixel count.
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 10.0)]
    pub compactness: f64,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut watch = Stopwatch::new();
    let img = Image::read_ppm(&args.input)?;
    watch.mark("load");

    let part = superpixel::slic(&img, args.count, args.compactness, args.iters)?;
    let overlay = part.boundary_overlay(&img, BOUNDARY_COLOR)?;
    watch.mark("slic");

    ensure_out_dir(&args.out_dir)?;
    let part_path = args.out_dir.join("partition.pgm");
    let overlay_path = args.out_dir.join("overlay.ppm");
    part.write_pgm(&part_path)?;
    overlay.write_ppm(&overlay_path)?;
    watch.mark("write");

    let mut manifest = RunManifest::new("superpixels", serde_json::to_value(args).unwrap());
    manifest.input(&args.input);
    manifest.output(&part_path);
    manifest.output(&overlay_path);
    manifest.stat("M", part.segment_count());
    manifest.write(&args.out_dir, watch)?;
    Ok(())
}
