//! Subcommand implementations.

pub mod cluster_sweep;
pub mod eval;
pub mod filter;
pub mod gradcheck;
pub mod quant_sweep;
pub mod superpixels;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use bi_core::image::{Image, LabelMap};
use bi_core::{Error, Result};

/// Loads a dataset directory of `<stem>.ppm` images paired with `<stem>.pgm`
/// ground truth, sorted by stem for a deterministic order.
pub fn load_dataset(dir: &Path) -> Result<Vec<(String, Image, LabelMap)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut stems: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("ppm") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    if stems.is_empty() {
        return Err(Error::invalid(format!("no .ppm images in {}", dir.display())));
    }
    let mut out = Vec::with_capacity(stems.len());
    for stem in stems {
        let img = Image::read_ppm(dir.join(format!("{stem}.ppm")))?;
        let gt = LabelMap::read_pgm(dir.join(format!("{stem}.pgm")))?;
        if img.width() != gt.width() || img.height() != gt.height() {
            return Err(Error::invalid(format!(
                "{stem}: image is {}x{} but ground truth is {}x{}",
                img.width(),
                img.height(),
                gt.width(),
                gt.height()
            )));
        }
        out.push((stem, img, gt));
    }
    Ok(out)
}

/// Writes CSV lines; floats formatted with full round-trip precision.
pub fn write_csv(path: &PathBuf, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
