//! RGB rasters, per-pixel label maps, and binary Netpbm i/o.
//!
//! Images are stored as `f64` RGB triples in `[0, 1]` (8-bit samples are
//! divided by the file's maxval on load). Label maps are written as binary
//! PGM (P5) with maxval 65535 and big-endian 16-bit samples.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An H×W RGB raster with channels in `[0, 1]`, row-major interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image { width, height, data: vec![0.0; width * height * 3] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Image { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Reads a binary PPM (P6) with maxval up to 255.
    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let header = read_netpbm_header(&mut r, path, b"P6")?;
        if header.maxval == 0 || header.maxval > 255 {
            return Err(Error::format(path, format!("unsupported P6 maxval {}", header.maxval)));
        }
        let mut raw = vec![0u8; header.width * header.height * 3];
        r.read_exact(&mut raw)
            .map_err(|_| Error::format(path, "truncated pixel data"))?;
        let scale = 1.0 / header.maxval as f64;
        let data = raw.iter().map(|&b| b as f64 * scale).collect();
        Ok(Image { width: header.width, height: header.height, data })
    }

    /// Writes a binary PPM (P6, maxval 255); channels are clamped to `[0, 1]`
    /// and rounded to the nearest 8-bit sample.
    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::io(path, e);
        write!(w, "P6\n{} {}\n255\n", self.width, self.height).map_err(io_err)?;
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        w.write_all(&bytes).map_err(io_err)?;
        w.flush().map_err(io_err)
    }
}

/// Per-pixel class ids in `[0, num_classes)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u16>,
    num_classes: usize,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u16>, num_classes: usize) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label map length {} does not match {}x{}",
                labels.len(),
                width,
                height
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(LabelMap { width, height, labels, num_classes })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn label_at(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    /// Reads a binary PGM (P5); the class count is the largest sample + 1.
    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (width, height, samples) = read_pgm16(path)?;
        let num_classes = samples.iter().copied().max().unwrap_or(0) as usize + 1;
        Ok(LabelMap { width, height, labels: samples, num_classes })
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        write_pgm16(path, self.width, self.height, &self.labels)
    }
}

/// Mean intersection-over-union across the classes present in `gt`.
pub fn mean_iou(pred: &LabelMap, gt: &LabelMap) -> Result<f64> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::invalid("label map dimensions differ"));
    }
    let classes = pred.num_classes.max(gt.num_classes);
    let mut inter = vec![0u64; classes];
    let mut pred_count = vec![0u64; classes];
    let mut gt_count = vec![0u64; classes];
    for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
        pred_count[p as usize] += 1;
        gt_count[g as usize] += 1;
        if p == g {
            inter[p as usize] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0u64;
    for c in 0..classes {
        if gt_count[c] == 0 {
            continue;
        }
        let union = pred_count[c] + gt_count[c] - inter[c];
        sum += inter[c] as f64 / union as f64;
        present += 1;
    }
    if present == 0 {
        return Err(Error::invalid("ground truth contains no pixels"));
    }
    Ok(sum / present as f64)
}

/// Fraction of pixels whose labels agree.
pub fn pixel_accuracy(pred: &LabelMap, gt: &LabelMap) -> Result<f64> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::invalid("label map dimensions differ"));
    }
    if pred.labels.is_empty() {
        return Err(Error::invalid("empty label maps"));
    }
    let hits = pred
        .labels
        .iter()
        .zip(&gt.labels)
        .filter(|(p, g)| p == g)
        .count();
    Ok(hits as f64 / pred.labels.len() as f64)
}

struct NetpbmHeader {
    width: usize,
    height: usize,
    maxval: usize,
}

/// Parses `<magic> <width> <height> <maxval>` with `#` comments, leaving the
/// reader positioned at the first byte of binary sample data.
fn read_netpbm_header(r: &mut impl Read, path: &Path, magic: &[u8]) -> Result<NetpbmHeader> {
    let mut seen_magic = Vec::new();
    let mut byte = [0u8; 1];
    for _ in 0..magic.len() {
        r.read_exact(&mut byte)
            .map_err(|_| Error::format(path, "missing magic"))?;
        seen_magic.push(byte[0]);
    }
    if seen_magic != magic {
        return Err(Error::format(
            path,
            format!("expected magic {:?}", String::from_utf8_lossy(magic)),
        ));
    }
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Skip whitespace and comments.
        let mut c;
        loop {
            r.read_exact(&mut byte)
                .map_err(|_| Error::format(path, "truncated header"))?;
            c = byte[0];
            if c == b'#' {
                while c != b'\n' {
                    r.read_exact(&mut byte)
                        .map_err(|_| Error::format(path, "truncated comment"))?;
                    c = byte[0];
                }
            } else if !c.is_ascii_whitespace() {
                break;
            }
        }
        let mut value = 0usize;
        let mut digits = 0;
        while c.is_ascii_digit() {
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((c - b'0') as usize))
                .ok_or_else(|| Error::format(path, "header value overflow"))?;
            digits += 1;
            r.read_exact(&mut byte)
                .map_err(|_| Error::format(path, "truncated header"))?;
            c = byte[0];
        }
        if digits == 0 || !c.is_ascii_whitespace() {
            return Err(Error::format(path, "malformed header field"));
        }
        *field = value;
        // The single whitespace byte after maxval is consumed by the digit
        // loop above, so the reader now sits on binary data.
    }
    Ok(NetpbmHeader { width: fields[0], height: fields[1], maxval: fields[2] })
}

/// Reads a binary PGM (P5) with 8- or 16-bit (big-endian) samples.
pub(crate) fn read_pgm16(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let header = read_netpbm_header(&mut r, path, b"P5")?;
    if header.maxval == 0 || header.maxval > 65535 {
        return Err(Error::format(path, format!("unsupported P5 maxval {}", header.maxval)));
    }
    let count = header.width * header.height;
    let mut samples = vec![0u16; count];
    if header.maxval < 256 {
        let mut raw = vec![0u8; count];
        r.read_exact(&mut raw)
            .map_err(|_| Error::format(path, "truncated sample data"))?;
        for (s, &b) in samples.iter_mut().zip(&raw) {
            *s = b as u16;
        }
    } else {
        let mut raw = vec![0u8; count * 2];
        r.read_exact(&mut raw)
            .map_err(|_| Error::format(path, "truncated sample data"))?;
        for (i, s) in samples.iter_mut().enumerate() {
            *s = u16::from_be_bytes([raw[2 * i], raw[2 * i + 1]]);
        }
    }
    Ok((header.width, header.height, samples))
}

/// Writes a binary PGM (P5, maxval 65535) with big-endian 16-bit samples.
pub(crate) fn write_pgm16(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    samples: &[u16],
) -> Result<()> {
    let path = path.as_ref();
    assert_eq!(samples.len(), width * height);
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    write!(w, "P5\n{width} {height}\n65535\n").map_err(io_err)?;
    let mut bytes = Vec::with_capacity(samples.len() * 2);
    for &s in samples {
        bytes.extend_from_slice(&s.to_be_bytes());
    }
    w.write_all(&bytes).map_err(io_err)?;
    w.flush().map_err(io_err)
}
