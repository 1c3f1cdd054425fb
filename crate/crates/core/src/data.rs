//! IDX image/label files, box-filter resizing and conversion to latents.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::forward::{max_normalize, Latent};
use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// 8-bit grayscale images with labels, stored row-major and contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }

    /// Indices of the first `limit` images with label `class`, in file order.
    pub fn class_indices(&self, class: u8, limit: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == class)
            .map(|(i, _)| i)
            .take(limit)
            .collect()
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    let f = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(f).read_to_end(&mut bytes)?;
    } else {
        let mut f = f;
        f.read_to_end(&mut bytes)?;
    }
    Ok(bytes)
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile(format!("{what}: header ends at byte {}", bytes.len())))
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let found = be_u32(bytes, 0, what)?;
    if found != expected {
        return Err(Error::BadMagic { found, expected });
    }
    Ok(())
}

/// Parses an IDX image file body: returns `(count, rows, cols, pixels)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    check_magic(bytes, IMAGE_MAGIC, "images")?;
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::TruncatedFile(format!(
            "images: expected {need} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok((count, rows, cols, body[..need].to_vec()))
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC, "labels")?;
    let count = be_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::TruncatedFile(format!(
            "labels: expected {count} bytes, found {}",
            body.len()
        )));
    }
    Ok(body[..count].to_vec())
}

/// Loads an image/label pair; files ending in `.gz` are decompressed.
pub fn load_idx(images: &Path, labels: &Path) -> Result<ImageDataset> {
    let (count, rows, cols, pixels) = parse_images(&read_file(images)?)?;
    let labels = parse_labels(&read_file(labels)?)?;
    if labels.len() != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    Ok(ImageDataset {
        rows,
        cols,
        pixels,
        labels,
    })
}

/// `weights[j][i]`: fraction of target cell `j` covered by source cell `i`.
fn box_weights(src: usize, dst: usize) -> Vec<Vec<f64>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|j| {
            let (lo, hi) = (j as f64 * scale, (j + 1) as f64 * scale);
            (0..src)
                .map(|i| {
                    let overlap = (hi.min((i + 1) as f64) - lo.max(i as f64)).max(0.0);
                    overlap / scale
                })
                .collect()
        })
        .collect()
}

/// Area-weighted box resize of a `rows x cols` image to `side x side`.
pub fn resize(img: &[f64], rows: usize, cols: usize, side: usize) -> Vec<f64> {
    let wr = box_weights(rows, side);
    let wc = box_weights(cols, side);
    // Columns first, then rows.
    let mut tmp = vec![0.0; rows * side];
    for r in 0..rows {
        for (j, w) in wc.iter().enumerate() {
            tmp[r * side + j] = (0..cols).map(|c| w[c] * img[r * cols + c]).sum();
        }
    }
    let mut out = vec![0.0; side * side];
    for (i, w) in wr.iter().enumerate() {
        for j in 0..side {
            out[i * side + j] = (0..rows).map(|r| w[r] * tmp[r * side + j]).sum();
        }
    }
    out
}

/// Scales pixels to `[0, 1]`, zero-pads to the next power of two, max-normalizes.
pub fn to_latent(pixels: &[f64]) -> Result<Latent> {
    let len = pixels.len().next_power_of_two();
    let mut v: Vec<f64> = pixels.iter().map(|p| p / 255.0).collect();
    v.resize(len, 0.0);
    max_normalize(&v)
}

/// Latents of the first `limit` images of `class`, resized to `side`.
/// All-zero images are skipped (they have no latent).
pub fn class_latents(ds: &ImageDataset, class: u8, limit: usize, side: usize) -> Vec<Latent> {
    ds.labels
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l == class)
        .filter_map(|(i, _)| {
            let img: Vec<f64> = ds.image(i).iter().map(|&p| p as f64).collect();
            to_latent(&resize(&img, ds.rows, ds.cols, side)).ok()
        })
        .take(limit)
        .collect()
}

/// Qubits needed for a `side x side` image.
pub fn qubits_for_side(side: usize) -> usize {
    (side * side).next_power_of_two().trailing_zeros() as usize
}
