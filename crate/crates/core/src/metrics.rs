//! Entropy traces, shot-convergence studies, CSV writers and PNG grids.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::forward::{ForwardProcess, Latent, Variant};
use crate::reverse::{noise_init, sample_chain, Model};
use crate::rng;
use crate::{Error, Result};

/// Shannon entropy in bits of the sum-normalized latent, with `0 log 0 = 0`.
pub fn shannon_entropy(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if s <= 0.0 {
        return 0.0;
    }
    -x.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| {
            let p = v / s;
            p * p.log2()
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTrace {
    pub variant: Variant,
    /// Mean entropy at steps `0..=T`.
    pub bits: Vec<f64>,
}

/// Mean per-step entropy of each variant's forward chain over `samples`.
pub fn entropy_report(
    samples: &[Latent],
    fp: &ForwardProcess<'_>,
    variants: &[Variant],
) -> Result<Vec<EntropyTrace>> {
    if samples.is_empty() {
        return Err(Error::BadShape(
            "entropy report needs at least one sample".into(),
        ));
    }
    variants
        .iter()
        .map(|&variant| {
            let per_sample: Vec<Vec<f64>> = samples
                .par_iter()
                .enumerate()
                .map(|(i, x0)| {
                    let traj = fp.chain(variant, x0, i as u64)?;
                    Ok(traj.iter().map(|x| shannon_entropy(x.values())).collect())
                })
                .collect::<Result<_>>()?;
            let steps = per_sample[0].len();
            let bits = (0..steps)
                .map(|t| per_sample.iter().map(|h| h[t]).sum::<f64>() / samples.len() as f64)
                .collect();
            Ok(EntropyTrace { variant, bits })
        })
        .collect()
}

pub fn default_shot_grid() -> Vec<u64> {
    (5..=14).map(|k| 1u64 << k).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotStudy {
    pub shots: Vec<u64>,
    /// Mean over images of `||I_shots - I_inf||_2 / pixels`.
    pub mean_l2: Vec<f64>,
    pub analytic: Vec<Latent>,
    /// `images[k]` were generated with `shots[k]`.
    pub images: Vec<Vec<Latent>>,
}

/// `||a - b||_2 / len`.
pub fn pixel_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
        / a.len() as f64
}

/// Regenerates `count` images at every shot count with the same init and
/// shot seeds, comparing each against the analytic chain.
pub fn shot_study(model: &Model, count: usize, seed: u64, grid: &[u64]) -> Result<ShotStudy> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadShape(
            "shot counts must be strictly increasing".into(),
        ));
    }
    let inits: Vec<Latent> = (0..count as u64)
        .map(|i| noise_init(model.latent_len(), seed, i))
        .collect::<Result<_>>()?;
    let run = |shots: Option<u64>| -> Result<Vec<Latent>> {
        inits
            .par_iter()
            .enumerate()
            .map(|(i, init)| {
                sample_chain(
                    &model.blocks,
                    init,
                    shots,
                    rng::derive_seed(&[seed, i as u64]),
                )
            })
            .collect()
    };
    let analytic = run(None)?;
    let mut mean_l2 = Vec::with_capacity(grid.len());
    let mut images = Vec::with_capacity(grid.len());
    for &n in grid {
        let imgs = run(Some(n))?;
        let total: f64 = imgs
            .iter()
            .zip(&analytic)
            .map(|(a, b)| pixel_l2(a.values(), b.values()))
            .sum();
        mean_l2.push(total / count.max(1) as f64);
        images.push(imgs);
    }
    Ok(ShotStudy {
        shots: grid.to_vec(),
        mean_l2,
        analytic,
        images,
    })
}

pub const GRID_SEPARATOR: usize = 2;
pub const SEPARATOR_VALUE: u8 = 128;

/// Tiles `side x side` images into a near-square grid with gray separators.
/// Entries beyond `side * side` (zero padding) are dropped.
pub fn grid_pixels(latents: &[Latent], side: usize) -> (usize, usize, Vec<u8>) {
    let cols = (latents.len().max(1) as f64).sqrt().ceil() as usize;
    grid_pixels_with_cols(latents, side, cols)
}

/// Row-major tiling with a fixed number of columns.
pub fn grid_pixels_with_cols(
    latents: &[Latent],
    side: usize,
    cols: usize,
) -> (usize, usize, Vec<u8>) {
    let count = latents.len().max(1);
    let cols = cols.clamp(1, count);
    let rows = count.div_ceil(cols);
    let width = cols * side + (cols - 1) * GRID_SEPARATOR;
    let height = rows * side + (rows - 1) * GRID_SEPARATOR;
    let mut buf = vec![SEPARATOR_VALUE; width * height];
    for (k, x) in latents.iter().enumerate() {
        let (gr, gc) = (k / cols, k % cols);
        let (y0, x0) = (gr * (side + GRID_SEPARATOR), gc * (side + GRID_SEPARATOR));
        for r in 0..side {
            for c in 0..side {
                let v = x.values().get(r * side + c).copied().unwrap_or(0.0);
                buf[(y0 + r) * width + x0 + c] = (255.0 * v.clamp(0.0, 1.0)).round() as u8;
            }
        }
    }
    (width, height, buf)
}

/// Writes a near-square grid as an 8-bit grayscale PNG.
pub fn export_grid(latents: &[Latent], side: usize, path: &Path) -> Result<()> {
    let (w, h, buf) = grid_pixels(latents, side);
    write_png(w, h, &buf, path)
}

/// Writes a grid with `cols` tiles per row, e.g. one row per trajectory.
pub fn export_grid_with_cols(
    latents: &[Latent],
    side: usize,
    cols: usize,
    path: &Path,
) -> Result<()> {
    let (w, h, buf) = grid_pixels_with_cols(latents, side, cols);
    write_png(w, h, &buf, path)
}

fn write_png(w: usize, h: usize, buf: &[u8], path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    let mut enc = png::Encoder::new(file, w as u32, h as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(std::io::Error::other)?;
    writer
        .write_image_data(buf)
        .map_err(std::io::Error::other)?;
    writer.finish().map_err(std::io::Error::other)?;
    Ok(())
}

pub fn write_entropy_csv(traces: &[EntropyTrace], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "step,variant,entropy_bits")?;
    for tr in traces {
        for (t, h) in tr.bits.iter().enumerate() {
            writeln!(w, "{t},{},{h}", tr.variant)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_shots_csv(study: &ShotStudy, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "shots,mean_l2")?;
    for (n, l2) in study.shots.iter().zip(&study.mean_l2) {
        writeln!(w, "{n},{l2}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_loss_csv(model: &Model, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "block,epoch,mean_loss")?;
    for b in model.blocks.iter().rev() {
        for (e, l) in b.loss_trace.iter().enumerate() {
            writeln!(w, "{},{e},{l}", b.step)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_latent_csv(latents: &[Latent], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let len = latents.first().map_or(0, Latent::len);
    write!(w, "sample")?;
    for j in 0..len {
        write!(w, ",p{j}")?;
    }
    writeln!(w)?;
    for (i, x) in latents.iter().enumerate() {
        write!(w, "{i}")?;
        for v in x.values() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
