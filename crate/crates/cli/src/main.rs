use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qscd_core::checkpoint::{self, Checkpoint};
use qscd_core::config::{sha256_hex, RunConfig};
use qscd_core::data::{class_latents, load_idx};
use qscd_core::forward::Variant;
use qscd_core::metrics;
use qscd_core::reverse::Model;
use qscd_core::train::train_model;
use qscd_core::{Error, Latent};

#[derive(Parser)]
#[command(
    name = "qscd",
    version,
    about = "Quantum scrambling diffusion on small grayscale images"
)]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every denoiser block and write a checkpoint plus loss CSV.
    Train(TrainArgs),
    /// Generate images from noise with a trained checkpoint.
    Sample(SampleArgs),
    /// Compare forward processes: entropy CSV and per-step image grids.
    AblateForward(AblateArgs),
    /// Finite-shot convergence study against analytic generation.
    Shots(ShotsArgs),
    /// Entropy traces of forward processes (CSV only).
    Entropy(AblateArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    count: usize,
    /// Measurement shots per step; analytic probabilities when omitted.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "qsc,cdp,iusp,gusp")]
    variants: Vec<String>,
    /// Number of images from the configured class.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ShotsArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated shot counts; 2^5..2^14 when omitted.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config { .. } | Error::BadKind { .. }) => 2,
        Some(
            Error::Io(_)
            | Error::BadMagic { .. }
            | Error::TruncatedFile(_)
            | Error::CountMismatch { .. }
            | Error::Checkpoint(_),
        ) => 3,
        Some(Error::NonFiniteLoss(_) | Error::AllZero | Error::ZeroVector) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .expect("thread pool is configured once");
    }
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Sample(a) => sample(a),
        Command::AblateForward(a) => ablate(a, true),
        Command::Entropy(a) => ablate(a, false),
        Command::Shots(a) => shots(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::config("config", format!("{}: {io}", path.display())),
        other => other,
    })?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_latents(cfg: &RunConfig, limit: usize) -> anyhow::Result<Vec<Latent>> {
    let ds = load_idx(&cfg.images_path(), &cfg.labels_path())?;
    let latents = class_latents(&ds, cfg.data.class, limit, cfg.data.resize);
    if latents.is_empty() {
        return Err(Error::config(
            "data.class",
            format!("no usable images of class {}", cfg.data.class),
        )
        .into());
    }
    Ok(latents)
}

/// `<file>.meta.json` next to every output.
fn write_meta(path: &Path, command: &str, config_hash: &str, seed: u64) -> anyhow::Result<()> {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    let meta = json!({
        "command": command,
        "config_sha256": config_hash,
        "seed": seed,
        "output_sha256": sha256_hex(&fs::read(path)?),
    });
    fs::write(
        path.with_file_name(name),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let config_text = cfg.to_canonical();
    let hash = cfg.hash();
    let data = load_latents(&cfg, cfg.data.samples)?;
    fs::create_dir_all(&a.out)?;
    let ck_path = a.out.join("model.ckpt");

    let mut model = match checkpoint::load(&ck_path) {
        Ok(ck) if ck.config_text == config_text => {
            eprintln!("resuming from {}", ck_path.display());
            ck.model
        }
        Ok(_) => bail!(
            "{} was written by a different config; remove it or choose another --out",
            ck_path.display()
        ),
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => {
            Model::new(&cfg.model_spec()?)?
        }
        Err(e) => return Err(e).context(format!("reading {}", ck_path.display())),
    };

    eprintln!(
        "training {} blocks ({} parameters) on {} images",
        model.t_steps(),
        model.total_params(),
        data.len()
    );
    train_model(&mut model, &data, &cfg.train_config(), |m, step| {
        let b = &m.blocks[step - 1];
        eprintln!(
            "block {step}: loss {:.5} -> {:.5}",
            b.loss_trace.first().unwrap_or(&f64::NAN),
            b.loss_trace.last().unwrap_or(&f64::NAN)
        );
        checkpoint::save(
            &Checkpoint {
                config_text: config_text.clone(),
                model: m.clone(),
            },
            &ck_path,
        )
    })?;
    // Also covers the case where every block was already trained.
    checkpoint::save(
        &Checkpoint {
            config_text: config_text.clone(),
            model: model.clone(),
        },
        &ck_path,
    )?;
    write_meta(&ck_path, "train", &hash, cfg.seed)?;
    let loss_path = a.out.join("loss.csv");
    metrics::write_loss_csv(&model, &loss_path)?;
    write_meta(&loss_path, "train", &hash, cfg.seed)?;
    Ok(())
}

/// Image side from the embedded config, else the largest square that fits.
fn image_side(ck: &Checkpoint) -> usize {
    RunConfig::parse(&ck.config_text, Path::new("."))
        .map(|c| c.data.resize)
        .unwrap_or_else(|_| (ck.model.latent_len() as f64).sqrt() as usize)
}

fn sample(a: SampleArgs) -> anyhow::Result<()> {
    let ck = checkpoint::load(&a.checkpoint)?;
    let hash = sha256_hex(ck.config_text.as_bytes());
    let images = ck.model.generate(a.count, a.shots, a.seed)?;
    fs::create_dir_all(&a.out)?;
    let side = image_side(&ck);
    let png = a.out.join("samples.png");
    metrics::export_grid(&images, side, &png)?;
    write_meta(&png, "sample", &hash, a.seed)?;
    let csv = a.out.join("latents.csv");
    metrics::write_latent_csv(&images, &csv)?;
    write_meta(&csv, "sample", &hash, a.seed)?;
    Ok(())
}

fn ablate(a: AblateArgs, grids: bool) -> anyhow::Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let hash = cfg.hash();
    let variants: Vec<Variant> = a
        .variants
        .iter()
        .map(|v| v.trim().parse())
        .collect::<Result<_, _>>()?;
    let data = load_latents(&cfg, a.samples)?;
    let model = Model::new(&cfg.model_spec()?)?;
    let fp = model.forward();
    fs::create_dir_all(&a.out)?;

    let traces = metrics::entropy_report(&data, &fp, &variants)?;
    let csv = a.out.join("entropy.csv");
    metrics::write_entropy_csv(&traces, &csv)?;
    write_meta(
        &csv,
        if grids { "ablate-forward" } else { "entropy" },
        &hash,
        cfg.seed,
    )?;
    if grids {
        // One row per image, one column per step.
        let shown = data.len().min(8);
        for v in &variants {
            let mut tiles = Vec::new();
            for (i, x0) in data.iter().take(shown).enumerate() {
                tiles.extend(fp.chain(*v, x0, i as u64)?);
            }
            let png = a.out.join(format!("forward_{v}.png"));
            metrics::export_grid_with_cols(&tiles, cfg.data.resize, model.t_steps() + 1, &png)?;
            write_meta(&png, "ablate-forward", &hash, cfg.seed)?;
        }
    }
    Ok(())
}

fn shots(a: ShotsArgs) -> anyhow::Result<()> {
    let ck = checkpoint::load(&a.checkpoint)?;
    let hash = sha256_hex(ck.config_text.as_bytes());
    let grid = if a.grid.is_empty() {
        metrics::default_shot_grid()
    } else {
        a.grid.clone()
    };
    if grid.contains(&0) {
        return Err(Error::ZeroShots.into());
    }
    let study = metrics::shot_study(&ck.model, a.count, a.seed, &grid)?;
    fs::create_dir_all(&a.out)?;
    let csv = a.out.join("shots.csv");
    metrics::write_shots_csv(&study, &csv)?;
    write_meta(&csv, "shots", &hash, a.seed)?;
    let side = image_side(&ck);
    let png = a.out.join("shots_analytic.png");
    metrics::export_grid(&study.analytic, side, &png)?;
    write_meta(&png, "shots", &hash, a.seed)?;
    for (n, imgs) in study.shots.iter().zip(&study.images) {
        let png = a.out.join(format!("shots_{n}.png"));
        metrics::export_grid(imgs, side, &png)?;
        write_meta(&png, "shots", &hash, a.seed)?;
    }
    Ok(())
}
