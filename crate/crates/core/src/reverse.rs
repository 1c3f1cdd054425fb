//! Reverse denoising: per-step circuit blocks with ancillas, the model that
//! bundles them with the forward process, and chain sampling.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;

use crate::autodiff::block_input;
use crate::circuits::{build, param_count, Circuit, Family, ScramblerParams};
use crate::forward::{max_normalize, ForwardProcess, Latent};
use crate::qsim::{ancilla_projected_probs, sample_shots};
use crate::rng;
use crate::schedule::{NoiseSchedule, ScheduleKind};
use crate::{Error, Result};

/// Initial angles are drawn from `U(-INIT_SCALE * pi, INIT_SCALE * pi)`;
/// 1 covers the full period. Near-identity starts (0.01 to 0.1) train
/// noticeably slower on the toy task.
pub const INIT_SCALE: f64 = 1.0;

/// The trainable circuit for reverse step `t` (`x~_t -> x~_{t-1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserBlock {
    pub step: usize,
    pub family: Family,
    pub num_data: usize,
    pub num_ancilla: usize,
    pub depth: usize,
    pub params: Vec<f64>,
    pub epochs_completed: usize,
    /// Mean loss of each completed epoch.
    pub loss_trace: Vec<f64>,
}

impl DenoiserBlock {
    pub fn new(
        step: usize,
        family: Family,
        num_data: usize,
        num_ancilla: usize,
        l0: usize,
        params: Vec<f64>,
    ) -> Result<Self> {
        let depth = l0 + step;
        let want = param_count(family, num_data + num_ancilla, depth);
        if params.len() != want {
            return Err(Error::BadShape(format!(
                "block {step} needs {want} parameters, got {}",
                params.len()
            )));
        }
        Ok(DenoiserBlock {
            step,
            family,
            num_data,
            num_ancilla,
            depth,
            params,
            epochs_completed: 0,
            loss_trace: Vec::new(),
        })
    }

    /// Fresh block with seeded random angles.
    pub fn init(
        step: usize,
        family: Family,
        num_data: usize,
        num_ancilla: usize,
        l0: usize,
        seed: u64,
    ) -> Result<Self> {
        let count = param_count(family, num_data + num_ancilla, l0 + step);
        let mut r = rng::stream(&[rng::domain::INIT_PARAMS, seed, step as u64]);
        let half = INIT_SCALE * std::f64::consts::PI;
        let params = (0..count).map(|_| r.random_range(-half..half)).collect();
        Self::new(step, family, num_data, num_ancilla, l0, params)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_data + self.num_ancilla
    }

    pub fn circuit(&self) -> Result<Circuit> {
        build(self.family, self.num_qubits(), self.depth, &self.params)
    }
}

/// Ancilla-zero weights of one block applied to `x`, before normalization.
pub fn projected_weights(x: &[f64], block: &DenoiserBlock) -> Result<Vec<f64>> {
    let mut psi = block_input(x, block.num_ancilla)?;
    psi.apply_circuit(&block.circuit()?.gates)?;
    ancilla_projected_probs(&psi, block.num_data, block.num_ancilla)
}

/// One reverse step. With `shots`, the projected weights are replaced by the
/// empirical frequencies of that many samples.
pub fn denoise_step(x: &[f64], block: &DenoiserBlock, shots: Option<(u64, u64)>) -> Result<Latent> {
    let p = projected_weights(x, block)?;
    match shots {
        None => max_normalize(&p),
        Some((n, seed)) => max_normalize(&sample_shots(&p, n, seed)?),
    }
}

/// Runs `blocks` (ordered by ascending step) from the last one down.
/// Returns `[x~_T, ..., x~_0]`.
pub fn reverse_trajectory(
    blocks: &[DenoiserBlock],
    init: &Latent,
    shots: Option<u64>,
    seed: u64,
) -> Result<Vec<Latent>> {
    let mut out = vec![init.clone()];
    for block in blocks.iter().rev() {
        let shot_arg = shots.map(|n| (n, rng::derive_seed(&[seed, block.step as u64])));
        let next = denoise_step(out.last().unwrap().values(), block, shot_arg)?;
        out.push(next);
    }
    Ok(out)
}

pub fn sample_chain(
    blocks: &[DenoiserBlock],
    init: &Latent,
    shots: Option<u64>,
    seed: u64,
) -> Result<Latent> {
    Ok(reverse_trajectory(blocks, init, shots, seed)?
        .pop()
        .unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Noise,
    Forward,
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(InitMode::Noise),
            "forward" => Ok(InitMode::Forward),
            _ => Err(Error::BadKind {
                what: "init mode",
                name: s.to_string(),
            }),
        }
    }
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Noise => "noise",
            InitMode::Forward => "forward",
        })
    }
}

/// I.i.d. `U[0, 1)` entries, max-normalized.
pub fn noise_init(len: usize, seed: u64, sample: u64) -> Result<Latent> {
    let mut r = rng::stream(&[rng::domain::NOISE_INIT, seed, sample]);
    let v: Vec<f64> = (0..len).map(|_| r.random::<f64>()).collect();
    max_normalize(&v)
}

/// Hyperparameters that fix a model's shape and forward process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub num_data: usize,
    pub num_ancilla: usize,
    pub t_steps: usize,
    pub l0: usize,
    pub family: Family,
    pub scrambler_layers: usize,
    pub schedule: ScheduleKind,
    pub lambda_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub num_data: usize,
    pub num_ancilla: usize,
    pub l0: usize,
    pub family: Family,
    pub master_seed: u64,
    pub schedule: NoiseSchedule,
    pub scrambler: ScramblerParams,
    /// `blocks[t - 1]` denoises step `t`.
    pub blocks: Vec<DenoiserBlock>,
}

impl Model {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        if spec.num_data == 0 {
            return Err(Error::config("model.n", "must be at least 1"));
        }
        if spec.family == Family::Scrambler {
            return Err(Error::config(
                "model.family",
                "the scrambler is not a denoiser family",
            ));
        }
        let schedule = NoiseSchedule::new(spec.schedule, spec.t_steps, spec.lambda_s, spec.seed)?;
        let scrambler = ScramblerParams::sample(
            spec.seed,
            spec.num_data,
            spec.scrambler_layers,
            spec.t_steps,
        );
        let blocks = (1..=spec.t_steps)
            .map(|t| {
                DenoiserBlock::init(
                    t,
                    spec.family,
                    spec.num_data,
                    spec.num_ancilla,
                    spec.l0,
                    spec.seed,
                )
            })
            .collect::<Result<_>>()?;
        Ok(Model {
            num_data: spec.num_data,
            num_ancilla: spec.num_ancilla,
            l0: spec.l0,
            family: spec.family,
            master_seed: spec.seed,
            schedule,
            scrambler,
            blocks,
        })
    }

    pub fn t_steps(&self) -> usize {
        self.blocks.len()
    }

    pub fn latent_len(&self) -> usize {
        1 << self.num_data
    }

    pub fn forward(&self) -> ForwardProcess<'_> {
        ForwardProcess::new(&self.schedule, &self.scrambler, self.master_seed)
    }

    pub fn total_params(&self) -> usize {
        self.blocks.iter().map(|b| b.params.len()).sum()
    }

    pub fn make_init(
        &self,
        mode: InitMode,
        x0: Option<&Latent>,
        seed: u64,
        sample: u64,
    ) -> Result<Latent> {
        match mode {
            InitMode::Noise => noise_init(self.latent_len(), seed, sample),
            InitMode::Forward => {
                let x0 =
                    x0.ok_or_else(|| Error::BadShape("forward init needs an input image".into()))?;
                Ok(self.forward().qsc_chain(x0, sample)?.pop().unwrap())
            }
        }
    }

    /// `count` images from noise inits, generated in parallel. Sample `i`
    /// uses init stream `(seed, i)` and shot stream `(seed, i, t)`.
    pub fn generate(&self, count: usize, shots: Option<u64>, seed: u64) -> Result<Vec<Latent>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let init = noise_init(self.latent_len(), seed, i)?;
                sample_chain(&self.blocks, &init, shots, rng::derive_seed(&[seed, i]))
            })
            .collect()
    }
}
