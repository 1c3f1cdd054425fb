//! Forward degradation processes.
//!
//! All four variants return a trajectory `[x_0, x_1, ..., x_T]` of
//! max-normalized latents:
//!
//! - [`Variant::Qsc`]: Gaussian noise, then the scheduled scrambler, then
//!   measurement and max-normalization.
//! - [`Variant::Cdp`]: the classical Gaussian chain with `alpha_t = 1 - beta_t`;
//!   each state is clamped to `[0, 1]` and max-normalized for display.
//! - [`Variant::Iusp`]: a fresh full-strength random scrambler per sample and step.
//! - [`Variant::Gusp`]: the scheduled scrambler without Gaussian noise.
//!
//! Randomness is drawn from per-sample streams keyed by
//! `(seed, sample_index, step)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::circuits::{
    build_scrambler, param_count, scaled_scrambler, Circuit, Family, ScramblerParams,
};
use crate::qsim::{amplitude_embed, full_probs};
use crate::rng::{self, Rng};
use crate::schedule::NoiseSchedule;
use crate::{Error, Result};

/// A nonnegative latent whose maximum entry is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent(Vec<f64>);

impl Latent {
    /// Wraps values that already satisfy the latent invariants.
    pub fn from_normalized(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        Latent(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for Latent {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `p / max_j p_j`; the maximum entry becomes exactly 1.
pub fn max_normalize(p: &[f64]) -> Result<Latent> {
    let m = p.iter().copied().fold(0.0, f64::max);
    if m <= 0.0 || !m.is_finite() {
        return Err(Error::AllZero);
    }
    Ok(Latent(
        p.iter()
            .map(|&x| if x > 0.0 { x / m } else { 0.0 })
            .collect(),
    ))
}

/// `sqrt(alpha_bar) x + sqrt(1 - alpha_bar) eps`, `eps ~ N(0, I)`.
pub fn gaussian_noising(x: &[f64], alpha_bar: f64, rng: &mut Rng) -> Vec<f64> {
    let (a, b) = (alpha_bar.sqrt(), (1.0 - alpha_bar).max(0.0).sqrt());
    x.iter()
        .map(|&v| {
            let e: f64 = rng.sample(StandardNormal);
            a * v + b * e
        })
        .collect()
}

/// Embed (negatives clamped), run `circuit`, measure, max-normalize.
pub fn scramble_measure(z: &[f64], circuit: &Circuit) -> Result<Latent> {
    let mut s = amplitude_embed(z)?;
    s.apply_circuit(&circuit.gates)?;
    max_normalize(&full_probs(&s))
}

/// One scrambling step `x_{t-1} -> x_t`. The noise uses `alpha_bar_{t-1}`.
pub fn qsc_step(
    x_prev: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    scrambler: &ScramblerParams,
    rng: &mut Rng,
) -> Result<Latent> {
    if t == 0 || t > schedule.steps() {
        return Err(Error::StepOutOfRange {
            step: t,
            steps: schedule.steps(),
        });
    }
    let z = gaussian_noising(x_prev, schedule.alpha_bar(t - 1), rng);
    let circuit = build_scrambler(t, schedule.theta(t), scrambler)?;
    scramble_measure(&z, &circuit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Qsc,
    Cdp,
    Iusp,
    Gusp,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Qsc, Variant::Cdp, Variant::Iusp, Variant::Gusp];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Qsc => "qsc",
            Variant::Cdp => "cdp",
            Variant::Iusp => "iusp",
            Variant::Gusp => "gusp",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::BadKind {
                what: "forward variant",
                name: s.to_string(),
            })
    }
}

/// Everything a forward chain needs besides the input.
#[derive(Debug, Clone, Copy)]
pub struct ForwardProcess<'a> {
    pub schedule: &'a NoiseSchedule,
    pub scrambler: &'a ScramblerParams,
    pub seed: u64,
}

impl<'a> ForwardProcess<'a> {
    pub fn new(schedule: &'a NoiseSchedule, scrambler: &'a ScramblerParams, seed: u64) -> Self {
        ForwardProcess {
            schedule,
            scrambler,
            seed,
        }
    }

    fn stream(&self, domain: u64, sample: u64, step: usize) -> Rng {
        rng::stream(&[domain, self.seed, sample, step as u64])
    }

    pub fn chain(&self, variant: Variant, x0: &Latent, sample: u64) -> Result<Vec<Latent>> {
        match variant {
            Variant::Qsc => self.qsc_chain(x0, sample),
            Variant::Cdp => self.cdp_chain(x0, sample),
            Variant::Iusp => self.iusp_chain(x0, sample),
            Variant::Gusp => self.gusp_chain(x0),
        }
    }

    pub fn qsc_chain(&self, x0: &Latent, sample: u64) -> Result<Vec<Latent>> {
        let mut out = vec![x0.clone()];
        for t in 1..=self.schedule.steps() {
            let mut r = self.stream(rng::domain::FORWARD, sample, t);
            let next = qsc_step(
                out[t - 1].values(),
                t,
                self.schedule,
                self.scrambler,
                &mut r,
            )?;
            out.push(next);
        }
        Ok(out)
    }

    /// Unclamped classical chain `y_t = sqrt(1 - beta_t) y_{t-1} + sqrt(beta_t) eps`.
    pub fn cdp_raw_chain(&self, x0: &[f64], sample: u64) -> Vec<Vec<f64>> {
        let mut out = vec![x0.to_vec()];
        for t in 1..=self.schedule.steps() {
            let beta = self.schedule.beta(t);
            let mut r = self.stream(rng::domain::FORWARD, sample, t);
            let next = gaussian_noising(&out[t - 1], 1.0 - beta, &mut r);
            out.push(next);
        }
        out
    }

    pub fn cdp_chain(&self, x0: &Latent, sample: u64) -> Result<Vec<Latent>> {
        let raw = self.cdp_raw_chain(x0.values(), sample);
        let mut out = vec![x0.clone()];
        for y in &raw[1..] {
            let clamped: Vec<f64> = y.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            out.push(max_normalize(&clamped)?);
        }
        Ok(out)
    }

    pub fn iusp_chain(&self, x0: &Latent, sample: u64) -> Result<Vec<Latent>> {
        let n = log2(x0.len())?;
        let layers = self.scrambler.layers;
        let count = param_count(Family::Scrambler, n, layers);
        let mut out = vec![x0.clone()];
        for t in 1..=self.schedule.steps() {
            let mut r = self.stream(rng::domain::IUSP, sample, t);
            let u: Vec<f64> = (0..count).map(|_| r.random::<f64>()).collect();
            let circuit = scaled_scrambler(n, layers, &u, 1.0)?;
            let next = scramble_measure(out[t - 1].values(), &circuit)?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn gusp_chain(&self, x0: &Latent) -> Result<Vec<Latent>> {
        let mut out = vec![x0.clone()];
        for t in 1..=self.schedule.steps() {
            let circuit = build_scrambler(t, self.schedule.theta(t), self.scrambler)?;
            let next = scramble_measure(out[t - 1].values(), &circuit)?;
            out.push(next);
        }
        Ok(out)
    }
}

fn log2(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::BadLength(len));
    }
    Ok(len.trailing_zeros() as usize)
}
