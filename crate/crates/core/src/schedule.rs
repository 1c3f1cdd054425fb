//! Noise schedules.
//!
//! The classical variance schedule `beta_t` is shared by every forward
//! variant. The scrambling process scales it, `alpha_t = 1 - lambda_s beta_t`,
//! and derives per-step scrambling strengths
//! `theta_t = sqrt(1 - alpha_bar_t) * eps_t` with `eps_t ~ U[0, 1)` drawn once.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::rng;
use crate::{Error, Result};

pub const COSINE_OFFSET: f64 = 0.008;
pub const MAX_BETA: f64 = 0.999;
pub const BETA_START: f64 = 1e-4;
pub const BETA_END: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    Cosine,
    Linear,
    Sigmoid,
    Log,
}

impl ScheduleKind {
    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Cosine => "cosine",
            ScheduleKind::Linear => "linear",
            ScheduleKind::Sigmoid => "sigmoid",
            ScheduleKind::Log => "log",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ScheduleKind::Cosine => 0,
            ScheduleKind::Linear => 1,
            ScheduleKind::Sigmoid => 2,
            ScheduleKind::Log => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [
            ScheduleKind::Cosine,
            ScheduleKind::Linear,
            ScheduleKind::Sigmoid,
            ScheduleKind::Log,
        ]
        .get(c as usize)
        .copied()
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(ScheduleKind::Cosine),
            "linear" => Ok(ScheduleKind::Linear),
            "sigmoid" => Ok(ScheduleKind::Sigmoid),
            "log" | "logarithmic" => Ok(ScheduleKind::Log),
            _ => Err(Error::BadKind {
                what: "schedule kind",
                name: s.to_string(),
            }),
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `beta_1..beta_T`.
pub fn make_betas(kind: ScheduleKind, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::NoSteps);
    }
    let t_max = steps as f64;
    Ok(match kind {
        ScheduleKind::Cosine => {
            let f = |t: f64| {
                let x = (t / t_max + COSINE_OFFSET) / (1.0 + COSINE_OFFSET) * FRAC_PI_2;
                x.cos().powi(2)
            };
            let f0 = f(0.0);
            (1..=steps)
                .map(|t| {
                    let prev = f((t - 1) as f64) / f0;
                    let cur = f(t as f64) / f0;
                    (1.0 - cur / prev).min(MAX_BETA)
                })
                .collect()
        }
        ScheduleKind::Linear => linspace(BETA_START, BETA_END, steps),
        ScheduleKind::Sigmoid => (1..=steps)
            .map(|t| sigmoid(-6.0 + 12.0 * t as f64 / t_max) * (BETA_END - BETA_START) + BETA_START)
            .collect(),
        ScheduleKind::Log => linspace(BETA_START.ln(), BETA_END.ln(), steps)
            .into_iter()
            .map(f64::exp)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub kind: ScheduleKind,
    pub lambda_s: f64,
    pub seed: u64,
    /// `betas[t - 1]` is `beta_t`.
    pub betas: Vec<f64>,
    /// `alphas[t - 1] = 1 - lambda_s * beta_t`.
    pub alphas: Vec<f64>,
    /// `alpha_bars[t]`, with `alpha_bars[0] = 1`.
    pub alpha_bars: Vec<f64>,
    /// `eps[t - 1] ~ U[0, 1)`.
    pub eps: Vec<f64>,
    /// `thetas[t - 1] = sqrt(1 - alpha_bar_t) * eps_t`.
    pub thetas: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(kind: ScheduleKind, steps: usize, lambda_s: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda_s) {
            return Err(Error::config(
                "schedule.lambda_s",
                format!("{lambda_s} outside [0, 1]"),
            ));
        }
        let betas = make_betas(kind, steps)?;
        let mut r = rng::stream(&[rng::domain::SCHEDULE, seed]);
        let eps: Vec<f64> = (0..steps).map(|_| r.random::<f64>()).collect();
        Ok(Self::from_parts(kind, lambda_s, seed, betas, eps))
    }

    /// Rebuilds the derived arrays from stored betas and eps draws.
    pub fn from_parts(
        kind: ScheduleKind,
        lambda_s: f64,
        seed: u64,
        betas: Vec<f64>,
        eps: Vec<f64>,
    ) -> Self {
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - lambda_s * b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len() + 1);
        alpha_bars.push(1.0);
        for a in &alphas {
            let prev = *alpha_bars.last().unwrap();
            alpha_bars.push(prev * a);
        }
        let thetas = eps
            .iter()
            .zip(&alpha_bars[1..])
            .map(|(e, ab)| (1.0 - ab).max(0.0).sqrt() * e)
            .collect();
        NoiseSchedule {
            kind,
            lambda_s,
            seed,
            betas,
            alphas,
            alpha_bars,
            eps,
            thetas,
        }
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t]
    }

    pub fn theta(&self, t: usize) -> f64 {
        self.thetas[t - 1]
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// Classical cumulative products `prod (1 - beta_s)`, indexed like `alpha_bars`.
    pub fn classical_alpha_bars(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        for b in &self.betas {
            let prev = *out.last().unwrap();
            out.push(prev * (1.0 - b));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_two_points() {
        assert_eq!(
            make_betas(ScheduleKind::Linear, 2).unwrap(),
            vec![1e-4, 0.02]
        );
    }

    #[test]
    fn no_steps_rejected() {
        assert!(matches!(
            make_betas(ScheduleKind::Cosine, 0),
            Err(Error::NoSteps)
        ));
        assert!("quadratic".parse::<ScheduleKind>().is_err());
    }

    #[test]
    fn cosine_matches_formula_oracle() {
        // Closed form: alpha_bar(t) = f(t)/f(0), beta_t = 1 - alpha_bar(t)/alpha_bar(t-1).
        let s = 0.008f64;
        let f = |t: f64| {
            ((t / 8.0 + s) / (1.0 + s) * std::f64::consts::PI / 2.0)
                .cos()
                .powi(2)
        };
        let expected: Vec<f64> = (1..=8)
            .map(|t| (1.0 - f(t as f64) / f((t - 1) as f64)).min(0.999))
            .collect();
        let got = make_betas(ScheduleKind::Cosine, 8).unwrap();
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(got[7], 0.999);
    }

    #[test]
    fn all_kinds_within_bounds() {
        for kind in [
            ScheduleKind::Cosine,
            ScheduleKind::Linear,
            ScheduleKind::Sigmoid,
            ScheduleKind::Log,
        ] {
            for steps in [1, 2, 8, 100] {
                let b = make_betas(kind, steps).unwrap();
                assert_eq!(b.len(), steps);
                assert!(
                    b.iter().all(|&x| x > 0.0 && x <= MAX_BETA),
                    "{kind} {steps}"
                );
            }
            assert_eq!(ScheduleKind::from_code(kind.code()), Some(kind));
        }
        let log = make_betas(ScheduleKind::Log, 5).unwrap();
        assert!((log[0] - 1e-4).abs() < 1e-15 && (log[4] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn zero_lambda_means_no_noise() {
        let s = NoiseSchedule::new(ScheduleKind::Cosine, 8, 0.0, 3).unwrap();
        assert!(s.alphas.iter().all(|&a| a == 1.0));
        assert!(s.alpha_bars.iter().all(|&a| a == 1.0));
        assert!(s.thetas.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn default_config_is_monotone() {
        let s = NoiseSchedule::new(ScheduleKind::Cosine, 8, 0.1, 3).unwrap();
        assert_eq!(s.alpha_bars[0], 1.0);
        for w in s.alpha_bars.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(s.alpha_bars.iter().all(|&a| a > 0.0 && a <= 1.0));
        assert!(s.thetas.iter().all(|&t| (0.0..1.0).contains(&t)));
    }

    #[test]
    fn same_seed_same_draws() {
        let a = NoiseSchedule::new(ScheduleKind::Cosine, 8, 0.1, 42).unwrap();
        let b = NoiseSchedule::new(ScheduleKind::Cosine, 8, 0.1, 42).unwrap();
        assert_eq!(a, b);
        let c = NoiseSchedule::new(ScheduleKind::Cosine, 8, 0.1, 43).unwrap();
        assert_ne!(a.eps, c.eps);
    }

    #[test]
    fn mean_theta_grows_with_step() {
        let runs: Vec<_> = (0..100)
            .map(|seed| NoiseSchedule::new(ScheduleKind::Cosine, 8, 0.1, seed).unwrap())
            .collect();
        let mean = |t: usize| runs.iter().map(|s| s.theta(t)).sum::<f64>() / runs.len() as f64;
        assert!(mean(8) > mean(4) && mean(4) > mean(1));
    }

    #[test]
    fn lambda_out_of_range() {
        assert!(NoiseSchedule::new(ScheduleKind::Cosine, 4, 1.5, 0).is_err());
    }
}
