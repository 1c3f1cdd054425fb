//! Hybrid KL + L1 loss between max-normalized latents.

use crate::autodiff::LatentLoss;
use crate::{Error, Result};

/// Floor added before sum-normalizing latents for the KL term.
pub const KL_FLOOR: f64 = 1e-10;

fn sum_normalized(x: &[f64]) -> (Vec<f64>, f64) {
    let s: f64 = x.iter().map(|v| v + KL_FLOOR).sum();
    (x.iter().map(|v| (v + KL_FLOOR) / s).collect(), s)
}

/// `D_KL(a || b)` for sum-1 vectors.
fn kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| if p > 0.0 { p * (p / q).ln() } else { 0.0 })
        .sum()
}

/// `lambda_kl * KL(x^ || x~^) + lambda_l1 * ||x - x~||_1`, where `^` denotes
/// floor-and-sum-normalization. `target` is the forward latent `x`.
pub fn hybrid_loss(target: &[f64], output: &[f64], lambda_kl: f64, lambda_l1: f64) -> Result<f64> {
    if target.len() != output.len() {
        return Err(Error::LengthMismatch(target.len(), output.len()));
    }
    let mut value = 0.0;
    if lambda_kl != 0.0 {
        value += lambda_kl * kl(&sum_normalized(target).0, &sum_normalized(output).0);
    }
    if lambda_l1 != 0.0 {
        value += lambda_l1
            * target
                .iter()
                .zip(output)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
    }
    Ok(value)
}

/// Loss against a fixed target, with its gradient in the model output.
#[derive(Debug, Clone)]
pub struct HybridLoss {
    target: Vec<f64>,
    target_hat: Vec<f64>,
    pub lambda_kl: f64,
    pub lambda_l1: f64,
}

impl HybridLoss {
    pub fn new(target: Vec<f64>, lambda_kl: f64, lambda_l1: f64) -> Self {
        let target_hat = sum_normalized(&target).0;
        HybridLoss {
            target,
            target_hat,
            lambda_kl,
            lambda_l1,
        }
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

impl LatentLoss for HybridLoss {
    fn value_and_grad(&self, output: &[f64]) -> Result<(f64, Vec<f64>)> {
        if output.len() != self.target.len() {
            return Err(Error::LengthMismatch(self.target.len(), output.len()));
        }
        let mut value = 0.0;
        let mut grad = vec![0.0; output.len()];
        if self.lambda_kl != 0.0 {
            let (out_hat, s) = sum_normalized(output);
            value += self.lambda_kl * kl(&self.target_hat, &out_hat);
            // d/dx_j [-sum a ln(x + e) + ln S] = -a_j / (x_j + e) + 1 / S
            for ((g, a), x) in grad.iter_mut().zip(&self.target_hat).zip(output) {
                *g += self.lambda_kl * (1.0 / s - a / (x + KL_FLOOR));
            }
        }
        if self.lambda_l1 != 0.0 {
            for ((g, t), x) in grad.iter_mut().zip(&self.target).zip(output) {
                value += self.lambda_l1 * (x - t).abs();
                // Subgradient 0 on ties.
                let d = x - t;
                if d != 0.0 {
                    *g += self.lambda_l1 * d.signum();
                }
            }
        }
        Ok((value, grad))
    }
}
