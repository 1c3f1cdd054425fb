//! Block-wise training in reverse step order.
//!
//! Block `t` is trained with blocks `t+1..T` frozen: each sample's forward
//! endpoint `x_T` runs down through the frozen blocks to `x~_t`, the trainable
//! block maps it to `x~_{t-1}`, and the hybrid loss compares that with the
//! forward state `x_{t-1}` of the same sample.

pub mod loss;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::autodiff::{block_input, grad_block};
use crate::forward::Latent;
use crate::qsim::StateVector;
use crate::reverse::{reverse_trajectory, DenoiserBlock, Model};
use crate::rng;
use crate::{Error, Result};

use loss::HybridLoss;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub lr: f64,
}

impl OptimizerState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        OptimizerState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
            lr,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut OptimizerState, params: &mut [f64], grads: &[f64]) {
    state.step += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

/// `base_lr * gamma^floor(epoch / step_size)`.
pub fn steplr(epoch: usize, base_lr: f64, step_size: usize, gamma: f64) -> f64 {
    base_lr * gamma.powi((epoch / step_size.max(1)) as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda_kl: f64,
    pub lambda_l1: f64,
    pub lr: f64,
    pub epochs_per_block: usize,
    pub batch_size: usize,
    pub lr_step: usize,
    pub lr_gamma: f64,
}

impl TrainConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::config(key, msg));
        if !(self.lambda_kl >= 0.0) {
            return bad("loss.lambda_kl", "must be >= 0");
        }
        if !(self.lambda_l1 >= 0.0) {
            return bad("loss.lambda_l1", "must be >= 0");
        }
        if !(self.lr > 0.0) {
            return bad("optim.lr", "must be > 0");
        }
        if self.epochs_per_block == 0 {
            return bad("optim.epochs_per_block", "must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("optim.batch_size", "must be >= 1");
        }
        if self.lr_step == 0 {
            return bad("optim.lr_step", "must be >= 1");
        }
        if !(self.lr_gamma > 0.0) {
            return bad("optim.lr_gamma", "must be > 0");
        }
        Ok(())
    }
}

/// Forward trajectories `[x_0..x_T]` of every training sample.
pub fn forward_trajectories(model: &Model, data: &[Latent]) -> Result<Vec<Vec<Latent>>> {
    let fp = model.forward();
    data.par_iter()
        .enumerate()
        .map(|(i, x0)| fp.qsc_chain(x0, i as u64))
        .collect()
}

/// Trains block `step` in place and returns its per-epoch mean losses.
/// Blocks above `step` are read but never modified.
pub fn train_block(
    model: &mut Model,
    step: usize,
    trajectories: &[Vec<Latent>],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let t_steps = model.t_steps();
    if step == 0 || step > t_steps {
        return Err(Error::StepOutOfRange {
            step,
            steps: t_steps,
        });
    }
    if trajectories.is_empty() {
        return Err(Error::BadShape("empty training set".into()));
    }
    let n_ancilla = model.num_ancilla;

    // Inputs to the trainable block are fixed while it trains.
    let frozen = &model.blocks[step..];
    let cases: Vec<(StateVector, HybridLoss)> = trajectories
        .par_iter()
        .enumerate()
        .map(|(i, traj)| {
            let seed = rng::derive_seed(&[model.master_seed, i as u64]);
            let x_in = reverse_trajectory(frozen, &traj[t_steps], None, seed)?
                .pop()
                .unwrap();
            let target = traj[step - 1].values().to_vec();
            Ok((
                block_input(x_in.values(), n_ancilla)?,
                HybridLoss::new(target, cfg.lambda_kl, cfg.lambda_l1),
            ))
        })
        .collect::<Result<_>>()?;

    let block: &mut DenoiserBlock = &mut model.blocks[step - 1];
    let mut circuit = block.circuit()?;
    let mut opt = OptimizerState::new(block.params.len(), cfg.lr);
    let mut order: Vec<usize> = (0..cases.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs_per_block);

    for epoch in 0..cfg.epochs_per_block {
        opt.lr = steplr(epoch, cfg.lr, cfg.lr_step, cfg.lr_gamma);
        let mut r = rng::stream(&[
            rng::domain::SHUFFLE,
            model.master_seed,
            step as u64,
            epoch as u64,
        ]);
        order.sort_unstable();
        order.shuffle(&mut r);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<_> = batch
                .par_iter()
                .map(|&i| grad_block(&circuit, &cases[i].0, n_ancilla, &cases[i].1))
                .collect::<Result<_>>()
                .map_err(|e| match e {
                    Error::NonFiniteLoss(msg) => {
                        Error::NonFiniteLoss(format!("block {step}, epoch {epoch}: {msg}"))
                    }
                    other => other,
                })?;
            let mut grad = vec![0.0; block.params.len()];
            for res in &results {
                epoch_loss += res.loss;
                for (g, d) in grad.iter_mut().zip(&res.grad) {
                    *g += d;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam_step(&mut opt, &mut block.params, &grad);
            circuit.rebind(&block.params)?;
        }
        let mean = epoch_loss / cases.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss(format!(
                "block {step}, epoch {epoch}: mean loss {mean}"
            )));
        }
        trace.push(mean);
    }
    block.epochs_completed = cfg.epochs_per_block;
    block.loss_trace = trace.clone();
    Ok(trace)
}

/// Trains every unfinished block from `T` down to 1, calling `after_block`
/// after each one (for checkpointing). Blocks that already completed
/// `epochs_per_block` epochs are skipped; an unfinished block restarts from
/// its seeded initial parameters, so resumed runs match uninterrupted ones.
pub fn train_model<F>(
    model: &mut Model,
    data: &[Latent],
    cfg: &TrainConfig,
    mut after_block: F,
) -> Result<()>
where
    F: FnMut(&Model, usize) -> Result<()>,
{
    cfg.validate()?;
    let trajectories = forward_trajectories(model, data)?;
    for step in (1..=model.t_steps()).rev() {
        let done = &model.blocks[step - 1];
        if done.epochs_completed >= cfg.epochs_per_block {
            continue;
        }
        model.blocks[step - 1] = DenoiserBlock::init(
            step,
            model.family,
            model.num_data,
            model.num_ancilla,
            model.l0,
            model.master_seed,
        )?;
        train_block(model, step, &trajectories, cfg)?;
        after_block(model, step)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::Family;
    use crate::forward::max_normalize;
    use crate::reverse::ModelSpec;
    use crate::schedule::ScheduleKind;
    use rand::{Rng, SeedableRng};

    #[test]
    fn steplr_examples() {
        assert_eq!(steplr(0, 5e-4, 10, 0.05), 5e-4);
        assert!((steplr(10, 5e-4, 10, 0.05) - 2.5e-5).abs() < 1e-18);
        assert!((steplr(25, 5e-4, 10, 0.05) - 1.25e-6).abs() < 1e-18);
        assert_eq!(steplr(9, 5e-4, 10, 0.05), 5e-4);
    }

    #[test]
    fn adam_zero_gradient() {
        let mut s = OptimizerState::new(3, 0.1);
        let mut p = vec![1.0, -2.0, 0.5];
        adam_step(&mut s, &mut p, &[0.0; 3]);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn adam_first_step() {
        let lr = 0.01;
        let g = [0.3, -2.0, 1e-3];
        let mut s = OptimizerState::new(3, lr);
        let mut p = vec![0.0; 3];
        adam_step(&mut s, &mut p, &g);
        for (d, gi) in p.iter().zip(g) {
            let want = -lr * gi / (gi.abs() + ADAM_EPS);
            assert!((d - want).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_constant_gradient_limit() {
        let lr = 1e-3;
        let mut s = OptimizerState::new(1, lr);
        let mut p = vec![0.0];
        let mut prev = 0.0;
        for _ in 0..1000 {
            prev = p[0];
            adam_step(&mut s, &mut p, &[0.7]);
        }
        let last = (p[0] - prev).abs();
        assert!((last / lr - 1.0).abs() < 0.05);
    }

    fn toy() -> (Model, Vec<Latent>) {
        let spec = ModelSpec {
            num_data: 2,
            num_ancilla: 1,
            t_steps: 2,
            l0: 1,
            family: Family::Circuit1,
            scrambler_layers: 2,
            schedule: ScheduleKind::Cosine,
            lambda_s: 0.1,
            seed: 3,
        };
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let data = (0..6)
            .map(|_| {
                let v: Vec<f64> = (0..4).map(|_| r.random::<f64>()).collect();
                max_normalize(&v).unwrap()
            })
            .collect();
        (Model::new(&spec).unwrap(), data)
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            lambda_kl: 0.5,
            lambda_l1: 5.0,
            lr: 0.05,
            epochs_per_block: 3,
            batch_size: 4,
            lr_step: 10,
            lr_gamma: 0.5,
        }
    }

    #[test]
    fn zero_weights_leave_params_unchanged() {
        let (mut model, data) = toy();
        let before = model.blocks.clone();
        let trajs = forward_trajectories(&model, &data).unwrap();
        let c = TrainConfig {
            lambda_kl: 0.0,
            lambda_l1: 0.0,
            ..cfg()
        };
        let trace = train_block(&mut model, 2, &trajs, &c).unwrap();
        assert_eq!(trace, vec![0.0; 3]);
        assert_eq!(model.blocks[1].params, before[1].params);
    }

    #[test]
    fn frozen_blocks_and_scrambler_untouched() {
        let (mut model, data) = toy();
        let before = model.clone();
        let trajs = forward_trajectories(&model, &data).unwrap();
        train_block(&mut model, 1, &trajs, &cfg()).unwrap();
        assert_eq!(model.blocks[1], before.blocks[1]);
        assert_eq!(model.scrambler, before.scrambler);
        assert_eq!(model.schedule, before.schedule);
        assert_ne!(model.blocks[0].params, before.blocks[0].params);
    }

    #[test]
    fn training_is_deterministic_and_resumable() {
        let (mut a, data) = toy();
        let mut calls = vec![];
        train_model(&mut a, &data, &cfg(), |_, t| {
            calls.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, vec![2, 1]);
        assert!(a
            .blocks
            .iter()
            .all(|b| b.epochs_completed == 3 && b.loss_trace.len() == 3));

        let (mut b, _) = toy();
        train_model(&mut b, &data, &cfg(), |_, _| Ok(())).unwrap();
        assert_eq!(a, b);

        // Interrupted after block 2, with block 1 partially modified.
        let (mut c, _) = toy();
        let _ = train_model(&mut c, &data, &cfg(), |_, t| {
            if t == 2 {
                Err(Error::Checkpoint("stop".into()))
            } else {
                Ok(())
            }
        });
        c.blocks[0].params.iter_mut().for_each(|p| *p += 1.0);
        train_model(&mut c, &data, &cfg(), |_, _| Ok(())).unwrap();
        assert_eq!(a, c);
    }
}
