//! Gradients through one denoiser block.
//!
//! The differentiated pipeline is
//! `latent -> embed (x) |0>^nA -> circuit -> ancilla-zero probabilities
//! -> max-normalize -> loss`. The circuit part uses the adjoint method: one
//! forward sweep, then a backward sweep that un-computes the state gate by
//! gate while propagating the loss adjoint. The max-normalization is
//! differentiated with the argmax held fixed.

use crate::circuits::Circuit;
use crate::qsim::{amplitude_embed, ancilla_projected_probs, GateKind, StateVector, C64};
use crate::{Error, Result};

/// A scalar loss of the block's max-normalized output.
pub trait LatentLoss {
    /// Returns the loss and its gradient with respect to `output`.
    fn value_and_grad(&self, output: &[f64]) -> Result<(f64, Vec<f64>)>;
}

impl<F> LatentLoss for F
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn value_and_grad(&self, output: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok(self(output))
    }
}

#[derive(Debug, Clone)]
pub struct BlockGrad {
    pub loss: f64,
    /// Max-normalized block output.
    pub output: Vec<f64>,
    /// Gradient with respect to the circuit's bound parameters.
    pub grad: Vec<f64>,
}

/// `embed(latent) (x) |0>^{n_ancilla}`.
pub fn block_input(latent: &[f64], n_ancilla: usize) -> Result<StateVector> {
    Ok(amplitude_embed(latent)?.with_ancillas(n_ancilla))
}

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Pulls a gradient with respect to `x = p / p[j*]` back to `p`.
pub fn max_normalize_backward(p: &[f64], grad_x: &[f64]) -> Vec<f64> {
    let star = argmax(p);
    let pmax = p[star];
    let mut grad_p: Vec<f64> = grad_x.iter().map(|g| g / pmax).collect();
    let cross: f64 = p
        .iter()
        .zip(grad_x)
        .enumerate()
        .filter(|&(j, _)| j != star)
        .map(|(_, (pj, gj))| gj * pj)
        .sum();
    grad_p[star] = -cross / (pmax * pmax);
    grad_p
}

fn evaluate(
    circuit: &Circuit,
    input: &StateVector,
    n_ancilla: usize,
) -> Result<(StateVector, Vec<f64>)> {
    let mut psi = input.clone();
    psi.apply_circuit(&circuit.gates)?;
    let n = psi.num_qubits() - n_ancilla;
    let p = ancilla_projected_probs(&psi, n, n_ancilla)?;
    Ok((psi, p))
}

fn normalized(p: &[f64]) -> Result<Vec<f64>> {
    let pmax = p[argmax(p)];
    if pmax <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(p.iter().map(|x| x / pmax).collect())
}

/// Loss and circuit output for a block, no gradient.
pub fn block_loss(
    circuit: &Circuit,
    input: &StateVector,
    n_ancilla: usize,
    loss: &dyn LatentLoss,
) -> Result<f64> {
    let (_, p) = evaluate(circuit, input, n_ancilla)?;
    Ok(loss.value_and_grad(&normalized(&p)?)?.0)
}

/// Adjoint gradient of `loss(max_normalize(P0 U(theta) input))`.
pub fn grad_block(
    circuit: &Circuit,
    input: &StateVector,
    n_ancilla: usize,
    loss: &dyn LatentLoss,
) -> Result<BlockGrad> {
    let (mut psi, p) = evaluate(circuit, input, n_ancilla)?;
    let output = normalized(&p)?;
    let (value, grad_x) = loss.value_and_grad(&output)?;
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss(format!("loss = {value}")));
    }
    let grad_p = max_normalize_backward(&p, &grad_x);

    // lambda = dL/d(psi*): only ancilla-zero amplitudes carry weight.
    let stride = 1usize << n_ancilla;
    let mut lambda = vec![C64::new(0.0, 0.0); psi.amplitudes().len()];
    for (j, g) in grad_p.iter().enumerate() {
        let k = j * stride;
        lambda[k] = psi.amplitudes()[k] * *g;
    }
    let mut lambda = StateVector::from_amplitudes(lambda)?;

    let mut grad = vec![0.0; circuit.num_params];
    for (gate, binding) in circuit.gates.iter().zip(&circuit.bindings).rev() {
        psi.apply_unchecked(gate, true);
        if let Some(off) = *binding {
            for k in 0..gate.num_params() {
                let mut mu = psi.clone();
                mu.apply_derivative_unchecked(gate, k);
                grad[off + k] += 2.0 * lambda.inner(&mu).re;
            }
        }
        lambda.apply_unchecked(gate, true);
    }
    if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss(format!(
            "gradient entry {bad} is not finite"
        )));
    }
    Ok(BlockGrad {
        loss: value,
        output,
        grad,
    })
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_oracle<F>(theta: &[f64], f: F, h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            x[i] = theta[i] + h;
            let up = f(&x);
            x[i] = theta[i] - h;
            let down = f(&x);
            x[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Parameter-shift gradient of the same loss; an independent cross-check of
/// [`grad_block`] that only evaluates circuits.
///
/// Single-qubit angles are Pauli rotations (two-term rule); controlled
/// rotations have generator eigenvalues `{0, +-1/2}` and use the four-term rule.
pub fn grad_block_parameter_shift(
    circuit: &Circuit,
    input: &StateVector,
    n_ancilla: usize,
    loss: &dyn LatentLoss,
) -> Result<BlockGrad> {
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    let (_, p) = evaluate(circuit, input, n_ancilla)?;
    let output = normalized(&p)?;
    let (value, grad_x) = loss.value_and_grad(&output)?;
    let grad_p = max_normalize_backward(&p, &grad_x);

    let projected = |shifted: &Circuit| -> Result<f64> {
        let (_, q) = evaluate(shifted, input, n_ancilla)?;
        Ok(q.iter().zip(&grad_p).map(|(a, b)| a * b).sum())
    };

    let mut grad = vec![0.0; circuit.num_params];
    let mut work = circuit.clone();
    for (gi, binding) in circuit.bindings.iter().enumerate() {
        let Some(off) = *binding else { continue };
        let gate = circuit.gates[gi];
        for k in 0..gate.num_params() {
            let mut at = |shift: f64| -> Result<f64> {
                work.gates[gi].params[k] = gate.params[k] + shift;
                let v = projected(&work);
                work.gates[gi].params[k] = gate.params[k];
                v
            };
            grad[off + k] = match gate.kind {
                GateKind::Cry | GateKind::Crz => {
                    let d1 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
                    let d2 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
                    d1 * (at(FRAC_PI_2)? - at(-FRAC_PI_2)?)
                        - d2 * (at(3.0 * FRAC_PI_2)? - at(-3.0 * FRAC_PI_2)?)
                }
                _ => 0.5 * (at(FRAC_PI_2)? - at(-FRAC_PI_2)?),
            };
        }
    }
    Ok(BlockGrad {
        loss: value,
        output,
        grad,
    })
}
