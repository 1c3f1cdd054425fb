//! Exact statevector simulation.
//!
//! Wire 0 is the most significant bit of a basis index, so on an `m`-qubit
//! register wire `w` corresponds to bit `m - 1 - w`. Ancilla qubits occupy the
//! last wires, which makes the ancilla-zero block a stride-`2^n_A` gather.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::rng;
use crate::{Error, Result};

pub type C64 = Complex64;
/// Row-major 2x2 complex matrix.
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::from(c), C64::from(-s)], [C64::from(s), C64::from(c)]]
}

fn ry_deriv(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::from(-0.5 * s), C64::from(-0.5 * c)],
        [C64::from(0.5 * c), C64::from(-0.5 * s)],
    ]
}

pub fn rz(theta: f64) -> Mat2 {
    [
        [C64::from_polar(1.0, -theta / 2.0), ZERO],
        [ZERO, C64::from_polar(1.0, theta / 2.0)],
    ]
}

fn rz_deriv(theta: f64) -> Mat2 {
    [
        [
            C64::new(0.0, -0.5) * C64::from_polar(1.0, -theta / 2.0),
            ZERO,
        ],
        [ZERO, C64::new(0.0, 0.5) * C64::from_polar(1.0, theta / 2.0)],
    ]
}

pub fn u3(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::from(c), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ]
}

fn u3_deriv(theta: f64, phi: f64, lambda: f64, which: usize) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let i = C64::i();
    match which {
        0 => [
            [C64::from(-0.5 * s), -C64::from_polar(0.5 * c, lambda)],
            [
                C64::from_polar(0.5 * c, phi),
                -C64::from_polar(0.5 * s, phi + lambda),
            ],
        ],
        1 => [
            [ZERO, ZERO],
            [
                i * C64::from_polar(s, phi),
                i * C64::from_polar(c, phi + lambda),
            ],
        ],
        _ => [
            [ZERO, -i * C64::from_polar(s, lambda)],
            [ZERO, i * C64::from_polar(c, phi + lambda)],
        ],
    }
}

const PAULI_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    /// `Rot(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi)`.
    Rot,
    /// `U3(theta, phi, lambda)`.
    U3,
    Ry,
    Rz,
    Cnot,
    Cz,
    Cry,
    Crz,
}

impl GateKind {
    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rot | GateKind::U3 => 3,
            GateKind::Ry | GateKind::Rz | GateKind::Cry | GateKind::Crz => 1,
            GateKind::Cnot | GateKind::Cz => 0,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rot | GateKind::U3 | GateKind::Ry | GateKind::Rz => 1,
            _ => 2,
        }
    }

    pub const ALL: [GateKind; 8] = [
        GateKind::Rot,
        GateKind::U3,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Cry,
        GateKind::Crz,
    ];
}

/// A gate instance. For two-qubit gates `wires = [control, target]`; for
/// single-qubit gates only `wires[0]` is meaningful. Unused `params` are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: [usize; 2],
    pub params: [f64; 3],
}

impl Gate {
    pub fn rot(wire: usize, phi: f64, theta: f64, omega: f64) -> Self {
        Gate {
            kind: GateKind::Rot,
            wires: [wire, 0],
            params: [phi, theta, omega],
        }
    }

    pub fn u3(wire: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Gate {
            kind: GateKind::U3,
            wires: [wire, 0],
            params: [theta, phi, lambda],
        }
    }

    pub fn ry(wire: usize, theta: f64) -> Self {
        Gate {
            kind: GateKind::Ry,
            wires: [wire, 0],
            params: [theta, 0.0, 0.0],
        }
    }

    pub fn rz(wire: usize, theta: f64) -> Self {
        Gate {
            kind: GateKind::Rz,
            wires: [wire, 0],
            params: [theta, 0.0, 0.0],
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::Cnot,
            wires: [control, target],
            params: [0.0; 3],
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Gate {
            kind: GateKind::Cz,
            wires: [a, b],
            params: [0.0; 3],
        }
    }

    pub fn cry(control: usize, target: usize, theta: f64) -> Self {
        Gate {
            kind: GateKind::Cry,
            wires: [control, target],
            params: [theta, 0.0, 0.0],
        }
    }

    pub fn crz(control: usize, target: usize, theta: f64) -> Self {
        Gate {
            kind: GateKind::Crz,
            wires: [control, target],
            params: [theta, 0.0, 0.0],
        }
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires[..self.kind.arity()]
    }

    pub fn num_params(&self) -> usize {
        self.kind.num_params()
    }

    /// The 2x2 block acting on the (target) qubit. For controlled gates this is
    /// the block applied when the control is set; CZ reports `Z`.
    pub fn local_matrix(&self) -> Mat2 {
        let [a, b, c] = self.params;
        match self.kind {
            GateKind::Rot => mat_mul(&rz(c), &mat_mul(&ry(b), &rz(a))),
            GateKind::U3 => u3(a, b, c),
            GateKind::Ry | GateKind::Cry => ry(a),
            GateKind::Rz | GateKind::Crz => rz(a),
            GateKind::Cnot => PAULI_X,
            GateKind::Cz => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// Derivative of [`Gate::local_matrix`] with respect to `params[which]`.
    pub fn local_derivative(&self, which: usize) -> Mat2 {
        let [a, b, c] = self.params;
        match (self.kind, which) {
            (GateKind::Rot, 0) => mat_mul(&rz(c), &mat_mul(&ry(b), &rz_deriv(a))),
            (GateKind::Rot, 1) => mat_mul(&rz(c), &mat_mul(&ry_deriv(b), &rz(a))),
            (GateKind::Rot, 2) => mat_mul(&rz_deriv(c), &mat_mul(&ry(b), &rz(a))),
            (GateKind::U3, w) if w < 3 => u3_deriv(a, b, c, w),
            (GateKind::Ry | GateKind::Cry, 0) => ry_deriv(a),
            (GateKind::Rz | GateKind::Crz, 0) => rz_deriv(a),
            _ => panic!("{:?} has no parameter {which}", self.kind),
        }
    }

    fn check(&self, num_qubits: usize) -> Result<()> {
        for &w in self.wires() {
            if w >= num_qubits {
                return Err(Error::WireOutOfRange {
                    wire: w,
                    num_qubits,
                });
            }
        }
        if self.kind.arity() == 2 && self.wires[0] == self.wires[1] {
            return Err(Error::DuplicateWire(self.wires[0]));
        }
        Ok(())
    }
}

/// Pure state of an `m`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        StateVector { num_qubits, amps }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        StateVector { num_qubits, amps }
    }

    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let num_qubits = log2_exact(amps.len())?;
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `self (x) |0...0>` on `extra` additional trailing wires.
    pub fn with_ancillas(&self, extra: usize) -> StateVector {
        let stride = 1usize << extra;
        let mut amps = vec![ZERO; self.amps.len() * stride];
        for (j, &a) in self.amps.iter().enumerate() {
            amps[j * stride] = a;
        }
        StateVector {
            num_qubits: self.num_qubits + extra,
            amps,
        }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.num_qubits)?;
        self.apply_unchecked(gate, false);
        Ok(())
    }

    pub fn apply_inverse(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.num_qubits)?;
        self.apply_unchecked(gate, true);
        Ok(())
    }

    pub fn apply_circuit<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate, inverse: bool) {
        let m = self.num_qubits;
        match gate.kind {
            GateKind::Cnot => apply_cnot(&mut self.amps, m, gate.wires[0], gate.wires[1]),
            GateKind::Cz => apply_cz(&mut self.amps, m, gate.wires[0], gate.wires[1]),
            _ => {
                let u = gate.local_matrix();
                let u = if inverse { dagger(&u) } else { u };
                if gate.kind.arity() == 1 {
                    apply_1q(&mut self.amps, m, gate.wires[0], &u);
                } else {
                    apply_controlled(&mut self.amps, m, gate.wires[0], gate.wires[1], &u);
                }
            }
        }
    }

    /// Replaces the state by `(dG/d params[which]) |state>`. The result is not
    /// normalized; for controlled gates the control-off branch is zeroed.
    pub(crate) fn apply_derivative_unchecked(&mut self, gate: &Gate, which: usize) {
        let m = self.num_qubits;
        let d = gate.local_derivative(which);
        if gate.kind.arity() == 1 {
            apply_1q(&mut self.amps, m, gate.wires[0], &d);
        } else {
            let cbit = bit(m, gate.wires[0]);
            for (i, a) in self.amps.iter_mut().enumerate() {
                if i & cbit == 0 {
                    *a = ZERO;
                }
            }
            apply_controlled(&mut self.amps, m, gate.wires[0], gate.wires[1], &d);
        }
    }
}

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::BadLength(len));
    }
    Ok(len.trailing_zeros() as usize)
}

#[inline]
fn bit(num_qubits: usize, wire: usize) -> usize {
    1 << (num_qubits - 1 - wire)
}

fn apply_1q(amps: &mut [C64], m: usize, wire: usize, u: &Mat2) {
    let b = bit(m, wire);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + b {
            let (a0, a1) = (amps[i], amps[i + b]);
            amps[i] = u[0][0] * a0 + u[0][1] * a1;
            amps[i + b] = u[1][0] * a0 + u[1][1] * a1;
        }
        base += 2 * b;
    }
}

fn apply_controlled(amps: &mut [C64], m: usize, control: usize, target: usize, u: &Mat2) {
    let cb = bit(m, control);
    let tb = bit(m, target);
    for i in 0..amps.len() {
        if i & cb != 0 && i & tb == 0 {
            let j = i | tb;
            let (a0, a1) = (amps[i], amps[j]);
            amps[i] = u[0][0] * a0 + u[0][1] * a1;
            amps[j] = u[1][0] * a0 + u[1][1] * a1;
        }
    }
}

fn apply_cnot(amps: &mut [C64], m: usize, control: usize, target: usize) {
    let cb = bit(m, control);
    let tb = bit(m, target);
    for i in 0..amps.len() {
        if i & cb != 0 && i & tb == 0 {
            amps.swap(i, i | tb);
        }
    }
}

fn apply_cz(amps: &mut [C64], m: usize, a: usize, b: usize) {
    let mask = bit(m, a) | bit(m, b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

/// Loads a nonnegative real vector as amplitudes, `v / ||v||_2`.
///
/// Negative entries are clamped to zero first (Gaussian noising can push
/// latents below zero).
pub fn amplitude_embed(v: &[f64]) -> Result<StateVector> {
    let num_qubits = log2_exact(v.len())?;
    let norm = v
        .iter()
        .map(|&x| if x > 0.0 { x * x } else { 0.0 })
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let amps = v
        .iter()
        .map(|&x| C64::from(if x > 0.0 { x / norm } else { 0.0 }))
        .collect();
    Ok(StateVector { num_qubits, amps })
}

/// Born-rule probabilities of every basis state.
pub fn full_probs(s: &StateVector) -> Vec<f64> {
    s.amps.iter().map(|a| a.norm_sqr()).collect()
}

/// Joint-basis weights with every ancilla in `|0>`:
/// `probs[j] = |amp[j * 2^n_A]|^2` for `j < 2^n`. The result sums to at most 1.
pub fn ancilla_projected_probs(s: &StateVector, n: usize, n_ancilla: usize) -> Result<Vec<f64>> {
    if n + n_ancilla != s.num_qubits {
        return Err(Error::BadSplit {
            data: n,
            ancilla: n_ancilla,
            total: s.num_qubits,
        });
    }
    Ok(s.amps
        .iter()
        .step_by(1 << n_ancilla)
        .map(|a| a.norm_sqr())
        .collect())
}

/// Empirical frequencies of `n_shots` draws from `p` (renormalized to sum 1).
pub fn sample_shots(p: &[f64], n_shots: u64, seed: u64) -> Result<Vec<f64>> {
    if n_shots == 0 {
        return Err(Error::ZeroShots);
    }
    let dist = WeightedIndex::new(p.iter().map(|&x| x.max(0.0))).map_err(|_| Error::AllZero)?;
    let mut rng = rng::stream(&[rng::domain::SHOTS, seed]);
    let mut counts = vec![0u64; p.len()];
    for _ in 0..n_shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / n_shots as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn real_amps(s: &StateVector) -> Vec<f64> {
        s.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn embed_examples() {
        let s = amplitude_embed(&[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(&real_amps(&s), &[1.0, 0.0, 0.0, 0.0], 1e-15));
        let s = amplitude_embed(&[1.0; 4]).unwrap();
        assert!(close(&real_amps(&s), &[0.5; 4], 1e-15));
        let s = amplitude_embed(&[3.0, 4.0]).unwrap();
        assert!(close(&real_amps(&s), &[0.6, 0.8], 1e-15));
        assert!(s.amplitudes().iter().all(|a| a.im == 0.0));
    }

    #[test]
    fn embed_errors_and_clamping() {
        assert!(matches!(amplitude_embed(&[0.0; 4]), Err(Error::ZeroVector)));
        assert!(matches!(
            amplitude_embed(&[1.0; 3]),
            Err(Error::BadLength(3))
        ));
        assert!(matches!(amplitude_embed(&[]), Err(Error::BadLength(0))));
        assert!(matches!(
            amplitude_embed(&[-1.0, -2.0]),
            Err(Error::ZeroVector)
        ));
        let s = amplitude_embed(&[-5.0, 3.0, 0.0, 4.0]).unwrap();
        assert!(close(&real_amps(&s), &[0.0, 0.6, 0.0, 0.8], 1e-15));
    }

    #[test]
    fn gate_examples() {
        let mut s = StateVector::zero(1);
        s.apply(&Gate::ry(0, PI)).unwrap();
        assert!(close(&full_probs(&s), &[0.0, 1.0], 1e-15));
        assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-15);

        // |10> -> |11> with wire 0 as the most significant bit.
        let mut s = StateVector::basis(2, 0b10);
        s.apply(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11));

        let mut s = amplitude_embed(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let before = s.clone();
        s.apply(&Gate::rot(1, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn ry_twice_is_minus_identity() {
        let mut s = StateVector::zero(1);
        s.apply_circuit(&[Gate::ry(0, PI), Gate::ry(0, PI)])
            .unwrap();
        assert!((s.amplitudes()[0].re + 1.0).abs() < 1e-15);
        assert!(close(&full_probs(&s), &[1.0, 0.0], 1e-15));
        let mut e = StateVector::zero(2);
        e.apply_circuit(&[]).unwrap();
        assert_eq!(e, StateVector::zero(2));
    }

    #[test]
    fn wire_errors() {
        let mut s = StateVector::zero(2);
        assert!(matches!(
            s.apply(&Gate::ry(2, 0.1)),
            Err(Error::WireOutOfRange { wire: 2, .. })
        ));
        assert!(matches!(
            s.apply(&Gate::cnot(1, 1)),
            Err(Error::DuplicateWire(1))
        ));
    }

    #[test]
    fn gate_matrices_are_unitary() {
        let angles = [0.0, 0.3, -1.7, 2.9, PI, 5.5];
        for kind in GateKind::ALL {
            for (i, &a) in angles.iter().enumerate() {
                let g = Gate {
                    kind,
                    wires: [0, 1],
                    params: [a, angles[(i + 2) % 6], angles[(i + 4) % 6]],
                };
                let u = g.local_matrix();
                let p = mat_mul(&u, &dagger(&u));
                for (r, row) in p.iter().enumerate() {
                    for (c, v) in row.iter().enumerate() {
                        let want = if r == c { 1.0 } else { 0.0 };
                        assert!((v - C64::from(want)).norm() < 1e-12, "{kind:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_undoes_gate() {
        let mut s = amplitude_embed(&[0.1, 0.7, 0.2, 0.5, 0.3, 0.0, 0.9, 0.4]).unwrap();
        let orig = s.clone();
        let gates = [
            Gate::rot(0, 0.3, 1.1, -0.4),
            Gate::u3(2, 0.9, 0.2, 1.4),
            Gate::cry(1, 2, 0.8),
            Gate::crz(2, 0, -1.3),
            Gate::cz(0, 1),
            Gate::cnot(2, 1),
        ];
        s.apply_circuit(&gates).unwrap();
        for g in gates.iter().rev() {
            s.apply_inverse(g).unwrap();
        }
        for (a, b) in s.amplitudes().iter().zip(orig.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn probability_examples() {
        let s = amplitude_embed(&[3.0, 4.0]).unwrap();
        assert!(close(&full_probs(&s), &[0.36, 0.64], 1e-15));
        let s = amplitude_embed(&[1.0; 4]).unwrap();
        assert!(close(&full_probs(&s), &[0.25; 4], 1e-15));
    }

    #[test]
    fn projection_examples() {
        let data = amplitude_embed(&[0.2, 0.9, 0.4, 0.1]).unwrap();
        let joint = data.with_ancillas(1);
        let p = ancilla_projected_probs(&joint, 2, 1).unwrap();
        assert!(close(&p, &full_probs(&data), 1e-15));

        let mut flipped = joint.clone();
        flipped.apply(&Gate::ry(2, PI)).unwrap();
        let p = ancilla_projected_probs(&flipped, 2, 1).unwrap();
        assert!(p.iter().all(|&x| x.abs() < 1e-30));

        assert!(matches!(
            ancilla_projected_probs(&joint, 2, 2),
            Err(Error::BadSplit { .. })
        ));
    }

    #[test]
    fn projection_matches_even_slice_of_full_probs() {
        let mut s = amplitude_embed(&[0.3, 0.1, 0.8, 0.5, 0.2, 0.6, 0.7, 0.4])
            .unwrap()
            .with_ancillas(1);
        s.apply_circuit(&[
            Gate::rot(3, 0.4, 1.2, 0.3),
            Gate::cnot(0, 3),
            Gate::cry(3, 1, 0.9),
            Gate::u3(2, 0.5, 0.1, 0.7),
            Gate::cnot(3, 2),
        ])
        .unwrap();
        let full = full_probs(&s);
        let slice: Vec<f64> = full.iter().step_by(2).copied().collect();
        let p = ancilla_projected_probs(&s, 3, 1).unwrap();
        assert!(close(&p, &slice, 1e-15));
        let rest: f64 = full.iter().skip(1).step_by(2).sum();
        assert!((p.iter().sum::<f64>() + rest - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shots_examples() {
        assert!(matches!(sample_shots(&[1.0], 0, 1), Err(Error::ZeroShots)));
        let f = sample_shots(&[1.0, 0.0, 0.0, 0.0], 17, 3).unwrap();
        assert_eq!(f, vec![1.0, 0.0, 0.0, 0.0]);
        let a = sample_shots(&[0.5, 0.5], 4, 11).unwrap();
        let b = sample_shots(&[0.5, 0.5], 4, 11).unwrap();
        assert_eq!(a, b);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // Unnormalized input is renormalized before sampling.
        let f = sample_shots(&[0.0, 0.25], 9, 5).unwrap();
        assert_eq!(f, vec![0.0, 1.0]);
    }

    #[test]
    fn uniform_shots_concentrate() {
        let p = vec![1.0 / 16.0; 16];
        for seed in 0..20 {
            let f = sample_shots(&p, 1 << 14, seed).unwrap();
            let worst = f.iter().map(|x| (x - 1.0 / 16.0).abs()).fold(0.0, f64::max);
            assert!(worst < 0.02, "seed {seed}: {worst}");
        }
    }
}
