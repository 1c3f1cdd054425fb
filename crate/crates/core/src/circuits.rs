//! Parameterized circuit templates.
//!
//! Every builder turns a flat parameter tensor into a [`Circuit`]: a gate
//! list plus, for each gate, the index of its first trainable angle. A gate
//! with `k` angles reads parameters `offset..offset + k`. The scrambler is
//! built from fixed angles and carries no parameter bindings.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::qsim::Gate;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Strongly entangling layers: `Rot` on every wire, then a CNOT ring.
    Circuit1,
    /// `RY RZ RY RZ` per wire followed by a staggered CRY/CRZ ladder.
    Circuit2,
    /// Alternating two-qubit SU(4)-like blocks.
    Circuit3,
    /// Circuit 1 structure with fixed angles.
    Scrambler,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Circuit1 => "circuit1",
            Family::Circuit2 => "circuit2",
            Family::Circuit3 => "circuit3",
            Family::Scrambler => "scrambler",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Family::Circuit1 => 1,
            Family::Circuit2 => 2,
            Family::Circuit3 => 3,
            Family::Scrambler => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => Family::Circuit1,
            2 => Family::Circuit2,
            3 => Family::Circuit3,
            4 => Family::Scrambler,
            _ => return None,
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "circuit1" | "1" => Ok(Family::Circuit1),
            "circuit2" | "2" => Ok(Family::Circuit2),
            "circuit3" | "3" => Ok(Family::Circuit3),
            "scrambler" => Ok(Family::Scrambler),
            _ => Err(Error::BadKind {
                what: "circuit family",
                name: s.to_string(),
            }),
        }
    }
}

/// Number of trainable angles in one block of `layers` layers on `num_qubits` wires.
pub fn param_count(family: Family, num_qubits: usize, layers: usize) -> usize {
    let m = num_qubits;
    match family {
        Family::Circuit1 | Family::Scrambler => layers * m * 3,
        Family::Circuit2 => layers * (m * 4 + m.saturating_sub(1) * 2),
        Family::Circuit3 => layers * (m / 2) * 10,
    }
}

/// Shape of the parameter tensor, for error messages and checkpoints.
pub fn param_shape(family: Family, num_qubits: usize, layers: usize) -> Vec<usize> {
    match family {
        Family::Circuit1 | Family::Scrambler => vec![layers, num_qubits, 3],
        // [L, M, 4] followed by [L, M-1, 2], flattened.
        Family::Circuit2 => vec![param_count(family, num_qubits, layers)],
        Family::Circuit3 => vec![layers, num_qubits / 2, 10],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    /// Parallel to `gates`: first parameter index of each trainable gate.
    pub bindings: Vec<Option<usize>>,
    pub num_params: usize,
}

impl Circuit {
    fn new(num_qubits: usize, num_params: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            bindings: Vec::new(),
            num_params,
        }
    }

    fn push(&mut self, gate: Gate, binding: Option<usize>) {
        self.gates.push(gate);
        self.bindings.push(binding);
    }

    fn push_bound(&mut self, gate: Gate, offset: usize) {
        self.push(gate, Some(offset));
    }

    /// Rewrites every bound angle from `params`.
    pub fn rebind(&mut self, params: &[f64]) -> Result<()> {
        check_len(params.len(), self.num_params)?;
        for (g, b) in self.gates.iter_mut().zip(&self.bindings) {
            if let Some(off) = *b {
                let k = g.kind.num_params();
                g.params[..k].copy_from_slice(&params[off..off + k]);
            }
        }
        Ok(())
    }

    /// Number of distinct parameter slots the gate list actually reads.
    pub fn consumed_params(&self) -> usize {
        self.gates
            .iter()
            .zip(&self.bindings)
            .filter(|(_, b)| b.is_some())
            .map(|(g, _)| g.kind.num_params())
            .sum()
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::BadShape(format!(
            "expected {want} parameters, got {got}"
        )));
    }
    Ok(())
}

/// Circuit 1 entanglement offset for layer `l`: cycles through `1..M`.
pub fn default_range(layer: usize, num_qubits: usize) -> usize {
    if num_qubits < 2 {
        return 0;
    }
    layer % (num_qubits - 1) + 1
}

pub fn default_ranges(layers: usize, num_qubits: usize) -> Vec<usize> {
    (0..layers).map(|l| default_range(l, num_qubits)).collect()
}

/// Strongly entangling layers. `params` is `[L, M, 3]` row-major.
pub fn build_circuit1(
    num_qubits: usize,
    layers: usize,
    params: &[f64],
    ranges: Option<&[usize]>,
) -> Result<Circuit> {
    let m = num_qubits;
    check_len(params.len(), param_count(Family::Circuit1, m, layers))?;
    if m < 2 && layers > 0 {
        return Err(Error::BadShape(
            "circuit 1 needs at least two qubits".into(),
        ));
    }
    let ranges = match ranges {
        Some(r) => {
            if r.len() != layers {
                return Err(Error::BadShape(format!(
                    "{} entanglement ranges for {layers} layers",
                    r.len()
                )));
            }
            if let Some(bad) = r.iter().find(|&&r| r == 0 || r >= m) {
                return Err(Error::BadShape(format!(
                    "entanglement range {bad} outside 1..{m}"
                )));
            }
            r.to_vec()
        }
        None => default_ranges(layers, m),
    };
    let mut c = Circuit::new(m, params.len());
    for (l, &r) in ranges.iter().enumerate() {
        for q in 0..m {
            let off = (l * m + q) * 3;
            c.push_bound(
                Gate::rot(q, params[off], params[off + 1], params[off + 2]),
                off,
            );
        }
        for q in 0..m {
            c.push(Gate::cnot(q, (q + r) % m), None);
        }
    }
    Ok(c)
}

/// Circuit 2. `params` is `[L, M, 4]` followed by `[L, M-1, 2]`.
///
/// Per layer every wire gets `RY RZ RY RZ`; then each adjacent pair
/// `(q, q+1)` receives two controlled rotations. Pairs with even `q` are
/// applied before pairs with odd `q`. On even layers even pairs lead with CRY
/// and odd pairs with CRZ; odd layers swap the two.
pub fn build_circuit2(num_qubits: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    let m = num_qubits;
    check_len(params.len(), param_count(Family::Circuit2, m, layers))?;
    let pair_base = layers * m * 4;
    let pairs = m.saturating_sub(1);
    let mut c = Circuit::new(m, params.len());
    for l in 0..layers {
        for q in 0..m {
            let off = (l * m + q) * 4;
            c.push_bound(Gate::ry(q, params[off]), off);
            c.push_bound(Gate::rz(q, params[off + 1]), off + 1);
            c.push_bound(Gate::ry(q, params[off + 2]), off + 2);
            c.push_bound(Gate::rz(q, params[off + 3]), off + 3);
        }
        let order = (0..pairs).step_by(2).chain((1..pairs).step_by(2));
        for q in order {
            let off = pair_base + (l * pairs + q) * 2;
            let lead_ry = (q % 2 == 0) == (l % 2 == 0);
            let (a, b) = (params[off], params[off + 1]);
            if lead_ry {
                c.push_bound(Gate::cry(q, q + 1, a), off);
                c.push_bound(Gate::crz(q, q + 1, b), off + 1);
            } else {
                c.push_bound(Gate::crz(q, q + 1, a), off);
                c.push_bound(Gate::cry(q, q + 1, b), off + 1);
            }
        }
    }
    Ok(c)
}

/// Qubit pairs used by Circuit 3 on layer `l`: `(2i, 2i+1)` on even layers,
/// `(2i+1, (2i+2) mod M)` on odd layers, for `i < M/2`.
pub fn circuit3_pairs(layer: usize, num_qubits: usize) -> Vec<(usize, usize)> {
    let m = num_qubits;
    (0..m / 2)
        .map(|i| {
            if layer.is_multiple_of(2) {
                (2 * i, 2 * i + 1)
            } else {
                (2 * i + 1, (2 * i + 2) % m)
            }
        })
        .collect()
}

/// Circuit 3. `params` is `[L, M/2, 10]`; each block reads
/// `[U3(a) x3, U3(b) x3, RZ(a), RY(a), RZ(b), RY(b)]`, then CNOT(a,b), CNOT(b,a).
pub fn build_circuit3(num_qubits: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    let m = num_qubits;
    check_len(params.len(), param_count(Family::Circuit3, m, layers))?;
    let mut c = Circuit::new(m, params.len());
    for l in 0..layers {
        for (i, (a, b)) in circuit3_pairs(l, m).into_iter().enumerate() {
            let off = (l * (m / 2) + i) * 10;
            let p = &params[off..off + 10];
            c.push_bound(Gate::u3(a, p[0], p[1], p[2]), off);
            c.push_bound(Gate::u3(b, p[3], p[4], p[5]), off + 3);
            c.push_bound(Gate::rz(a, p[6]), off + 6);
            c.push_bound(Gate::ry(a, p[7]), off + 7);
            c.push_bound(Gate::rz(b, p[8]), off + 8);
            c.push_bound(Gate::ry(b, p[9]), off + 9);
            c.push(Gate::cnot(a, b), None);
            c.push(Gate::cnot(b, a), None);
        }
    }
    Ok(c)
}

pub fn build(family: Family, num_qubits: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    match family {
        Family::Circuit1 | Family::Scrambler => build_circuit1(num_qubits, layers, params, None),
        Family::Circuit2 => build_circuit2(num_qubits, layers, params),
        Family::Circuit3 => build_circuit3(num_qubits, layers, params),
    }
}

/// Fixed base angles of the forward scrambler, one `[L_s, n, 3]` tensor of
/// `U[0,1)` draws per forward step. Drawn once from the master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScramblerParams {
    pub seed: u64,
    pub num_qubits: usize,
    pub layers: usize,
    /// `base_angles[t - 1]` belongs to step `t`.
    pub base_angles: Vec<Vec<f64>>,
}

impl ScramblerParams {
    pub fn sample(seed: u64, num_qubits: usize, layers: usize, steps: usize) -> Self {
        let count = param_count(Family::Scrambler, num_qubits, layers);
        let base_angles = (1..=steps)
            .map(|t| {
                let mut r = rng::stream(&[rng::domain::SCRAMBLER, seed, t as u64]);
                (0..count).map(|_| r.random::<f64>()).collect()
            })
            .collect();
        ScramblerParams {
            seed,
            num_qubits,
            layers,
            base_angles,
        }
    }

    pub fn steps(&self) -> usize {
        self.base_angles.len()
    }
}

/// Scrambler for forward step `t`: Circuit 1 structure whose angles are
/// `pi * theta_t * u` for the step's base draws `u`.
pub fn build_scrambler(t: usize, theta_t: f64, base: &ScramblerParams) -> Result<Circuit> {
    if t == 0 || t > base.steps() {
        return Err(Error::StepOutOfRange {
            step: t,
            steps: base.steps(),
        });
    }
    if theta_t < 0.0 || !theta_t.is_finite() {
        return Err(Error::BadShape(format!("scrambling strength {theta_t}")));
    }
    scaled_scrambler(
        base.num_qubits,
        base.layers,
        &base.base_angles[t - 1],
        theta_t,
    )
}

/// Circuit 1 skeleton with angles `pi * scale * u`, unbound.
pub fn scaled_scrambler(
    num_qubits: usize,
    layers: usize,
    u: &[f64],
    scale: f64,
) -> Result<Circuit> {
    let angles: Vec<f64> = u.iter().map(|&x| PI * scale * x).collect();
    let mut c = build_circuit1(num_qubits, layers, &angles, None)?;
    c.bindings.iter_mut().for_each(|b| *b = None);
    c.num_params = 0;
    Ok(c)
}
