//! Brute-force reference implementations shared by integration tests.
//!
//! Gates are expanded to full `2^m x 2^m` matrices with Kronecker products
//! (controlled gates as `P0 (x) I + P1 (x) U`) and applied by dense
//! matrix-vector multiplication. Nothing here calls into the simulator's
//! gate kernels.

#![allow(dead_code)]

use qscd_core::qsim::C64;
use qscd_core::{Gate, GateKind};
use rand::Rng;

pub type Dense = Vec<Vec<C64>>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn eye(d: usize) -> Dense {
    (0..d)
        .map(|i| (0..d).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect())
        .collect()
}

fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn add(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = vec![vec![c(0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Textbook single-qubit matrices.
fn one_qubit(kind: GateKind, p: [f64; 3]) -> Dense {
    let i = C64::i();
    let rz = |t: f64| {
        vec![
            vec![(-i * t / 2.0).exp(), c(0.0)],
            vec![c(0.0), (i * t / 2.0).exp()],
        ]
    };
    let ry = |t: f64| {
        let (s, co) = ((t / 2.0).sin(), (t / 2.0).cos());
        vec![vec![c(co), c(-s)], vec![c(s), c(co)]]
    };
    match kind {
        GateKind::Ry | GateKind::Cry => ry(p[0]),
        GateKind::Rz | GateKind::Crz => rz(p[0]),
        // Rot(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi)
        GateKind::Rot => matmul(&rz(p[2]), &matmul(&ry(p[1]), &rz(p[0]))),
        GateKind::U3 => {
            let (th, ph, la) = (p[0], p[1], p[2]);
            let (s, co) = ((th / 2.0).sin(), (th / 2.0).cos());
            vec![
                vec![c(co), -(i * la).exp() * s],
                vec![(i * ph).exp() * s, (i * (ph + la)).exp() * co],
            ]
        }
        GateKind::Cnot => vec![vec![c(0.0), c(1.0)], vec![c(1.0), c(0.0)]],
        GateKind::Cz => vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(-1.0)]],
    }
}

/// `I (x) ... (x) op_w (x) ... (x) I`, wire 0 leftmost.
fn place(m: usize, ops: &[(usize, Dense)]) -> Dense {
    let mut out = vec![vec![c(1.0)]];
    for w in 0..m {
        let f = ops
            .iter()
            .find(|(q, _)| *q == w)
            .map(|(_, op)| op.clone())
            .unwrap_or_else(|| eye(2));
        out = kron(&out, &f);
    }
    out
}

pub fn gate_matrix(g: &Gate, m: usize) -> Dense {
    let u = one_qubit(g.kind, g.params);
    match g.kind.arity() {
        1 => place(m, &[(g.wires[0], u)]),
        _ => {
            let p0 = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(0.0)]];
            let p1 = vec![vec![c(0.0), c(0.0)], vec![c(0.0), c(1.0)]];
            let (ctl, tgt) = (g.wires[0], g.wires[1]);
            add(&place(m, &[(ctl, p0)]), &place(m, &[(ctl, p1), (tgt, u)]))
        }
    }
}

pub fn circuit_matrix(gates: &[Gate], m: usize) -> Dense {
    gates
        .iter()
        .fold(eye(1 << m), |acc, g| matmul(&gate_matrix(g, m), &acc))
}

pub fn apply(u: &Dense, v: &[C64]) -> Vec<C64> {
    u.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn random_gate<R: Rng>(r: &mut R, m: usize) -> Gate {
    let kinds: Vec<GateKind> = GateKind::ALL
        .into_iter()
        .filter(|k| k.arity() <= m)
        .collect();
    let kind = kinds[r.random_range(0..kinds.len())];
    let a = r.random_range(0..m);
    let mut b = r.random_range(0..m);
    while m > 1 && b == a {
        b = r.random_range(0..m);
    }
    let mut p = || r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    match kind {
        GateKind::Rot => Gate::rot(a, p(), p(), p()),
        GateKind::U3 => Gate::u3(a, p(), p(), p()),
        GateKind::Ry => Gate::ry(a, p()),
        GateKind::Rz => Gate::rz(a, p()),
        GateKind::Cnot => Gate::cnot(a, b),
        GateKind::Cz => Gate::cz(a, b),
        GateKind::Cry => Gate::cry(a, b, p()),
        GateKind::Crz => Gate::crz(a, b, p()),
    }
}

pub fn random_state<R: Rng>(r: &mut R, m: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..1 << m)
        .map(|_| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

/// `max_j p_j`-normalized `|amp|^2` over ancilla-zero indices, via the dense
/// oracle: block output for latent `x` on `n` data and `n_a` ancilla qubits.
pub fn dense_block_output(gates: &[Gate], x: &[f64], n: usize, n_a: usize) -> Vec<f64> {
    let m = n + n_a;
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut psi = vec![c(0.0); 1 << m];
    for (j, v) in x.iter().enumerate() {
        // |j> (x) |0...0>
        psi[j << n_a] = c(v / norm);
    }
    let out = apply(&circuit_matrix(gates, m), &psi);
    let p: Vec<f64> = (0..1 << n).map(|j| out[j << n_a].norm_sqr()).collect();
    let mx = p.iter().copied().fold(0.0, f64::max);
    p.iter().map(|v| v / mx).collect()
}
