use qscd_core::autodiff::{block_input, block_loss, finite_diff_oracle, grad_block};
use qscd_core::circuits::{build, param_count, Family};
use qscd_core::forward::max_normalize;
use qscd_core::rng;
use qscd_core::train::loss::HybridLoss;
use rand::Rng;

/// Adjoint gradient vs central differences for random small blocks.
fn check_family(family: Family, cases: u64) {
    for case in 0..cases {
        let mut r = rng::stream(&[2001, family.code() as u64, case]);
        let n_a = r.random_range(0..=1);
        let n = r.random_range(2..=4 - n_a);
        let m = n + n_a;
        let layers = r.random_range(1..=3);
        let theta: Vec<f64> = (0..param_count(family, m, layers))
            .map(|_| r.random_range(-3.0..3.0))
            .collect();
        let x: Vec<f64> = (0..1 << n).map(|_| r.random_range(0.05..1.0)).collect();
        let target: Vec<f64> = (0..1 << n).map(|_| r.random_range(0.0..1.0)).collect();
        let target = max_normalize(&target).unwrap().into_vec();
        let loss = HybridLoss::new(target, 0.5, 5.0);
        let input = block_input(&x, n_a).unwrap();

        let c = build(family, m, layers, &theta).unwrap();
        let adj = grad_block(&c, &input, n_a, &loss).unwrap();
        let fd = finite_diff_oracle(
            &theta,
            |t| {
                let c = build(family, m, layers, t).unwrap();
                block_loss(&c, &input, n_a, &loss).unwrap()
            },
            1e-4,
        );
        for (i, (a, f)) in adj.grad.iter().zip(&fd).enumerate() {
            // Floor: FD rounding noise is about 1e-16 * loss / h, ~1e-10 here.
            let rel = (a - f).abs() / a.abs().max(f.abs()).max(1e-5);
            assert!(
                rel < 1e-4,
                "{family} case {case} param {i}: adjoint {a} vs fd {f}"
            );
        }
    }
}

#[test]
fn circuit1_gradients() {
    check_family(Family::Circuit1, 15);
}

#[test]
fn circuit2_gradients() {
    check_family(Family::Circuit2, 15);
}

#[test]
fn circuit3_gradients() {
    check_family(Family::Circuit3, 15);
}
