//! Property-based invariants of the operator, the one-step operator and the
//! harness.

use std::f64::consts::PI;

use feynman_dirichlet::feynman::{feynman_sweep, grid_step_for, StepConfig};
use feynman_dirichlet::geometry::{CutoffFamily, DomainModel};
use feynman_dirichlet::grid::{Grid, SampledFunction};
use feynman_dirichlet::harness;
use feynman_dirichlet::operator::{apply_l, EllipticOperator, TestFunction};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn interval_payload(seed: [f64; 4], t: f64, op: &EllipticOperator<f64>, positive: bool) -> SampledFunction<f64> {
    let h = grid_step_for(op.ellipticity(), t, 0.02);
    let grid = Grid::covering(&[-0.5], &[1.5], h).unwrap();
    SampledFunction::from_fn(grid, move |y| {
        let v = seed[0] * (3.0 * y[0]).sin() + seed[1] * (7.0 * y[0] + seed[2]).cos() + seed[3];
        if positive {
            v.abs()
        } else {
            v
        }
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn apply_l_is_linear(
        alpha in -3.0f64..3.0, beta in -3.0f64..3.0,
        b in -2.0f64..2.0, c in -1.0f64..1.0,
        x in 0.05f64..3.0,
    ) {
        let op = EllipticOperator::constant_1d(1.3, b, c).unwrap();
        let u = TestFunction::from_jet(1, |x| x[0].sin() * x[0].exp());
        let v = TestFunction::from_jet(1, |x| x[0].powi(3) - x[0].cos());
        let w = TestFunction::linear_combination(alpha, &u, beta, &v);
        let lhs = apply_l(&op, &w, &[x]).unwrap();
        let rhs = alpha * apply_l(&op, &u, &[x]).unwrap() + beta * apply_l(&op, &v, &[x]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn harness_gradients_match_finite_differences(b in -2.0f64..2.0, a1 in -0.1f64..0.1, x in 0.2f64..2.9) {
        let dom = DomainModel::interval(0.0, PI).unwrap();
        let op = EllipticOperator::constant_1d(1.0, b, 0.0).unwrap();
        let u = harness::interval_member(&op, &dom, &[a1], 1.0).unwrap();
        let h = 1e-5;
        let fd = (u.value(&[x + h]) - u.value(&[x - h])) / (2.0 * h);
        let g = u.gradient(&[x]).unwrap()[0];
        prop_assert!((fd - g).abs() <= 1e-6 * (1.0 + g.abs()));
        let fd2 = (u.value(&[x + 1e-4]) - 2.0 * u.value(&[x]) + u.value(&[x - 1e-4])) / 1e-8;
        let h2 = u.hessian(&[x]).unwrap()[(0, 0)];
        prop_assert!((fd2 - h2).abs() <= 1e-4 * (1.0 + h2.abs()));
    }
}

/// Output sup never exceeds `e^{t·sup c}` times the input sup.
#[test]
fn one_step_norm_bound() {
    let dom = DomainModel::interval(0.0, 1.0).unwrap();
    let cutoff = CutoffFamily::default();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (prop::array::uniform4(-1.0f64..1.0), -1.0f64..0.5, -2.0f64..2.0, 0.5f64..2.0);
    for t in [0.01, 0.1] {
        for _ in 0..20 {
            let (seed, c, b, a) = strategy.new_tree(&mut runner).unwrap().current();
            let op = EllipticOperator::constant_1d(a, b, c).unwrap();
            let payload = interval_payload(seed, t, &op, false);
            let out = feynman_sweep(&op, &dom, &cutoff, &payload, &StepConfig::new(t).unwrap()).unwrap();
            let bound = (t * c).exp() * payload.sup_norm() * (1.0 + 1e-8);
            assert!(out.sup_norm() <= bound, "t {t}: {} > {bound}", out.sup_norm());
        }
    }
}

/// Nonnegative payloads with `c ≤ 0` stay nonnegative.
#[test]
fn one_step_positivity() {
    let dom = DomainModel::interval(0.0, 1.0).unwrap();
    let cutoff = CutoffFamily::default();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (prop::array::uniform4(-1.0f64..1.0), -1.0f64..0.0, -2.0f64..2.0);
    for _ in 0..20 {
        let (seed, c, b) = strategy.new_tree(&mut runner).unwrap().current();
        let op = EllipticOperator::constant_1d(1.0, b, c).unwrap();
        let payload = interval_payload(seed, 0.02, &op, true);
        let out = feynman_sweep(&op, &dom, &cutoff, &payload, &StepConfig::new(0.02).unwrap()).unwrap();
        assert!(out.values().iter().all(|&v| v >= -1e-12));
    }
}

/// `F_t u` and `F_{t/2} F_{t/2} u` approach each other as `t → 0`.
#[test]
fn half_steps_approach_full_step() {
    let dom = DomainModel::interval(0.0, PI).unwrap();
    let op = EllipticOperator::constant_1d(1.0, 0.0, 0.0).unwrap();
    let cutoff = CutoffFamily::default();
    let mut gaps = Vec::new();
    for t in [0.1, 0.01, 0.001] {
        let h = grid_step_for(1.0, t / 2.0, 0.02);
        let (lo, hi) = dom.bounding_box();
        let grid = Grid::covering(lo, hi, h).unwrap();
        let u = SampledFunction::from_fn(grid, |x| if (0.0..=PI).contains(&x[0]) { x[0].sin() } else { 0.0 }).unwrap();
        let full = feynman_sweep(&op, &dom, &cutoff, &u, &StepConfig::new(t).unwrap()).unwrap();
        let half = StepConfig::new(t / 2.0).unwrap();
        let twice = feynman_sweep(&op, &dom, &cutoff, &feynman_sweep(&op, &dom, &cutoff, &u, &half).unwrap(), &half).unwrap();
        let margin = 2.0 * cutoff.width(t);
        let gap = (0..full.grid().len())
            .filter(|&i| dom.signed_distance(&full.grid().node(i)) >= margin)
            .map(|i| (full.values()[i] - twice.values()[i]).abs())
            .fold(0.0, f64::max);
        gaps.push(gap);
    }
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
}
