//! Builders for functions in the operator domain (`u = Lu = 0` on the
//! boundary) with exact derivatives, used as test inputs.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainModel};
use crate::jet::Jet;
use crate::operator::{EllipticOperator, TestFunction};
use crate::scalar::Scalar;

/// `u = A·sin(πs/ℓ)·e^{p(s)}·(1 + Σ_k α_k cos(kπs/ℓ))`, `s = x − lo`, on an
/// interval of length ℓ.
///
/// At either end `u = 0`, the cosine factor is stationary and
/// `Lu = u'·(2a p' + b)`, so choosing `p'` linear with
/// `p'(end) = −b(end)/(2a(end))` puts `u` in the operator domain. The
/// zeroth-order coefficient plays no role at the boundary.
pub fn interval_member<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    alphas: &[f64],
    amplitude: f64,
) -> Result<TestFunction<T>> {
    let DomainKind::Interval { lo, hi } = *domain.kind() else {
        return Err(Error::UnsupportedDomain("interval_member on a disc"));
    };
    let len = hi - lo;
    let slope = |x: T| -op.b(&[x])[0] / (T::lit(2.0) * op.a(&[x])[(0, 0)]);
    let (m_lo, m_hi) = (slope(lo), slope(hi));
    let curv = (m_hi - m_lo) / (T::lit(2.0) * len);
    let freq = T::PI() / len;
    let alphas: Vec<T> = alphas.iter().map(|&a| T::lit(a)).collect();
    let amp = T::lit(amplitude);
    Ok(TestFunction::from_jet(1, move |x| {
        let s = x[0].clone() - lo;
        let p = s.clone() * m_lo + s.powi(2) * curv;
        let mut q = Jet::constant(s.dim(), T::one());
        for (k, &a) in alphas.iter().enumerate() {
            q = q + (s.clone() * (freq * T::from_count(k + 1))).cos() * a;
        }
        (s * freq).sin() * p.exp() * q * amp
    }))
}

/// Disc member for constant coefficients: `u = q·w + q²·z` with
/// `q = 1 − |x − c|²/R²`, a quadratic `w` with coefficients
/// `[1, X, Y, X², XY, Y²]` in `X = (x − c)/R`, and
/// `z = −N / (2∇qᵀA∇q + κq)` where `N = w·(Σ a_ij ∂_ij q + b·∇q) + 2∇qᵀA∇w`.
/// On the circle `q = 0` and `Lu = N + 2z∇qᵀA∇q = 0`.
pub fn disc_member<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    coeffs: [f64; 6],
    kappa: f64,
) -> Result<TestFunction<T>> {
    let DomainKind::Disc { center, radius } = *domain.kind() else {
        return Err(Error::UnsupportedDomain("disc_member on an interval"));
    };
    if !op.has_constant_coefficients() {
        return Err(Error::InvalidParameter {
            name: "operator",
            reason: "disc members need constant coefficients".into(),
        });
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("must be positive, got {kappa}"),
        });
    }
    let a = op.a(&center);
    let b = op.b(&center);
    let c: Vec<T> = coeffs.iter().map(|&v| T::lit(v)).collect();
    let kappa = T::lit(kappa);
    let r = radius;
    let two = T::lit(2.0);
    let trace_term = -two * (a[(0, 0)] + a[(1, 1)]) / (r * r);
    Ok(TestFunction::from_jet(2, move |x| {
        let xs = (x[0].clone() - center[0]) * r.recip();
        let ys = (x[1].clone() - center[1]) * r.recip();
        let q = -(xs.powi(2) + ys.powi(2)) + T::one();
        let w = (xs.clone() * c[1] + ys.clone() * c[2] + xs.powi(2) * c[3] + xs.clone() * ys.clone() * c[4]
            + ys.powi(2) * c[5])
            + c[0];
        // physical gradients of q and w
        let gq = [xs.clone() * (-two / r), ys.clone() * (-two / r)];
        let gw = [
            (xs.clone() * (two * c[3]) + ys.clone() * c[4] + c[1]) * r.recip(),
            (xs.clone() * c[4] + ys.clone() * (two * c[5]) + c[2]) * r.recip(),
        ];
        let quad = |u: &[Jet<T>; 2], v: &[Jet<T>; 2]| {
            let mut acc = &u[0] * &v[0] * a[(0, 0)];
            acc = acc + &u[0] * &v[1] * a[(0, 1)];
            acc = acc + &u[1] * &v[0] * a[(1, 0)];
            acc + &u[1] * &v[1] * a[(1, 1)]
        };
        let lq = gq[0].clone() * b[0] + gq[1].clone() * b[1] + trace_term;
        let n = w.clone() * lq + quad(&gq, &gw) * two;
        let den = quad(&gq, &gq) * two + q.clone() * kappa;
        let z = -(n / den);
        q.clone() * w + q.powi(2) * z
    }))
}

/// Random member for the given domain, with parameters drawn from `rng`.
///
/// Interval members keep their cosine perturbation small so the maximum of
/// `|u|` stays well inside the interval.
pub fn random_member<T: Scalar, R: Rng + ?Sized>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    rng: &mut R,
) -> Result<TestFunction<T>> {
    match domain.kind() {
        DomainKind::Interval { .. } => {
            let alphas: Vec<f64> = (1..=3).map(|k| rng.random_range(-0.1..0.1) / k as f64).collect();
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            interval_member(op, domain, &alphas, sign * rng.random_range(0.5..2.0))
        }
        DomainKind::Disc { .. } => {
            let mut c = [0.0; 6];
            c[0] = rng.random_range(0.5..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            for v in &mut c[1..] {
                *v = rng.random_range(-0.5..0.5);
            }
            disc_member(op, domain, c, rng.random_range(0.5..2.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::operator::{apply_l, check_domain_membership, dissipativity_residual};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn interval_members_satisfy_boundary_conditions() {
        let dom = DomainModel::interval(0.0, PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for beta in [0.0, 1.0, -1.0, 2.0, -2.0] {
            let op = EllipticOperator::constant_1d(1.0, beta, 0.0).unwrap();
            for _ in 0..5 {
                let u = random_member(&op, &dom, &mut rng).unwrap();
                check_domain_membership(&op, &u, &dom, 1e-12).unwrap();
            }
        }
    }

    #[test]
    fn variable_coefficient_interval_member() {
        let dom = DomainModel::interval(0.0, 1.0).unwrap();
        let op = EllipticOperator::new(
            1,
            Arc::new(|x: &[f64]| Matrix::from_diagonal(&[1.0 + 0.5 * x[0]])),
            Arc::new(|x: &[f64]| vec![1.0 - 3.0 * x[0]]),
            Arc::new(|x: &[f64]| -x[0]),
            1.0,
            3.0,
        )
        .unwrap();
        let u = interval_member(&op, &dom, &[0.05], 1.0).unwrap();
        check_domain_membership(&op, &u, &dom, 1e-12).unwrap();
        assert!(apply_l(&op, &u, &[0.5]).unwrap().abs() > 1e-3);
    }

    #[test]
    fn disc_members_satisfy_boundary_conditions() {
        let dom = DomainModel::disc([0.2, -0.1], 1.5).unwrap();
        let op = EllipticOperator::constant(
            Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]),
            vec![0.4, -0.7],
            -0.5,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let u = random_member(&op, &dom, &mut rng).unwrap();
            check_domain_membership(&op, &u, &dom, 1e-12).unwrap();
        }
    }

    #[test]
    fn harness_members_are_dissipative() {
        let dom = DomainModel::interval(0.0, PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let op = EllipticOperator::constant_1d(1.0, 1.0, -0.5).unwrap();
        for _ in 0..10 {
            let u = random_member(&op, &dom, &mut rng).unwrap();
            assert!(dissipativity_residual(&op, &u, &dom, 1e-3).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn wrong_domain_kinds_are_rejected() {
        let disc = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        let op = EllipticOperator::constant_1d(1.0, 0.0, 0.0).unwrap();
        assert!(interval_member(&op, &disc, &[], 1.0).is_err());
    }
}
