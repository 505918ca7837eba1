//! Charts whose normal coordinate lines leave the boundary along the
//! oblique direction, and the local squeezed reflection built on them.

use crate::error::{Error, Result};
use crate::geometry::{Chart, DomainModel};
use crate::linalg::axpy;
use crate::operator::{apply_l, EllipticOperator, TestFunction, BOUNDARY_RESIDUAL_TOL};
use crate::scalar::{point_to_f64, Scalar};

use super::frame::{oblique_direction, transformed_coefficients, Frame};
use super::squeeze::{squeeze, POSITIVITY_SAFETY};

/// Boundary data attached to the tangential coordinate `w'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    pub point: Vec<T>,
    pub frame: Frame<T>,
    /// `a' = ⟨v_n, A v_n⟩`
    pub a: T,
    /// `b' = b̃`
    pub b: T,
    pub oblique: Vec<T>,
    /// `Dψ(w', 0)⁻¹ ṽ_n`: the oblique direction in base-chart coordinates.
    pub direction: Vec<T>,
}

/// `ψ̃(w', w_n) = ψ((w', 0) + w_n·y(w'))` with `y(w') = Dψ(w', 0)⁻¹ ṽ_n`,
/// so that `∂_{w_n}(u∘ψ̃)` is the derivative along `ṽ_n` on the boundary.
#[derive(Debug, Clone)]
pub struct AdaptedChart<T: Scalar> {
    base: Chart<T>,
    op: EllipticOperator<T>,
    domain: DomainModel<T>,
    epsilon: T,
}

const INVERSE_ITERATIONS: usize = 200;

impl<T: Scalar> AdaptedChart<T> {
    pub fn base(&self) -> &Chart<T> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Collar width: the extension is defined for `−ε < w_n < 0`.
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn tangential_halfwidths(&self) -> &[T] {
        let n = self.dim();
        &self.base.halfwidths()[..n - 1]
    }

    pub fn boundary_data(&self, w_tan: &[T]) -> Result<BoundaryData<T>> {
        let mut z = w_tan.to_vec();
        z.push(T::zero());
        let point = self.base.psi(&z);
        let frame = Frame::from_chart(&self.base, &z)?;
        let coef = transformed_coefficients(&self.op, &frame, &point)?;
        let oblique = oblique_direction(&self.op, &frame, &self.domain, &point)?;
        let jac = self.base.jacobian(&z);
        let direction = jac.solve(&oblique).ok_or_else(|| Error::SingularJacobian {
            point: point_to_f64(&z),
            det: jac.determinant().as_f64(),
        })?;
        Ok(BoundaryData {
            point,
            frame,
            a: coef.a_nn,
            b: coef.b,
            oblique,
            direction,
        })
    }

    fn base_coords(&self, w: &[T], direction: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut z = w.to_vec();
        z[n - 1] = T::zero();
        axpy(&z, w[n - 1], direction)
    }

    pub fn psi(&self, w: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        let data = self.boundary_data(&w[..n - 1])?;
        Ok(self.base.psi(&self.base_coords(w, &data.direction)))
    }

    /// Inverts `ψ̃` by the fixed point `w_n = z_n / y_n(w')`,
    /// `w' = z' − w_n·y'(w')`.
    pub fn psi_inverse(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        let z = self.base.psi_inverse(x);
        let mut w = z.clone();
        let tol = T::lit(1e-14).max(T::lit(8.0) * T::epsilon()) * (T::one() + self.base.halfwidths()[n - 1]);
        for _ in 0..INVERSE_ITERATIONS {
            let y = self.boundary_data(&w[..n - 1])?.direction;
            let wn = z[n - 1] / y[n - 1];
            let mut next: Vec<T> = (0..n - 1).map(|i| z[i] - wn * y[i]).collect();
            next.push(wn);
            let change = next.iter().zip(&w).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            w = next;
            if change <= tol {
                return Ok(w);
            }
        }
        Err(Error::CollarTooWide(format!(
            "adapted chart inverse did not converge at {:?}",
            point_to_f64(x)
        )))
    }

    /// Squeezed reflection `F(w) = (w', −w_n + (b'/a')·w_n²)`.
    pub fn reflect(&self, w: &[T], data: &BoundaryData<T>) -> Vec<T> {
        let n = self.dim();
        let mut out = w.to_vec();
        out[n - 1] = squeeze(data.a, data.b, w[n - 1]);
        out
    }
}

/// Builds the adapted chart for `chart` and picks its collar:
/// `ε = min(cap, 0.9·inf a'/|b'|, reach/(1.9·sup y_n))`, where `reach` is the
/// chart's normal half-width (the squeezed image of the collar lies below
/// `1.9ε`). Fails with [`Error::CollarTooWide`] if the fixed-point inverse
/// would not contract on that collar.
pub fn build_adapted_chart<T: Scalar>(
    chart: &Chart<T>,
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    cap: T,
) -> Result<AdaptedChart<T>> {
    let n = chart.dim();
    if op.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: op.dim(),
        });
    }
    let mut adapted = AdaptedChart {
        base: chart.clone(),
        op: op.clone(),
        domain: domain.clone(),
        epsilon: cap,
    };
    let samples = tangential_samples(adapted.tangential_halfwidths(), 33);
    let mut positivity = T::infinity();
    let mut max_yn = T::zero();
    let mut lipschitz = T::zero();
    let fd = T::lit(1e-5) * domain.diameter();
    for w in &samples {
        let data = adapted.boundary_data(w)?;
        if !(data.a > T::zero()) {
            return Err(Error::EllipticityViolation {
                point: point_to_f64(&data.point),
                eigenvalue: data.a.as_f64(),
                bound: op.ellipticity().as_f64(),
            });
        }
        if data.b != T::zero() {
            positivity = positivity.min(T::lit(POSITIVITY_SAFETY) * data.a / data.b.abs());
        }
        if !(data.direction[n - 1] > T::zero()) {
            return Err(Error::NormalPointsOutward {
                point: point_to_f64(&data.point),
            });
        }
        max_yn = max_yn.max(data.direction[n - 1]);
        for i in 0..n - 1 {
            let mut wp = w.clone();
            wp[i] = wp[i] + fd;
            let yp = adapted.boundary_data(&wp)?.direction;
            for j in 0..n {
                lipschitz = lipschitz.max(((yp[j] - data.direction[j]) / fd).abs());
            }
        }
    }
    let reach = chart.halfwidths()[n - 1] / (T::lit(1.9) * max_yn);
    let eps = cap.min(positivity).min(reach);
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::CollarTooWide(format!("no positive collar width (cap {cap})")));
    }
    if eps * lipschitz >= T::lit(0.5) {
        return Err(Error::CollarTooWide(format!(
            "collar {eps} too wide for an injective adapted chart (direction varies at rate {lipschitz})"
        )));
    }
    adapted.epsilon = eps;
    Ok(adapted)
}

fn tangential_samples<T: Scalar>(halfwidths: &[T], per_axis: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for &h in halfwidths {
        out = out
            .into_iter()
            .flat_map(|p: Vec<T>| {
                (0..per_axis).map(move |k| {
                    let s = T::from_count(2 * k) / T::from_count(per_axis - 1) - T::one();
                    let mut q = p.clone();
                    q.push(s * h * T::lit(0.99));
                    q
                })
            })
            .collect();
    }
    out
}

/// Verifies `u = Lu = 0` at points of `∂Ω` inside the chart.
pub fn check_chart_membership<T: Scalar>(chart: &AdaptedChart<T>, u: &TestFunction<T>) -> Result<()> {
    let tol = T::lit(BOUNDARY_RESIDUAL_TOL);
    for w in tangential_samples(chart.tangential_halfwidths(), 9) {
        let x = chart.boundary_data(&w)?.point;
        let v = u.value(&x);
        if !(v.abs() <= tol) {
            return Err(Error::BoundaryConditionViolated {
                condition: "u = 0",
                point: point_to_f64(&x),
                residual: v.as_f64(),
            });
        }
        let lu = apply_l(&chart.op, u, &x)?;
        if !(lu.abs() <= tol) {
            return Err(Error::BoundaryConditionViolated {
                condition: "Lu = 0",
                point: point_to_f64(&x),
                residual: lu.as_f64(),
            });
        }
    }
    Ok(())
}

/// Local extension on the chart image: `u` inside the domain,
/// `−u(ψ̃(F(ψ̃⁻¹(x))))` on the collar.
#[derive(Debug, Clone)]
pub struct LocalExtension<T: Scalar> {
    chart: AdaptedChart<T>,
    u: TestFunction<T>,
}

impl<T: Scalar> LocalExtension<T> {
    pub fn eval(&self, x: &[T]) -> Result<T> {
        if self.chart.domain.signed_distance(x) >= T::zero() {
            return Ok(self.u.value(x));
        }
        let w = self.chart.psi_inverse(x)?;
        reflect_value(&self.chart, &self.u, &w)
    }

    pub fn chart(&self) -> &AdaptedChart<T> {
        &self.chart
    }
}

/// `−u(ψ̃(F(w)))` for `w` in the collar of `chart`.
pub(crate) fn reflect_value<T: Scalar>(chart: &AdaptedChart<T>, u: &TestFunction<T>, w: &[T]) -> Result<T> {
    let n = chart.dim();
    let inside_tangentially = w[..n - 1]
        .iter()
        .zip(chart.tangential_halfwidths())
        .all(|(&wi, &h)| wi.abs() < h);
    if !inside_tangentially || !(w[n - 1] > -chart.epsilon && w[n - 1] < T::zero()) {
        return Err(Error::OutsideChart { point: point_to_f64(w) });
    }
    let data = chart.boundary_data(&w[..n - 1])?;
    let image = chart.reflect(w, &data);
    let y = chart.base.psi(&chart.base_coords(&image, &data.direction));
    Ok(-u.value(&y))
}

pub fn local_extend<T: Scalar>(chart: &AdaptedChart<T>, u: &TestFunction<T>) -> Result<LocalExtension<T>> {
    check_chart_membership(chart, u)?;
    Ok(LocalExtension {
        chart: chart.clone(),
        u: u.clone(),
    })
}

/// `a'·∂²_s g + b'·∂_s g` at `s = 0` for `g(s) = u(ψ̃(w', s))`, by one-sided
/// second-order differences with step `h` into the domain. Vanishes to
/// `O(h²)` for `u` in the operator domain.
pub fn boundary_identity_residual<T: Scalar>(
    chart: &AdaptedChart<T>,
    u: &TestFunction<T>,
    w_tan: &[T],
    h: T,
) -> Result<T> {
    let data = chart.boundary_data(w_tan)?;
    let g = |s: T| -> T {
        let mut w = w_tan.to_vec();
        w.push(s);
        u.value(&chart.base.psi(&chart.base_coords(&w, &data.direction)))
    };
    let f: Vec<T> = (0..4).map(|k| g(h * T::from_count(k))).collect();
    let d1 = (T::lit(-3.0) * f[0] + T::lit(4.0) * f[1] - f[2]) / (T::lit(2.0) * h);
    let d2 = (T::lit(2.0) * f[0] - T::lit(5.0) * f[1] + T::lit(4.0) * f[2] - f[3]) / (h * h);
    Ok(data.a * d2 + data.b * d1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_charts;
    use crate::harness;
    use crate::linalg::{dot, Matrix};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interval_chart_is_unchanged() {
        let dom = DomainModel::interval(0.0, 1.0).unwrap();
        let op = EllipticOperator::constant_1d(1.5, 0.5, 0.0).unwrap();
        let charts = boundary_charts(&dom).unwrap();
        for c in &charts {
            let a = build_adapted_chart(c, &op, &dom, 0.1).unwrap();
            let d = a.boundary_data(&[]).unwrap();
            assert_eq!(d.a, 1.5);
            assert_eq!(f64::abs(d.b), 0.5);
            for z in [-0.05, 0.0, 0.3] {
                assert_relative_eq!(a.psi(&[z]).unwrap()[0], c.psi(&[z])[0], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn local_extension_examples() {
        let dom = DomainModel::interval(0.0, std::f64::consts::PI).unwrap();
        let op = EllipticOperator::constant_1d(1.0, 0.0, 0.0).unwrap();
        let chart = build_adapted_chart(&boundary_charts(&dom).unwrap()[0], &op, &dom, 0.3).unwrap();
        let sine = TestFunction::from_jet(1, |x| x[0].sin());
        let e = local_extend(&chart, &sine).unwrap();
        assert_relative_eq!(e.eval(&[-0.2]).unwrap(), -(0.2f64).sin(), epsilon = 1e-15);
        let z = local_extend(&chart, &TestFunction::zero(1)).unwrap();
        assert_eq!(z.eval(&[-0.2]).unwrap(), 0.0);
        assert!(matches!(e.eval(&[-0.5]), Err(Error::OutsideChart { .. })));

        let dom = DomainModel::interval(0.0, 1.0).unwrap();
        let op = EllipticOperator::constant_1d(1.0, 2.0, 0.0).unwrap();
        let chart = build_adapted_chart(&boundary_charts(&dom).unwrap()[0], &op, &dom, 0.1).unwrap();
        // u'(0)=1, u''(0)=−2, and Lu = 0 at x = 1 via the cubic/quartic tail
        let u = harness::interval_member(&op, &dom, &[], 1.0).unwrap();
        let e = local_extend(&chart, &u).unwrap();
        let h = 0.01;
        assert_relative_eq!(e.eval(&[-h]).unwrap(), -u.value(&[h + 2.0 * h * h]), epsilon = 1e-14);

        let bad = TestFunction::from_jet(1, |x| x[0].sin() * x[0].clone());
        assert!(matches!(local_extend(&chart, &bad), Err(Error::BoundaryConditionViolated { .. })));
    }

    #[test]
    fn adapted_chart_inverse_round_trips() {
        let dom = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        let op = EllipticOperator::constant(Matrix::from_diagonal(&[2.0, 1.0]), vec![0.3, 0.0], 0.0).unwrap();
        for c in boundary_charts(&dom).unwrap() {
            let a = build_adapted_chart(&c, &op, &dom, 0.2).unwrap();
            for w in [[0.1, -0.05], [-0.3, -0.15], [0.0, 0.1]] {
                let x = a.psi(&w).unwrap();
                let back = a.psi_inverse(&x).unwrap();
                assert_relative_eq!(back[0], w[0], epsilon = 1e-12);
                assert_relative_eq!(back[1], w[1], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn normal_derivative_is_oblique_derivative() {
        // ∂_n(u∘ψ̃)(w', 0) = ⟨∇u, ṽ_n⟩ by central differences with step 1e-5
        let dom = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for a in [Matrix::identity(2), Matrix::from_diagonal(&[2.0, 1.0])] {
            let op = EllipticOperator::constant(a, vec![0.0, 0.0], 0.0).unwrap();
            let u = harness::random_member(&op, &dom, &mut rng).unwrap();
            for c in boundary_charts(&dom).unwrap() {
                let ac = build_adapted_chart(&c, &op, &dom, 0.2).unwrap();
                let h = 1e-5;
                let fd = (u.value(&ac.psi(&[0.0, h]).unwrap()) - u.value(&ac.psi(&[0.0, -h]).unwrap())) / (2.0 * h);
                let d = ac.boundary_data(&[0.0]).unwrap();
                let exact: f64 = dot(&u.gradient(&d.point).unwrap(), &d.oblique);
                assert!((fd - exact).abs() < 1e-6, "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn negative_drift_limits_collar() {
        let dom = DomainModel::interval(0.0, 1.0).unwrap().with_collar(1.0).unwrap();
        let op = EllipticOperator::constant_1d(1.0, -2.0, 0.0).unwrap();
        let c = build_adapted_chart(&boundary_charts(&dom).unwrap()[0], &op, &dom, 1.0).unwrap();
        assert!(c.epsilon() < 0.5);
    }
}
