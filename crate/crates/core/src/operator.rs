//! Second-order elliptic operators
//! `L u = Σ a_ij ∂_i∂_j u + Σ b_i ∂_i u + c u` (no ½ in front of the
//! second-order part) and the test functions they act on.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::DomainModel;
use crate::jet::Jet;
use crate::linalg::{dot, Matrix};
use crate::scalar::{point_to_f64, Scalar};

pub type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type VectorFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type MatrixFn<T> = Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>;

/// Tolerance used when checking `u = 0` and `Lu = 0` on the boundary.
pub const BOUNDARY_RESIDUAL_TOL: f64 = 1e-8;

/// Elliptic operator with coefficients given as closures.
///
/// `ellipticity` and `bound` are the declared constants λ and C: every
/// eigenvalue of `a(x)` is at least λ and every coefficient is bounded by C
/// in absolute value. They are checked on samples by [`validate`], never
/// assumed. Hölder regularity of the coefficients is a contract of the
/// caller and is carried only as the `holder_alpha` label.
#[derive(Clone)]
pub struct EllipticOperator<T> {
    dim: usize,
    a: MatrixFn<T>,
    b: VectorFn<T>,
    c: ScalarFn<T>,
    ellipticity: T,
    bound: T,
    constant: bool,
    pub holder_alpha: f64,
}

impl<T: Scalar> EllipticOperator<T> {
    pub fn new(
        dim: usize,
        a: MatrixFn<T>,
        b: VectorFn<T>,
        c: ScalarFn<T>,
        ellipticity: T,
        bound: T,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "must be positive".into(),
            });
        }
        if !(ellipticity > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "ellipticity",
                reason: format!("must be positive, got {ellipticity}"),
            });
        }
        if !(bound > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "bound",
                reason: format!("must be positive, got {bound}"),
            });
        }
        Ok(Self {
            dim,
            a,
            b,
            c,
            ellipticity,
            bound,
            constant: false,
            holder_alpha: 0.5,
        })
    }

    /// Constant-coefficient operator; λ and C are read off the coefficients.
    pub fn constant(a: Matrix<T>, b: Vec<T>, c: T) -> Result<Self> {
        let dim = a.dim();
        if b.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.len(),
            });
        }
        let ellipticity = a.symmetric_eigenvalues()[0];
        let bound = b
            .iter()
            .fold(a.max_abs().max(c.abs()), |acc, v| acc.max(v.abs()));
        let (a2, b2) = (a.clone(), b.clone());
        let mut op = Self::new(
            dim,
            Arc::new(move |_| a2.clone()),
            Arc::new(move |_| b2.clone()),
            Arc::new(move |_| c),
            ellipticity,
            bound,
        )?;
        op.constant = true;
        Ok(op)
    }

    /// `a ∂² + b ∂ + c` on the line.
    pub fn constant_1d(a: T, b: T, c: T) -> Result<Self> {
        Self::constant(Matrix::from_diagonal(&[a]), vec![b], c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ellipticity(&self) -> T {
        self.ellipticity
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    /// True when built by [`EllipticOperator::constant`].
    pub fn has_constant_coefficients(&self) -> bool {
        self.constant
    }

    pub fn a(&self, x: &[T]) -> Matrix<T> {
        (self.a)(x)
    }

    pub fn b(&self, x: &[T]) -> Vec<T> {
        (self.b)(x)
    }

    pub fn c(&self, x: &[T]) -> T {
        (self.c)(x)
    }

    /// Returns a copy with the zeroth-order coefficient replaced.
    pub fn with_potential(&self, c: ScalarFn<T>) -> Self {
        Self {
            c,
            constant: false,
            ..self.clone()
        }
    }
}

impl<T: Scalar> fmt::Debug for EllipticOperator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticOperator")
            .field("dim", &self.dim)
            .field("ellipticity", &self.ellipticity)
            .field("bound", &self.bound)
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

/// A function `u` with optional analytic gradient and Hessian.
#[derive(Clone)]
pub struct TestFunction<T> {
    dim: usize,
    value: ScalarFn<T>,
    gradient: Option<VectorFn<T>>,
    hessian: Option<MatrixFn<T>>,
}

impl<T: Scalar> TestFunction<T> {
    pub fn new(
        dim: usize,
        value: ScalarFn<T>,
        gradient: Option<VectorFn<T>>,
        hessian: Option<MatrixFn<T>>,
    ) -> Self {
        Self {
            dim,
            value,
            gradient,
            hessian,
        }
    }

    /// Value-only function; [`apply_l`] rejects it.
    pub fn value_only(dim: usize, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self::new(dim, Arc::new(f), None, None)
    }

    /// Builds value, gradient and Hessian from one jet expression.
    ///
    /// The closure must derive any constants from its inputs (`Jet + T`,
    /// `Jet * T`) rather than hard-coding a jet dimension: the value path
    /// evaluates it on derivative-free jets.
    pub fn from_jet(dim: usize, f: impl Fn(&[Jet<T>]) -> Jet<T> + Send + Sync + 'static) -> Self {
        let f = Arc::new(f);
        let fv = f.clone();
        let fg = f.clone();
        let fh = f;
        Self::new(
            dim,
            Arc::new(move |x: &[T]| {
                let v: Vec<Jet<T>> = x.iter().map(|&xi| Jet::constant(0, xi)).collect();
                fv(&v).value
            }),
            Some(Arc::new(move |x: &[T]| fg(&Jet::seed(x)).grad)),
            Some(Arc::new(move |x: &[T]| {
                let j = fh(&Jet::seed(x));
                let n = x.len();
                let rows: Vec<Vec<T>> = (0..n).map(|i| j.hess[i * n..(i + 1) * n].to_vec()).collect();
                Matrix::from_rows(&rows)
            })),
        )
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(
            dim,
            Arc::new(|_| T::zero()),
            Some(Arc::new(move |_| vec![T::zero(); dim])),
            Some(Arc::new(move |_| Matrix::zeros(dim))),
        )
    }

    /// `α·u + β·v`, keeping derivatives when both operands have them.
    pub fn linear_combination(alpha: T, u: &Self, beta: T, v: &Self) -> Self {
        let (uv, vv) = (u.value.clone(), v.value.clone());
        let value: ScalarFn<T> = Arc::new(move |x| alpha * uv(x) + beta * vv(x));
        let gradient = match (&u.gradient, &v.gradient) {
            (Some(ug), Some(vg)) => {
                let (ug, vg) = (ug.clone(), vg.clone());
                Some(Arc::new(move |x: &[T]| {
                    ug(x)
                        .iter()
                        .zip(vg(x))
                        .map(|(&a, b)| alpha * a + beta * b)
                        .collect::<Vec<T>>()
                }) as VectorFn<T>)
            }
            _ => None,
        };
        let hessian = match (&u.hessian, &v.hessian) {
            (Some(uh), Some(vh)) => {
                let (uh, vh) = (uh.clone(), vh.clone());
                Some(Arc::new(move |x: &[T]| {
                    let (hu, hv) = (uh(x), vh(x));
                    let n = hu.dim();
                    let mut m = Matrix::zeros(n);
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] = alpha * hu[(i, j)] + beta * hv[(i, j)];
                        }
                    }
                    m
                }) as MatrixFn<T>)
            }
            _ => None,
        };
        Self::new(u.dim, value, gradient, hessian)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[T]) -> T {
        (self.value)(x)
    }

    pub fn value_fn(&self) -> ScalarFn<T> {
        self.value.clone()
    }

    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        self.gradient
            .as_ref()
            .map(|g| g(x))
            .ok_or(Error::MissingDerivatives("gradient"))
    }

    pub fn hessian(&self, x: &[T]) -> Result<Matrix<T>> {
        self.hessian
            .as_ref()
            .map(|h| h(x))
            .ok_or(Error::MissingDerivatives("hessian"))
    }
}

impl<T: Scalar> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("dim", &self.dim)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T> {
    pub min_eigenvalue: T,
    pub max_symmetry_defect: T,
    pub coefficient_sup: T,
    pub samples: usize,
}

/// Checks symmetry, ellipticity and the coefficient bound at every sample.
pub fn validate<T: Scalar>(op: &EllipticOperator<T>, samples: &[Vec<T>]) -> Result<ValidationReport<T>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sym_tol = T::lit(1e-12).max(T::lit(4.0) * T::epsilon());
    let mut report = ValidationReport {
        min_eigenvalue: T::infinity(),
        max_symmetry_defect: T::zero(),
        coefficient_sup: T::zero(),
        samples: samples.len(),
    };
    for x in samples {
        if x.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: x.len(),
            });
        }
        let a = op.a(x);
        let norm = a.frobenius_norm();
        let defect = a.symmetry_defect();
        if defect > sym_tol * norm {
            return Err(Error::AsymmetricMatrix {
                point: point_to_f64(x),
                defect: defect.as_f64(),
            });
        }
        let eig = a.symmetric_eigenvalues()[0];
        if eig < op.ellipticity() - T::lit(16.0) * T::epsilon() * norm {
            return Err(Error::EllipticityViolation {
                point: point_to_f64(x),
                eigenvalue: eig.as_f64(),
                bound: op.ellipticity().as_f64(),
            });
        }
        let bv = op.b(x);
        let cv = op.c(x);
        let checks = [("a", a.max_abs()), ("b", bv.iter().fold(T::zero(), |m, v| m.max(v.abs()))), ("c", cv.abs())];
        for (name, value) in checks {
            if value > op.bound() {
                return Err(Error::CoefficientUnbounded {
                    point: point_to_f64(x),
                    name: name.into(),
                    value: value.as_f64(),
                    bound: op.bound().as_f64(),
                });
            }
            report.coefficient_sup = report.coefficient_sup.max(value);
        }
        report.min_eigenvalue = report.min_eigenvalue.min(eig);
        report.max_symmetry_defect = report.max_symmetry_defect.max(defect);
    }
    Ok(report)
}

/// `(Lu)(x)` from the analytic derivatives of `u`.
pub fn apply_l<T: Scalar>(op: &EllipticOperator<T>, u: &TestFunction<T>, x: &[T]) -> Result<T> {
    let h = u.hessian(x)?;
    let g = u.gradient(x)?;
    let a = op.a(x);
    let n = op.dim();
    let mut second = T::zero();
    for i in 0..n {
        for j in 0..n {
            second = second + a[(i, j)] * h[(i, j)];
        }
    }
    Ok(second + dot(&op.b(x), &g) + op.c(x) * u.value(x))
}

/// Grid estimate of `λ₀ = sup c` over the closed domain. Sampling can only
/// under-estimate the true supremum.
pub fn lambda0<T: Scalar>(op: &EllipticOperator<T>, domain: &DomainModel<T>, resolution: T) -> T {
    domain
        .closure_samples(resolution, 100)
        .iter()
        .map(|x| op.c(x))
        .fold(T::neg_infinity(), T::max)
}

/// Checks `|u| ≤ tol` at sampled boundary points.
pub fn check_boundary_values<T: Scalar>(u: &TestFunction<T>, domain: &DomainModel<T>, tol: T) -> Result<()> {
    for x in domain.boundary_samples(256) {
        let v = u.value(&x);
        if !(v.abs() <= tol) {
            return Err(Error::BoundaryConditionViolated {
                condition: "u = 0",
                point: point_to_f64(&x),
                residual: v.as_f64(),
            });
        }
    }
    Ok(())
}

/// Checks membership in D(L): `|u| ≤ tol` and `|Lu| ≤ tol` on sampled
/// boundary points.
pub fn check_domain_membership<T: Scalar>(
    op: &EllipticOperator<T>,
    u: &TestFunction<T>,
    domain: &DomainModel<T>,
    tol: T,
) -> Result<()> {
    check_boundary_values(u, domain, tol)?;
    for x in domain.boundary_samples(256) {
        let lu = apply_l(op, u, &x)?;
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

/// `sgn(u(x₀))·(Lu − λ₀u)(x₀)` at the grid maximiser `x₀` of `|u|`.
///
/// The maximum principle makes this non-positive for `u` vanishing on the
/// boundary; on a grid it is non-positive up to an error that vanishes with
/// the resolution.
pub fn dissipativity_residual<T: Scalar>(
    op: &EllipticOperator<T>,
    u: &TestFunction<T>,
    domain: &DomainModel<T>,
    resolution: T,
) -> Result<T> {
    check_boundary_values(u, domain, T::lit(BOUNDARY_RESIDUAL_TOL))?;
    let samples = domain.closure_samples(resolution, 100);
    let mut best: Option<(&Vec<T>, T)> = None;
    for x in &samples {
        if domain.signed_distance(x) <= T::zero() {
            continue;
        }
        let v = u.value(x);
        if best.is_none_or(|(_, b)| v.abs() > b.abs()) {
            best = Some((x, v));
        }
    }
    let (x0, u0) = match best {
        Some(b) => b,
        None => return Err(Error::EmptySamples),
    };
    if u0 == T::zero() {
        return Ok(T::zero());
    }
    let l0 = lambda0(op, domain, resolution);
    let r = apply_l(op, u, x0)? - l0 * u0;
    Ok(u0.signum() * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sine() -> TestFunction<f64> {
        TestFunction::from_jet(1, |x| x[0].sin())
    }

    #[test]
    fn identity_operator_validates() {
        let op = EllipticOperator::constant(Matrix::identity(2), vec![0.0, 0.0], 0.0).unwrap();
        let samples = vec![vec![0.1, 0.2], vec![-0.3, 0.5]];
        let r = validate(&op, &samples).unwrap();
        assert_eq!(r.min_eigenvalue, 1.0);
        assert_eq!(r.max_symmetry_defect, 0.0);
    }

    #[test]
    fn coupled_constant_matrix_has_min_eigenvalue_one() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let op = EllipticOperator::constant(a, vec![0.0, 0.0], 0.0).unwrap();
        let r = validate(&op, &[vec![0.0, 0.0]]).unwrap();
        assert_relative_eq!(r.min_eigenvalue, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let op = EllipticOperator::new(
            2,
            Arc::new(|_: &[f64]| Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]])),
            Arc::new(|_: &[f64]| vec![0.0, 0.0]),
            Arc::new(|_: &[f64]| 0.0),
            1.0,
            5.0,
        )
        .unwrap();
        match validate(&op, &[vec![0.5, 0.5]]) {
            Err(Error::AsymmetricMatrix { defect, .. }) => assert_relative_eq!(defect, 2f64.sqrt()),
            other => panic!("expected AsymmetricMatrix, got {other:?}"),
        }
    }

    #[test]
    fn ellipticity_and_bound_violations_name_the_point() {
        let op = EllipticOperator::new(
            1,
            Arc::new(|x: &[f64]| Matrix::from_diagonal(&[1.0 - x[0]])),
            Arc::new(|x: &[f64]| vec![10.0 * x[0]]),
            Arc::new(|_: &[f64]| 0.0),
            0.5,
            2.0,
        )
        .unwrap();
        assert!(matches!(
            validate(&op, &[vec![0.0], vec![0.9]]),
            Err(Error::EllipticityViolation { ref point, .. }) if point == &vec![0.9]
        ));
        assert!(matches!(
            validate(&op, &[vec![0.3]]),
            Err(Error::CoefficientUnbounded { ref name, .. }) if name == "b"
        ));
        assert_eq!(validate(&op, &[]), Err(Error::EmptySamples));
    }

    #[test]
    fn apply_l_examples() {
        let op = EllipticOperator::constant_1d(1.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(apply_l(&op, &sine(), &[PI / 2.0]).unwrap(), -1.0, epsilon = 1e-15);

        let op = EllipticOperator::constant_1d(1.0, 1.0, 0.0).unwrap();
        let u = TestFunction::from_jet(1, |x| x[0].clone() - x[0].powi(2));
        assert_relative_eq!(apply_l(&op, &u, &[0.5]).unwrap(), -2.0, epsilon = 1e-15);

        let bare = TestFunction::value_only(1, |x: &[f64]| x[0]);
        assert_eq!(apply_l(&op, &bare, &[0.5]), Err(Error::MissingDerivatives("hessian")));
    }

    #[test]
    fn apply_l_matches_central_differences() {
        // variable coefficients, derivatives of u taken by FD instead of jets
        let op = EllipticOperator::new(
            2,
            Arc::new(|x: &[f64]| {
                Matrix::from_rows(&[vec![2.0 + x[0].sin(), 0.3], vec![0.3, 1.0 + x[1] * x[1]]])
            }),
            Arc::new(|x: &[f64]| vec![x[1], -1.0]),
            Arc::new(|x: &[f64]| -x[0] * x[0]),
            0.5,
            5.0,
        )
        .unwrap();
        let f = |x: f64, y: f64| (x * y).sin() + (0.5 * x).exp() * y * y;
        let u = TestFunction::from_jet(2, |v| (v[0].clone() * v[1].clone()).sin() + v[0].scale(0.5).exp() * v[1].powi(2));
        let x = [0.4, -0.7];
        let exact = apply_l(&op, &u, &x).unwrap();
        let mut errs = Vec::new();
        for h in [1e-2, 1e-3] {
            let fxx = (f(x[0] + h, x[1]) - 2.0 * f(x[0], x[1]) + f(x[0] - h, x[1])) / (h * h);
            let fyy = (f(x[0], x[1] + h) - 2.0 * f(x[0], x[1]) + f(x[0], x[1] - h)) / (h * h);
            let fxy = (f(x[0] + h, x[1] + h) - f(x[0] + h, x[1] - h) - f(x[0] - h, x[1] + h) + f(x[0] - h, x[1] - h))
                / (4.0 * h * h);
            let fx = (f(x[0] + h, x[1]) - f(x[0] - h, x[1])) / (2.0 * h);
            let fy = (f(x[0], x[1] + h) - f(x[0], x[1] - h)) / (2.0 * h);
            let a = op.a(&x);
            let b = op.b(&x);
            let fd = a[(0, 0)] * fxx + 2.0 * a[(0, 1)] * fxy + a[(1, 1)] * fyy + b[0] * fx + b[1] * fy + op.c(&x) * f(x[0], x[1]);
            errs.push((fd - exact).abs());
        }
        assert!(errs[0] < 1e-3, "{errs:?}");
        // O(h²): a tenfold smaller step gives roughly a hundredfold smaller error
        assert!(errs[1] < errs[0] / 50.0, "{errs:?}");
    }

    #[test]
    fn lambda0_examples() {
        let dom = DomainModel::interval(0.0, 1.0).unwrap();
        let op = EllipticOperator::constant_1d(1.0, 0.0, 0.0).unwrap();
        assert_eq!(lambda0(&op, &dom, 0.01), 0.0);
        let op2 = op.with_potential(Arc::new(|x: &[f64]| -1.0 - x[0] * x[0]));
        assert_eq!(lambda0(&op2, &dom, 0.01), -1.0);
        let op3 = op.with_potential(Arc::new(|x: &[f64]| (10.0 * x[0]).sin()));
        let l = lambda0(&op3, &dom, 1e-4);
        assert!(l <= 1.0 && l > 1.0 - 1e-3, "{l}");
    }

    #[test]
    fn dissipativity_examples() {
        let op = EllipticOperator::constant_1d(1.0, 0.0, 0.0).unwrap();
        let dom = DomainModel::interval(0.0, PI).unwrap();
        let r = dissipativity_residual(&op, &sine(), &dom, 1e-3).unwrap();
        assert_relative_eq!(r, -1.0, epsilon = 1e-6);

        let dom = DomainModel::interval(0.0, 1.0).unwrap();
        let u = TestFunction::from_jet(1, |x| x[0].clone() - x[0].powi(2));
        let r = dissipativity_residual(&op, &u, &dom, 1e-3).unwrap();
        assert_relative_eq!(r, -2.0, epsilon = 1e-12);

        let bad = TestFunction::from_jet(1, |x| x[0].cos());
        assert!(matches!(
            dissipativity_residual(&op, &bad, &dom, 1e-3),
            Err(Error::BoundaryConditionViolated { .. })
        ));
    }

    #[test]
    fn linear_combination_keeps_derivatives() {
        let u = sine();
        let v = TestFunction::from_jet(1, |x| x[0].powi(3));
        let w = TestFunction::linear_combination(2.0, &u, -3.0, &v);
        let x = [0.3];
        assert_relative_eq!(w.hessian(&x).unwrap()[(0, 0)], -2.0 * 0.3f64.sin() - 18.0 * 0.3, epsilon = 1e-14);
    }
}
