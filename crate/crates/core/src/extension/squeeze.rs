//! Squeezed odd reflection on the half-line.

use crate::error::{Error, Result};
use crate::geometry::smooth_step;
use crate::operator::{TestFunction, BOUNDARY_RESIDUAL_TOL};
use crate::scalar::Scalar;

/// `F(x) = −x + (b/a)·x²` on the collar `(−ε, 0)`.
///
/// Composing an odd reflection with `F` matches second derivatives across 0
/// exactly when `a·u''(0) + b·u'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeMap1D<T> {
    a: T,
    b: T,
    epsilon: T,
}

/// Share of the positivity bound `a/|b|` a default collar may use.
pub const POSITIVITY_SAFETY: f64 = 0.9;

impl<T: Scalar> SqueezeMap1D<T> {
    /// Fails with [`Error::CollarTooWide`] unless `F > 0` on the whole collar,
    /// i.e. unless `ε < a/|b|`.
    pub fn new(a: T, b: T, epsilon: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: format!("boundary coefficient must be positive, got {a}"),
            });
        }
        if !(epsilon > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be positive, got {epsilon}"),
            });
        }
        if b != T::zero() && epsilon >= a / b.abs() {
            return Err(Error::CollarTooWide(format!(
                "epsilon {epsilon} reaches the root a/|b| = {} of the squeeze map",
                a / b.abs()
            )));
        }
        Ok(Self { a, b, epsilon })
    }

    /// Largest admissible collar not wider than `cap`:
    /// `min(cap, 0.9·a/|b|)`.
    pub fn with_cap(a: T, b: T, cap: T) -> Result<Self> {
        let eps = if b == T::zero() {
            cap
        } else {
            cap.min(T::lit(POSITIVITY_SAFETY) * a / b.abs())
        };
        Self::new(a, b, eps)
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn eval(&self, x: T) -> Result<T> {
        if !(x < T::zero() && x > -self.epsilon) {
            return Err(Error::OutsideCollar {
                x: x.as_f64(),
                epsilon: self.epsilon.as_f64(),
            });
        }
        Ok(squeeze(self.a, self.b, x))
    }
}

#[inline]
pub(crate) fn squeeze<T: Scalar>(a: T, b: T, x: T) -> T {
    -x + b / a * x * x
}

/// Weight that is 1 on `[−ε/2, ∞)` and falls smoothly to 0 at `−ε`.
pub fn collar_weight<T: Scalar>(x: T, epsilon: T) -> T {
    let half = epsilon * T::lit(0.5);
    if x >= -half {
        T::one()
    } else {
        T::one() - smooth_step((-x - half) / half)
    }
}

/// Extension of a function on `[0, ∞)` across 0 by squeezed reflection.
#[derive(Debug, Clone)]
pub struct HalfLineExtension<T: Scalar> {
    u: TestFunction<T>,
    map: SqueezeMap1D<T>,
}

impl<T: Scalar> HalfLineExtension<T> {
    pub fn eval(&self, x: T) -> T {
        if x >= T::zero() {
            return self.u.value(&[x]);
        }
        if x <= -self.map.epsilon {
            return T::zero();
        }
        let y = squeeze(self.map.a, self.map.b, x);
        -collar_weight(x, self.map.epsilon) * self.u.value(&[y])
    }

    pub fn map(&self) -> &SqueezeMap1D<T> {
        &self.map
    }
}

/// Extends `u` from `[0, ∞)` to the collar `(−ε, 0)` for the boundary
/// operator `a ∂² + b ∂`. Requires `u(0) = 0` and `a u''(0) + b u'(0) = 0`.
pub fn extend_halfline<T: Scalar>(u: &TestFunction<T>, a: T, b: T, epsilon: T) -> Result<HalfLineExtension<T>> {
    let map = SqueezeMap1D::new(a, b, epsilon)?;
    let tol = T::lit(BOUNDARY_RESIDUAL_TOL);
    let origin = [T::zero()];
    let u0 = u.value(&origin);
    if !(u0.abs() <= tol) {
        return Err(Error::BoundaryConditionViolated {
            condition: "u(0) = 0",
            point: vec![0.0],
            residual: u0.as_f64(),
        });
    }
    let r = a * u.hessian(&origin)?[(0, 0)] + b * u.gradient(&origin)?[0];
    if !(r.abs() <= tol) {
        return Err(Error::BoundaryConditionViolated {
            condition: "a u''(0) + b u'(0) = 0",
            point: vec![0.0],
            residual: r.as_f64(),
        });
    }
    Ok(HalfLineExtension { u: u.clone(), map })
}
