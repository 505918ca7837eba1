//! Second-order forward-mode jets: value, gradient and Hessian carried
//! together through arithmetic. Used to build [`TestFunction`]s whose
//! derivatives are exact to rounding.
//!
//! [`TestFunction`]: crate::operator::TestFunction

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub grad: Vec<T>,
    /// Row-major `n×n`.
    pub hess: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn constant(dim: usize, value: T) -> Self {
        Self {
            value,
            grad: vec![T::zero(); dim],
            hess: vec![T::zero(); dim * dim],
        }
    }

    /// The coordinate function `x ↦ x_i` evaluated at `value`.
    pub fn variable(dim: usize, i: usize, value: T) -> Self {
        let mut j = Self::constant(dim, value);
        j.grad[i] = T::one();
        j
    }

    /// Seeds one jet per coordinate of `x`.
    pub fn seed(x: &[T]) -> Vec<Self> {
        (0..x.len()).map(|i| Self::variable(x.len(), i, x[i])).collect()
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> T {
        self.hess[i * self.dim() + j]
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f0: T, f1: T, f2: T) -> Self {
        let n = self.dim();
        let mut hess = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = f1 * self.hess[i * n + j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        Self {
            value: f0,
            grad: self.grad.iter().map(|&g| f1 * g).collect(),
            hess,
        }
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let v = self.value;
        self.chain(v.ln(), v.recip(), -(v * v).recip())
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        let half = T::lit(0.5);
        self.chain(r, half / r, -half * half / (r * self.value))
    }

    pub fn powi(&self, k: i32) -> Self {
        let v = self.value;
        let kf = T::from_i32(k).unwrap();
        let d1 = if k == 0 { T::zero() } else { kf * v.powi(k - 1) };
        let d2 = if k <= 1 {
            T::zero()
        } else {
            kf * (kf - T::one()) * v.powi(k - 2)
        };
        self.chain(v.powi(k), d1, d2)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            value: s * self.value,
            grad: self.grad.iter().map(|&g| s * g).collect(),
            hess: self.hess.iter().map(|&h| s * h).collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.dim(), other.dim(), "jet dimensions differ");
        Self {
            value: f(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(&a, &b)| f(a, b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn product(&self, other: &Self) -> Self {
        let n = self.dim();
        assert_eq!(n, other.dim(), "jet dimensions differ");
        let mut hess = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = self.hess[i * n + j] * other.value
                    + other.hess[i * n + j] * self.value
                    + self.grad[i] * other.grad[j]
                    + self.grad[j] * other.grad[i];
            }
        }
        Self {
            value: self.value * other.value,
            grad: (0..n)
                .map(|i| self.grad[i] * other.value + other.grad[i] * self.value)
                .collect(),
            hess,
        }
    }

    pub fn recip(&self) -> Self {
        let v = self.value;
        let r = v.recip();
        self.chain(r, -r * r, T::lit(2.0) * r * r * r)
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl<T: Scalar> $trait<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                f(&self, &rhs)
            }
        }
        impl<'a, T: Scalar> $trait<&'a Jet<T>> for &'a Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &'a Jet<T>) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Scalar> $trait<T> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: T) -> Jet<T> {
                let f: fn(&Jet<T>, &Jet<T>) -> Jet<T> = $body;
                let c = Jet::constant(self.dim(), rhs);
                f(&self, &c)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.product(b));
jet_binop!(Div, div, |a, b| a.product(&b.recip()));

impl<T: Scalar> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(-T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// f(x, y) = sin(x)·exp(y) / (1 + x²)
    fn f(v: &[Jet<f64>]) -> Jet<f64> {
        let one = Jet::constant(2, 1.0);
        v[0].sin() * v[1].exp() / (one + v[0].powi(2))
    }

    fn f_plain(x: f64, y: f64) -> f64 {
        x.sin() * y.exp() / (1.0 + x * x)
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let (x, y) = (0.7, -0.3);
        let j = f(&Jet::seed(&[x, y]));
        let h = 1e-4;
        let fx = (f_plain(x + h, y) - f_plain(x - h, y)) / (2.0 * h);
        let fy = (f_plain(x, y + h) - f_plain(x, y - h)) / (2.0 * h);
        let fxx = (f_plain(x + h, y) - 2.0 * f_plain(x, y) + f_plain(x - h, y)) / (h * h);
        let fxy = (f_plain(x + h, y + h) - f_plain(x + h, y - h) - f_plain(x - h, y + h)
            + f_plain(x - h, y - h))
            / (4.0 * h * h);
        assert_relative_eq!(j.value, f_plain(x, y), epsilon = 1e-15);
        assert_relative_eq!(j.grad[0], fx, epsilon = 1e-7);
        assert_relative_eq!(j.grad[1], fy, epsilon = 1e-7);
        assert_relative_eq!(j.hess_at(0, 0), fxx, epsilon = 1e-6);
        assert_relative_eq!(j.hess_at(0, 1), fxy, epsilon = 1e-6);
        assert_relative_eq!(j.hess_at(0, 1), j.hess_at(1, 0), epsilon = 1e-15);
    }

    #[test]
    fn sqrt_and_ln_chain_rules() {
        let x = Jet::variable(1, 0, 2.0);
        let s = x.sqrt();
        assert_relative_eq!(s.grad[0], 0.5 / 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s.hess[0], -0.25 * 2f64.powf(-1.5), epsilon = 1e-15);
        let l = x.ln();
        assert_relative_eq!(l.grad[0], 0.5);
        assert_relative_eq!(l.hess[0], -0.25);
    }
}
