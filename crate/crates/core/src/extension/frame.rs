//! Orthonormal frames adapted to a boundary chart, the coefficients of the
//! operator in the normal direction, and the oblique reflection direction.

use crate::error::{Error, Result};
use crate::geometry::{Chart, DomainModel};
use crate::linalg::{axpy, dot, norm, scale, Matrix};
use crate::operator::EllipticOperator;
use crate::scalar::{point_to_f64, Scalar};

/// Tolerance on `|⟨v_i, v_j⟩ − δ_ij|`.
pub const FRAME_TOL: f64 = 1e-10;

/// Orthonormal vectors `v_1, …, v_n` (`v_n` the inward normal on the
/// boundary) with the directional derivatives `∂_{v_l} v_n` of the normal
/// field.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    pub vectors: Vec<Vec<T>>,
    /// Entry `l` is `∂_{v_l} v_n`.
    pub normal_derivatives: Vec<Vec<T>>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(vectors: Vec<Vec<T>>, normal_derivatives: Vec<Vec<T>>) -> Self {
        Self {
            vectors,
            normal_derivatives,
        }
    }

    /// Constant frame (all derivatives zero).
    pub fn constant(vectors: Vec<Vec<T>>) -> Self {
        let n = vectors.len();
        Self::new(vectors, vec![vec![T::zero(); n]; n])
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn normal(&self) -> &[T] {
        &self.vectors[self.dim() - 1]
    }

    /// `max |⟨v_i, v_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> T {
        let n = self.dim();
        let mut d = T::zero();
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { T::one() } else { T::zero() };
                d = d.max((dot(&self.vectors[i], &self.vectors[j]) - target).abs());
            }
        }
        d
    }

    fn check(&self) -> Result<()> {
        let d = self.orthonormality_defect();
        if !(d <= T::lit(FRAME_TOL)) {
            return Err(Error::FrameNotOrthonormal { defect: d.as_f64() });
        }
        Ok(())
    }

    /// Gram–Schmidt of the columns of `Dψ(z)`, tangential columns first.
    /// Derivatives of the normal field come from differentiating the
    /// Gram–Schmidt steps along the chart's second derivatives.
    pub fn from_chart(chart: &Chart<T>, z: &[T]) -> Result<Self> {
        let n = chart.dim();
        let jac = chart.jacobian(z);
        let jinv = jac.inverse().ok_or_else(|| Error::SingularJacobian {
            point: point_to_f64(z),
            det: 0.0,
        })?;
        let second = chart.second_derivatives(z);
        let cols: Vec<Vec<T>> = (0..n).map(|j| jac.column(j)).collect();
        // dv[k][j] = ∂v_j/∂z_k
        let mut vs: Vec<Vec<T>> = Vec::with_capacity(n);
        let mut dvs: Vec<Vec<Vec<T>>> = vec![Vec::with_capacity(n); n];
        for j in 0..n {
            let mut u = cols[j].clone();
            for v in &vs {
                u = axpy(&u, -dot(&cols[j], v), v);
            }
            let len = norm(&u);
            if !(len > T::zero()) {
                return Err(Error::SingularJacobian {
                    point: point_to_f64(z),
                    det: jac.determinant().as_f64(),
                });
            }
            for k in 0..n {
                let dc = second[k].column(j);
                let mut du = dc.clone();
                for (i, v) in vs.iter().enumerate() {
                    let dv = &dvs[k][i];
                    let coef = dot(&cols[j], v);
                    let dcoef = dot(&dc, v) + dot(&cols[j], dv);
                    du = axpy(&du, -dcoef, v);
                    du = axpy(&du, -coef, dv);
                }
                let radial = dot(&u, &du) / (len * len * len);
                dvs[k].push(axpy(&scale(len.recip(), &du), -radial, &u));
            }
            vs.push(scale(len.recip(), &u));
        }
        let normal_derivatives = vs
            .iter()
            .map(|vl| {
                let dz = jinv.mul_vec(vl);
                (0..n).fold(vec![T::zero(); n], |acc, k| axpy(&acc, dz[k], &dvs[k][n - 1]))
            })
            .collect();
        Ok(Self::new(vs, normal_derivatives))
    }
}

/// Coefficients of the operator along the normal at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalCoefficients<T> {
    /// `⟨v_n, A v_n⟩`
    pub a_nn: T,
    /// `⟨b, v_n⟩ + Σ_l ⟨v_l, A ∂_{v_l} v_n⟩`
    pub b: T,
}

pub fn transformed_coefficients<T: Scalar>(
    op: &EllipticOperator<T>,
    frame: &Frame<T>,
    x: &[T],
) -> Result<NormalCoefficients<T>> {
    frame.check()?;
    let a = op.a(x);
    let vn = frame.normal();
    let b = frame
        .vectors
        .iter()
        .zip(&frame.normal_derivatives)
        .fold(dot(&op.b(x), vn), |acc, (vl, dvn)| acc + a.bilinear(vl, dvn));
    Ok(NormalCoefficients {
        a_nn: a.bilinear(vn, vn),
        b,
    })
}

/// `ṽ_n = v_n + Σ_{i<n} (⟨v_i, A v_n⟩ / ⟨v_n, A v_n⟩) v_i`.
///
/// Checks that `v_n` points into the domain.
pub fn oblique_direction<T: Scalar>(
    op: &EllipticOperator<T>,
    frame: &Frame<T>,
    domain: &DomainModel<T>,
    x: &[T],
) -> Result<Vec<T>> {
    frame.check()?;
    let vn = frame.normal();
    let probe = T::lit(1e-6) * domain.diameter();
    if !(domain.signed_distance(&axpy(x, probe, vn)) > domain.signed_distance(x)) {
        return Err(Error::NormalPointsOutward { point: point_to_f64(x) });
    }
    Ok(oblique_from_matrix(&op.a(x), frame))
}

pub(crate) fn oblique_from_matrix<T: Scalar>(a: &Matrix<T>, frame: &Frame<T>) -> Vec<T> {
    let n = frame.dim();
    let vn = frame.normal();
    let avn = a.mul_vec(vn);
    let ann = dot(vn, &avn);
    let mut out = vn.to_vec();
    for v in &frame.vectors[..n - 1] {
        let w = dot(v, &avn);
        if w != T::zero() {
            out = axpy(&out, w / ann, v);
        }
    }
    out
}
