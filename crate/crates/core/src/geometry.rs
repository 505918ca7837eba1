//! Domains (interval, disc), signed boundary distance, boundary charts and
//! the cutoff family that vanishes near the boundary.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{point_to_f64, Scalar};

pub type MapFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type JacobianFn<T> = Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>;
/// Returns `[∂_1 Dψ, …, ∂_n Dψ]`, i.e. entry `k` holds `∂²ψ_i / ∂z_j ∂z_k`
/// at row `i`, column `j`.
pub type SecondDerivativeFn<T> = Arc<dyn Fn(&[T]) -> Vec<Matrix<T>> + Send + Sync>;

/// Charts placed around a disc unless the caller asks otherwise.
pub const DEFAULT_DISC_CHARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind<T> {
    Interval { lo: T, hi: T },
    Disc { center: [T; 2], radius: T },
}

/// A bounded domain together with the axis-aligned box that holds the
/// domain and its reflection collar.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainModel<T> {
    kind: DomainKind<T>,
    collar: T,
    box_lo: Vec<T>,
    box_hi: Vec<T>,
}

impl<T: Scalar> DomainModel<T> {
    pub fn interval(lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter {
                name: "interval",
                reason: format!("need lo < hi, got [{lo}, {hi}]"),
            });
        }
        Ok(Self::with_default_collar(DomainKind::Interval { lo, hi }))
    }

    pub fn disc(center: [T; 2], radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("must be positive, got {radius}"),
            });
        }
        Ok(Self::with_default_collar(DomainKind::Disc { center, radius }))
    }

    fn with_default_collar(kind: DomainKind<T>) -> Self {
        let mut d = Self {
            kind,
            collar: T::zero(),
            box_lo: Vec::new(),
            box_hi: Vec::new(),
        };
        let collar = T::lit(0.1) * d.diameter();
        d.set_collar(collar);
        d
    }

    fn set_collar(&mut self, collar: T) {
        self.collar = collar;
        let pad = collar * T::lit(1.25);
        let (lo, hi) = self.hull();
        self.box_lo = lo.iter().map(|&v| v - pad).collect();
        self.box_hi = hi.iter().map(|&v| v + pad).collect();
    }

    /// Overrides the reflection collar width (default: a tenth of the diameter).
    pub fn with_collar(mut self, collar: T) -> Result<Self> {
        if !(collar > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "collar",
                reason: format!("must be positive, got {collar}"),
            });
        }
        self.set_collar(collar);
        Ok(self)
    }

    pub fn kind(&self) -> &DomainKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Disc { .. } => 2,
        }
    }

    pub fn collar(&self) -> T {
        self.collar
    }

    pub fn diameter(&self) -> T {
        match self.kind {
            DomainKind::Interval { lo, hi } => hi - lo,
            DomainKind::Disc { radius, .. } => T::lit(2.0) * radius,
        }
    }

    /// Tight bounding box of the closed domain.
    pub fn hull(&self) -> (Vec<T>, Vec<T>) {
        match self.kind {
            DomainKind::Interval { lo, hi } => (vec![lo], vec![hi]),
            DomainKind::Disc { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
        }
    }

    /// Box containing the domain plus its collar, with some slack.
    pub fn bounding_box(&self) -> (&[T], &[T]) {
        (&self.box_lo, &self.box_hi)
    }

    /// Signed distance to the boundary, positive inside.
    pub fn signed_distance(&self, x: &[T]) -> T {
        match self.kind {
            DomainKind::Interval { lo, hi } => (x[0] - lo).min(hi - x[0]),
            DomainKind::Disc { center, radius } => {
                radius - (x[0] - center[0]).hypot(x[1] - center[1])
            }
        }
    }

    pub fn contains_closure(&self, x: &[T]) -> bool {
        self.signed_distance(x) >= T::zero()
    }

    /// Points on the boundary: both endpoints of an interval, `count`
    /// equally spaced points on a circle.
    pub fn boundary_samples(&self, count: usize) -> Vec<Vec<T>> {
        match self.kind {
            DomainKind::Interval { lo, hi } => vec![vec![lo], vec![hi]],
            DomainKind::Disc { center, radius } => (0..count.max(4))
                .map(|k| {
                    let th = T::TAU() * T::from_count(k) / T::from_count(count.max(4));
                    vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
                })
                .collect(),
        }
    }

    /// Lattice of spacing at most `resolution` covering the closed domain,
    /// refined until it has at least `min_count` points. Boundary points are
    /// included.
    pub fn closure_samples(&self, resolution: T, min_count: usize) -> Vec<Vec<T>> {
        let mut res = resolution;
        loop {
            let pts = self.closure_samples_once(res);
            if pts.len() >= min_count {
                return pts;
            }
            res = res * T::lit(0.5);
        }
    }

    fn closure_samples_once(&self, res: T) -> Vec<Vec<T>> {
        match self.kind {
            DomainKind::Interval { lo, hi } => {
                let n = ((hi - lo) / res).ceil().to_usize().unwrap_or(1).max(1);
                (0..=n)
                    .map(|k| vec![lo + (hi - lo) * T::from_count(k) / T::from_count(n)])
                    .collect()
            }
            DomainKind::Disc { center, radius } => {
                let n = (T::lit(2.0) * radius / res).ceil().to_usize().unwrap_or(1).max(1);
                let step = T::lit(2.0) * radius / T::from_count(n);
                let mut pts = Vec::new();
                for i in 0..=n {
                    for j in 0..=n {
                        let p = vec![
                            center[0] - radius + step * T::from_count(i),
                            center[1] - radius + step * T::from_count(j),
                        ];
                        if self.signed_distance(&p) >= T::zero() {
                            pts.push(p);
                        }
                    }
                }
                let m = (T::TAU() * radius / res).ceil().to_usize().unwrap_or(4);
                pts.extend(self.boundary_samples(m));
                pts
            }
        }
    }
}

/// `exp(-1/τ)` for τ > 0, else 0.
fn flat_exp<T: Scalar>(tau: T) -> T {
    if tau > T::zero() {
        (-tau.recip()).exp()
    } else {
        T::zero()
    }
}

/// C^∞ monotone step: 0 for τ ≤ 0, 1 for τ ≥ 1.
pub fn smooth_step<T: Scalar>(tau: T) -> T {
    if tau <= T::zero() {
        return T::zero();
    }
    if tau >= T::one() {
        return T::one();
    }
    let a = flat_exp(tau);
    let b = flat_exp(T::one() - tau);
    a / (a + b)
}

/// Ramp on `[1/2, 1]`: `smooth_step(2θ − 1)`.
pub fn ramp<T: Scalar>(theta: T) -> T {
    smooth_step(T::lit(2.0) * theta - T::one())
}

/// Cutoffs `ψ_s` with `s(t) = t^β`: zero within `s/2` of the boundary, one
/// beyond `s`, the smooth ramp in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffFamily<T> {
    beta: T,
}

impl<T: Scalar> CutoffFamily<T> {
    pub const DEFAULT_BETA: f64 = 0.5;

    pub fn new(beta: T) -> Result<Self> {
        if !(beta > T::zero() && beta <= T::lit(0.5)) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must lie in (0, 1/2], got {beta}"),
            });
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Layer width `s(t) = t^β`.
    pub fn width(&self, t: T) -> T {
        t.powf(self.beta)
    }

    /// `ψ_{s(t)}` as a function of the boundary distance.
    pub fn profile(&self, t: T, distance: T) -> T {
        ramp(distance / self.width(t))
    }

    pub fn eval(&self, domain: &DomainModel<T>, t: T, x: &[T]) -> Result<T> {
        if !(t > T::zero()) {
            return Err(Error::NonpositiveTime(t.as_f64()));
        }
        Ok(self.profile(t, domain.signed_distance(x)))
    }
}

impl<T: Scalar> Default for CutoffFamily<T> {
    fn default() -> Self {
        Self {
            beta: T::lit(Self::DEFAULT_BETA),
        }
    }
}

pub fn cutoff_eval<T: Scalar>(family: &CutoffFamily<T>, domain: &DomainModel<T>, t: T, x: &[T]) -> Result<T> {
    family.eval(domain, t, x)
}

pub fn boundary_distance<T: Scalar>(domain: &DomainModel<T>, x: &[T]) -> T {
    domain.signed_distance(x)
}

/// Boundary chart `ψ: U → V` with `ψ(U ∩ {z_n = 0}) ⊂ ∂Ω` and
/// `ψ(U ∩ {z_n > 0}) ⊂ Ω`, where `U` is the box `|z_i| < halfwidths[i]`.
#[derive(Clone)]
pub struct Chart<T> {
    psi: MapFn<T>,
    psi_inverse: MapFn<T>,
    jacobian: JacobianFn<T>,
    second: SecondDerivativeFn<T>,
    halfwidths: Vec<T>,
}

impl<T: Scalar> Chart<T> {
    pub fn new(
        psi: MapFn<T>,
        psi_inverse: MapFn<T>,
        jacobian: JacobianFn<T>,
        second_derivatives: SecondDerivativeFn<T>,
        halfwidths: Vec<T>,
    ) -> Self {
        Self {
            psi,
            psi_inverse,
            jacobian,
            second: second_derivatives,
            halfwidths,
        }
    }

    pub fn dim(&self) -> usize {
        self.halfwidths.len()
    }

    pub fn psi(&self, z: &[T]) -> Vec<T> {
        (self.psi)(z)
    }

    pub fn psi_inverse(&self, x: &[T]) -> Vec<T> {
        (self.psi_inverse)(x)
    }

    pub fn jacobian(&self, z: &[T]) -> Matrix<T> {
        (self.jacobian)(z)
    }

    pub fn second_derivatives(&self, z: &[T]) -> Vec<Matrix<T>> {
        (self.second)(z)
    }

    pub fn halfwidths(&self) -> &[T] {
        &self.halfwidths
    }

    /// Boundary point `ψ(0)` the chart is centred on.
    pub fn anchor(&self) -> Vec<T> {
        self.psi(&vec![T::zero(); self.dim()])
    }

    pub fn contains(&self, z: &[T]) -> bool {
        z.iter().zip(&self.halfwidths).all(|(&zi, &h)| zi.abs() < h)
    }

    /// Samples `U` on a tensor lattice with `per_axis` points per axis
    /// (strictly inside the box).
    pub fn sample_domain(&self, per_axis: usize) -> Vec<Vec<T>> {
        let n = self.dim();
        let axis: Vec<Vec<T>> = self
            .halfwidths
            .iter()
            .map(|&h| {
                (0..per_axis)
                    .map(|k| {
                        let s = (T::from_count(2 * k + 1) / T::from_count(per_axis)) - T::one();
                        s * h * T::lit(0.999)
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::with_capacity(n)];
        for ax in &axis {
            out = out
                .into_iter()
                .flat_map(|p| {
                    ax.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Checks round trip, sign property and Jacobian regularity on a
    /// sample of `U`.
    pub fn check_invariants(&self, domain: &DomainModel<T>, per_axis: usize) -> Result<()> {
        let n = self.dim();
        let tol = T::lit(1e-10).max(T::lit(64.0) * T::epsilon());
        for z in self.sample_domain(per_axis) {
            let x = self.psi(&z);
            let back = self.psi_inverse(&x);
            let err = z.iter().zip(&back).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            if err > tol {
                return Err(Error::ChartInvariant(format!(
                    "round trip error {:e} at z = {:?}",
                    err.as_f64(),
                    point_to_f64(&z)
                )));
            }
            let det = self.jacobian(&z).determinant();
            if det.abs() < T::lit(1e-8) {
                return Err(Error::SingularJacobian {
                    point: point_to_f64(&z),
                    det: det.as_f64(),
                });
            }
            let d = domain.signed_distance(&x);
            if z[n - 1] > T::zero() && !(d > T::zero()) {
                return Err(Error::ChartInvariant(format!(
                    "z = {:?} with z_n > 0 maps outside the domain",
                    point_to_f64(&z)
                )));
            }
            let mut zb = z.clone();
            zb[n - 1] = T::zero();
            let db = domain.signed_distance(&self.psi(&zb));
            if db.abs() > tol {
                return Err(Error::ChartInvariant(format!(
                    "z = {:?} on z_n = 0 maps off the boundary (distance {:e})",
                    point_to_f64(&zb),
                    db.as_f64()
                )));
            }
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for Chart<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("anchor", &self.anchor())
            .field("halfwidths", &self.halfwidths)
            .finish()
    }
}

/// Affine chart at an interval end: `z ↦ lo + z` or `z ↦ hi − z`.
fn interval_chart<T: Scalar>(end: T, inward: T, halfwidth: T) -> Chart<T> {
    Chart::new(
        Arc::new(move |z: &[T]| vec![end + inward * z[0]]),
        Arc::new(move |x: &[T]| vec![(x[0] - end) * inward]),
        Arc::new(move |_: &[T]| Matrix::from_diagonal(&[inward])),
        Arc::new(|_: &[T]| vec![Matrix::zeros(1)]),
        vec![halfwidth],
    )
}

fn wrap_angle<T: Scalar>(a: T) -> T {
    let tau = T::TAU();
    let mut r = a % tau;
    if r > T::PI() {
        r = r - tau;
    } else if r <= -T::PI() {
        r = r + tau;
    }
    r
}

/// Polar cap at angle `theta0`:
/// `ψ(z', z_n) = c + (R − z_n)·(cos φ, sin φ)` with `φ = θ₀ + z'/R`, so that
/// `z'` is arc length along the circle and `z_n` is depth below it.
pub fn polar_chart<T: Scalar>(center: [T; 2], radius: T, theta0: T, angular_halfwidth: T) -> Chart<T> {
    let r = radius;
    let phi = move |z: &[T]| theta0 + z[0] / r;
    Chart::new(
        Arc::new(move |z: &[T]| {
            let (s, c) = phi(z).sin_cos();
            vec![center[0] + (r - z[1]) * c, center[1] + (r - z[1]) * s]
        }),
        Arc::new(move |x: &[T]| {
            let dx = x[0] - center[0];
            let dy = x[1] - center[1];
            let rho = dx.hypot(dy);
            let ang = wrap_angle(dy.atan2(dx) - theta0);
            vec![r * ang, r - rho]
        }),
        Arc::new(move |z: &[T]| {
            let (s, c) = phi(z).sin_cos();
            let k = (r - z[1]) / r;
            Matrix::from_rows(&[vec![-k * s, -c], vec![k * c, -s]])
        }),
        Arc::new(move |z: &[T]| {
            let (s, c) = phi(z).sin_cos();
            let k = (r - z[1]) / (r * r);
            let inv_r = r.recip();
            // ∂_{z'} Dψ and ∂_{z_n} Dψ
            let d1 = Matrix::from_rows(&[vec![-k * c, s * inv_r], vec![-k * s, -c * inv_r]]);
            let d2 = Matrix::from_rows(&[vec![s * inv_r, T::zero()], vec![-c * inv_r, T::zero()]]);
            vec![d1, d2]
        }),
        vec![radius * angular_halfwidth, radius * T::lit(0.5)],
    )
}

/// Charts covering the boundary: two affine charts for an interval,
/// [`DEFAULT_DISC_CHARTS`] overlapping polar caps for a disc.
pub fn boundary_charts<T: Scalar>(domain: &DomainModel<T>) -> Result<Vec<Chart<T>>> {
    match domain.kind() {
        DomainKind::Interval { .. } => boundary_charts_with(domain, 2),
        DomainKind::Disc { .. } => boundary_charts_with(domain, DEFAULT_DISC_CHARTS),
    }
}

/// Like [`boundary_charts`] with an explicit chart count for discs (≥ 4;
/// sector `k` is centred at angle `2πk/count` and spans twice the spacing).
pub fn boundary_charts_with<T: Scalar>(domain: &DomainModel<T>, count: usize) -> Result<Vec<Chart<T>>> {
    match *domain.kind() {
        DomainKind::Interval { lo, hi } => {
            let half = (hi - lo) * T::lit(0.5);
            Ok(vec![
                interval_chart(lo, T::one(), half),
                interval_chart(hi, -T::one(), half),
            ])
        }
        DomainKind::Disc { center, radius } => {
            if count < 4 {
                return Err(Error::InvalidParameter {
                    name: "chart count",
                    reason: format!("a disc needs at least 4 charts, got {count}"),
                });
            }
            let spacing = T::TAU() / T::from_count(count);
            Ok((0..count)
                .map(|k| polar_chart(center, radius, spacing * T::from_count(k), spacing))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn signed_distance_examples() {
        let i = DomainModel::interval(0.0, 1.0).unwrap();
        assert_relative_eq!(i.signed_distance(&[0.3]), 0.3);
        let d = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        assert_eq!(d.signed_distance(&[0.0, 0.0]), 1.0);
        assert_eq!(d.signed_distance(&[2.0, 0.0]), -1.0);
    }

    #[test]
    fn invalid_domains_are_rejected() {
        assert!(DomainModel::interval(1.0, 1.0).is_err());
        assert!(DomainModel::disc([0.0, 0.0], -1.0).is_err());
        assert!(DomainModel::interval(0.0, 1.0).unwrap().with_collar(0.0).is_err());
    }

    #[test]
    fn bounding_box_holds_collar() {
        let d = DomainModel::interval(0.0, PI).unwrap();
        let (lo, hi) = d.bounding_box();
        assert!(lo[0] < -d.collar() && hi[0] > PI + d.collar());
        assert_relative_eq!(d.collar(), 0.1 * PI);
    }

    #[test]
    fn cutoff_examples() {
        let fam = CutoffFamily::new(0.25).unwrap();
        let dom = DomainModel::interval(0.0, 1.0).unwrap();
        // s(0.01) ≈ 0.316 < 0.5
        assert_eq!(fam.eval(&dom, 0.01, &[0.5]).unwrap(), 1.0);
        assert_eq!(fam.eval(&dom, 0.01, &[0.0]).unwrap(), 0.0);
        assert_eq!(fam.eval(&dom, 0.01, &[1.0]).unwrap(), 0.0);
        let s = fam.width(0.01);
        let mid = fam.eval(&dom, 0.01, &[0.75 * s]).unwrap();
        // the ramp is symmetric about 3/4
        assert_relative_eq!(mid, 0.5, epsilon = 1e-15);
        assert!(matches!(fam.eval(&dom, 0.0, &[0.5]), Err(Error::NonpositiveTime(_))));
        assert!(CutoffFamily::new(0.6).is_err());
    }

    #[test]
    fn cutoff_is_monotone_bounded_and_tends_to_one() {
        let fam = CutoffFamily::<f64>::default();
        let disc = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        for t in [1e-1, 1e-2, 1e-3] {
            assert_eq!(fam.eval(&disc, t, &[1.0, 0.0]).unwrap(), 0.0);
            let mut prev = 0.0;
            for k in 0..=200 {
                let d = k as f64 / 200.0;
                let v = fam.profile(t, d);
                assert!((0.0..=1.0).contains(&v));
                assert!(v >= prev);
                prev = v;
            }
        }
        // interior probes at distance 0.25 and beyond
        let probes = [[0.0, 0.0], [0.5, 0.0], [0.3, -0.4]];
        let at = |t: f64| probes.iter().map(|p| fam.eval(&disc, t, p).unwrap()).fold(1.0, f64::min);
        assert!(at(1e-1) <= at(1e-2) && at(1e-2) <= at(1e-3));
        assert_eq!(at(1e-3), 1.0);
    }

    #[test]
    fn interval_charts() {
        let dom = DomainModel::interval(0.0, 1.0).unwrap();
        let charts = boundary_charts(&dom).unwrap();
        assert_eq!(charts.len(), 2);
        assert_relative_eq!(charts[0].psi(&[0.2])[0], 0.2);
        assert_eq!(charts[0].jacobian(&[0.2])[(0, 0)], 1.0);
        assert_relative_eq!(charts[1].psi(&[0.2])[0], 0.8);
        for c in &charts {
            c.check_invariants(&dom, 1000).unwrap();
        }
    }

    #[test]
    fn disc_chart_examples() {
        let dom = DomainModel::<f64>::disc([0.0, 0.0], 1.0).unwrap();
        let charts = boundary_charts(&dom).unwrap();
        assert!(charts.len() >= 4);
        let c0 = &charts[0];
        assert_eq!(c0.psi(&[0.0, 0.0]), vec![1.0, 0.0]);
        assert_relative_eq!(c0.psi(&[0.0, 0.5])[0], 0.5);
        assert_relative_eq!(c0.psi(&[0.0, 0.5])[1], 0.0);
        // arc-length tangential coordinate: |det Dψ(0)| = 1 for any radius
        assert_relative_eq!(c0.jacobian(&[0.0, 0.0]).determinant().abs(), 1.0, epsilon = 1e-15);
        let big = DomainModel::<f64>::disc([1.0, -2.0], 3.0).unwrap();
        let cb = &boundary_charts(&big).unwrap()[3];
        assert_relative_eq!(cb.jacobian(&[0.0, 0.0]).determinant().abs(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(cb.jacobian(&[0.0, 1.5]).determinant().abs(), 0.5, epsilon = 1e-14);
        for c in &charts {
            c.check_invariants(&dom, 32).unwrap();
        }
        for c in boundary_charts(&big).unwrap() {
            c.check_invariants(&big, 32).unwrap();
        }
    }

    #[test]
    fn disc_charts_cover_the_circle() {
        let dom = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        let charts = boundary_charts_with(&dom, 5).unwrap();
        for x in dom.boundary_samples(360) {
            assert!(charts.iter().any(|c| c.contains(&c.psi_inverse(&x))));
        }
        assert!(boundary_charts_with(&dom, 3).is_err());
    }

    #[test]
    fn chart_second_derivatives_match_finite_differences() {
        let c = polar_chart([0.3, -0.2], 1.7, 0.4, 0.5);
        let z = [0.15, 0.2];
        let h = 1e-6;
        let sd = c.second_derivatives(&z);
        for k in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += h;
            zm[k] -= h;
            let (jp, jm) = (c.jacobian(&zp), c.jacobian(&zm));
            for i in 0..2 {
                for j in 0..2 {
                    let fd = (jp[(i, j)] - jm[(i, j)]) / (2.0 * h);
                    assert_relative_eq!(sd[k][(i, j)], fd, epsilon = 1e-8);
                }
            }
        }
        // and the jacobian matches differences of ψ
        let jac = c.jacobian(&z);
        for j in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let (p, m) = (c.psi(&zp), c.psi(&zm));
            for i in 0..2 {
                assert_relative_eq!(jac[(i, j)], (p[i] - m[i]) / (2.0 * h), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn closure_samples_meet_minimum_count() {
        let d = DomainModel::interval(0.0, 1.0).unwrap();
        assert!(d.closure_samples(0.5, 100).len() >= 100);
        let disc = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        let s = disc.closure_samples(0.1, 100);
        assert!(s.len() >= 100);
        assert!(s.iter().all(|p| disc.signed_distance(p) >= -1e-15));
    }
}
