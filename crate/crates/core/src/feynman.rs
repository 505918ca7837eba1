//! The one-step operator
//!
//! `F_t u(x) = ψ_{s(t)}(x)·e^{t c(x)}·(det A(x)·(4πt)^n)^{-1/2}
//!            ·∫ exp(−⟨A⁻¹(x)(x−y+t b(x)), x−y+t b(x)⟩ / 4t)·Eu(y) dy`
//!
//! The kernel is the normalized Gaussian with mean `x + t b(x)` and
//! covariance `2t A(x)`: `L` carries no ½ in front of its second-order part.

use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::extension::ExtensionOperator;
use crate::geometry::{CutoffFamily, DomainModel};
use crate::grid::{Grid, SampledFunction};
use crate::linalg::{dot, sub, Matrix};
use crate::operator::{apply_l, EllipticOperator, TestFunction};
use crate::scalar::Scalar;

/// Clipped Gaussian mass above which a sweep logs a warning.
pub const KERNEL_TRUNCATION_WARN: f64 = 1e-12;

static TRUNCATION_WARNED: AtomicBool = AtomicBool::new(false);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Tensor trapezoid rule on the nodes of the payload grid.
    Trapezoid,
    /// Tensor Gauss–Hermite rule of the given order per axis; the payload is
    /// interpolated between grid nodes.
    GaussHermite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig<T> {
    pub t: T,
    pub quadrature: Quadrature,
    /// Half-width of the integration window in kernel standard deviations.
    pub kernel_radius: T,
}

impl<T: Scalar> StepConfig<T> {
    pub fn new(t: T) -> Result<Self> {
        Self::with(t, Quadrature::Trapezoid, T::lit(8.0))
    }

    pub fn with(t: T, quadrature: Quadrature, kernel_radius: T) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(Error::NonpositiveTime(t.as_f64()));
        }
        if let Quadrature::GaussHermite(m) = quadrature {
            if m < 8 || m % 2 != 0 {
                return Err(Error::InvalidParameter {
                    name: "gh_order",
                    reason: format!("must be an even integer ≥ 8, got {m}"),
                });
            }
        }
        if !(kernel_radius >= T::lit(6.0)) {
            return Err(Error::InvalidParameter {
                name: "kernel_radius",
                reason: format!("must be at least 6, got {kernel_radius}"),
            });
        }
        Ok(Self {
            t,
            quadrature,
            kernel_radius,
        })
    }
}

/// Grid step resolving the kernel with four nodes per standard deviation:
/// `min(0.25·√(2λt), h_max)`.
pub fn grid_step_for<T: Scalar>(ellipticity: T, t: T, h_max: T) -> T {
    (T::lit(0.25) * (T::lit(2.0) * ellipticity * t).sqrt()).min(h_max)
}

/// Kernel data frozen at one point `x`.
struct Kernel<T> {
    ainv: Matrix<T>,
    /// `(det A·(4πt)^n)^{-1/2}`
    norm: T,
    t: T,
    b: Vec<T>,
    /// marginal standard deviations `√(2t A_kk)`
    sd: Vec<T>,
    chol: Matrix<T>,
}

impl<T: Scalar> Kernel<T> {
    fn new(op: &EllipticOperator<T>, x: &[T], t: T) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(Error::NonpositiveTime(t.as_f64()));
        }
        let a = op.a(x);
        let n = a.dim();
        let det = a.determinant();
        let ainv = a.inverse().filter(|_| det > T::zero()).ok_or_else(|| Error::EllipticityViolation {
            point: crate::scalar::point_to_f64(x),
            eigenvalue: a.symmetric_eigenvalues()[0].as_f64(),
            bound: op.ellipticity().as_f64(),
        })?;
        let chol = a.cholesky().ok_or_else(|| Error::EllipticityViolation {
            point: crate::scalar::point_to_f64(x),
            eigenvalue: a.symmetric_eigenvalues()[0].as_f64(),
            bound: op.ellipticity().as_f64(),
        })?;
        let four_pi_t = T::lit(4.0) * T::PI() * t;
        Ok(Self {
            norm: (det * four_pi_t.powi(n as i32)).sqrt().recip(),
            sd: (0..n).map(|k| (T::lit(2.0) * t * a[(k, k)]).sqrt()).collect(),
            ainv,
            t,
            b: op.b(x),
            chol,
        })
    }

    /// Exponent of the first form at displacement `d = x − y`.
    fn exponent(&self, d: &[T]) -> T {
        let shifted: Vec<T> = d.iter().zip(&self.b).map(|(&di, &bi)| di + self.t * bi).collect();
        -self.ainv.bilinear(&shifted, &shifted) / (T::lit(4.0) * self.t)
    }

    /// Exponent of the second form: `−⟨A⁻¹d, d⟩/4t + ½⟨A⁻¹b, y − x⟩`.
    fn exponent_form2(&self, d: &[T]) -> T {
        let quad = -self.ainv.bilinear(d, d) / (T::lit(4.0) * self.t);
        let ainv_b = self.ainv.mul_vec(&self.b);
        quad - T::lit(0.5) * dot(&ainv_b, d)
    }

    /// `v = c − ¼⟨A⁻¹b, b⟩`
    fn potential_shift(&self) -> T {
        -T::lit(0.25) * self.ainv.bilinear(&self.b, &self.b)
    }
}

/// `(det A(x)·(4πt)^n)^{-1/2}·exp(−⟨A⁻¹(x)(x−y+tb(x)), x−y+tb(x)⟩/4t)`.
pub fn kernel_weight<T: Scalar>(op: &EllipticOperator<T>, x: &[T], y: &[T], t: T) -> Result<T> {
    let k = Kernel::new(op, x, t)?;
    Ok(k.norm * k.exponent(&sub(x, y)).exp())
}

/// Upper bound on the kernel mass at `x` falling outside the box
/// `[lo, hi]` (union bound over axis marginals).
pub fn kernel_clipped_mass<T: Scalar>(op: &EllipticOperator<T>, x: &[T], t: T, lo: &[T], hi: &[T]) -> Result<f64> {
    let k = Kernel::new(op, x, t)?;
    let mut mass = 0.0;
    for i in 0..x.len() {
        let mean = (x[i] + t * k.b[i]).as_f64();
        let s = k.sd[i].as_f64() * std::f64::consts::SQRT_2;
        mass += 0.5 * erfc((mean - lo[i].as_f64()) / s) + 0.5 * erfc((hi[i].as_f64() - mean) / s);
    }
    Ok(mass.min(1.0))
}

#[derive(Clone, Copy)]
enum Form {
    First,
    Second,
}

fn integrate<T: Scalar>(kernel: &Kernel<T>, eu: &SampledFunction<T>, cfg: &StepConfig<T>, x: &[T], form: Form) -> T {
    match cfg.quadrature {
        Quadrature::Trapezoid => trapezoid(kernel, eu, cfg.kernel_radius, x, form),
        Quadrature::GaussHermite(m) => gauss_hermite(kernel, eu, m, x, form),
    }
}

fn trapezoid<T: Scalar>(kernel: &Kernel<T>, eu: &SampledFunction<T>, radius: T, x: &[T], form: Form) -> T {
    let grid = eu.grid();
    let n = grid.dim();
    let mut ranges = Vec::with_capacity(n);
    for k in 0..n {
        let centre = x[k] + kernel.t * kernel.b[k];
        match grid.axis_window(k, centre, radius * kernel.sd[k]) {
            Some(r) => ranges.push(r),
            None => return T::zero(),
        }
    }
    let values = eu.values();
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    let mut partial = Vec::new();
    loop {
        let flat = grid.flat_index(&idx);
        let v = values[flat];
        if v != T::zero() {
            let y = grid.node_at(&idx);
            let d = sub(x, &y);
            let e = match form {
                Form::First => kernel.exponent(&d),
                Form::Second => kernel.exponent_form2(&d),
            };
            partial.push(e.exp() * v);
        }
        // odometer over the window, last axis fastest
        let mut k = n;
        loop {
            if k == 0 {
                let cell = grid.step().powi(n as i32);
                return crate::scalar::pairwise_sum(&partial) * cell;
            }
            k -= 1;
            if idx[k] < ranges[k].1 {
                idx[k] += 1;
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
}

/// Nodes and weights for `∫ e^{−ξ²} f(ξ) dξ`, by Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mf = m as f64;
    let mut z: f64 = 0.0;
    for i in 0..m.div_ceil(2) {
        z = match i {
            0 => (2.0 * mf + 1.0).sqrt() - 1.85575 * (2.0 * mf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * mf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=m {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * mf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[m - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

fn gauss_hermite<T: Scalar>(kernel: &Kernel<T>, eu: &SampledFunction<T>, m: usize, x: &[T], form: Form) -> T {
    let (nodes, weights) = gauss_hermite_rule(m);
    let n = x.len();
    let two_sqrt_t = T::lit(2.0) * kernel.t.sqrt();
    let ainv_b = kernel.ainv.mul_vec(&kernel.b);
    let total = m.pow(n as u32);
    let mut terms = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut xi = vec![T::zero(); n];
        let mut w = T::one();
        for k in (0..n).rev() {
            let j = rem % m;
            rem /= m;
            xi[k] = T::lit(nodes[j]);
            w = w * T::lit(weights[j]);
        }
        // y = centre + 2√t·L ξ has density N(centre, 2tA) under e^{−|ξ|²}
        let offset = kernel.chol.mul_vec(&xi);
        let (y, tilt) = match form {
            Form::First => {
                let y: Vec<T> = (0..n).map(|k| x[k] + kernel.t * kernel.b[k] + two_sqrt_t * offset[k]).collect();
                (y, T::one())
            }
            Form::Second => {
                let y: Vec<T> = (0..n).map(|k| x[k] + two_sqrt_t * offset[k]).collect();
                let d = sub(&y, x);
                (y, (T::lit(0.5) * dot(&ainv_b, &d)).exp())
            }
        };
        terms.push(w * tilt * eu.eval(&y));
    }
    crate::scalar::pairwise_sum(&terms) * T::PI().powf(-T::from_count(n) * T::lit(0.5))
}

fn apply_form<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    cutoff: &CutoffFamily<T>,
    eu: &SampledFunction<T>,
    cfg: &StepConfig<T>,
    x: &[T],
    form: Form,
) -> Result<T> {
    let psi = cutoff.eval(domain, cfg.t, x)?;
    if psi == T::zero() {
        return Ok(T::zero());
    }
    let kernel = Kernel::new(op, x, cfg.t)?;
    let integral = integrate(&kernel, eu, cfg, x, form);
    let (rate, norm) = match form {
        Form::First => (op.c(x), kernel.norm),
        Form::Second => (op.c(x) + kernel.potential_shift(), kernel.norm),
    };
    match cfg.quadrature {
        // Gauss–Hermite integrates against the normalized Gaussian already
        Quadrature::GaussHermite(_) => {
            let factor = match form {
                Form::First => op.c(x),
                Form::Second => rate,
            };
            Ok(psi * (cfg.t * factor).exp() * integral)
        }
        Quadrature::Trapezoid => Ok(psi * (cfg.t * rate).exp() * norm * integral),
    }
}

/// `F_t Eu(x)` in the first form.
pub fn feynman_apply<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    cutoff: &CutoffFamily<T>,
    eu: &SampledFunction<T>,
    cfg: &StepConfig<T>,
    x: &[T],
) -> Result<T> {
    apply_form(op, domain, cutoff, eu, cfg, x, Form::First)
}

/// `F_t Eu(x)` in the second form:
/// `ψ·e^{t v}·(det A (4πt)^n)^{-1/2}·∫ exp(−⟨A⁻¹(x−y), x−y⟩/4t + ½⟨A⁻¹b, y−x⟩)·Eu(y) dy`
/// with `v = c − ¼⟨A⁻¹b, b⟩`.
pub fn feynman_apply_form2<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    cutoff: &CutoffFamily<T>,
    eu: &SampledFunction<T>,
    cfg: &StepConfig<T>,
    x: &[T],
) -> Result<T> {
    apply_form(op, domain, cutoff, eu, cfg, x, Form::Second)
}

/// Applies `F_t` at every node of `eu`'s grid, giving the next iterate on the
/// same grid. Nodes where the cutoff vanishes (the boundary layer and
/// everything outside the domain) are set to 0.
pub fn feynman_sweep<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    cutoff: &CutoffFamily<T>,
    eu: &SampledFunction<T>,
    cfg: &StepConfig<T>,
) -> Result<SampledFunction<T>> {
    let grid = eu.grid().clone();
    let (lo, hi) = (grid.origin().to_vec(), grid.upper());
    let results: Vec<(T, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.node(i);
            let v = feynman_apply(op, domain, cutoff, eu, cfg, &x)?;
            let clipped = if v != T::zero() {
                kernel_clipped_mass(op, &x, cfg.t, &lo, &hi)?
            } else {
                0.0
            };
            Ok((v, clipped))
        })
        .collect::<Result<_>>()?;
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    if worst > KERNEL_TRUNCATION_WARN {
        // the box holds the support of Eu, so clipping loses only zeros;
        // say so once per process
        if TRUNCATION_WARNED.swap(true, Ordering::Relaxed) {
            log::debug!("bounding box clips up to {worst:.3e} of the kernel mass at t = {}", cfg.t);
        } else {
            log::warn!("bounding box clips up to {worst:.3e} of the kernel mass at t = {}", cfg.t);
        }
    }
    SampledFunction::new(grid, results.into_iter().map(|r| r.0).collect())
}

/// Probe points at distance at least `margin` from the boundary.
pub fn interior_probes<T: Scalar>(domain: &DomainModel<T>, resolution: T, margin: T) -> Vec<Vec<T>> {
    domain
        .closure_samples(resolution, 1)
        .into_iter()
        .filter(|x| domain.signed_distance(x) >= margin)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport<T> {
    pub t: T,
    /// `sup |(F_t u − u)/t − Lu|` over the probes
    pub residual: T,
    pub grid_step: T,
    pub probes: usize,
}

/// Sup over interior probes (distance ≥ `2·s(t)`, where the cutoff is one)
/// of `|(F_t u − u)/t − Lu|`, with `Eu` sampled at the step
/// [`grid_step_for`].
#[allow(clippy::too_many_arguments)]
pub fn consistency_residual<T: Scalar>(
    ext: &ExtensionOperator<T>,
    cutoff: &CutoffFamily<T>,
    u: &TestFunction<T>,
    t: T,
    h_max: T,
    probe_resolution: T,
) -> Result<ConsistencyReport<T>> {
    let op = ext.operator();
    let domain = ext.domain();
    let cfg = StepConfig::new(t)?;
    let h = grid_step_for(op.ellipticity(), t, h_max);
    let (lo, hi) = domain.bounding_box();
    let eu = ext.extend(u)?.materialize(Grid::covering(lo, hi, h)?)?;
    let probes = interior_probes(domain, probe_resolution, T::lit(2.0) * cutoff.width(t));
    if probes.is_empty() {
        return Err(Error::EmptySamples);
    }
    let residuals = probes
        .par_iter()
        .map(|x| {
            let f = feynman_apply(op, domain, cutoff, &eu, &cfg, x)?;
            Ok(((f - u.value(x)) / t - apply_l(op, u, x)?).abs())
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(ConsistencyReport {
        t,
        residual: residuals.into_iter().fold(T::zero(), T::max),
        grid_step: h,
        probes: probes.len(),
    })
}
