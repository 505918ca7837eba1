//! Reference solutions for the one-dimensional benchmarks: sine-series
//! eigen-expansions, Crank–Nicolson, and a killed-diffusion Monte Carlo
//! estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainModel};
use crate::grid::{Grid, SampledFunction};
use crate::linalg::Matrix;
use crate::operator::EllipticOperator;
use crate::scalar::{pairwise_sum, Scalar};

/// `Σ c_k sin(kπ(x − lo)/ℓ)` on `[lo, lo + ℓ]`, with `k` starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SineSeries<T> {
    pub lo: T,
    pub length: T,
    pub coefficients: Vec<T>,
}

impl<T: Scalar> SineSeries<T> {
    pub fn new(lo: T, length: T, coefficients: Vec<T>) -> Result<Self> {
        if !(length > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: format!("must be positive, got {length}"),
            });
        }
        Ok(Self { lo, length, coefficients })
    }

    /// Series on the interval domain `domain`.
    pub fn on(domain: &DomainModel<T>, coefficients: Vec<T>) -> Result<Self> {
        match *domain.kind() {
            DomainKind::Interval { lo, hi } => Self::new(lo, hi - lo, coefficients),
            _ => Err(Error::UnsupportedDomain("a sine series")),
        }
    }

    fn wavenumber(&self, k: usize) -> T {
        T::from_count(k) * T::PI() / self.length
    }

    pub fn eval(&self, x: T) -> T {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (self.wavenumber(i + 1) * (x - self.lo)).sin())
            .sum()
    }
}

/// Heat solution `Σ c_k e^{−(kπ/ℓ)² t} sin(kπx/ℓ)` for `L = ∂²` with zero
/// boundary values.
pub fn analytic_heat<T: Scalar>(series: &SineSeries<T>, t: T, x: T) -> T {
    series
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let k = series.wavenumber(i + 1);
            c * (-k * k * t).exp() * (k * (x - series.lo)).sin()
        })
        .sum()
}

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored.
fn thomas<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let tiny = T::epsilon() * T::lit(1e3);
    let mut beta = diag[0];
    if beta.abs() <= tiny {
        return Err(Error::SingularTridiagonal { row: 0 });
    }
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta.abs() <= tiny {
            return Err(Error::SingularTridiagonal { row: i });
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Crank–Nicolson for `∂_t u = Lu` on an interval with zero boundary values,
/// central differences on `nodes` equally spaced nodes (endpoints included).
pub fn crank_nicolson<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    u0: &(dyn Fn(T) -> T + Sync),
    total_time: T,
    steps: usize,
    nodes: usize,
) -> Result<SampledFunction<T>> {
    let (lo, hi) = match *domain.kind() {
        DomainKind::Interval { lo, hi } => (lo, hi),
        _ => return Err(Error::UnsupportedDomain("Crank–Nicolson")),
    };
    if !(total_time > T::zero()) {
        return Err(Error::NonpositiveTime(total_time.as_f64()));
    }
    if steps == 0 || nodes < 3 {
        return Err(Error::InvalidParameter {
            name: "crank_nicolson",
            reason: format!("need steps ≥ 1 and nodes ≥ 3, got {steps} and {nodes}"),
        });
    }
    let h = (hi - lo) / T::from_count(nodes - 1);
    let grid = Grid::with_counts(vec![lo], h, vec![nodes])?;
    let dt = total_time / T::from_count(steps);
    let half = T::lit(0.5) * dt;
    // L as a tridiagonal stencil
    let mut sub = vec![T::zero(); nodes];
    let mut mid = vec![T::zero(); nodes];
    let mut sup = vec![T::zero(); nodes];
    for i in 1..nodes - 1 {
        let x = [lo + h * T::from_count(i)];
        let a = op.a(&x)[(0, 0)];
        let b = op.b(&x)[0];
        let c = op.c(&x);
        sub[i] = a / (h * h) - b / (T::lit(2.0) * h);
        mid[i] = -T::lit(2.0) * a / (h * h) + c;
        sup[i] = a / (h * h) + b / (T::lit(2.0) * h);
    }
    // (I − dt/2 L) u' = (I + dt/2 L) u, boundary rows pinned to 0
    let lower: Vec<T> = sub.iter().map(|&v| -half * v).collect();
    let upper: Vec<T> = sup.iter().map(|&v| -half * v).collect();
    let mut diag: Vec<T> = mid.iter().map(|&v| T::one() - half * v).collect();
    diag[0] = T::one();
    diag[nodes - 1] = T::one();
    let mut lower = lower;
    let mut upper = upper;
    upper[0] = T::zero();
    lower[nodes - 1] = T::zero();

    let mut u: Vec<T> = (0..nodes).map(|i| u0(lo + h * T::from_count(i))).collect();
    u[0] = T::zero();
    u[nodes - 1] = T::zero();
    let mut rhs = vec![T::zero(); nodes];
    for _ in 0..steps {
        for i in 1..nodes - 1 {
            rhs[i] = u[i] + half * (sub[i] * u[i - 1] + mid[i] * u[i] + sup[i] * u[i + 1]);
        }
        rhs[0] = T::zero();
        rhs[nodes - 1] = T::zero();
        thomas(&lower, &diag, &upper, &mut rhs)?;
        std::mem::swap(&mut u, &mut rhs);
    }
    SampledFunction::new(grid, u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryTest {
    /// A path dies when an Euler node leaves the domain.
    #[default]
    NodeCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub boundary_test: BoundaryTest,
}

/// Fewest paths an estimate may use.
pub const MIN_PATHS: usize = 10_000;
/// Paths per RNG stream; fixes the reduction tree regardless of thread count.
const CHUNK: usize = 1024;

impl McConfig {
    pub fn new(paths: usize, dt: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            paths,
            dt,
            seed,
            boundary_test: BoundaryTest::NodeCrossing,
        };
        if paths < MIN_PATHS {
            return Err(Error::InvalidParameter {
                name: "paths",
                reason: format!("need at least {MIN_PATHS}, got {paths}"),
            });
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be positive, got {dt}"),
            });
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub mean: T,
    pub std_error: T,
    pub survivors: usize,
    pub paths: usize,
    pub seed: u64,
}

/// Drift, diffusion factor and potential, frozen when the coefficients are
/// constant.
struct Coefficients<'a, T> {
    op: &'a EllipticOperator<T>,
    frozen: Option<(Vec<T>, Matrix<T>, T)>,
}

impl<T: Scalar> Coefficients<'_, T> {
    fn sigma(a: Matrix<T>) -> Matrix<T> {
        let mut two_a = a;
        let n = two_a.dim();
        for i in 0..n {
            for j in 0..n {
                two_a[(i, j)] = two_a[(i, j)] * T::lit(2.0);
            }
        }
        two_a.cholesky().expect("uniformly elliptic coefficient has a Cholesky factor")
    }

    fn at(&self, x: &[T]) -> (Vec<T>, Matrix<T>, T) {
        match &self.frozen {
            Some(f) => f.clone(),
            None => (self.op.b(x), Self::sigma(self.op.a(x)), self.op.c(x)),
        }
    }
}

/// Killed Feynman–Kac estimate of `T_t u₀(x)`: the mean over Euler paths of
/// `exp(∫₀ᵗ c(ξ)) u₀(ξ_t) 1{t < τ_Ω}` for `dξ = b dt + σ dW`, `σσᵀ = 2A`.
///
/// Paths run in chunks of 1024, chunk `i` on ChaCha stream `i` of `seed`,
/// and chunk sums are reduced pairwise, so the result does not depend on
/// the thread count.
pub fn feynman_kac_estimate<T: Scalar>(
    op: &EllipticOperator<T>,
    domain: &DomainModel<T>,
    u0: &(dyn Fn(&[T]) -> T + Sync),
    t: T,
    x: &[T],
    cfg: &McConfig,
) -> Result<McEstimate<T>> {
    if !(t > T::zero()) {
        return Err(Error::NonpositiveTime(t.as_f64()));
    }
    if cfg.paths < MIN_PATHS {
        return Err(Error::InvalidParameter {
            name: "paths",
            reason: format!("need at least {MIN_PATHS}, got {}", cfg.paths),
        });
    }
    if !(cfg.dt > 0.0) || cfg.dt > t.as_f64() / 100.0 {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("need 0 < dt ≤ t/100 = {}, got {}", t.as_f64() / 100.0, cfg.dt),
        });
    }
    if x.len() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: x.len(),
        });
    }
    let steps = (t.as_f64() / cfg.dt).ceil() as usize;
    let dt = t / T::from_count(steps);
    let sqrt_dt = dt.sqrt();
    let coeffs = Coefficients {
        op,
        frozen: op
            .has_constant_coefficients()
            .then(|| (op.b(x), Coefficients::sigma(op.a(x)), op.c(x))),
    };
    let n = x.len();
    let chunks = cfg.paths.div_ceil(CHUNK);

    let per_chunk = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(cfg.paths - chunk * CHUNK);
            let mut values = Vec::with_capacity(count);
            let mut survivors = 0usize;
            let mut xi = vec![T::zero(); n];
            let mut z = vec![T::zero(); n];
            for _ in 0..count {
                xi.copy_from_slice(x);
                let mut log_weight = T::zero();
                let mut alive = true;
                for step in 0..steps {
                    let local;
                    let (b, sigma, c) = match &coeffs.frozen {
                        Some((b, s, c)) => (b, s, *c),
                        None => {
                            local = coeffs.at(&xi);
                            (&local.0, &local.1, local.2)
                        }
                    };
                    log_weight = log_weight + c * dt;
                    for zk in z.iter_mut() {
                        let s: f64 = StandardNormal.sample(&mut rng);
                        *zk = T::lit(s);
                    }
                    // σ is lower triangular
                    for k in (0..n).rev() {
                        let mut noise = T::zero();
                        for j in 0..=k {
                            noise = noise + sigma[(k, j)] * z[j];
                        }
                        xi[k] = xi[k] + b[k] * dt + noise * sqrt_dt;
                    }
                    if xi.iter().any(|v| !v.is_finite()) {
                        return Err(Error::PathExplosion { step: step + 1 });
                    }
                    if !domain.contains_closure(&xi) || domain.signed_distance(&xi) <= T::zero() {
                        alive = false;
                        break;
                    }
                }
                if alive {
                    survivors += 1;
                    values.push(log_weight.exp() * u0(&xi));
                } else {
                    values.push(T::zero());
                }
            }
            let squares: Vec<T> = values.iter().map(|&v| v * v).collect();
            Ok((pairwise_sum(&values), pairwise_sum(&squares), survivors))
        })
        .collect::<Result<Vec<_>>>()?;

    let sums: Vec<T> = per_chunk.iter().map(|c| c.0).collect();
    let squares: Vec<T> = per_chunk.iter().map(|c| c.1).collect();
    let m = T::from_count(cfg.paths);
    let mean = pairwise_sum(&sums) / m;
    let second = pairwise_sum(&squares) / m;
    let var = ((second - mean * mean) * m / (m - T::one())).max(T::zero());
    Ok(McEstimate {
        mean,
        std_error: (var / m).sqrt(),
        survivors: per_chunk.iter().map(|c| c.2).sum(),
        paths: cfg.paths,
        seed: cfg.seed,
    })
}
