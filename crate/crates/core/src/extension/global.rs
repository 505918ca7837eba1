//! Global extension: local reflections glued by a partition of unity.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::{boundary_charts, smooth_step, DomainKind, DomainModel};
use crate::grid::{Grid, SampledFunction};
use crate::operator::{check_domain_membership, EllipticOperator, TestFunction, BOUNDARY_RESIDUAL_TOL};
use crate::scalar::Scalar;

use super::adapted::{build_adapted_chart, reflect_value, AdaptedChart};
use super::squeeze::collar_weight;

/// How boundary charts share the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Sectors<T> {
    /// Chart 0 owns `x < mid`, chart 1 owns `x ≥ mid`.
    Interval { mid: T },
    /// Chart `i` is centred at angle `2πi/count`.
    Disc { center: [T; 2], count: usize },
}

/// Assembled extension `Eu = Σ η_i E_i u`.
///
/// `η_i = τ_i·ν_i` for the boundary charts: `τ_i` is a tangential weight
/// (the charts' `τ_i` sum to one) and `ν_i` depends on the signed distance
/// `d`: one on `[−ε_i/2, δ₁]`, zero below `−ε_i` and above `δ₂`. The
/// interior weight is `η₀ = 1 − ν` inside the domain and 0 outside, so
/// `Σ η_i = 1` on the closed domain and `≤ 1` beyond it.
#[derive(Clone)]
pub struct ExtensionOperator<T: Scalar> {
    op: EllipticOperator<T>,
    domain: DomainModel<T>,
    charts: Vec<AdaptedChart<T>>,
    sectors: Sectors<T>,
    delta1: T,
    delta2: T,
}

impl<T: Scalar> std::fmt::Debug for ExtensionOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtensionOperator")
            .field("domain", &self.domain)
            .field("collars", &self.collars())
            .field("delta1", &self.delta1)
            .field("delta2", &self.delta2)
            .finish()
    }
}

impl<T: Scalar> ExtensionOperator<T> {
    /// Builds adapted charts on every boundary chart of `domain`, with
    /// collar widths capped by the domain's collar.
    pub fn assemble(op: &EllipticOperator<T>, domain: &DomainModel<T>) -> Result<Self> {
        let base = boundary_charts(domain)?;
        let charts = base
            .iter()
            .map(|c| build_adapted_chart(c, op, domain, domain.collar()))
            .collect::<Result<Vec<_>>>()?;
        let reach = base
            .iter()
            .map(|c| c.halfwidths()[c.dim() - 1])
            .fold(T::infinity(), T::min);
        let sectors = match *domain.kind() {
            DomainKind::Interval { lo, hi } => Sectors::Interval {
                mid: (lo + hi) * T::lit(0.5),
            },
            DomainKind::Disc { center, .. } => Sectors::Disc {
                center,
                count: charts.len(),
            },
        };
        let delta2 = T::lit(0.9) * reach;
        Ok(Self {
            op: op.clone(),
            domain: domain.clone(),
            charts,
            sectors,
            delta1: delta2 * T::lit(0.5),
            delta2,
        })
    }

    pub fn domain(&self) -> &DomainModel<T> {
        &self.domain
    }

    pub fn operator(&self) -> &EllipticOperator<T> {
        &self.op
    }

    pub fn charts(&self) -> &[AdaptedChart<T>] {
        &self.charts
    }

    pub fn collars(&self) -> Vec<T> {
        self.charts.iter().map(|c| c.epsilon()).collect()
    }

    /// Widest collar; `Eu` vanishes beyond it.
    pub fn max_collar(&self) -> T {
        self.collars().into_iter().fold(T::zero(), T::max)
    }

    fn tangential_weights(&self, x: &[T]) -> Vec<T> {
        match self.sectors {
            Sectors::Interval { mid } => {
                if x[0] < mid {
                    vec![T::one(), T::zero()]
                } else {
                    vec![T::zero(), T::one()]
                }
            }
            Sectors::Disc { center, count } => {
                let theta = (x[1] - center[1]).atan2(x[0] - center[0]);
                let spacing = T::TAU() / T::from_count(count);
                let raw: Vec<T> = (0..count)
                    .map(|i| {
                        let mut d = (theta - spacing * T::from_count(i)) % T::TAU();
                        if d > T::PI() {
                            d = d - T::TAU();
                        } else if d < -T::PI() {
                            d = d + T::TAU();
                        }
                        // 1 within a quarter spacing, 0 beyond three quarters
                        let quarter = spacing * T::lit(0.25);
                        T::one() - smooth_step((d.abs() - quarter) / (spacing * T::lit(0.5)))
                    })
                    .collect();
                let total: T = raw.iter().copied().sum();
                raw.into_iter().map(|r| r / total).collect()
            }
        }
    }

    fn inner_weight(&self, d: T) -> T {
        if d <= self.delta1 {
            T::one()
        } else {
            T::one() - smooth_step((d - self.delta1) / (self.delta2 - self.delta1))
        }
    }

    /// `[η₀, η₁, …, η_M]` at `x`.
    pub fn partition_weights(&self, x: &[T]) -> Vec<T> {
        let d = self.domain.signed_distance(x);
        let tau = self.tangential_weights(x);
        let mut out = Vec::with_capacity(tau.len() + 1);
        if d >= T::zero() {
            let nu = self.inner_weight(d);
            out.push(T::one() - nu);
            out.extend(tau.iter().map(|&t| t * nu));
        } else {
            out.push(T::zero());
            out.extend(
                tau.iter()
                    .zip(&self.charts)
                    .map(|(&t, c)| t * collar_weight(d, c.epsilon())),
            );
        }
        out
    }

    /// Checks `u = Lu = 0` on sampled boundary points and returns the
    /// pointwise extension.
    pub fn extend(&self, u: &TestFunction<T>) -> Result<ExtendedFunction<T>> {
        check_domain_membership(&self.op, u, &self.domain, T::lit(BOUNDARY_RESIDUAL_TOL))?;
        Ok(ExtendedFunction {
            ext: Arc::new(self.clone()),
            u: u.clone(),
        })
    }

    fn eval_unchecked(&self, u: &TestFunction<T>, x: &[T]) -> Result<T> {
        let d = self.domain.signed_distance(x);
        if d >= T::zero() {
            return Ok(u.value(x));
        }
        let weights = self.partition_weights(x);
        let mut acc = T::zero();
        for (chart, &eta) in self.charts.iter().zip(&weights[1..]) {
            if eta == T::zero() {
                continue;
            }
            let w = chart.psi_inverse(x)?;
            acc = acc + eta * reflect_value(chart, u, &w)?;
        }
        Ok(acc)
    }
}

/// `Eu` for a fixed `u`, evaluable anywhere.
#[derive(Clone)]
pub struct ExtendedFunction<T: Scalar> {
    ext: Arc<ExtensionOperator<T>>,
    u: TestFunction<T>,
}

impl<T: Scalar> ExtendedFunction<T> {
    pub fn eval(&self, x: &[T]) -> Result<T> {
        self.ext.eval_unchecked(&self.u, x)
    }

    /// Samples `Eu` on `grid` (in parallel).
    pub fn materialize(&self, grid: Grid<T>) -> Result<SampledFunction<T>> {
        use rayon::prelude::*;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| self.eval(&grid.node(i)))
            .collect::<Result<Vec<T>>>()?;
        SampledFunction::new(grid, values)
    }
}

/// `Eu` sampled with step `h` on the domain's bounding box.
pub fn global_extend<T: Scalar>(ext: &ExtensionOperator<T>, u: &TestFunction<T>, h: T) -> Result<SampledFunction<T>> {
    let (lo, hi) = ext.domain().bounding_box();
    let grid = Grid::covering(lo, hi, h)?;
    ext.extend(u)?.materialize(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::harness;
    use crate::linalg::Matrix;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn sine_on_half_period() {
        let dom = DomainModel::interval(0.0, PI).unwrap();
        let op = EllipticOperator::constant_1d(1.0, 0.0, 0.0).unwrap();
        let ext = ExtensionOperator::assemble(&op, &dom).unwrap();
        let e = ext.extend(&TestFunction::from_jet(1, |x| x[0].sin())).unwrap();
        let eta = ext.partition_weights(&[-0.2])[1];
        assert!(eta > 0.0 && eta < 1.0);
        assert_relative_eq!(e.eval(&[-0.2]).unwrap(), -(0.2f64).sin() * eta, epsilon = 1e-15);
        assert_relative_eq!(e.eval(&[PI + 0.1]).unwrap(), -(0.1f64).sin(), epsilon = 1e-15);
        assert_eq!(e.eval(&[-0.5]).unwrap(), 0.0);
        let z = ext.extend(&TestFunction::zero(1)).unwrap();
        assert_eq!(z.eval(&[-0.1]).unwrap(), 0.0);
        assert!(matches!(
            ext.extend(&TestFunction::from_jet(1, |x| x[0].cos())),
            Err(Error::BoundaryConditionViolated { .. })
        ));
    }

    #[test]
    fn partition_sums_to_one_inside_and_at_most_one_outside() {
        let dom = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        let op = EllipticOperator::constant(Matrix::from_diagonal(&[2.0, 1.0]), vec![0.5, -0.2], 0.0).unwrap();
        let ext = ExtensionOperator::assemble(&op, &dom).unwrap();
        let (lo, hi) = dom.bounding_box();
        let grid = Grid::covering(lo, hi, 0.05).unwrap();
        for i in 0..grid.len() {
            let x = grid.node(i);
            let w = ext.partition_weights(&x);
            assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let s: f64 = w.iter().sum();
            if dom.signed_distance(&x) >= 0.0 {
                assert!((s - 1.0).abs() <= 1e-12, "{s} at {x:?}");
            } else {
                assert!(s <= 1.0 + 1e-12);
            }
        }
        // η₀ vanishes near the boundary
        assert_eq!(ext.partition_weights(&[0.99, 0.0])[0], 0.0);
    }

    #[test]
    fn disc_extension_is_contractive() {
        let dom = DomainModel::disc([0.0, 0.0], 1.0).unwrap();
        let op = EllipticOperator::constant(Matrix::from_diagonal(&[2.0, 1.0]), vec![0.0, 0.0], 0.0).unwrap();
        let ext = ExtensionOperator::assemble(&op, &dom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = harness::random_member(&op, &dom, &mut rng).unwrap();
        let f = global_extend(&ext, &u, 0.04).unwrap();
        let inside = f.sup_norm_where(|x| dom.signed_distance(x) >= 0.0);
        let outside = f.sup_norm_where(|x| dom.signed_distance(x) < 0.0);
        assert!(outside <= inside, "{outside} > {inside}");
        assert!(outside > 0.0);
        let far = f.sup_norm_where(|x| dom.signed_distance(x) < -ext.max_collar());
        assert_eq!(far, 0.0);
    }
}
