//! Chernoff iteration `(F_{T/n})^n u₀ → T_T u₀`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::extension::ExtensionOperator;
use crate::feynman::{feynman_sweep, grid_step_for, interior_probes, Quadrature, StepConfig};
use crate::geometry::CutoffFamily;
use crate::grid::{Grid, SampledFunction};
use crate::operator::{lambda0, TestFunction};
use crate::scalar::Scalar;

/// Relative slack of the growth bound before an iterate counts as blown up.
pub const BLOWUP_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct IterationPlan<T> {
    pub total_time: T,
    pub steps: usize,
    /// Spacing of the lattice used to sample probes and estimate `λ₀`.
    pub probe_resolution: T,
    pub record_intermediate: bool,
    /// Upper limit on the grid step; the step also follows [`grid_step_for`].
    pub h_max: T,
    pub quadrature: Quadrature,
    pub kernel_radius: T,
}

impl<T: Scalar> IterationPlan<T> {
    pub fn new(total_time: T, steps: usize) -> Result<Self> {
        let plan = Self {
            total_time,
            steps,
            probe_resolution: T::lit(0.02),
            record_intermediate: false,
            h_max: T::lit(0.02),
            quadrature: Quadrature::Trapezoid,
            kernel_radius: T::lit(8.0),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > T::zero()) {
            return Err(Error::NonpositiveTime(self.total_time.as_f64()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                reason: "need at least one step".into(),
            });
        }
        if !(self.probe_resolution > T::zero()) || !(self.h_max > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "resolution",
                reason: format!(
                    "probe resolution {} and h_max {} must be positive",
                    self.probe_resolution, self.h_max
                ),
            });
        }
        self.step_config().map(|_| ())
    }

    pub fn time_step(&self) -> T {
        self.total_time / T::from_count(self.steps)
    }

    fn step_config(&self) -> Result<StepConfig<T>> {
        StepConfig::with(self.time_step(), self.quadrature, self.kernel_radius)
    }
}

#[derive(Debug, Clone)]
pub struct ChernoffRun<T> {
    pub result: SampledFunction<T>,
    /// Grid-sup of `u₀` over the closed domain.
    pub initial_sup: T,
    /// Grid-sup after each step.
    pub sup_history: Vec<T>,
    /// `e^{λ₀ k T/n}·sup|u₀|` for each step `k`.
    pub growth_bound: Vec<T>,
    pub lambda0: T,
    pub grid_step: T,
    /// Every iterate, when the plan asks for them.
    pub intermediates: Vec<SampledFunction<T>>,
}

/// Applies `F_{T/n}` `n` times. The first step consumes `E u₀`; later
/// steps consume the previous iterate, which vanishes near the boundary and
/// outside the domain because of the cutoff, so its zero extension is exact.
pub fn chernoff_iterate<T: Scalar>(
    ext: &ExtensionOperator<T>,
    cutoff: &CutoffFamily<T>,
    u0: &TestFunction<T>,
    plan: &IterationPlan<T>,
) -> Result<ChernoffRun<T>> {
    plan.validate()?;
    let op = ext.operator();
    let domain = ext.domain();
    let cfg = plan.step_config()?;
    let h = grid_step_for(op.ellipticity(), cfg.t, plan.h_max);
    let (lo, hi) = domain.bounding_box();
    let mut iterate = ext.extend(u0)?.materialize(Grid::covering(lo, hi, h)?)?;
    let initial_sup = iterate.sup_norm_where(|x| domain.contains_closure(x));
    let l0 = lambda0(op, domain, plan.probe_resolution);
    let mut sup_history = Vec::with_capacity(plan.steps);
    let mut growth_bound = Vec::with_capacity(plan.steps);
    let mut intermediates = Vec::new();
    for k in 1..=plan.steps {
        iterate = feynman_sweep(op, domain, cutoff, &iterate, &cfg)?;
        let sup = iterate.sup_norm();
        let bound = (l0 * cfg.t * T::from_count(k)).exp() * initial_sup;
        if sup > bound * T::lit(1.0 + BLOWUP_SLACK) {
            return Err(Error::IterateBlowup {
                step: k,
                sup: sup.as_f64(),
                bound: bound.as_f64(),
            });
        }
        sup_history.push(sup);
        growth_bound.push(bound);
        if plan.record_intermediate {
            intermediates.push(iterate.clone());
        }
    }
    Ok(ChernoffRun {
        result: iterate,
        initial_sup,
        sup_history,
        growth_bound,
        lambda0: l0,
        grid_step: h,
        intermediates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow<T> {
    pub steps: usize,
    pub time_step: T,
    pub grid_step: T,
    pub sup_error: T,
    /// Largest `sup_k / bound_k − 1` over the run; at most 0 when every
    /// iterate respects the growth bound exactly.
    pub bound_excess: T,
    pub runtime_secs: f64,
}

/// Default probe margin: twice the cutoff width at the finest time step.
pub fn default_probe_margin<T: Scalar>(cutoff: &CutoffFamily<T>, total_time: T, steps: &[usize]) -> T {
    let finest = steps.iter().copied().max().unwrap_or(1);
    T::lit(2.0) * cutoff.width(total_time / T::from_count(finest))
}

/// Runs the iteration for every `n` in `steps` and reports the sup error
/// against `reference` on probes at distance at least `margin` (default
/// [`default_probe_margin`]) from the boundary.
pub fn convergence_table<T: Scalar>(
    ext: &ExtensionOperator<T>,
    cutoff: &CutoffFamily<T>,
    u0: &TestFunction<T>,
    template: &IterationPlan<T>,
    steps: &[usize],
    reference: &(dyn Fn(&[T]) -> T + Sync),
    margin: Option<T>,
) -> Result<Vec<ConvergenceRow<T>>> {
    let margin = margin.unwrap_or_else(|| default_probe_margin(cutoff, template.total_time, steps));
    let probes = interior_probes(ext.domain(), template.probe_resolution, margin);
    if probes.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut rows = Vec::with_capacity(steps.len());
    for &n in steps {
        let plan = IterationPlan {
            steps: n,
            ..template.clone()
        };
        let start = Instant::now();
        let run = chernoff_iterate(ext, cutoff, u0, &plan)?;
        let runtime_secs = start.elapsed().as_secs_f64();
        let sup_error = probes
            .iter()
            .map(|x| (run.result.eval(x) - reference(x)).abs())
            .fold(T::zero(), T::max);
        let bound_excess = run
            .sup_history
            .iter()
            .zip(&run.growth_bound)
            .map(|(&s, &b)| if b > T::zero() { s / b - T::one() } else { s })
            .fold(T::neg_infinity(), T::max);
        rows.push(ConvergenceRow {
            steps: n,
            time_step: plan.time_step(),
            grid_step: run.grid_step,
            sup_error,
            bound_excess,
            runtime_secs,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feynman::feynman_sweep;
    use crate::geometry::DomainModel;
    use crate::operator::EllipticOperator;
    use std::f64::consts::PI;

    fn heat_setup(c: f64) -> (ExtensionOperator<f64>, TestFunction<f64>) {
        let dom = DomainModel::interval(0.0, PI).unwrap();
        let op = EllipticOperator::constant_1d(1.0, 0.0, c).unwrap();
        let ext = ExtensionOperator::assemble(&op, &dom).unwrap();
        (ext, TestFunction::from_jet(1, |x| x[0].sin()))
    }

    #[test]
    fn single_step_is_one_sweep() {
        let (ext, u) = heat_setup(0.0);
        let cut = CutoffFamily::default();
        let plan = IterationPlan::new(0.01, 1).unwrap();
        let run = chernoff_iterate(&ext, &cut, &u, &plan).unwrap();
        let (lo, hi) = ext.domain().bounding_box();
        let eu = ext.extend(&u).unwrap().materialize(Grid::covering(lo, hi, run.grid_step).unwrap()).unwrap();
        let cfg = StepConfig::new(0.01).unwrap();
        let once = feynman_sweep(ext.operator(), ext.domain(), &cut, &eu, &cfg).unwrap();
        assert_eq!(once.values(), run.result.values());
    }

    #[test]
    fn zero_datum_stays_zero() {
        let (ext, _) = heat_setup(0.0);
        let plan = IterationPlan::new(0.05, 4).unwrap();
        let run = chernoff_iterate(&ext, &CutoffFamily::default(), &TestFunction::zero(1), &plan).unwrap();
        assert_eq!(run.result.sup_norm(), 0.0);
    }

    #[test]
    fn iterates_respect_growth_bound_and_vanish_on_boundary() {
        for c in [0.0, -1.0] {
            let (ext, u) = heat_setup(c);
            let mut plan = IterationPlan::new(0.1, 8).unwrap();
            plan.record_intermediate = true;
            let run = chernoff_iterate(&ext, &CutoffFamily::default(), &u, &plan).unwrap();
            for (s, b) in run.sup_history.iter().zip(&run.growth_bound) {
                assert!(*s <= b * (1.0 + 1e-6), "{s} > {b}");
            }
            for it in &run.intermediates {
                assert_eq!(it.eval(&[0.0]), 0.0);
                assert_eq!(it.eval(&[PI]), 0.0);
            }
        }
    }

    #[test]
    fn error_decreases_with_steps() {
        let (ext, u) = heat_setup(0.0);
        let plan = IterationPlan::new(0.1, 1).unwrap();
        let reference = |x: &[f64]| (-0.1f64).exp() * x[0].sin();
        let rows = convergence_table(&ext, &CutoffFamily::default(), &u, &plan, &[4, 8, 16], &reference, None).unwrap();
        assert!(rows[1].sup_error < rows[0].sup_error);
        assert!(rows[2].sup_error < rows[1].sup_error);
        assert!(rows.iter().all(|r| r.bound_excess <= 1e-6));
        let one = convergence_table(&ext, &CutoffFamily::default(), &u, &plan, &[1], &reference, None).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn plan_validation() {
        assert!(IterationPlan::<f64>::new(0.0, 4).is_err());
        assert!(IterationPlan::<f64>::new(0.1, 0).is_err());
    }
}
