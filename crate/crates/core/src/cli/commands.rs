use crate::chernoff::{chernoff_iterate, convergence_table, ConvergenceRow, IterationPlan};
use crate::error::Error;
use crate::extension::{global_extend, ExtensionOperator};
use crate::feynman::consistency_residual;
use crate::geometry::{boundary_charts, CutoffFamily, DomainKind, DomainModel};
use crate::grid::SampledFunction;
use crate::operator::{
    check_domain_membership, dissipativity_residual, validate as validate_operator, EllipticOperator, TestFunction,
    BOUNDARY_RESIDUAL_TOL,
};
use crate::oracles::{analytic_heat, crank_nicolson, feynman_kac_estimate, McConfig, McEstimate};

use super::config::{OperatorSpec, OracleKind};
use super::{CliError, Context, Outcome};

/// Tolerance on the growth bound reported by `converge`.
const BOUND_TOL: f64 = 1e-6;
/// Relative slack allowed when checking that errors do not grow.
const MONOTONE_SLACK: f64 = 0.1;

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn beta_tag(cutoff: &CutoffFamily<f64>) -> String {
    format!("beta{}", cutoff.beta())
}

struct Setup {
    domain: DomainModel<f64>,
    op: EllipticOperator<f64>,
    u0: TestFunction<f64>,
}

fn setup(ctx: &Context) -> Result<Setup, CliError> {
    let domain = ctx.cfg.build_domain()?;
    let op = ctx.cfg.build_operator(&domain)?;
    let u0 = ctx.cfg.build_initial(&op, &domain, ctx.seed)?;
    Ok(Setup { domain, op, u0 })
}

pub(super) fn validate(ctx: &Context) -> Result<Outcome, CliError> {
    let mut w = ctx.csv("validate.csv")?;
    w.write_record(["check", "status", "detail"])?;
    let mut record = |name: &str, result: Result<String, Error>| -> Result<Option<String>, CliError> {
        let (status, detail) = match &result {
            Ok(d) => ("pass", d.clone()),
            Err(e) => ("fail", e.to_string()),
        };
        println!("{} {name}: {detail}", status.to_uppercase());
        w.write_record([name, status, &detail])?;
        Ok(result.err().map(|e| format!("{name}: {e}")))
    };

    let domain = ctx.cfg.build_domain()?;
    let op = match ctx.cfg.build_operator(&domain) {
        Ok(op) => op,
        Err(CliError::Run(e)) => {
            let failure = record("operator", Err(e))?;
            w.flush()?;
            return Ok(Outcome::Fail(failure.unwrap_or_default()));
        }
        Err(e) => return Err(e),
    };
    let samples = domain.closure_samples(ctx.cfg.discretization.probe_resolution, 100);
    let checks: Vec<(&str, Box<dyn Fn() -> Result<String, Error>>)> = vec![
        (
            "operator",
            Box::new(|| {
                validate_operator(&op, &samples).map(|r| {
                    format!(
                        "min eigenvalue {:e}, coefficient sup {:e} over {} samples",
                        r.min_eigenvalue, r.coefficient_sup, r.samples
                    )
                })
            }),
        ),
        (
            "charts",
            Box::new(|| {
                let charts = boundary_charts(&domain)?;
                for c in &charts {
                    c.check_invariants(&domain, 9)?;
                }
                Ok(format!("{} charts", charts.len()))
            }),
        ),
        (
            "extension",
            Box::new(|| {
                let ext = ExtensionOperator::assemble(&op, &domain)?;
                Ok(format!("collar widths {:?}", ext.collars()))
            }),
        ),
    ];
    for (name, check) in &checks {
        if let Some(f) = record(name, check())? {
            w.flush()?;
            return Ok(Outcome::Fail(f));
        }
    }
    let u0 = ctx.cfg.build_initial(&op, &domain, ctx.seed)?;
    let ext = ExtensionOperator::assemble(&op, &domain)?;
    let h = ctx.cfg.discretization.h_max;
    let later: Vec<(&str, Box<dyn Fn() -> Result<String, Error>>)> = vec![
        (
            "initial-datum",
            Box::new(|| {
                check_domain_membership(&op, &u0, &domain, BOUNDARY_RESIDUAL_TOL)
                    .map(|_| "u = Lu = 0 on the boundary".to_string())
            }),
        ),
        (
            "dissipativity",
            Box::new(|| {
                let r = dissipativity_residual(&op, &u0, &domain, ctx.cfg.discretization.probe_resolution)?;
                if r <= 1e-6 {
                    Ok(format!("residual {r:e}"))
                } else {
                    Err(Error::InvalidParameter {
                        name: "dissipativity",
                        reason: format!("residual {r:e} is positive"),
                    })
                }
            }),
        ),
        (
            "contraction",
            Box::new(|| {
                let f = global_extend(&ext, &u0, h)?;
                let inside = f.sup_norm_where(|x| domain.contains_closure(x));
                let all = f.sup_norm();
                if all <= inside * (1.0 + 1e-12) {
                    Ok(format!("sup |Eu| = {all:e}, sup |u| = {inside:e}"))
                } else {
                    Err(Error::InvalidParameter {
                        name: "extension",
                        reason: format!("sup |Eu| = {all:e} exceeds sup |u| = {inside:e}"),
                    })
                }
            }),
        ),
    ];
    for (name, check) in &later {
        if let Some(f) = record(name, check())? {
            w.flush()?;
            return Ok(Outcome::Fail(f));
        }
    }
    w.flush()?;
    Ok(Outcome::Pass)
}

pub(super) fn consistency(ctx: &Context) -> Result<Outcome, CliError> {
    let s = setup(ctx)?;
    let ext = ExtensionOperator::assemble(&s.op, &s.domain)?;
    let d = &ctx.cfg.discretization;
    let mut outcome = Outcome::Pass;
    for cutoff in ctx.cfg.cutoffs()? {
        let mut w = ctx.csv(&format!("consistency_{}.csv", beta_tag(&cutoff)))?;
        w.write_record(["t", "grid_step", "probes", "sup_residual"])?;
        let mut residuals = Vec::new();
        for &t in &ctx.cfg.plan.t_ladder {
            let r = consistency_residual(&ext, &cutoff, &s.u0, t, d.h_max, d.probe_resolution)?;
            w.write_record([num(t), num(r.grid_step), r.probes.to_string(), num(r.residual)])?;
            println!("beta {} t {t:e}: residual {:e}", cutoff.beta(), r.residual);
            residuals.push(r.residual);
        }
        w.flush()?;
        let decreasing = residuals
            .windows(2)
            .all(|p| p[1] < p[0] || (p[1] == 0.0 && p[0] == 0.0));
        if !decreasing && outcome == Outcome::Pass {
            outcome = Outcome::Fail(format!("residuals not decreasing for beta {}: {residuals:?}", cutoff.beta()));
        }
    }
    Ok(outcome)
}

/// Closed-form reference for `a∂² + c` with constant `a`, `c` and sine data.
fn analytic_reference(ctx: &Context, domain: &DomainModel<f64>) -> Result<impl Fn(&[f64]) -> f64 + Sync, CliError> {
    let series = ctx.cfg.sine_series(domain);
    let coeffs = match &ctx.cfg.operator {
        OperatorSpec::Constant { a, b, c } if a.len() == 1 && b[0] == 0.0 => Some((a[0][0], *c)),
        _ => None,
    };
    match (series, coeffs) {
        (Some(series), Some((a, c))) => {
            let t = ctx.cfg.plan.total_time;
            Ok(move |x: &[f64]| (c * t).exp() * analytic_heat(&series, a * t, x[0]))
        }
        _ => Err(CliError::Config(
            "the analytic oracle needs sine or zero data and a constant one-dimensional operator without drift".into(),
        )),
    }
}

fn cn_reference(ctx: &Context, s: &Setup) -> Result<SampledFunction<f64>, CliError> {
    if !matches!(s.domain.kind(), DomainKind::Interval { .. }) {
        return Err(CliError::Config("the Crank–Nicolson oracle needs an interval domain".into()));
    }
    let u0 = s.u0.clone();
    Ok(crank_nicolson(
        &s.op,
        &s.domain,
        &move |x| u0.value(&[x]),
        ctx.cfg.plan.total_time,
        ctx.cfg.oracle.cn_steps,
        ctx.cfg.oracle.cn_nodes,
    )?)
}

fn mc_config(ctx: &Context) -> Result<McConfig, CliError> {
    McConfig::new(ctx.cfg.mc.paths, ctx.cfg.mc.dt, ctx.seed).map_err(|e| CliError::Config(format!("mc: {e}")))
}

fn plan_template(ctx: &Context) -> Result<IterationPlan<f64>, CliError> {
    let d = &ctx.cfg.discretization;
    let plan = IterationPlan {
        total_time: ctx.cfg.plan.total_time,
        steps: 1,
        probe_resolution: d.probe_resolution,
        record_intermediate: false,
        h_max: d.h_max,
        quadrature: d.quadrature(),
        kernel_radius: d.kernel_radius,
    };
    plan.validate().map_err(|e| CliError::Config(format!("plan: {e}")))?;
    Ok(plan)
}

fn nonincreasing(errors: &[f64]) -> bool {
    errors.windows(2).all(|p| p[1] <= p[0] * (1.0 + MONOTONE_SLACK))
}

pub(super) fn converge(ctx: &Context) -> Result<Outcome, CliError> {
    let s = setup(ctx)?;
    let ext = ExtensionOperator::assemble(&s.op, &s.domain)?;
    let template = plan_template(ctx)?;
    let n_list = &ctx.cfg.plan.n_list;
    if n_list.is_empty() {
        return Err(CliError::Config("plan.n_list is empty".into()));
    }
    let margin = ctx.cfg.discretization.probe_margin;
    let kind = ctx.cfg.oracle.kind;
    let mut outcome = Outcome::Pass;
    for cutoff in ctx.cfg.cutoffs()? {
        let mut w = ctx.csv(&format!("converge_{}.csv", beta_tag(&cutoff)))?;
        w.write_record(["n", "time_step", "grid_step", "sup_error", "bound_ok", "band_ok"])?;
        let rows: Vec<(ConvergenceRow<f64>, Option<bool>)> = match kind {
            OracleKind::Analytic => {
                let reference = analytic_reference(ctx, &s.domain)?;
                convergence_table(&ext, &cutoff, &s.u0, &template, n_list, &reference, margin)?
                    .into_iter()
                    .map(|r| (r, None))
                    .collect()
            }
            OracleKind::CrankNicolson => {
                let cn = cn_reference(ctx, &s)?;
                convergence_table(&ext, &cutoff, &s.u0, &template, n_list, &|x| cn.eval(x), margin)?
                    .into_iter()
                    .map(|r| (r, None))
                    .collect()
            }
            OracleKind::None => {
                convergence_table(&ext, &cutoff, &s.u0, &template, n_list, &|_| f64::NAN, margin)?
                    .into_iter()
                    .map(|r| (r, None))
                    .collect()
            }
            OracleKind::MonteCarlo => {
                let cfg = mc_config(ctx)?;
                let points = ctx.cfg.mc_points(&s.domain)?;
                let u0 = s.u0.clone();
                let estimates = points
                    .iter()
                    .map(|p| feynman_kac_estimate(&s.op, &s.domain, &|x| u0.value(x), template.total_time, p, &cfg))
                    .collect::<Result<Vec<McEstimate<f64>>, Error>>()?;
                let mut rows = Vec::new();
                for &n in n_list {
                    let plan = IterationPlan { steps: n, ..template.clone() };
                    let run = chernoff_iterate(&ext, &cutoff, &s.u0, &plan)?;
                    let mut sup_error = 0.0f64;
                    let mut band = true;
                    for (p, est) in points.iter().zip(&estimates) {
                        let err = (run.result.eval(p) - est.mean).abs();
                        sup_error = sup_error.max(err);
                        band &= err <= 3.0 * est.std_error;
                    }
                    let bound_excess = run
                        .sup_history
                        .iter()
                        .zip(&run.growth_bound)
                        .map(|(&v, &b)| if b > 0.0 { v / b - 1.0 } else { v })
                        .fold(f64::NEG_INFINITY, f64::max);
                    let row = ConvergenceRow {
                        steps: n,
                        time_step: plan.time_step(),
                        grid_step: run.grid_step,
                        sup_error,
                        bound_excess,
                        runtime_secs: 0.0,
                    };
                    rows.push((row, Some(band)));
                }
                rows
            }
        };
        let mut errors = Vec::new();
        let mut bounds_ok = true;
        for (r, band) in &rows {
            let bound_ok = r.bound_excess <= BOUND_TOL;
            bounds_ok &= bound_ok;
            errors.push(r.sup_error);
            let band = band.map_or_else(|| "na".to_string(), |b| b.to_string());
            w.write_record([
                r.steps.to_string(),
                num(r.time_step),
                num(r.grid_step),
                num(r.sup_error),
                bound_ok.to_string(),
                band,
            ])?;
            println!("beta {} n {}: sup error {:e}, bound ok {bound_ok}", cutoff.beta(), r.steps, r.sup_error);
        }
        w.flush()?;
        if outcome != Outcome::Pass {
            continue;
        }
        if !bounds_ok {
            outcome = Outcome::Fail(format!("growth bound exceeded for beta {}", cutoff.beta()));
        } else if matches!(kind, OracleKind::Analytic | OracleKind::CrankNicolson) && !nonincreasing(&errors) {
            outcome = Outcome::Fail(format!("errors grow with n for beta {}: {errors:?}", cutoff.beta()));
        }
    }
    Ok(outcome)
}

pub(super) fn extend_demo(ctx: &Context) -> Result<Outcome, CliError> {
    let s = setup(ctx)?;
    let ext = ExtensionOperator::assemble(&s.op, &s.domain)?;
    let f = global_extend(&ext, &s.u0, ctx.cfg.discretization.h_max)?;
    let collar = ext.max_collar();
    let mut w = ctx.csv("extend_demo.csv")?;
    let mut header: Vec<String> = (0..s.domain.dim()).map(|k| format!("x{k}")).collect();
    header.extend(["value".into(), "region".into()]);
    w.write_record(&header)?;
    let (mut inside, mut outside) = (0.0f64, 0.0f64);
    for (i, &v) in f.values().iter().enumerate() {
        let x = f.grid().node(i);
        let d = s.domain.signed_distance(&x);
        let region = if d >= 0.0 {
            inside = inside.max(v.abs());
            "inside"
        } else if d > -collar {
            outside = outside.max(v.abs());
            "collar"
        } else {
            outside = outside.max(v.abs());
            "outside"
        };
        let mut rec: Vec<String> = x.iter().map(|&c| num(c)).collect();
        rec.push(num(v));
        rec.push(region.into());
        w.write_record(&rec)?;
    }
    w.flush()?;
    println!("sup inside {inside:e}, sup beyond {outside:e}");
    if outside <= inside * (1.0 + 1e-12) {
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::Fail(format!("extension not contractive: {outside:e} > {inside:e}")))
    }
}

pub(super) fn mc_compare(ctx: &Context) -> Result<Outcome, CliError> {
    let s = setup(ctx)?;
    let cfg = mc_config(ctx)?;
    let t = ctx.cfg.plan.total_time;
    let points = ctx.cfg.mc_points(&s.domain)?;
    let analytic = analytic_reference(ctx, &s.domain).ok();
    let cn = match s.domain.kind() {
        DomainKind::Interval { .. } => Some(cn_reference(ctx, &s)?),
        _ => None,
    };
    let mut w = ctx.csv("mc_compare.csv")?;
    let mut header: Vec<String> = (0..s.domain.dim()).map(|k| format!("x{k}")).collect();
    header.extend(
        ["t", "analytic", "crank_nicolson", "mc_mean", "mc_std_error", "survivors", "max_gap", "tolerance", "pass"]
            .map(String::from),
    );
    w.write_record(&header)?;
    let mut outcome = Outcome::Pass;
    let u0 = s.u0.clone();
    for p in &points {
        let est = feynman_kac_estimate(&s.op, &s.domain, &|x| u0.value(x), t, p, &cfg)?;
        let a = analytic.as_ref().map(|f| f(p));
        let c = cn.as_ref().map(|f| f.eval(p));
        let values: Vec<f64> = [a, c, Some(est.mean)].into_iter().flatten().collect();
        let mut gap = 0.0f64;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                gap = gap.max((values[i] - values[j]).abs());
            }
        }
        let tol = (3.0 * est.std_error).max(1e-3);
        let pass = gap <= tol;
        let opt = |v: Option<f64>| v.map_or_else(String::new, num);
        let mut rec: Vec<String> = p.iter().map(|&c| num(c)).collect();
        rec.extend([
            num(t),
            opt(a),
            opt(c),
            num(est.mean),
            num(est.std_error),
            est.survivors.to_string(),
            num(gap),
            num(tol),
            pass.to_string(),
        ]);
        w.write_record(&rec)?;
        println!("x {p:?}: mc {:e} ± {:e}, gap {gap:e}, pass {pass}", est.mean, est.std_error);
        if !pass && outcome == Outcome::Pass {
            outcome = Outcome::Fail(format!("oracles disagree at {p:?}: gap {gap:e} > {tol:e}"));
        }
    }
    w.flush()?;
    Ok(outcome)
}
