//! Experiment configuration, read from TOML.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::feynman::Quadrature;
use crate::geometry::{CutoffFamily, DomainKind, DomainModel};
use crate::harness;
use crate::jet::Jet;
use crate::linalg::Matrix;
use crate::operator::{EllipticOperator, TestFunction};
use crate::oracles::SineSeries;

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for random test functions and Monte Carlo; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    pub operator: OperatorSpec,
    pub domain: DomainSpec,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub plan: PlanSpec,
    #[serde(default)]
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Built-in coefficient families. The polynomial and trigonometric
/// families are one-dimensional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Constant {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
    /// Coefficients as polynomials in `x`, lowest power first.
    Polynomial {
        a: Vec<f64>,
        #[serde(default)]
        b: Vec<f64>,
        #[serde(default)]
        c: Vec<f64>,
    },
    /// `a₀ + a₁ sin ωx`, `b₀ + b₁ cos ωx`, `c₀ + c₁ sin ωx`.
    Trigonometric {
        a: [f64; 2],
        #[serde(default)]
        b: [f64; 2],
        #[serde(default)]
        c: [f64; 2],
        omega: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Interval {
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        collar: Option<f64>,
    },
    Disc {
        center: [f64; 2],
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        collar: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Extra exponents; each gets its own output file.
    #[serde(default)]
    pub sensitivity: Vec<f64>,
}

fn default_beta() -> f64 {
    CutoffFamily::<f64>::DEFAULT_BETA
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            beta: default_beta(),
            sensitivity: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `Σ c_k sin(kπ(x − lo)/ℓ)` on an interval.
    Sine { coefficients: Vec<f64> },
    /// Harness member on an interval: `alphas` perturb the sine profile.
    Member {
        #[serde(default)]
        alphas: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Harness member on a disc with constant coefficients.
    DiscMember {
        coefficients: [f64; 6],
        #[serde(default = "one")]
        kappa: f64,
    },
    /// Harness member drawn from the seed.
    Random,
    Zero,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanSpec {
    pub total_time: f64,
    pub n_list: Vec<usize>,
    /// Time steps for the consistency ladder.
    pub t_ladder: Vec<f64>,
}

impl Default for PlanSpec {
    fn default() -> Self {
        Self {
            total_time: 0.1,
            n_list: vec![8, 16, 32, 64],
            t_ladder: vec![0.1, 0.03, 0.01, 0.003],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureSpec {
    Trapezoid,
    GaussHermite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSpec {
    pub h_max: f64,
    pub quadrature: QuadratureSpec,
    pub gh_order: usize,
    pub kernel_radius: f64,
    pub probe_resolution: f64,
    /// Boundary distance below which probes are ignored; defaults to twice
    /// the cutoff width at the finest step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_margin: Option<f64>,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        Self {
            h_max: 0.02,
            quadrature: QuadratureSpec::Trapezoid,
            gh_order: 16,
            kernel_radius: 8.0,
            probe_resolution: 0.02,
            probe_margin: None,
        }
    }
}

impl DiscretizationSpec {
    pub fn quadrature(&self) -> Quadrature {
        match self.quadrature {
            QuadratureSpec::Trapezoid => Quadrature::Trapezoid,
            QuadratureSpec::GaussHermite => Quadrature::GaussHermite(self.gh_order),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Analytic,
    CrankNicolson,
    MonteCarlo,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub kind: OracleKind,
    pub cn_nodes: usize,
    pub cn_steps: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            kind: OracleKind::Analytic,
            cn_nodes: 2001,
            cn_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSpec {
    pub paths: usize,
    pub dt: f64,
    /// Evaluation points; empty means the domain's midpoint.
    pub points: Vec<Vec<f64>>,
}

impl Default for McSpec {
    fn default() -> Self {
        Self {
            paths: 100_000,
            dt: 1e-4,
            points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Parses TOML, reporting the key path of the first offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner()))
    })
}

pub fn to_toml(cfg: &ExperimentConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl ExperimentConfig {
    pub fn build_domain(&self) -> Result<DomainModel<f64>, CliError> {
        let (dom, collar) = match self.domain {
            DomainSpec::Interval { lo, hi, collar } => (DomainModel::interval(lo, hi), collar),
            DomainSpec::Disc { center, radius, collar } => (DomainModel::disc(center, radius), collar),
        };
        let dom = dom.map_err(|e| config_err(format!("domain: {e}")))?;
        match collar {
            Some(c) => dom.with_collar(c).map_err(|e| config_err(format!("domain.collar: {e}"))),
            None => Ok(dom),
        }
    }

    /// Builds the operator. Declared constants of the non-constant families
    /// are read off samples over the domain's bounding box.
    pub fn build_operator(&self, domain: &DomainModel<f64>) -> Result<EllipticOperator<f64>, CliError> {
        let dim = domain.dim();
        match &self.operator {
            OperatorSpec::Constant { a, b, c } => {
                if a.len() != dim || a.iter().any(|r| r.len() != dim) || b.len() != dim {
                    return Err(config_err(format!(
                        "operator: a must be {dim}x{dim} and b of length {dim} for this domain"
                    )));
                }
                Ok(EllipticOperator::constant(Matrix::from_rows(a), b.clone(), *c)?)
            }
            OperatorSpec::Polynomial { a, b, c } => {
                if dim != 1 {
                    return Err(config_err("operator: the polynomial family is one-dimensional"));
                }
                if a.is_empty() {
                    return Err(config_err("operator.a: need at least one coefficient"));
                }
                let (a, b, c) = (a.clone(), b.clone(), c.clone());
                let fa = move |x: f64| polynomial(&a, x);
                let fb = move |x: f64| polynomial(&b, x);
                let fc = move |x: f64| polynomial(&c, x);
                one_dimensional(domain, fa, fb, fc)
            }
            &OperatorSpec::Trigonometric { a, b, c, omega } => {
                if dim != 1 {
                    return Err(config_err("operator: the trigonometric family is one-dimensional"));
                }
                let fa = move |x: f64| a[0] + a[1] * (omega * x).sin();
                let fb = move |x: f64| b[0] + b[1] * (omega * x).cos();
                let fc = move |x: f64| c[0] + c[1] * (omega * x).sin();
                one_dimensional(domain, fa, fb, fc)
            }
        }
    }

    pub fn cutoffs(&self) -> Result<Vec<CutoffFamily<f64>>, CliError> {
        std::iter::once(self.cutoff.beta)
            .chain(self.cutoff.sensitivity.iter().copied())
            .map(|beta| CutoffFamily::new(beta).map_err(|e| config_err(format!("cutoff: {e}"))))
            .collect()
    }

    /// Sine coefficients of the initial datum, when it is a sine series.
    pub fn sine_series(&self, domain: &DomainModel<f64>) -> Option<SineSeries<f64>> {
        match &self.initial {
            InitialSpec::Sine { coefficients } => SineSeries::on(domain, coefficients.clone()).ok(),
            InitialSpec::Zero => SineSeries::on(domain, Vec::new()).ok(),
            _ => None,
        }
    }

    pub fn build_initial(
        &self,
        op: &EllipticOperator<f64>,
        domain: &DomainModel<f64>,
        seed: u64,
    ) -> Result<TestFunction<f64>, CliError> {
        let interval = matches!(domain.kind(), DomainKind::Interval { .. });
        match &self.initial {
            InitialSpec::Sine { coefficients } => {
                let DomainKind::Interval { lo, hi } = *domain.kind() else {
                    return Err(config_err("initial: sine data need an interval domain"));
                };
                let coeffs = coefficients.clone();
                let length = hi - lo;
                Ok(TestFunction::from_jet(1, move |x| {
                    coeffs.iter().enumerate().fold(Jet::constant(x[0].dim(), 0.0), |acc, (i, &ck)| {
                        let k = (i + 1) as f64 * std::f64::consts::PI / length;
                        acc + ((x[0].clone() - lo) * k).sin().scale(ck)
                    })
                }))
            }
            InitialSpec::Member { alphas, amplitude } => {
                if !interval {
                    return Err(config_err("initial: member data need an interval domain"));
                }
                Ok(harness::interval_member(op, domain, alphas, *amplitude)?)
            }
            InitialSpec::DiscMember { coefficients, kappa } => {
                if interval {
                    return Err(config_err("initial: disc-member data need a disc domain"));
                }
                Ok(harness::disc_member(op, domain, *coefficients, *kappa)?)
            }
            InitialSpec::Random => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                Ok(harness::random_member(op, domain, &mut rng)?)
            }
            InitialSpec::Zero => Ok(TestFunction::zero(domain.dim())),
        }
    }

    pub fn mc_points(&self, domain: &DomainModel<f64>) -> Result<Vec<Vec<f64>>, CliError> {
        if self.mc.points.is_empty() {
            let (lo, hi) = domain.hull();
            return Ok(vec![lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()]);
        }
        for p in &self.mc.points {
            if p.len() != domain.dim() {
                return Err(config_err(format!("mc.points: {p:?} has the wrong dimension")));
            }
        }
        Ok(self.mc.points.clone())
    }
}

fn one_dimensional(
    domain: &DomainModel<f64>,
    fa: impl Fn(f64) -> f64 + Send + Sync + 'static,
    fb: impl Fn(f64) -> f64 + Send + Sync + 'static,
    fc: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<EllipticOperator<f64>, CliError> {
    let (lo, hi) = domain.bounding_box();
    let (lo, hi) = (lo[0], hi[0]);
    let samples = 2001;
    let mut min_a = f64::INFINITY;
    let mut sup = 0.0f64;
    for i in 0..samples {
        let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        min_a = min_a.min(fa(x));
        sup = sup.max(fa(x).abs()).max(fb(x).abs()).max(fc(x).abs());
    }
    if !(min_a > 0.0) {
        return Err(CliError::Run(Error::EllipticityViolation {
            point: vec![],
            eigenvalue: min_a,
            bound: 0.0,
        }));
    }
    Ok(EllipticOperator::new(
        1,
        Arc::new(move |x: &[f64]| Matrix::from_diagonal(&[fa(x[0])])),
        Arc::new(move |x: &[f64]| vec![fb(x[0])]),
        Arc::new(move |x: &[f64]| fc(x[0])),
        min_a,
        sup * (1.0 + 1e-9),
    )?)
}
