//! Feynman-type approximation of the Dirichlet heat semigroup for
//! second-order elliptic operators on bounded domains.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below fix the common case.

pub mod chernoff;
pub mod cli;
pub mod error;
pub mod extension;
pub mod feynman;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod jet;
pub mod linalg;
pub mod operator;
pub mod oracles;
pub mod scalar;

pub use chernoff::{chernoff_iterate, convergence_table, ChernoffRun, ConvergenceRow, IterationPlan};
pub use error::{Error, Result};
pub use extension::{global_extend, ExtendedFunction, ExtensionOperator};
pub use feynman::{consistency_residual, feynman_apply, feynman_apply_form2, kernel_weight, Quadrature, StepConfig};
pub use geometry::{CutoffFamily, DomainModel};
pub use grid::{Grid, SampledFunction};
pub use operator::{apply_l, EllipticOperator, TestFunction};
pub use oracles::{analytic_heat, crank_nicolson, feynman_kac_estimate, McConfig, McEstimate, SineSeries};
pub use scalar::Scalar;

pub type EllipticOperatorF64 = EllipticOperator<f64>;
pub type TestFunctionF64 = TestFunction<f64>;
pub type DomainModelF64 = DomainModel<f64>;
pub type CutoffFamilyF64 = CutoffFamily<f64>;
pub type ExtensionOperatorF64 = ExtensionOperator<f64>;
pub type SampledFunctionF64 = SampledFunction<f64>;
pub type GridF64 = Grid<f64>;
pub type StepConfigF64 = StepConfig<f64>;
pub type IterationPlanF64 = IterationPlan<f64>;
pub type SineSeriesF64 = SineSeries<f64>;
