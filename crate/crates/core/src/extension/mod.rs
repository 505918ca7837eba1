//! Contractive smooth extension of functions in the operator domain
//! (`u = Lu = 0` on the boundary) to a neighbourhood of the closed domain.

mod adapted;
mod frame;
mod global;
mod squeeze;

pub use adapted::{
    boundary_identity_residual, build_adapted_chart, check_chart_membership, local_extend, AdaptedChart,
    BoundaryData, LocalExtension,
};
pub use frame::{oblique_direction, transformed_coefficients, Frame, NormalCoefficients, FRAME_TOL};
pub use global::{global_extend, ExtendedFunction, ExtensionOperator};
pub use squeeze::{collar_weight, extend_halfline, HalfLineExtension, SqueezeMap1D};
