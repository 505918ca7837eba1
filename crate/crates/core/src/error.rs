use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Points are reported as `f64` coordinates regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficient matrix not symmetric at {point:?} (defect {defect:e})")]
    AsymmetricMatrix { point: Vec<f64>, defect: f64 },

    #[error("ellipticity violated at {point:?}: smallest eigenvalue {eigenvalue} below declared bound {bound}")]
    EllipticityViolation {
        point: Vec<f64>,
        eigenvalue: f64,
        bound: f64,
    },

    #[error("coefficient {name} = {value} at {point:?} exceeds declared bound {bound}")]
    CoefficientUnbounded {
        point: Vec<f64>,
        name: String,
        value: f64,
        bound: f64,
    },

    #[error("sample set is empty")]
    EmptySamples,

    #[error("test function lacks the {0} needed here")]
    MissingDerivatives(&'static str),

    #[error("boundary condition {condition} violated at {point:?}: residual {residual:e}")]
    BoundaryConditionViolated {
        condition: &'static str,
        point: Vec<f64>,
        residual: f64,
    },

    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {x} lies outside the reflection collar (-{epsilon}, 0)")]
    OutsideCollar { x: f64, epsilon: f64 },

    #[error("frame is not orthonormal (defect {defect:e})")]
    FrameNotOrthonormal { defect: f64 },

    #[error("normal vector at {point:?} points out of the domain")]
    NormalPointsOutward { point: Vec<f64> },

    #[error("chart jacobian singular at {point:?} (|det| = {det:e})")]
    SingularJacobian { point: Vec<f64>, det: f64 },

    #[error("collar too wide: {0}")]
    CollarTooWide(String),

    #[error("chart invariant violated: {0}")]
    ChartInvariant(String),

    #[error("point {point:?} lies outside the chart")]
    OutsideChart { point: Vec<f64> },

    #[error("iterate {step} has sup {sup} above growth bound {bound}")]
    IterateBlowup { step: usize, sup: f64, bound: f64 },

    #[error("tridiagonal system singular at row {row}")]
    SingularTridiagonal { row: usize },

    #[error("sample path produced a non-finite state at step {step}")]
    PathExplosion { step: usize },

    #[error("{0} is not supported for this domain")]
    UnsupportedDomain(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
