use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point at distance {norm} from the apex exceeds domain radius {radius}")]
    DomainExceeded { norm: f64, radius: f64 },
    #[error("requested Taylor order {requested} exceeds the maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid surface: {0}")]
    InvalidSurface(String),
    #[error("invalid phase: {0}")]
    InvalidPhase(String),
    #[error("direction must be a unit vector (norm {0})")]
    NotUnit(f64),
    #[error("point source lies on the boundary")]
    SourceOnBoundary,
    #[error("point {x:?} is in the shadow (margin {margin:e})")]
    ShadowPoint { x: Vec<f64>, margin: f64 },
    #[error("point {x:?} is grazing or too close to grazing (margin {margin:e})")]
    GrazingSingular { x: Vec<f64>, margin: f64 },
    #[error("reflected covector is tangent to the plane x1 = const (xi1_r = {0:e})")]
    ReflectedTangential(f64),
    #[error("finite-difference step must be positive and finite, got {0}")]
    StepInvalid(f64),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("point lies outside the range of the reflected flow map")]
    OutsideRange,
    #[error("no sign change of the grazing function near the seed offset {0:e}")]
    SeedNotFound(f64),
    #[error("continuation step collapsed below the minimum at {0:?}")]
    StepCollapse(Vec<f64>),
    #[error("need at least {needed} vertices in the fit window, found {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("apex is not normalized: xi1 at the apex is {0:e}")]
    NotNormalized(f64),
    #[error("polynomial is not homogeneous of even degree")]
    NotHomogeneous,
    #[error("profile argument {0:e} is outside the domain of h")]
    HDomainExceeded(f64),
    #[error("slice plane does not meet the traced window")]
    SliceMiss,
    #[error("sampling budget must be positive")]
    InvalidBudget,
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    NotAGrazingPoint(String),
}
