use alloc::string::String;

/// Errors raised by model construction, queries and extraction drivers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the model domain")]
    Domain { x: f64, y: f64 },
    #[error("parameter {0} lies outside [0, 1]")]
    Parameter(f64),
    #[error("derivative order {requested} exceeds what the model supports ({supported})")]
    Order { requested: usize, supported: usize },
    #[error("invalid knot vector: {0}")]
    Knots(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("least-squares system is singular (condition estimate {condition:e})")]
    SingularFit { condition: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("models do not share knot vectors and domain")]
    MismatchedModels,
    #[error("derived field vanishes identically; extraction is degenerate")]
    DegenerateField,
}

pub type Result<T> = core::result::Result<T, Error>;

/// Non-fatal conditions reported alongside results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Every Newton seed met a singular Hessian; the field looks constant or
    /// degenerate and no critical points were reported.
    DegenerateField,
    /// A critical point with a (near-)singular Hessian was kept.
    DegenerateCritical { x: f64, y: f64 },
    /// Number of trajectories that stopped at the step cap.
    StepCap(usize),
    /// The least-squares fit needed a ridge term.
    IllConditionedFit { condition: f64 },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::DegenerateField => write!(f, "field is degenerate: no isolated critical points"),
            Warning::DegenerateCritical { x, y } => write!(f, "degenerate critical point at ({x}, {y})"),
            Warning::StepCap(n) => write!(f, "{n} trajectories hit the step cap"),
            Warning::IllConditionedFit { condition } => {
                write!(f, "fit regularized, condition estimate {condition:e}")
            }
        }
    }
}
