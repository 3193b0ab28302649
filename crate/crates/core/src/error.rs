use thiserror::Error;

/// Everything that can go wrong between a scenario file and a transmission number.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum BomcaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory reached a potential pole: |cosh(beta x)| = {magnitude:.3e} at x = {x}")]
    PoleProximity { x: num_complex::Complex64, magnitude: f64 },

    #[error("integrator exceeded {max_steps} steps at t = {t}")]
    StepLimitExceeded { max_steps: usize, t: f64 },

    #[error("velocity derivative of order {order} blew up (|v| = {magnitude:.3e}) at t = {t}")]
    Blowup { order: usize, magnitude: f64, t: f64 },

    #[error("integrator step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("no seed found for target {target} after {iterations} Newton iterations (residual {residual:.3e})")]
    SeedNotFound {
        target: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("every probe trajectory around {target} died")]
    DeadRegion { target: f64 },

    #[error("manifold stalled at sample {index}: arrivals stopped advancing (|dx| = {step:.3e})")]
    ManifoldStall { index: usize, step: f64 },

    #[error("trajectory landed {distance:.3e} away from its real-axis target")]
    LandingMissed { distance: f64 },

    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),

    #[error("arrival points are not monotonic along the real axis near x = {at}")]
    NonMonotonicArrivals { at: f64 },

    #[error("wavefunction does not vanish at the grid edge (relative density {density:.3e})")]
    SupportNotContained { density: f64 },

    #[error("wavefunction node on grid at x = {at} (|psi| = {magnitude:.3e})")]
    NodeOnGrid { at: f64, magnitude: f64 },

    #[error("grid does not resolve momentum {required:.3e}; Nyquist limit is {limit:.3e}")]
    NyquistViolation { required: f64, limit: f64 },

    #[error("probability {mass:.3e} reached the grid boundary")]
    GridTooSmall { mass: f64 },

    #[error("transmission not asymptotic at t = {t}: flux through origin {flux:.3e}")]
    NotAsymptotic { t: f64, flux: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl BomcaError {
    /// Short machine-readable tag, used in CSV status columns.
    pub fn kind(&self) -> &'static str {
        match self {
            BomcaError::InvalidParameter(_) => "invalid_parameter",
            BomcaError::PoleProximity { .. } => "pole_proximity",
            BomcaError::StepLimitExceeded { .. } => "step_limit_exceeded",
            BomcaError::Blowup { .. } => "blowup",
            BomcaError::StepSizeUnderflow { .. } => "step_size_underflow",
            BomcaError::SeedNotFound { .. } => "seed_not_found",
            BomcaError::DeadRegion { .. } => "dead_region",
            BomcaError::ManifoldStall { .. } => "manifold_stall",
            BomcaError::LandingMissed { .. } => "landing_missed",
            BomcaError::InsufficientCoverage(_) => "insufficient_coverage",
            BomcaError::NonMonotonicArrivals { .. } => "non_monotonic_arrivals",
            BomcaError::SupportNotContained { .. } => "support_not_contained",
            BomcaError::NodeOnGrid { .. } => "node_on_grid",
            BomcaError::NyquistViolation { .. } => "nyquist_violation",
            BomcaError::GridTooSmall { .. } => "grid_too_small",
            BomcaError::NotAsymptotic { .. } => "not_asymptotic",
            BomcaError::Config(_) => "config",
            BomcaError::Io(_) => "io",
        }
    }

    /// True for failures that kill a single trajectory but leave its neighbours usable.
    pub fn is_trajectory_death(&self) -> bool {
        matches!(
            self,
            BomcaError::PoleProximity { .. }
                | BomcaError::StepLimitExceeded { .. }
                | BomcaError::Blowup { .. }
                | BomcaError::StepSizeUnderflow { .. }
                | BomcaError::LandingMissed { .. }
        )
    }
}

impl From<std::io::Error> for BomcaError {
    fn from(e: std::io::Error) -> Self {
        BomcaError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BomcaError>;
