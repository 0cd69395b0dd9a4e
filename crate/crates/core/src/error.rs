use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by configuration validation and by the numerical routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dissipative coupling Gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("emitters overlap at lattice site {0}")]
    OverlappingEmitters(i64),
    #[error("unsupported dimension {dim} for band kind {band}")]
    BadDimension { dim: u32, band: &'static str },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency {0} lies on the branch cut")]
    OnBranchCut(Complex64),
    #[error("frequency {0} coincides with a branch point")]
    BranchPoint(Complex64),
    #[error("degenerate branch circle (Gamma = 2J) cannot be evaluated in closed form")]
    DegenerateCircle,
    #[error("dissipation rate {0} lies outside the band")]
    OutOfBand(f64),
    #[error("abscissa {0} lies outside the collapsed cut")]
    OutOfCut(f64),
    #[error("hypergeometric exponent d/mu = {0} outside (0, 3]")]
    InvalidExponent(f64),

    #[error("root search did not converge from seed {seed}")]
    NoConvergence { seed: Complex64 },
    #[error("pole {0} lies on the branch cut")]
    PoleOnCut(Complex64),
    #[error("asymptotic case is not defined for this configuration: {0}")]
    UnknownCase(String),
    #[error("pair frequency {0} hits a two-particle singularity")]
    SingularPair(Complex64),
    #[error("pair bubble vanishes at {0}")]
    ZeroBubble(Complex64),
    #[error("scattering matrix is resonant at 2*omega_d = {0}")]
    ResonantPole(f64),
    #[error("outside the validity regime: {0}")]
    OutsideValidity(String),

    #[error("model dimension {0} exceeds the guard")]
    TooLarge(usize),
    #[error("propagation step rejected at t = {time} (error estimate {estimate:e})")]
    StepRejected { time: f64, estimate: f64 },
    #[error("Lindblad dimension guard violated: {0}")]
    DimensionGuard(String),
    #[error("trace drifted to {0}")]
    TraceDrift(f64),
    #[error("ODE integration failed at t = {0}")]
    IntegrationFailed(f64),

    #[error("non-positive data in log-log fit")]
    NonPositiveData,
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("band edge fit too poor (r^2 = {0})")]
    UnclassifiedEdge(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
