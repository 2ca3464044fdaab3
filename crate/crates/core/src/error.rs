use thiserror::Error;

/// Errors raised by loop construction, phase computation and the dynamics oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HolonomyError {
    #[error("loop is not closed: f(0) and f(period) differ by {deviation:e} (relative)")]
    NotClosed { deviation: f64 },

    #[error("too few samples: {got} (need at least {min})")]
    TooFewSamples { got: usize, min: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("spectral gap below tolerance at sample {sample} between levels {level} and {}", level + 1)]
    GapTooSmall { sample: usize, level: usize },

    #[error("Hamiltonian is not Hermitian at sample {sample}: max deviation {deviation:e}")]
    HermiticityViolation { sample: usize, deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("loop passes within the pole margin of the closed-form integrand at sample {sample}")]
    PoleProximity { sample: usize },

    #[error("state is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("eigenvector matrix is not unitary: max deviation {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("magnetic field vanishes")]
    ZeroField,

    #[error("elliptic condition violated{}: margin {margin:e}", sample_suffix(*sample))]
    EllipticViolation { sample: Option<usize>, margin: f64 },

    #[error("normal mode collapse (Omega_2^2 = {omega2_sq:e}){}", sample_suffix(*sample))]
    ModeCollapse { sample: Option<usize>, omega2_sq: f64 },

    #[error("effective frequency is imaginary at sample {sample} (Omega^2 = {omega_sq:e})")]
    OmegaImaginary { sample: usize, omega_sq: f64 },

    #[error("weak-coupling condition violated: lambda*Q/B = {ratio} exceeds {limit}")]
    WeakCouplingViolated { ratio: f64, limit: f64 },

    #[error("evolution is not adiabatic: final level fidelity {fidelity}")]
    NonAdiabatic { fidelity: f64 },

    #[error("overlap with the initial state too small: {overlap}")]
    OverlapTooSmall { overlap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn sample_suffix(sample: Option<usize>) -> String {
    match sample {
        Some(s) => format!(" at sample {s}"),
        None => String::new(),
    }
}

impl HolonomyError {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NotClosed { .. } => "NotClosed",
            Self::TooFewSamples { .. } => "TooFewSamples",
            Self::LengthMismatch { .. } => "LengthMismatch",
            Self::GapTooSmall { .. } => "GapTooSmall",
            Self::HermiticityViolation { .. } => "HermiticityViolation",
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::PoleProximity { .. } => "PoleProximity",
            Self::NotNormalized { .. } => "NotNormalized",
            Self::NotUnitary { .. } => "NotUnitary",
            Self::ZeroField => "ZeroField",
            Self::EllipticViolation { .. } => "EllipticViolation",
            Self::ModeCollapse { .. } => "ModeCollapse",
            Self::OmegaImaginary { .. } => "OmegaImaginary",
            Self::WeakCouplingViolated { .. } => "WeakCouplingViolated",
            Self::NonAdiabatic { .. } => "NonAdiabatic",
            Self::OverlapTooSmall { .. } => "OverlapTooSmall",
            Self::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, HolonomyError>;
