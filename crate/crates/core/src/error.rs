use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("hopping list is not Hermitian; missing conjugate partners:\n{}", .missing.join("\n"))]
    NonHermitian { missing: Vec<String> },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("gap closes: occupied/unoccupied separation {gap:.3e} eV at k-point {k_index}")]
    GapClosure { k_index: usize, gap: f64 },

    #[error("band {band} has k-dependent occupation; metallic occupations are not supported")]
    MetallicOccupation { band: usize },

    #[error("occupied band {occupied} and unoccupied band {unoccupied} are degenerate at k-point {k_index}")]
    Degeneracy {
        k_index: usize,
        occupied: usize,
        unoccupied: usize,
    },

    #[error("k-point grids differ: {a:?} vs {b:?}")]
    GridMismatch { a: [usize; 3], b: [usize; 3] },

    #[error("polarization branch jumps between +δ and −δ displacements (direction {direction})")]
    BranchJump { direction: usize },

    #[error("band {band} is degenerate with an unoccupied state (separation {separation:.3e} eV)")]
    SingularSystem { band: usize, separation: f64 },

    #[error("iterative solve did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        best_residual: f64,
    },

    #[error("no Sternheimer solution supplied for occupied band {band}")]
    MissingBand { band: usize },

    #[error("transition energy {energy:.3e} eV is too small for a transition dipole")]
    DegenerateTransition { energy: f64 },

    #[error("spectrum has no peak above the noise floor")]
    NoPeak,

    #[error("{quantity} must be positive, got {value}")]
    Domain { quantity: &'static str, value: f64 },

    #[error("grid geometries differ")]
    GeometryMismatch,

    #[error("grid integrates to {found} but {expected} was declared")]
    Normalization { expected: f64, found: f64 },

    #[error("cluster of {orbitals} orbitals exceeds the cap of {cap}")]
    Size { orbitals: usize, cap: usize },

    #[error("cluster occupation is gapless (separation {gap:.3e} eV)")]
    GaplessCluster { gap: f64 },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// The module that raised the error, for user-facing diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) | Error::NonHermitian { .. } => "core-model",
            Error::Parse { .. } | Error::Io { .. } => "io",
            Error::GapClosure { .. }
            | Error::MetallicOccupation { .. }
            | Error::Degeneracy { .. }
            | Error::GridMismatch { .. }
            | Error::BranchJump { .. } => "polarization",
            Error::SingularSystem { .. } | Error::NonConvergence { .. } | Error::MissingBand { .. } => {
                "sternheimer"
            }
            Error::DegenerateTransition { .. } | Error::NoPeak | Error::Domain { .. } => "optics",
            Error::GeometryMismatch | Error::Normalization { .. } => "densitygrid",
            Error::Size { .. } | Error::GaplessCluster { .. } => "oracle",
        }
    }

    /// Short variant name, e.g. `GapClosureError`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInputError",
            Error::NonHermitian { .. } => "NonHermitianError",
            Error::Parse { .. } => "ParseError",
            Error::GapClosure { .. } => "GapClosureError",
            Error::MetallicOccupation { .. } => "MetallicOccupationError",
            Error::Degeneracy { .. } => "DegeneracyError",
            Error::GridMismatch { .. } => "GridMismatchError",
            Error::BranchJump { .. } => "BranchJumpError",
            Error::SingularSystem { .. } => "SingularSystemError",
            Error::NonConvergence { .. } => "NonConvergenceError",
            Error::MissingBand { .. } => "MissingBandError",
            Error::DegenerateTransition { .. } => "DegenerateTransitionError",
            Error::NoPeak => "NoPeakError",
            Error::Domain { .. } => "DomainError",
            Error::GeometryMismatch => "GeometryMismatchError",
            Error::Normalization { .. } => "NormalizationError",
            Error::Size { .. } => "SizeError",
            Error::GaplessCluster { .. } => "GaplessClusterError",
            Error::Io { .. } => "IoError",
        }
    }

    /// Numerical failures, as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GapClosure { .. }
                | Error::Degeneracy { .. }
                | Error::BranchJump { .. }
                | Error::SingularSystem { .. }
                | Error::NonConvergence { .. }
                | Error::DegenerateTransition { .. }
                | Error::NoPeak
                | Error::GaplessCluster { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
