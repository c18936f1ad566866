use num_complex::Complex64;
use thiserror::Error;

/// Errors raised across the crate.
///
/// Evaluation failures carry the offending point so callers can report it.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("Gram mismatch: residual {residual:.3e} exceeds {threshold:.3e}{}", if *.marginal { " (marginal; review tolerances)" } else { "" })]
    GramMismatch {
        residual: f64,
        threshold: f64,
        marginal: bool,
    },

    #[error("Hermitian completion infeasible: cross-Gram asymmetry {residual:.3e}")]
    HermitianInfeasible { residual: f64 },

    #[error("real completion infeasible: real Gram mismatch {residual:.3e}")]
    RealInfeasible { residual: f64 },

    #[error("singular matrix (condition estimate {cond:.3e})")]
    SingularShift { cond: f64 },

    #[error("Cayley transform singular in coordinate {index}")]
    CayleySingular { index: usize },

    #[error("evaluation singular at {}", fmt_point(.point))]
    EvaluationSingular { point: Vec<Complex64> },

    #[error("resolvent singular at {}", fmt_point(.point))]
    ResolventSingular { point: Vec<Complex64> },

    #[error("inner pencil block singular at {}", fmt_point(.point))]
    InnerBlockSingular { point: Vec<Complex64> },

    #[error("T_{index} is not a strict contraction (norm {norm:.6})")]
    NotStrictContraction { index: usize, norm: f64 },

    #[error("R_{index} is not strictly accretive (min eigenvalue of R + R* is {min_eig:.3e})")]
    NotStrictlyAccretive { index: usize, min_eig: f64 },

    #[error("tuple does not commute (commutator {residual:.3e})")]
    CommutationViolated { residual: f64 },

    #[error("kernel of F - beta is not constant (residual {residual:.3e})")]
    KernelNotConstant { residual: f64 },

    #[error("colligation has nonzero D block (norm {norm:.3e})")]
    NonzeroD { norm: f64 },

    #[error("W is not unitary (residual {residual:.3e})")]
    NotUnitaryW { residual: f64 },

    #[error("W0 keeps an eigenvalue near 1 (angular distance {angle:.3e})")]
    EigenvalueOneResidue { angle: f64 },

    #[error("insufficient regular samples ({regular} of {total})")]
    InsufficientSamples { regular: usize, total: usize },

    #[error("function is not real (residual {residual:.3e})")]
    NotReal { residual: f64 },

    #[error("polynomial degree {degree} exceeds bound {bound}")]
    DegreeExceeded { degree: usize, bound: usize },

    #[error("invalid pencil: {0}")]
    InvalidPencil(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("postcondition failed in {stage}: residual {residual:.3e} > {threshold:.3e}")]
    Postcondition {
        stage: String,
        residual: f64,
        threshold: f64,
    },

    #[error("malformed artifact: {0}")]
    Artifact(String),
}

impl Error {
    /// True for errors raised while evaluating a function at a point.
    pub fn is_singular_evaluation(&self) -> bool {
        matches!(
            self,
            Error::EvaluationSingular { .. }
                | Error::ResolventSingular { .. }
                | Error::InnerBlockSingular { .. }
                | Error::CayleySingular { .. }
                | Error::SingularShift { .. }
        )
    }

    /// Short machine-readable name used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPsd { .. } => "NotPSD",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::GramMismatch { .. } => "GramMismatch",
            Error::HermitianInfeasible { .. } => "HermitianInfeasible",
            Error::RealInfeasible { .. } => "RealInfeasible",
            Error::SingularShift { .. } => "SingularShift",
            Error::CayleySingular { .. } => "CayleySingular",
            Error::EvaluationSingular { .. } => "EvaluationSingular",
            Error::ResolventSingular { .. } => "ResolventSingular",
            Error::InnerBlockSingular { .. } => "InnerBlockSingular",
            Error::NotStrictContraction { .. } => "NotStrictContraction",
            Error::NotStrictlyAccretive { .. } => "NotStrictlyAccretive",
            Error::CommutationViolated { .. } => "CommutationViolated",
            Error::KernelNotConstant { .. } => "KernelNotConstant",
            Error::NonzeroD { .. } => "NonzeroD",
            Error::NotUnitaryW { .. } => "NotUnitaryW",
            Error::EigenvalueOneResidue { .. } => "EigenvalueOneResidue",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::NotReal { .. } => "NotReal",
            Error::DegreeExceeded { .. } => "DegreeExceeded",
            Error::InvalidPencil(_) => "InvalidPencil",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Postcondition { .. } => "Postcondition",
            Error::Artifact(_) => "Artifact",
        }
    }
}

fn fmt_point(p: &[Complex64]) -> String {
    let parts: Vec<String> = p.iter().map(|c| format!("{:.6}{:+.6}i", c.re, c.im)).collect();
    format!("({})", parts.join(", "))
}

pub type Result<T> = std::result::Result<T, Error>;
