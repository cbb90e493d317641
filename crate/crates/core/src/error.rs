use thiserror::Error;

/// Failure modes shared across the crate.
///
/// Numerical-integrity variants (`BicommutantMismatch`, `RepresentabilityBreach`,
/// `ClosureOverflow`) signal that floating-point rank decisions contradicted an
/// algebraic identity that holds exactly in finite dimension; callers should treat
/// them as evidence of a badly conditioned input rather than a mathematical verdict.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("incompatible dimensions: {context}")]
    ShapeMismatch { context: String },

    #[error("matrix is not Hermitian: asymmetry {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}, allowed slack {slack:.3e}")]
    NotPsd { min_eigenvalue: f64, slack: f64 },

    #[error("invalid tolerance: {reason}")]
    BadTolerance { reason: String },

    #[error("generator {index} is not square ({rows}x{cols})")]
    NonSquareGenerator { index: usize, rows: usize, cols: usize },

    #[error("algebra closure exceeded the ambient bound of {cap} dimensions (numerical blow-up)")]
    ClosureOverflow { cap: usize },

    #[error("double commutant dimension {got} does not match algebra dimension {expected}")]
    BicommutantMismatch { expected: usize, got: usize },

    #[error("matrix is not in the algebra span: residual {residual:.3e}")]
    NotInAlgebra { residual: f64 },

    #[error("functional is not positive: Gram min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("values vector has length {got}, algebra dimension is {expected}")]
    ValuesLength { expected: usize, got: usize },

    #[error("transfer is ill-defined: {reason}")]
    IllDefined { reason: String },

    #[error("no normal decomposition against the acting algebra: residual {residual:.3e}")]
    NotRepresentable { residual: f64 },

    #[error("pair is not absolutely continuous: isotropic ideal containment defect {defect:.3e}")]
    NotAbsolutelyContinuous { defect: f64 },

    #[error("linear solve is singular or inconsistent: residual {residual:.3e}")]
    SolveSingular { residual: f64 },

    #[error("shorted Gram does not rebuild from its value vector: residual {residual:.3e}")]
    RepresentabilityBreach { residual: f64 },

    #[error("vector is not cyclic: orbit rank {rank} of {needed}")]
    NotCyclic { rank: usize, needed: usize },

    #[error("vector is not separating: {kernel_dim}-dimensional kernel")]
    NotSeparating { kernel_dim: usize },

    #[error("complement ideal admits no unit: residual {residual:.3e}")]
    NoComplementUnit { residual: f64 },

    #[error("GNS data is degenerate (zero functional)")]
    DegenerateGns,
}

pub type Result<T> = std::result::Result<T, Error>;
