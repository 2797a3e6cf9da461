//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by truncated jet arithmetic.
#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("division by a jet whose constant term vanishes")]
    DivisionByZeroJet,
    #[error("square root of a jet whose constant term lies on the closed negative real axis")]
    SqrtBranch,
    #[error("multi-index ({x_index}, {xi_index}) exceeds carried jet orders ({have_x}, {have_xi})")]
    IndexOutOfOrder {
        x_index: usize,
        xi_index: usize,
        have_x: usize,
        have_xi: usize,
    },
    #[error("insufficient jet order: need x order {need_x} and xi order {need_xi}, have ({have_x}, {have_xi})")]
    InsufficientJetOrder {
        need_x: usize,
        need_xi: usize,
        have_x: usize,
        have_xi: usize,
    },
    #[error("operands live on different base covectors")]
    BasePointMismatch,
    #[error("operands have different dimensions")]
    DimensionMismatch,
    #[error("value not representable in exact mode: {0}")]
    NotExactlyRepresentable(String),
}

/// Errors raised by geometric data.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("metric constant term is not symmetric positive definite")]
    SingularMetric,
    #[error("zero tangential covector")]
    ZeroCovector,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Errors raised by material data.
#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("inadmissible material: {violated} fails (value {value})")]
    Inadmissible { violated: &'static str, value: f64 },
    #[error("material coefficient has a non-real constant term")]
    NonRealCoefficient,
}

/// Errors raised by symbol construction and the factorization recursion.
#[derive(Debug, Error)]
pub enum SymbolError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("residual {residual:.3e} of {what} exceeds {tolerance:.1e}; transcription bug upstream")]
    ResidualTooLarge {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },
}

/// Errors raised by the PDE-level oracles.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("only {found} decaying modes found, need {need}")]
    ModeDeficiency { need: usize, found: usize },
    #[error("near-defective decaying modes: trace matrix condition {cond:.3e}")]
    NearDefectiveModes { cond: f64 },
    #[error("slab solver produced a singular system at node {node}")]
    SolverSingular { node: usize },
    #[error("slab grid refinement ratio {ratio:.3} outside [3, 5]; not in the second-order regime")]
    NotConverged { ratio: f64 },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Errors raised by the inverse map.
#[derive(Debug, Error)]
pub enum ReconstructionError {
    #[error("symbol entries violate the algebraic relations of the forward map: {0}")]
    InconsistentSymbol(String),
    #[error("layer {layer}: sampling covectors failed to separate unknowns {unknowns:?}")]
    RankDeficientLayer { layer: usize, unknowns: Vec<String> },
    #[error("layer {layer}: residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ToleranceExceeded {
        layer: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("asymptotic fit is ill-conditioned: condition {cond:.3e}")]
    IllConditionedFit { cond: f64 },
    #[error("thermal coupling vanishes (omega*beta*theta0 = 0): normal derivatives of alpha are not carried by the symbol")]
    ThermalCouplingVanishes,
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Material(#[from] MaterialError),
}
