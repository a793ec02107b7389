use thiserror::Error;

/// Every failure the geometry pipeline can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("frame degeneracy: {0}")]
    FrameDegeneracy(String),
    #[error("no time-like normal: {0}")]
    NoTimelikeNormal(String),
    #[error("not a pseudo-orthogonal map: defect {0:e}")]
    NotPseudoOrthogonal(f64),
    #[error("jet singularity: {0}")]
    JetSingularity(String),
    #[error("point outside chart domain: {0}")]
    OutsideDomain(String),
    #[error("not space-like at p: {0}")]
    NotSpacelike(String),
    #[error("not regular (umbilic) at p: |h|^2 - mH^2 = {0:e}")]
    Umbilic(f64),
    #[error("Ricci route underdetermined for m = 2")]
    RicciRouteUnderdetermined,
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("image at infinity of this chart: {0}")]
    AtInfinity(String),
    #[error("outside chart {chart}: {detail}")]
    OutsideProjectiveChart { chart: &'static str, detail: String },
    #[error("excluded set hit at corner {corner:?}: {detail}")]
    ExcludedSet { corner: Vec<f64>, detail: String },
    #[error("no admissible chart: {0}")]
    NoAdmissibleChart(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("no admissible inner hypersurface: {0}")]
    NoAdmissibleInner(String),
    #[error("non-constant multiplicity: {0}")]
    NonConstantMultiplicity(String),
    #[error("not symmetric: defect {0:e}")]
    NotSymmetric(f64),
    #[error("quadric constraint violated: residual {0:e}")]
    Quadric(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
