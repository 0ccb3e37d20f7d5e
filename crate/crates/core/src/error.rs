use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty measure")]
    EmptyMeasure,

    #[error("invalid weight {weight} at position {position}")]
    InvalidWeight { position: f64, weight: f64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid density table: {0}")]
    InvalidDensity(String),

    #[error("not in convex order: {0}")]
    NotInConvexOrder(String),

    #[error("degenerate component on ({lo}, {hi})")]
    DegenerateComponent { lo: f64, hi: f64 },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid linear program: {0}")]
    InvalidLp(String),

    #[error("iteration limit reached after {iterations} pivots (phase {phase}, objective {objective})")]
    IterationLimit {
        iterations: usize,
        phase: u8,
        objective: f64,
    },

    #[error("linear program is infeasible (phase-one residual {residual})")]
    Infeasible { residual: f64 },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("uncertified dual: {0}")]
    UncertifiedDual(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("degenerate support at grid point {0:?}")]
    DegenerateSupport(Vec<f64>),

    #[error("outside hull: query {0:?}")]
    OutsideHull(Vec<f64>),

    #[error("kink encountered at {0:?}")]
    KinkEncountered(Vec<f64>),

    #[error("table costs carry no derivative information")]
    NotDifferentiable,

    #[error("not three-point: conditional at x = {x} has {atoms} atoms")]
    NotThreePoint { x: f64, atoms: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
