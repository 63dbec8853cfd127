use thiserror::Error;

/// Crate-wide error type covering every stage of the separation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("the two generator operators are equal; P1(t) != P2(t) is required")]
    EqualOperators,

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("ODE solution magnitude exceeded {bound:.3e}; generator is far from the data")]
    Overflow { bound: f64 },

    #[error("input format: {0}")]
    InputFormat(String),

    #[error("linear system is degenerate: all singular values below the absolute floor")]
    DegenerateSystem,

    #[error("recovered leading operator A(t) is identically zero within tolerance")]
    ZeroLeadingOperator,

    #[error("every grid node fell below the K1 floor; root extraction impossible")]
    AllNodesMasked,

    #[error("insufficient valid nodes: need {needed}, have {got}")]
    InsufficientNodes { needed: usize, got: usize },

    #[error("fitted denominator has a root at {re}{im:+}i within 1e-3 of [0,1]")]
    PolesDetected { re: f64, im: f64 },

    #[error("basis signals nearly dependent: normal-matrix condition {cond:.3e} > 1e12")]
    NearDependentBasis { cond: f64 },

    #[error("parameter grid of {points} points exceeds the budget of {budget}")]
    BudgetExceeded { points: u128, budget: u128 },

    #[error("non-finite values encountered in {0}")]
    NonFinite(&'static str),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    /// Name of the failing stage, if this error was annotated with one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    /// CLI exit code: 2 input-format error, 3 pipeline stage error, 4 budget exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InputFormat(_) | Error::InvalidSpec(_) | Error::Io(_) => 2,
            Error::BudgetExceeded { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
