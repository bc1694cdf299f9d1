use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("mode `{0}` is not present")]
    UnknownMode(String),

    #[error("mode label `{0}` appears more than once")]
    DuplicateMode(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("unphysical covariance matrix: symplectic eigenvalue {eigenvalue:.10} < 1 ({context})")]
    Unphysical { eigenvalue: f64, context: String },

    #[error("conditioning would leave no unmeasured modes")]
    EmptyRemainder,

    #[error("{operation} failed to converge ({diagnostics})")]
    Numerical {
        operation: &'static str,
        diagnostics: String,
    },

    /// `eta = 1` leaves no vacuum port through which electronic noise can enter.
    #[error("detector purification variance undefined for eta = 1 with electronic noise {v_el}")]
    UndefinedDetectorNoise { v_el: f64 },

    #[error("entangling cloner cannot realise T = 1 with excess noise {xi}")]
    UnrepresentableChannel { xi: f64 },

    #[error("epsilon split infeasible: eps_sm = {eps_sm:e}")]
    InfeasibleSplit { eps_sm: f64 },

    #[error("parameter estimation failed: {0}")]
    Estimation(String),

    #[error("objective infeasible everywhere on [{lo}, {hi}]")]
    Infeasible { lo: f64, hi: f64 },

    #[error("single class on [0,1]: {0}")]
    NoSignChange(String),

    #[error("at mu = {mu}: {source}")]
    AtMu { mu: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
