use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no sign change of f(x)-x on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("f(x)-x changes sign {count} times on [{lo}, {hi}]")]
    Ambiguous { lo: f64, hi: f64, count: usize },
    #[error("map is not smooth at x = {0}")]
    NotSmooth(f64),
    #[error("derivative vanishes near x = {0}")]
    Singular(f64),
    #[error("map structure violated: {0}")]
    Structure(String),
    #[error("equilibrium is already locally stable: {0}")]
    LocallyStable(String),
    #[error("condition infeasible: {0}")]
    Infeasible(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unknown map `{0}`")]
    UnknownMap(String),
}

impl Error {
    /// True for errors that describe an infeasible parameter choice rather than a defect.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_)
                | Error::OutOfRange(_)
                | Error::LocallyStable(_)
                | Error::NotApplicable(_)
        )
    }
}
