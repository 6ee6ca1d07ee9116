use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("{name} = {value} outside of {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,

    #[error("x-p cross covariance {0:.3e} exceeds tolerance")]
    CrossCovariance(f64),

    #[error("herald never fires (P_off = 1)")]
    DegenerateHerald,

    #[error("conditioned covariance is not positive definite")]
    NonPositiveConditioned,

    #[error(
        "photon-number-resolving closed form is lossless only; use the Fock oracle for lossy specs"
    )]
    LossyPnrd,

    #[error("no real solution: {0}")]
    Infeasible(String),

    #[error("root finder failed to bracket a solution: {0}")]
    NoBracket(String),

    #[error("optimizer hit the search boundary at {0}")]
    BoundaryHit(f64),

    #[error("evaluation grid too coarse: minimum lies on the boundary")]
    GridTooCoarse,

    #[error("Fock truncation insufficient: norm deficit {0:.3e}")]
    Truncation(f64),

    #[error("Wigner function does not vanish at the grid boundary (max |W| = {0:.3e})")]
    WignerTruncation(f64),

    #[error("density matrix invalid: {0}")]
    InvalidDensity(String),

    #[error("quadrature distribution negative ({0:.3e}); density matrix is broken")]
    NegativeDistribution(f64),

    #[error("fit landscape is flat; input looks vacuum-like")]
    FlatFit,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(name));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}
