use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside the domain the formulas are defined on.
    #[error("{name} = {value} is out of domain: {bound}")]
    Domain {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("invalid grid: {0}")]
    Grid(String),

    /// Adaptive quadrature gave up before meeting the requested tolerance.
    #[error("quadrature tolerance {requested:e} not met (achieved error estimate {achieved:e})")]
    Tolerance { requested: f64, achieved: f64 },

    #[error(
        "consistency solver did not converge: best residual {best_residual:e} from start (phi = {start_phi}, beta = {start_beta})"
    )]
    NoConvergence {
        best_residual: f64,
        start_phi: f64,
        start_beta: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, bound: &'static str) -> Error {
    Error::Domain { name, value, bound }
}
