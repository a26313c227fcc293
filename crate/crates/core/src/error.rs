use thiserror::Error;

use crate::constants::ConstantResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the quantity is defined.
    #[error("{0}")]
    ParamDomain(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    BracketInvalid { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("{what} did not converge (best estimate {best}, error bound {error_bound})")]
    NonConvergence {
        what: &'static str,
        best: f64,
        error_bound: f64,
    },

    /// The sharp-constant optimizer did not meet its tolerances; carries the
    /// best result found so far.
    #[error("optimizer did not converge; best C^p so far = {}", .0.c_pow_p)]
    OptimizerNonConvergence(Box<ConstantResult>),

    #[error("(alpha, beta) = ({alpha}, {beta}) violates alpha < gamma = {gamma} < beta")]
    Infeasible { alpha: f64, beta: f64, gamma: f64 },

    #[error("exponent {exponent} unsupported: {reason}")]
    ExponentDomain { exponent: f64, reason: &'static str },

    #[error("L^p norm diverges: {0}")]
    Divergent(String),

    #[error("invalid function representation: {0}")]
    InvalidFunction(String),

    #[error("tree generation failed: {0}")]
    Generation(String),

    #[error("structural check failed: {0}")]
    Structural(String),
}
