// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("t = {t} lies outside the profile domain [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("exceptional point reached: |kappa| = {kappa} but decoupling needs |kappa| < {bound}")]
    ExceptionalPoint { kappa: f64, bound: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("singular point at t = {t}: |{what}| = {value:e} is below {threshold:e}")]
    SingularPoint { t: f64, what: &'static str, value: f64, threshold: f64 },

    #[error("polynomial degree {degree} exceeds the supported maximum {max}")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("Fock cutoff {cutoff} outside the supported range [{min}, {max}]")]
    CutoffOutOfRange { cutoff: usize, min: usize, max: usize },

    #[error("state has support outside the truncation-safe subspace (block {block})")]
    Truncation { block: usize },

    #[error("block {block} needs log-condition {log_condition:.1} beyond the precision budget {budget}")]
    PrecisionBudget { block: usize, log_condition: f64, budget: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

impl Error {
    pub(crate) fn constraint(msg: impl Into<String>) -> Self {
        Error::ConstraintViolation(msg.into())
    }
}
