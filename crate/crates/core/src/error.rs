use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A chain, controller or scenario description is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A transfer function or resolvent was evaluated at (or numerically on) a pole.
    #[error("pole at s = {s}")]
    Pole { s: Complex64 },

    /// Headway of `follower` behind `leader` dropped to zero or below.
    #[error("collision at t = {time:.3} s: vehicle {follower} ran into vehicle {leader} (headway {headway:.4} m)")]
    Collision {
        time: f64,
        follower: i32,
        leader: i32,
        headway: f64,
    },

    /// An acceleration limit engaged in a run that must stay in the linear regime.
    #[error("acceleration saturated at t = {time:.3} s on vehicle {index}")]
    Saturated { time: f64, index: i32 },

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("output error: {0}")]
    Io(String),
}

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

pub type Result<T> = std::result::Result<T, Error>;
