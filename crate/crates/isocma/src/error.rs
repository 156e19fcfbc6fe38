//! Error types shared across the solver stack.

use thiserror::Error;

/// Errors produced by geometry construction, solver assembly, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation; names the offending field.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// Mesh violates a structural invariant (connectivity, thin-wire validity, index bounds).
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// The driven linear system is singular or too ill-conditioned to trust.
    #[error("ill-conditioned system (condition estimate {cond_estimate:.3e})")]
    IllConditioned { cond_estimate: f64 },

    /// The real part of the impedance operator is indefinite beyond tolerance.
    #[error("indefinite radiation operator: min eigenvalue {min_eig:.3e} (norm {norm:.3e})")]
    IndefiniteOperator { min_eig: f64, norm: f64 },

    /// Far-field evaluation was asked to radiate an identically zero current.
    #[error("nothing radiates: all segment currents are zero")]
    ZeroCurrent,

    /// A requested mode track does not exist.
    #[error("mode track {0} not found")]
    TrackNotFound(u32),

    /// Link-simulation direction does not land on a pattern grid sample.
    #[error("rx direction (theta={theta_deg}, phi={phi_deg}) off grid and interpolation disabled")]
    DirectionOffGrid { theta_deg: f64, phi_deg: f64 },

    /// Mismatched sequence lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// I/O failure while reading or writing artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_parameter(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
