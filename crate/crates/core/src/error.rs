use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrmError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid molecule `{molecule}`: {message}")]
    Validation { molecule: String, message: String },

    #[error("unknown molecule preset or file `{0}`")]
    UnknownMolecule(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("M_F = {m_f} is unreachable with N_max = {n_max} (|M_F| must not exceed {bound})")]
    UnreachableProjection {
        m_f: String,
        n_max: u32,
        bound: String,
    },

    #[error("state {0} is not part of the symmetry block")]
    StateNotInBlock(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("assembled {part} is not Hermitian: max |H - H^T| = {deviation:e} (scale {scale:e})")]
    NonHermitian {
        part: &'static str,
        deviation: f64,
        scale: f64,
    },

    #[error("eigensolver residual {residual:e} exceeds tolerance {tolerance:e}")]
    Convergence { residual: f64, tolerance: f64 },

    #[error(
        "kick leakage {leakage:e} beyond N_max = {n_max} exceeds {threshold:e}; raise --nmax"
    )]
    Leakage {
        leakage: f64,
        threshold: f64,
        n_max: u32,
    },

    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CrmError {
    /// Whether the failure is numerical (as opposed to bad user input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CrmError::NonHermitian { .. }
                | CrmError::Convergence { .. }
                | CrmError::Leakage { .. }
                | CrmError::NotNormalized(_)
        )
    }
}

pub type Result<T, E = CrmError> = std::result::Result<T, E>;
