use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or schedule parameter lies outside its allowed domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested system is larger than the dense/enumeration cap.
    #[error("size error: {what} needs n ≤ {cap}, got {n}")]
    Size { what: &'static str, n: usize, cap: usize },

    /// Matrix passed to the eigensolver is not Hermitian.
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NonHermitian(f64),

    /// The quantity is undefined at an exact level crossing.
    #[error("degenerate ground state at s = {0}")]
    Degenerate(f64),

    /// A magnetization curve carries no slope information.
    #[error("magnetization of qubit {0} is flat; maximum slope undefined")]
    Flat(usize),

    /// The adaptive integrator could not meet its tolerance.
    #[error("integrator failure at t = {t:.6e} (step {step:.3e}, {steps} accepted steps): {reason}")]
    Integrator { t: f64, step: f64, steps: usize, reason: String },

    /// Density matrix lost positivity beyond the clipping threshold.
    #[error("positivity breach: eigenvalue {0:.3e} below threshold")]
    Positivity(f64),

    /// Random graph generation could not produce enough distinct graphs.
    #[error("graph family exhausted: found {found} of {wanted} non-isomorphic graphs with {edges} edges")]
    Exhausted { edges: usize, found: usize, wanted: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
