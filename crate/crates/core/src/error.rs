use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symplectic: max |S^T J S - J| = {residual:.3e} exceeds {tol:.1e}")]
    NotSymplectic { residual: f64, tol: f64 },

    #[error("symplectic matrix is not free: |det B| = {det_b:.3e} <= {tol:.1e}")]
    NotFree { det_b: f64, tol: f64 },

    #[error("Maslov index {m} is inadmissible for det B = {det_b:.6e} (m must be even iff det B > 0)")]
    MaslovParity { m: u8, det_b: f64 },

    #[error(
        "no admissible factorization angle: best angle {best_angle:.6} reached min(|det B|) = {best_score:.3e} <= {tol:.1e}"
    )]
    FactorizationFailure { best_angle: f64, best_score: f64, tol: f64 },

    #[error(
        "aliasing risk: kernel phase needs bandwidth {required:.4} but the grid resolves only {limit:.4} (pi*hbar/dx)"
    )]
    AliasingRisk { required: f64, limit: f64 },

    #[error("divergent Gaussian: Re a = {re_a} must be positive")]
    DivergentGaussian { re_a: f64 },

    #[error("unsupported Hamiltonian: {0}")]
    UnsupportedHamiltonian(String),

    #[error("numerical stability: {0}")]
    Stability(String),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("invalid exponent {0}: must lie in [1, inf]")]
    InvalidExponent(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },
}

impl Error {
    /// True for breakdowns of the numerics (as opposed to rejected input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AliasingRisk { .. } | Error::FactorizationFailure { .. } => true,
            Error::AtTime { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        Error::AtTime { t, source: Box::new(self) }
    }
}
