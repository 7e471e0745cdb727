use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

/// Failure of a single objective evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("objective returned a non-finite value {0}")]
    NonFinite(f64),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("evaluation timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("objective process exited: {0}")]
    ChildExit(String),
    #[error("{0}")]
    Other(String),
}

type EvalFn = dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync;

/// A deterministic black-box function `R^s -> R` with an evaluation ledger.
///
/// The ledger counts every call, including failed ones. Evaluation may be
/// invoked concurrently from several threads.
pub struct Objective {
    name: String,
    dim: usize,
    known_minimum: Option<f64>,
    func: Arc<EvalFn>,
    evaluations: AtomicU64,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("known_minimum", &self.known_minimum)
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

impl Objective {
    /// Wraps an infallible function.
    pub fn new<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::fallible(name, dim, move |x| Ok(f(x)))
    }

    pub fn fallible<F>(name: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync + 'static,
    {
        Objective {
            name: name.into(),
            dim,
            known_minimum: None,
            func: Arc::new(f),
            evaluations: AtomicU64::new(0),
        }
    }

    /// Attaches the true global minimum, used by target-gap stop rules.
    pub fn with_known_minimum(mut self, m: f64) -> Self {
        self.known_minimum = Some(m);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn known_minimum(&self) -> Option<f64> {
        self.known_minimum
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.evaluations.fetch_add(1, Ordering::SeqCst);
        let y = (self.func)(x)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(EvalError::NonFinite(y))
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::SeqCst)
    }
}
