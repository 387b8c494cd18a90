//! Computational-error sources applied to prox evaluations.
//!
//! Three mechanisms, one per variant: simulated truncated-Gaussian
//! injection on top of an exact prox point, loop perforation inside the
//! k-support candidate search, and early termination of the l1-affine inner
//! loop. The ε₀ cap of the probabilistic model is either configured or
//! estimated empirically as the running maximum of the measured ε.

use crate::error::{Error, Result};
use crate::numerics::dense::DenseVector;
use crate::numerics::rng::SeededRng;
use crate::prox::l1_affine::EXACT_INNER_TOL;
use crate::prox::{measure_eps, ProxResult, ProxTerm};

/// Which computational-error source a run applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorVariant {
    /// Exact proxes everywhere.
    None,
    /// Per-component zero-mean truncated Gaussian perturbation of the exact
    /// prox point, bounded by `delta * |current iterate component|`.
    InjectGaussian { delta: f64 },
    /// Candidate-loop perforation of the k-support prox.
    Perforate { skip: usize },
    /// Early termination of the l1-affine inner loop.
    InnerTol { tol: f64 },
}

/// Error model plus the ε₀ cap; `eps0: None` is the empirical sentinel and
/// means "estimate ε₀ as the running maximum over the trace".
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModelSpec {
    pub variant: ErrorVariant,
    pub eps0: Option<f64>,
}

impl ErrorModelSpec {
    pub fn none() -> Self {
        ErrorModelSpec {
            variant: ErrorVariant::None,
            eps0: None,
        }
    }

    pub fn inject_gaussian(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::param(format!(
                "injection level delta must lie in [0, 1], got {delta}"
            )));
        }
        Ok(ErrorModelSpec {
            variant: ErrorVariant::InjectGaussian { delta },
            eps0: None,
        })
    }

    pub fn perforate(skip: usize) -> Result<Self> {
        if skip == 0 {
            return Err(Error::param("perforation stride must be at least 1"));
        }
        Ok(ErrorModelSpec {
            variant: ErrorVariant::Perforate { skip },
            eps0: None,
        })
    }

    pub fn inner_tol(tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::param("inner tolerance must be positive"));
        }
        Ok(ErrorModelSpec {
            variant: ErrorVariant::InnerTol { tol },
            eps0: None,
        })
    }

    pub fn with_eps0(mut self, eps0: f64) -> Result<Self> {
        if !(eps0 >= 0.0) {
            return Err(Error::param("eps0 must be nonnegative"));
        }
        self.eps0 = Some(eps0);
        Ok(self)
    }

    /// Tolerance for the l1-affine inner loop under this model.
    pub fn g_inner_tol(&self) -> f64 {
        match self.variant {
            ErrorVariant::InnerTol { tol } => tol,
            _ => EXACT_INNER_TOL,
        }
    }

    /// Perforation stride for the k-support prox under this model.
    pub fn h_skip(&self) -> usize {
        match self.variant {
            ErrorVariant::Perforate { skip } => skip,
            _ => 1,
        }
    }

    pub fn injection_delta(&self) -> Option<f64> {
        match self.variant {
            ErrorVariant::InjectGaussian { delta } => Some(delta),
            _ => None,
        }
    }
}

/// Perturbs each component of an exact prox point by a truncated Gaussian
/// sample bounded by `delta * |magnitude_ref_i|` (the current iterate).
pub fn inject(
    exact: &DenseVector,
    magnitude_ref: &DenseVector,
    delta: f64,
    rng: &mut SeededRng,
) -> DenseVector {
    assert_eq!(exact.dim(), magnitude_ref.dim(), "injection dims");
    DenseVector::from_fn(exact.dim(), |i| {
        exact[i] + rng.sample_truncated_gaussian(delta * magnitude_ref[i].abs())
    })
}

/// Applies the point-perturbation models to an exact prox evaluation:
/// `None` passes the point through with ε = 0, `InjectGaussian` perturbs it
/// and measures the induced ε. The knob-driven variants (`Perforate`,
/// `InnerTol`) are routed to the corresponding prox implementations by the
/// engine instead.
pub fn apply(
    model: &ErrorModelSpec,
    term: &ProxTerm,
    exact: &DenseVector,
    magnitude_ref: &DenseVector,
    center: &DenseVector,
    scale: f64,
    rng: &mut SeededRng,
) -> Result<ProxResult> {
    match model.variant {
        ErrorVariant::InjectGaussian { delta } if delta > 0.0 => {
            let point = inject(exact, magnitude_ref, delta, rng);
            let eps = measure_eps(term, &point, exact, center, scale)?;
            Ok(ProxResult {
                point,
                reported_eps: eps,
                inner_iterations: 0,
            })
        }
        _ => Ok(ProxResult::exact(exact.clone())),
    }
}

/// Finalized ε₀: the configured cap when present, otherwise the running
/// maximum of `max(ε_g, ε_h)` over the trace.
pub fn eps0_estimate(model: &ErrorModelSpec, eps_pairs: &[(f64, f64)]) -> f64 {
    if let Some(eps0) = model.eps0 {
        return eps0;
    }
    eps_pairs
        .iter()
        .map(|&(eg, eh)| eg.max(eh))
        .fold(0.0, f64::max)
}
