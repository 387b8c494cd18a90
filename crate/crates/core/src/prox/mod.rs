//! Proximal operators for the objective terms the experiments use, plus
//! measurement of the prox suboptimality ε.
//!
//! A prox evaluation solves `argmin_p term(p) + (scale/2) ||p - center||^2`.
//! The ε attached to an approximate evaluation is the gap of that objective
//! relative to the exact minimizer for the same center.

pub mod ksupport;
pub mod l1_affine;

pub use ksupport::{ksupport_norm_sq, prox_ksupport_sq};
pub use l1_affine::{prox_l1_affine, L1AffineProx};

use crate::error::{Error, Result};
use crate::numerics::dense::{CholeskyFactor, DenseMatrix, DenseVector};

/// Negative ε within this slack is rounding noise and clamps to zero;
/// anything more negative means the "exact" reference is not exact.
pub const EPS_NOISE_FLOOR: f64 = 1e-12;

/// Objective term with a prox routine attached.
#[derive(Debug, Clone)]
pub struct ProxTerm {
    pub kind: ProxTermKind,
    pub name: String,
}

#[derive(Debug, Clone)]
pub enum ProxTermKind {
    /// `||A x - b||_2^2`
    QuadraticLS { a: DenseMatrix, b: DenseVector },
    /// `weight * ||z||_1`
    L1 { weight: f64 },
    /// `weight * ||A x - b||_1`
    L1Affine {
        a: DenseMatrix,
        b: DenseVector,
        weight: f64,
    },
    /// `(weight / 2) * (||z||_k^sp)^2`
    KSupportSq { k_supp: usize, weight: f64 },
}

impl ProxTerm {
    pub fn quadratic_ls(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if a.rows() != b.dim() {
            return Err(Error::dims(format!(
                "quadratic term: A is {}x{} but b has dim {}",
                a.rows(),
                a.cols(),
                b.dim()
            )));
        }
        Ok(ProxTerm {
            kind: ProxTermKind::QuadraticLS { a, b },
            name: "least-squares".to_string(),
        })
    }

    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::param("l1 weight must be positive"));
        }
        Ok(ProxTerm {
            kind: ProxTermKind::L1 { weight },
            name: "l1".to_string(),
        })
    }

    pub fn l1_affine(a: DenseMatrix, b: DenseVector, weight: f64) -> Result<Self> {
        if a.rows() != b.dim() {
            return Err(Error::dims(format!(
                "l1-affine term: A is {}x{} but b has dim {}",
                a.rows(),
                a.cols(),
                b.dim()
            )));
        }
        if !(weight > 0.0) {
            return Err(Error::param("l1-affine weight must be positive"));
        }
        Ok(ProxTerm {
            kind: ProxTermKind::L1Affine { a, b, weight },
            name: "l1-affine".to_string(),
        })
    }

    pub fn ksupport_sq(k_supp: usize, weight: f64) -> Result<Self> {
        if k_supp == 0 {
            return Err(Error::param("k_supp must be at least 1"));
        }
        if !(weight > 0.0) {
            return Err(Error::param("k-support weight must be positive"));
        }
        Ok(ProxTerm {
            kind: ProxTermKind::KSupportSq { k_supp, weight },
            name: "k-support-squared".to_string(),
        })
    }

    /// Dimension the term acts on, when the term pins one down.
    pub fn input_dim(&self) -> Option<usize> {
        match &self.kind {
            ProxTermKind::QuadraticLS { a, .. } | ProxTermKind::L1Affine { a, .. } => {
                Some(a.cols())
            }
            _ => None,
        }
    }

    /// Term value at a point.
    pub fn eval(&self, p: &DenseVector) -> f64 {
        match &self.kind {
            ProxTermKind::QuadraticLS { a, b } => a.matvec(p).sub(b).norm_sq(),
            ProxTermKind::L1 { weight } => weight * p.norm_l1(),
            ProxTermKind::L1Affine { a, b, weight } => weight * a.matvec(p).sub(b).norm_l1(),
            ProxTermKind::KSupportSq { k_supp, weight } => {
                0.5 * weight * ksupport_norm_sq(p, *k_supp)
            }
        }
    }
}

/// Outcome of one prox evaluation.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub point: DenseVector,
    /// Prox suboptimality in objective units; zero for closed forms.
    pub reported_eps: f64,
    pub inner_iterations: usize,
}

impl ProxResult {
    pub fn exact(point: DenseVector) -> Self {
        ProxResult {
            point,
            reported_eps: 0.0,
            inner_iterations: 0,
        }
    }
}

/// Prox of the least-squares term with a cached normal-equations factor.
///
/// Solves `argmin_x ||A x - b||^2 + (scale/2) ||x - y||^2` through the
/// normal equations `(2 A'A + scale I) x = 2 A'b + scale y`.
#[derive(Debug, Clone)]
pub struct QuadraticProx {
    system: DenseMatrix,
    factor: CholeskyFactor,
    atb2: DenseVector,
    scale: f64,
}

impl QuadraticProx {
    pub fn new(a: &DenseMatrix, b: &DenseVector, scale: f64) -> Result<Self> {
        if a.rows() != b.dim() {
            return Err(Error::dims(format!(
                "prox_quadratic: A is {}x{} but b has dim {}",
                a.rows(),
                a.cols(),
                b.dim()
            )));
        }
        if !(scale > 0.0) {
            return Err(Error::param("prox scale must be positive"));
        }
        let at = a.transpose();
        let mut system = at.matmul(a).scaled(2.0);
        for i in 0..system.rows() {
            system.set(i, i, system.get(i, i) + scale);
        }
        let factor = CholeskyFactor::new(&system)?;
        let atb2 = at.matvec(b).scaled(2.0);
        Ok(QuadraticProx {
            system,
            factor,
            atb2,
            scale,
        })
    }

    pub fn solve(&self, y: &DenseVector) -> Result<DenseVector> {
        if y.dim() != self.factor.dim() {
            return Err(Error::dims(format!(
                "prox_quadratic: center dim {} vs system dim {}",
                y.dim(),
                self.factor.dim()
            )));
        }
        let rhs = self.atb2.add(&y.scaled(self.scale));
        let mut x = self.factor.solve(&rhs);
        let residual = rhs.sub(&self.system.matvec(&x));
        if residual.norm() > 1e-13 * (1.0 + rhs.norm()) {
            x = x.add(&self.factor.solve(&residual));
        }
        Ok(x)
    }
}

/// One-shot quadratic prox; closed form, so `reported_eps = 0`.
pub fn prox_quadratic(
    a: &DenseMatrix,
    b: &DenseVector,
    y: &DenseVector,
    scale: f64,
) -> Result<ProxResult> {
    let solver = QuadraticProx::new(a, b, scale)?;
    Ok(ProxResult::exact(solver.solve(y)?))
}

pub(crate) fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Componentwise soft thresholding: `argmin_z tau ||z||_1 + 1/2 ||z - y||^2`.
pub fn prox_l1(y: &DenseVector, tau: f64) -> ProxResult {
    assert!(tau > 0.0, "soft threshold needs tau > 0");
    let point = DenseVector::from_fn(y.dim(), |i| soft_threshold(y[i], tau));
    ProxResult::exact(point)
}

/// Prox objective `F(p) = term(p) + (scale/2) ||p - center||^2`.
pub fn prox_objective(term: &ProxTerm, p: &DenseVector, center: &DenseVector, scale: f64) -> f64 {
    term.eval(p) + 0.5 * scale * p.sub(center).norm_sq()
}

/// Prox suboptimality of `approx` against the exact minimizer for the same
/// center: `F(approx) - F(exact)`, clamped at zero within rounding noise.
///
/// A gap below `-EPS_NOISE_FLOOR` is not noise; it means the supplied
/// "exact" point is not the minimizer, and that is reported as an error.
pub fn measure_eps(
    term: &ProxTerm,
    approx: &DenseVector,
    exact: &DenseVector,
    center: &DenseVector,
    scale: f64,
) -> Result<f64> {
    let gap = prox_objective(term, approx, center, scale) - prox_objective(term, exact, center, scale);
    if gap < -EPS_NOISE_FLOOR {
        return Err(Error::WrongReference { gap: -gap });
    }
    Ok(gap.max(0.0))
}
