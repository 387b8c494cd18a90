//! Composite problem description: `minimize g(x) + h(z) s.t. Ax + Bz = c`.

use crate::error::{Error, Result};
use crate::numerics::dense::{DenseMatrix, DenseVector};
use crate::prox::ProxTerm;

/// The composite problem the solver runs on. `a` and `b_mat` are the
/// constraint matrices of `Ax + Bz = c`; the objective terms carry their own
/// data (e.g. the least-squares design matrix).
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub g: ProxTerm,
    pub h: ProxTerm,
    pub a: DenseMatrix,
    pub b_mat: DenseMatrix,
    pub c: DenseVector,
}

impl ProblemSpec {
    pub fn new(
        g: ProxTerm,
        h: ProxTerm,
        a: DenseMatrix,
        b_mat: DenseMatrix,
        c: DenseVector,
    ) -> Result<Self> {
        let spec = ProblemSpec { g, h, a, b_mat, c };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.rows() != self.b_mat.rows() || self.a.rows() != self.c.dim() {
            return Err(Error::dims(format!(
                "constraint rows disagree: A {}x{}, B {}x{}, c dim {}",
                self.a.rows(),
                self.a.cols(),
                self.b_mat.rows(),
                self.b_mat.cols(),
                self.c.dim()
            )));
        }
        if let Some(d) = self.g.input_dim() {
            if d != self.x_dim() {
                return Err(Error::dims(format!(
                    "g acts on dim {d} but x has dim {}",
                    self.x_dim()
                )));
            }
        }
        if let Some(d) = self.h.input_dim() {
            if d != self.z_dim() {
                return Err(Error::dims(format!(
                    "h acts on dim {d} but z has dim {}",
                    self.z_dim()
                )));
            }
        }
        if let crate::prox::ProxTermKind::KSupportSq { k_supp, .. } = self.h.kind {
            if k_supp > self.z_dim() {
                return Err(Error::param(format!(
                    "k_supp = {k_supp} exceeds z dimension {}",
                    self.z_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn x_dim(&self) -> usize {
        self.a.cols()
    }

    pub fn z_dim(&self) -> usize {
        self.b_mat.cols()
    }

    pub fn constraint_dim(&self) -> usize {
        self.c.dim()
    }

    /// `g(x) + h(z)`.
    pub fn objective(&self, x: &DenseVector, z: &DenseVector) -> f64 {
        self.g.eval(x) + self.h.eval(z)
    }

    /// `Ax + Bz - c`.
    pub fn constraint_residual(&self, x: &DenseVector, z: &DenseVector) -> DenseVector {
        self.a.matvec(x).add(&self.b_mat.matvec(z)).sub(&self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_dimensions() {
        let g = ProxTerm::quadratic_ls(DenseMatrix::identity(3), DenseVector::zeros(3)).unwrap();
        let h = ProxTerm::l1(1.0).unwrap();
        let bad = ProblemSpec::new(
            g,
            h,
            DenseMatrix::identity(4),
            DenseMatrix::identity(4).scaled(-1.0),
            DenseVector::zeros(4),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn objective_adds_both_terms() {
        let g = ProxTerm::quadratic_ls(DenseMatrix::identity(2), DenseVector::zeros(2)).unwrap();
        let h = ProxTerm::l1(2.0).unwrap();
        let p = ProblemSpec::new(
            g,
            h,
            DenseMatrix::identity(2),
            DenseMatrix::identity(2).scaled(-1.0),
            DenseVector::zeros(2),
        )
        .unwrap();
        let x = DenseVector::new(vec![1.0, 2.0]).unwrap();
        let z = DenseVector::new(vec![-1.0, 1.0]).unwrap();
        assert!((p.objective(&x, &z) - (5.0 + 4.0)).abs() < 1e-14);
    }
}
