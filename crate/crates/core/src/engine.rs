//! The WLM-ADMM iteration: operator precomputation, the three-step update
//! with approximate proxes, the shadow pass that measures per-iteration
//! residual vectors and prox errors, and Boyd-style stopping criteria.
//!
//! Scheme (weighted penalty `L`, proximal matrices `M_x = lambda_x I -
//! (1/lambda) A'LA`, `M_z` analogous, so both subproblems become prox
//! evaluations):
//!
//! ```text
//! Gamma1 = Sigma1 x_k - (1/lambda) A'L (B z_k - c + v_k)
//! x_{k+1} ~ prox of g/lambda_x at Gamma1/lambda_x
//! Gamma2 = Sigma2 z_k - (1/lambda) B'L (A x_{k+1} - c + v_k)
//! z_{k+1} ~ prox of h/lambda_z at Gamma2/lambda_z
//! v_{k+1} = v_k + (A x_{k+1} + B z_{k+1} - c)
//! ```
//!
//! with `Sigma1 = lambda_x I - (1/lambda) A'LA` and `Sigma2` analogous.
//! Both must be positive semidefinite, which is the gate
//! `lambda * lambda_x >= ||A'LA||` (checked with a small slack so the exact
//! boundary, where the scheme reduces to plain scaled proximal ADMM, is
//! admitted).

use crate::certify::ReferenceSolution;
use crate::error::{Error, Result};
use crate::numerics::dense::{
    spectral_norm, CholeskyFactor, DenseMatrix, DenseVector,
};
use crate::numerics::rng::SeededRng;
use crate::perturb::{self, ErrorModelSpec};
use crate::problem::ProblemSpec;
use crate::prox::l1_affine::{L1AffineProx, L1AffineState, EXACT_INNER_TOL};
use crate::prox::{
    ksupport::prox_ksupport_sq_with_exact, measure_eps, prox_l1, ProxTerm, ProxTermKind,
    QuadraticProx,
};

/// Tolerance used by high-accuracy reference runs.
pub const REFERENCE_TOL: f64 = 2.2204e-16;

/// Relative slack of the proximal-step gate; admits the PSD boundary.
const GATE_SLACK: f64 = 1e-9;

/// Scheme parameters. `lambda` is the reciprocal penalty `1/rho`;
/// `l_weight = None` means the identity penalty weighting.
#[derive(Debug, Clone)]
pub struct AdmmConfig {
    pub lambda: f64,
    pub lambda_x: f64,
    pub lambda_z: f64,
    pub l_weight: Option<DenseMatrix>,
    pub abstol: f64,
    pub reltol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            lambda: 1.0,
            lambda_x: 1.0,
            lambda_z: 1.0,
            l_weight: None,
            abstol: 1e-6,
            reltol: 1e-6,
            max_iter: 3000,
            seed: 0,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.lambda_x > 0.0) || !(self.lambda_z > 0.0) {
            return Err(Error::param("lambda, lambda_x, lambda_z must be positive"));
        }
        if !(self.abstol >= 0.0) || !(self.reltol >= 0.0) {
            return Err(Error::param("tolerances must be nonnegative"));
        }
        Ok(())
    }

    fn l_matrix(&self, p: usize) -> Result<DenseMatrix> {
        match &self.l_weight {
            None => Ok(DenseMatrix::identity(p)),
            Some(l) => {
                if l.rows() != p || l.cols() != p {
                    return Err(Error::dims(format!(
                        "L must be {p}x{p}, got {}x{}",
                        l.rows(),
                        l.cols()
                    )));
                }
                CholeskyFactor::new(l)?; // symmetric PD check
                Ok(l.clone())
            }
        }
    }
}

/// Fixed per-run operators. Under this proximal-matrix choice `Sigma1` *is*
/// `M_x` and `Sigma2` *is* `M_z`.
#[derive(Debug, Clone)]
pub struct PrecomputedOperators {
    pub sigma1: DenseMatrix,
    pub sigma2: DenseMatrix,
    /// `A' L`
    pub atl: DenseMatrix,
    /// `B' L`
    pub btl: DenseMatrix,
    /// Measured `||A' L A||` and `||B' L B||` from the gate.
    pub atla_norm: f64,
    pub btlb_norm: f64,
    pub l: DenseMatrix,
}

fn validate_psd(m: &DenseMatrix, scale_hint: f64) -> Result<()> {
    if CholeskyFactor::new(m).is_ok() {
        return Ok(());
    }
    // PSD-with-nullspace passes once jittered; anything with a genuinely
    // negative eigenvalue still fails.
    let jitter = 1e-10 * (1.0 + scale_hint.abs());
    let mut jm = m.clone();
    for i in 0..jm.rows() {
        jm.set(i, i, jm.get(i, i) + jitter);
    }
    CholeskyFactor::new(&jm).map(|_| ())
}

/// Builds `Sigma1`, `Sigma2` and the cached products, refusing configs that
/// violate `lambda*lambda_x > ||A'LA||` / `lambda*lambda_z > ||B'LB||`
/// (reported with the measured spectral norm) and validating positive
/// semidefiniteness by Cholesky.
pub fn precompute(problem: &ProblemSpec, cfg: &AdmmConfig) -> Result<PrecomputedOperators> {
    cfg.validate()?;
    problem.validate()?;
    let p = problem.constraint_dim();
    let l = cfg.l_matrix(p)?;
    let atl = problem.a.transpose().matmul(&l);
    let btl = problem.b_mat.transpose().matmul(&l);
    let atla = atl.matmul(&problem.a);
    let btlb = btl.matmul(&problem.b_mat);
    let atla_norm = spectral_norm(&atla);
    let btlb_norm = spectral_norm(&btlb);

    if cfg.lambda * cfg.lambda_x < atla_norm - GATE_SLACK * atla_norm.max(1.0) {
        return Err(Error::StepConditionViolated {
            side: "x",
            matrix: "A",
            provided: cfg.lambda * cfg.lambda_x,
            measured: atla_norm,
        });
    }
    if cfg.lambda * cfg.lambda_z < btlb_norm - GATE_SLACK * btlb_norm.max(1.0) {
        return Err(Error::StepConditionViolated {
            side: "z",
            matrix: "B",
            provided: cfg.lambda * cfg.lambda_z,
            measured: btlb_norm,
        });
    }

    let n = problem.x_dim();
    let m = problem.z_dim();
    let sigma1 = DenseMatrix::identity(n)
        .scaled(cfg.lambda_x)
        .sub(&atla.scaled(1.0 / cfg.lambda));
    let sigma2 = DenseMatrix::identity(m)
        .scaled(cfg.lambda_z)
        .sub(&btlb.scaled(1.0 / cfg.lambda));
    validate_psd(&sigma1, cfg.lambda_x)?;
    validate_psd(&sigma2, cfg.lambda_z)?;

    Ok(PrecomputedOperators {
        sigma1,
        sigma2,
        atl,
        btl,
        atla_norm,
        btlb_norm,
        l,
    })
}

/// Whether a run records the shadow pass (exact prox at the same inputs) or
/// only the perturbed trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Fast,
    Shadow,
}

/// Residual vectors of the shadow pass at one iteration.
#[derive(Debug, Clone)]
pub struct ShadowData {
    /// `r_x = exact - approx` at the same Gamma input.
    pub r_x: DenseVector,
    pub r_z: DenseVector,
    pub rx_norm: f64,
    pub rz_norm: f64,
    pub sigma1_rx_norm: f64,
}

/// State after one iteration: record `k` holds the iterates `x^{k+1}`,
/// `z^{k+1}`, `v^{k+1}`, `u^{k+1} = v^{k+1} + B(z^k - z^{k+1})`.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub x: DenseVector,
    pub z: DenseVector,
    pub v: DenseVector,
    pub u: DenseVector,
    pub f_value: f64,
    pub eps_g: f64,
    pub eps_h: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub shadow: Option<ShadowData>,
}

/// A completed run: the random initialization plus every iteration record.
#[derive(Debug, Clone)]
pub struct Trace {
    pub x0: DenseVector,
    pub z0: DenseVector,
    pub v0: DenseVector,
    pub records: Vec<IterationRecord>,
    pub stopped_by_tolerance: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(eps_g, eps_h)` per iteration.
    pub fn eps_pairs(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.eps_g, r.eps_h)).collect()
    }

    /// `v` entering iteration `k` (i.e. `v^k`; `v^0` for the first record).
    pub fn v_before(&self, k: usize) -> &DenseVector {
        if k == 0 {
            &self.v0
        } else {
            &self.records[k - 1].v
        }
    }
}

enum TermSolver {
    Quadratic(QuadraticProx),
    L1 {
        tau: f64,
    },
    L1Affine {
        solver: L1AffineProx,
        warm_main: Option<L1AffineState>,
        warm_shadow: Option<L1AffineState>,
    },
    KSupport {
        k_supp: usize,
        weight_eff: f64,
    },
}

impl TermSolver {
    fn new(term: &ProxTerm, scale: f64) -> Result<Self> {
        Ok(match &term.kind {
            ProxTermKind::QuadraticLS { a, b } => {
                TermSolver::Quadratic(QuadraticProx::new(a, b, scale)?)
            }
            ProxTermKind::L1 { weight } => TermSolver::L1 {
                tau: weight / scale,
            },
            ProxTermKind::L1Affine { a, b, weight } => TermSolver::L1Affine {
                solver: L1AffineProx::new(a.clone(), b.clone(), *weight, scale)?,
                warm_main: None,
                warm_shadow: None,
            },
            ProxTermKind::KSupportSq { k_supp, weight } => TermSolver::KSupport {
                k_supp: *k_supp,
                weight_eff: weight / scale,
            },
        })
    }
}

struct SideEval {
    exact: DenseVector,
    approx: DenseVector,
    eps: f64,
}

/// One full WLM-ADMM run with its solver caches and RNG stream.
pub struct AdmmRunner<'a> {
    problem: &'a ProblemSpec,
    cfg: AdmmConfig,
    ops: PrecomputedOperators,
    model: ErrorModelSpec,
    mode: RunMode,
    rng: SeededRng,
    g_solver: TermSolver,
    h_solver: TermSolver,
    x: DenseVector,
    z: DenseVector,
    v: DenseVector,
    k: usize,
}

impl<'a> AdmmRunner<'a> {
    /// Seeds the iterate initialization (i.i.d. standard normal `x^0`,
    /// `z^0`; `v^0 = 0`) from stream 1 of the config seed.
    pub fn new(
        problem: &'a ProblemSpec,
        cfg: &AdmmConfig,
        model: &ErrorModelSpec,
        mode: RunMode,
    ) -> Result<Self> {
        let mut rng = SeededRng::with_stream(cfg.seed, 1);
        let x = rng.normal_vector(problem.x_dim());
        let z = rng.normal_vector(problem.z_dim());
        let v = DenseVector::zeros(problem.constraint_dim());
        Self::build(problem, cfg, model, mode, x, z, v, rng)
    }

    /// Starts from given iterates instead of the seeded initialization.
    /// Injection draws follow the same stream positions as `new`.
    pub fn with_initial_state(
        problem: &'a ProblemSpec,
        cfg: &AdmmConfig,
        model: &ErrorModelSpec,
        mode: RunMode,
        x: DenseVector,
        z: DenseVector,
        v: DenseVector,
    ) -> Result<Self> {
        let mut rng = SeededRng::with_stream(cfg.seed, 1);
        let _ = rng.normal_vector(problem.x_dim());
        let _ = rng.normal_vector(problem.z_dim());
        Self::build(problem, cfg, model, mode, x, z, v, rng)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        problem: &'a ProblemSpec,
        cfg: &AdmmConfig,
        model: &ErrorModelSpec,
        mode: RunMode,
        x: DenseVector,
        z: DenseVector,
        v: DenseVector,
        rng: SeededRng,
    ) -> Result<Self> {
        let ops = precompute(problem, cfg)?;
        if x.dim() != problem.x_dim()
            || z.dim() != problem.z_dim()
            || v.dim() != problem.constraint_dim()
        {
            return Err(Error::dims("initial state dimensions".to_string()));
        }
        let g_solver = TermSolver::new(&problem.g, cfg.lambda_x)?;
        let h_solver = TermSolver::new(&problem.h, cfg.lambda_z)?;
        Ok(AdmmRunner {
            problem,
            cfg: cfg.clone(),
            ops,
            model: model.clone(),
            mode,
            rng,
            g_solver,
            h_solver,
            x,
            z,
            v,
            k: 0,
        })
    }

    pub fn initial_state(&self) -> (DenseVector, DenseVector, DenseVector) {
        (self.x.clone(), self.z.clone(), self.v.clone())
    }

    pub fn operators(&self) -> &PrecomputedOperators {
        &self.ops
    }

    fn eval_side(
        solver: &mut TermSolver,
        term: &ProxTerm,
        center: &DenseVector,
        scale: f64,
        model: &ErrorModelSpec,
        magnitude_ref: &DenseVector,
        rng: &mut SeededRng,
    ) -> Result<SideEval> {
        let (exact, mut approx) = match solver {
            TermSolver::Quadratic(q) => {
                let p = q.solve(center)?;
                (p.clone(), p)
            }
            TermSolver::L1 { tau } => {
                let p = prox_l1(center, *tau).point;
                (p.clone(), p)
            }
            TermSolver::L1Affine {
                solver,
                warm_main,
                warm_shadow,
            } => {
                let tol = model.g_inner_tol();
                let (main, _, state) = solver.solve(center, tol, warm_main.as_ref())?;
                *warm_main = Some(state);
                let exact = if tol <= EXACT_INNER_TOL {
                    main.clone()
                } else {
                    let (ex, _, state) =
                        solver.solve(center, EXACT_INNER_TOL, warm_shadow.as_ref())?;
                    *warm_shadow = Some(state);
                    ex
                };
                (exact, main)
            }
            TermSolver::KSupport { k_supp, weight_eff } => {
                let (res, exact) =
                    prox_ksupport_sq_with_exact(center, *k_supp, *weight_eff, model.h_skip())?;
                (exact, res.point)
            }
        };
        if let Some(delta) = model.injection_delta() {
            if delta > 0.0 {
                approx = perturb::inject(&exact, magnitude_ref, delta, rng);
            }
        }
        let eps = if approx.as_slice() == exact.as_slice() {
            0.0
        } else {
            measure_eps(term, &approx, &exact, center, scale)?
        };
        Ok(SideEval { exact, approx, eps })
    }

    /// One three-step update. The returned record holds the new iterates;
    /// in shadow mode it also carries the residual vectors of the exact
    /// prox at the same Gamma inputs.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let k = self.k;
        let lambda_inv = 1.0 / self.cfg.lambda;

        let bz = self.problem.b_mat.matvec(&self.z);
        let arg1 = bz.sub(&self.problem.c).add(&self.v);
        let gamma1 = self
            .ops
            .sigma1
            .matvec(&self.x)
            .sub(&self.ops.atl.matvec(&arg1).scaled(lambda_inv));
        let center_x = gamma1.scaled(1.0 / self.cfg.lambda_x);
        let gx = Self::eval_side(
            &mut self.g_solver,
            &self.problem.g,
            &center_x,
            self.cfg.lambda_x,
            &self.model,
            &self.x,
            &mut self.rng,
        )
        .map_err(|e| e.at_iteration(k + 1))?;
        let x_next = gx.approx;

        let ax = self.problem.a.matvec(&x_next);
        let arg2 = ax.sub(&self.problem.c).add(&self.v);
        let gamma2 = self
            .ops
            .sigma2
            .matvec(&self.z)
            .sub(&self.ops.btl.matvec(&arg2).scaled(lambda_inv));
        let center_z = gamma2.scaled(1.0 / self.cfg.lambda_z);
        let hz = Self::eval_side(
            &mut self.h_solver,
            &self.problem.h,
            &center_z,
            self.cfg.lambda_z,
            &self.model,
            &self.z,
            &mut self.rng,
        )
        .map_err(|e| e.at_iteration(k + 1))?;
        let z_next = hz.approx;

        let resid = ax
            .add(&self.problem.b_mat.matvec(&z_next))
            .sub(&self.problem.c);
        let v_next = self.v.add(&resid);
        let u_next = v_next.add(&self.problem.b_mat.matvec(&self.z.sub(&z_next)));

        if !x_next.is_finite() || !z_next.is_finite() || !v_next.is_finite() {
            return Err(Error::NonFinite {
                context: format!("iterate after step {}", k + 1),
            });
        }

        let f_value = self.problem.objective(&x_next, &z_next);
        let primal_res = resid.norm();
        let dual_res = self
            .problem
            .a
            .tr_matvec(&self.problem.b_mat.matvec(&z_next.sub(&self.z)))
            .scaled(lambda_inv)
            .norm();

        let shadow = match self.mode {
            RunMode::Fast => None,
            RunMode::Shadow => {
                let r_x = gx.exact.sub(&x_next);
                let r_z = hz.exact.sub(&z_next);
                let sigma1_rx_norm = self.ops.sigma1.matvec(&r_x).norm();
                Some(ShadowData {
                    rx_norm: r_x.norm(),
                    rz_norm: r_z.norm(),
                    sigma1_rx_norm,
                    r_x,
                    r_z,
                })
            }
        };

        self.x = x_next.clone();
        self.z = z_next.clone();
        self.v = v_next.clone();
        self.k += 1;

        Ok(IterationRecord {
            k,
            x: x_next,
            z: z_next,
            v: v_next,
            u: u_next,
            f_value,
            eps_g: gx.eps,
            eps_h: hz.eps,
            primal_res,
            dual_res,
            shadow,
        })
    }

    /// Boyd-style feasibility thresholds at the current iterates; stopping
    /// uses strict inequality so zero tolerances never stop early.
    fn tolerances_met(&self, record: &IterationRecord) -> bool {
        let p = self.problem.constraint_dim() as f64;
        let n = self.problem.x_dim() as f64;
        let ax_norm = self.problem.a.matvec(&record.x).norm();
        let bz_norm = self.problem.b_mat.matvec(&record.z).norm();
        let c_norm = self.problem.c.norm();
        let eps_pri =
            p.sqrt() * self.cfg.abstol + self.cfg.reltol * ax_norm.max(bz_norm).max(c_norm);
        let y = record.v.scaled(1.0 / self.cfg.lambda);
        let eps_dual =
            n.sqrt() * self.cfg.abstol + self.cfg.reltol * self.problem.a.tr_matvec(&y).norm();
        record.primal_res < eps_pri && record.dual_res < eps_dual
    }
}

/// Runs the scheme from a seeded random initialization until `max_iter` or
/// until both primal and dual residuals fall below their thresholds.
pub fn run(
    problem: &ProblemSpec,
    cfg: &AdmmConfig,
    model: &ErrorModelSpec,
    mode: RunMode,
) -> Result<Trace> {
    let runner = AdmmRunner::new(problem, cfg, model, mode)?;
    drive(runner, cfg.max_iter)
}

/// `run` from explicit initial iterates.
pub fn run_from(
    problem: &ProblemSpec,
    cfg: &AdmmConfig,
    model: &ErrorModelSpec,
    mode: RunMode,
    x0: DenseVector,
    z0: DenseVector,
    v0: DenseVector,
) -> Result<Trace> {
    let runner = AdmmRunner::with_initial_state(problem, cfg, model, mode, x0, z0, v0)?;
    drive(runner, cfg.max_iter)
}

fn drive(mut runner: AdmmRunner<'_>, max_iter: usize) -> Result<Trace> {
    let (x0, z0, v0) = runner.initial_state();
    let mut records = Vec::with_capacity(max_iter);
    let mut stopped_by_tolerance = false;
    for _ in 0..max_iter {
        let record = runner.step()?;
        let done = runner.tolerances_met(&record);
        records.push(record);
        if done {
            stopped_by_tolerance = true;
            break;
        }
    }
    Ok(Trace {
        x0,
        z0,
        v0,
        records,
        stopped_by_tolerance,
    })
}

/// High-accuracy reference: the exact scheme (inner tolerance `1e-14`,
/// `skip = 1`) with `abstol = reltol = 2.2204e-16` for at least 3000
/// iterations; returns the final iterate as `(x*, z*, f*)`.
pub fn reference_solution(problem: &ProblemSpec, cfg: &AdmmConfig) -> Result<ReferenceSolution> {
    let mut ref_cfg = cfg.clone();
    ref_cfg.abstol = REFERENCE_TOL;
    ref_cfg.reltol = REFERENCE_TOL;
    ref_cfg.max_iter = cfg.max_iter.max(3000);
    let trace = run(problem, &ref_cfg, &ErrorModelSpec::none(), RunMode::Fast)?;
    let last = trace
        .records
        .last()
        .ok_or_else(|| Error::param("reference run produced no iterations"))?;
    Ok(ReferenceSolution {
        x_star: last.x.clone(),
        z_star: last.z.clone(),
        f_star: last.f_value,
        provenance: format!(
            "exact scheme, seed={}, iterations={}, abstol=reltol={:e}, lambda={}, lambda_x={}, lambda_z={}",
            ref_cfg.seed, trace.len(), REFERENCE_TOL, ref_cfg.lambda, ref_cfg.lambda_x, ref_cfg.lambda_z
        ),
    })
}
