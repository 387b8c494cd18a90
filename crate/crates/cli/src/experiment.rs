//! Synthetic problem generation and the end-to-end experiment protocol:
//! reference solve, perturbed shadow run, bound evaluation, report assembly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use inexact_admm::certify::{self, BoundMode};
use inexact_admm::engine::{self, AdmmConfig, RunMode};
use inexact_admm::error::Error as CoreError;
use inexact_admm::numerics::{spectral_norm, DenseMatrix, DenseVector, SeededRng};
use inexact_admm::perturb::{eps0_estimate, ErrorModelSpec};
use inexact_admm::problem::ProblemSpec;
use inexact_admm::prox::ProxTerm;

use crate::report::{ReportRow, RunReport, Summary};

/// `2 sqrt(log 2)`, the probability parameter of the perforation figures.
pub fn gamma_2_sqrt_log2() -> f64 {
    2.0 * (2.0_f64.ln()).sqrt()
}

/// `20 sqrt(log 2)`, the probability parameter of the injection figures.
pub fn gamma_20_sqrt_log2() -> f64 {
    20.0 * (2.0_f64.ln()).sqrt()
}

/// Safety margin applied when rescaling the synthetic data matrix below
/// unit spectral norm.
pub const DATA_SCALE_MARGIN: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: CoreError,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report: {0}")]
    Parse(String),
}

impl ExperimentError {
    pub(crate) fn stage(stage: &'static str) -> impl FnOnce(CoreError) -> ExperimentError {
        move |source| ExperimentError::Stage { stage, source }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Io { .. } | ExperimentError::Parse(_) => {
                2
            }
            ExperimentError::Stage { source, .. } => match source {
                CoreError::InvalidParameter { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::LengthMismatch { .. } => 2,
                _ => 3,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Lasso,
    Ksupp,
}

/// One experiment invocation; serialized verbatim into every report so a
/// run can be reproduced bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub m: usize,
    pub n: usize,
    pub delta: Option<f64>,
    pub skip: Option<usize>,
    pub inner_tol: Option<f64>,
    pub gamma: f64,
    pub iters: usize,
    pub seed: u64,
    pub abstol: f64,
    pub reltol: f64,
    pub lambda: f64,
    pub lambda_x: f64,
    pub lambda_z: f64,
    pub k_supp: usize,
    pub lambda_reg: f64,
}

impl ExperimentConfig {
    /// Paper defaults: m = 500, n = 100, 3000 iterations, identity penalty
    /// weighting, unit proximal scalings, k_supp = 20, unit regularization.
    pub fn new(experiment: Experiment) -> Self {
        let gamma = match experiment {
            Experiment::Lasso => gamma_20_sqrt_log2(),
            Experiment::Ksupp => gamma_2_sqrt_log2(),
        };
        ExperimentConfig {
            experiment,
            m: 500,
            n: 100,
            delta: None,
            skip: None,
            inner_tol: None,
            gamma,
            iters: 3000,
            seed: 1,
            abstol: 1e-6,
            reltol: 1e-6,
            lambda: 1.0,
            lambda_x: 1.0,
            lambda_z: 1.0,
            k_supp: 20,
            lambda_reg: 1.0,
        }
    }

    pub fn admm_config(&self) -> AdmmConfig {
        AdmmConfig {
            lambda: self.lambda,
            lambda_x: self.lambda_x,
            lambda_z: self.lambda_z,
            l_weight: None,
            abstol: self.abstol,
            reltol: self.reltol,
            max_iter: self.iters,
            seed: self.seed,
        }
    }

    /// Error model implied by the knobs; each experiment admits exactly one
    /// error source.
    pub fn error_model(&self) -> Result<ErrorModelSpec, ExperimentError> {
        let knobs = [
            self.delta.map(|_| "--delta"),
            self.skip.map(|_| "--skip"),
            self.inner_tol.map(|_| "--inner-tol"),
        ];
        let set: Vec<&str> = knobs.into_iter().flatten().collect();
        if set.len() > 1 {
            return Err(ExperimentError::Config(format!(
                "error knobs are mutually exclusive, got {}",
                set.join(" and ")
            )));
        }
        let model = match (self.experiment, self.delta, self.skip, self.inner_tol) {
            (_, None, None, None) => ErrorModelSpec::none(),
            (Experiment::Lasso, Some(delta), None, None) => ErrorModelSpec::inject_gaussian(delta)
                .map_err(|e| ExperimentError::Config(e.to_string()))?,
            (Experiment::Lasso, ..) => {
                return Err(ExperimentError::Config(
                    "the lasso experiment only supports --delta".to_string(),
                ))
            }
            (Experiment::Ksupp, None, Some(skip), None) => ErrorModelSpec::perforate(skip)
                .map_err(|e| ExperimentError::Config(e.to_string()))?,
            (Experiment::Ksupp, None, None, Some(tol)) => ErrorModelSpec::inner_tol(tol)
                .map_err(|e| ExperimentError::Config(e.to_string()))?,
            (Experiment::Ksupp, ..) => {
                return Err(ExperimentError::Config(
                    "the ksupp experiment supports --skip or --inner-tol".to_string(),
                ))
            }
        };
        Ok(model)
    }

    pub fn problem(&self) -> Result<ProblemSpec, ExperimentError> {
        if self.gamma <= 0.0 {
            return Err(ExperimentError::Config("gamma must be positive".to_string()));
        }
        match self.experiment {
            Experiment::Lasso => gen_lasso(self.m, self.n, self.seed),
            Experiment::Ksupp => gen_ksupp(self.m, self.n, self.k_supp, self.lambda_reg, self.seed),
        }
    }
}

/// Standard-normal data matrix rescaled below unit spectral norm, plus a
/// standard-normal right-hand side. Stream 0 of the seed is reserved for
/// data generation.
fn synthetic_data(m: usize, n: usize, seed: u64) -> Result<(DenseMatrix, DenseVector), ExperimentError> {
    if m == 0 || n == 0 {
        return Err(ExperimentError::Config(
            "dimensions m and n must be positive".to_string(),
        ));
    }
    let mut rng = SeededRng::with_stream(seed, 0);
    let raw = DenseMatrix::from_fn(m, n, |_, _| rng.standard_normal());
    let a = raw.scaled(1.0 / (spectral_norm(&raw) * (1.0 + DATA_SCALE_MARGIN)));
    let b = rng.normal_vector(m);
    Ok((a, b))
}

/// LASSO consensus instance:
/// `min ||A x - b||^2 + ||z||_1  s.t.  x - z = 0`.
pub fn gen_lasso(m: usize, n: usize, seed: u64) -> Result<ProblemSpec, ExperimentError> {
    let (a, b) = synthetic_data(m, n, seed)?;
    ProblemSpec::new(
        ProxTerm::quadratic_ls(a, b).map_err(ExperimentError::stage("generate"))?,
        ProxTerm::l1(1.0).map_err(ExperimentError::stage("generate"))?,
        DenseMatrix::identity(n),
        DenseMatrix::identity(n).scaled(-1.0),
        DenseVector::zeros(n),
    )
    .map_err(ExperimentError::stage("generate"))
}

/// Robust regression with squared k-support regularization:
/// `min 1/2 ||A x - b||_1 + (lambda_reg/2)(||z||_k^sp)^2  s.t.  x - z = 0`.
pub fn gen_ksupp(
    m: usize,
    n: usize,
    k_supp: usize,
    lambda_reg: f64,
    seed: u64,
) -> Result<ProblemSpec, ExperimentError> {
    if k_supp == 0 || k_supp > n {
        return Err(ExperimentError::Config(format!(
            "k_supp must lie in [1, {n}], got {k_supp}"
        )));
    }
    let (a, b) = synthetic_data(m, n, seed)?;
    ProblemSpec::new(
        ProxTerm::l1_affine(a, b, 0.5).map_err(ExperimentError::stage("generate"))?,
        ProxTerm::ksupport_sq(k_supp, lambda_reg).map_err(ExperimentError::stage("generate"))?,
        DenseMatrix::identity(n),
        DenseMatrix::identity(n).scaled(-1.0),
        DenseVector::zeros(n),
    )
    .map_err(ExperimentError::stage("generate"))
}

/// Full protocol: high-accuracy reference, perturbed shadow run, bound
/// series, empirical probability, report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let problem = cfg.problem()?;
    let model = cfg.error_model()?;
    let admm_cfg = cfg.admm_config();

    let reference =
        engine::reference_solution(&problem, &admm_cfg).map_err(ExperimentError::stage("reference"))?;
    let trace = engine::run(&problem, &admm_cfg, &model, RunMode::Shadow)
        .map_err(ExperimentError::stage("run"))?;
    let ops = engine::precompute(&problem, &admm_cfg).map_err(ExperimentError::stage("run"))?;

    let eps0 = eps0_estimate(&model, &trace.eps_pairs());
    let series = certify::bound_series(
        &trace,
        &reference,
        &ops,
        &admm_cfg,
        cfg.gamma,
        eps0,
        BoundMode::Nonconvex,
    )
    .map_err(ExperimentError::stage("certify"))?;
    let verification = certify::empirical_probability(&series.f_gap, &series.bound_prob, cfg.gamma)
        .map_err(ExperimentError::stage("certify"))?;

    let rows: Vec<ReportRow> = (0..trace.len())
        .map(|k| {
            let rec = &trace.records[k];
            ReportRow {
                k,
                f_gap: series.f_gap[k],
                lhs_avg: series.lhs_avg[k],
                bound_free: series.bound_free[k],
                bound_det: series.bound_det[k],
                bound_prob: series.bound_prob[k],
                eps_g: rec.eps_g,
                eps_h: rec.eps_h,
                primal_res: rec.primal_res,
                dual_res: rec.dual_res,
            }
        })
        .collect();

    Ok(RunReport {
        config: cfg.clone(),
        rows,
        summary: Summary {
            n: verification.n,
            gamma: cfg.gamma,
            p_empirical: verification.p_empirical,
            p_lower_4: verification.p_lower_4,
            p_lower_2: verification.p_lower_2,
            eps0,
            d0: series.d0,
            f_star: reference.f_star,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use inexact_admm::engine::precompute;
    use inexact_admm::prox::ProxTermKind;

    fn small_lasso_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Experiment::Lasso);
        cfg.m = 30;
        cfg.n = 8;
        cfg.iters = 60;
        cfg.abstol = 0.0;
        cfg.reltol = 0.0;
        cfg
    }

    #[test]
    fn lasso_constraints_encode_consensus() {
        let p = gen_lasso(20, 6, 3).unwrap();
        assert_eq!(p.a.sub(&DenseMatrix::identity(6)).max_abs(), 0.0);
        assert_eq!(p.b_mat.add(&DenseMatrix::identity(6)).max_abs(), 0.0);
        assert_eq!(p.c.norm(), 0.0);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let p1 = gen_lasso(15, 5, 9).unwrap();
        let p2 = gen_lasso(15, 5, 9).unwrap();
        match (&p1.g.kind, &p2.g.kind) {
            (ProxTermKind::QuadraticLS { a: a1, b: b1 }, ProxTermKind::QuadraticLS { a: a2, b: b2 }) => {
                assert_eq!(a1, a2);
                assert_eq!(b1, b2);
            }
            _ => panic!("unexpected term"),
        }
        let k1 = gen_ksupp(15, 6, 3, 1.0, 9).unwrap();
        let k2 = gen_ksupp(15, 6, 3, 1.0, 9).unwrap();
        match (&k1.g.kind, &k2.g.kind) {
            (ProxTermKind::L1Affine { a: a1, .. }, ProxTermKind::L1Affine { a: a2, .. }) => {
                assert_eq!(a1, a2);
            }
            _ => panic!("unexpected term"),
        }
    }

    #[test]
    fn generated_instance_passes_the_step_gate() {
        let cfg = small_lasso_cfg();
        let p = cfg.problem().unwrap();
        assert!(precompute(&p, &cfg.admm_config()).is_ok());
    }

    #[test]
    fn ksupp_at_full_support_is_ridge() {
        let p = gen_ksupp(12, 5, 5, 2.0, 4).unwrap();
        match &p.h.kind {
            ProxTermKind::KSupportSq { k_supp, weight } => {
                assert_eq!(*k_supp, 5);
                assert_eq!(*weight, 2.0);
            }
            _ => panic!("unexpected term"),
        }
        // value check: k = dim makes the term (w/2)||z||^2
        let z = DenseVector::new(vec![1.0, -2.0, 0.5, 0.0, 3.0]).unwrap();
        assert!((p.h.eval(&z) - 1.0 * z.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_knob_combinations() {
        let mut cfg = small_lasso_cfg();
        cfg.skip = Some(2);
        assert_eq!(cfg.error_model().unwrap_err().exit_code(), 2);

        let mut cfg = ExperimentConfig::new(Experiment::Ksupp);
        cfg.skip = Some(2);
        cfg.inner_tol = Some(1e-3);
        assert!(matches!(cfg.error_model(), Err(ExperimentError::Config(_))));

        let mut cfg = ExperimentConfig::new(Experiment::Ksupp);
        cfg.k_supp = 200;
        cfg.n = 100;
        assert!(cfg.problem().is_err());
    }

    #[test]
    fn run_experiment_produces_consistent_report() {
        let mut cfg = small_lasso_cfg();
        cfg.delta = Some(0.2);
        cfg.gamma = gamma_2_sqrt_log2();
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), report.summary.n);
        let recount = report
            .rows
            .iter()
            .filter(|r| r.f_gap < r.bound_prob)
            .count() as f64
            / report.rows.len() as f64;
        assert_eq!(Some(recount), report.summary.p_empirical);
        // error model bound: per-iteration eps within the finalized cap
        for row in &report.rows {
            assert!(row.eps_g <= report.summary.eps0 + 1e-15);
            assert!(row.eps_h <= report.summary.eps0 + 1e-15);
        }
    }
}
