//! Per-iteration convergence certificates and their empirical verification.
//!
//! Three bound families are evaluated against a high-accuracy reference
//! solution:
//! - the error-free rate `D0 / (2(k+1))` with
//!   `D0 = ||x0 - x*||^2_{Sigma1} + ||z0 - z*||^2`,
//! - deterministic bounds that add the accumulated prox errors and the
//!   current residual products (nonconvex form) or their backward-error
//!   relaxations (convex form),
//! - probabilistic bounds that replace the error sums with their running
//!   means plus a Hoeffding slack `gamma * eps0 / sqrt(k+1)`, holding with
//!   probability at least `1 - 4 exp(-gamma^2/2)`.
//!
//! Two comparisons are kept side by side: the theorem-faithful one (running
//! average of the objective gap plus the dual cross term against the
//! bounds) and the plotted one (`f^k - f*` against the probabilistic bound)
//! which also defines the empirical probability `p`.

use crate::engine::{AdmmConfig, PrecomputedOperators, Trace};
use crate::error::{Error, Result};
use crate::numerics::dense::{spectral_norm, weighted_norm_sq, DenseVector};
use crate::problem::ProblemSpec;

/// High-accuracy solution used as the comparison point of every bound.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x_star: DenseVector,
    pub z_star: DenseVector,
    pub f_star: f64,
    pub provenance: String,
}

/// Which residual handling a bound uses: the nonconvex form keeps the
/// measured residual products, the convex form relaxes them through the
/// backward prox-error lemma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    Nonconvex,
    Convex,
}

/// All per-iteration series and constants needed to plot or verify a run.
#[derive(Debug, Clone)]
pub struct BoundSeries {
    pub lhs_avg: Vec<f64>,
    pub f_gap: Vec<f64>,
    pub bound_free: Vec<f64>,
    pub bound_det: Vec<f64>,
    pub bound_prob: Vec<f64>,
    pub d0: f64,
    pub gamma: f64,
    pub eps0: f64,
    pub mean_eps_g: f64,
    pub mean_eps_h: f64,
}

/// Outcome of the paper-protocol probability check.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub n: usize,
    pub gamma: f64,
    /// `#[f_gap < B] / N`; undefined for an empty run.
    pub p_empirical: Option<f64>,
    pub p_lower_4: f64,
    pub p_lower_2: f64,
    pub satisfied: Vec<bool>,
}

/// `D0 = ||x0 - x*||^2_{Sigma1} + ||z0 - z*||^2`.
pub fn d0(trace: &Trace, reference: &ReferenceSolution, ops: &PrecomputedOperators) -> Result<f64> {
    let dx = trace.x0.sub(&reference.x_star);
    let dz = trace.z0.sub(&reference.z_star);
    Ok(weighted_norm_sq(&dx, &ops.sigma1)? + dz.norm_sq())
}

/// `f(x^{k+1}, z^{k+1}) - f*` per iteration.
pub fn f_gap_series(trace: &Trace, reference: &ReferenceSolution) -> Vec<f64> {
    trace
        .records
        .iter()
        .map(|r| r.f_value - reference.f_star)
        .collect()
}

fn cross_terms(trace: &Trace, cfg: &AdmmConfig, ops: &PrecomputedOperators) -> Vec<f64> {
    (0..trace.len())
        .map(|k| {
            let rec = &trace.records[k];
            let dv = rec.v.sub(trace.v_before(k));
            ops.l.matvec(&rec.u).dot(&dv) / cfg.lambda
        })
        .collect()
}

/// Running average of the suboptimality plus the dual cross term:
/// `(1/(k+1)) sum_i [f(x^{i+1}, z^{i+1}) - f*]
///  + (1/(k+1)) sum_i <(1/lambda) L u^{i+1}, v^{i+1} - v^i>`.
pub fn lhs_running(
    trace: &Trace,
    cfg: &AdmmConfig,
    ops: &PrecomputedOperators,
    reference: &ReferenceSolution,
) -> Result<Vec<f64>> {
    let cross = cross_terms(trace, cfg, ops);
    let mut out = Vec::with_capacity(trace.len());
    let mut sum = 0.0;
    for (k, rec) in trace.records.iter().enumerate() {
        sum += rec.f_value - reference.f_star + cross[k];
        out.push(sum / (k as f64 + 1.0));
    }
    Ok(out)
}

/// Error-free rate `D0 / (2(k+1))`.
pub fn bound_free_series(n: usize, d0: f64) -> Vec<f64> {
    (0..n).map(|k| d0 / (2.0 * (k as f64 + 1.0))).collect()
}

struct TraceQuantities {
    cum_eps_g: Vec<f64>,
    cum_eps_h: Vec<f64>,
    dist_x: Vec<f64>,
    dist_z: Vec<f64>,
}

fn trace_quantities(trace: &Trace, reference: &ReferenceSolution) -> TraceQuantities {
    let mut cum_eps_g = Vec::with_capacity(trace.len());
    let mut cum_eps_h = Vec::with_capacity(trace.len());
    let (mut sg, mut sh) = (0.0, 0.0);
    for r in &trace.records {
        sg += r.eps_g;
        sh += r.eps_h;
        cum_eps_g.push(sg);
        cum_eps_h.push(sh);
    }
    TraceQuantities {
        cum_eps_g,
        cum_eps_h,
        dist_x: trace
            .records
            .iter()
            .map(|r| r.x.sub(&reference.x_star).norm())
            .collect(),
        dist_z: trace
            .records
            .iter()
            .map(|r| r.z.sub(&reference.z_star).norm())
            .collect(),
    }
}

fn residual_products(
    trace: &Trace,
    q: &TraceQuantities,
    ops: &PrecomputedOperators,
    mode: BoundMode,
) -> Result<Vec<f64>> {
    match mode {
        BoundMode::Nonconvex => (0..trace.len())
            .map(|k| {
                let shadow = trace.records[k].shadow.as_ref().ok_or_else(|| {
                    Error::MissingShadowData {
                        context: "nonconvex bound needs residual vectors from shadow mode"
                            .to_string(),
                    }
                })?;
                Ok(shadow.sigma1_rx_norm * q.dist_x[k] + shadow.rz_norm * q.dist_z[k])
            })
            .collect(),
        BoundMode::Convex => {
            let s1_sq = spectral_norm(&ops.sigma1).powi(2);
            Ok((0..trace.len())
                .map(|k| {
                    let rec = &trace.records[k];
                    (2.0 * rec.eps_h).sqrt() * q.dist_z[k]
                        + (2.0 * s1_sq * rec.eps_g).sqrt() * q.dist_x[k]
                })
                .collect())
        }
    }
}

/// Deterministic bound series. Nonconvex form:
/// `D0/(2(k+1)) + (1/(k+1)) [sum eps_g + sum eps_h
///  + ||Sigma1 r_x^{k+1}|| ||x^{k+1} - x*|| + ||r_z^{k+1}|| ||z^{k+1} - z*||]`;
/// the convex form replaces the residual products by
/// `sqrt(2 eps_h^{k+1}) ||z^{k+1} - z*||
///  + sqrt(2 lmax(Sigma1'Sigma1) eps_g^{k+1}) ||x^{k+1} - x*||`.
pub fn bound_deterministic(
    trace: &Trace,
    reference: &ReferenceSolution,
    ops: &PrecomputedOperators,
    _cfg: &AdmmConfig,
    mode: BoundMode,
) -> Result<Vec<f64>> {
    let d0 = d0(trace, reference, ops)?;
    let q = trace_quantities(trace, reference);
    let products = residual_products(trace, &q, ops, mode)?;
    Ok((0..trace.len())
        .map(|k| {
            let kf = k as f64 + 1.0;
            d0 / (2.0 * kf) + (q.cum_eps_g[k] + q.cum_eps_h[k] + products[k]) / kf
        })
        .collect())
}

/// Probabilistic bound series
/// `B(gamma, k) = mean(eps_g) + mean(eps_h)
///  + (1/(2(k+1))) [D0 + residual products] + (gamma/sqrt(k+1)) eps0`,
/// with the residual products per mode (the convex form doubles the
/// backward-error terms). Running means estimate the stationary error
/// expectations; `eps0` is the finalized almost-sure cap.
pub fn bound_probabilistic(
    trace: &Trace,
    reference: &ReferenceSolution,
    ops: &PrecomputedOperators,
    _cfg: &AdmmConfig,
    gamma: f64,
    eps0: f64,
    mode: BoundMode,
) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::param("gamma must be positive"));
    }
    let d0 = d0(trace, reference, ops)?;
    let q = trace_quantities(trace, reference);
    let products = residual_products(trace, &q, ops, mode)?;
    let factor = match mode {
        BoundMode::Nonconvex => 1.0,
        BoundMode::Convex => 2.0,
    };
    Ok((0..trace.len())
        .map(|k| {
            let kf = k as f64 + 1.0;
            let mean_eps = (q.cum_eps_g[k] + q.cum_eps_h[k]) / kf;
            mean_eps + (d0 + factor * products[k]) / (2.0 * kf) + gamma * eps0 / kf.sqrt()
        })
        .collect())
}

/// General-pair left-hand side: running average of `f - f(x, z)` plus the
/// dual cross term, for any feasible `(x, z)`.
pub fn lhs_general(
    trace: &Trace,
    problem: &ProblemSpec,
    cfg: &AdmmConfig,
    ops: &PrecomputedOperators,
    x: &DenseVector,
    z: &DenseVector,
) -> Result<Vec<f64>> {
    check_feasible(problem, x, z)?;
    let f_ref = problem.objective(x, z);
    let cross = cross_terms(trace, cfg, ops);
    let mut out = Vec::with_capacity(trace.len());
    let mut sum = 0.0;
    for (k, rec) in trace.records.iter().enumerate() {
        sum += rec.f_value - f_ref + cross[k];
        out.push(sum / (k as f64 + 1.0));
    }
    Ok(out)
}

/// General-pair right-hand side (signed residual inner products, no
/// Cauchy-Schwarz):
/// `D0(x,z)/(2(k+1)) + (1/(k+1)) [sum eps_g + sum eps_h
///  - <Sigma1 r_x^{k+1}, x^{k+1} - x> - <r_z^{k+1}, z^{k+1} - z>]`.
pub fn bound_general(
    trace: &Trace,
    problem: &ProblemSpec,
    _cfg: &AdmmConfig,
    ops: &PrecomputedOperators,
    x: &DenseVector,
    z: &DenseVector,
) -> Result<Vec<f64>> {
    check_feasible(problem, x, z)?;
    let d0_pair =
        weighted_norm_sq(&trace.x0.sub(x), &ops.sigma1)? + trace.z0.sub(z).norm_sq();
    let mut cum_eps = 0.0;
    (0..trace.len())
        .map(|k| {
            let rec = &trace.records[k];
            let shadow = rec
                .shadow
                .as_ref()
                .ok_or_else(|| Error::MissingShadowData {
                    context: "general bound needs residual vectors from shadow mode".to_string(),
                })?;
            cum_eps += rec.eps_g + rec.eps_h;
            let kf = k as f64 + 1.0;
            let signed = ops.sigma1.matvec(&shadow.r_x).dot(&rec.x.sub(x))
                + shadow.r_z.dot(&rec.z.sub(z));
            Ok(d0_pair / (2.0 * kf) + (cum_eps - signed) / kf)
        })
        .collect()
}

fn check_feasible(problem: &ProblemSpec, x: &DenseVector, z: &DenseVector) -> Result<()> {
    let residual = problem.constraint_residual(x, z).norm();
    if residual > 1e-8 {
        return Err(Error::InfeasiblePair { residual });
    }
    Ok(())
}

/// Additive Hoeffding slack `gamma sqrt(k+1) eps0 / 2` on the error sum.
pub fn hoeffding_sum_bound(k: usize, eps0: f64, gamma: f64) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive");
    assert!(eps0 >= 0.0, "eps0 must be nonnegative");
    gamma * (k as f64 + 1.0).sqrt() * eps0 / 2.0
}

/// Paper protocol: `p = #[(f^k - f*) < B(gamma, k)] / N`, with the
/// theoretical floors `1 - 4 exp(-gamma^2/2)` and `1 - 2 exp(-gamma^2/2)`.
pub fn empirical_probability(
    f_gap: &[f64],
    bound: &[f64],
    gamma: f64,
) -> Result<VerificationReport> {
    if f_gap.len() != bound.len() {
        return Err(Error::LengthMismatch {
            left: f_gap.len(),
            right: bound.len(),
        });
    }
    let satisfied: Vec<bool> = f_gap.iter().zip(bound).map(|(f, b)| f < b).collect();
    let n = satisfied.len();
    let p_empirical = if n == 0 {
        None
    } else {
        Some(satisfied.iter().filter(|&&s| s).count() as f64 / n as f64)
    };
    let tail = (-gamma * gamma / 2.0).exp();
    Ok(VerificationReport {
        n,
        gamma,
        p_empirical,
        p_lower_4: 1.0 - 4.0 * tail,
        p_lower_2: 1.0 - 2.0 * tail,
        satisfied,
    })
}

/// Assembles every series a report needs from one shadow-mode run.
pub fn bound_series(
    trace: &Trace,
    reference: &ReferenceSolution,
    ops: &PrecomputedOperators,
    cfg: &AdmmConfig,
    gamma: f64,
    eps0: f64,
    mode: BoundMode,
) -> Result<BoundSeries> {
    let d0_val = d0(trace, reference, ops)?;
    let n = trace.len();
    let pairs = trace.eps_pairs();
    let (sum_g, sum_h) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(g, h)| (a + g, b + h));
    Ok(BoundSeries {
        lhs_avg: lhs_running(trace, cfg, ops, reference)?,
        f_gap: f_gap_series(trace, reference),
        bound_free: bound_free_series(n, d0_val),
        bound_det: bound_deterministic(trace, reference, ops, cfg, mode)?,
        bound_prob: bound_probabilistic(trace, reference, ops, cfg, gamma, eps0, mode)?,
        d0: d0_val,
        gamma,
        eps0,
        mean_eps_g: if n == 0 { 0.0 } else { sum_g / n as f64 },
        mean_eps_h: if n == 0 { 0.0 } else { sum_h / n as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{precompute, run, AdmmConfig, RunMode};
    use crate::numerics::dense::DenseMatrix;
    use crate::numerics::SeededRng;
    use crate::perturb::{eps0_estimate, ErrorModelSpec};
    use crate::problem::ProblemSpec;
    use crate::prox::{soft_threshold, ProxTerm};

    fn lasso_problem(m: usize, n: usize, seed: u64) -> ProblemSpec {
        let mut rng = SeededRng::new(seed);
        let raw = DenseMatrix::from_fn(m, n, |_, _| rng.standard_normal());
        let a_data = raw.scaled(1.0 / (spectral_norm(&raw) * 1.05));
        let b = rng.normal_vector(m);
        ProblemSpec::new(
            ProxTerm::quadratic_ls(a_data, b).unwrap(),
            ProxTerm::l1(1.0).unwrap(),
            DenseMatrix::identity(n),
            DenseMatrix::identity(n).scaled(-1.0),
            DenseVector::zeros(n),
        )
        .unwrap()
    }

    fn exact_shadow_run(m: usize, n: usize, seed: u64, iters: usize) -> (ProblemSpec, AdmmConfig, Trace) {
        let problem = lasso_problem(m, n, seed);
        let cfg = AdmmConfig {
            max_iter: iters,
            abstol: 0.0,
            reltol: 0.0,
            seed,
            ..AdmmConfig::default()
        };
        let trace = run(&problem, &cfg, &ErrorModelSpec::none(), RunMode::Shadow).unwrap();
        (problem, cfg, trace)
    }

    #[test]
    fn lhs_stays_near_zero_at_a_fixed_point() {
        // Identity-data LASSO has the closed-form fixed point
        // x* = z* = soft(b, 1/2), v* = 2 lambda (b - x*). Starting the run
        // at that point keeps every iterate there, so the series is ~0.
        let n = 6;
        let mut rng = SeededRng::new(5);
        let b = rng.normal_vector(n).scaled(2.0);
        let problem = ProblemSpec::new(
            ProxTerm::quadratic_ls(DenseMatrix::identity(n), b.clone()).unwrap(),
            ProxTerm::l1(1.0).unwrap(),
            DenseMatrix::identity(n),
            DenseMatrix::identity(n).scaled(-1.0),
            DenseVector::zeros(n),
        )
        .unwrap();
        let cfg = AdmmConfig {
            max_iter: 20,
            abstol: 0.0,
            reltol: 0.0,
            ..AdmmConfig::default()
        };
        let ops = precompute(&problem, &cfg).unwrap();
        let x_star = DenseVector::from_fn(n, |i| soft_threshold(b[i], 0.5));
        let v_star = DenseVector::from_fn(n, |i| {
            2.0 * cfg.lambda * (b[i] - x_star[i])
        });
        let f_star = problem.objective(&x_star, &x_star);
        let reference = ReferenceSolution {
            x_star: x_star.clone(),
            z_star: x_star.clone(),
            f_star,
            provenance: "analytic".to_string(),
        };
        let trace = crate::engine::run_from(
            &problem,
            &cfg,
            &ErrorModelSpec::none(),
            RunMode::Shadow,
            x_star.clone(),
            x_star.clone(),
            v_star,
        )
        .unwrap();
        let lhs = lhs_running(&trace, &cfg, &ops, &reference).unwrap();
        for (k, v) in lhs.iter().enumerate() {
            assert!(v.abs() <= 1e-10, "k={k}: {v}");
        }
    }

    #[test]
    fn lhs_first_entry_matches_definition() {
        let (problem, cfg, trace) = exact_shadow_run(12, 5, 9, 5);
        let ops = precompute(&problem, &cfg).unwrap();
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let lhs = lhs_running(&trace, &cfg, &ops, &reference).unwrap();
        let rec = &trace.records[0];
        let dv = rec.v.sub(&trace.v0);
        let want = rec.f_value - reference.f_star + ops.l.matvec(&rec.u).dot(&dv) / cfg.lambda;
        assert!((lhs[0] - want).abs() < 1e-12);
    }

    #[test]
    fn lhs_matches_straight_line_recomputation() {
        let (problem, cfg, trace) = exact_shadow_run(10, 5, 13, 10);
        let ops = precompute(&problem, &cfg).unwrap();
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let lhs = lhs_running(&trace, &cfg, &ops, &reference).unwrap();
        // Independent recomputation, one k at a time from scratch.
        for k in 0..trace.len() {
            let mut total = 0.0;
            for i in 0..=k {
                let rec = &trace.records[i];
                let v_prev = if i == 0 { &trace.v0 } else { &trace.records[i - 1].v };
                let dv = rec.v.sub(v_prev);
                let cross: f64 = (0..rec.u.dim())
                    .map(|j| ops.l.matvec(&rec.u)[j] * dv[j] / cfg.lambda)
                    .sum();
                total += rec.f_value - reference.f_star + cross;
            }
            let want = total / (k as f64 + 1.0);
            assert!((lhs[k] - want).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn zero_error_collapse_and_rate_identity() {
        let (problem, cfg, trace) = exact_shadow_run(14, 6, 17, 40);
        let ops = precompute(&problem, &cfg).unwrap();
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let d0_val = d0(&trace, &reference, &ops).unwrap();
        let free = bound_free_series(trace.len(), d0_val);
        let det = bound_deterministic(&trace, &reference, &ops, &cfg, BoundMode::Nonconvex).unwrap();
        let prob =
            bound_probabilistic(&trace, &reference, &ops, &cfg, 3.0, 0.0, BoundMode::Nonconvex)
                .unwrap();
        for k in 0..trace.len() {
            assert!((det[k] - free[k]).abs() <= 1e-12 * free[k].abs().max(1e-300));
            assert!((prob[k] - free[k]).abs() <= 1e-12 * free[k].abs().max(1e-300));
            // (k+1) * bound_free is constant
            let prod = free[k] * (k as f64 + 1.0);
            assert!((prod - d0_val / 2.0).abs() <= 1e-12 * (d0_val / 2.0));
        }
    }

    #[test]
    fn convex_mode_dominates_nonconvex_mode() {
        let problem = lasso_problem(16, 7, 19);
        let cfg = AdmmConfig {
            max_iter: 60,
            abstol: 0.0,
            reltol: 0.0,
            seed: 4,
            ..AdmmConfig::default()
        };
        let model = ErrorModelSpec::inject_gaussian(0.4).unwrap();
        let trace = run(&problem, &cfg, &model, RunMode::Shadow).unwrap();
        let ops = precompute(&problem, &cfg).unwrap();
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let ncx = bound_deterministic(&trace, &reference, &ops, &cfg, BoundMode::Nonconvex).unwrap();
        let cvx = bound_deterministic(&trace, &reference, &ops, &cfg, BoundMode::Convex).unwrap();
        for k in 0..trace.len() {
            assert!(cvx[k] >= ncx[k] - 1e-10, "k={k}: {} vs {}", cvx[k], ncx[k]);
        }
    }

    #[test]
    fn probabilistic_gamma_term_is_linear() {
        let (problem, cfg, trace) = exact_shadow_run(12, 6, 23, 30);
        let ops = precompute(&problem, &cfg).unwrap();
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let eps0 = 0.37;
        let b1 =
            bound_probabilistic(&trace, &reference, &ops, &cfg, 1.5, eps0, BoundMode::Nonconvex)
                .unwrap();
        let b2 =
            bound_probabilistic(&trace, &reference, &ops, &cfg, 3.0, eps0, BoundMode::Nonconvex)
                .unwrap();
        for k in 0..trace.len() {
            let slack1 = 1.5 * eps0 / (k as f64 + 1.0).sqrt();
            let diff = b2[k] - b1[k];
            assert!((diff - slack1).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn probabilistic_bound_monotone_in_gamma() {
        let (problem, cfg, trace) = exact_shadow_run(12, 6, 29, 25);
        let ops = precompute(&problem, &cfg).unwrap();
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let lo = bound_probabilistic(&trace, &reference, &ops, &cfg, 1.0, 0.2, BoundMode::Nonconvex)
            .unwrap();
        let hi = bound_probabilistic(&trace, &reference, &ops, &cfg, 2.5, 0.2, BoundMode::Nonconvex)
            .unwrap();
        for k in 0..trace.len() {
            assert!(hi[k] >= lo[k]);
        }
    }

    #[test]
    fn general_bound_specializes_and_signed_below_cauchy_schwarz() {
        let problem = lasso_problem(14, 6, 31);
        let cfg = AdmmConfig {
            max_iter: 50,
            abstol: 0.0,
            reltol: 0.0,
            seed: 6,
            ..AdmmConfig::default()
        };
        let model = ErrorModelSpec::inject_gaussian(0.3).unwrap();
        let trace = run(&problem, &cfg, &model, RunMode::Shadow).unwrap();
        let ops = precompute(&problem, &cfg).unwrap();
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let signed = bound_general(
            &trace,
            &problem,
            &cfg,
            &ops,
            &reference.x_star,
            &reference.z_star,
        )
        .unwrap();
        let cs = bound_deterministic(&trace, &reference, &ops, &cfg, BoundMode::Nonconvex).unwrap();
        for k in 0..trace.len() {
            assert!(signed[k] <= cs[k] + 1e-10, "k={k}");
        }
    }

    #[test]
    fn general_bound_refuses_infeasible_pair() {
        let (problem, cfg, trace) = exact_shadow_run(10, 5, 37, 5);
        let ops = precompute(&problem, &cfg).unwrap();
        let x = DenseVector::from_fn(5, |i| i as f64 + 1.0);
        let z = DenseVector::zeros(5);
        assert!(matches!(
            bound_general(&trace, &problem, &cfg, &ops, &x, &z),
            Err(Error::InfeasiblePair { .. })
        ));
    }

    #[test]
    fn theorem_one_holds_on_random_feasible_pairs() {
        // x = z is feasible for the consensus constraint.
        for seed in 0..20u64 {
            let problem = lasso_problem(12, 5, 100 + seed);
            let cfg = AdmmConfig {
                max_iter: 40,
                abstol: 0.0,
                reltol: 0.0,
                seed,
                ..AdmmConfig::default()
            };
            let model = ErrorModelSpec::inject_gaussian(0.2).unwrap();
            let trace = run(&problem, &cfg, &model, RunMode::Shadow).unwrap();
            let ops = precompute(&problem, &cfg).unwrap();
            let mut rng = SeededRng::with_stream(seed, 9);
            let pair = rng.normal_vector(5);
            let lhs = lhs_general(&trace, &problem, &cfg, &ops, &pair, &pair).unwrap();
            let rhs = bound_general(&trace, &problem, &cfg, &ops, &pair, &pair).unwrap();
            for k in 0..trace.len() {
                assert!(
                    lhs[k] <= rhs[k] + 1e-9,
                    "seed {seed} k={k}: lhs {} rhs {}",
                    lhs[k],
                    rhs[k]
                );
            }
        }
    }

    #[test]
    fn empirical_probability_extremes() {
        let f_gap = vec![0.3, 0.1, 0.5];
        let plus_inf = vec![f64::INFINITY; 3];
        let minus_inf = vec![f64::NEG_INFINITY; 3];
        let p = empirical_probability(&f_gap, &plus_inf, 2.0).unwrap();
        assert_eq!(p.p_empirical, Some(1.0));
        let p = empirical_probability(&f_gap, &minus_inf, 2.0).unwrap();
        assert_eq!(p.p_empirical, Some(0.0));
        assert!(empirical_probability(&f_gap, &[1.0], 2.0).is_err());
    }

    #[test]
    fn empirical_probability_floors() {
        // gamma = 2 sqrt(log 2): exp(-gamma^2/2) = 1/4.
        let gamma = 2.0 * (2.0_f64.ln()).sqrt();
        let p = empirical_probability(&[], &[], gamma).unwrap();
        assert_eq!(p.p_empirical, None);
        assert!((p.p_lower_4 - 0.0).abs() < 1e-12);
        assert!((p.p_lower_2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hoeffding_sum_bound_values() {
        assert_eq!(hoeffding_sum_bound(10, 0.0, 2.0), 0.0);
        // k = 3, eps0 = 1, gamma = 2: 2 sqrt(4) / 2 = 2
        assert!((hoeffding_sum_bound(3, 1.0, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn hoeffding_slack_monte_carlo_frequency() {
        // i.i.d. uniform[0, eps0] sums exceed (k+1) mean + slack in at most
        // 2 exp(-gamma^2/2) + 0.01 of trials.
        let eps0 = 1.0;
        let k = 49usize;
        let trials = 10_000;
        for gamma in [1.0, 2.0, 3.0] {
            let mut rng = SeededRng::new(911 + gamma as u64);
            let slack = hoeffding_sum_bound(k, eps0, gamma);
            let mut violations = 0;
            for _ in 0..trials {
                let sum: f64 = (0..=k).map(|_| rng.uniform_01() * eps0).sum();
                if sum > (k as f64 + 1.0) * (eps0 / 2.0) + slack {
                    violations += 1;
                }
            }
            let rate = violations as f64 / trials as f64;
            let cap = 2.0 * (-gamma * gamma / 2.0).exp() + 0.01;
            assert!(rate <= cap, "gamma {gamma}: rate {rate} cap {cap}");
        }
    }

    #[test]
    fn theorem_faithful_deterministic_check_small_runs() {
        for seed in 1..=5u64 {
            let problem = lasso_problem(20, 8, 200 + seed);
            let cfg = AdmmConfig {
                max_iter: 150,
                abstol: 0.0,
                reltol: 0.0,
                seed,
                ..AdmmConfig::default()
            };
            let model = ErrorModelSpec::inject_gaussian(0.5).unwrap();
            let trace = run(&problem, &cfg, &model, RunMode::Shadow).unwrap();
            let ops = precompute(&problem, &cfg).unwrap();
            let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
            let lhs = lhs_running(&trace, &cfg, &ops, &reference).unwrap();
            let det =
                bound_deterministic(&trace, &reference, &ops, &cfg, BoundMode::Nonconvex).unwrap();
            for k in 0..trace.len() {
                assert!(
                    lhs[k] <= det[k] + 1e-9,
                    "seed {seed} k={k}: lhs {} det {}",
                    lhs[k],
                    det[k]
                );
            }
        }
    }

    #[test]
    fn jensen_consistency_on_convex_instances() {
        let (problem, cfg, trace) = exact_shadow_run(18, 7, 41, 80);
        let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
        let mut sum_x = DenseVector::zeros(problem.x_dim());
        let mut sum_z = DenseVector::zeros(problem.z_dim());
        let mut sum_f = 0.0;
        for (k, rec) in trace.records.iter().enumerate() {
            sum_x = sum_x.add(&rec.x);
            sum_z = sum_z.add(&rec.z);
            sum_f += rec.f_value;
            let kf = k as f64 + 1.0;
            let avg_f_gap = sum_f / kf - reference.f_star;
            let f_at_avg =
                problem.objective(&sum_x.scaled(1.0 / kf), &sum_z.scaled(1.0 / kf))
                    - reference.f_star;
            assert!(f_at_avg <= avg_f_gap + 1e-10, "k={k}");
        }
    }

    #[test]
    fn probabilistic_violations_within_theorem_frequency() {
        // Over many seeds, the fraction of iterations where the running LHS
        // exceeds B(gamma, k) must stay within 4 exp(-gamma^2/2) + 0.02.
        let gamma = 2.0_f64;
        let cap = 4.0 * (-gamma * gamma / 2.0).exp() + 0.02;
        let mut total = 0usize;
        let mut violations = 0usize;
        for seed in 0..20u64 {
            let problem = lasso_problem(14, 6, 300 + seed);
            let cfg = AdmmConfig {
                max_iter: 80,
                abstol: 0.0,
                reltol: 0.0,
                seed,
                ..AdmmConfig::default()
            };
            let model = ErrorModelSpec::inject_gaussian(0.3).unwrap();
            let trace = run(&problem, &cfg, &model, RunMode::Shadow).unwrap();
            let ops = precompute(&problem, &cfg).unwrap();
            let reference = crate::engine::reference_solution(&problem, &cfg).unwrap();
            let eps0 = eps0_estimate(&model, &trace.eps_pairs());
            let lhs = lhs_running(&trace, &cfg, &ops, &reference).unwrap();
            let prob = bound_probabilistic(
                &trace,
                &reference,
                &ops,
                &cfg,
                gamma,
                eps0,
                BoundMode::Nonconvex,
            )
            .unwrap();
            for k in 0..trace.len() {
                total += 1;
                if lhs[k] > prob[k] {
                    violations += 1;
                }
            }
        }
        let rate = violations as f64 / total as f64;
        assert!(rate <= cap, "violation rate {rate} vs cap {cap}");
    }
}
