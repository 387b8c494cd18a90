//! Shared numerical kernels: dense linear algebra, weighted norms, spectral
//! quantities, seeded sampling, and the Hoeffding tail used by the
//! probabilistic certificates.

pub mod dense;
pub mod rng;

pub use dense::{
    solve_spd, spectral_norm, weighted_norm_sq, CholeskyFactor, DenseMatrix, DenseVector,
};
pub use rng::SeededRng;

/// Two-sided Hoeffding tail for a sum of `k + 1` independent variables in
/// `[0, eps0]`: `min(1, 2 exp(-2 t^2 / ((k+1) eps0^2)))`.
///
/// With `eps0 = 0` the sum cannot deviate at all, so the tail is zero for
/// any positive `t`.
pub fn hoeffding_tail(k: usize, eps0: f64, t: f64) -> f64 {
    assert!(eps0 >= 0.0, "eps0 must be nonnegative");
    assert!(t > 0.0, "t must be positive");
    if eps0 == 0.0 {
        return 0.0;
    }
    let denom = (k as f64 + 1.0) * eps0 * eps0;
    (2.0 * (-2.0 * t * t / denom).exp()).min(1.0)
}
