//! Closed-form quantities for the linear-Gaussian selection model: the
//! expected maximum of standard normals, the optimal selection value, the
//! Best-of-N shrinkage, and the pessimistic-selection regret bound. These
//! serve as ground truth for the Monte-Carlo harness.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::tolerances;

/// Inputs to the closed-form oracles.
#[derive(Debug, Clone)]
pub struct TheoryInputs {
    /// Candidate count N.
    pub n: usize,
    /// ‖Σ^{1/2} θ*‖.
    pub sigma_theta_star_norm: f64,
    /// ‖Σ^{1/2} proj_{V⊥} θ̂‖.
    pub sigma_perp_theta_hat_norm: f64,
    /// trace(Σ · proj_{V⊥}).
    pub trace_sigma_perp: f64,
    /// Pessimism strength λ.
    pub lambda: f64,
    /// Uncertainty slack ε.
    pub epsilon: f64,
    /// Lower-envelope constant c ∈ (0, 1).
    pub c: f64,
}

/// E[max of n i.i.d. standard normals], by adaptive quadrature of the
/// order-statistics integral ∫ z·n·φ(z)·Φ(z)^{n−1} dz on [−10, 10].
/// The truncated tails contribute less than n·(10 + 1/10)·φ(10) ≈ n·8e-22,
/// far below the 1e-6 accuracy target.
pub fn expected_max_std_normal(n: usize) -> f64 {
    assert!(n >= 1, "n must be >= 1");
    if n == 1 {
        return 0.0;
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    let integrand = |z: f64| {
        let cdf = normal.cdf(z);
        z * n as f64 * normal.pdf(z) * cdf.powi(n as i32 - 1)
    };
    // Pre-split into half-unit panels before refining: for large n the mass
    // sits in a narrow band that a single coarse panel over [-10, 10] can
    // step right over, terminating the refinement spuriously.
    let panels = 40;
    let width = 20.0 / panels as f64;
    let tol = tolerances::QUADRATURE / panels as f64;
    (0..panels)
        .map(|i| {
            let a = -10.0 + i as f64 * width;
            adaptive_simpson(&integrand, a, a + width, tol)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// E[max_i r*(y_i)] = ‖Σ^{1/2} θ*‖ · M_N.
pub fn optimal_value(inputs: &TheoryInputs) -> f64 {
    inputs.sigma_theta_star_norm * expected_max_std_normal(inputs.n)
}

/// The corruption ratio ρ derived from the inputs.
fn rho(inputs: &TheoryInputs) -> Result<f64> {
    if inputs.sigma_theta_star_norm == 0.0 {
        return Err(Error::DegenerateReward);
    }
    Ok(inputs.sigma_perp_theta_hat_norm / inputs.sigma_theta_star_norm)
}

/// E[r*(y_î)] for BoN: optimal_value / √(1 + ρ²).
pub fn bon_value(inputs: &TheoryInputs) -> Result<f64> {
    let rho = rho(inputs)?;
    Ok(optimal_value(inputs) / (1.0 + rho * rho).sqrt())
}

/// optimal_value − bon_value = optimal_value · (1 − 1/√(1 + ρ²)).
pub fn bon_gap(inputs: &TheoryInputs) -> Result<f64> {
    let rho = rho(inputs)?;
    Ok(optimal_value(inputs) * (1.0 - 1.0 / (1.0 + rho * rho).sqrt()))
}

/// λ·(√(2/π · trace(Σ proj_{V⊥})) + 2ε). N-independent. The validity
/// condition λ ≥ ‖proj_{V⊥} θ̂‖/(1−c) is the caller's responsibility; the
/// bound is evaluated regardless.
pub fn pessimism_regret_bound(inputs: &TheoryInputs) -> Result<f64> {
    if inputs.epsilon < 0.0 {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be nonnegative, got {}", inputs.epsilon),
        });
    }
    if !(0.0..1.0).contains(&inputs.c) || inputs.c == 0.0 {
        return Err(Error::InvalidParameter {
            name: "c",
            reason: format!("must lie in (0, 1), got {}", inputs.c),
        });
    }
    let trace_term = (2.0 / std::f64::consts::PI * inputs.trace_sigma_perp).sqrt();
    Ok(inputs.lambda * (trace_term + 2.0 * inputs.epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn inputs(n: usize) -> TheoryInputs {
        TheoryInputs {
            n,
            sigma_theta_star_norm: 1.0,
            sigma_perp_theta_hat_norm: 1.0,
            trace_sigma_perp: 8.0,
            lambda: 0.5,
            epsilon: 0.01,
            c: 0.1,
        }
    }

    #[test]
    fn expected_max_small_n() {
        assert_eq!(expected_max_std_normal(1), 0.0);
        // M_2 = 1/sqrt(pi)
        assert_abs_diff_eq!(
            expected_max_std_normal(2),
            1.0 / std::f64::consts::PI.sqrt(),
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(expected_max_std_normal(10), 1.53875, epsilon = 1e-4);
        // independently computed reference value
        assert_abs_diff_eq!(expected_max_std_normal(10), 1.538752730835173, epsilon = 1e-7);
    }

    #[test]
    fn expected_max_monotone_and_bounded() {
        let mut prev = expected_max_std_normal(1);
        for n in 2..=64 {
            let m = expected_max_std_normal(n);
            assert!(m > prev, "M_N not increasing at n={n}");
            assert!(m <= (2.0 * (n as f64).ln()).sqrt(), "upper envelope at n={n}");
            prev = m;
        }
        for &n in &[16, 64, 256, 512, 1024] {
            let m = expected_max_std_normal(n);
            assert!(m >= (2.0 * (n as f64).ln()).sqrt() - 1.0, "lower envelope at n={n}");
        }
    }

    #[test]
    fn optimal_value_examples() {
        let mut i = inputs(10);
        i.sigma_theta_star_norm = 0.0;
        assert_eq!(optimal_value(&i), 0.0);
        i.sigma_theta_star_norm = 1.0;
        assert_abs_diff_eq!(optimal_value(&i), 1.53875, epsilon = 1e-4);
        i.sigma_theta_star_norm = 2.0;
        assert_abs_diff_eq!(optimal_value(&i), 2.0 * 1.53875, epsilon = 2e-4);
    }

    #[test]
    fn bon_value_examples() {
        // rho = 0: no gap
        let mut i = inputs(7);
        i.sigma_perp_theta_hat_norm = 0.0;
        assert_abs_diff_eq!(bon_value(&i).unwrap(), optimal_value(&i), epsilon = 1e-12);
        assert_abs_diff_eq!(bon_gap(&i).unwrap(), 0.0, epsilon = 1e-12);
        // rho = 1, n = 2
        let i = inputs(2);
        assert_abs_diff_eq!(bon_value(&i).unwrap(), 0.39894, epsilon = 1e-4);
        // relative gap independent of n at rho = 1
        for &n in &[2, 8, 64, 512] {
            let i = inputs(n);
            let rel = bon_gap(&i).unwrap() / optimal_value(&i);
            assert_abs_diff_eq!(rel, 1.0 - 1.0 / 2f64.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn bon_value_degenerate_rejected() {
        let mut i = inputs(4);
        i.sigma_theta_star_norm = 0.0;
        assert!(bon_value(&i).is_err());
    }

    #[test]
    fn bon_value_monotone_in_n_decreasing_in_rho() {
        let mut prev = 0.0;
        for &n in &[1, 2, 4, 8, 16] {
            let v = bon_value(&inputs(n)).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for &r in &[0.0, 0.5, 1.0, 2.0, 4.0] {
            let mut i = inputs(16);
            i.sigma_perp_theta_hat_norm = r;
            let v = bon_value(&i).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn regret_bound_examples() {
        let mut i = inputs(10);
        i.lambda = 0.0;
        assert_eq!(pessimism_regret_bound(&i).unwrap(), 0.0);
        // Sigma = I_10, k = 2 (trace 8), lambda = 0.5, eps = 0.01
        i.lambda = 0.5;
        assert_abs_diff_eq!(pessimism_regret_bound(&i).unwrap(), 1.1384, epsilon = 1e-4);
        // linear in lambda
        let b1 = pessimism_regret_bound(&i).unwrap();
        i.lambda = 1.0;
        assert_abs_diff_eq!(pessimism_regret_bound(&i).unwrap(), 2.0 * b1, epsilon = 1e-12);
    }

    #[test]
    fn regret_bound_invalid_params() {
        let mut i = inputs(4);
        i.epsilon = -0.1;
        assert!(pessimism_regret_bound(&i).is_err());
        i.epsilon = 0.0;
        i.c = 1.0;
        assert!(pessimism_regret_bound(&i).is_err());
        i.c = 0.0;
        assert!(pessimism_regret_bound(&i).is_err());
    }
}
