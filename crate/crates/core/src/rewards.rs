//! Linear true/proxy reward pairs that agree on a subspace V, plus z-score
//! normalization for scores.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, CovarianceFactor, Subspace};

/// A true reward direction θ* in V and a proxy direction θ̂ that matches θ*
/// on V and is corrupted only on V⊥.
#[derive(Debug, Clone)]
pub struct RewardPair {
    theta_star: Array1<f64>,
    theta_hat: Array1<f64>,
    subspace: Subspace,
}

impl RewardPair {
    pub fn theta_star(&self) -> &Array1<f64> {
        &self.theta_star
    }

    pub fn theta_hat(&self) -> &Array1<f64> {
        &self.theta_hat
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// The corruption component proj_{V⊥} θ̂.
    pub fn corruption(&self) -> Array1<f64> {
        &self.theta_hat - &self.theta_star
    }

    /// ‖proj_{V⊥} θ̂‖.
    pub fn corruption_norm(&self) -> f64 {
        norm(&self.corruption())
    }

    /// ρ = ‖Σ^{1/2} proj_{V⊥} θ̂‖ / ‖Σ^{1/2} θ*‖.
    pub fn corruption_ratio(&self, cov: &CovarianceFactor) -> Result<f64> {
        let denom = cov.half_norm(&self.theta_star)?;
        if denom == 0.0 {
            return Err(Error::DegenerateReward);
        }
        Ok(cov.half_norm(&self.corruption())? / denom)
    }
}

/// Build a reward pair: θ* = B·coords, θ̂ = θ* + proj_{V⊥}(corruption).
pub fn make_reward_pair(
    subspace: &Subspace,
    theta_star_coords: &Array1<f64>,
    perp_corruption: &Array1<f64>,
) -> Result<RewardPair> {
    if theta_star_coords.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateReward);
    }
    let theta_star = subspace.embed(theta_star_coords)?;
    let corruption = subspace.project_perp(perp_corruption)?;
    let theta_hat = &theta_star + &corruption;
    Ok(RewardPair {
        theta_star,
        theta_hat,
        subspace: subspace.clone(),
    })
}

/// r*(y) = ⟨θ*, y⟩.
pub fn eval_true(pair: &RewardPair, y: &Array1<f64>) -> Result<f64> {
    check_dim(pair, y)?;
    Ok(pair.theta_star.dot(y))
}

/// r̂(y) = ⟨θ̂, y⟩.
pub fn eval_proxy(pair: &RewardPair, y: &Array1<f64>) -> Result<f64> {
    check_dim(pair, y)?;
    Ok(pair.theta_hat.dot(y))
}

fn check_dim(pair: &RewardPair, y: &Array1<f64>) -> Result<()> {
    if y.len() != pair.theta_star.len() {
        return Err(Error::DimensionMismatch {
            expected: pair.theta_star.len(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Z-score normalizer with population (divide-by-n) standard deviation, so
/// the fit sample has exactly mean 0 and variance 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZScoreNormalizer {
    mean: f64,
    std: f64,
    sample_count: usize,
}

impl ZScoreNormalizer {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

/// Fit a normalizer on at least two non-constant values.
pub fn fit_normalizer(values: &[f64]) -> Result<ZScoreNormalizer> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(ZScoreNormalizer {
        mean,
        std: var.sqrt(),
        sample_count: values.len(),
    })
}
