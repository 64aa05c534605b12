//! Dense vectors and matrices, subspace projections, and Gaussian sampling
//! with general covariance.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tolerances;

/// A k-dimensional subspace of R^d, stored as a d×k matrix with
/// orthonormal columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Subspace {
    basis: Array2<f64>,
}

impl Subspace {
    /// Orthonormalize `raw_basis` (d×k) with modified Gram-Schmidt plus a
    /// re-orthogonalization pass. Fails if a column is numerically dependent
    /// on the preceding ones.
    pub fn orthonormalize(raw_basis: &Array2<f64>) -> Result<Subspace> {
        let (d, k) = raw_basis.dim();
        if k == 0 || k > d {
            return Err(Error::InvalidParameter {
                name: "raw_basis",
                reason: format!("need 1 <= k <= d, got d={d}, k={k}"),
            });
        }
        let mut basis = raw_basis.clone();
        for j in 0..k {
            let original_norm = norm(&basis.column(j).to_owned());
            // Two MGS passes against the already-finished columns.
            for _ in 0..2 {
                for i in 0..j {
                    let qi = basis.column(i).to_owned();
                    let coeff = qi.dot(&basis.column(j));
                    let mut col = basis.column_mut(j);
                    col.scaled_add(-coeff, &qi);
                }
            }
            let remaining = norm(&basis.column(j).to_owned());
            if remaining <= tolerances::RANK * original_norm.max(1.0) {
                return Err(Error::RankDeficient { column: j });
            }
            basis.column_mut(j).mapv_inplace(|v| v / remaining);
        }
        Ok(Subspace { basis })
    }

    /// The coordinate subspace span(e1, ..., ek) in R^d.
    pub fn coordinate(ambient_dim: usize, k: usize) -> Result<Subspace> {
        let mut raw = Array2::zeros((ambient_dim, k));
        for j in 0..k {
            raw[(j, j)] = 1.0;
        }
        Subspace::orthonormalize(&raw)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    fn check_dim(&self, y: &Array1<f64>) -> Result<()> {
        if y.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Orthogonal projection of `y` onto the subspace: B·(Bᵀy).
    pub fn project_v(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_dim(y)?;
        let coords = self.basis.t().dot(y);
        Ok(self.basis.dot(&coords))
    }

    /// Projection onto the orthogonal complement: y − proj_V(y).
    pub fn project_perp(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        Ok(y - &self.project_v(y)?)
    }

    /// Coordinates Bᵀy of the projection in the subspace basis.
    pub fn coordinates(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_dim(y)?;
        Ok(self.basis.t().dot(y))
    }

    /// Embed subspace coordinates back into R^d: B·c.
    pub fn embed(&self, coords: &Array1<f64>) -> Result<Array1<f64>> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        Ok(self.basis.dot(coords))
    }

    /// The d×d projection matrix B·Bᵀ.
    pub fn projection_matrix(&self) -> Array2<f64> {
        self.basis.dot(&self.basis.t())
    }

    /// The d×d projection matrix I − B·Bᵀ.
    pub fn perp_projection_matrix(&self) -> Array2<f64> {
        let d = self.ambient_dim();
        Array2::eye(d) - self.projection_matrix()
    }
}

/// Covariance supplied as a factor A with Σ = A·Aᵀ, so Σ is positive
/// semidefinite by construction and sampling never needs a decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceFactor {
    factor: Array2<f64>,
}

impl CovarianceFactor {
    pub fn new(factor: Array2<f64>) -> Result<CovarianceFactor> {
        if factor.nrows() != factor.ncols() {
            return Err(Error::InvalidParameter {
                name: "factor",
                reason: format!("must be square, got {}x{}", factor.nrows(), factor.ncols()),
            });
        }
        Ok(CovarianceFactor { factor })
    }

    pub fn identity(dim: usize) -> CovarianceFactor {
        CovarianceFactor {
            factor: Array2::eye(dim),
        }
    }

    /// Diagonal covariance with the given variances; factor is diag(√v).
    pub fn diagonal(variances: &[f64]) -> Result<CovarianceFactor> {
        if variances.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParameter {
                name: "variances",
                reason: "must be nonnegative".into(),
            });
        }
        let mut factor = Array2::zeros((variances.len(), variances.len()));
        for (i, &v) in variances.iter().enumerate() {
            factor[(i, i)] = v.sqrt();
        }
        Ok(CovarianceFactor { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn factor(&self) -> &Array2<f64> {
        &self.factor
    }

    /// Reconstruct Σ = A·Aᵀ.
    pub fn sigma(&self) -> Array2<f64> {
        self.factor.dot(&self.factor.t())
    }

    /// ‖Σ^{1/2} x‖ = ‖Aᵀ x‖ (both equal √(xᵀΣx)).
    pub fn half_norm(&self, x: &Array1<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(norm(&self.factor.t().dot(x)))
    }

    /// trace(Σ · proj_{V⊥}) = ‖A‖_F² − ‖Bᵀ·A‖_F².
    pub fn trace_perp(&self, subspace: &Subspace) -> Result<f64> {
        if subspace.ambient_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: subspace.ambient_dim(),
            });
        }
        let total = self.factor.iter().map(|v| v * v).sum::<f64>();
        let on_v = subspace
            .basis()
            .t()
            .dot(&self.factor)
            .iter()
            .map(|v| v * v)
            .sum::<f64>();
        Ok(total - on_v)
    }
}

/// Draw `count` i.i.d. samples A·z with z standard normal in R^d.
pub fn sample_gaussian(
    cov: &CovarianceFactor,
    rng: &mut RngStream,
    count: usize,
) -> Vec<Array1<f64>> {
    let d = cov.dim();
    (0..count)
        .map(|_| {
            let z = Array1::from_iter((0..d).map(|_| rng.normal()));
            cov.factor().dot(&z)
        })
        .collect()
}

/// Euclidean norm.
pub fn norm(x: &Array1<f64>) -> f64 {
    x.dot(x).sqrt()
}

/// Column-wise empirical mean of a set of vectors.
pub fn empirical_mean(samples: &[Array1<f64>]) -> Array1<f64> {
    let d = samples[0].len();
    let mut mean = Array1::zeros(d);
    for s in samples {
        mean += s;
    }
    mean / samples.len() as f64
}

/// Empirical covariance (population convention).
pub fn empirical_covariance(samples: &[Array1<f64>]) -> Array2<f64> {
    let d = samples[0].len();
    let mean = empirical_mean(samples);
    let mut cov = Array2::zeros((d, d));
    for s in samples {
        let c = s - &mean;
        let c2 = c.clone().insert_axis(Axis(1));
        cov = cov + c2.dot(&c2.t());
    }
    cov / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e(d: usize, i: usize) -> Array1<f64> {
        let mut v = Array1::zeros(d);
        v[i] = 1.0;
        v
    }

    #[test]
    fn orthonormal_basis_unchanged() {
        let mut raw = Array2::zeros((3, 2));
        raw[(0, 0)] = 1.0;
        raw[(1, 1)] = 1.0;
        let s = Subspace::orthonormalize(&raw).unwrap();
        assert_abs_diff_eq!(s.basis()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.basis()[(1, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.basis()[(2, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_schmidt_forced() {
        // columns (e1, e1+e2) -> (e1, e2) up to sign
        let mut raw = Array2::zeros((3, 2));
        raw[(0, 0)] = 1.0;
        raw[(0, 1)] = 1.0;
        raw[(1, 1)] = 1.0;
        let s = Subspace::orthonormalize(&raw).unwrap();
        assert_abs_diff_eq!(s.basis()[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.basis()[(1, 1)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dependent_columns_rejected() {
        let mut raw = Array2::zeros((3, 2));
        raw[(0, 0)] = 1.0;
        raw[(0, 1)] = 2.0;
        match Subspace::orthonormalize(&raw) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn coordinate_projection() {
        let s = Subspace::coordinate(3, 2).unwrap();
        let y = Array1::from_vec(vec![1.0, 2.0, 3.0]);
        let pv = s.project_v(&y).unwrap();
        let pp = s.project_perp(&y).unwrap();
        assert_abs_diff_eq!(pv[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pv[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pv[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pp[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn member_has_zero_perp() {
        let s = Subspace::coordinate(4, 2).unwrap();
        let y = e(4, 0) * 2.0 + e(4, 1) * -3.0;
        let pp = s.project_perp(&y).unwrap();
        assert!(norm(&pp) < 1e-12);
    }

    #[test]
    fn pythagoras_random() {
        let mut rng = crate::rng::derive_stream(7, 0);
        for _ in 0..50 {
            let raw = Array2::from_shape_fn((6, 3), |_| rng.normal());
            let s = Subspace::orthonormalize(&raw).unwrap();
            let y = Array1::from_shape_fn(6, |_| rng.normal());
            let pv = s.project_v(&y).unwrap();
            let pp = s.project_perp(&y).unwrap();
            let lhs = pv.dot(&pv) + pp.dot(&pp);
            assert_abs_diff_eq!(lhs, y.dot(&y), epsilon = 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let s = Subspace::coordinate(3, 2).unwrap();
        let y = Array1::zeros(4);
        assert!(matches!(
            s.project_v(&y),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_factor_gives_zero_samples() {
        let cov = CovarianceFactor::new(Array2::zeros((3, 3))).unwrap();
        let mut rng = crate::rng::derive_stream(1, 0);
        for s in sample_gaussian(&cov, &mut rng, 10) {
            assert_eq!(norm(&s), 0.0);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let cov = CovarianceFactor::identity(4);
        let a = sample_gaussian(&cov, &mut crate::rng::derive_stream(5, 3), 5);
        let b = sample_gaussian(&cov, &mut crate::rng::derive_stream(5, 3), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn half_norm_matches_quadratic_form() {
        let cov = CovarianceFactor::diagonal(&[4.0, 1.0]).unwrap();
        let x = Array1::from_vec(vec![1.0, 2.0]);
        // xᵀΣx = 4 + 4 = 8
        assert_abs_diff_eq!(cov.half_norm(&x).unwrap(), 8f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn trace_perp_coordinate_case() {
        let cov = CovarianceFactor::identity(10);
        let s = Subspace::coordinate(10, 2).unwrap();
        assert_abs_diff_eq!(cov.trace_perp(&s).unwrap(), 8.0, epsilon = 1e-10);
    }
}
