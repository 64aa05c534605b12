//! Random-network-distillation uncertainty models: a linear model and a
//! one-hidden-layer ReLU ensemble. Both support idealized training (closed
//! form weight assignment) and full-batch gradient descent on data supported
//! in V. Prediction error against the frozen target is the uncertainty.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{norm, Subspace};
use crate::rng::RngStream;
use crate::tolerances;

const MODEL_FILE_VERSION: u32 = 1;

/// Which functional of the prediction error to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyVariant {
    /// ‖f_Ŵ(y) − f_{W*}(y)‖
    #[default]
    Norm,
    /// ‖f_Ŵ(y) − f_{W*}(y)‖²
    Squared,
}

impl UncertaintyVariant {
    fn apply(self, distance: f64) -> f64 {
        match self {
            UncertaintyVariant::Norm => distance,
            UncertaintyVariant::Squared => distance * distance,
        }
    }
}

/// Linear RND: target W*, init W0 and trained Ŵ are m×d with i.i.d.
/// N(0, 1/m) entries at initialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearRnd {
    dim: usize,
    width: usize,
    w_star: Array2<f64>,
    w_init: Array2<f64>,
    w_hat: Array2<f64>,
    subspace: Subspace,
}

/// One-hidden-layer ReLU RND ensemble. Per member: first-layer matrices
/// (m×d, N(0,1) entries) and a frozen second layer U (m×m, N(0,1) entries)
/// shared between target and predictor, so idealized training makes the
/// prediction error vanish exactly on V. Member output is (1/m)·U·ReLU(W·y)
/// and the ensemble output averages the members.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReluRnd {
    dim: usize,
    width: usize,
    members: Vec<ReluMember>,
    subspace: Subspace,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReluMember {
    w_star: Array2<f64>,
    w_init: Array2<f64>,
    w_hat: Array2<f64>,
    u: Array2<f64>,
}

fn gaussian_matrix(rows: usize, cols: usize, std: f64, rng: &mut RngStream) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.normal() * std)
}

/// Initialize a linear RND model with N(0, 1/m) entries; Ŵ starts at W0.
pub fn init_linear_rnd(
    dim: usize,
    width: usize,
    subspace: &Subspace,
    rng: &mut RngStream,
) -> Result<LinearRnd> {
    check_init(dim, width, 1, subspace)?;
    let std = (1.0 / width as f64).sqrt();
    let w_star = gaussian_matrix(width, dim, std, rng);
    let w_init = gaussian_matrix(width, dim, std, rng);
    Ok(LinearRnd {
        dim,
        width,
        w_hat: w_init.clone(),
        w_star,
        w_init,
        subspace: subspace.clone(),
    })
}

/// Initialize a ReLU RND ensemble with N(0, 1) first- and second-layer
/// entries; every Ŵ starts at its member's W0.
pub fn init_relu_rnd(
    dim: usize,
    width: usize,
    ensemble_count: usize,
    subspace: &Subspace,
    rng: &mut RngStream,
) -> Result<ReluRnd> {
    check_init(dim, width, ensemble_count, subspace)?;
    let members = (0..ensemble_count)
        .map(|_| {
            let w_star = gaussian_matrix(width, dim, 1.0, rng);
            let w_init = gaussian_matrix(width, dim, 1.0, rng);
            let u = gaussian_matrix(width, width, 1.0, rng);
            ReluMember {
                w_hat: w_init.clone(),
                w_star,
                w_init,
                u,
            }
        })
        .collect();
    Ok(ReluRnd {
        dim,
        width,
        members,
        subspace: subspace.clone(),
    })
}

fn check_init(dim: usize, width: usize, ensemble: usize, subspace: &Subspace) -> Result<()> {
    if width == 0 {
        return Err(Error::InvalidParameter {
            name: "width",
            reason: "must be >= 1".into(),
        });
    }
    if ensemble == 0 {
        return Err(Error::InvalidParameter {
            name: "ensemble_count",
            reason: "must be >= 1".into(),
        });
    }
    if subspace.ambient_dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: subspace.ambient_dim(),
        });
    }
    Ok(())
}

fn check_training_set(subspace: &Subspace, data: &[Array1<f64>], lr: f64) -> Result<()> {
    if lr <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lr",
            reason: format!("must be positive, got {lr}"),
        });
    }
    for (i, y) in data.iter().enumerate() {
        let perp = norm(&subspace.project_perp(y)?);
        if perp >= tolerances::MEMBERSHIP {
            return Err(Error::NotInSubspace {
                index: i,
                norm: perp,
            });
        }
    }
    Ok(())
}

fn relu(x: &Array1<f64>) -> Array1<f64> {
    x.mapv(|v| v.max(0.0))
}

impl LinearRnd {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn w_star(&self) -> &Array2<f64> {
        &self.w_star
    }

    pub fn w_init(&self) -> &Array2<f64> {
        &self.w_init
    }

    pub fn w_hat(&self) -> &Array2<f64> {
        &self.w_hat
    }

    /// Set Ŵ to the training fixed point W*·P_V + W0·P_{V⊥} exactly.
    pub fn train_idealized(&mut self) {
        let pv = self.subspace.projection_matrix();
        let pp = self.subspace.perp_projection_matrix();
        self.w_hat = self.w_star.dot(&pv) + self.w_init.dot(&pp);
    }

    /// MSE over the training set: mean ‖(Ŵ − W*)·y‖².
    pub fn loss(&self, data: &[Array1<f64>]) -> f64 {
        let diff = &self.w_hat - &self.w_star;
        data.iter()
            .map(|y| {
                let e = diff.dot(y);
                e.dot(&e)
            })
            .sum::<f64>()
            / data.len() as f64
    }

    /// Analytic full-batch gradient of `loss` with respect to Ŵ.
    pub fn loss_gradient(&self, data: &[Array1<f64>]) -> Array2<f64> {
        let diff = &self.w_hat - &self.w_star;
        let mut grad = Array2::zeros((self.width, self.dim));
        for y in data {
            let e = diff.dot(y).insert_axis(Axis(1));
            let yt = y.clone().insert_axis(Axis(0));
            grad = grad + e.dot(&yt);
        }
        grad * (2.0 / data.len() as f64)
    }

    /// Full-batch gradient descent on data supported in V. Returns the loss
    /// trace, one entry per epoch (evaluated after the step).
    pub fn train_gradient(
        &mut self,
        data: &[Array1<f64>],
        lr: f64,
        epochs: usize,
    ) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::TooFewValues { needed: 1, got: 0 });
        }
        check_training_set(&self.subspace, data, lr)?;
        let mut trace = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            let grad = self.loss_gradient(data);
            self.w_hat = &self.w_hat - &(grad * lr);
            let loss = self.loss(data);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            trace.push(loss);
        }
        Ok(trace)
    }

    /// Prediction error of the trained model against the target.
    pub fn uncertainty(&self, y: &Array1<f64>, variant: UncertaintyVariant) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        let e = self.w_hat.dot(y) - self.w_star.dot(y);
        Ok(variant.apply(norm(&e)))
    }

    /// ‖(Ŵ − W0)·P_{V⊥}‖_F, the quantity conserved by gradient training.
    pub fn perp_drift(&self) -> f64 {
        let pp = self.subspace.perp_projection_matrix();
        let d = (&self.w_hat - &self.w_init).dot(&pp);
        d.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl ReluRnd {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ensemble_count(&self) -> usize {
        self.members.len()
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn members(&self) -> &[ReluMember] {
        &self.members
    }

    fn member_forward(&self, w: &Array2<f64>, u: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
        u.dot(&relu(&w.dot(y))) / self.width as f64
    }

    /// Ensemble-averaged predictor output (trained weights).
    pub fn forward_hat(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        self.forward_with(y, |m| &m.w_hat)
    }

    /// Ensemble-averaged target output.
    pub fn forward_star(&self, y: &Array1<f64>) -> Result<Array1<f64>> {
        self.forward_with(y, |m| &m.w_star)
    }

    fn forward_with<'a, F>(&'a self, y: &Array1<f64>, pick: F) -> Result<Array1<f64>>
    where
        F: Fn(&'a ReluMember) -> &'a Array2<f64>,
    {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        let mut out = Array1::zeros(self.width);
        for m in &self.members {
            out = out + self.member_forward(pick(m), &m.u, y);
        }
        Ok(out / self.members.len() as f64)
    }

    /// Set every member's Ŵ to W*·P_V + W0·P_{V⊥} exactly.
    pub fn train_idealized(&mut self) {
        let pv = self.subspace.projection_matrix();
        let pp = self.subspace.perp_projection_matrix();
        for m in &mut self.members {
            m.w_hat = m.w_star.dot(&pv) + m.w_init.dot(&pp);
        }
    }

    /// Mean over members and samples of ‖f_Ŵ(y) − f_{W*}(y)‖² (per-member
    /// errors, the quantity gradient descent minimizes).
    pub fn loss(&self, data: &[Array1<f64>]) -> f64 {
        let mut total = 0.0;
        for m in &self.members {
            for y in data {
                let e = self.member_forward(&m.w_hat, &m.u, y)
                    - self.member_forward(&m.w_star, &m.u, y);
                total += e.dot(&e);
            }
        }
        total / (self.members.len() * data.len()) as f64
    }

    /// Analytic full-batch gradient of the given member's loss with respect
    /// to its Ŵ (U is frozen).
    pub fn member_loss_gradient(&self, member: usize, data: &[Array1<f64>]) -> Array2<f64> {
        let m = &self.members[member];
        let inv_m = 1.0 / self.width as f64;
        let mut grad = Array2::zeros((self.width, self.dim));
        for y in data {
            let a = m.w_hat.dot(y);
            let h = relu(&a);
            let t = relu(&m.w_star.dot(y));
            let r = m.u.dot(&(&h - &t)) * inv_m;
            // dL/dŴ = (2/m)·(Uᵀ r ⊙ 1[a > 0])·yᵀ
            let mut back = m.u.t().dot(&r) * (2.0 * inv_m);
            for (b, &ai) in back.iter_mut().zip(a.iter()) {
                if ai <= 0.0 {
                    *b = 0.0;
                }
            }
            let back = back.insert_axis(Axis(1));
            let yt = y.clone().insert_axis(Axis(0));
            grad = grad + back.dot(&yt);
        }
        grad / data.len() as f64
    }

    /// Full-batch gradient descent per member on data supported in V, first
    /// layer only. Returns the loss trace, one entry per epoch.
    pub fn train_gradient(
        &mut self,
        data: &[Array1<f64>],
        lr: f64,
        epochs: usize,
    ) -> Result<Vec<f64>> {
        if data.is_empty() {
            return Err(Error::TooFewValues { needed: 1, got: 0 });
        }
        check_training_set(&self.subspace, data, lr)?;
        let mut trace = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            for i in 0..self.members.len() {
                let grad = self.member_loss_gradient(i, data);
                self.members[i].w_hat = &self.members[i].w_hat - &(grad * lr);
            }
            let loss = self.loss(data);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            trace.push(loss);
        }
        Ok(trace)
    }

    /// Prediction error of the ensemble-averaged outputs.
    pub fn uncertainty(&self, y: &Array1<f64>, variant: UncertaintyVariant) -> Result<f64> {
        let e = self.forward_hat(y)? - self.forward_star(y)?;
        Ok(variant.apply(norm(&e)))
    }

    /// Max over members of ‖(Ŵ − W0)·P_{V⊥}‖_F.
    pub fn perp_drift(&self) -> f64 {
        let pp = self.subspace.perp_projection_matrix();
        self.members
            .iter()
            .map(|m| {
                let d = (&m.w_hat - &m.w_init).dot(&pp);
                d.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Either RND variant, for generic storage and harness configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RndModel {
    Linear(LinearRnd),
    Relu(ReluRnd),
}

impl RndModel {
    pub fn train_idealized(&mut self) {
        match self {
            RndModel::Linear(m) => m.train_idealized(),
            RndModel::Relu(m) => m.train_idealized(),
        }
    }

    pub fn train_gradient(
        &mut self,
        data: &[Array1<f64>],
        lr: f64,
        epochs: usize,
    ) -> Result<Vec<f64>> {
        match self {
            RndModel::Linear(m) => m.train_gradient(data, lr, epochs),
            RndModel::Relu(m) => m.train_gradient(data, lr, epochs),
        }
    }

    pub fn uncertainty(&self, y: &Array1<f64>, variant: UncertaintyVariant) -> Result<f64> {
        match self {
            RndModel::Linear(m) => m.uncertainty(y, variant),
            RndModel::Relu(m) => m.uncertainty(y, variant),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    model: RndModel,
}

/// Save a model as a versioned JSON record of its matrices.
pub fn save_model(model: &RndModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        version: MODEL_FILE_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string(&file).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load a model saved by [`save_model`], checking the version tag.
pub fn load_model(path: &Path) -> Result<RndModel> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))?;
    if file.version != MODEL_FILE_VERSION {
        return Err(Error::UnsupportedVersion {
            expected: MODEL_FILE_VERSION,
            got: file.version,
        });
    }
    Ok(file.model)
}
