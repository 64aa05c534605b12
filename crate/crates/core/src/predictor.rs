//! The practical caution pipeline on generic feature vectors: train a small
//! predictor network to match frozen target features by MSE, use its squared
//! prediction error as the uncertainty signal, and rerank slates with
//! z-scored pessimistic scores. Features arrive precomputed; there is no
//! language model anywhere in this crate.

use ndarray::{Array1, Array2, Axis};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rewards::ZScoreNormalizer;
use crate::rng::{derive_stream, RngStream};
use crate::selection::{Method, SelectionOutcome};

const PREDICTOR_FILE_VERSION: u32 = 1;

/// One training or slate record: predictor input features, frozen target
/// features, and (for slates) the proxy reward score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub input_features: Vec<f64>,
    pub target_features: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slate_id: Option<String>,
}

/// Read JSON-lines feature records; blank lines are skipped.
pub fn read_jsonl(path: &Path) -> Result<Vec<FeatureRecord>> {
    let file =
        std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Serde(e.to_string()))?);
    }
    Ok(records)
}

/// Write feature records as JSON-lines.
pub fn write_jsonl(records: &[FeatureRecord], path: &Path) -> Result<()> {
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Serde(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// Single-hidden-layer ReLU predictor with an optional linear projection
/// head on the output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpPredictor {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    projection: Option<Projection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Projection {
    weight: Array2<f64>,
    bias: Array1<f64>,
}

/// Training hyperparameters. Defaults mirror the small-scale fixture setup:
/// 5 epochs of batch-8 gradient descent at a constant 1e-3 learning rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub use_projection: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            lr: 1e-3,
            epochs: 5,
            batch_size: 8,
            seed: 0,
            use_projection: true,
        }
    }
}

impl MlpPredictor {
    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        match &self.projection {
            Some(p) => p.weight.nrows(),
            None => self.w2.nrows(),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        let mut count = self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len();
        if let Some(p) = &self.projection {
            count += p.weight.len() + p.bias.len();
        }
        count
    }

    fn new(p: usize, h: usize, q: usize, use_projection: bool, rng: &mut RngStream) -> Self {
        let s1 = (2.0 / p as f64).sqrt();
        let s2 = (2.0 / h as f64).sqrt();
        MlpPredictor {
            w1: Array2::from_shape_fn((h, p), |_| rng.normal() * s1),
            b1: Array1::zeros(h),
            w2: Array2::from_shape_fn((q, h), |_| rng.normal() * s2),
            b2: Array1::zeros(q),
            // projection starts at identity so it only bends the output
            // geometry once training asks it to
            projection: use_projection.then(|| Projection {
                weight: Array2::eye(q),
                bias: Array1::zeros(q),
            }),
        }
    }

    pub fn forward(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let hidden = (self.w1.dot(x) + &self.b1).mapv(|v| v.max(0.0));
        let out = self.w2.dot(&hidden) + &self.b2;
        Ok(match &self.projection {
            Some(p) => p.weight.dot(&out) + &p.bias,
            None => out,
        })
    }

    /// Mean per-sample squared feature error over a dataset.
    pub fn mean_loss(&self, records: &[FeatureRecord]) -> Result<f64> {
        let mut total = 0.0;
        for r in records {
            let x = Array1::from_vec(r.input_features.clone());
            let t = Array1::from_vec(r.target_features.clone());
            let e = self.forward(&x)? - t;
            total += e.dot(&e);
        }
        Ok(total / records.len() as f64)
    }

    /// Analytic gradient of the mean squared feature error over `records`,
    /// flattened in the order (w1, b1, w2, b2, projection). Paired with
    /// finite differences in the tests.
    pub fn loss_gradient(&self, records: &[FeatureRecord]) -> Result<Vec<f64>> {
        let mut grads = Gradients::zeros(self);
        for r in records {
            let x = Array1::from_vec(r.input_features.clone());
            let t = Array1::from_vec(r.target_features.clone());
            grads.accumulate(self, &x, &t)?;
        }
        grads.scale(1.0 / records.len() as f64);
        Ok(grads.flatten())
    }

    /// Flatten all parameters in the same order as `loss_gradient`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.w1.iter().copied().collect();
        out.extend(self.b1.iter());
        out.extend(self.w2.iter());
        out.extend(self.b2.iter());
        if let Some(p) = &self.projection {
            out.extend(p.weight.iter());
            out.extend(p.bias.iter());
        }
        out
    }

    /// Perturb one flat parameter in place (test support for finite
    /// differences).
    pub fn nudge_parameter(&mut self, flat_index: usize, delta: f64) {
        let mut i = flat_index;
        if i < self.w1.len() {
            self.w1.as_slice_mut().unwrap()[i] += delta;
            return;
        }
        i -= self.w1.len();
        if i < self.b1.len() {
            self.b1[i] += delta;
            return;
        }
        i -= self.b1.len();
        if i < self.w2.len() {
            self.w2.as_slice_mut().unwrap()[i] += delta;
            return;
        }
        i -= self.w2.len();
        if i < self.b2.len() {
            self.b2[i] += delta;
            return;
        }
        i -= self.b2.len();
        let p = self.projection.as_mut().expect("flat index out of range");
        if i < p.weight.len() {
            p.weight.as_slice_mut().unwrap()[i] += delta;
            return;
        }
        i -= p.weight.len();
        p.bias[i] += delta;
    }
}

struct Gradients {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    projection: Option<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    fn zeros(model: &MlpPredictor) -> Gradients {
        Gradients {
            w1: Array2::zeros(model.w1.dim()),
            b1: Array1::zeros(model.b1.len()),
            w2: Array2::zeros(model.w2.dim()),
            b2: Array1::zeros(model.b2.len()),
            projection: model
                .projection
                .as_ref()
                .map(|p| (Array2::zeros(p.weight.dim()), Array1::zeros(p.bias.len()))),
        }
    }

    fn accumulate(&mut self, model: &MlpPredictor, x: &Array1<f64>, t: &Array1<f64>) -> Result<()> {
        if t.len() != model.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.output_dim(),
                got: t.len(),
            });
        }
        let pre = model.w1.dot(x) + &model.b1;
        let hidden = pre.mapv(|v| v.max(0.0));
        let out = model.w2.dot(&hidden) + &model.b2;
        let y = match &model.projection {
            Some(p) => p.weight.dot(&out) + &p.bias,
            None => out.clone(),
        };
        let dy = (&y - t) * 2.0;
        let dout = match &model.projection {
            Some(p) => {
                let (gw, gb) = self.projection.as_mut().unwrap();
                *gw = &*gw + &dy.clone().insert_axis(Axis(1)).dot(&out.clone().insert_axis(Axis(0)));
                *gb = &*gb + &dy;
                p.weight.t().dot(&dy)
            }
            None => dy,
        };
        self.w2 = &self.w2 + &dout.clone().insert_axis(Axis(1)).dot(&hidden.clone().insert_axis(Axis(0)));
        self.b2 = &self.b2 + &dout;
        let mut dhidden = model.w2.t().dot(&dout);
        for (g, &p) in dhidden.iter_mut().zip(pre.iter()) {
            if p <= 0.0 {
                *g = 0.0;
            }
        }
        self.w1 = &self.w1 + &dhidden.clone().insert_axis(Axis(1)).dot(&x.clone().insert_axis(Axis(0)));
        self.b1 = &self.b1 + &dhidden;
        Ok(())
    }

    fn scale(&mut self, factor: f64) {
        self.w1 *= factor;
        self.b1 *= factor;
        self.w2 *= factor;
        self.b2 *= factor;
        if let Some((gw, gb)) = &mut self.projection {
            *gw *= factor;
            *gb *= factor;
        }
    }

    fn apply(&self, model: &mut MlpPredictor, lr: f64) {
        model.w1 = &model.w1 - &(&self.w1 * lr);
        model.b1 = &model.b1 - &(&self.b1 * lr);
        model.w2 = &model.w2 - &(&self.w2 * lr);
        model.b2 = &model.b2 - &(&self.b2 * lr);
        if let (Some(p), Some((gw, gb))) = (&mut model.projection, &self.projection) {
            p.weight = &p.weight - &(gw * lr);
            p.bias = &p.bias - &(gb * lr);
        }
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.w1.iter().copied().collect();
        out.extend(self.b1.iter());
        out.extend(self.w2.iter());
        out.extend(self.b2.iter());
        if let Some((gw, gb)) = &self.projection {
            out.extend(gw.iter());
            out.extend(gb.iter());
        }
        out
    }
}

fn check_dataset(records: &[FeatureRecord]) -> Result<(usize, usize)> {
    if records.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let p = records[0].input_features.len();
    let q = records[0].target_features.len();
    for r in records {
        if r.input_features.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: r.input_features.len(),
            });
        }
        if r.target_features.len() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                got: r.target_features.len(),
            });
        }
        if r.input_features.iter().chain(&r.target_features).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "features",
                reason: format!("record {} contains non-finite values", r.id),
            });
        }
    }
    Ok((p, q))
}

/// Minibatch gradient descent on the mean squared feature error. The
/// shuffle order and the weight init are both derived from the seed, so a
/// run is a pure function of (dataset, config). Returns the model and one
/// full-dataset loss value per epoch.
pub fn train_predictor(
    records: &[FeatureRecord],
    cfg: &TrainConfig,
) -> Result<(MlpPredictor, Vec<f64>)> {
    let (p, q) = check_dataset(records)?;
    if cfg.hidden == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidParameter {
            name: "hidden/batch_size",
            reason: "must be >= 1".into(),
        });
    }
    let mut init_rng = derive_stream(cfg.seed, 0);
    let mut model = MlpPredictor::new(p, cfg.hidden, q, cfg.use_projection, &mut init_rng);

    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = derive_stream(cfg.seed, epoch as u64 + 1);
        // Fisher-Yates with the epoch's stream
        for i in (1..order.len()).rev() {
            let j = (shuffle_rng.next_u64() % (i as u64 + 1)) as usize;
            order.swap(i, j);
        }
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros(&model);
            for &idx in batch {
                let r = &records[idx];
                let x = Array1::from_vec(r.input_features.clone());
                let t = Array1::from_vec(r.target_features.clone());
                grads.accumulate(&model, &x, &t)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            grads.apply(&mut model, cfg.lr);
        }
        let loss = model.mean_loss(records)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        trace.push(loss);
    }
    Ok((model, trace))
}

/// α = ‖P(x) − T(x)‖², the squared prediction error on the record's target
/// features. Ignores id and proxy_score.
pub fn uncertainty_score(model: &MlpPredictor, record: &FeatureRecord) -> Result<f64> {
    let x = Array1::from_vec(record.input_features.clone());
    let t = Array1::from_vec(record.target_features.clone());
    if t.len() != model.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.output_dim(),
            got: t.len(),
        });
    }
    let e = model.forward(&x)? - t;
    Ok(e.dot(&e))
}

/// Reranker settings: pessimism strength λ and z-score normalizers fitted
/// on a calibration set disjoint from the evaluation slates.
#[derive(Debug, Clone)]
pub struct RerankerConfig {
    pub lambda: f64,
    pub reward_normalizer: ZScoreNormalizer,
    pub uncertainty_normalizer: ZScoreNormalizer,
}

/// Pick argmax of z(proxy) − λ·z(α) over the slate; ties break toward the
/// smallest position. Diagnostics carry the per-candidate combined scores.
pub fn rerank(
    slate: &[FeatureRecord],
    model: &MlpPredictor,
    cfg: &RerankerConfig,
) -> Result<SelectionOutcome> {
    if slate.is_empty() {
        return Err(Error::EmptySlate);
    }
    if cfg.lambda < 0.0 {
        return Err(Error::NegativeLambda(cfg.lambda));
    }
    let mut scores = Vec::with_capacity(slate.len());
    for (i, r) in slate.iter().enumerate() {
        let proxy = r.proxy_score.ok_or(Error::InvalidParameter {
            name: "proxy_score",
            reason: format!("slate record {} (position {i}) has no proxy score", r.id),
        })?;
        let alpha = uncertainty_score(model, r)?;
        scores.push(
            cfg.reward_normalizer.normalize(proxy)
                - cfg.lambda * cfg.uncertainty_normalizer.normalize(alpha),
        );
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(SelectionOutcome {
        chosen_index: best,
        method: Method::Lcb,
        lcb_score: Some(scores[best]),
        diagnostics: scores,
    })
}

#[derive(Serialize, Deserialize)]
struct PredictorFile {
    version: u32,
    model: MlpPredictor,
}

/// Save a predictor as a versioned JSON record of widths and weights.
pub fn save_predictor(model: &MlpPredictor, path: &Path) -> Result<()> {
    let file = PredictorFile {
        version: PREDICTOR_FILE_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string(&file).map_err(|e| Error::Serde(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load a predictor saved by [`save_predictor`].
pub fn load_predictor(path: &Path) -> Result<MlpPredictor> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: PredictorFile =
        serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))?;
    if file.version != PREDICTOR_FILE_VERSION {
        return Err(Error::UnsupportedVersion {
            expected: PREDICTOR_FILE_VERSION,
            got: file.version,
        });
    }
    Ok(file.model)
}

pub mod fixtures {
    //! Synthetic dataset generators used by the tests and the verification
    //! suite.
    //!
    //! The OOD fixture works as follows: inputs for the in-distribution
    //! cluster lie on a random k-dimensional subspace of R^p (plus small
    //! noise); out-of-distribution inputs carry a large component off that
    //! subspace. Targets for every record come from one frozen random
    //! feature map t = ReLU(G·x), so a predictor trained on the
    //! in-distribution cluster reconstructs targets well there and poorly
    //! off-subspace.

    use super::FeatureRecord;
    use crate::linalg::Subspace;
    use crate::rng::{derive_stream, RngStream};
    use ndarray::{Array1, Array2};

    /// Records with targets M·x for a fixed random q×p matrix M.
    pub fn linear_task(p: usize, q: usize, count: usize, seed: u64) -> Vec<FeatureRecord> {
        let mut rng = derive_stream(seed, 0);
        let m = Array2::from_shape_fn((q, p), |_| rng.normal());
        (0..count)
            .map(|i| {
                let x = Array1::from_shape_fn(p, |_| rng.normal());
                let t = m.dot(&x);
                FeatureRecord {
                    id: format!("lin-{i}"),
                    input_features: x.to_vec(),
                    target_features: t.to_vec(),
                    proxy_score: None,
                    slate_id: None,
                }
            })
            .collect()
    }

    /// Records with all-zero targets.
    pub fn constant_zero_task(p: usize, q: usize, count: usize, seed: u64) -> Vec<FeatureRecord> {
        let mut rng = derive_stream(seed, 0);
        (0..count)
            .map(|i| FeatureRecord {
                id: format!("zero-{i}"),
                input_features: (0..p).map(|_| rng.normal()).collect(),
                target_features: vec![0.0; q],
                proxy_score: None,
                slate_id: None,
            })
            .collect()
    }

    /// The documented OOD fixture: (train, in_distribution, out_of_distribution).
    pub fn ood_fixture(
        p: usize,
        q: usize,
        subspace_dim: usize,
        train_count: usize,
        eval_count: usize,
        seed: u64,
    ) -> (Vec<FeatureRecord>, Vec<FeatureRecord>, Vec<FeatureRecord>) {
        let mut rng = derive_stream(seed, 0);
        let raw = Array2::from_shape_fn((p, subspace_dim), |_| rng.normal());
        let subspace = Subspace::orthonormalize(&raw).expect("random basis is full rank");
        let target_map = Array2::from_shape_fn((q, p), |_| rng.normal());

        let gen = |prefix: &str, n: usize, off_subspace: bool, rng: &mut RngStream| {
            (0..n)
                .map(|i| {
                    let coords = Array1::from_shape_fn(subspace_dim, |_| rng.normal());
                    let mut x = subspace.embed(&coords).unwrap();
                    if off_subspace {
                        let noise = Array1::from_shape_fn(p, |_| rng.normal());
                        x = x + subspace.project_perp(&noise).unwrap() * 2.0;
                    }
                    let t = target_map.dot(&x).mapv(|v| v.max(0.0));
                    FeatureRecord {
                        id: format!("{prefix}-{i}"),
                        input_features: x.to_vec(),
                        target_features: t.to_vec(),
                        proxy_score: None,
                        slate_id: None,
                    }
                })
                .collect::<Vec<_>>()
        };

        let train = gen("train", train_count, false, &mut rng);
        let in_dist = gen("id", eval_count, false, &mut rng);
        let out_dist = gen("ood", eval_count, true, &mut rng);
        (train, in_dist, out_dist)
    }

    /// Area under the ROC curve for scores where positives (OOD) should be
    /// larger than negatives (in-distribution). Rank statistic with 0.5
    /// credit for ties.
    pub fn auc(positive: &[f64], negative: &[f64]) -> f64 {
        let mut wins = 0.0;
        for &p in positive {
            for &n in negative {
                if p > n {
                    wins += 1.0;
                } else if p == n {
                    wins += 0.5;
                }
            }
        }
        wins / (positive.len() * negative.len()) as f64
    }
}
