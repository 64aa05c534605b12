//! Declarative Monte-Carlo experiment runner for the Gaussian selection
//! world. A config names the geometry (d, k, Σ, ρ), the uncertainty model,
//! the selection methods, and the N/λ grids; `run_simulation` evaluates all
//! methods on common random candidates and aggregates per (n, method, λ).
//!
//! Determinism contract: every trial owns RNG streams derived from
//! (seed, trial index), trials run on a rayon pool, and aggregation is an
//! ordered reduction over the trial index — so the output is byte-identical
//! for any worker count.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{sample_gaussian, CovarianceFactor, Subspace};
use crate::rewards::{eval_proxy, eval_true, make_reward_pair, RewardPair};
use crate::rnd::{init_linear_rnd, init_relu_rnd, RndModel, UncertaintyVariant};
use crate::rng::{derive_stream, RngStream};
use crate::selection::{
    select_bon, select_lcb, select_oracle, select_poisson, select_softmax, Candidate, Method,
};

/// Stream channels within a trial: stream index = (trial << 3) | channel.
const CH_CANDIDATES: u64 = 0;
const CH_RND: u64 = 1;
const CH_SOFTMAX: u64 = 2;
const CH_POISSON: u64 = 3;
/// Reserved high-bit indices for global (non-per-trial) draws.
const GLOBAL_STREAM_BASE: u64 = 1 << 63;

/// Candidate covariance: identity, a diagonal, or an explicit d×r factor A
/// (Σ = A·Aᵀ) loaded from a JSON file holding a row-major nested array.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SigmaSpec {
    #[default]
    Identity,
    Diagonal {
        values: Vec<f64>,
    },
    FactorFile {
        path: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RndVariant {
    #[default]
    Linear,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RndTraining {
    #[default]
    Idealized,
    Gradient,
}

fn default_n_grid() -> Vec<usize> {
    vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512]
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

fn default_methods() -> Vec<Method> {
    vec![Method::Oracle, Method::Bon, Method::Lcb]
}

fn default_trials() -> usize {
    1000
}

fn default_m() -> usize {
    128
}

fn default_ensemble() -> usize {
    1
}

fn default_temperature() -> f64 {
    1.0
}

fn default_fresh_rnd() -> bool {
    true
}

fn default_gradient_lr() -> f64 {
    0.05
}

fn default_gradient_epochs() -> usize {
    200
}

fn default_gradient_samples() -> usize {
    256
}

/// Everything a simulation run depends on. Loadable from TOML; unknown keys
/// are rejected so typos surface as config errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ambient dimension.
    pub d: usize,
    /// Dimension of the agreement subspace V (coordinates e1..ek).
    pub k: usize,
    /// RND width m.
    #[serde(default = "default_m")]
    pub m: usize,
    /// ReLU ensemble size T.
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default)]
    pub sigma: SigmaSpec,
    /// Corruption ratio ρ = ‖Σ^{1/2}proj_⊥θ̂‖ / ‖Σ^{1/2}θ*‖.
    pub rho: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    /// Pessimism strengths; each λ yields its own lcb rows.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_temperature")]
    pub softmax_temperature: f64,
    #[serde(default)]
    pub rnd_variant: RndVariant,
    #[serde(default)]
    pub rnd_training: RndTraining,
    #[serde(default)]
    pub alpha_variant: UncertaintyVariant,
    /// Fresh (W*, W0) per trial (default) versus one shared model.
    #[serde(default = "default_fresh_rnd")]
    pub fresh_rnd: bool,
    #[serde(default = "default_gradient_lr")]
    pub gradient_lr: f64,
    #[serde(default = "default_gradient_epochs")]
    pub gradient_epochs: usize,
    #[serde(default = "default_gradient_samples")]
    pub gradient_samples: usize,
}

impl ExperimentConfig {
    /// A small identity-Σ config with the given geometry; callers override
    /// fields as needed.
    pub fn baseline(d: usize, k: usize, rho: f64, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            d,
            k,
            m: default_m(),
            ensemble: default_ensemble(),
            sigma: SigmaSpec::Identity,
            rho,
            n_grid: default_n_grid(),
            lambdas: default_lambdas(),
            trials: default_trials(),
            seed,
            methods: default_methods(),
            softmax_temperature: default_temperature(),
            rnd_variant: RndVariant::Linear,
            rnd_training: RndTraining::Idealized,
            alpha_variant: UncertaintyVariant::Norm,
            fresh_rnd: true,
            gradient_lr: default_gradient_lr(),
            gradient_epochs: default_gradient_epochs(),
            gradient_samples: default_gradient_samples(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "must be >= 1"));
        }
        if self.k == 0 || self.k > self.d {
            return Err(invalid("k", "must satisfy 1 <= k <= d"));
        }
        if self.rho < 0.0 {
            return Err(invalid("rho", "must be nonnegative"));
        }
        if self.rho > 0.0 && self.k == self.d {
            return Err(invalid("rho", "corruption needs k < d"));
        }
        if self.m == 0 {
            return Err(invalid("m", "must be >= 1"));
        }
        if self.ensemble == 0 {
            return Err(invalid("ensemble", "must be >= 1"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be >= 1"));
        }
        if self.n_grid.is_empty() {
            return Err(invalid("n_grid", "must be non-empty"));
        }
        if self.n_grid[0] == 0 {
            return Err(invalid("n_grid", "candidate counts must be >= 1"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid", "must be strictly ascending"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "must name at least one method"));
        }
        if self.methods.contains(&Method::Lcb) && self.lambdas.is_empty() {
            return Err(invalid("lambdas", "lcb requires at least one lambda"));
        }
        if self.lambdas.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(invalid("lambdas", "must be finite and nonnegative"));
        }
        if self.softmax_temperature <= 0.0 {
            return Err(invalid("softmax_temperature", "must be positive"));
        }
        if self.gradient_lr <= 0.0 {
            return Err(invalid("gradient_lr", "must be positive"));
        }
        if matches!(self.rnd_training, RndTraining::Gradient) && self.gradient_samples == 0 {
            return Err(invalid("gradient_samples", "must be >= 1"));
        }
        if let SigmaSpec::Diagonal { values } = &self.sigma {
            if values.len() != self.d {
                return Err(invalid("sigma", "diagonal length must equal d"));
            }
            if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(invalid("sigma", "diagonal entries must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

fn invalid(field: &'static str, reason: &str) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.to_string(),
    }
}

/// Parse and validate a TOML experiment config.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Error::InvalidConfig {
            field: "toml",
            reason: e.to_string(),
        })?;
    cfg.validate()?;
    Ok(cfg)
}

/// The instantiated geometry: subspace V = span(e1..ek), θ* = e1, and the
/// corruption direction e_{k+1} scaled so the corruption ratio equals ρ.
pub struct World {
    pub subspace: Subspace,
    pub pair: RewardPair,
    pub cov: CovarianceFactor,
}

pub fn build_world(cfg: &ExperimentConfig) -> Result<World> {
    cfg.validate()?;
    let cov = match &cfg.sigma {
        SigmaSpec::Identity => CovarianceFactor::identity(cfg.d),
        SigmaSpec::Diagonal { values } => CovarianceFactor::diagonal(values)?,
        SigmaSpec::FactorFile { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.clone(), e))?;
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))?;
            if rows.len() != cfg.d {
                return Err(invalid("sigma", "factor file must have d rows"));
            }
            let cols = rows.first().map_or(0, |r| r.len());
            if cols == 0 || rows.iter().any(|r| r.len() != cols) {
                return Err(invalid("sigma", "factor file rows must be equal-length"));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            let a = Array2::from_shape_vec((cfg.d, cols), flat)
                .map_err(|e| Error::Serde(e.to_string()))?;
            CovarianceFactor::new(a)?
        }
    };
    let subspace = Subspace::coordinate(cfg.d, cfg.k)?;
    let mut coords = Array1::zeros(cfg.k);
    coords[0] = 1.0;
    let theta_star = subspace.embed(&coords)?;
    let star_half = cov.half_norm(&theta_star)?;
    if star_half == 0.0 {
        return Err(invalid("sigma", "Sigma^(1/2) theta_star has zero norm"));
    }
    let mut corruption = Array1::zeros(cfg.d);
    if cfg.rho > 0.0 {
        let mut dir = Array1::zeros(cfg.d);
        dir[cfg.k] = 1.0;
        let dir_half = cov.half_norm(&dir)?;
        if dir_half == 0.0 {
            return Err(invalid(
                "sigma",
                "corruption direction has zero Sigma^(1/2) norm; rho unreachable",
            ));
        }
        corruption = dir * (cfg.rho * star_half / dir_half);
    }
    let pair = make_reward_pair(&subspace, &coords, &corruption)?;
    Ok(World {
        subspace,
        pair,
        cov,
    })
}

fn init_model(cfg: &ExperimentConfig, subspace: &Subspace, rng: &mut RngStream) -> Result<RndModel> {
    Ok(match cfg.rnd_variant {
        RndVariant::Linear => RndModel::Linear(init_linear_rnd(cfg.d, cfg.m, subspace, rng)?),
        RndVariant::Relu => {
            RndModel::Relu(init_relu_rnd(cfg.d, cfg.m, cfg.ensemble, subspace, rng)?)
        }
    })
}

/// Build and train an RND model for one trial (or globally), per config.
fn make_trained_model(
    cfg: &ExperimentConfig,
    world: &World,
    rng: &mut RngStream,
) -> Result<RndModel> {
    let mut model = init_model(cfg, &world.subspace, rng)?;
    match cfg.rnd_training {
        RndTraining::Idealized => model.train_idealized(),
        RndTraining::Gradient => {
            // V-supported training inputs drawn from the same stream
            let data: Vec<Array1<f64>> = (0..cfg.gradient_samples)
                .map(|_| {
                    let coords = Array1::from_shape_fn(cfg.k, |_| rng.normal());
                    world.subspace.embed(&coords)
                })
                .collect::<Result<_>>()?;
            model.train_gradient(&data, cfg.gradient_lr, cfg.gradient_epochs)?;
        }
    }
    Ok(model)
}

/// Row identity within a run: a candidate count, a method, and (for lcb)
/// the pessimism strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowKey {
    pub n: usize,
    pub method: Method,
    pub lambda: f64,
}

/// The fixed (n, method, λ) enumeration shared by every trial and by the
/// aggregation step.
pub fn row_keys(cfg: &ExperimentConfig) -> Vec<RowKey> {
    let mut keys = Vec::new();
    for &n in &cfg.n_grid {
        for &method in &cfg.methods {
            if method == Method::Lcb {
                for &lambda in &cfg.lambdas {
                    keys.push(RowKey { n, method, lambda });
                }
            } else {
                keys.push(RowKey {
                    n,
                    method,
                    lambda: 0.0,
                });
            }
        }
    }
    keys
}

/// One aggregate: mean true reward of the selected candidate with a 95%
/// normal-approximation CI, plus the mean uncertainty of what was selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub method: Method,
    pub lambda: f64,
    pub mean_true_reward: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub mean_selected_uncertainty: f64,
}

struct ScoredCandidates {
    candidates: Vec<Candidate>,
    true_rewards: Vec<f64>,
}

fn score_candidates(
    vectors: Vec<Array1<f64>>,
    world: &World,
    model: &RndModel,
    alpha: UncertaintyVariant,
) -> Result<ScoredCandidates> {
    let mut candidates = Vec::with_capacity(vectors.len());
    let mut true_rewards = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.into_iter().enumerate() {
        let proxy = eval_proxy(&world.pair, &v)?;
        let truth = eval_true(&world.pair, &v)?;
        let alpha_val = model.uncertainty(&v, alpha)?;
        true_rewards.push(truth);
        candidates.push(Candidate {
            index: i,
            vector: Some(v),
            proxy_score: proxy,
            uncertainty: alpha_val,
        });
    }
    Ok(ScoredCandidates {
        candidates,
        true_rewards,
    })
}

fn run_trial(
    cfg: &ExperimentConfig,
    world: &World,
    shared_model: Option<&RndModel>,
    keys: &[RowKey],
    trial: u64,
) -> Result<Vec<(f64, f64)>> {
    let model_storage;
    let model = match shared_model {
        Some(m) => m,
        None => {
            let mut rnd_rng = derive_stream(cfg.seed, (trial << 3) | CH_RND);
            model_storage = make_trained_model(cfg, world, &mut rnd_rng)?;
            &model_storage
        }
    };

    let n_max = *cfg.n_grid.last().unwrap();
    let mut cand_rng = derive_stream(cfg.seed, (trial << 3) | CH_CANDIDATES);
    let scored = score_candidates(
        sample_gaussian(&world.cov, &mut cand_rng, n_max),
        world,
        model,
        cfg.alpha_variant,
    )?;

    let mut softmax_rng = derive_stream(cfg.seed, (trial << 3) | CH_SOFTMAX);
    let mut poisson_rng = derive_stream(cfg.seed, (trial << 3) | CH_POISSON);

    let mut out = Vec::with_capacity(keys.len());
    for key in keys {
        let slate = &scored.candidates[..key.n];
        let (reward, uncertainty) = match key.method {
            Method::Oracle => {
                let o = select_oracle(slate, &world.pair)?;
                (
                    scored.true_rewards[o.chosen_index],
                    scored.candidates[o.chosen_index].uncertainty,
                )
            }
            Method::Bon => {
                let o = select_bon(slate)?;
                (
                    scored.true_rewards[o.chosen_index],
                    scored.candidates[o.chosen_index].uncertainty,
                )
            }
            Method::Lcb => {
                let o = select_lcb(slate, key.lambda)?;
                (
                    scored.true_rewards[o.chosen_index],
                    scored.candidates[o.chosen_index].uncertainty,
                )
            }
            Method::Softmax => {
                let o = select_softmax(slate, cfg.softmax_temperature, &mut softmax_rng)?;
                (
                    scored.true_rewards[o.chosen_index],
                    scored.candidates[o.chosen_index].uncertainty,
                )
            }
            Method::Poisson => {
                // Fresh draws with a random slate size of mean n; these do
                // not share the prefix candidates.
                let side = RefCell::new(None);
                // the slate-size draw and the candidate draws use separate
                // streams so the closure and select_poisson don't contend
                let mut sampler_rng = poisson_rng.substream(key.n as u64);
                let o = {
                    let sampler = |count: usize| -> Result<Vec<Candidate>> {
                        let fresh = score_candidates(
                            sample_gaussian(&world.cov, &mut sampler_rng, count),
                            world,
                            model,
                            cfg.alpha_variant,
                        )?;
                        let cands = fresh.candidates.clone();
                        *side.borrow_mut() = Some(fresh);
                        Ok(cands)
                    };
                    select_poisson(sampler, key.n as f64, &mut poisson_rng)?
                };
                let fresh = side.into_inner().expect("sampler ran");
                (
                    fresh.true_rewards[o.chosen_index],
                    fresh.candidates[o.chosen_index].uncertainty,
                )
            }
        };
        out.push((reward, uncertainty));
    }
    Ok(out)
}

/// Run the full experiment. Trials execute in parallel; results are
/// deterministic for a given (config, seed) at any worker count.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let world = build_world(cfg)?;
    let shared = if cfg.fresh_rnd {
        None
    } else {
        let mut rng = derive_stream(cfg.seed, GLOBAL_STREAM_BASE | CH_RND);
        Some(make_trained_model(cfg, &world, &mut rng)?)
    };
    let keys = row_keys(cfg);

    let per_trial: Vec<Vec<(f64, f64)>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, &world, shared.as_ref(), &keys, t))
        .collect::<Result<_>>()?;

    let trials = cfg.trials as f64;
    let rows = keys
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut alpha_sum = 0.0;
            for trial in &per_trial {
                let (r, a) = trial[i];
                sum += r;
                sum_sq += r * r;
                alpha_sum += a;
            }
            let mean = sum / trials;
            let var = if cfg.trials > 1 {
                ((sum_sq - sum * sum / trials) / (trials - 1.0)).max(0.0)
            } else {
                0.0
            };
            let se = (var / trials).sqrt();
            ResultRow {
                n: key.n,
                method: key.method,
                lambda: key.lambda,
                mean_true_reward: mean,
                std_error: se,
                ci_low: mean - 1.96 * se,
                ci_high: mean + 1.96 * se,
                trials: cfg.trials,
                mean_selected_uncertainty: alpha_sum / trials,
            }
        })
        .collect();
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Write rows as CSV (fixed column order) or a JSON array of objects.
pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_path(path)
                .map_err(|e| Error::Serde(e.to_string()))?;
            for row in rows {
                writer
                    .serialize(row)
                    .map_err(|e| Error::Serde(e.to_string()))?;
            }
            writer.flush().map_err(|e| Error::io(path.display().to_string(), e))
        }
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(rows).map_err(|e| Error::Serde(e.to_string()))?;
            std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
        }
    }
}

/// Read rows back from a CSV written by [`write_results`].
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Serde(e.to_string()))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Serde(e.to_string())))
        .collect()
}

/// Aligned text table of all rows, followed by a peak/final digest per
/// (method, λ): the best mean over the n grid and the mean at the largest n.
pub fn summarize(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:>6} {:>8} {:>8} {:>12} {:>10} {:>12} {:>12} {:>8} {:>12}\n",
        "n", "method", "lambda", "mean", "se", "ci_low", "ci_high", "trials", "alpha"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:>6} {:>8} {:>8.3} {:>12.5} {:>10.5} {:>12.5} {:>12.5} {:>8} {:>12.5}\n",
            r.n,
            r.method.to_string(),
            r.lambda,
            r.mean_true_reward,
            r.std_error,
            r.ci_low,
            r.ci_high,
            r.trials,
            r.mean_selected_uncertainty
        ));
    }
    out.push('\n');
    out.push_str("peak/final per method:\n");
    let mut groups: Vec<(Method, f64)> = Vec::new();
    for r in rows {
        if !groups
            .iter()
            .any(|&(m, l)| m == r.method && l == r.lambda)
        {
            groups.push((r.method, r.lambda));
        }
    }
    for (method, lambda) in groups {
        let members: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.method == method && r.lambda == lambda)
            .collect();
        let peak = members
            .iter()
            .max_by(|a, b| a.mean_true_reward.total_cmp(&b.mean_true_reward))
            .unwrap();
        let last = members.iter().max_by_key(|r| r.n).unwrap();
        out.push_str(&format!(
            "  {:>8} λ={:<6.3} peak {:.5} at n={} / final {:.5} at n={}\n",
            method.to_string(),
            lambda,
            peak.mean_true_reward,
            peak.n,
            last.mean_true_reward,
            last.n
        ));
    }
    Ok(out)
}
