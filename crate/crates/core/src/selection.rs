//! Candidate scoring and selection policies: plain Best-of-N, pessimistic
//! LCB, true-reward oracle, softmax Best-of-N, and Best-of-Poisson.
//! Ties always break toward the smallest index so every policy is
//! deterministic given its inputs (and stream, where one is used).

use ndarray::Array1;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rewards::{eval_true, RewardPair};
use crate::rng::RngStream;

/// One candidate response: an optional embedding vector, the proxy score
/// and the uncertainty assigned to it.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub index: usize,
    pub vector: Option<Array1<f64>>,
    pub proxy_score: f64,
    pub uncertainty: f64,
}

impl Candidate {
    pub fn scored(index: usize, proxy_score: f64, uncertainty: f64) -> Candidate {
        Candidate {
            index,
            vector: None,
            proxy_score,
            uncertainty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Oracle,
    Bon,
    Lcb,
    Softmax,
    Poisson,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Oracle => "oracle",
            Method::Bon => "bon",
            Method::Lcb => "lcb",
            Method::Softmax => "softmax",
            Method::Poisson => "poisson",
        };
        f.write_str(s)
    }
}

/// Result of a selection: the chosen candidate's index, the method, the
/// winning LCB score when applicable, and per-candidate final scores.
#[derive(Debug, Clone)]
pub struct SelectionOutcome {
    pub chosen_index: usize,
    pub method: Method,
    pub lcb_score: Option<f64>,
    pub diagnostics: Vec<f64>,
}

/// Position of the first maximum (smallest-index tie break).
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// î = argmax of the proxy score.
pub fn select_bon(slate: &[Candidate]) -> Result<SelectionOutcome> {
    if slate.is_empty() {
        return Err(Error::EmptySlate);
    }
    let scores: Vec<f64> = slate.iter().map(|c| c.proxy_score).collect();
    let pos = argmax(&scores);
    Ok(SelectionOutcome {
        chosen_index: slate[pos].index,
        method: Method::Bon,
        lcb_score: None,
        diagnostics: scores,
    })
}

/// i_pess = argmax of proxy_score − λ·uncertainty.
pub fn select_lcb(slate: &[Candidate], lambda: f64) -> Result<SelectionOutcome> {
    if slate.is_empty() {
        return Err(Error::EmptySlate);
    }
    if lambda < 0.0 {
        return Err(Error::NegativeLambda(lambda));
    }
    let scores: Vec<f64> = slate
        .iter()
        .map(|c| c.proxy_score - lambda * c.uncertainty)
        .collect();
    let pos = argmax(&scores);
    Ok(SelectionOutcome {
        chosen_index: slate[pos].index,
        method: Method::Lcb,
        lcb_score: Some(scores[pos]),
        diagnostics: scores,
    })
}

/// i* = argmax of the true reward; candidates must carry vectors.
pub fn select_oracle(slate: &[Candidate], pair: &RewardPair) -> Result<SelectionOutcome> {
    if slate.is_empty() {
        return Err(Error::EmptySlate);
    }
    let mut scores = Vec::with_capacity(slate.len());
    for c in slate {
        let v = c
            .vector
            .as_ref()
            .ok_or(Error::MissingVector { index: c.index })?;
        scores.push(eval_true(pair, v)?);
    }
    let pos = argmax(&scores);
    Ok(SelectionOutcome {
        chosen_index: slate[pos].index,
        method: Method::Oracle,
        lcb_score: None,
        diagnostics: scores,
    })
}

/// Sample an index with probability ∝ exp(proxy_score / temperature),
/// computed with max-subtraction.
pub fn select_softmax(
    slate: &[Candidate],
    temperature: f64,
    rng: &mut RngStream,
) -> Result<SelectionOutcome> {
    if slate.is_empty() {
        return Err(Error::EmptySlate);
    }
    if temperature <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: format!("must be positive, got {temperature}"),
        });
    }
    for c in slate {
        if !c.proxy_score.is_finite() {
            return Err(Error::NonFiniteScore { index: c.index });
        }
    }
    let max = slate
        .iter()
        .map(|c| c.proxy_score)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = slate
        .iter()
        .map(|c| ((c.proxy_score - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut pos = slate.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            pos = i;
            break;
        }
    }
    Ok(SelectionOutcome {
        chosen_index: slate[pos].index,
        method: Method::Softmax,
        lcb_score: None,
        diagnostics: probs,
    })
}

/// Draw n ~ Poisson(mu) clamped to >= 1, generate n candidates with the
/// sampler, and apply plain Best-of-N to them.
pub fn select_poisson<F>(
    mut sampler: F,
    mu: f64,
    rng: &mut RngStream,
) -> Result<SelectionOutcome>
where
    F: FnMut(usize) -> Result<Vec<Candidate>>,
{
    if mu <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "mu",
            reason: format!("must be positive, got {mu}"),
        });
    }
    let poisson = Poisson::new(mu).map_err(|e| Error::InvalidParameter {
        name: "mu",
        reason: e.to_string(),
    })?;
    let raw: f64 = poisson.sample(rng);
    let n = (raw as usize).max(1);
    let slate = sampler(n)?;
    let mut outcome = select_bon(&slate)?;
    outcome.method = Method::Poisson;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Subspace;
    use crate::rewards::make_reward_pair;
    use crate::rng::derive_stream;
    use ndarray::Array1;

    fn slate_from(scores: &[f64]) -> Vec<Candidate> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| Candidate::scored(i, s, 0.0))
            .collect()
    }

    #[test]
    fn bon_single_and_ties() {
        assert_eq!(select_bon(&slate_from(&[3.0])).unwrap().chosen_index, 0);
        assert_eq!(
            select_bon(&slate_from(&[1.0, 1.0, 0.5])).unwrap().chosen_index,
            0
        );
        assert_eq!(
            select_bon(&slate_from(&[0.2, 0.9, 0.9])).unwrap().chosen_index,
            1
        );
    }

    #[test]
    fn empty_slate_rejected() {
        assert!(matches!(select_bon(&[]), Err(Error::EmptySlate)));
        assert!(matches!(select_lcb(&[], 0.0), Err(Error::EmptySlate)));
    }

    #[test]
    fn lcb_arithmetic() {
        let slate = vec![
            Candidate::scored(0, 2.0, 3.0),
            Candidate::scored(1, 1.0, 0.5),
        ];
        let out = select_lcb(&slate, 1.0).unwrap();
        assert_eq!(out.chosen_index, 1);
        assert_eq!(out.lcb_score, Some(0.5));
    }

    #[test]
    fn lcb_zero_lambda_reduces_to_bon() {
        let mut rng = derive_stream(20, 0);
        for _ in 0..200 {
            let slate: Vec<Candidate> = (0..6)
                .map(|i| Candidate::scored(i, rng.normal(), rng.normal().abs()))
                .collect();
            assert_eq!(
                select_lcb(&slate, 0.0).unwrap().chosen_index,
                select_bon(&slate).unwrap().chosen_index
            );
        }
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(matches!(
            select_lcb(&slate_from(&[1.0]), -0.1),
            Err(Error::NegativeLambda(_))
        ));
    }

    #[test]
    fn scaling_invariance() {
        let slate = vec![
            Candidate::scored(0, 2.0, 3.0),
            Candidate::scored(1, 1.0, 0.5),
            Candidate::scored(2, -1.0, 0.1),
        ];
        let scaled: Vec<Candidate> = slate
            .iter()
            .map(|c| Candidate::scored(c.index, 4.0 * c.proxy_score, 4.0 * c.uncertainty))
            .collect();
        assert_eq!(
            select_lcb(&slate, 1.0).unwrap().chosen_index,
            select_lcb(&scaled, 1.0).unwrap().chosen_index
        );
    }

    #[test]
    fn oracle_matches_brute_force() {
        let s = Subspace::coordinate(3, 1).unwrap();
        let pair = make_reward_pair(
            &s,
            &Array1::from_vec(vec![1.0]),
            &Array1::from_vec(vec![0.0, 2.0, 0.0]),
        )
        .unwrap();
        let mut rng = derive_stream(21, 0);
        for _ in 0..50 {
            let slate: Vec<Candidate> = (0..5)
                .map(|i| Candidate {
                    index: i,
                    vector: Some(Array1::from_shape_fn(3, |_| rng.normal())),
                    proxy_score: 0.0,
                    uncertainty: 0.0,
                })
                .collect();
            let out = select_oracle(&slate, &pair).unwrap();
            // brute-force: max first coordinate
            let best = slate
                .iter()
                .max_by(|a, b| {
                    a.vector.as_ref().unwrap()[0]
                        .partial_cmp(&b.vector.as_ref().unwrap()[0])
                        .unwrap()
                })
                .unwrap();
            assert_eq!(out.chosen_index, best.index);
        }
    }

    #[test]
    fn oracle_needs_vectors() {
        let s = Subspace::coordinate(2, 1).unwrap();
        let pair = make_reward_pair(
            &s,
            &Array1::from_vec(vec![1.0]),
            &Array1::zeros(2),
        )
        .unwrap();
        assert!(matches!(
            select_oracle(&slate_from(&[1.0]), &pair),
            Err(Error::MissingVector { index: 0 })
        ));
    }

    #[test]
    fn softmax_zero_temperature_limit() {
        let slate = slate_from(&[0.1, 5.0, 2.0]);
        let mut rng = derive_stream(22, 0);
        for _ in 0..100 {
            let out = select_softmax(&slate, 1e-9, &mut rng).unwrap();
            assert_eq!(out.chosen_index, 1);
        }
    }

    #[test]
    fn softmax_equal_scores_fair() {
        let slate = slate_from(&[1.0, 1.0]);
        let mut rng = derive_stream(23, 0);
        let trials = 100_000;
        let mut picks = 0usize;
        for _ in 0..trials {
            if select_softmax(&slate, 1.0, &mut rng).unwrap().chosen_index == 0 {
                picks += 1;
            }
        }
        let freq = picks as f64 / trials as f64;
        assert!((0.48..=0.52).contains(&freq), "freq = {freq}");
    }

    #[test]
    fn softmax_closed_form_probability() {
        // scores (0, 1), tau = 1: P(pick 1) = e/(1+e)
        let slate = slate_from(&[0.0, 1.0]);
        let mut rng = derive_stream(24, 0);
        let trials = 100_000;
        let mut picks = 0usize;
        for _ in 0..trials {
            if select_softmax(&slate, 1.0, &mut rng).unwrap().chosen_index == 1 {
                picks += 1;
            }
        }
        let p = std::f64::consts::E / (1.0 + std::f64::consts::E);
        let freq = picks as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} vs {p}");
    }

    #[test]
    fn softmax_shift_invariance() {
        let a = slate_from(&[0.0, 1.0, 2.0]);
        let b = slate_from(&[10.0, 11.0, 12.0]);
        let pa = select_softmax(&a, 1.0, &mut derive_stream(25, 0))
            .unwrap()
            .diagnostics;
        let pb = select_softmax(&b, 1.0, &mut derive_stream(25, 0))
            .unwrap()
            .diagnostics;
        for (x, y) in pa.iter().zip(pb.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_tiny_mu_clamps_to_one() {
        let mut rng = derive_stream(26, 0);
        let out = select_poisson(
            |n| {
                assert_eq!(n, 1);
                Ok(slate_from(&[0.7]))
            },
            1e-9,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.chosen_index, 0);
        assert_eq!(out.method, Method::Poisson);
    }

    #[test]
    fn poisson_mean_draw_count() {
        let mut rng = derive_stream(27, 0);
        let trials = 100_000;
        let mut total = 0usize;
        for _ in 0..trials {
            select_poisson(
                |n| {
                    total += n;
                    Ok(slate_from(&[0.0]))
                },
                8.0,
                &mut rng,
            )
            .unwrap();
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 8.0).abs() < 0.08, "mean = {mean}");
    }

    #[test]
    fn poisson_sampler_error_propagates() {
        let mut rng = derive_stream(28, 0);
        let res = select_poisson(|_| Err(Error::EmptySlate), 4.0, &mut rng);
        assert!(matches!(res, Err(Error::EmptySlate)));
    }

    #[test]
    fn lambda_monotone_selected_uncertainty() {
        let mut rng = derive_stream(29, 0);
        for _ in 0..100 {
            let slate: Vec<Candidate> = (0..8)
                .map(|i| Candidate::scored(i, rng.normal(), rng.normal().abs()))
                .collect();
            let mut prev = f64::INFINITY;
            for &lambda in &[0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
                let idx = select_lcb(&slate, lambda).unwrap().chosen_index;
                let u = slate[idx].uncertainty;
                assert!(u <= prev + 1e-12);
                prev = u;
            }
        }
    }
}
