//! Plug-in label inference from estimated skills.
//!
//! With known skills the optimal rule is log-odds weighted majority voting:
//! each worker's vote counts with weight `v_i = log((1+s_i)/(1-s_i))`
//! (binary) or `v_i = log((M-1) p_i / (1-p_i))` with `p_i = ((M-1)s_i+1)/M`
//! (multiclass), and each task takes the class with the largest weight sum.
//! Its per-task error is governed by the committee potential
//! `Phi = sum_i s_i v_i`.
//!
//! Ties are broken deterministically: toward `+1` (class 1) for binary
//! problems and toward the lowest class index otherwise. Tasks with no
//! observations abstain (`None`) and are excluded from error metrics.

use crate::error::{Error, Result};
use crate::observations::ObservationSet;
use crate::solver::SkillVector;

/// Binary log-odds weights `v_i = log((1+s_i)/(1-s_i))`.
pub fn log_odds_weights(skills: &SkillVector) -> Result<Vec<f64>> {
    if skills.class_count() != 2 {
        return Err(Error::InvalidParameter(format!(
            "log-odds weights require M = 2, got M = {}",
            skills.class_count()
        )));
    }
    skills
        .values()
        .iter()
        .enumerate()
        .map(|(worker, &s)| {
            if s.abs() >= 1.0 {
                Err(Error::InfiniteWeight { worker })
            } else {
                Ok(((1.0 + s) / (1.0 - s)).ln())
            }
        })
        .collect()
}

/// Multiclass weights `v_i = log((M-1) p_i / (1-p_i))`; reduces to
/// [`log_odds_weights`] exactly at `M = 2`.
pub fn multiclass_weights(skills: &SkillVector, class_count: usize) -> Result<Vec<f64>> {
    if class_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "class_count must be >= 2, got {class_count}"
        )));
    }
    if class_count == 2 {
        return log_odds_weights(skills);
    }
    let m = class_count as f64;
    skills
        .values()
        .iter()
        .enumerate()
        .map(|(worker, &s)| {
            let p = ((m - 1.0) * s + 1.0) / m;
            if p <= 0.0 || p >= 1.0 {
                Err(Error::InfiniteWeight { worker })
            } else {
                Ok(((m - 1.0) * p / (1.0 - p)).ln())
            }
        })
        .collect()
}

/// Deterministic argmax: binary prefers class 1 (`+1`) on ties, multiclass
/// the lowest class index.
fn pick_label(scores: &[f64], class_count: usize) -> usize {
    if class_count == 2 {
        return usize::from(scores[1] >= scores[0]);
    }
    let mut best = 0;
    for (l, &score) in scores.iter().enumerate().skip(1) {
        if score > scores[best] {
            best = l;
        }
    }
    best
}

fn weighted_predict(
    obs: &ObservationSet,
    weights: &[f64],
    class_count: usize,
) -> Vec<Option<usize>> {
    obs.votes_by_task()
        .iter()
        .map(|votes| {
            if votes.is_empty() {
                return None;
            }
            let mut scores = vec![0.0f64; class_count];
            for &(worker, label) in votes {
                scores[label] += weights[worker];
            }
            Some(pick_label(&scores, class_count))
        })
        .collect()
}

/// MAP prediction for binary tasks; `None` marks abstentions.
pub fn map_predict_binary(obs: &ObservationSet, skills: &SkillVector) -> Result<Vec<Option<usize>>> {
    if obs.class_count() != 2 {
        return Err(Error::InvalidParameter(format!(
            "binary prediction requires M = 2, got M = {}",
            obs.class_count()
        )));
    }
    if skills.len() != obs.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: obs.worker_count(),
            got: skills.len(),
        });
    }
    let weights = log_odds_weights(skills)?;
    Ok(weighted_predict(obs, &weights, 2))
}

/// MAP prediction for `M`-class tasks.
pub fn map_predict_multiclass(
    obs: &ObservationSet,
    skills: &SkillVector,
) -> Result<Vec<Option<usize>>> {
    if skills.len() != obs.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: obs.worker_count(),
            got: skills.len(),
        });
    }
    let m = obs.class_count();
    let weights = multiclass_weights(skills, m)?;
    Ok(weighted_predict(obs, &weights, m))
}

/// Unweighted plurality baseline with the same tie conventions.
pub fn majority_vote(obs: &ObservationSet) -> Vec<Option<usize>> {
    let m = obs.class_count();
    obs.votes_by_task()
        .iter()
        .map(|votes| {
            if votes.is_empty() {
                return None;
            }
            let mut counts = vec![0.0f64; m];
            for &(_, label) in votes {
                counts[label] += 1.0;
            }
            Some(pick_label(&counts, m))
        })
        .collect()
}

/// Committee potential and the induced bounds on the optimal rule's
/// per-task error probability.
#[derive(Debug, Clone, Copy)]
pub struct CommitteePotential {
    /// `Phi = sum_i s_i log((1+s_i)/(1-s_i))`.
    pub phi: f64,
    /// `exp(-Phi/2)`.
    pub error_upper: f64,
    /// `3 / (4 (1 + exp(2 Phi + 4 sqrt(Phi))))`.
    pub error_lower: f64,
}

/// Computes the committee potential of a binary skill vector.
pub fn committee_potential(skills: &SkillVector) -> Result<CommitteePotential> {
    let weights = log_odds_weights(skills)?;
    let phi: f64 = skills
        .values()
        .iter()
        .zip(&weights)
        .map(|(s, v)| s * v)
        .sum();
    Ok(CommitteePotential {
        phi,
        error_upper: (-phi / 2.0).exp(),
        error_lower: 3.0 / (4.0 * (1.0 + (2.0 * phi + 4.0 * phi.sqrt()).exp())),
    })
}

/// Aggregated multiplicative weight-error bound: per worker
/// `delta_i = max(|(1+e_i)/(1+s_i) - 1|, |(1-e_i)/(1-s_i) - 1|)`, summed as
/// `sum_i 2 delta_i`, an upper bound on `||v* - v_hat||_1` within the
/// multiplicative-ratio hypothesis.
pub fn weight_error_bound(skills_true: &SkillVector, skills_est: &SkillVector) -> Result<f64> {
    if skills_true.len() != skills_est.len() {
        return Err(Error::DimensionMismatch {
            expected: skills_true.len(),
            got: skills_est.len(),
        });
    }
    let mut total = 0.0;
    for (worker, (&s, &e)) in skills_true
        .values()
        .iter()
        .zip(skills_est.values())
        .enumerate()
    {
        if s.abs() >= 1.0 {
            return Err(Error::InfiniteWeight { worker });
        }
        let d_plus = ((1.0 + e) / (1.0 + s) - 1.0).abs();
        let d_minus = ((1.0 - e) / (1.0 - s) - 1.0).abs();
        total += 2.0 * d_plus.max(d_minus);
    }
    Ok(total)
}

/// Fraction of non-abstained tasks predicted incorrectly, plus the abstain
/// count.
pub fn prediction_error(predictions: &[Option<usize>], truth: &[usize]) -> (f64, usize) {
    let mut wrong = 0usize;
    let mut scored = 0usize;
    let mut abstained = 0usize;
    for (pred, &t) in predictions.iter().zip(truth) {
        match pred {
            Some(l) => {
                scored += 1;
                if *l != t {
                    wrong += 1;
                }
            }
            None => abstained += 1,
        }
    }
    let pe = if scored == 0 {
        0.0
    } else {
        wrong as f64 / scored as f64
    };
    (pe, abstained)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observations::Observation;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one_task(labels: &[usize], class_count: usize) -> ObservationSet {
        let triples = labels
            .iter()
            .enumerate()
            .map(|(w, &l)| Observation { worker: w, task: 0, label: l })
            .collect();
        ObservationSet::new(labels.len(), 1, class_count, triples).unwrap()
    }

    #[test]
    fn log_odds_examples() {
        let s = SkillVector::new_binary(vec![0.0, 0.5, -0.5]).unwrap();
        let v = log_odds_weights(&s).unwrap();
        assert_eq!(v[0], 0.0);
        assert_relative_eq!(v[1], 3.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(v[1], 1.0986, epsilon = 1e-4);
        // Odd function.
        assert_relative_eq!(v[2], -v[1], epsilon = 1e-12);

        let hard = SkillVector::new_binary(vec![1.0]).unwrap();
        assert!(matches!(
            log_odds_weights(&hard),
            Err(Error::InfiniteWeight { worker: 0 })
        ));
    }

    #[test]
    fn binary_map_examples() {
        // Skills (0.9, 0.1, 0.1), votes (+1, -1, -1) -> weight 2.944 beats
        // 0.4014 -> predict +1 (class 1).
        let skills = SkillVector::new_binary(vec![0.9, 0.1, 0.1]).unwrap();
        let obs = one_task(&[1, 0, 0], 2);
        let pred = map_predict_binary(&obs, &skills).unwrap();
        assert_eq!(pred, vec![Some(1)]);
        let v = log_odds_weights(&skills).unwrap();
        assert_relative_eq!(v[0], 2.944, epsilon = 1e-3);
        assert_relative_eq!(v[1], 0.2007, epsilon = 1e-4);

        // Single worker with positive skill: prediction equals their label.
        let solo = SkillVector::new_binary(vec![0.7]).unwrap();
        assert_eq!(map_predict_binary(&one_task(&[0], 2), &solo).unwrap(), vec![Some(0)]);

        // All-equal skills reduce to majority vote.
        let equal = SkillVector::new_binary(vec![0.4; 5]).unwrap();
        let obs = one_task(&[1, 1, 0, 1, 0], 2);
        assert_eq!(
            map_predict_binary(&obs, &equal).unwrap(),
            majority_vote(&obs)
        );
    }

    #[test]
    fn multiclass_map_examples() {
        // M = 4, p = (0.7, 0.55, 0.4) -> weights ~ (1.946, 1.299, 0.693);
        // votes (2, 2, 3) -> class 2.
        let m = 4;
        let s: Vec<f64> = [0.7, 0.55, 0.4]
            .iter()
            .map(|p| (m as f64 * p - 1.0) / (m as f64 - 1.0))
            .collect();
        let skills = SkillVector::new_multiclass(s, m).unwrap();
        let w = multiclass_weights(&skills, m).unwrap();
        assert_relative_eq!(w[0], 1.946, epsilon = 1e-3);
        assert_relative_eq!(w[1], 1.299, epsilon = 1e-3);
        assert_relative_eq!(w[2], 0.693, epsilon = 1e-3);
        let obs = one_task(&[2, 2, 3], m);
        assert_eq!(map_predict_multiclass(&obs, &skills).unwrap(), vec![Some(2)]);

        // Uninformative crowd: all weights 0, tie-break to class 0.
        let zeros = SkillVector::new_multiclass(vec![0.0; 3], 3).unwrap();
        let w = multiclass_weights(&zeros, 3).unwrap();
        assert!(w.iter().all(|&x| x.abs() < 1e-12));
        let obs = one_task(&[0, 1, 2], 3);
        assert_eq!(map_predict_multiclass(&obs, &zeros).unwrap(), vec![Some(0)]);
    }

    #[test]
    fn binary_and_multiclass_paths_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = 5;
            let t = 12;
            let values: Vec<f64> = (0..w).map(|_| 1.8 * rng.random::<f64>() - 0.9).collect();
            let skills = SkillVector::new_binary(values).unwrap();
            let mut triples = Vec::new();
            for task in 0..t {
                for worker in 0..w {
                    if rng.random::<f64>() < 0.7 {
                        triples.push(Observation {
                            worker,
                            task,
                            label: usize::from(rng.random::<bool>()),
                        });
                    }
                }
            }
            for worker in 0..w {
                triples.push(Observation { worker, task: 0, label: 1 });
            }
            triples.sort_by_key(|o| (o.worker, o.task));
            triples.dedup_by_key(|o| (o.worker, o.task));
            let obs = ObservationSet::new(w, t, 2, triples).unwrap();
            assert_eq!(
                map_predict_binary(&obs, &skills).unwrap(),
                map_predict_multiclass(&obs, &skills).unwrap()
            );
        }
    }

    #[test]
    fn majority_vote_examples() {
        assert_eq!(majority_vote(&one_task(&[1, 1, 0], 2)), vec![Some(1)]);
        // Binary tie goes to +1.
        assert_eq!(majority_vote(&one_task(&[1, 0], 2)), vec![Some(1)]);
        // M = 3, votes (0, 0, 1, 2, 2, 2) -> class 2.
        assert_eq!(majority_vote(&one_task(&[0, 0, 1, 2, 2, 2], 3)), vec![Some(2)]);
    }

    #[test]
    fn abstains_on_empty_tasks() {
        let triples = vec![
            Observation { worker: 0, task: 0, label: 1 },
            Observation { worker: 1, task: 0, label: 1 },
        ];
        let obs = ObservationSet::new(2, 2, 2, triples).unwrap();
        let skills = SkillVector::new_binary(vec![0.5, 0.5]).unwrap();
        let pred = map_predict_binary(&obs, &skills).unwrap();
        assert_eq!(pred, vec![Some(1), None]);
        let (pe, abstained) = prediction_error(&pred, &[1, 0]);
        assert_eq!(pe, 0.0);
        assert_eq!(abstained, 1);
    }

    #[test]
    fn committee_potential_examples() {
        let zero = SkillVector::new_binary(vec![0.0; 4]).unwrap();
        let c = committee_potential(&zero).unwrap();
        assert_eq!(c.phi, 0.0);
        assert_eq!(c.error_upper, 1.0);

        // W = 3, s = 0.5 each: Phi = 1.5 ln 3, upper = exp(-Phi/2).
        let half = SkillVector::new_binary(vec![0.5; 3]).unwrap();
        let c = committee_potential(&half).unwrap();
        assert_relative_eq!(c.phi, 1.5 * 3.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(c.phi, 1.648, epsilon = 1e-3);
        assert_relative_eq!(c.error_upper, 0.4387, epsilon = 1e-4);
        assert!(c.error_lower > 0.0 && c.error_lower < c.error_upper);

        // Phi is invariant under global sign flip.
        let flipped = SkillVector::new_binary(vec![-0.5; 3]).unwrap();
        assert_relative_eq!(
            committee_potential(&flipped).unwrap().phi,
            c.phi,
            epsilon = 1e-12
        );
    }

    #[test]
    fn weight_error_bound_examples() {
        let s = SkillVector::new_binary(vec![0.3, -0.2]).unwrap();
        assert_eq!(weight_error_bound(&s, &s).unwrap(), 0.0);

        // s = 0, e = 0.1: delta = 0.1, bound 0.2 against |v(0.1) - v(0)| =
        // 0.2007 -- the raw bound is tight only inside the ratio hypothesis,
        // so the check allows 1e-2 slack at this scale.
        let t = SkillVector::new_binary(vec![0.0]).unwrap();
        let e = SkillVector::new_binary(vec![0.1]).unwrap();
        let bound = weight_error_bound(&t, &e).unwrap();
        assert_relative_eq!(bound, 0.2, epsilon = 1e-12);
        let v_gap = (log_odds_weights(&e).unwrap()[0] - log_odds_weights(&t).unwrap()[0]).abs();
        assert_relative_eq!(v_gap, 0.2007, epsilon = 1e-4);
        assert!(v_gap <= bound + 1e-2);

        // Coordinate-wise sign symmetry.
        let t2 = SkillVector::new_binary(vec![-0.0]).unwrap();
        let e2 = SkillVector::new_binary(vec![-0.1]).unwrap();
        assert_relative_eq!(
            weight_error_bound(&t2, &e2).unwrap(),
            bound,
            epsilon = 1e-12
        );

        let hard = SkillVector::new_binary(vec![1.0]).unwrap();
        assert!(weight_error_bound(&hard, &e).is_err());
    }

    proptest! {
        // Scaling all weights by a positive constant never changes labels.
        // Power-of-two scales keep the products exact so the check is not
        // polluted by rounding on near-ties.
        #[test]
        fn argmax_scale_invariance(
            exponent in -6i32..7,
            labels in proptest::collection::vec(0usize..3, 1..12),
        ) {
            let scale = 2.0f64.powi(exponent);
            let w = labels.len();
            let obs = one_task(&labels, 3);
            let values: Vec<f64> = (0..w).map(|i| -0.3 + 0.4 * (i as f64 % 3.0)).collect();
            let skills = SkillVector::new_multiclass(values, 3).unwrap();
            let base = multiclass_weights(&skills, 3).unwrap();
            let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
            let predict = |wts: &[f64]| -> Vec<Option<usize>> {
                super::weighted_predict(&obs, wts, 3)
            };
            prop_assert_eq!(predict(&base), predict(&scaled));
        }
    }
}
