//! Central finite-difference check of the pairwise hinge gradient.

use rand::seq::index;

use super::train::accumulate_pair;
use super::{CoherenceModel, Params, PAD};
use crate::error::{Error, Result};
use crate::grid::GridSequence;
use crate::seed;

pub const GRADCHECK_EPSILON: f64 = 1e-4;

/// Smallest distance from the hinge kink at which a pair is accepted.
const BOUNDARY_TOL: f64 = 1e-6;

fn pair_loss(model: &CoherenceModel, pos: &GridSequence, neg: &GridSequence) -> f64 {
    probe_pair(model, pos, neg).0
}

/// Pooling winners and ReLU states of one sequence.
type Pattern = (Vec<u32>, Vec<bool>);

/// Pre-hinge loss plus the pooling/ReLU pattern of both sequences.
fn probe_pair(
    model: &CoherenceModel,
    pos: &GridSequence,
    neg: &GridSequence,
) -> (f64, [Pattern; 2]) {
    let table = model.projection();
    let (a, ca) = model.forward(pos, &table, None);
    let (b, cb) = model.forward(neg, &table, None);
    (
        1.0 - a + b,
        [(ca.argmax, ca.active), (cb.argmax, cb.active)],
    )
}

/// Analytic gradient of the hinge loss for one pair (dropout off).
pub(crate) fn analytic_gradient(
    model: &CoherenceModel,
    pos: &GridSequence,
    neg: &GridSequence,
) -> Params {
    let table = model.projection();
    let mut grad = Params::zeros(&model.hp);
    let mut proj = model.empty_projection_grad();
    accumulate_pair(model, &table, pos, neg, None, &mut grad, &mut proj);
    model.resolve_projection_grad(&proj, &mut grad);
    grad
}

/// `(group, index)` coordinates: an even share from each group, the padding
/// row excluded, topped up from the largest groups until `samples` is reached.
fn sample_coordinates(model: &CoherenceModel, samples: usize, seed: u64) -> Vec<(usize, usize)> {
    let d = model.hp.emb_dim;
    let eligible: Vec<Vec<usize>> = model
        .params
        .groups()
        .iter()
        .enumerate()
        .map(|(g, slice)| {
            (0..slice.len())
                .filter(|&i| g != 0 || i / d != PAD)
                .collect()
        })
        .collect();
    let mut rng = seed::rng(seed);
    let mut out = Vec::new();
    let share = samples.div_ceil(eligible.len());
    let mut taken = vec![0usize; eligible.len()];
    for (g, pool) in eligible.iter().enumerate() {
        taken[g] = share.min(pool.len());
    }
    let mut total: usize = taken.iter().sum();
    for (g, pool) in eligible.iter().enumerate() {
        if total >= samples {
            break;
        }
        let extra = (samples - total).min(pool.len() - taken[g]);
        taken[g] += extra;
        total += extra;
    }
    for (g, pool) in eligible.iter().enumerate() {
        for i in index::sample(&mut rng, pool.len(), taken[g]) {
            out.push((g, pool[i]));
        }
    }
    out
}

/// Max relative error between `analytic` and central differences of the
/// pair's hinge loss over sampled coordinates.
///
/// Coordinates whose perturbation changes a pooling winner or a ReLU state
/// straddle a kink and are skipped; an error is returned if none remain.
pub fn compare_gradients(
    model: &CoherenceModel,
    pos: &GridSequence,
    neg: &GridSequence,
    analytic: &Params,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let margin = pair_loss(model, pos, neg);
    if margin.abs() < BOUNDARY_TOL {
        return Err(Error::validation(
            "pair sits on the hinge boundary; choose a different pair",
        ));
    }
    let base = probe_pair(model, pos, neg).1;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for (g, i) in sample_coordinates(model, samples, seed) {
        let original = probe.params.groups()[g][i];
        probe.params.groups_mut()[g][i] = original + epsilon;
        let (plus, pattern_plus) = probe_pair(&probe, pos, neg);
        probe.params.groups_mut()[g][i] = original - epsilon;
        let (minus, pattern_minus) = probe_pair(&probe, pos, neg);
        probe.params.groups_mut()[g][i] = original;
        if (plus > 0.0) != (margin > 0.0) || (minus > 0.0) != (margin > 0.0) {
            return Err(Error::validation(
                "perturbation crosses the hinge boundary; choose a different pair",
            ));
        }
        if pattern_plus != base || pattern_minus != base {
            continue;
        }
        checked += 1;
        let numeric = (plus.max(0.0) - minus.max(0.0)) / (2.0 * epsilon);
        let a = analytic.groups()[g][i];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    if checked == 0 {
        return Err(Error::validation(
            "every sampled coordinate straddles a kink; choose a different pair",
        ));
    }
    Ok(worst)
}

/// Check backpropagation of the hinge loss for one pair against central
/// finite differences on `samples` parameters (at least 200 recommended).
pub fn gradient_check(
    model: &CoherenceModel,
    pos: &GridSequence,
    neg: &GridSequence,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    model.check_len(pos)?;
    model.check_len(neg)?;
    let analytic = analytic_gradient(model, pos, neg);
    compare_gradients(model, pos, neg, &analytic, epsilon, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridToken::{self, *};
    use crate::neural::{init_model, HyperParams};
    use rand::Rng;

    fn model() -> CoherenceModel {
        let hp = HyperParams {
            emb_dim: 6,
            filters: 5,
            window: 3,
            pool: 3,
            seq_len: 40,
            dropout: 0.0,
            ..Default::default()
        };
        let mut m = init_model(hp, 4).unwrap();
        let mut rng = seed::rng(99);
        m.params
            .filter_bias
            .iter_mut()
            .for_each(|b| *b = rng.gen_range(-0.01..0.01));
        m.params
            .score_weights
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-0.5..0.5));
        m
    }

    fn seq(pattern: &[GridToken], len: usize) -> GridSequence {
        let mut t = pattern.to_vec();
        t.resize(len, Pad);
        GridSequence::new(t)
    }

    #[test]
    fn healthy_gradients_match() {
        let m = model();
        let pos = seq(
            &[S, O, Absent, S, X, Absent, O, S, Absent, Absent, X, S],
            40,
        );
        let neg = seq(&[O, S, X, Absent, Absent, S, S, Absent, O, X, Absent], 40);
        let err = gradient_check(&m, &pos, &neg, GRADCHECK_EPSILON, 200, 1).unwrap();
        assert!(err <= 1e-3, "max relative error {err}");
    }

    #[test]
    fn flat_region_gives_zero_score_gradients() {
        let mut m = model();
        let pos = seq(&[S, O], 40);
        let neg = seq(&[X, X], 40);
        m.params.score_bias[0] = 0.0;
        // force a large margin through the bias-free score: push pos far up
        let table = m.projection();
        let (_, cache) = m.forward(&pos, &table, None);
        let (_, cache_n) = m.forward(&neg, &table, None);
        let diff: Vec<f64> = cache
            .features
            .iter()
            .zip(&cache_n.features)
            .map(|(a, b)| a - b)
            .collect();
        let total: f64 = diff.iter().map(|d| d.abs()).sum();
        assert!(total > 0.0);
        for (w, d) in m.params.score_weights.iter_mut().zip(&diff) {
            *w = 10.0 / total * d.signum();
        }
        assert!(pair_loss(&m, &pos, &neg) < 0.0);
        let g = analytic_gradient(&m, &pos, &neg);
        assert!(g.score_weights.iter().all(|&x| x == 0.0));
        let err = gradient_check(&m, &pos, &neg, GRADCHECK_EPSILON, 200, 2).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let m = model();
        let pos = seq(&[S, O, Absent, S, X], 40);
        let neg = seq(&[O, S, X, Absent, S], 40);
        let mut g = analytic_gradient(&m, &pos, &neg);
        g.score_weights.iter_mut().for_each(|x| *x = -*x);
        let err = compare_gradients(&m, &pos, &neg, &g, GRADCHECK_EPSILON, 250, 3).unwrap();
        // a flipped sign is the worst possible mismatch under this metric
        assert!((err - 1.0).abs() < 1e-6, "{err}");
    }

    #[test]
    fn boundary_pair_rejected() {
        let mut m = model();
        let pos = seq(&[S, O, Absent, S, X], 40);
        let neg = seq(&[O, S, X, Absent, S], 40);
        let table = m.projection();
        let (_, cp) = m.forward(&pos, &table, None);
        let (_, cn) = m.forward(&neg, &table, None);
        let k = (0..cp.features.len())
            .find(|&i| (cp.features[i] - cn.features[i]).abs() > 1e-4)
            .expect("sequences differ somewhere");
        m.params.score_weights.fill(0.0);
        m.params.score_weights[k] = 1.0 / (cp.features[k] - cn.features[k]);
        assert!(pair_loss(&m, &pos, &neg).abs() < 1e-9);
        assert!(gradient_check(&m, &pos, &neg, GRADCHECK_EPSILON, 200, 4).is_err());
    }
}
