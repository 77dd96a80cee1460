//! Seeded end-to-end scenarios on synthetic blobs: coupling recovery under
//! log-odds noise, partial correction of a deliberately confused pair, and
//! the pairwise-versus-multiclass accuracy sweep over corrections.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::coupling::{couple, iia_restrict, reconstruct_from_column};
use crate::datagen::{bayes_posterior_blobs, generate_blobs, perturb_manifold_with, BlobSpec};
use crate::ensemble::{partial_correct, CorrectionPatch};
use crate::error::{PlmError, Result};
use crate::eval::argmax_predict;
use crate::par;
use crate::rng;
use crate::types::{logistic, BinaryPrediction, CouplingConfig, LabeledBatch, Method, Posterior};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySpec {
    pub blobs: BlobSpec,
    pub noise_scales: Vec<f64>,
    pub seed: u64,
}

/// Multi-class accuracies at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryRow {
    pub noise_scale: f64,
    pub n: usize,
    /// Correct counts of the argmax of the Bayes posterior (noise-free).
    pub bayes_correct: usize,
    pub wlw_correct: usize,
    pub bc_correct: usize,
    /// Correct counts of the argmax of each single-column reconstruction.
    pub column_correct: Vec<usize>,
}

impl RecoveryRow {
    pub fn accuracy(&self, count: usize) -> f64 {
        count as f64 / self.n as f64
    }

    pub fn best_column_correct(&self) -> usize {
        self.column_correct.iter().copied().max().unwrap_or(0)
    }

    /// Smaller of the two coupled accuracies minus the best column accuracy.
    pub fn recovery_margin(&self) -> f64 {
        let coupled = self.wlw_correct.min(self.bc_correct);
        (coupled as f64 - self.best_column_correct() as f64) / self.n as f64
    }
}

/// For each blob sample, perturbs the log-odds of its Bayes pairwise matrix
/// and compares coupled predictions against every single-column inversion.
/// Sample `k` at noise level `l` draws from substream `(seed, l * n + k)`.
pub fn coupling_recovery(spec: &RecoverySpec) -> Result<Vec<RecoveryRow>> {
    let blobs = generate_blobs(&spec.blobs)?;
    let c = spec.blobs.c();
    let posteriors = blobs
        .features
        .iter()
        .map(|x| bayes_posterior_blobs(&spec.blobs, x))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = blobs.labels.samples().iter().map(|(_, l)| *l).collect();
    let n = posteriors.len();
    let wlw = CouplingConfig::wlw();
    let bc = CouplingConfig::bc();

    let mut rows = Vec::with_capacity(spec.noise_scales.len());
    for (level, &scale) in spec.noise_scales.iter().enumerate() {
        // per sample: (wlw ok, bc ok, column ok flags)
        let outcomes = par::map_slice(&posteriors, |k, p| -> Result<(bool, bool, Vec<bool>)> {
            let mut stream = rng::substream(spec.seed, (level * n + k) as u64);
            let m = perturb_manifold_with(p, scale, &mut stream)?;
            let hit = |q: Result<Posterior>| q.is_ok_and(|q| argmax_predict(&q) == labels[k]);
            let columns = (0..c).map(|j| hit(reconstruct_from_column(&m, j))).collect();
            Ok((hit(couple(&m, &wlw)), hit(couple(&m, &bc)), columns))
        });
        let mut row = RecoveryRow {
            noise_scale: scale,
            n,
            bayes_correct: posteriors
                .iter()
                .zip(&labels)
                .filter(|(p, &l)| argmax_predict(p) == l)
                .count(),
            wlw_correct: 0,
            bc_correct: 0,
            column_correct: vec![0; c],
        };
        for outcome in outcomes {
            let (w, b, cols) = outcome?;
            row.wlw_correct += usize::from(w);
            row.bc_correct += usize::from(b);
            for (count, ok) in row.column_correct.iter_mut().zip(cols) {
                *count += usize::from(ok);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// A multi-class model that is Bayes-optimal except on one pair, whose
/// split of probability mass is corrupted by log-odds noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusedPairSpec {
    pub blobs: BlobSpec,
    pub pair: (usize, usize),
    /// Standard deviation of the noise on the pair's log-odds.
    pub confusion_noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusedPairScenario {
    pub labels: LabeledBatch,
    /// `(sample_id, base model posterior)` in generation order.
    pub base: Vec<(String, Posterior)>,
    /// Bayes-optimal two-class prediction for the confused pair, per sample.
    pub oracle_patch: Vec<(String, BinaryPrediction)>,
}

/// Builds the base model by keeping `p_i + p_j` of the Bayes posterior but
/// re-splitting it with `logit(p_i / (p_i + p_j)) + noise * z`.
pub fn confused_pair_scenario(spec: &ConfusedPairSpec) -> Result<ConfusedPairScenario> {
    let (a, b) = spec.pair;
    let c = spec.blobs.c();
    if a == b || a >= c || b >= c {
        return Err(PlmError::InvalidParameter(format!(
            "pair ({a},{b}) invalid for c = {c}"
        )));
    }
    if !(spec.confusion_noise >= 0.0 && spec.confusion_noise.is_finite()) {
        return Err(PlmError::InvalidParameter(format!(
            "confusion noise {} must be finite and non-negative",
            spec.confusion_noise
        )));
    }
    let blobs = generate_blobs(&spec.blobs)?;
    let mut stream = rng::stream(spec.seed);
    let mut base = Vec::with_capacity(blobs.len());
    let mut oracle_patch = Vec::with_capacity(blobs.len());
    for (id, _, x) in blobs.iter() {
        let bayes = bayes_posterior_blobs(&spec.blobs, x)?;
        let restriction = iia_restrict(&bayes, a, b)?;
        let z: f64 = stream.sample(StandardNormal);
        let mass = bayes.get(a) + bayes.get(b);
        let q = restriction.prob_a;
        let noisy = logistic((q / (1.0 - q)).ln() + spec.confusion_noise * z);
        let mut probs = bayes.into_vec();
        probs[a] = mass * noisy;
        probs[b] = mass * (1.0 - noisy);
        base.push((id.to_string(), Posterior::from_weights(probs)?));
        oracle_patch.push((id.to_string(), restriction));
    }
    Ok(ConfusedPairScenario {
        labels: blobs.labels,
        base,
        oracle_patch,
    })
}

/// Correct-prediction count of each sample's coupled, patched posterior.
/// `patch` holds at most one binary prediction per sample; samples without
/// one are coupled unpatched. Failures to couple count as wrong.
pub fn corrected_correct_count(
    base: &[(String, Posterior)],
    patch: &[(String, BinaryPrediction)],
    labels: &LabeledBatch,
    config: &CouplingConfig,
) -> Result<usize> {
    let by_id: std::collections::HashMap<&str, &BinaryPrediction> =
        patch.iter().map(|(id, bp)| (id.as_str(), bp)).collect();
    let hits = par::map_slice(base, |_, (id, p)| -> Result<bool> {
        let label = labels
            .label_of(id)
            .ok_or_else(|| PlmError::IdMismatch(format!("no label for sample {id}")))?;
        let patch = match by_id.get(id.as_str()) {
            Some(bp) => CorrectionPatch::new(p.c(), [(bp.class_a, bp.class_b, bp.prob_a)])?,
            None => CorrectionPatch::empty(),
        };
        let matrix = partial_correct(p, &patch)?;
        Ok(couple(&matrix, config).is_ok_and(|q| argmax_predict(&q) == label))
    });
    hits.into_iter()
        .try_fold(0, |acc, hit| Ok(acc + usize::from(hit?)))
}

/// Pairwise and multi-class accuracies for one correction.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub pairwise_accuracy: f64,
    pub wlw_accuracy: f64,
    pub bc_accuracy: f64,
}

/// Pairwise accuracy of `predictions` on the samples labeled with one of
/// its two classes; `None` when there are none.
pub fn restricted_pairwise_accuracy(
    predictions: &[(String, BinaryPrediction)],
    labels: &LabeledBatch,
) -> Result<Option<f64>> {
    let mut total = 0usize;
    let mut correct = 0usize;
    for (id, bp) in predictions {
        let label = labels
            .label_of(id)
            .ok_or_else(|| PlmError::IdMismatch(format!("no label for sample {id}")))?;
        if label == bp.class_a || label == bp.class_b {
            total += 1;
            correct += usize::from(bp.predicted_class() == label);
        }
    }
    Ok((total > 0).then(|| correct as f64 / total as f64))
}

/// One row per correction: its restricted pairwise accuracy and the
/// multi-class accuracy of the corrected model under both methods.
pub fn correction_sweep(
    base: &[(String, Posterior)],
    corrections: &[Vec<(String, BinaryPrediction)>],
    labels: &LabeledBatch,
) -> Result<Vec<SweepRow>> {
    if base.is_empty() {
        return Err(PlmError::Empty("no base posteriors".into()));
    }
    let n = base.len() as f64;
    corrections
        .iter()
        .map(|patch| {
            let pairwise = restricted_pairwise_accuracy(patch, labels)?.ok_or_else(|| {
                PlmError::Empty("no sample is labeled with the corrected pair".into())
            })?;
            let wlw = corrected_correct_count(base, patch, labels, &CouplingConfig::for_method(Method::WuLinWeng))?;
            let bc = corrected_correct_count(base, patch, labels, &CouplingConfig::for_method(Method::BayesCovariant))?;
            Ok(SweepRow {
                pairwise_accuracy: pairwise,
                wlw_accuracy: wlw as f64 / n,
                bc_accuracy: bc as f64 / n,
            })
        })
        .collect()
}

/// Corrections of graded quality: correction `k` predicts
/// `logistic(logit(q*) + noise_k * z)` around the oracle `q*`.
pub fn graded_corrections(
    oracle: &[(String, BinaryPrediction)],
    noise_levels: &[f64],
    seed: u64,
) -> Vec<Vec<(String, BinaryPrediction)>> {
    par::map_slice(noise_levels, |k, &noise| {
        let mut stream = rng::substream(seed, k as u64);
        oracle
            .iter()
            .map(|(id, bp)| {
                let z: f64 = stream.sample(StandardNormal);
                let q = bp.prob_a.clamp(1e-300, 1.0 - 1e-16);
                let prob_a = logistic((q / (1.0 - q)).ln() + noise * z);
                (id.clone(), BinaryPrediction { prob_a, ..*bp })
            })
            .collect()
    })
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(PlmError::InvalidParameter(
            "a line fit needs at least two paired points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(PlmError::InvalidParameter("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 2.0 * x).collect();
        let fit = ols_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(ols_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        // y = (0, 1, 0, 1): slope 0.2, intercept 0.2, r^2 = 0.2
        let fit = ols_fit(&xs, &[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((fit.slope - 0.2).abs() < 1e-12);
        assert!((fit.intercept - 0.2).abs() < 1e-12);
        assert!((fit.r_squared - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_confusion_noise_reproduces_bayes() {
        let spec = ConfusedPairSpec {
            blobs: BlobSpec::regular(3, 2.0, 1.0, 10, 1).unwrap(),
            pair: (0, 1),
            confusion_noise: 0.0,
            seed: 2,
        };
        let scenario = confused_pair_scenario(&spec).unwrap();
        let blobs = generate_blobs(&spec.blobs).unwrap();
        for ((_, p), x) in scenario.base.iter().zip(&blobs.features) {
            let bayes = bayes_posterior_blobs(&spec.blobs, x).unwrap();
            for (a, b) in p.probs().iter().zip(bayes.probs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_patch_leaves_accuracy_unchanged() {
        let spec = ConfusedPairSpec {
            blobs: BlobSpec::regular(4, 2.5, 1.0, 15, 3).unwrap(),
            pair: (0, 1),
            confusion_noise: 2.0,
            seed: 4,
        };
        let s = confused_pair_scenario(&spec).unwrap();
        let identity: Vec<(String, BinaryPrediction)> = s
            .base
            .iter()
            .map(|(id, p)| (id.clone(), iia_restrict(p, 0, 1).unwrap()))
            .collect();
        for config in [CouplingConfig::wlw(), CouplingConfig::bc()] {
            let unpatched = corrected_correct_count(&s.base, &[], &s.labels, &config).unwrap();
            let patched = corrected_correct_count(&s.base, &identity, &s.labels, &config).unwrap();
            let argmax = s
                .base
                .iter()
                .filter(|(id, p)| Some(argmax_predict(p)) == s.labels.label_of(id))
                .count();
            assert_eq!(unpatched, patched);
            assert_eq!(unpatched, argmax);
        }
    }

    #[test]
    fn recovery_rows_have_one_count_per_column() {
        let spec = RecoverySpec {
            blobs: BlobSpec::regular(3, 2.0, 1.0, 5, 0).unwrap(),
            noise_scales: vec![0.0, 1.0],
            seed: 1,
        };
        let rows = coupling_recovery(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        // without noise every column and both couplings equal the Bayes argmax
        let r = &rows[0];
        assert_eq!(r.column_correct, vec![r.bayes_correct; 3]);
        assert_eq!((r.wlw_correct, r.bc_correct), (r.bayes_correct, r.bayes_correct));
    }
}
