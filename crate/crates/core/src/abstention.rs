//! Distance of a pairwise likelihood matrix from the Bradley-Terry manifold,
//! and an abstaining predictor built on it.
//!
//! Each coupling method comes with its own notion of distance: the
//! Wu-Lin-Weng objective at its minimizer, and the log-odds residual of the
//! Bayes-covariant projection. A calibrated threshold on that distance turns
//! a coupled model into one that can say "I don't know".

use crate::coupling::{bc_potentials, bc_residual, couple, couple_wlw, delta2_value, stabilize_clip};
use crate::error::{PlmError, Result};
use crate::par;
use crate::types::{CouplingConfig, Method, PairwiseLikelihoodMatrix, Posterior, Stabilization, ThetaMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SurenessScore {
    pub sample_id: String,
    pub method: Method,
    pub distance: f64,
}

/// `delta2` at the Wu-Lin-Weng minimizer.
pub fn distance_wlw(matrix: &PairwiseLikelihoodMatrix) -> Result<f64> {
    let p = couple_wlw(matrix)?;
    delta2_value(matrix, &p)
}

/// Norm of the log-odds residual left by the Bayes-covariant projection.
/// Entries equal to 0 or 1 are singular; see [`distance`] for the
/// stabilized variant.
pub fn distance_bc(matrix: &PairwiseLikelihoodMatrix) -> Result<f64> {
    let theta = ThetaMatrix::from_pairwise(matrix)?;
    let v = bc_potentials(&theta);
    Ok(bc_residual(&theta, &v))
}

/// Distance for the configured method. The Bayes-covariant distance is taken
/// after clipping at `config.tau` unless stabilization is explicitly `None`.
pub fn distance(matrix: &PairwiseLikelihoodMatrix, config: &CouplingConfig) -> Result<f64> {
    config.validate()?;
    match config.method {
        Method::WuLinWeng => distance_wlw(matrix),
        Method::BayesCovariant => match config.stabilization {
            Stabilization::None => distance_bc(matrix),
            _ => distance_bc(&stabilize_clip(matrix, config.tau)?),
        },
    }
}

pub fn sureness_scores(
    samples: &[(String, PairwiseLikelihoodMatrix)],
    config: &CouplingConfig,
) -> Vec<Result<SurenessScore>> {
    par::map_slice(samples, |_, (id, m)| {
        distance(m, config).map(|d| SurenessScore {
            sample_id: id.clone(),
            method: config.method,
            distance: d,
        })
    })
}

/// Nearest-rank empirical quantile of in-distribution distances: the
/// `ceil(q n)`-th smallest value. Abstain when `distance > threshold`.
pub fn calibrate_threshold(in_distribution: &[f64], quantile: f64) -> Result<f64> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(PlmError::InvalidParameter(format!(
            "quantile {quantile} must lie strictly between 0 and 1"
        )));
    }
    if in_distribution.is_empty() {
        return Err(PlmError::Empty("no distances to calibrate on".into()));
    }
    if let Some(bad) = in_distribution.iter().find(|d| !d.is_finite() || **d < 0.0) {
        return Err(PlmError::InvalidParameter(format!(
            "distance {bad} is not a finite non-negative number"
        )));
    }
    let mut sorted = in_distribution.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((quantile * n as f64).ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Predict(Posterior),
    Abstain { distance: f64 },
}

impl Decision {
    pub fn is_abstain(&self) -> bool {
        matches!(self, Decision::Abstain { .. })
    }
}

pub fn abstaining_predict(
    matrix: &PairwiseLikelihoodMatrix,
    config: &CouplingConfig,
    threshold: f64,
) -> Result<Decision> {
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(PlmError::InvalidParameter(format!(
            "threshold {threshold} must be finite and non-negative"
        )));
    }
    let d = distance(matrix, config)?;
    if d > threshold {
        return Ok(Decision::Abstain { distance: d });
    }
    couple(matrix, config).map(Decision::Predict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::theta_map;

    fn off_manifold() -> PairwiseLikelihoodMatrix {
        PairwiseLikelihoodMatrix::from_upper(3, |_, _| 0.6).unwrap()
    }

    #[test]
    fn distances_vanish_on_the_manifold() {
        let m = theta_map(&Posterior::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap()).unwrap();
        assert!(distance_wlw(&m).unwrap() <= 1e-12);
        assert!(distance_bc(&m).unwrap() <= 1e-12);
        let u = PairwiseLikelihoodMatrix::uniform(5).unwrap();
        assert_eq!(distance_wlw(&u).unwrap(), 0.0);
        assert_eq!(distance_bc(&u).unwrap(), 0.0);
    }

    #[test]
    fn fixture_distances_match_oracles() {
        // delta2 at the KKT minimizer; least-squares residual norm
        let m = off_manifold();
        assert!((distance_wlw(&m).unwrap() - 0.00272211720226843).abs() < 1e-12);
        assert!((distance_bc(&m).unwrap() - 0.23409538931324936).abs() < 1e-12);
    }

    #[test]
    fn wlw_distance_is_delta2_at_coupled_point() {
        let m = off_manifold();
        let p = couple_wlw(&m).unwrap();
        assert_eq!(distance_wlw(&m).unwrap(), delta2_value(&m, &p).unwrap());
    }

    #[test]
    fn bc_distance_clips_by_default() {
        let m = PairwiseLikelihoodMatrix::from_upper(3, |i, _| if i == 0 { 1.0 } else { 0.5 }).unwrap();
        assert!(matches!(distance_bc(&m), Err(PlmError::Singular(_))));
        assert!(distance(&m, &CouplingConfig::bc()).unwrap().is_finite());
        let raw = CouplingConfig::bc().with_stabilization(Stabilization::None);
        assert!(distance(&m, &raw).is_err());
    }

    #[test]
    fn nearest_rank_quantiles() {
        assert_eq!(calibrate_threshold(&[0.0; 50], 0.3).unwrap(), 0.0);
        let d: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(calibrate_threshold(&d, 0.95).unwrap(), 95.0);
        assert_eq!(calibrate_threshold(&d, 0.951).unwrap(), 96.0);
        assert_eq!(calibrate_threshold(&[3.0], 0.01).unwrap(), 3.0);
        assert!(calibrate_threshold(&d, 1.0).is_err());
        assert!(calibrate_threshold(&d, 0.0).is_err());
        assert!(matches!(calibrate_threshold(&[], 0.5), Err(PlmError::Empty(_))));
    }

    #[test]
    fn abstention_rule() {
        let on = theta_map(&Posterior::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
        for config in [CouplingConfig::wlw(), CouplingConfig::bc()] {
            match abstaining_predict(&on, &config, 1e-6).unwrap() {
                Decision::Predict(p) => assert!((p.get(2) - 0.5).abs() < 1e-9),
                other => panic!("expected a prediction, got {other:?}"),
            }
            let d = abstaining_predict(&off_manifold(), &config, 1e-6).unwrap();
            assert!(d.is_abstain());
            assert!(abstaining_predict(&on, &config, f64::INFINITY).is_err());
        }
    }
}
