//! The map from posteriors to pairwise likelihood matrices, its column-wise
//! inverse, the two regular coupling methods and the two stabilization
//! strategies for matrices with entries at (or near) 0 and 1.

use nalgebra::{DMatrix, DVector};

use crate::error::{PlmError, Result};
use crate::par;
use crate::simplex;
use crate::types::{
    check_threshold, BinaryPrediction, CouplingConfig, Method, PairwiseLikelihoodMatrix,
    Posterior, Stabilization, ThetaMatrix,
};

/// Two-class distribution obtained by renormalizing entries `i` and `j` of `p`.
pub fn iia_restrict(p: &Posterior, i: usize, j: usize) -> Result<BinaryPrediction> {
    if i >= p.c() || j >= p.c() {
        return Err(PlmError::InvalidParameter(format!(
            "pair ({i},{j}) out of range for c = {}",
            p.c()
        )));
    }
    if i == j {
        return Err(PlmError::InvalidParameter(format!(
            "restriction needs two distinct classes, got {i} twice"
        )));
    }
    let denom = p.get(i) + p.get(j);
    if denom <= 0.0 {
        return Err(PlmError::Singular(format!(
            "p_{i} + p_{j} = 0; the pair has no mass"
        )));
    }
    BinaryPrediction::new(i, j, p.get(i) / denom)
}

/// `r_ij = p_i / (p_i + p_j)` for every pair. Requires every `p_i > 0`.
pub fn theta_map(p: &Posterior) -> Result<PairwiseLikelihoodMatrix> {
    if let Some(k) = p.probs().iter().position(|&v| v <= 0.0) {
        return Err(PlmError::Singular(format!(
            "p_{k} = 0; the map is only invertible on strictly positive posteriors"
        )));
    }
    let probs = p.probs();
    PairwiseLikelihoodMatrix::from_upper(p.c(), |i, j| probs[i] / (probs[i] + probs[j]))
}

/// Recovers the posterior from column `j`: `p_i ∝ r_ij / r_ji`, `p_j ∝ 1`.
///
/// On the Bradley-Terry manifold every column gives the same answer.
pub fn reconstruct_from_column(matrix: &PairwiseLikelihoodMatrix, j: usize) -> Result<Posterior> {
    let c = matrix.c();
    if j >= c {
        return Err(PlmError::InvalidParameter(format!(
            "column {j} out of range for c = {c}"
        )));
    }
    let mut weights = Vec::with_capacity(c);
    for i in 0..c {
        if i == j {
            weights.push(1.0);
            continue;
        }
        let (r_ij, r_ji) = (matrix.get(i, j), matrix.get(j, i));
        if r_ij <= 0.0 || r_ji <= 0.0 {
            return Err(PlmError::Singular(format!(
                "r_{i}{j} = {r_ij} is on the boundary; column {j} cannot be inverted"
            )));
        }
        weights.push(r_ij / r_ji);
    }
    Posterior::from_weights(weights)
}

/// `sum_i sum_{j != i} (r_ij p_j - r_ji p_i)^2`.
pub fn delta2_value(matrix: &PairwiseLikelihoodMatrix, p: &Posterior) -> Result<f64> {
    matrix.require_c(p.c())?;
    let c = matrix.c();
    let probs = p.probs();
    let mut total = 0.0;
    for i in 0..c {
        for j in 0..c {
            if i != j {
                let e = matrix.get(i, j) * probs[j] - matrix.get(j, i) * probs[i];
                total += e * e;
            }
        }
    }
    Ok(total)
}

/// Symmetric PSD matrix `Q` with `delta2(p) = 2 p' Q p`.
fn wlw_quadratic(matrix: &PairwiseLikelihoodMatrix) -> DMatrix<f64> {
    let c = matrix.c();
    DMatrix::from_fn(c, c, |i, j| {
        if i == j {
            (0..c).filter(|&s| s != i).map(|s| matrix.get(s, i).powi(2)).sum()
        } else {
            -matrix.get(j, i) * matrix.get(i, j)
        }
    })
}

/// Solution coordinates down to this are rounding noise and get clamped.
const NEGATIVE_NOISE: f64 = 1e-9;
/// Reciprocal condition number below which the augmented system is
/// treated as degenerate.
const MIN_RCOND: f64 = 1e-13;

/// Wu-Lin-Weng coupling: minimizes the quadratic `delta2` over the simplex.
///
/// Solves the stationarity system of the Lagrangian directly,
///
/// ```text
/// [ Q  1 ] [ p ]   [ 0 ]
/// [ 1' 0 ] [ b ] = [ 1 ]
/// ```
///
/// and falls back to projected gradient descent when the solution leaves the
/// simplex by more than rounding noise.
pub fn couple_wlw(matrix: &PairwiseLikelihoodMatrix) -> Result<Posterior> {
    let c = matrix.c();
    let q = wlw_quadratic(matrix);

    let mut system = DMatrix::zeros(c + 1, c + 1);
    system.view_mut((0, 0), (c, c)).copy_from(&q);
    for k in 0..c {
        system[(k, c)] = 1.0;
        system[(c, k)] = 1.0;
    }
    let mut rhs = DVector::zeros(c + 1);
    rhs[c] = 1.0;

    let solution = system.clone().lu().solve(&rhs);
    let rcond = reciprocal_condition(&system);
    let solution = match solution {
        Some(s) if rcond >= MIN_RCOND && s.iter().all(|v| v.is_finite()) => s,
        _ => {
            return Err(PlmError::NumericalFailure {
                reason: "augmented stationarity system is rank deficient".into(),
                condition: 1.0 / rcond,
            })
        }
    };

    let p: Vec<f64> = solution.iter().take(c).copied().collect();
    if p.iter().all(|&v| v >= -NEGATIVE_NOISE) {
        let clamped = p.into_iter().map(|v| v.max(0.0)).collect();
        return Posterior::from_weights(clamped);
    }
    let start = vec![1.0 / c as f64; c];
    Posterior::from_weights(simplex::minimize_quadratic(&q, &start))
}

fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Potentials `v_k` of the orthogonal projection of `theta` onto
/// `{theta_ij = v_j - v_i}`, normalized to `sum v = 0`.
///
/// With the Euclidean metric on upper-triangle coordinates the normal
/// equations reduce to `c v_k = sum_i theta_ik`.
pub fn bc_potentials(theta: &ThetaMatrix) -> Vec<f64> {
    let c = theta.c();
    (0..c)
        .map(|k| (0..c).map(|i| theta.get(i, k)).sum::<f64>() / c as f64)
        .collect()
}

/// Euclidean norm of `theta` minus its projection, over `i < j`.
pub fn bc_residual(theta: &ThetaMatrix, potentials: &[f64]) -> f64 {
    let c = theta.c();
    let mut total = 0.0;
    for i in 0..c {
        for j in (i + 1)..c {
            let e = theta.get(i, j) - (potentials[j] - potentials[i]);
            total += e * e;
        }
    }
    total.sqrt()
}

pub(crate) fn softmax(v: &[f64]) -> Result<Posterior> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Posterior::from_weights(v.iter().map(|x| (x - max).exp()).collect())
}

/// Bayes-covariant coupling: orthogonal projection in log-odds coordinates.
/// Entries equal to 0 or 1 are singular; stabilize first.
pub fn couple_bc(matrix: &PairwiseLikelihoodMatrix) -> Result<Posterior> {
    let theta = ThetaMatrix::from_pairwise(matrix)?;
    softmax(&bc_potentials(&theta))
}

/// Clamps each pairwise likelihood into `[tau, 1 - tau]`. The upper triangle
/// is clamped and the lower triangle rebuilt from it.
pub fn stabilize_clip(matrix: &PairwiseLikelihoodMatrix, tau: f64) -> Result<PairwiseLikelihoodMatrix> {
    check_threshold("tau", tau)?;
    PairwiseLikelihoodMatrix::from_upper(matrix.c(), |i, j| {
        matrix.get(i, j).clamp(tau, 1.0 - tau)
    })
}

/// Result of [`stabilize_drop`]: the surviving classes in increasing order
/// and, when at least two survive, the matrix restricted to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrix {
    pub matrix: Option<PairwiseLikelihoodMatrix>,
    pub survivors: Vec<usize>,
    pub original_c: usize,
}

/// Removes every class `k` having some `r_kk' < rho`.
///
/// When a single class survives no matrix remains; [`couple`] then returns
/// the one-hot posterior on that class. Losing every class is an error.
pub fn stabilize_drop(matrix: &PairwiseLikelihoodMatrix, rho: f64) -> Result<ReducedMatrix> {
    check_threshold("rho", rho)?;
    let c = matrix.c();
    let survivors: Vec<usize> = (0..c)
        .filter(|&k| (0..c).all(|other| other == k || matrix.get(k, other) >= rho))
        .collect();
    let reduced = match survivors.len() {
        0 => return Err(PlmError::AllClassesDropped),
        1 => None,
        n if n == c => Some(matrix.clone()),
        _ => Some(matrix.submatrix(&survivors)?),
    };
    Ok(ReducedMatrix {
        matrix: reduced,
        survivors,
        original_c: c,
    })
}

/// Re-embeds a posterior over `survivors` into `c` classes, padding with zeros.
pub fn extend_posterior(reduced: &Posterior, survivors: &[usize], c: usize) -> Result<Posterior> {
    if reduced.c() != survivors.len() {
        return Err(PlmError::ClassCountMismatch {
            expected: survivors.len(),
            found: reduced.c(),
        });
    }
    let mut probs = vec![0.0; c];
    for (&k, &v) in survivors.iter().zip(reduced.probs()) {
        if k >= c {
            return Err(PlmError::InvalidParameter(format!(
                "surviving class {k} out of range for c = {c}"
            )));
        }
        probs[k] = v;
    }
    Posterior::new(probs)
}

pub fn couple_with(matrix: &PairwiseLikelihoodMatrix, method: Method) -> Result<Posterior> {
    match method {
        Method::WuLinWeng => couple_wlw(matrix),
        Method::BayesCovariant => couple_bc(matrix),
    }
}

/// Applies the configured stabilization, then the configured method.
pub fn couple(matrix: &PairwiseLikelihoodMatrix, config: &CouplingConfig) -> Result<Posterior> {
    config.validate()?;
    match config.stabilization {
        Stabilization::None => couple_with(matrix, config.method),
        Stabilization::Clip => couple_with(&stabilize_clip(matrix, config.tau)?, config.method),
        Stabilization::DropClasses => {
            let reduced = stabilize_drop(matrix, config.rho)?;
            match &reduced.matrix {
                None => Posterior::one_hot(reduced.original_c, reduced.survivors[0]),
                Some(m) => {
                    let p = couple_with(m, config.method)?;
                    extend_posterior(&p, &reduced.survivors, reduced.original_c)
                }
            }
        }
    }
}

/// [`couple`] over a batch; output order matches input order.
pub fn couple_batch(
    matrices: &[PairwiseLikelihoodMatrix],
    config: &CouplingConfig,
) -> Vec<Result<Posterior>> {
    par::map_slice(matrices, |_, m| couple(m, config))
}
