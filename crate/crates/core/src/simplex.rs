//! Euclidean projection onto the probability simplex and a projected
//! gradient minimizer for convex quadratics `x' Q x` over it.

use nalgebra::{DMatrix, DVector};

/// Projects `y` onto `{x : x >= 0, sum x = 1}` (sort-and-threshold).
pub fn project_onto_simplex(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    y.iter().map(|&v| (v - shift).max(0.0)).collect()
}

/// Stops once an accepted step improves the objective by less than this.
pub const PGD_IMPROVEMENT_TOL: f64 = 1e-14;
const PGD_MAX_ITERS: usize = 200_000;
const MIN_STEP: f64 = 1e-300;

/// Minimizes `x' Q x` over the simplex by projected gradient descent with
/// step halving. `Q` must be symmetric positive semidefinite.
pub fn minimize_quadratic(q: &DMatrix<f64>, start: &[f64]) -> Vec<f64> {
    let n = q.nrows();
    let objective = |x: &DVector<f64>| x.dot(&(q * x));

    let mut x = DVector::from_vec(project_onto_simplex(start));
    let mut fx = objective(&x);
    // 1 / Lipschitz constant of the gradient 2Qx, bounded by the row sums.
    let lipschitz = 2.0
        * (0..n)
            .map(|i| q.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let mut step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };

    for _ in 0..PGD_MAX_ITERS {
        let grad = q * &x * 2.0;
        let mut accepted = None;
        let mut t = step;
        while t > MIN_STEP {
            let trial: Vec<f64> = x.iter().zip(grad.iter()).map(|(a, g)| a - t * g).collect();
            let candidate = DVector::from_vec(project_onto_simplex(&trial));
            let fc = objective(&candidate);
            if fc < fx {
                accepted = Some((candidate, fc, t));
                break;
            }
            t *= 0.5;
        }
        let Some((candidate, fc, t)) = accepted else {
            break;
        };
        let improvement = fx - fc;
        x = candidate;
        fx = fc;
        // let the step grow back after a successful halving sequence
        step = (t * 2.0).min(if lipschitz > 0.0 { 4.0 / lipschitz } else { 1.0 });
        if improvement < PGD_IMPROVEMENT_TOL {
            break;
        }
    }
    x.iter().copied().collect()
}
