//! Independent oracles and random fixtures shared by the integration tests.
//! Nothing here calls into the coupling code it is used to check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use plm_core::rng::{self, Stream};
use plm_core::{PairwiseLikelihoodMatrix, Posterior};
use rand::Rng;

/// Uniform draw from `{p in simplex : p_k >= floor}`: an affine image of a
/// flat Dirichlet sample.
pub fn random_posterior(stream: &mut Stream, c: usize, floor: f64) -> Posterior {
    let e: Vec<f64> = (0..c).map(|_| -(1.0 - stream.random::<f64>()).ln()).collect();
    let total: f64 = e.iter().sum();
    let free = 1.0 - floor * c as f64;
    Posterior::from_weights(e.iter().map(|v| floor + free * v / total).collect()).unwrap()
}

/// Upper-triangle entries uniform on `(lo, hi)`.
pub fn random_matrix(stream: &mut Stream, c: usize, lo: f64, hi: f64) -> PairwiseLikelihoodMatrix {
    PairwiseLikelihoodMatrix::from_upper(c, |_, _| lo + (hi - lo) * stream.random::<f64>()).unwrap()
}

pub fn off_manifold_batch(seed: u64, count: usize) -> Vec<PairwiseLikelihoodMatrix> {
    let mut stream = rng::stream(seed);
    (0..count)
        .map(|k| random_matrix(&mut stream, 3 + k % 3, 0.02, 0.98))
        .collect()
}

/// Direct double sum of the Wu-Lin-Weng objective.
pub fn delta2(r: &PairwiseLikelihoodMatrix, p: &[f64]) -> f64 {
    let c = r.c();
    let mut s = 0.0;
    for i in 0..c {
        for j in 0..c {
            if i != j {
                let e = r.get(i, j) * p[j] - r.get(j, i) * p[i];
                s += e * e;
            }
        }
    }
    s
}

fn delta2_gradient(r: &PairwiseLikelihoodMatrix, p: &[f64]) -> Vec<f64> {
    let c = r.c();
    let mut g = vec![0.0; c];
    for i in 0..c {
        for j in 0..c {
            if i != j {
                let e = r.get(i, j) * p[j] - r.get(j, i) * p[i];
                g[j] += 2.0 * e * r.get(i, j);
                g[i] -= 2.0 * e * r.get(j, i);
            }
        }
    }
    g
}

fn simplex_projection(y: &[f64]) -> Vec<f64> {
    // bisection on the shift t with sum max(y - t, 0) = 1
    let mut lo = y.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = y.iter().map(|v| (v - mid).max(0.0)).sum();
        if s > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let x: Vec<f64> = y.iter().map(|v| (v - t).max(0.0)).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

fn grid_points(c: usize, prefix: &mut Vec<usize>, remaining: usize, visit: &mut dyn FnMut(&[usize])) {
    if prefix.len() == c - 1 {
        prefix.push(remaining);
        visit(prefix);
        prefix.pop();
        return;
    }
    for k in 0..=remaining {
        prefix.push(k);
        grid_points(c, prefix, remaining - k, visit);
        prefix.pop();
    }
}

/// Best simplex-grid point (grid spacing `step`), refined by projected
/// gradient descent with step halving until an accepted step improves the
/// objective by less than `1e-14`. Returns `(p, delta2(p))`.
pub fn wlw_brute_force(r: &PairwiseLikelihoodMatrix, step: f64) -> (Vec<f64>, f64) {
    let c = r.c();
    let steps = (1.0 / step).round() as usize;
    let mut best = (vec![1.0 / c as f64; c], f64::INFINITY);
    let mut point = vec![0.0; c];
    grid_points(c, &mut Vec::with_capacity(c), steps, &mut |counts| {
        for (p, &k) in point.iter_mut().zip(counts) {
            *p = k as f64 / steps as f64;
        }
        let v = delta2(r, &point);
        if v < best.1 {
            best = (point.clone(), v);
        }
    });

    let (mut p, mut f) = best;
    let mut t = 1.0;
    loop {
        let g = delta2_gradient(r, &p);
        let mut s = t;
        let mut next = None;
        while s > 1e-20 {
            let trial: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a - s * b).collect();
            let q = simplex_projection(&trial);
            let fq = delta2(r, &q);
            if fq < f {
                next = Some((q, fq));
                break;
            }
            s *= 0.5;
        }
        let Some((q, fq)) = next else { break };
        let improvement = f - fq;
        p = q;
        f = fq;
        t = (s * 2.0).min(1.0);
        if improvement < 1e-14 {
            break;
        }
    }
    (p, f)
}

/// Generic least squares for `min_v sum_{i<j} (theta_ij - (v_j - v_i))^2`
/// with an extra gauge row `sum v = 0`, solved by SVD; returns the softmax
/// of `v` and the residual norm.
pub fn bc_least_squares(r: &PairwiseLikelihoodMatrix) -> (Vec<f64>, f64) {
    let c = r.c();
    let pairs: Vec<(usize, usize)> = (0..c).flat_map(|i| ((i + 1)..c).map(move |j| (i, j))).collect();
    let m = pairs.len();
    let mut a = DMatrix::zeros(m + 1, c);
    let mut b = DVector::zeros(m + 1);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        a[(row, j)] = 1.0;
        a[(row, i)] = -1.0;
        b[row] = (1.0 / r.get(i, j) - 1.0).ln();
    }
    for k in 0..c {
        a[(m, k)] = 1.0;
    }
    let v = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
    let residual: f64 = pairs
        .iter()
        .enumerate()
        .map(|(row, &(i, j))| (b[row] - (v[j] - v[i])).powi(2))
        .sum::<f64>()
        .sqrt();
    let w: Vec<f64> = v.iter().map(|x| x.exp()).collect();
    let total: f64 = w.iter().sum();
    (w.into_iter().map(|x| x / total).collect(), residual)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
