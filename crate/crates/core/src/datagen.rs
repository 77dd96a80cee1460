//! Synthetic data sources: isotropic Gaussian blobs with their exact class
//! posteriors, noisy pairwise matrices around the Bradley-Terry manifold, and
//! a small full-batch GLM trainer for two-class problems.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::coupling::{softmax, theta_map};
use crate::error::{PlmError, Result};
use crate::rng;
use crate::types::{logistic, BinaryPrediction, LabeledBatch, PairwiseLikelihoodMatrix, Posterior, ThetaMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub means: Vec<Vec<f64>>,
    pub scale: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(means: Vec<Vec<f64>>, scale: f64, n_per_class: usize, seed: u64) -> Result<Self> {
        let spec = BlobSpec {
            means,
            scale,
            n_per_class,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `c` blobs in `c` dimensions, means on the scaled coordinate axes so
    /// that every pair of means is `separation` apart.
    pub fn regular(c: usize, separation: f64, scale: f64, n_per_class: usize, seed: u64) -> Result<Self> {
        let offset = separation / std::f64::consts::SQRT_2;
        let means = (0..c)
            .map(|k| (0..c).map(|d| if d == k { offset } else { 0.0 }).collect())
            .collect();
        BlobSpec::new(means, scale, n_per_class, seed)
    }

    pub fn c(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c() < 2 {
            return Err(PlmError::InvalidParameter(format!(
                "blob spec needs at least 2 classes, got {}",
                self.c()
            )));
        }
        let dim = self.dim();
        if dim == 0 || self.means.iter().any(|m| m.len() != dim) {
            return Err(PlmError::Shape("blob means must share a positive dimension".into()));
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PlmError::InvalidParameter("blob means must be finite".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(PlmError::InvalidParameter(format!(
                "scale {} must be positive",
                self.scale
            )));
        }
        if self.n_per_class == 0 {
            return Err(PlmError::InvalidParameter("n_per_class must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blobs {
    pub features: Vec<Vec<f64>>,
    pub labels: LabeledBatch,
}

impl Blobs {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// `(sample_id, label, features)` in generation order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize, &[f64])> {
        self.labels
            .samples()
            .iter()
            .zip(&self.features)
            .map(|((id, label), x)| (id.as_str(), *label, x.as_slice()))
    }
}

/// Samples `n_per_class` points per class, class by class. Sample ids are
/// `s0`, `s1`, ... in generation order.
pub fn generate_blobs(spec: &BlobSpec) -> Result<Blobs> {
    spec.validate()?;
    let mut stream = rng::stream(spec.seed);
    let mut features = Vec::with_capacity(spec.c() * spec.n_per_class);
    let mut samples = Vec::with_capacity(spec.c() * spec.n_per_class);
    for (k, mean) in spec.means.iter().enumerate() {
        for _ in 0..spec.n_per_class {
            let x: Vec<f64> = mean
                .iter()
                .map(|&m| {
                    let z: f64 = stream.sample(StandardNormal);
                    m + spec.scale * z
                })
                .collect();
            samples.push((format!("s{}", samples.len()), k));
            features.push(x);
        }
    }
    Ok(Blobs {
        features,
        labels: LabeledBatch::new(spec.c(), samples)?,
    })
}

/// Exact class posterior under equal priors:
/// `p_k ∝ exp(-|x - mu_k|^2 / (2 scale^2))`.
pub fn bayes_posterior_blobs(spec: &BlobSpec, x: &[f64]) -> Result<Posterior> {
    spec.validate()?;
    if x.len() != spec.dim() {
        return Err(PlmError::Shape(format!(
            "point has dimension {}, blobs have {}",
            x.len(),
            spec.dim()
        )));
    }
    let denom = 2.0 * spec.scale * spec.scale;
    let scores: Vec<f64> = spec
        .means
        .iter()
        .map(|m| -m.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / denom)
        .collect();
    softmax(&scores)
}

/// `theta_map(p)` with i.i.d. `N(0, noise_scale^2)` noise added to each
/// log-odds coordinate `theta_ij`, `i < j`, and mapped back.
pub fn perturb_manifold(p: &Posterior, noise_scale: f64, seed: u64) -> Result<PairwiseLikelihoodMatrix> {
    perturb_manifold_with(p, noise_scale, &mut rng::stream(seed))
}

pub fn perturb_manifold_with<R: Rng + ?Sized>(
    p: &Posterior,
    noise_scale: f64,
    stream: &mut R,
) -> Result<PairwiseLikelihoodMatrix> {
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(PlmError::InvalidParameter(format!(
            "noise scale {noise_scale} must be finite and non-negative"
        )));
    }
    let base = theta_map(p)?;
    if noise_scale == 0.0 {
        return Ok(base);
    }
    let probs = p.probs();
    let theta = ThetaMatrix::from_upper(p.c(), |i, j| {
        let z: f64 = stream.sample(StandardNormal);
        (probs[j] / probs[i]).ln() + noise_scale * z
    })?;
    Ok(theta.to_pairwise())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Logit,
    /// Inverse link `p = 1 - exp(-exp(eta))`.
    ComplementaryLogLog,
}

impl Link {
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Logit => logistic(eta),
            Link::ComplementaryLogLog => -(-eta.clamp(-ETA_LIMIT, ETA_LIMIT).exp()).exp_m1(),
        }
    }

    /// `(ln p, ln(1 - p), d loglik / d eta)` for a soft target `y`.
    fn terms(self, eta: f64, y: f64) -> (f64, f64, f64) {
        match self {
            Link::Logit => {
                let p = logistic(eta);
                (-softplus(-eta), -softplus(eta), y - p)
            }
            Link::ComplementaryLogLog => {
                let eta = eta.clamp(-ETA_LIMIT, ETA_LIMIT);
                let e = eta.exp();
                let p = -(-e).exp_m1();
                // d/deta of y ln p + (1-y) ln(1-p) = (y - p) e / p
                ((p).ln(), -e, (y - p) * e / p)
            }
        }
    }
}

const ETA_LIMIT: f64 = 40.0;

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmSpec {
    pub link: Link,
    /// Train on targets `epsilon` / `1 - epsilon` instead of 0 / 1.
    pub epsilon_labels: bool,
    /// Defaults to `1 / n` for a training set of `n` samples.
    pub epsilon: Option<f64>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop when the gradient norm of the mean log-likelihood falls below.
    pub tolerance: f64,
}

impl Default for GlmSpec {
    fn default() -> Self {
        GlmSpec {
            link: Link::Logit,
            epsilon_labels: false,
            epsilon: None,
            learning_rate: 1.0,
            max_epochs: 20_000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub link: Link,
    pub class_a: usize,
    pub class_b: usize,
    /// False when `max_epochs` ran out before the gradient tolerance was met.
    pub converged: bool,
    pub epochs: usize,
    pub gradient_norm: f64,
}

impl GlmModel {
    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Probability of `class_a`.
    pub fn prob(&self, x: &[f64]) -> f64 {
        self.link.inverse(self.linear_predictor(x))
    }

    pub fn predict(&self, x: &[f64]) -> BinaryPrediction {
        BinaryPrediction {
            class_a: self.class_a,
            class_b: self.class_b,
            prob_a: self.prob(x).clamp(0.0, 1.0),
        }
    }
}

/// Fits `P(class_a | x)` by full-batch gradient ascent on the mean
/// log-likelihood with step halving. `is_class_a[k]` marks the samples of
/// `class_a`.
pub fn train_binary_glm(
    features: &[Vec<f64>],
    is_class_a: &[bool],
    class_a: usize,
    class_b: usize,
    spec: &GlmSpec,
) -> Result<GlmModel> {
    let n = features.len();
    if n == 0 || n != is_class_a.len() {
        return Err(PlmError::Shape(format!(
            "{n} feature rows for {} labels",
            is_class_a.len()
        )));
    }
    if class_a == class_b {
        return Err(PlmError::InvalidParameter("the two classes must differ".into()));
    }
    if is_class_a.iter().all(|&a| a) || is_class_a.iter().all(|&a| !a) {
        return Err(PlmError::InvalidParameter(
            "both classes must be present in the training data".into(),
        ));
    }
    let dim = features[0].len();
    if features.iter().any(|x| x.len() != dim) {
        return Err(PlmError::Shape("feature rows differ in length".into()));
    }
    if !(spec.learning_rate > 0.0) || spec.max_epochs == 0 {
        return Err(PlmError::InvalidParameter(
            "learning rate and epoch budget must be positive".into(),
        ));
    }
    let epsilon = if spec.epsilon_labels {
        let eps = spec.epsilon.unwrap_or(1.0 / n as f64);
        if !(eps > 0.0 && eps < 0.5) {
            return Err(PlmError::InvalidParameter(format!(
                "label epsilon {eps} must lie strictly between 0 and 0.5"
            )));
        }
        eps
    } else {
        0.0
    };
    let targets: Vec<f64> = is_class_a
        .iter()
        .map(|&a| if a { 1.0 - epsilon } else { epsilon })
        .collect();

    // coefficient layout: weights then intercept
    let mut beta = vec![0.0; dim + 1];
    let evaluate = |beta: &[f64]| -> (f64, Vec<f64>) {
        let mut loglik = 0.0;
        let mut grad = vec![0.0; dim + 1];
        for (x, &y) in features.iter().zip(&targets) {
            let eta = beta[dim] + beta[..dim].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            let (ln_p, ln_q, d_eta) = spec.link.terms(eta, y);
            // 0 * -inf is avoided by skipping zero-weight terms
            if y > 0.0 {
                loglik += y * ln_p;
            }
            if y < 1.0 {
                loglik += (1.0 - y) * ln_q;
            }
            for (g, v) in grad.iter_mut().zip(x) {
                *g += d_eta * v;
            }
            grad[dim] += d_eta;
        }
        let scale = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (loglik * scale, grad)
    };

    let (mut loglik, mut grad) = evaluate(&beta);
    let mut step = spec.learning_rate;
    let mut epochs = 0;
    let mut grad_norm = norm(&grad);
    let mut converged = grad_norm < spec.tolerance;
    while !converged && epochs < spec.max_epochs {
        epochs += 1;
        let mut accepted = false;
        while step > 1e-12 {
            let trial: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b + step * g).collect();
            let (trial_loglik, trial_grad) = evaluate(&trial);
            if trial_loglik.is_finite() && trial_loglik >= loglik {
                beta = trial;
                loglik = trial_loglik;
                grad = trial_grad;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 1.5).min(spec.learning_rate * 1e3);
        grad_norm = norm(&grad);
        converged = grad_norm < spec.tolerance;
    }

    Ok(GlmModel {
        weights: beta[..dim].to_vec(),
        intercept: beta[dim],
        link: spec.link,
        class_a,
        class_b,
        converged,
        epochs,
        gradient_norm: grad_norm,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
