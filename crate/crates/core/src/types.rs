//! Value types shared by every module: posteriors, pairwise likelihood
//! matrices, their log-odds form, coupling configuration and labels.
//!
//! All constructors validate; once built, a value satisfies its invariants
//! for its whole lifetime.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{PlmError, Result};

/// Absolute tolerance for `sum(p) == 1` and `r_ij + r_ji == 1`.
pub const PROB_TOL: f64 = 1e-9;

/// A probability distribution over `c >= 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    probs: Vec<f64>,
}

impl Posterior {
    /// Validates without renormalizing: entries must lie in `[0, 1]` and sum
    /// to one within [`PROB_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(PlmError::Shape(format!(
                "posterior needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some((k, v)) = probs
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(PlmError::InvalidPosterior(format!(
                "entry {k} = {v} outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(PlmError::InvalidPosterior(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Posterior { probs })
    }

    /// Normalizes non-negative weights into a posterior.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PlmError::InvalidPosterior(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(PlmError::InvalidPosterior("weights sum to zero".into()));
        }
        Posterior::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(c: usize) -> Result<Self> {
        Posterior::new(vec![1.0 / c as f64; c])
    }

    pub fn one_hot(c: usize, k: usize) -> Result<Self> {
        if k >= c {
            return Err(PlmError::InvalidParameter(format!(
                "class {k} out of range for c = {c}"
            )));
        }
        let mut probs = vec![0.0; c];
        probs[k] = 1.0;
        Posterior::new(probs)
    }

    pub fn c(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, k: usize) -> f64 {
        self.probs[k]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// Relabels classes: entry `k` of the result is entry `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.c())?;
        Ok(Posterior {
            probs: perm.iter().map(|&src| self.probs[src]).collect(),
        })
    }
}

/// One broken invariant of a candidate pairwise likelihood matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum PairwiseViolation {
    Diagonal { i: usize, value: f64 },
    OutOfRange { i: usize, j: usize, value: f64 },
    Complement { i: usize, j: usize, sum: f64 },
}

impl fmt::Display for PairwiseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairwiseViolation::Diagonal { i, value } => {
                write!(f, "diagonal entry ({i},{i}) = {value}, expected 0")
            }
            PairwiseViolation::OutOfRange { i, j, value } => {
                write!(f, "entry ({i},{j}) = {value} outside [0, 1]")
            }
            PairwiseViolation::Complement { i, j, sum } => {
                write!(f, "r_{i}{j} + r_{j}{i} = {sum}, expected 1")
            }
        }
    }
}

/// Checks a square candidate matrix against the pairwise-likelihood
/// invariants. Returns every violation found; an empty list means the matrix
/// is valid. Non-square input or `c < 2` is a structural error instead.
pub fn validate_pairwise(rows: &[Vec<f64>]) -> Result<Vec<PairwiseViolation>> {
    let c = rows.len();
    if c < 2 {
        return Err(PlmError::Shape(format!(
            "pairwise matrix needs at least 2 classes, got {c}"
        )));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != c) {
        return Err(PlmError::Shape(format!(
            "row {i} has {} entries, expected {c}",
            row.len()
        )));
    }
    let mut violations = Vec::new();
    for i in 0..c {
        if rows[i][i] != 0.0 {
            violations.push(PairwiseViolation::Diagonal {
                i,
                value: rows[i][i],
            });
        }
    }
    for i in 0..c {
        for j in 0..c {
            if i != j && !(0.0..=1.0).contains(&rows[i][j]) {
                violations.push(PairwiseViolation::OutOfRange {
                    i,
                    j,
                    value: rows[i][j],
                });
            }
        }
    }
    for i in 0..c {
        for j in (i + 1)..c {
            let sum = rows[i][j] + rows[j][i];
            if !((sum - 1.0).abs() <= PROB_TOL) {
                violations.push(PairwiseViolation::Complement { i, j, sum });
            }
        }
    }
    Ok(violations)
}

/// Matrix `R` of pairwise likelihoods: zero diagonal, entries in `[0, 1]`,
/// `r_ij + r_ji = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseLikelihoodMatrix {
    c: usize,
    entries: Vec<f64>,
}

impl PairwiseLikelihoodMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let violations = validate_pairwise(&rows)?;
        if !violations.is_empty() {
            return Err(PlmError::InvalidPairwise(violations));
        }
        let c = rows.len();
        Ok(PairwiseLikelihoodMatrix {
            c,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Builds a matrix from its strict upper triangle; the lower triangle is
    /// set to the exact complements.
    pub fn from_upper<F>(c: usize, mut upper: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        if c < 2 {
            return Err(PlmError::Shape(format!(
                "pairwise matrix needs at least 2 classes, got {c}"
            )));
        }
        let mut entries = vec![0.0; c * c];
        let mut violations = Vec::new();
        for i in 0..c {
            for j in (i + 1)..c {
                let r = upper(i, j);
                if !(0.0..=1.0).contains(&r) {
                    violations.push(PairwiseViolation::OutOfRange { i, j, value: r });
                }
                entries[i * c + j] = r;
                entries[j * c + i] = 1.0 - r;
            }
        }
        if !violations.is_empty() {
            return Err(PlmError::InvalidPairwise(violations));
        }
        Ok(PairwiseLikelihoodMatrix { c, entries })
    }

    /// The matrix with every off-diagonal entry equal to 1/2.
    pub fn uniform(c: usize) -> Result<Self> {
        Self::from_upper(c, |_, _| 0.5)
    }

    pub(crate) fn from_parts_unchecked(c: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), c * c);
        PairwiseLikelihoodMatrix { c, entries }
    }

    pub fn c(&self) -> usize {
        self.c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.c + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.c).map(<[f64]>::to_vec).collect()
    }

    /// `(i, j, r_ij)` for every `i < j`, row-major.
    pub fn upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let c = self.c;
        (0..c).flat_map(move |i| ((i + 1)..c).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn validate(&self) -> Vec<PairwiseViolation> {
        validate_pairwise(&self.rows()).expect("shape is fixed at construction")
    }

    /// Copy with `r_ij = q` and `r_ji = 1 - q`.
    pub fn with_pair(&self, i: usize, j: usize, q: f64) -> Result<Self> {
        if i == j || i >= self.c || j >= self.c {
            return Err(PlmError::InvalidParameter(format!(
                "pair ({i},{j}) invalid for c = {}",
                self.c
            )));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(PlmError::InvalidParameter(format!(
                "pair likelihood {q} outside [0, 1]"
            )));
        }
        let mut entries = self.entries.clone();
        entries[i * self.c + j] = q;
        entries[j * self.c + i] = 1.0 - q;
        Ok(PairwiseLikelihoodMatrix { c: self.c, entries })
    }

    /// Restriction to the given classes, in the given order.
    pub fn submatrix(&self, classes: &[usize]) -> Result<Self> {
        if classes.len() < 2 {
            return Err(PlmError::Shape(format!(
                "submatrix needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        let k = classes.len();
        let mut entries = Vec::with_capacity(k * k);
        for &a in classes {
            for &b in classes {
                entries.push(self.get(a, b));
            }
        }
        Ok(PairwiseLikelihoodMatrix { c: k, entries })
    }

    /// Relabels classes: entry `(a, b)` of the result is `(perm[a], perm[b])`
    /// of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.c)?;
        let c = self.c;
        let mut entries = vec![0.0; c * c];
        for a in 0..c {
            for b in 0..c {
                entries[a * c + b] = self.get(perm[a], perm[b]);
            }
        }
        Ok(PairwiseLikelihoodMatrix { c, entries })
    }

    pub fn require_c(&self, c: usize) -> Result<()> {
        if self.c != c {
            return Err(PlmError::ClassCountMismatch {
                expected: c,
                found: self.c,
            });
        }
        Ok(())
    }
}

/// Log-odds coordinates `theta_ij = ln(1/r_ij - 1)`, antisymmetric with a
/// zero diagonal. Points of the Bradley-Terry manifold are exactly the
/// matrices of the form `theta_ij = v_j - v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix {
    c: usize,
    entries: Vec<f64>,
}

impl ThetaMatrix {
    /// Fails with [`PlmError::Singular`] if any off-diagonal entry is 0 or 1.
    pub fn from_pairwise(matrix: &PairwiseLikelihoodMatrix) -> Result<Self> {
        let c = matrix.c();
        let mut entries = vec![0.0; c * c];
        for (i, j, r) in matrix.upper() {
            if r <= 0.0 || r >= 1.0 {
                return Err(PlmError::Singular(format!(
                    "r_{i}{j} = {r}; log-odds map diverges at 0 and 1"
                )));
            }
            // r_ji is stored as an exact complement only up to rounding, so
            // both logs are taken from the stored pair.
            let t = matrix.get(j, i).ln() - r.ln();
            entries[i * c + j] = t;
            entries[j * c + i] = -t;
        }
        Ok(ThetaMatrix { c, entries })
    }

    /// Builds from the upper triangle; the lower triangle is negated.
    pub fn from_upper<F>(c: usize, mut upper: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        if c < 2 {
            return Err(PlmError::Shape(format!(
                "theta matrix needs at least 2 classes, got {c}"
            )));
        }
        let mut entries = vec![0.0; c * c];
        for i in 0..c {
            for j in (i + 1)..c {
                let t = upper(i, j);
                if !t.is_finite() {
                    return Err(PlmError::InvalidParameter(format!(
                        "theta_{i}{j} = {t} is not finite"
                    )));
                }
                entries[i * c + j] = t;
                entries[j * c + i] = -t;
            }
        }
        Ok(ThetaMatrix { c, entries })
    }

    pub fn c(&self) -> usize {
        self.c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.c + j]
    }

    /// Inverse of the log-odds map: `r_ij = 1 / (1 + exp(theta_ij))`.
    pub fn to_pairwise(&self) -> PairwiseLikelihoodMatrix {
        let c = self.c;
        let mut entries = vec![0.0; c * c];
        for i in 0..c {
            for j in (i + 1)..c {
                let r = logistic(-self.get(i, j));
                entries[i * c + j] = r;
                entries[j * c + i] = 1.0 - r;
            }
        }
        PairwiseLikelihoodMatrix::from_parts_unchecked(c, entries)
    }
}

/// `1 / (1 + exp(-x))` without overflow for large `|x|`.
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    WuLinWeng,
    BayesCovariant,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::WuLinWeng, Method::BayesCovariant];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::WuLinWeng => "wlw",
            Method::BayesCovariant => "bc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = PlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wlw" => Ok(Method::WuLinWeng),
            "bc" => Ok(Method::BayesCovariant),
            other => Err(PlmError::InvalidParameter(format!(
                "unknown coupling method {other:?} (expected wlw or bc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stabilization {
    None,
    /// Clamp every pairwise likelihood into `[tau, 1 - tau]`.
    Clip,
    /// Remove classes with some `r_cc' < rho`, couple the rest, pad with zeros.
    DropClasses,
}

impl Stabilization {
    pub fn as_str(self) -> &'static str {
        match self {
            Stabilization::None => "none",
            Stabilization::Clip => "clip",
            Stabilization::DropClasses => "drop",
        }
    }
}

impl FromStr for Stabilization {
    type Err = PlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Stabilization::None),
            "clip" => Ok(Stabilization::Clip),
            "drop" => Ok(Stabilization::DropClasses),
            other => Err(PlmError::InvalidParameter(format!(
                "unknown stabilization {other:?} (expected none, clip or drop)"
            ))),
        }
    }
}

pub const DEFAULT_TAU: f64 = 1e-3;
pub const DEFAULT_RHO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    pub method: Method,
    pub stabilization: Stabilization,
    pub tau: f64,
    pub rho: f64,
}

impl CouplingConfig {
    pub fn new(method: Method, stabilization: Stabilization, tau: f64, rho: f64) -> Result<Self> {
        let config = CouplingConfig {
            method,
            stabilization,
            tau,
            rho,
        };
        config.validate()?;
        Ok(config)
    }

    /// Method default: clip at `tau = 1e-3` for Bayes-covariant coupling,
    /// no stabilization for Wu-Lin-Weng.
    pub fn for_method(method: Method) -> Self {
        let stabilization = match method {
            Method::WuLinWeng => Stabilization::None,
            Method::BayesCovariant => Stabilization::Clip,
        };
        CouplingConfig {
            method,
            stabilization,
            tau: DEFAULT_TAU,
            rho: DEFAULT_RHO,
        }
    }

    pub fn wlw() -> Self {
        Self::for_method(Method::WuLinWeng)
    }

    pub fn bc() -> Self {
        Self::for_method(Method::BayesCovariant)
    }

    pub fn with_stabilization(mut self, stabilization: Stabilization) -> Self {
        self.stabilization = stabilization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_threshold("tau", self.tau)?;
        check_threshold("rho", self.rho)
    }
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig::bc()
    }
}

pub(crate) fn check_threshold(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 0.5 {
        Ok(())
    } else {
        Err(PlmError::InvalidParameter(format!(
            "{name} = {value} must lie strictly between 0 and 0.5"
        )))
    }
}

/// Samples with integer class labels, addressable by opaque sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    c: usize,
    samples: Vec<(String, usize)>,
    index: HashMap<String, usize>,
}

impl LabeledBatch {
    pub fn new(c: usize, samples: Vec<(String, usize)>) -> Result<Self> {
        if c < 2 {
            return Err(PlmError::Shape(format!(
                "label batch needs at least 2 classes, got {c}"
            )));
        }
        let mut index = HashMap::with_capacity(samples.len());
        for (pos, (id, label)) in samples.iter().enumerate() {
            if *label >= c {
                return Err(PlmError::InvalidParameter(format!(
                    "sample {id}: label {label} outside [0, {c})"
                )));
            }
            if index.insert(id.clone(), pos).is_some() {
                return Err(PlmError::IdMismatch(format!("duplicate sample id {id}")));
            }
        }
        Ok(LabeledBatch { c, samples, index })
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[(String, usize)] {
        &self.samples
    }

    pub fn label_of(&self, sample_id: &str) -> Option<usize> {
        self.index.get(sample_id).map(|&pos| self.samples[pos].1)
    }
}

/// Soft output of a two-class classifier for `class_a` versus `class_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryPrediction {
    pub class_a: usize,
    pub class_b: usize,
    pub prob_a: f64,
}

impl BinaryPrediction {
    pub fn new(class_a: usize, class_b: usize, prob_a: f64) -> Result<Self> {
        if class_a == class_b {
            return Err(PlmError::InvalidParameter(format!(
                "binary prediction needs two distinct classes, got {class_a} twice"
            )));
        }
        if !(0.0..=1.0).contains(&prob_a) {
            return Err(PlmError::InvalidParameter(format!(
                "prob_a = {prob_a} outside [0, 1]"
            )));
        }
        Ok(BinaryPrediction {
            class_a,
            class_b,
            prob_a,
        })
    }

    pub fn prob_b(&self) -> f64 {
        1.0 - self.prob_a
    }

    /// The more likely class; a tie goes to `class_a`.
    pub fn predicted_class(&self) -> usize {
        if self.prob_a >= 0.5 {
            self.class_a
        } else {
            self.class_b
        }
    }
}

fn check_permutation(perm: &[usize], c: usize) -> Result<()> {
    let mut seen = vec![false; c];
    if perm.len() != c {
        return Err(PlmError::ClassCountMismatch {
            expected: c,
            found: perm.len(),
        });
    }
    for &k in perm {
        if k >= c || std::mem::replace(&mut seen[k], true) {
            return Err(PlmError::InvalidParameter(format!(
                "{perm:?} is not a permutation of 0..{c}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_by_three() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.4, 0.2],
            vec![0.6, 0.0, 0.7],
            vec![0.8, 0.3, 0.0],
        ]
    }

    #[test]
    fn valid_matrix_has_no_violations() {
        assert!(validate_pairwise(&three_by_three()).unwrap().is_empty());
    }

    #[test]
    fn complement_violation_is_reported_at_its_pair() {
        let mut rows = three_by_three();
        rows[1][0] = 0.7;
        let report = validate_pairwise(&rows).unwrap();
        assert_eq!(report.len(), 1);
        match report[0] {
            PairwiseViolation::Complement { i, j, sum } => {
                assert_eq!((i, j), (0, 1));
                assert!((sum - 1.1).abs() < 1e-12);
            }
            ref other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn nonzero_diagonal_is_reported() {
        let mut rows = three_by_three();
        rows[2][2] = 0.1;
        let report = validate_pairwise(&rows).unwrap();
        assert_eq!(
            report,
            vec![PairwiseViolation::Diagonal { i: 2, value: 0.1 }]
        );
    }

    #[test]
    fn shape_errors_are_structural() {
        let ragged = vec![vec![0.0, 0.5], vec![0.5]];
        assert!(matches!(validate_pairwise(&ragged), Err(PlmError::Shape(_))));
        assert!(matches!(
            validate_pairwise(&[vec![0.0]]),
            Err(PlmError::Shape(_))
        ));
    }

    #[test]
    fn validation_does_not_mutate() {
        let rows = three_by_three();
        let before = rows.clone();
        let _ = validate_pairwise(&rows);
        assert_eq!(rows, before);
    }

    #[test]
    fn out_of_range_and_nan_are_reported() {
        let mut rows = three_by_three();
        rows[0][2] = f64::NAN;
        let report = validate_pairwise(&rows).unwrap();
        assert!(report
            .iter()
            .any(|v| matches!(v, PairwiseViolation::OutOfRange { i: 0, j: 2, .. })));
        assert!(report
            .iter()
            .any(|v| matches!(v, PairwiseViolation::Complement { i: 0, j: 2, .. })));
    }

    #[test]
    fn posterior_rejects_unnormalized_input() {
        assert!(Posterior::new(vec![0.2, 0.3, 0.5]).is_ok());
        assert!(matches!(
            Posterior::new(vec![0.2, 0.3, 0.6]),
            Err(PlmError::InvalidPosterior(_))
        ));
        assert!(Posterior::new(vec![1.2, -0.2]).is_err());
        assert!(matches!(Posterior::new(vec![1.0]), Err(PlmError::Shape(_))));
    }

    #[test]
    fn theta_is_antisymmetric() {
        let r = PairwiseLikelihoodMatrix::new(three_by_three()).unwrap();
        let theta = ThetaMatrix::from_pairwise(&r).unwrap();
        for i in 0..3 {
            assert_eq!(theta.get(i, i), 0.0);
            for j in 0..3 {
                assert!((theta.get(i, j) + theta.get(j, i)).abs() < 1e-9);
            }
        }
        assert!((theta.get(0, 1) - (0.6f64 / 0.4).ln()).abs() < 1e-12);
        let back = theta.to_pairwise();
        for (i, j, v) in back.upper() {
            assert!((v - r.get(i, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_of_boundary_entry_is_singular() {
        let r = PairwiseLikelihoodMatrix::from_upper(3, |i, _| if i == 0 { 1.0 } else { 0.5 })
            .unwrap();
        assert!(matches!(
            ThetaMatrix::from_pairwise(&r),
            Err(PlmError::Singular(_))
        ));
    }

    #[test]
    fn config_thresholds_must_be_inside_open_interval() {
        assert!(CouplingConfig::new(Method::BayesCovariant, Stabilization::Clip, 1e-3, 1e-3).is_ok());
        for bad in [0.0, 0.5, -1.0, f64::NAN] {
            assert!(CouplingConfig::new(Method::WuLinWeng, Stabilization::None, bad, 1e-3).is_err());
            assert!(CouplingConfig::new(Method::WuLinWeng, Stabilization::None, 1e-3, bad).is_err());
        }
        assert_eq!(CouplingConfig::bc().stabilization, Stabilization::Clip);
        assert_eq!(CouplingConfig::wlw().stabilization, Stabilization::None);
    }

    #[test]
    fn labeled_batch_rejects_bad_labels_and_duplicates() {
        assert!(LabeledBatch::new(3, vec![("a".into(), 0), ("b".into(), 2)]).is_ok());
        assert!(LabeledBatch::new(3, vec![("a".into(), 3)]).is_err());
        assert!(LabeledBatch::new(3, vec![("a".into(), 0), ("a".into(), 1)]).is_err());
    }

    #[test]
    fn binary_prediction_ties_go_to_class_a() {
        let b = BinaryPrediction::new(0, 6, 0.5).unwrap();
        assert_eq!(b.predicted_class(), 0);
        assert_eq!(b.prob_b(), 0.5);
        assert!(BinaryPrediction::new(2, 2, 0.5).is_err());
    }

    #[test]
    fn method_and_stabilization_parse() {
        assert_eq!("wlw".parse::<Method>().unwrap(), Method::WuLinWeng);
        assert_eq!("bc".parse::<Method>().unwrap(), Method::BayesCovariant);
        assert!("ht".parse::<Method>().is_err());
        assert_eq!("drop".parse::<Stabilization>().unwrap(), Stabilization::DropClasses);
    }
}
