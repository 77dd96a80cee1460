//! Modularity of coupled models: patching individual pairwise entries of a
//! multi-class model, and recombining pairwise classifiers from several
//! models to expose the randomness of training.

use crate::coupling::{couple, theta_map};
use crate::error::{PlmError, Result};
use crate::par;
use crate::rng;
use crate::types::{CouplingConfig, PairwiseLikelihoodMatrix, Posterior};

/// Replacement pairwise likelihoods, stored as `(i, j, r_ij)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrectionPatch {
    pairs: Vec<(usize, usize, f64)>,
}

impl CorrectionPatch {
    /// Accepts pairs in either orientation; `(j, i, q)` is stored as
    /// `(i, j, 1 - q)`.
    pub fn new(c: usize, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut normalized: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, q) in pairs {
            if i == j || i >= c || j >= c {
                return Err(PlmError::InvalidParameter(format!(
                    "patch pair ({i},{j}) invalid for c = {c}"
                )));
            }
            if !(0.0..=1.0).contains(&q) {
                return Err(PlmError::InvalidParameter(format!(
                    "patch likelihood {q} for pair ({i},{j}) outside [0, 1]"
                )));
            }
            let entry = if i < j { (i, j, q) } else { (j, i, 1.0 - q) };
            if normalized.iter().any(|&(a, b, _)| (a, b) == (entry.0, entry.1)) {
                return Err(PlmError::InvalidParameter(format!(
                    "pair ({},{}) patched twice",
                    entry.0, entry.1
                )));
            }
            normalized.push(entry);
        }
        Ok(CorrectionPatch { pairs: normalized })
    }

    pub fn empty() -> Self {
        CorrectionPatch::default()
    }

    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairwise matrix of `p` with the patched pairs overwritten.
pub fn partial_correct(p: &Posterior, patch: &CorrectionPatch) -> Result<PairwiseLikelihoodMatrix> {
    let mut matrix = theta_map(p)?;
    for &(i, j, q) in patch.pairs() {
        matrix = matrix.with_pair(i, j, q)?;
    }
    Ok(matrix)
}

/// One recombined matrix together with the source that supplied each pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Recombination {
    pub matrix: PairwiseLikelihoodMatrix,
    /// Source index per pair `i < j`, row-major.
    pub sources: Vec<usize>,
}

impl Recombination {
    pub fn source_of(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let c = self.matrix.c();
        // offset of row i in the packed upper triangle
        let row_start = i * c - i * (i + 1) / 2;
        self.sources[row_start + (j - i - 1)]
    }
}

/// Draws `n` recombinations. Draw `k` uses the substream `(seed, k)` and
/// picks, for every pair `i < j` in row-major order, a uniformly random
/// source; the pair's two entries move together.
pub fn bootstrap_draws(
    sources: &[PairwiseLikelihoodMatrix],
    n: usize,
    seed: u64,
) -> Result<Vec<Recombination>> {
    if sources.len() < 2 {
        return Err(PlmError::InvalidParameter(format!(
            "recombination needs at least 2 sources, got {}",
            sources.len()
        )));
    }
    let c = sources[0].c();
    for s in &sources[1..] {
        s.require_c(c)?;
    }
    Ok(par::map_range(n, |k| {
        let mut stream = rng::substream(seed, k as u64);
        let mut chosen = Vec::with_capacity(c * (c - 1) / 2);
        let mut entries = vec![0.0; c * c];
        for i in 0..c {
            for j in (i + 1)..c {
                let src = rng::uniform_index(&mut stream, sources.len());
                chosen.push(src);
                entries[i * c + j] = sources[src].get(i, j);
                entries[j * c + i] = sources[src].get(j, i);
            }
        }
        Recombination {
            matrix: PairwiseLikelihoodMatrix::from_parts_unchecked(c, entries),
            sources: chosen,
        }
    }))
}

pub fn bootstrap_recombine(
    sources: &[PairwiseLikelihoodMatrix],
    n: usize,
    seed: u64,
) -> Result<Vec<PairwiseLikelihoodMatrix>> {
    Ok(bootstrap_draws(sources, n, seed)?
        .into_iter()
        .map(|r| r.matrix)
        .collect())
}

/// Spread of one class's coupled probability across recombinations.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub mean: f64,
    /// Population standard deviation (divides by the number of values).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    /// 10th..90th percentiles, linearly interpolated between order statistics.
    pub deciles: [f64; 9],
}

impl ClassSummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(PlmError::Empty("no values to summarize".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        // offsets from the minimum make identical values exactly zero-spread
        let base = sorted[0];
        let shift = sorted.iter().map(|v| v - base).sum::<f64>() / n;
        let mean = base + shift;
        let var = sorted.iter().map(|v| (v - base - shift).powi(2)).sum::<f64>() / n;
        let mut deciles = [0.0; 9];
        for (k, d) in deciles.iter_mut().enumerate() {
            *d = interpolated_quantile(&sorted, (k + 1) as f64 / 10.0);
        }
        let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
        Ok(ClassSummary {
            mean: mean.clamp(min, max),
            sd: var.sqrt(),
            min,
            max,
            deciles,
        })
    }
}

fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub per_class: Vec<ClassSummary>,
    /// Matrices that coupled successfully and entered the statistics.
    pub n_samples: usize,
    /// Matrices whose coupling failed.
    pub excluded: usize,
    pub seed: Option<u64>,
}

impl EnsembleSummary {
    pub fn from_posteriors(posteriors: &[Posterior], excluded: usize, seed: Option<u64>) -> Result<Self> {
        let first = posteriors
            .first()
            .ok_or_else(|| PlmError::Empty("every coupling failed".into()))?;
        let c = first.c();
        let mut per_class = Vec::with_capacity(c);
        for k in 0..c {
            let values = posteriors
                .iter()
                .map(|p| {
                    if p.c() != c {
                        return Err(PlmError::ClassCountMismatch {
                            expected: c,
                            found: p.c(),
                        });
                    }
                    Ok(p.get(k))
                })
                .collect::<Result<Vec<_>>>()?;
            per_class.push(ClassSummary::from_values(&values)?);
        }
        Ok(EnsembleSummary {
            per_class,
            n_samples: posteriors.len(),
            excluded,
            seed,
        })
    }
}

/// Couples every matrix and aggregates per-class statistics. Matrices that
/// fail to couple are excluded and counted.
pub fn ensemble_summary(
    matrices: &[PairwiseLikelihoodMatrix],
    config: &CouplingConfig,
) -> Result<EnsembleSummary> {
    if matrices.is_empty() {
        return Err(PlmError::Empty("no matrices to summarize".into()));
    }
    let coupled = par::map_slice(matrices, |_, m| couple(m, config));
    let mut ok = Vec::with_capacity(coupled.len());
    let mut excluded = 0;
    for result in coupled {
        match result {
            Ok(p) => ok.push(p),
            Err(_) => excluded += 1,
        }
    }
    EnsembleSummary::from_posteriors(&ok, excluded, None)
}

/// Recombines `sources` `n` times and summarizes the coupled posteriors.
pub fn bootstrap_summary(
    sources: &[PairwiseLikelihoodMatrix],
    n: usize,
    seed: u64,
    config: &CouplingConfig,
) -> Result<EnsembleSummary> {
    let matrices = bootstrap_recombine(sources, n, seed)?;
    let mut summary = ensemble_summary(&matrices, config)?;
    summary.seed = Some(seed);
    Ok(summary)
}
