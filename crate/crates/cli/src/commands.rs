use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use plm_core::datagen::{bayes_posterior_blobs, generate_blobs, perturb_manifold, BlobSpec};
use plm_core::abstention::sureness_scores;
use plm_core::ensemble::EnsembleSummary;
use plm_core::experiment::{
    confused_pair_scenario, correction_sweep, graded_corrections, ols_fit, restricted_pairwise_accuracy,
    ConfusedPairSpec,
};
use plm_core::{
    abstaining_predict, argmax_predict, bootstrap_recombine, calibrate_threshold, confusion_matrix, couple,
    couple_batch, iia_restrict, par, partial_correct, rng, theta_map, worst_confused_pair,
    BinaryPrediction, CorrectionPatch, CouplingConfig, Decision, LabeledBatch, Method, PairwiseLikelihoodMatrix,
    Posterior, Stabilization,
};

use crate::error::{CliError, Result};
use crate::formats::{
    fmt_f64, posterior_header, read_distances, read_labels, read_pairwise, read_patch, read_posteriors, Output,
    PatchFile,
};

#[derive(Debug, Parser)]
#[command(name = "plm", version = crate::VERSION, about = "Pairwise coupling experiments on CSV files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior file to long-form pairwise file.
    Restrict {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Pairwise file to posterior file.
    Couple {
        input: PathBuf,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Abstain (and write a marker instead of a row) when the sureness
        /// distance exceeds this value.
        #[arg(long)]
        abstain_threshold: Option<f64>,
        /// Exit with status 2 if any sample fails to couple.
        #[arg(long)]
        strict: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Patch pairwise entries of each posterior and report accuracies before
    /// and after, for both coupling methods.
    Correct {
        #[arg(long)]
        posteriors: PathBuf,
        #[arg(long)]
        patch: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Per-sample predicted classes before and after the patch.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Pairwise and multi-class accuracy for each of several single-pair
    /// per-sample corrections.
    Sweep {
        #[arg(long)]
        posteriors: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        corrections: Vec<PathBuf>,
        /// Append least-squares lines of multi-class on pairwise accuracy.
        #[arg(long)]
        fit: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Randomly recombine pairwise entries of two or more sources.
    Bootstrap {
        #[arg(num_args = 2.., required = true)]
        sources: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Also write every coupled draw as a posterior file.
        #[arg(long)]
        draws: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Sureness distance of each pairwise matrix to the consistent ones.
    Distance {
        input: PathBuf,
        #[command(flatten)]
        coupling: CouplingArgs,
        #[arg(long)]
        strict: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Abstention threshold from in-distribution distances.
    Calibrate {
        input: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        quantile: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Accuracy and confusion matrix of argmax predictions.
    Evaluate {
        #[arg(long)]
        posteriors: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        confusion: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Synthetic Gaussian-blob datasets with exact posteriors.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    #[arg(long, default_value = "wlw")]
    pub method: Method,
    /// Defaults to clip for bc and none for wlw.
    #[arg(long)]
    pub stabilize: Option<Stabilization>,
    #[arg(long, default_value_t = plm_core::types::DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = plm_core::types::DEFAULT_RHO)]
    pub rho: f64,
}

impl CouplingArgs {
    pub fn config(&self) -> Result<CouplingConfig> {
        let mut config = CouplingConfig::for_method(self.method);
        if let Some(s) = self.stabilize {
            config.stabilization = s;
        }
        config.tau = self.tau;
        config.rho = self.rho;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 2.5)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Log-odds noise on every pairwise entry of pairwise.csv.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Corrupt the split of mass between these two classes, e.g. `0,1`.
    #[arg(long, value_parser = parse_pair)]
    pub confuse_pair: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1.0)]
    pub confusion_noise: f64,
    /// Noise levels of graded corrections of the confused pair, e.g. `0,0.5,1`.
    #[arg(long, value_delimiter = ',', requires = "confuse_pair")]
    pub correction_noise: Vec<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("expected `i,j`, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(i)?, parse(j)?))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Restrict { input, out } => restrict(&input, out.as_deref()),
        Command::Couple {
            input,
            coupling,
            abstain_threshold,
            strict,
            out,
        } => couple_cmd(&input, &coupling.config()?, abstain_threshold, strict, out.as_deref()),
        Command::Correct {
            posteriors,
            patch,
            labels,
            predictions,
            out,
        } => correct(&posteriors, &patch, &labels, predictions.as_deref(), out.as_deref()),
        Command::Sweep {
            posteriors,
            labels,
            corrections,
            fit,
            out,
        } => sweep(&posteriors, &labels, &corrections, fit, out.as_deref()),
        Command::Bootstrap {
            sources,
            n,
            seed,
            coupling,
            draws,
            out,
        } => bootstrap(&sources, n, seed, &coupling.config()?, draws.as_deref(), out.as_deref()),
        Command::Distance {
            input,
            coupling,
            strict,
            out,
        } => distance_cmd(&input, &coupling.config()?, strict, out.as_deref()),
        Command::Calibrate { input, quantile, out } => calibrate(&input, quantile, out.as_deref()),
        Command::Evaluate {
            posteriors,
            labels,
            confusion,
            out,
        } => evaluate(&posteriors, &labels, confusion.as_deref(), out.as_deref()),
        Command::Synth(args) => synth(&args),
    }
}

fn finish_with_failures(out: Output, failed: usize, total: usize, strict: bool) -> Result<()> {
    out.finish()?;
    if failed > 0 {
        if strict {
            return Err(CliError::Numerical { failed, total });
        }
        eprintln!("warning: {failed} of {total} samples failed; see `# failed` lines");
    }
    Ok(())
}

fn write_pairwise(out: &mut Output, id: &str, m: &PairwiseLikelihoodMatrix) -> Result<()> {
    for (i, j, r) in m.upper() {
        out.row([id, &i.to_string(), &j.to_string(), &fmt_f64(r)])?;
    }
    Ok(())
}

fn write_posterior(out: &mut Output, id: &str, p: &Posterior) -> Result<()> {
    out.row(std::iter::once(id.to_string()).chain(p.probs().iter().map(|&v| fmt_f64(v))))
}

fn restrict(input: &Path, out: Option<&Path>) -> Result<()> {
    let file = read_posteriors(input)?;
    let mut out = Output::create(out, "restrict")?;
    out.row(["sample_id", "i", "j", "r_ij"])?;
    for (id, p) in &file.rows {
        let c = p.c();
        let m = PairwiseLikelihoodMatrix::from_upper(c, |i, j| {
            iia_restrict(p, i, j).map_or(f64::NAN, |bp| bp.prob_a)
        })
        .map_err(|e| CliError::Input(format!("sample `{id}`: {e}")))?;
        write_pairwise(&mut out, id, &m)?;
    }
    out.finish()
}

/// Common class count of a batch, for the posterior header.
fn common_c<'a>(cs: impl Iterator<Item = (&'a str, usize)>) -> Result<Option<usize>> {
    let mut common = None;
    for (id, c) in cs {
        match common {
            None => common = Some(c),
            Some(k) if k != c => {
                return Err(CliError::Input(format!(
                    "sample `{id}` has {c} classes, earlier samples have {k}"
                )))
            }
            _ => {}
        }
    }
    Ok(common)
}

fn couple_cmd(
    input: &Path,
    config: &CouplingConfig,
    abstain_threshold: Option<f64>,
    strict: bool,
    out: Option<&Path>,
) -> Result<()> {
    let samples = read_pairwise(input)?;
    let c = common_c(samples.iter().map(|(id, m)| (id.as_str(), m.c())))?;
    let decisions: Vec<plm_core::Result<Decision>> = match abstain_threshold {
        Some(t) => par::map_slice(&samples, |_, (_, m)| abstaining_predict(m, config, t)),
        None => {
            let matrices: Vec<PairwiseLikelihoodMatrix> = samples.iter().map(|(_, m)| m.clone()).collect();
            couple_batch(&matrices, config)
                .into_iter()
                .map(|r| r.map(Decision::Predict))
                .collect()
        }
    };
    let mut out = Output::create(out, &format!("couple method={}", config.method))?;
    if let Some(c) = c {
        out.row(posterior_header(c))?;
    }
    let mut failed = 0;
    for ((id, _), decision) in samples.iter().zip(decisions) {
        match decision {
            Ok(Decision::Predict(p)) => write_posterior(&mut out, id, &p)?,
            Ok(Decision::Abstain { distance }) => out.comment(&format!("abstain,{id},{}", fmt_f64(distance)))?,
            Err(e) => {
                failed += 1;
                out.comment(&format!("failed,{id},{e}"))?;
            }
        }
    }
    finish_with_failures(out, failed, samples.len(), strict)
}

/// Labels for exactly the posterior samples, in posterior order.
fn labels_for(posteriors: &[(String, Posterior)], labels: &LabeledBatch) -> Result<Vec<usize>> {
    posteriors
        .iter()
        .map(|(id, _)| {
            labels
                .label_of(id)
                .ok_or_else(|| CliError::Input(format!("no label for sample `{id}`")))
        })
        .collect()
}

fn correct(
    posteriors: &Path,
    patch: &Path,
    labels: &Path,
    predictions: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let base = read_posteriors(posteriors)?;
    let labels = read_labels(labels, base.c)?;
    let truth = labels_for(&base.rows, &labels)?;
    let patch = read_patch(patch)?;
    let patches = base
        .rows
        .iter()
        .map(|(id, p)| {
            CorrectionPatch::new(p.c(), patch.for_sample(id).iter().copied())
                .map_err(|e| CliError::Input(format!("{}: sample `{id}`: {e}", patch_name(&patch))))
        })
        .collect::<Result<Vec<_>>>()?;

    let configs = [CouplingConfig::wlw(), CouplingConfig::bc()];
    // (before, after) per method per sample; None when coupling fails
    let predicted: Vec<[(Option<usize>, Option<usize>); 2]> = par::map_slice(&base.rows, |k, (_, p)| {
        configs.map(|config| {
            let predict = |patch: &CorrectionPatch| {
                partial_correct(p, patch)
                    .and_then(|m| couple(&m, &config))
                    .ok()
                    .map(|q| argmax_predict(&q))
            };
            (predict(&CorrectionPatch::empty()), predict(&patches[k]))
        })
    });

    let n = base.rows.len();
    let mut out = Output::create(out, "correct")?;
    out.row(["metric", "method", "i", "j", "before", "after"])?;
    for (m, config) in configs.iter().enumerate() {
        let hits = |after: bool| {
            predicted
                .iter()
                .zip(&truth)
                .filter(|(row, &t)| (if after { row[m].1 } else { row[m].0 }) == Some(t))
                .count()
        };
        let before = hits(false);
        let after = hits(true);
        let rate = |k: usize| if n == 0 { String::new() } else { fmt_f64(k as f64 / n as f64) };
        out.row(["multiclass", config.method.as_str(), "", "", &rate(before), &rate(after)])?;
    }
    let ids: Vec<&str> = base.rows.iter().map(|(id, _)| id.as_str()).collect();
    for (i, j) in patch.pairs() {
        let patched = patch.predictions_for((i, j), &ids);
        let patched_ids: std::collections::HashSet<&str> = patched.iter().map(|(id, _)| id.as_str()).collect();
        let original = base
            .rows
            .iter()
            .filter(|(id, _)| patched_ids.contains(id.as_str()))
            .map(|(id, p)| Ok((id.clone(), iia_restrict(p, i, j)?)))
            .collect::<plm_core::Result<Vec<(String, BinaryPrediction)>>>()?;
        let show = |a: Option<f64>| a.map_or(String::new(), fmt_f64);
        let before = restricted_pairwise_accuracy(&original, &labels)?;
        let after = restricted_pairwise_accuracy(&patched, &labels)?;
        out.row(["pairwise", "", &i.to_string(), &j.to_string(), &show(before), &show(after)])?;
    }
    out.finish()?;

    if let Some(path) = predictions {
        let mut pred = Output::create(Some(path), "correct predictions")?;
        pred.row(["sample_id", "label", "wlw_before", "wlw_after", "bc_before", "bc_after"])?;
        let show = |v: Option<usize>| v.map_or(String::new(), |k| k.to_string());
        for (((id, _), row), t) in base.rows.iter().zip(&predicted).zip(&truth) {
            pred.row([
                id.clone(),
                t.to_string(),
                show(row[0].0),
                show(row[0].1),
                show(row[1].0),
                show(row[1].1),
            ])?;
        }
        pred.finish()?;
    }
    Ok(())
}

fn patch_name(patch: &PatchFile) -> &'static str {
    match patch {
        PatchFile::Global(_) => "global patch",
        PatchFile::PerSample(_) => "per-sample patch",
    }
}

fn sweep(posteriors: &Path, labels: &Path, corrections: &[PathBuf], fit: bool, out: Option<&Path>) -> Result<()> {
    let base = read_posteriors(posteriors)?;
    let labels = read_labels(labels, base.c)?;
    labels_for(&base.rows, &labels)?;
    let ids: Vec<&str> = base.rows.iter().map(|(id, _)| id.as_str()).collect();
    let mut patches = Vec::with_capacity(corrections.len());
    for path in corrections {
        let patch = read_patch(path)?;
        let pairs = patch.pairs();
        if !matches!(patch, PatchFile::PerSample(_)) || pairs.len() != 1 {
            return Err(CliError::Input(format!(
                "{}: a correction must be a per-sample patch of exactly one pair",
                path.display()
            )));
        }
        patches.push(patch.predictions_for(pairs[0], &ids));
    }
    let rows = correction_sweep(&base.rows, &patches, &labels)?;
    let mut out = Output::create(out, "sweep")?;
    out.row(["correction", "pairwise_accuracy", "wlw_accuracy", "bc_accuracy"])?;
    for (path, row) in corrections.iter().zip(&rows) {
        out.row([
            path.display().to_string(),
            fmt_f64(row.pairwise_accuracy),
            fmt_f64(row.wlw_accuracy),
            fmt_f64(row.bc_accuracy),
        ])?;
    }
    if fit {
        let xs: Vec<f64> = rows.iter().map(|r| r.pairwise_accuracy).collect();
        out.comment("fit,method,slope,intercept,r_squared")?;
        for (method, ys) in [
            (Method::WuLinWeng, rows.iter().map(|r| r.wlw_accuracy).collect::<Vec<_>>()),
            (Method::BayesCovariant, rows.iter().map(|r| r.bc_accuracy).collect()),
        ] {
            match ols_fit(&xs, &ys) {
                Ok(f) => out.comment(&format!(
                    "fit,{method},{},{},{}",
                    fmt_f64(f.slope),
                    fmt_f64(f.intercept),
                    fmt_f64(f.r_squared)
                ))?,
                Err(e) => out.comment(&format!("fit,{method},failed: {e}"))?,
            }
        }
    }
    out.finish()
}

fn bootstrap(
    sources: &[PathBuf],
    n: usize,
    seed: u64,
    config: &CouplingConfig,
    draws: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    if n == 0 {
        return Err(CliError::Input("--n must be at least 1".into()));
    }
    let files = sources.iter().map(|p| read_pairwise(p)).collect::<Result<Vec<_>>>()?;
    let reference = &files[0];
    for (path, file) in sources.iter().zip(&files).skip(1) {
        let same = file.len() == reference.len() && file.iter().zip(reference).all(|((a, _), (b, _))| a == b);
        if !same {
            return Err(CliError::Input(format!(
                "{} lists different sample ids than {}",
                path.display(),
                sources[0].display()
            )));
        }
    }

    let mut out = Output::create(out, &format!("bootstrap method={} n={n} seed={seed}", config.method))?;
    let mut header: Vec<String> = ["sample_id", "class", "n", "excluded", "mean", "sd", "min"]
        .map(String::from)
        .to_vec();
    header.extend((1..=9).map(|d| format!("d{}", d * 10)));
    header.push("max".into());
    out.row(&header)?;
    let mut draw_out = match draws {
        Some(path) => {
            let c = common_c(reference.iter().map(|(id, m)| (id.as_str(), m.c())))?;
            let mut d = Output::create(Some(path), &format!("bootstrap draws method={} seed={seed}", config.method))?;
            if let Some(c) = c {
                d.row(posterior_header(c))?;
            }
            Some(d)
        }
        None => None,
    };

    let mut failed = 0;
    for (k, (id, _)) in reference.iter().enumerate() {
        let matrices: Vec<PairwiseLikelihoodMatrix> = files.iter().map(|f| f[k].1.clone()).collect();
        let sample_seed = rng::derive_seed(seed, k as u64);
        let recombined = bootstrap_recombine(&matrices, n, sample_seed)
            .map_err(|e| CliError::Input(format!("sample `{id}`: {e}")))?;
        let coupled = couple_batch(&recombined, config);
        let mut ok = Vec::with_capacity(n);
        for (d, result) in coupled.into_iter().enumerate() {
            match result {
                Ok(p) => {
                    if let Some(w) = draw_out.as_mut() {
                        write_posterior(w, &format!("{id}/{d}"), &p)?;
                    }
                    ok.push(p);
                }
                Err(e) => {
                    if let Some(w) = draw_out.as_mut() {
                        w.comment(&format!("failed,{id}/{d},{e}"))?;
                    }
                }
            }
        }
        let excluded = n - ok.len();
        if ok.is_empty() {
            failed += 1;
            out.comment(&format!("failed,{id},all {n} recombinations failed to couple"))?;
            continue;
        }
        let summary = EnsembleSummary::from_posteriors(&ok, excluded, Some(sample_seed))?;
        for (class, s) in summary.per_class.iter().enumerate() {
            let mut row = vec![
                id.clone(),
                class.to_string(),
                summary.n_samples.to_string(),
                excluded.to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.sd),
                fmt_f64(s.min),
            ];
            row.extend(s.deciles.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(s.max));
            out.row(&row)?;
        }
    }
    if let Some(d) = draw_out {
        d.finish()?;
    }
    finish_with_failures(out, failed, reference.len(), false)
}

fn distance_cmd(input: &Path, config: &CouplingConfig, strict: bool, out: Option<&Path>) -> Result<()> {
    let samples = read_pairwise(input)?;
    let scores = sureness_scores(&samples, config);
    let mut out = Output::create(out, "distance")?;
    out.row(["sample_id", "method", "distance"])?;
    let mut failed = 0;
    for ((id, _), score) in samples.iter().zip(scores) {
        match score {
            Ok(s) => out.row([id.as_str(), s.method.as_str(), &fmt_f64(s.distance)])?,
            Err(e) => {
                failed += 1;
                out.comment(&format!("failed,{id},{e}"))?;
            }
        }
    }
    finish_with_failures(out, failed, samples.len(), strict)
}

fn calibrate(input: &Path, quantile: f64, out: Option<&Path>) -> Result<()> {
    let rows = read_distances(input)?;
    let method = rows.first().map(|r| r.1.clone()).unwrap_or_default();
    if let Some((id, other, _)) = rows.iter().find(|r| r.1 != method) {
        return Err(CliError::Input(format!(
            "sample `{id}` uses method `{other}`, earlier rows use `{method}`"
        )));
    }
    let distances: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let threshold = calibrate_threshold(&distances, quantile)?;
    let mut out = Output::create(out, "calibrate")?;
    out.row(["method", "quantile", "n", "threshold"])?;
    out.row([method, fmt_f64(quantile), distances.len().to_string(), fmt_f64(threshold)])?;
    out.finish()
}

fn evaluate(posteriors: &Path, labels: &Path, confusion: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let file = read_posteriors(posteriors)?;
    if file.rows.is_empty() {
        return Err(CliError::Input(format!("{}: no samples to evaluate", posteriors.display())));
    }
    let labels = read_labels(labels, file.c)?;
    let predictions: Vec<(String, usize)> = file.rows.iter().map(|(id, p)| (id.clone(), argmax_predict(p))).collect();
    let cm = confusion_matrix(&predictions, &labels)?;
    let mut out = Output::create(out, "evaluate")?;
    out.row(["n", "correct", "accuracy", "worst_i", "worst_j", "worst_count"])?;
    let (wi, wj, wc) = match worst_confused_pair(&cm) {
        Some((i, j, count)) => (i.to_string(), j.to_string(), count.to_string()),
        None => Default::default(),
    };
    out.row([cm.total().to_string(), cm.trace().to_string(), fmt_f64(cm.accuracy()), wi, wj, wc])?;
    out.finish()?;
    if let Some(path) = confusion {
        let mut w = Output::create(Some(path), "evaluate confusion")?;
        w.row(std::iter::once("truth".to_string()).chain((0..cm.c()).map(|k| format!("pred_{k}"))))?;
        for (t, row) in cm.counts().iter().enumerate() {
            w.row(std::iter::once(t.to_string()).chain(row.iter().map(u64::to_string)))?;
        }
        w.finish()?;
    }
    Ok(())
}

/// Files written: `features.csv`, `labels.csv`, `posteriors.csv` (exact
/// posteriors, or the confused model with `--confuse-pair`) and
/// `pairwise.csv`. With `--confuse-pair` also `oracle_patch.csv` and one
/// `correction_<k>.csv` per `--correction-noise` level.
fn synth(args: &SynthArgs) -> Result<()> {
    let spec = BlobSpec::regular(args.classes, args.separation, args.scale, args.n_per_class, args.seed)?;
    let blobs = generate_blobs(&spec)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let path = |name: &str| args.out_dir.join(name);

    let mut features = Output::create(Some(&path("features.csv")), "synth features")?;
    features.row(std::iter::once("sample_id".to_string()).chain((0..spec.dim()).map(|k| format!("x_{k}"))))?;
    let mut labels = Output::create(Some(&path("labels.csv")), "synth labels")?;
    labels.row(["sample_id", "label"])?;
    for (id, label, x) in blobs.iter() {
        features.row(std::iter::once(id.to_string()).chain(x.iter().map(|&v| fmt_f64(v))))?;
        labels.row([id, &label.to_string()])?;
    }
    features.finish()?;
    labels.finish()?;

    let (posteriors, oracle) = match args.confuse_pair {
        Some(pair) => {
            let scenario = confused_pair_scenario(&ConfusedPairSpec {
                blobs: spec.clone(),
                pair,
                confusion_noise: args.confusion_noise,
                seed: args.seed.wrapping_add(1),
            })?;
            (scenario.base, Some(scenario.oracle_patch))
        }
        None => {
            let rows = blobs
                .iter()
                .map(|(id, _, x)| Ok((id.to_string(), bayes_posterior_blobs(&spec, x)?)))
                .collect::<plm_core::Result<Vec<_>>>()?;
            (rows, None)
        }
    };

    let mut post = Output::create(Some(&path("posteriors.csv")), "synth posteriors")?;
    post.row(posterior_header(spec.c()))?;
    for (id, p) in &posteriors {
        write_posterior(&mut post, id, p)?;
    }
    post.finish()?;

    let noise_seed = args.seed.wrapping_add(3);
    let matrices = par::map_slice(&posteriors, |k, (_, p)| match args.noise {
        Some(s) => perturb_manifold(p, s, rng::derive_seed(noise_seed, k as u64)),
        None => theta_map(p),
    });
    let mut pairwise = Output::create(Some(&path("pairwise.csv")), "synth pairwise")?;
    pairwise.row(["sample_id", "i", "j", "r_ij"])?;
    for ((id, _), m) in posteriors.iter().zip(matrices) {
        write_pairwise(&mut pairwise, id, &m?)?;
    }
    pairwise.finish()?;

    if let Some(oracle) = oracle {
        write_patch(&path("oracle_patch.csv"), "synth oracle patch", &oracle)?;
        let graded = graded_corrections(&oracle, &args.correction_noise, args.seed.wrapping_add(2));
        for (k, (noise, correction)) in args.correction_noise.iter().zip(&graded).enumerate() {
            write_patch(
                &path(&format!("correction_{k}.csv")),
                &format!("synth correction noise={noise}"),
                correction,
            )?;
        }
    }
    Ok(())
}

fn write_patch(path: &Path, command: &str, rows: &[(String, BinaryPrediction)]) -> Result<()> {
    let mut out = Output::create(Some(path), command)?;
    out.row(["sample_id", "i", "j", "prob_i"])?;
    for (id, bp) in rows {
        out.row([id.as_str(), &bp.class_a.to_string(), &bp.class_b.to_string(), &fmt_f64(bp.prob_a)])?;
    }
    out.finish()
}
