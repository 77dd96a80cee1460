//! CSV file formats. Every file starts with a `# plm-v1 <command>` comment;
//! readers skip all `#` lines, so failure and abstention markers written as
//! comments never disturb re-parsing. Floats are written in `{:.16e}` form,
//! which round-trips exactly.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use plm_core::{BinaryPrediction, LabeledBatch, PairwiseLikelihoodMatrix, Posterior};

use crate::error::{CliError, Result};
use crate::FORMAT_VERSION;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A parsed CSV file: header fields and data records with their line numbers.
pub struct Table {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub records: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(file);
        let csv_err = |e: csv::Error| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::format(path, line, e.to_string())
        };
        let header: Vec<String> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut records = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            records.push((line, record));
        }
        if header.is_empty() || header == [""] {
            if records.is_empty() {
                return Ok(Table {
                    path: path.to_path_buf(),
                    header: Vec::new(),
                    records,
                });
            }
            return Err(CliError::format(path, 1, "missing header row"));
        }
        Ok(Table {
            path: path.to_path_buf(),
            header,
            records,
        })
    }

    /// Nothing but comments: the output of a command run on no samples.
    fn is_blank(&self) -> bool {
        self.header.is_empty()
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header != expected {
            return Err(CliError::format(
                &self.path,
                1,
                format!("expected header `{}`, found `{}`", expected.join(","), self.header.join(",")),
            ));
        }
        Ok(())
    }

    fn err(&self, line: u64, message: impl Into<String>) -> CliError {
        CliError::format(&self.path, line, message)
    }

    fn float(&self, line: u64, record: &csv::StringRecord, k: usize) -> Result<f64> {
        let field = record[k].trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(line, format!("column `{}`: `{field}` is not a finite number", self.header[k]))),
        }
    }

    fn index(&self, line: u64, record: &csv::StringRecord, k: usize) -> Result<usize> {
        let field = record[k].trim();
        field
            .parse::<usize>()
            .map_err(|_| self.err(line, format!("column `{}`: `{field}` is not a class index", self.header[k])))
    }

    fn id(&self, line: u64, record: &csv::StringRecord) -> Result<String> {
        let id = record[0].trim();
        if id.is_empty() {
            return Err(self.err(line, "empty sample_id"));
        }
        Ok(id.to_string())
    }
}

fn check_unique_ids<'a>(table: &Table, ids: impl Iterator<Item = (u64, &'a str)>) -> Result<()> {
    let mut seen = HashMap::new();
    for (line, id) in ids {
        if let Some(first) = seen.insert(id, line) {
            return Err(table.err(line, format!("sample_id `{id}` already used on line {first}")));
        }
    }
    Ok(())
}

pub struct PosteriorFile {
    pub c: usize,
    pub rows: Vec<(String, Posterior)>,
}

pub fn posterior_header(c: usize) -> Vec<String> {
    std::iter::once("sample_id".to_string())
        .chain((0..c).map(|k| format!("p_{k}")))
        .collect()
}

pub fn read_posteriors(path: &Path) -> Result<PosteriorFile> {
    let table = Table::read(path)?;
    if table.is_blank() {
        return Ok(PosteriorFile { c: 0, rows: Vec::new() });
    }
    let c = table.header.len().saturating_sub(1);
    if c < 2 {
        return Err(table.err(1, "a posterior file needs sample_id and at least two class columns"));
    }
    let expected = posterior_header(c);
    table.expect_header(&expected.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut rows = Vec::with_capacity(table.records.len());
    for (line, record) in &table.records {
        let id = table.id(*line, record)?;
        let probs = (1..=c)
            .map(|k| table.float(*line, record, k))
            .collect::<Result<Vec<_>>>()?;
        let p = Posterior::new(probs).map_err(|e| table.err(*line, e.to_string()))?;
        rows.push((id, p));
    }
    check_unique_ids(&table, table.records.iter().map(|(l, _)| *l).zip(rows.iter().map(|(id, _)| id.as_str())))?;
    Ok(PosteriorFile { c, rows })
}

/// Long-form pairwise rows grouped into one matrix per sample, in order of
/// each sample's first row. The class count of a sample is one more than its
/// largest class index, and every upper-triangle pair must appear once.
pub fn read_pairwise(path: &Path) -> Result<Vec<(String, PairwiseLikelihoodMatrix)>> {
    let table = Table::read(path)?;
    if table.is_blank() {
        return Ok(Vec::new());
    }
    table.expect_header(&["sample_id", "i", "j", "r_ij"])?;
    struct Pending {
        first_line: u64,
        entries: HashMap<(usize, usize), f64>,
        max_j: usize,
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Pending> = HashMap::new();
    for (line, record) in &table.records {
        let id = table.id(*line, record)?;
        let i = table.index(*line, record, 1)?;
        let j = table.index(*line, record, 2)?;
        let r = table.float(*line, record, 3)?;
        if i >= j {
            return Err(table.err(*line, format!("pair ({i},{j}) must have i < j")));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(table.err(*line, format!("r_ij = {r} outside [0, 1]")));
        }
        let group = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Pending {
                first_line: *line,
                entries: HashMap::new(),
                max_j: 0,
            }
        });
        if group.entries.insert((i, j), r).is_some() {
            return Err(table.err(*line, format!("pair ({i},{j}) repeated for sample `{id}`")));
        }
        group.max_j = group.max_j.max(j);
    }
    order
        .into_iter()
        .map(|id| {
            let group = &groups[&id];
            let c = group.max_j + 1;
            if group.entries.len() != c * (c - 1) / 2 {
                return Err(table.err(
                    group.first_line,
                    format!(
                        "sample `{id}` has {} pairs, {} needed for {c} classes",
                        group.entries.len(),
                        c * (c - 1) / 2
                    ),
                ));
            }
            let m = PairwiseLikelihoodMatrix::from_upper(c, |i, j| group.entries[&(i, j)])
                .map_err(|e| table.err(group.first_line, e.to_string()))?;
            Ok((id, m))
        })
        .collect()
}

pub fn read_labels(path: &Path, c: usize) -> Result<LabeledBatch> {
    let table = Table::read(path)?;
    table.expect_header(&["sample_id", "label"])?;
    let mut samples = Vec::with_capacity(table.records.len());
    for (line, record) in &table.records {
        let id = table.id(*line, record)?;
        let label = table.index(*line, record, 1)?;
        if label >= c {
            return Err(table.err(*line, format!("label {label} outside [0, {c})")));
        }
        samples.push((id, label));
    }
    check_unique_ids(&table, table.records.iter().map(|(l, _)| *l).zip(samples.iter().map(|(id, _)| id.as_str())))?;
    Ok(LabeledBatch::new(c, samples)?)
}

/// Replacement pairwise probabilities. A global patch (`i,j,prob_i`)
/// applies to every sample; a per-sample patch (`sample_id,i,j,prob_i`)
/// only to the samples it names.
#[derive(Debug, Clone, PartialEq)]
pub enum PatchFile {
    Global(Vec<(usize, usize, f64)>),
    PerSample(HashMap<String, Vec<(usize, usize, f64)>>),
}

impl PatchFile {
    pub fn for_sample(&self, id: &str) -> &[(usize, usize, f64)] {
        match self {
            PatchFile::Global(pairs) => pairs,
            PatchFile::PerSample(map) => map.get(id).map_or(&[], Vec::as_slice),
        }
    }

    /// Every distinct pair mentioned, as `(i, j)` with `i < j`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let all: Vec<&(usize, usize, f64)> = match self {
            PatchFile::Global(pairs) => pairs.iter().collect(),
            PatchFile::PerSample(map) => map.values().flatten().collect(),
        };
        let mut pairs: Vec<(usize, usize)> = all.iter().map(|&&(i, j, _)| (i.min(j), i.max(j))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Binary predictions of one pair, per sample, for the samples in
    /// `ids`. Samples without an entry for the pair are skipped.
    pub fn predictions_for(&self, pair: (usize, usize), ids: &[&str]) -> Vec<(String, BinaryPrediction)> {
        ids.iter()
            .filter_map(|id| {
                self.for_sample(id).iter().find_map(|&(i, j, q)| {
                    if (i, j) == pair {
                        Some(BinaryPrediction { class_a: i, class_b: j, prob_a: q })
                    } else if (j, i) == pair {
                        Some(BinaryPrediction { class_a: j, class_b: i, prob_a: 1.0 - q })
                    } else {
                        None
                    }
                })
                .map(|bp| (id.to_string(), bp))
            })
            .collect()
    }
}

pub fn read_patch(path: &Path) -> Result<PatchFile> {
    let table = Table::read(path)?;
    let per_sample = table.header.first().map(String::as_str) == Some("sample_id");
    if per_sample {
        table.expect_header(&["sample_id", "i", "j", "prob_i"])?;
    } else {
        table.expect_header(&["i", "j", "prob_i"])?;
    }
    let offset = usize::from(per_sample);
    let mut global = Vec::new();
    let mut map: HashMap<String, Vec<(usize, usize, f64)>> = HashMap::new();
    for (line, record) in &table.records {
        let i = table.index(*line, record, offset)?;
        let j = table.index(*line, record, offset + 1)?;
        let q = table.float(*line, record, offset + 2)?;
        if i == j {
            return Err(table.err(*line, format!("pair ({i},{j}) is not a pair of distinct classes")));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(table.err(*line, format!("prob_i = {q} outside [0, 1]")));
        }
        if per_sample {
            map.entry(table.id(*line, record)?).or_default().push((i, j, q));
        } else {
            global.push((i, j, q));
        }
    }
    Ok(if per_sample {
        PatchFile::PerSample(map)
    } else {
        PatchFile::Global(global)
    })
}

/// `(sample_id, method, distance)` rows.
pub fn read_distances(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let table = Table::read(path)?;
    table.expect_header(&["sample_id", "method", "distance"])?;
    table
        .records
        .iter()
        .map(|(line, record)| {
            let d = table.float(*line, record, 2)?;
            Ok((table.id(*line, record)?, record[1].trim().to_string(), d))
        })
        .collect()
}

/// CSV output preceded by the format header comment.
pub struct Output {
    sink: Box<dyn Write>,
    path: PathBuf,
}

fn push_field(line: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) || field.starts_with('#') {
        line.push('"');
        line.push_str(&field.replace('"', "\"\""));
        line.push('"');
    } else {
        line.push_str(field);
    }
}

impl Output {
    /// Writes to `path`, or standard output when `None`.
    pub fn create(path: Option<&Path>, command: &str) -> Result<Self> {
        let (sink, shown): (Box<dyn Write>, PathBuf) = match path {
            Some(p) => {
                let file = File::create(p).map_err(|source| CliError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                (Box::new(BufWriter::new(file)), p.to_path_buf())
            }
            None => (Box::new(BufWriter::new(io::stdout().lock())), PathBuf::from("<stdout>")),
        };
        let mut out = Output { sink, path: shown };
        out.comment(&format!("{FORMAT_VERSION} {command}"))?;
        Ok(out)
    }

    fn write(&mut self, line: &str) -> Result<()> {
        let result = self.sink.write_all(line.as_bytes());
        result.map_err(|source| CliError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut line = String::new();
        for (k, field) in fields.into_iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            push_field(&mut line, field.as_ref());
        }
        line.push('\n');
        self.write(&line)
    }

    /// A `# ...` line; line breaks inside `text` become spaces.
    pub fn comment(&mut self, text: &str) -> Result<()> {
        self.write(&format!("# {}\n", text.replace(['\n', '\r'], " ")))
    }

    pub fn finish(mut self) -> Result<()> {
        let result = self.sink.flush();
        result.map_err(|source| CliError::Io {
            path: self.path.clone(),
            source,
        })
    }
}
