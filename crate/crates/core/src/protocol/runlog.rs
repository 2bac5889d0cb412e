//! Flat run logs: one line per training run, from which every table can be
//! recomputed.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::Path;

use crate::error::{Error, Result};

pub const LOG_HEADER: &str = "dataset,rate,algorithm,variant,fold,trial,max_test_acc,iterations,wall_ms";

/// Algorithm column for labeled-only baselines.
pub const SUPERVISED: &str = "Supervised";

/// Coordinates of one run.
#[derive(Clone, Debug)]
pub struct RunKey {
    pub dataset: String,
    pub rate: f64,
    pub algorithm: String,
    pub variant: String,
    pub fold: usize,
    pub trial: usize,
}

impl RunKey {
    fn rate_bits(&self) -> u64 {
        // +0.0 and -0.0 are the same rate
        (self.rate + 0.0).to_bits()
    }

    /// `dataset=.. rate=.. algorithm=.. variant=.. fold=.. trial=..`
    pub fn describe(&self) -> String {
        format!(
            "dataset={} rate={} algorithm={} variant={} fold={} trial={}",
            self.dataset, self.rate, self.algorithm, self.variant, self.fold, self.trial
        )
    }
}

impl PartialEq for RunKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for RunKey {}

impl Hash for RunKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dataset.hash(state);
        self.rate_bits().hash(state);
        self.algorithm.hash(state);
        self.variant.hash(state);
        self.fold.hash(state);
        self.trial.hash(state);
    }
}

impl PartialOrd for RunKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RunKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dataset
            .cmp(&other.dataset)
            .then((self.rate + 0.0).total_cmp(&(other.rate + 0.0)))
            .then_with(|| self.algorithm.cmp(&other.algorithm))
            .then_with(|| self.variant.cmp(&other.variant))
            .then(self.fold.cmp(&other.fold))
            .then(self.trial.cmp(&other.trial))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub key: RunKey,
    /// Percentage in `[0, 100]`.
    pub max_test_acc: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

/// Renders results in canonical (sorted) order with a header line.
pub fn format_log(results: &[RunResult]) -> String {
    let mut sorted: Vec<&RunResult> = results.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    let mut out = String::with_capacity(64 * (sorted.len() + 1));
    out.push_str(LOG_HEADER);
    out.push('\n');
    for r in sorted {
        let k = &r.key;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            k.dataset, k.rate, k.algorithm, k.variant, k.fold, k.trial, r.max_test_acc, r.iterations, r.wall_ms
        ));
    }
    out
}

fn parse_line(line: &str) -> std::result::Result<RunResult, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 9 {
        return Err(format!("expected 9 comma-separated fields, found {}", fields.len()));
    }
    fn num<T: std::str::FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
        s.trim().parse().map_err(|_| format!("bad {what} `{s}`"))
    }
    let rate: f64 = num(fields[1], "rate")?;
    if !(0.0..1.0).contains(&rate) {
        return Err(format!("rate {rate} outside [0, 1)"));
    }
    let acc: f64 = num(fields[6], "max_test_acc")?;
    if !(0.0..=100.0).contains(&acc) {
        return Err(format!("accuracy {acc} outside [0, 100]"));
    }
    if fields[0].is_empty() || fields[2].is_empty() {
        return Err("empty dataset or algorithm field".into());
    }
    Ok(RunResult {
        key: RunKey {
            dataset: fields[0].to_owned(),
            rate,
            algorithm: fields[2].to_owned(),
            variant: fields[3].to_owned(),
            fold: num(fields[4], "fold")?,
            trial: num(fields[5], "trial")?,
        },
        max_test_acc: acc,
        iterations: num(fields[7], "iterations")?,
        wall_ms: num(fields[8], "wall_ms")?,
    })
}

/// Parses a log (header lines and blank lines are skipped, so concatenated
/// logs are accepted). Exact repeats of a run are merged; two different
/// results for the same run are an error.
pub fn parse_log(text: &str, origin: &str) -> Result<Vec<RunResult>> {
    let mut runs: BTreeMap<RunKey, RunResult> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line == LOG_HEADER {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_owned(),
            line: i + 1,
            message,
        };
        let r = parse_line(line).map_err(err)?;
        if let Some(prev) = runs.get(&r.key) {
            if prev.max_test_acc != r.max_test_acc || prev.iterations != r.iterations {
                return Err(err(format!("conflicting duplicate of run {}", r.key.describe())));
            }
            continue;
        }
        runs.insert(r.key.clone(), r);
    }
    Ok(runs.into_values().collect())
}

pub fn read_log(path: &Path) -> Result<Vec<RunResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text, &path.display().to_string())
}

pub fn write_log(path: &Path, results: &[RunResult]) -> Result<()> {
    std::fs::write(path, format_log(results)).map_err(|e| Error::io(path, e))
}
