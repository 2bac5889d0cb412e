//! TOML experiment specifications.
//!
//! ```toml
//! base_seed = 7
//! n_folds = 3
//! n_seeds = 5
//!
//! [[dataset]]
//! path = "news.csv"            # relative to the spec file
//!
//! [[dataset]]
//! synthetic = { name = "blobs", n_samples = 1000, dim = 64, n_classes = 4 }
//!
//! [train]
//! epochs = 100
//!
//! [study.baselines]
//! rates = [0.95, 0.9, 0.8]
//! algorithms = ["supervised", "TBST", "CBST", "TT", "TTWD", "CT"]
//!
//! [study.sampling]
//! rates = [0.9]
//! algorithms = ["TT", "TTWD"]
//! sampling = ["x-norep", "2x-rep", "x-rep", "x/2-rep", "x/3-disjoint"]
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classifier::{ModelSelection, TrainConfig};
use crate::dataset::{load_csv, synthetic_blobs, BlobSpec, Dataset, Manifest, SamplingStrategy};
use crate::error::{Error, Result};
use crate::protocol::{ExperimentGrid, Method, TTestConfig, DEFAULT_RATES};
use crate::ssl::{Algorithm, CountWindow, EvalMode, SslConfig, ThresholdBand, DEFAULT_MAX_ITERATIONS};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    /// Output directory, relative to the spec file; `--out` overrides it.
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetSource>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub ttest: TTestConfig,
    #[serde(rename = "study", default)]
    pub studies: BTreeMap<String, StudySpec>,
}

fn default_folds() -> usize {
    3
}

fn default_seeds() -> usize {
    5
}

fn default_validation_fraction() -> f64 {
    0.2
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    pub path: Option<PathBuf>,
    pub synthetic: Option<BlobSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub rates: Option<Vec<f64>>,
    /// Sweep over labeled fractions; each becomes the rate `1 - fraction`
    /// and a series file is written per dataset.
    pub labeled_fractions: Option<Vec<f64>>,
    pub algorithms: Option<Vec<String>>,
    #[serde(default = "default_true")]
    pub oracle: bool,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub selection: ModelSelection,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<[f64; 2]>,
    #[serde(default = "default_counts")]
    pub counts: Vec<[usize; 2]>,
    #[serde(default = "default_sampling")]
    pub sampling: Vec<SamplingStrategy>,
    #[serde(default = "default_fresh")]
    pub fresh_model: Vec<bool>,
    #[serde(default = "default_eval")]
    pub eval_mode: Vec<String>,
}

fn default_true() -> bool {
    true
}

fn default_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

fn default_thresholds() -> Vec<[f64; 2]> {
    vec![[0.9, 1.0]]
}

fn default_counts() -> Vec<[usize; 2]> {
    vec![[0, 100]]
}

fn default_sampling() -> Vec<SamplingStrategy> {
    vec![SamplingStrategy::default()]
}

fn default_fresh() -> Vec<bool> {
    vec![false]
}

fn default_eval() -> Vec<String> {
    vec!["ensemble".into()]
}

/// A study resolved against its datasets, ready to run.
#[derive(Clone, Debug)]
pub struct Study {
    pub name: String,
    pub grid: ExperimentGrid,
    /// Set for labeled-fraction sweeps.
    pub series: bool,
}

impl ExperimentSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::Parse {
                path: origin.to_owned(),
                line,
                message: e.message().to_owned(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Loads every dataset (checking a companion manifest when present).
    /// Relative paths are resolved against `base_dir`.
    pub fn load_datasets(&self, base_dir: &Path) -> Result<Vec<Dataset>> {
        if self.datasets.is_empty() {
            return Err(Error::Config("the spec lists no [[dataset]]".into()));
        }
        self.datasets
            .iter()
            .map(|src| match (&src.path, &src.synthetic) {
                (Some(p), None) => {
                    let path = base_dir.join(p);
                    let ds = load_csv(&path)?;
                    let manifest = Manifest::companion_path(&path);
                    if manifest.exists() {
                        Manifest::load(&manifest)?.check(&ds)?;
                    }
                    Ok(ds)
                }
                (None, Some(blobs)) => synthetic_blobs(blobs),
                _ => Err(Error::Config(
                    "each [[dataset]] needs exactly one of `path` or `synthetic`".into(),
                )),
            })
            .collect()
    }

    /// Validates every study and builds its grid; nothing is trained.
    pub fn studies(&self, datasets: &[Dataset]) -> Result<Vec<Study>> {
        if self.studies.is_empty() {
            return Err(Error::Config("the spec defines no [study.<name>] section".into()));
        }
        self.ttest.validate()?;
        let mut out = Vec::with_capacity(self.studies.len());
        for (name, study) in &self.studies {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!(
                    "study name `{name}` may only contain letters, digits, `_` and `-`"
                )));
            }
            let built = study
                .build(name, datasets, self)
                .map_err(|e| Error::Config(format!("study `{name}`: {}", strip_config(&e))))?;
            out.push(built);
        }
        Ok(out)
    }
}

fn strip_config(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

impl StudySpec {
    fn methods(&self) -> Result<Vec<Method>> {
        let algorithms = self.algorithms.clone().unwrap_or_else(|| {
            if self.labeled_fractions.is_some() {
                vec!["supervised".into()]
            } else {
                Vec::new()
            }
        });
        if algorithms.is_empty() {
            return Err(Error::Config("empty algorithm list".into()));
        }
        let bands = self
            .thresholds
            .iter()
            .map(|[a, b]| ThresholdBand::new(*a, *b))
            .collect::<Result<Vec<_>>>()?;
        let windows = self
            .counts
            .iter()
            .map(|[a, b]| CountWindow::new(*a, *b))
            .collect::<Result<Vec<_>>>()?;
        let evals = self
            .eval_mode
            .iter()
            .map(|s| s.parse::<EvalMode>())
            .collect::<Result<Vec<_>>>()?;
        for (what, empty) in [
            ("thresholds", bands.is_empty()),
            ("counts", windows.is_empty()),
            ("sampling", self.sampling.is_empty()),
            ("fresh_model", self.fresh_model.is_empty()),
            ("eval_mode", evals.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("`{what}` must list at least one value")));
            }
        }

        let mut methods = Vec::new();
        let mut seen = HashSet::new();
        for name in &algorithms {
            let mut candidates = Vec::new();
            if name.eq_ignore_ascii_case("supervised") {
                candidates.push(Method::Supervised { selection: self.selection });
            } else {
                let algorithm: Algorithm = name.parse()?;
                let mut base = SslConfig::new(algorithm);
                base.max_iterations = self.max_iterations;
                base.selection = self.selection;
                for &fresh in &self.fresh_model {
                    let mut c = base.clone();
                    c.fresh_model_each_iteration = fresh;
                    match algorithm {
                        Algorithm::ThresholdSelfTraining => {
                            for &band in &bands {
                                candidates.push(Method::Ssl(SslConfig { band, ..c.clone() }));
                            }
                        }
                        Algorithm::CountSelfTraining => {
                            for &window in &windows {
                                candidates.push(Method::Ssl(SslConfig { window, ..c.clone() }));
                            }
                        }
                        Algorithm::CoTraining => {
                            for &band in &bands {
                                for &eval_mode in &evals {
                                    candidates.push(Method::Ssl(SslConfig { band, eval_mode, ..c.clone() }));
                                }
                            }
                        }
                        Algorithm::TriTraining | Algorithm::TriTrainingDisagreement => {
                            for &sampling in &self.sampling {
                                for &eval_mode in &evals {
                                    candidates.push(Method::Ssl(SslConfig { sampling, eval_mode, ..c.clone() }));
                                }
                            }
                        }
                    }
                }
            }
            for m in candidates {
                if seen.insert((m.algorithm_name(), m.variant())) {
                    methods.push(m);
                }
            }
        }
        Ok(methods)
    }

    fn build(&self, name: &str, datasets: &[Dataset], spec: &ExperimentSpec) -> Result<Study> {
        let rates = match (&self.rates, &self.labeled_fractions) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `rates` or `labeled_fractions`, not both".into()))
            }
            (Some(r), None) => r.clone(),
            (None, Some(fractions)) => {
                if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
                    return Err(Error::Config(format!("labeled fraction {f} outside (0, 1]")));
                }
                fractions.iter().map(|f| ((1.0 - f) * 1e9).round() / 1e9).collect()
            }
            (None, None) => DEFAULT_RATES.to_vec(),
        };
        let grid = ExperimentGrid {
            datasets: datasets.to_vec(),
            unlabeled_rates: rates,
            methods: self.methods()?,
            n_folds: spec.n_folds,
            n_seeds: spec.n_seeds,
            base_seed: spec.base_seed,
            train: spec.train.clone(),
            include_oracle: self.oracle,
            validation_fraction: spec.validation_fraction,
            record_timing: spec.record_timing,
        };
        grid.validate()?;
        Ok(Study {
            name: name.to_owned(),
            grid,
            series: self.labeled_fractions.is_some(),
        })
    }
}
