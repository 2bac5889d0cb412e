use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;

use super::runlog::{RunKey, RunResult, SUPERVISED};
use crate::classifier::{ModelSelection, TrainConfig};
use crate::dataset::{make_semi_split, Dataset, SemiSplit};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, Rng};
use crate::ssl::{run_ssl, run_supervised, SslConfig, SslOutcome};

/// One row of a comparison table: a labeled-only baseline or an SSL configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    Supervised { selection: ModelSelection },
    Ssl(SslConfig),
}

impl Method {
    pub fn supervised() -> Self {
        Method::Supervised {
            selection: ModelSelection::MaxTestAccuracy,
        }
    }

    pub fn algorithm_name(&self) -> String {
        match self {
            Method::Supervised { .. } => SUPERVISED.to_owned(),
            Method::Ssl(cfg) => cfg.algorithm.to_string(),
        }
    }

    pub fn variant(&self) -> String {
        match self {
            Method::Supervised { selection } => supervised_variant(*selection).to_owned(),
            Method::Ssl(cfg) => cfg.variant(),
        }
    }

    pub fn selection(&self) -> ModelSelection {
        match self {
            Method::Supervised { selection } => *selection,
            Method::Ssl(cfg) => cfg.selection,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Method::Supervised { .. } => Ok(()),
            Method::Ssl(cfg) => cfg.validate(),
        }
    }
}

pub(crate) fn supervised_variant(selection: ModelSelection) -> &'static str {
    match selection {
        ModelSelection::MaxTestAccuracy => "base",
        ModelSelection::BestValidation => "select=validation",
    }
}

/// Datasets × unlabeled rates × methods, each cell evaluated over
/// `n_folds` cross-validation folds times `n_seeds` trials.
#[derive(Clone, Debug)]
pub struct ExperimentGrid {
    pub datasets: Vec<Dataset>,
    pub unlabeled_rates: Vec<f64>,
    pub methods: Vec<Method>,
    pub n_folds: usize,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub train: TrainConfig,
    /// Also run the labeled-only baseline at rate 0 (the Oracle row).
    pub include_oracle: bool,
    /// Fraction of D held out for methods selecting by validation accuracy.
    pub validation_fraction: f64,
    /// Record wall-clock time; off gives byte-identical logs across executions.
    pub record_timing: bool,
}

pub const DEFAULT_RATES: [f64; 3] = [0.95, 0.90, 0.80];

impl ExperimentGrid {
    pub fn new(datasets: Vec<Dataset>, methods: Vec<Method>) -> Self {
        Self {
            datasets,
            unlabeled_rates: DEFAULT_RATES.to_vec(),
            methods,
            n_folds: 3,
            n_seeds: 5,
            base_seed: 0,
            train: TrainConfig::default(),
            include_oracle: true,
            validation_fraction: 0.2,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no algorithms to run".into()));
        }
        if self.unlabeled_rates.is_empty() {
            return Err(Error::Config("no unlabeled rates".into()));
        }
        if let Some(r) = self.unlabeled_rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::Config(format!("unlabeled rate {r} outside [0, 1)")));
        }
        if self.n_folds < 2 || self.n_seeds == 0 {
            return Err(Error::Config(format!(
                "need n_folds >= 2 and n_seeds >= 1, got {} and {}",
                self.n_folds, self.n_seeds
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
        }
        let mut names = HashSet::new();
        for ds in &self.datasets {
            if ds.name().is_empty() || ds.name().contains([',', '\n']) {
                return Err(Error::Config(format!(
                    "dataset name `{}` must be non-empty and free of commas",
                    ds.name()
                )));
            }
            if !names.insert(ds.name()) {
                return Err(Error::Config(format!("dataset `{}` listed twice", ds.name())));
            }
        }
        self.train.validate()?;
        for m in &self.methods {
            m.validate()?;
        }
        Ok(())
    }

    /// Every run of the grid, deduplicated, in canonical order.
    pub fn jobs(&self) -> Vec<Job<'_>> {
        let mut seen = HashSet::new();
        let mut jobs = Vec::new();
        let oracle = Method::supervised();
        for ds in &self.datasets {
            let mut cells: Vec<(f64, &Method)> = Vec::new();
            if self.include_oracle {
                cells.push((0.0, &oracle));
            }
            for &rate in &self.unlabeled_rates {
                cells.extend(self.methods.iter().map(|m| (rate, m)));
            }
            for (rate, method) in cells {
                for fold in 0..self.n_folds {
                    for trial in 0..self.n_seeds {
                        let key = RunKey {
                            dataset: ds.name().to_owned(),
                            rate,
                            algorithm: method.algorithm_name(),
                            variant: method.variant(),
                            fold,
                            trial,
                        };
                        if seen.insert(key.clone()) {
                            jobs.push(Job {
                                key,
                                dataset: ds,
                                method: method.clone(),
                            });
                        }
                    }
                }
            }
        }
        jobs.sort_by(|a, b| a.key.cmp(&b.key));
        jobs
    }
}

/// A single training run of the grid.
#[derive(Clone, Debug)]
pub struct Job<'a> {
    pub key: RunKey,
    pub dataset: &'a Dataset,
    pub method: Method,
}

/// Fold partition and masking: shared by every method and rate of a
/// (dataset, trial), so runs pair up by (fold, trial).
pub fn split_rng(base_seed: u64, dataset: &str, trial: usize) -> Rng {
    Rng::new(derive_seed(base_seed, &[dataset, "split", &trial.to_string()]))
}

/// Model initialisation and shuffling for one run.
pub fn model_rng(base_seed: u64, key: &RunKey) -> Rng {
    Rng::new(derive_seed(
        base_seed,
        &[
            &key.dataset,
            &key.rate.to_string(),
            &key.algorithm,
            &key.variant,
            &key.fold.to_string(),
            &key.trial.to_string(),
        ],
    ))
}

impl Job<'_> {
    pub fn split(&self, grid: &ExperimentGrid) -> Result<SemiSplit> {
        let rng = split_rng(grid.base_seed, &self.key.dataset, self.key.trial);
        let split = make_semi_split(self.dataset, self.key.rate, self.key.fold, grid.n_folds, &rng)?;
        if self.method.selection() == ModelSelection::BestValidation {
            split.hold_out_validation(self.dataset, grid.validation_fraction, &rng)
        } else {
            Ok(split)
        }
    }

    pub fn execute(&self, grid: &ExperimentGrid) -> Result<SslOutcome> {
        let split = self.split(grid)?;
        let rng = model_rng(grid.base_seed, &self.key);
        match &self.method {
            Method::Supervised { selection } => run_supervised(self.dataset, &split, &grid.train, *selection, &rng),
            Method::Ssl(cfg) => run_ssl(self.dataset, &split, cfg, &grid.train, &rng),
        }
    }

    fn run(&self, grid: &ExperimentGrid) -> Result<RunResult> {
        let start = Instant::now();
        let outcome = self.execute(grid).map_err(|e| Error::Run {
            context: self.key.describe(),
            source: Box::new(e),
        })?;
        Ok(RunResult {
            key: self.key.clone(),
            max_test_acc: 100.0 * outcome.max_test_accuracy,
            iterations: outcome.iterations(),
            wall_ms: if grid.record_timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        })
    }
}

/// Runs every job of the grid on up to `jobs` threads and returns the
/// results in canonical order. `on_result` is called as runs complete.
pub fn run_grid(
    grid: &ExperimentGrid,
    jobs: usize,
    on_result: &(dyn Fn(&RunResult) + Sync),
) -> Result<Vec<RunResult>> {
    grid.validate()?;
    let work = grid.jobs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| {
        work.par_iter()
            .map(|job| {
                let r = job.run(grid)?;
                on_result(&r);
                Ok(r)
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synthetic_blobs, BlobSpec};
    use crate::ssl::Algorithm;

    fn tiny_grid() -> ExperimentGrid {
        let ds = synthetic_blobs(&BlobSpec { n_samples: 60, dim: 4, n_classes: 2, ..Default::default() }).unwrap();
        let mut g = ExperimentGrid::new(vec![ds], vec![Method::supervised()]);
        g.unlabeled_rates = vec![0.0, 0.9];
        g.train.epochs = 2;
        g.n_seeds = 2;
        g
    }

    #[test]
    fn jobs_cover_folds_and_trials_once() {
        let g = tiny_grid();
        // oracle coincides with the rate-0 supervised cell
        assert_eq!(g.jobs().len(), 2 * 3 * 2);
        let mut g2 = g.clone();
        g2.methods.push(Method::Ssl(SslConfig::new(Algorithm::TriTraining)));
        assert_eq!(g2.jobs().len(), 4 * 3 * 2);
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let mut g = tiny_grid();
        g.methods.clear();
        assert!(matches!(g.validate(), Err(Error::Config(_))));
        let mut g = tiny_grid();
        g.unlabeled_rates = vec![1.0];
        assert!(g.validate().is_err());
        let mut g = tiny_grid();
        g.datasets.push(g.datasets[0].clone());
        assert!(g.validate().is_err());
    }

    #[test]
    fn oracle_is_the_rate_zero_supervised_run() {
        let g = tiny_grid();
        let results = run_grid(&g, 2, &|_| {}).unwrap();
        let jobs = g.jobs();
        let oracle = jobs.iter().find(|j| j.key.rate == 0.0 && j.key.fold == 1).unwrap();
        let direct = oracle.execute(&g).unwrap();
        let logged = results.iter().find(|r| r.key == oracle.key).unwrap();
        assert_eq!(logged.max_test_acc, 100.0 * direct.max_test_accuracy);
    }

    #[test]
    fn parallel_and_serial_agree() {
        let g = tiny_grid();
        assert_eq!(run_grid(&g, 1, &|_| {}).unwrap(), run_grid(&g, 4, &|_| {}).unwrap());
    }

    #[test]
    fn split_is_shared_across_methods_and_rates() {
        let mut g = tiny_grid();
        g.methods.push(Method::Ssl(SslConfig::new(Algorithm::CountSelfTraining)));
        let jobs = g.jobs();
        let pick = |alg: &str, rate: f64| {
            jobs.iter()
                .find(|j| j.key.algorithm == alg && j.key.rate == rate && j.key.fold == 2 && j.key.trial == 1)
                .unwrap()
                .split(&g)
                .unwrap()
        };
        let a = pick(SUPERVISED, 0.9);
        let b = pick("CBST", 0.9);
        assert_eq!(a, b);
        assert_eq!(a.test_idx, pick(SUPERVISED, 0.0).test_idx);
    }
}
