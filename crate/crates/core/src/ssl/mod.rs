//! Proxy-label semi-supervised algorithms.
//!
//! | name | algorithm                                   | pseudo-label rule                                   |
//! |------|---------------------------------------------|-----------------------------------------------------|
//! | TBST | threshold-based self-training               | `tau1 < conf < tau2`                                |
//! | CBST | count-based self-training                   | confidence ranks `[count_lo, count_hi)`             |
//! | CT   | co-training on two feature halves           | one model above `tau`, the other below              |
//! | TT   | tri-training                                | the two other models agree                          |
//! | TTWD | tri-training with disagreement              | the two other models agree, the receiver disagrees  |
//!
//! Every algorithm rebuilds its pseudo-label sets from all of U at each
//! iteration; samples are never moved out of U.

mod co_training;
mod members;
mod select;
mod self_training;
mod tri_training;
mod vote;

use std::fmt;
use std::str::FromStr;

pub use co_training::run_co_training;
pub use select::{
    co_training_assignment, select_by_count, select_by_threshold, tri_training_admits,
    CountWindow, ThresholdBand,
};
pub use self_training::{run_self_training, run_supervised};
pub use tri_training::run_tri_training;
pub use vote::{average_vote, majority_vote};

use crate::classifier::{AccuracyTrace, MlpModel, ModelSelection, TrainConfig};
use crate::dataset::{Dataset, SamplingStrategy, SemiSplit};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// The five proxy-label algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    ThresholdSelfTraining,
    CountSelfTraining,
    CoTraining,
    TriTraining,
    TriTrainingDisagreement,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::ThresholdSelfTraining,
        Algorithm::CountSelfTraining,
        Algorithm::TriTraining,
        Algorithm::TriTrainingDisagreement,
        Algorithm::CoTraining,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            Algorithm::ThresholdSelfTraining => "TBST",
            Algorithm::CountSelfTraining => "CBST",
            Algorithm::CoTraining => "CT",
            Algorithm::TriTraining => "TT",
            Algorithm::TriTrainingDisagreement => "TTWD",
        }
    }

    pub fn is_multi_model(self) -> bool {
        matches!(
            self,
            Algorithm::CoTraining | Algorithm::TriTraining | Algorithm::TriTrainingDisagreement
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.abbreviation().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm `{s}` (expected one of TBST, CBST, CT, TT, TTWD)"
                ))
            })
    }
}

/// How a multi-model algorithm is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum EvalMode {
    /// Combined prediction: majority vote (tri-training) or averaged
    /// probabilities (co-training).
    #[default]
    Ensemble,
    /// The single member with the best accuracy.
    BestSingle,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Ensemble => "ensemble",
            EvalMode::BestSingle => "single",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ensemble" => Ok(EvalMode::Ensemble),
            "single" | "best_single" => Ok(EvalMode::BestSingle),
            _ => Err(Error::Config(format!(
                "unknown eval mode `{s}` (expected `ensemble` or `single`)"
            ))),
        }
    }
}

/// Every knob of the proxy-label algorithms.
#[derive(Clone, Debug, PartialEq)]
pub struct SslConfig {
    pub algorithm: Algorithm,
    /// TBST band; CT uses `band.tau1()` as its single threshold.
    pub band: ThresholdBand,
    /// CBST rank window.
    pub window: CountWindow,
    pub max_iterations: usize,
    /// Re-initialise parameters and optimizer state before every retraining.
    pub fresh_model_each_iteration: bool,
    pub sampling: SamplingStrategy,
    pub eval_mode: EvalMode,
    pub selection: ModelSelection,
    /// Give every member the same initialisation and shuffling stream.
    /// Only useful to build degenerate, fully identical ensembles.
    pub shared_model_stream: bool,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 20;

impl SslConfig {
    /// Defaults used for the baseline comparison: TBST keeps samples above
    /// 0.90, CBST the 100 most confident, CT uses tau 0.90, tri-training
    /// starts every model from all of D, warm starts, ensemble evaluation.
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            band: ThresholdBand::default(),
            window: CountWindow::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            fresh_model_each_iteration: false,
            sampling: SamplingStrategy::default(),
            eval_mode: EvalMode::default(),
            selection: ModelSelection::default(),
            shared_model_stream: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        ThresholdBand::new(self.band.tau1(), self.band.tau2())?;
        CountWindow::new(self.window.lo(), self.window.hi())?;
        Ok(())
    }

    /// Compact, comma-free description of the knobs that matter for this
    /// algorithm; used as the `variant` column of run logs.
    pub fn variant(&self) -> String {
        let mut parts = Vec::new();
        match self.algorithm {
            Algorithm::ThresholdSelfTraining => {
                parts.push(format!("tau={}..{}", self.band.tau1(), self.band.tau2()))
            }
            Algorithm::CountSelfTraining => {
                parts.push(format!("count={}..{}", self.window.lo(), self.window.hi()))
            }
            Algorithm::CoTraining => {
                parts.push(format!("tau={}", self.band.tau1()));
                parts.push(format!("eval={}", self.eval_mode));
            }
            Algorithm::TriTraining | Algorithm::TriTrainingDisagreement => {
                parts.push(format!("sample={}", self.sampling));
                parts.push(format!("eval={}", self.eval_mode));
            }
        }
        parts.push(
            if self.fresh_model_each_iteration {
                "model=new"
            } else {
                "model=warm"
            }
            .to_owned(),
        );
        parts.push(format!("iter={}", self.max_iterations));
        if self.selection == ModelSelection::BestValidation {
            parts.push("select=validation".into());
        }
        if self.shared_model_stream {
            parts.push("shared".into());
        }
        parts.join(";")
    }
}

/// Samples of U chosen for pseudo-labelling in one iteration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PseudoLabelBatch {
    /// Positions into the unlabeled set U (not dataset rows), ascending
    /// unless produced by [`select_by_count`], which keeps rank order.
    pub indices: Vec<usize>,
    pub labels: Vec<usize>,
    /// Models whose predictions supplied the labels.
    pub sources: Vec<usize>,
}

impl PseudoLabelBatch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// (index, label) pairs sorted by index, for order-insensitive comparison.
    pub fn canonical(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> =
            self.indices.iter().copied().zip(self.labels.iter().copied()).collect();
        pairs.sort_unstable();
        pairs
    }
}

/// Accuracy traces of one training round (the initial fit or one
/// pseudo-labelled retraining).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundTrace {
    /// Combined prediction; equals the only member for single-model runs.
    pub ensemble: AccuracyTrace,
    pub members: Vec<AccuracyTrace>,
}

/// Result of one semi-supervised (or supervised) run.
#[derive(Clone, Debug, PartialEq)]
pub struct SslOutcome {
    /// Round 0 is the initial fit on labeled data.
    pub rounds: Vec<RoundTrace>,
    /// Per augmented iteration, number of pseudo-labels given to each model.
    pub pseudo_label_counts: Vec<Vec<usize>>,
    pub iteration_accuracy: Vec<f64>,
    /// Headline score: the reported test accuracy in `[0, 1]`.
    pub max_test_accuracy: f64,
    pub final_models: Vec<MlpModel>,
    pub eval_mode: EvalMode,
    pub selection: ModelSelection,
}

impl SslOutcome {
    pub(crate) fn from_rounds(
        rounds: Vec<RoundTrace>,
        pseudo_label_counts: Vec<Vec<usize>>,
        final_models: Vec<MlpModel>,
        eval_mode: EvalMode,
        selection: ModelSelection,
    ) -> Self {
        let score = |traces: Vec<AccuracyTrace>| -> f64 {
            match eval_mode {
                EvalMode::Ensemble => traces[0].score(selection),
                EvalMode::BestSingle => {
                    let members = &traces[1..];
                    members[crate::classifier::best_track(members, selection)].score(selection)
                }
            }
        };
        let per_round = |r: &RoundTrace| {
            let mut t = vec![r.ensemble.clone()];
            t.extend(r.members.iter().cloned());
            t
        };
        let iteration_accuracy = rounds.iter().map(|r| score(per_round(r))).collect();
        let mut whole = per_round(&rounds[0]);
        for r in &rounds[1..] {
            for (acc, t) in whole.iter_mut().zip(per_round(r)) {
                acc.extend(&t);
            }
        }
        let max_test_accuracy = score(whole);
        Self {
            rounds,
            pseudo_label_counts,
            iteration_accuracy,
            max_test_accuracy,
            final_models,
            eval_mode,
            selection,
        }
    }

    /// Number of pseudo-labelled retraining rounds that were run.
    pub fn iterations(&self) -> usize {
        self.rounds.len() - 1
    }

    /// Number of training rounds (fits), including the initial one.
    pub fn fits(&self) -> usize {
        self.rounds.len()
    }
}

/// Dispatches on `cfg.algorithm`.
pub fn run_ssl(
    ds: &Dataset,
    split: &SemiSplit,
    cfg: &SslConfig,
    train_cfg: &TrainConfig,
    rng: &Rng,
) -> Result<SslOutcome> {
    match cfg.algorithm {
        Algorithm::ThresholdSelfTraining | Algorithm::CountSelfTraining => {
            run_self_training(ds, split, cfg, train_cfg, rng)
        }
        Algorithm::CoTraining => {
            let fs = crate::dataset::split_features(ds)?;
            run_co_training(ds, split, &fs, cfg, train_cfg, rng)
        }
        Algorithm::TriTraining | Algorithm::TriTrainingDisagreement => {
            run_tri_training(ds, split, cfg, train_cfg, rng)
        }
    }
}

/// Errors unless every position maps into U and no pseudo-labelled row is
/// a labeled, validation or test row.
pub(crate) fn check_pseudo_labels(split: &SemiSplit, batch: &PseudoLabelBatch) -> Result<()> {
    let u = &split.unlabeled_idx;
    let mut seen = std::collections::HashSet::with_capacity(batch.len());
    for &pos in &batch.indices {
        let row = *u.get(pos).ok_or_else(|| {
            Error::Protocol(format!("pseudo-label position {pos} outside U (|U| = {})", u.len()))
        })?;
        if !seen.insert(pos) {
            return Err(Error::Protocol(format!("U position {pos} pseudo-labelled twice")));
        }
        for (name, set) in [
            ("test", &split.test_idx),
            ("labeled", &split.labeled_idx),
            ("validation", &split.validation_idx),
        ] {
            if set.binary_search(&row).is_ok() {
                return Err(Error::Protocol(format!("pseudo-labelled row {row} is a {name} sample")));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_split(ds: &Dataset, split: &SemiSplit) -> Result<()> {
    let n = ds.n_samples();
    let mut owner = vec![false; n];
    for (name, set) in [
        ("labeled", &split.labeled_idx),
        ("unlabeled", &split.unlabeled_idx),
        ("test", &split.test_idx),
        ("validation", &split.validation_idx),
    ] {
        if set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Protocol(format!("{name} indices must be strictly ascending")));
        }
        for &i in set.iter() {
            if i >= n {
                return Err(Error::Protocol(format!("{name} index {i} out of range ({n} samples)")));
            }
            if std::mem::replace(&mut owner[i], true) {
                return Err(Error::Protocol(format!("row {i} appears in more than one split set")));
            }
        }
    }
    if split.labeled_idx.is_empty() {
        return Err(Error::Argument("the labeled set D is empty".into()));
    }
    if split.test_idx.is_empty() {
        return Err(Error::Argument("the test set is empty".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("ttwd".parse::<Algorithm>().unwrap(), Algorithm::TriTrainingDisagreement);
        assert!("ST".parse::<Algorithm>().is_err());
    }

    #[test]
    fn variants_are_distinct_and_comma_free() {
        let mut a = SslConfig::new(Algorithm::ThresholdSelfTraining);
        assert_eq!(a.variant(), "tau=0.9..1;model=warm;iter=20");
        a.fresh_model_each_iteration = true;
        assert_eq!(a.variant(), "tau=0.9..1;model=new;iter=20");
        let mut t = SslConfig::new(Algorithm::TriTraining);
        t.sampling = "x/3-disjoint".parse().unwrap();
        t.eval_mode = EvalMode::BestSingle;
        assert_eq!(t.variant(), "sample=x/3-disjoint;eval=single;model=warm;iter=20");
        assert!(!t.variant().contains(','));
    }

    #[test]
    fn config_validation() {
        let mut c = SslConfig::new(Algorithm::CountSelfTraining);
        c.validate().unwrap();
        c.max_iterations = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn pseudo_label_soundness_check() {
        let split = SemiSplit {
            labeled_idx: vec![0, 1],
            unlabeled_idx: vec![2, 3, 4],
            test_idx: vec![5],
            validation_idx: vec![],
            unlabeled_rate: 0.6,
            fold: 0,
            n_folds: 3,
        };
        let ok = PseudoLabelBatch { indices: vec![0, 2], labels: vec![1, 1], sources: vec![0] };
        check_pseudo_labels(&split, &ok).unwrap();
        let outside = PseudoLabelBatch { indices: vec![3], labels: vec![0], sources: vec![0] };
        assert!(matches!(check_pseudo_labels(&split, &outside), Err(Error::Protocol(_))));
        let twice = PseudoLabelBatch { indices: vec![1, 1], labels: vec![0, 0], sources: vec![0] };
        assert!(check_pseudo_labels(&split, &twice).is_err());
        let leaky = SemiSplit { test_idx: vec![4], ..split };
        assert!(check_pseudo_labels(&leaky, &ok).unwrap_err().to_string().contains("test"));
    }
}
