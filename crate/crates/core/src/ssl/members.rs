//! Models trained side by side, epoch by epoch, so that the combined
//! prediction can be scored after every epoch.

use super::{vote, RoundTrace};
use crate::classifier::{accuracy, argmax_rows, LabeledData, MlpModel, Predictions, TrainConfig};
use crate::dataset::{Dataset, SemiSplit};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Combine {
    Single,
    Average,
    Vote,
}

pub(crate) struct Member {
    pub model: MlpModel,
    init: Rng,
    inits: u64,
    shuffle: Rng,
    /// All dataset rows in this member's feature view.
    features: Matrix,
    unlabeled: Matrix,
    test: LabeledData,
    validation: Option<LabeledData>,
}

/// Stream ids: member `k` initialises from `rng.child(2k)` and shuffles
/// with `rng.child(2k + 1)`.
pub(crate) fn member_streams(rng: &Rng, k: u64) -> (Rng, Rng) {
    (rng.child(2 * k), rng.child(2 * k + 1))
}

impl Member {
    pub fn new(ds: &Dataset, split: &SemiSplit, features: Matrix, streams: (Rng, Rng)) -> Result<Self> {
        let (init, shuffle) = streams;
        let labels = ds.labels();
        let pick = |rows: &[usize]| rows.iter().map(|&r| labels[r]).collect::<Vec<_>>();
        let test = LabeledData::gather(&features, &split.test_idx, pick(&split.test_idx))?;
        let validation = if split.validation_idx.is_empty() {
            None
        } else {
            Some(LabeledData::gather(&features, &split.validation_idx, pick(&split.validation_idx))?)
        };
        let model = MlpModel::new(features.cols(), ds.n_classes(), &mut init.child(0))?;
        Ok(Self {
            model,
            init,
            inits: 0,
            shuffle,
            unlabeled: features.select_rows(&split.unlabeled_idx),
            features,
            test,
            validation,
        })
    }

    /// Fresh parameters and optimizer state from the next init stream.
    pub fn reinitialise(&mut self) -> Result<()> {
        self.inits += 1;
        self.model = MlpModel::new(
            self.features.cols(),
            self.model.n_classes(),
            &mut self.init.child(self.inits),
        )?;
        Ok(())
    }

    pub fn predict_unlabeled(&self) -> Result<Predictions> {
        self.model.predict(&self.unlabeled)
    }

    /// Training set made of dataset `rows` with the given labels.
    pub fn gather(&self, rows: &[usize], labels: Vec<usize>) -> Result<LabeledData> {
        LabeledData::gather(&self.features, rows, labels)
    }
}

fn combined_accuracy(probs: &[Matrix], truth: &[usize], combine: Combine) -> Result<f64> {
    let labels = match combine {
        Combine::Single => argmax_rows(&probs[0]).0,
        Combine::Average => vote::average_vote(&probs.iter().collect::<Vec<_>>())?,
        Combine::Vote => {
            let preds: Vec<Vec<usize>> = probs.iter().map(|p| argmax_rows(p).0).collect();
            vote::majority_vote(
                [&preds[0], &preds[1], &preds[2]],
                [&probs[0], &probs[1], &probs[2]],
            )?
        }
    };
    Ok(accuracy(&labels, truth))
}

fn score(members: &[Member], pick: impl Fn(&Member) -> Option<&LabeledData>, combine: Combine) -> Result<Option<(f64, Vec<f64>)>> {
    let Some(truth) = pick(&members[0]).map(|d| d.y().to_vec()) else {
        return Ok(None);
    };
    let mut probs = Vec::with_capacity(members.len());
    let mut single = Vec::with_capacity(members.len());
    for m in members {
        let data = pick(m).expect("every member shares the split");
        let p = m.model.forward(data.x())?;
        single.push(accuracy(&argmax_rows(&p).0, &truth));
        probs.push(p);
    }
    Ok(Some((combined_accuracy(&probs, &truth, combine)?, single)))
}

/// Trains member `k` on `train[k]` for `cfg.epochs` epochs, all members in
/// lockstep, recording combined and per-member accuracies after each epoch.
pub(crate) fn train_round(
    members: &mut [Member],
    train: &[LabeledData],
    cfg: &TrainConfig,
    combine: Combine,
) -> Result<RoundTrace> {
    cfg.validate()?;
    if members.len() != train.len() {
        return Err(Error::shape(
            format!("{} models", members.len()),
            format!("{} training sets", train.len()),
        ));
    }
    let expected = match combine {
        Combine::Single => 1,
        Combine::Average => 2,
        Combine::Vote => 3,
    };
    if members.len() != expected {
        return Err(Error::Argument(format!(
            "{combine:?} combination needs {expected} models, got {}",
            members.len()
        )));
    }
    for (m, t) in members.iter().zip(train) {
        if t.is_empty() {
            return Err(Error::Argument("cannot fit on an empty training set".into()));
        }
        m.model.check_labels(t, "training set")?;
    }

    let mut trace = RoundTrace {
        ensemble: Default::default(),
        members: vec![Default::default(); members.len()],
    };
    for _ in 0..cfg.epochs {
        for (m, t) in members.iter_mut().zip(train) {
            m.model.train_epoch(t, cfg, &mut m.shuffle);
        }
        let (test, test_single) = score(members, |m| Some(&m.test), combine)?.expect("test set is present");
        let val = score(members, |m| m.validation.as_ref(), combine)?;
        trace.ensemble.push(test, val.as_ref().map(|v| v.0));
        for (k, t) in trace.members.iter_mut().enumerate() {
            t.push(test_single[k], val.as_ref().map(|v| v.1[k]));
        }
    }
    if members.iter().any(|m| m.model.parameters().iter().any(|v| !v.is_finite())) {
        return Err(Error::Argument("training diverged to non-finite parameters".into()));
    }
    Ok(trace)
}
