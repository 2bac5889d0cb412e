use serde::{Deserialize, Serialize};

use super::{MlpModel, TrainConfig};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Features paired with (true or pseudo) labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledData {
    x: Matrix,
    y: Vec<usize>,
}

impl LabeledData {
    pub fn new(x: Matrix, y: Vec<usize>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::shape(
                format!("{} feature rows", x.rows()),
                format!("{} labels", y.len()),
            ));
        }
        Ok(Self { x, y })
    }

    /// Copies `rows` out of `features`, labelling row `rows[i]` with `labels[i]`.
    pub fn gather(features: &Matrix, rows: &[usize], labels: Vec<usize>) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= features.rows()) {
            return Err(Error::Argument(format!(
                "row {r} out of range for {} samples",
                features.rows()
            )));
        }
        Self::new(features.select_rows(rows), labels)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Fraction of matching labels; 0 for empty input.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// How the success of a training run is read off its accuracy trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSelection {
    /// Highest test accuracy seen after any epoch.
    #[default]
    MaxTestAccuracy,
    /// Test accuracy at the epoch with the highest validation accuracy
    /// (first such epoch). Needs a validation set.
    BestValidation,
}

/// Per-epoch accuracies of one model (or one ensemble).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AccuracyTrace {
    pub test: Vec<f64>,
    /// Empty when no validation set was supplied.
    pub validation: Vec<f64>,
}

impl AccuracyTrace {
    pub fn push(&mut self, test: f64, validation: Option<f64>) {
        self.test.push(test);
        if let Some(v) = validation {
            self.validation.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test.is_empty()
    }

    pub fn max_test(&self) -> f64 {
        self.test.iter().copied().fold(0.0, f64::max)
    }

    fn best_validation_epoch(&self) -> Option<usize> {
        if self.validation.len() != self.test.len() || self.validation.is_empty() {
            return None;
        }
        let mut best = 0;
        for (i, &v) in self.validation.iter().enumerate() {
            if v > self.validation[best] {
                best = i;
            }
        }
        Some(best)
    }

    /// Criterion used to rank traces against each other.
    fn criterion(&self, selection: ModelSelection) -> f64 {
        match (selection, self.best_validation_epoch()) {
            (ModelSelection::BestValidation, Some(i)) => self.validation[i],
            _ => self.max_test(),
        }
    }

    /// Reported test accuracy under `selection`. Falls back to the maximum
    /// test accuracy when no validation trace exists.
    pub fn score(&self, selection: ModelSelection) -> f64 {
        match (selection, self.best_validation_epoch()) {
            (ModelSelection::BestValidation, Some(i)) => self.test[i],
            _ => self.max_test(),
        }
    }

    pub fn extend(&mut self, other: &AccuracyTrace) {
        self.test.extend_from_slice(&other.test);
        self.validation.extend_from_slice(&other.validation);
    }
}

/// Index of the trace that wins under `selection` (ties to the lowest index).
pub fn best_track(traces: &[AccuracyTrace], selection: ModelSelection) -> usize {
    let mut best = 0;
    for (i, t) in traces.iter().enumerate() {
        if t.criterion(selection) > traces[best].criterion(selection) {
            best = i;
        }
    }
    best
}

/// Result of one `fit` call.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub epoch_test_accuracy: Vec<f64>,
    pub epoch_validation_accuracy: Vec<f64>,
    pub max_test_accuracy: f64,
    pub final_model: MlpModel,
}

impl MlpModel {
    /// One pass over `train` in shuffled mini-batches.
    pub(crate) fn train_epoch(&mut self, train: &LabeledData, cfg: &TrainConfig, rng: &mut Rng) {
        let order = rng.permutation(train.len());
        for batch in order.chunks(cfg.batch_size) {
            let x = train.x.select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| train.y[i]).collect();
            let (_, grads) = self.loss_and_grads_unchecked(&x, &y);
            self.adam_step_unchecked(&grads, cfg);
        }
    }

    pub(crate) fn check_labels(&self, data: &LabeledData, what: &str) -> Result<()> {
        if data.x.cols() != self.input_dim() {
            return Err(Error::shape(
                format!("{what} with {} features", data.x.cols()),
                format!("model expecting {}", self.input_dim()),
            ));
        }
        if let Some(i) = data.y.iter().position(|&c| c >= self.n_classes()) {
            return Err(Error::Data(format!(
                "{what} sample {i} has label {} outside [0, {})",
                data.y[i],
                self.n_classes()
            )));
        }
        Ok(())
    }

    pub(crate) fn evaluate(&self, data: &LabeledData) -> f64 {
        let probs = self.forward_pass(&data.x).probs;
        let (labels, _) = super::argmax_rows(&probs);
        accuracy(&labels, &data.y)
    }

    /// Trains for `cfg.epochs` shuffled mini-batch epochs, recording test
    /// accuracy after every epoch. The model is advanced in place, so a
    /// second call continues from where the first stopped (optimizer
    /// moments included).
    pub fn fit(
        &mut self,
        train: &LabeledData,
        test: &LabeledData,
        cfg: &TrainConfig,
        rng: &mut Rng,
    ) -> Result<RunRecord> {
        self.fit_with_validation(train, test, None, cfg, rng)
    }

    pub fn fit_with_validation(
        &mut self,
        train: &LabeledData,
        test: &LabeledData,
        validation: Option<&LabeledData>,
        cfg: &TrainConfig,
        rng: &mut Rng,
    ) -> Result<RunRecord> {
        cfg.validate()?;
        if train.is_empty() {
            return Err(Error::Argument("cannot fit on an empty training set".into()));
        }
        if test.is_empty() {
            return Err(Error::Argument("cannot evaluate on an empty test set".into()));
        }
        self.check_labels(train, "training set")?;
        self.check_labels(test, "test set")?;
        if let Some(v) = validation {
            self.check_labels(v, "validation set")?;
        }
        let mut trace = AccuracyTrace::default();
        for _ in 0..cfg.epochs {
            self.train_epoch(train, cfg, rng);
            trace.push(self.evaluate(test), validation.map(|v| self.evaluate(v)));
        }
        if self.parameters().iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("training diverged to non-finite parameters".into()));
        }
        Ok(RunRecord {
            max_test_accuracy: trace.max_test(),
            epoch_test_accuracy: trace.test,
            epoch_validation_accuracy: trace.validation,
            final_model: self.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Two Gaussian blobs at (-2,-2) and (2,2) with sigma 0.5: centre distance
    /// 5.66 = 11.3 sigma, so the margin around x + y = 0 exceeds 4 sigma.
    fn blobs(n: usize, seed: u64) -> LabeledData {
        let mut rng = Rng::new(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let centre = if c == 0 { -2.0 } else { 2.0 };
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            rows.push([centre + 0.5 * a, centre + 0.5 * b]);
            y.push(c);
        }
        LabeledData::new(Matrix::from_rows(&rows).unwrap(), y).unwrap()
    }

    #[test]
    fn blobs_are_separated_by_hand_separator() {
        let data = blobs(200, 1);
        let predicted: Vec<usize> = (0..data.len())
            .map(|i| usize::from(data.x().get(i, 0) + data.x().get(i, 1) > 0.0))
            .collect();
        assert_eq!(accuracy(&predicted, data.y()), 1.0);
    }

    #[test]
    fn learns_separable_blobs() {
        let train = blobs(200, 1);
        let test = blobs(200, 2);
        let mut rng = Rng::new(3);
        let mut m = MlpModel::new(2, 2, &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 50, ..TrainConfig::default() };
        let rec = m.fit(&train, &test, &cfg, &mut rng).unwrap();
        assert_eq!(rec.epoch_test_accuracy.len(), 50);
        assert!(rec.max_test_accuracy >= 0.95, "{}", rec.max_test_accuracy);
        assert_eq!(rec.final_model, m);
    }

    #[test]
    fn one_epoch_full_batch_is_one_step() {
        let train = blobs(20, 1);
        let mut rng = Rng::new(3);
        let mut m = MlpModel::new(2, 2, &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 1, batch_size: 20, ..TrainConfig::default() };
        let rec = m.fit(&train, &train, &cfg, &mut rng).unwrap();
        assert_eq!(rec.epoch_test_accuracy.len(), 1);
        assert_eq!(m.adam_state().timestep(), 1);
    }

    #[test]
    fn fit_is_deterministic() {
        let train = blobs(60, 4);
        let test = blobs(40, 5);
        let run = || {
            let mut rng = Rng::new(9);
            let mut m = MlpModel::new(2, 2, &mut rng).unwrap();
            m.fit(&train, &test, &TrainConfig { epochs: 5, ..Default::default() }, &mut rng)
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let test = blobs(10, 1);
        let empty = LabeledData::new(Matrix::zeros(0, 2), vec![]).unwrap();
        let mut rng = Rng::new(1);
        let mut m = MlpModel::new(2, 2, &mut rng).unwrap();
        assert!(matches!(
            m.fit(&empty, &test, &TrainConfig::default(), &mut rng),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn validation_selection() {
        let trace = AccuracyTrace {
            test: vec![0.5, 0.9, 0.7],
            validation: vec![0.6, 0.5, 0.8],
        };
        assert_eq!(trace.score(ModelSelection::MaxTestAccuracy), 0.9);
        assert_eq!(trace.score(ModelSelection::BestValidation), 0.7);
        let no_val = AccuracyTrace { test: vec![0.2, 0.4], validation: vec![] };
        assert_eq!(no_val.score(ModelSelection::BestValidation), 0.4);
        assert_eq!(best_track(&[no_val.clone(), trace.clone()], ModelSelection::MaxTestAccuracy), 1);
    }
}
