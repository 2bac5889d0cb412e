//! Pre-embedded datasets: file format, labeled/unlabeled/test splitting,
//! feature views for co-training and bootstrap sampling for tri-training.

mod io;
mod sampling;
mod split;
mod synthetic;

pub use io::{load_csv, parse_csv, save_csv, to_csv_string, Manifest};
pub use sampling::{bootstrap_sample, SampleSize, SamplingStrategy};
pub use split::{make_semi_split, split_features, FeatureSplit, SemiSplit};
pub use synthetic::{synthetic_blobs, BlobSpec};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// A fully labeled corpus of embedding vectors.
///
/// Rows are kept sorted by sample id; all randomness downstream is keyed to
/// that canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    ids: Vec<u64>,
    features: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    /// Validates and canonicalises (sorts by id) a dataset. `n_classes` is
    /// inferred as `max(label) + 1`; every class in that range must occur.
    pub fn new(
        name: impl Into<String>,
        ids: Vec<u64>,
        features: Matrix,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let name = name.into();
        let n = labels.len();
        if n == 0 {
            return Err(Error::Data("no samples".into()));
        }
        if features.cols() == 0 {
            return Err(Error::Data("samples have no features".into()));
        }
        if features.rows() != n || ids.len() != n {
            return Err(Error::shape(
                format!("{} feature rows, {} ids", features.rows(), ids.len()),
                format!("{n} labels"),
            ));
        }
        let n_classes = labels.iter().max().unwrap() + 1;
        let mut counts = vec![0usize; n_classes];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(missing) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!(
                "class {missing} has no samples (labels must cover 0..{n_classes})"
            )));
        }
        if n_classes < 2 {
            return Err(Error::Data("at least two classes are required".into()));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| ids[i]);
        if let Some(w) = order.windows(2).find(|w| ids[w[0]] == ids[w[1]]) {
            return Err(Error::Data(format!("duplicate sample id {}", ids[w[0]])));
        }
        let is_sorted = order.iter().enumerate().all(|(i, &o)| i == o);
        let (ids, features, labels) = if is_sorted {
            (ids, features, labels)
        } else {
            (
                order.iter().map(|&i| ids[i]).collect(),
                features.select_rows(&order),
                order.iter().map(|&i| labels[i]).collect(),
            )
        };
        Ok(Self {
            name,
            ids,
            features,
            labels,
            n_classes,
        })
    }

    /// Dataset with ids `0..n` in row order.
    pub fn from_parts(name: impl Into<String>, features: Matrix, labels: Vec<usize>) -> Result<Self> {
        let ids = (0..labels.len() as u64).collect();
        Self::new(name, ids, features, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices of each class, ascending.
    pub(crate) fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
    }
}
