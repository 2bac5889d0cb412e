use std::ops::Range;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Partition of a dataset for one cross-validation fold: labeled training
/// samples (D), unlabeled training samples (U) and held-out test samples.
///
/// All index lists are row indices into the dataset, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiSplit {
    pub labeled_idx: Vec<usize>,
    pub unlabeled_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    /// Carved out of D by [`SemiSplit::hold_out_validation`]; empty otherwise.
    pub validation_idx: Vec<usize>,
    pub unlabeled_rate: f64,
    pub fold: usize,
    pub n_folds: usize,
}

impl SemiSplit {
    /// Training portion of the fold: `D ∪ U` (plus any validation samples).
    pub fn n_train(&self) -> usize {
        self.labeled_idx.len() + self.unlabeled_idx.len() + self.validation_idx.len()
    }

    /// Moves a stratified `fraction` of every class in D into a validation
    /// set, keeping at least one labeled sample per class.
    pub fn hold_out_validation(&self, ds: &Dataset, fraction: f64, rng: &Rng) -> Result<SemiSplit> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Argument(format!(
                "validation fraction must lie in [0, 1), got {fraction}"
            )));
        }
        let mut rng = rng.child(0x7a11d);
        let mut by_class = vec![Vec::new(); ds.n_classes()];
        for &i in &self.labeled_idx {
            by_class[ds.labels()[i]].push(i);
        }
        let mut labeled = Vec::new();
        let mut validation = self.validation_idx.clone();
        for mut members in by_class {
            rng.shuffle(&mut members);
            let take = ((members.len() as f64 * fraction).floor() as usize)
                .min(members.len().saturating_sub(1));
            validation.extend_from_slice(&members[..take]);
            labeled.extend_from_slice(&members[take..]);
        }
        labeled.sort_unstable();
        validation.sort_unstable();
        Ok(SemiSplit {
            labeled_idx: labeled,
            validation_idx: validation,
            ..self.clone()
        })
    }
}

/// Splits `total` into integer shares proportional to `weights` (largest
/// remainder method, ties to the lower index). When `total >= weights.len()`
/// every non-empty weight receives at least one unit.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut shares: Vec<usize> = weights.iter().map(|&w| total * w / sum).collect();
    let mut rest = total - shares.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // remainder of total*w/sum, compared exactly in integers
    order.sort_by(|&a, &b| {
        let ra = (total * weights[a]) % sum;
        let rb = (total * weights[b]) % sum;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        if shares[c] < weights[c] {
            shares[c] += 1;
            rest -= 1;
        }
    }
    if total >= weights.iter().filter(|&&w| w > 0).count() {
        while let Some(starved) = (0..weights.len()).find(|&c| shares[c] == 0 && weights[c] > 0) {
            let donor = (0..weights.len()).max_by_key(|&c| (shares[c], std::cmp::Reverse(c))).unwrap();
            if shares[donor] <= 1 {
                break;
            }
            shares[donor] -= 1;
            shares[starved] += 1;
        }
    }
    shares
}

/// Stratified fold assignment followed by stratified label masking.
///
/// Fold membership depends only on `rng` (so test folds are shared across
/// unlabeled rates); masking uses a child stream keyed by the fold, and the
/// per-class masking order does not depend on the rate, so lower rates
/// reveal a superset of the labels revealed at higher rates. Rate 0 is the
/// oracle condition: U is empty.
pub fn make_semi_split(
    ds: &Dataset,
    unlabeled_rate: f64,
    fold: usize,
    n_folds: usize,
    rng: &Rng,
) -> Result<SemiSplit> {
    if n_folds < 2 {
        return Err(Error::Argument(format!("n_folds must be at least 2, got {n_folds}")));
    }
    if fold >= n_folds {
        return Err(Error::Argument(format!("fold {fold} out of range for {n_folds} folds")));
    }
    if !(0.0..1.0).contains(&unlabeled_rate) {
        return Err(Error::Argument(format!(
            "unlabeled rate must lie in [0, 1), got {unlabeled_rate}"
        )));
    }
    let members = ds.class_members();
    if let Some((c, m)) = members.iter().enumerate().find(|(_, m)| m.len() < n_folds) {
        return Err(Error::Data(format!(
            "class {c} has {} samples, fewer than the {n_folds} folds",
            m.len()
        )));
    }

    let mut fold_rng = rng.child(0);
    let mut fold_of = vec![0usize; ds.n_samples()];
    let mut offset = 0;
    for class in &members {
        let mut perm = class.clone();
        fold_rng.shuffle(&mut perm);
        for (j, &i) in perm.iter().enumerate() {
            fold_of[i] = (j + offset) % n_folds;
        }
        offset += perm.len();
    }

    let mut mask_rng = rng.child(1 + fold as u64);
    let mut train_by_class: Vec<Vec<usize>> = Vec::with_capacity(members.len());
    for class in &members {
        let mut train: Vec<usize> = class.iter().copied().filter(|&i| fold_of[i] != fold).collect();
        mask_rng.shuffle(&mut train);
        train_by_class.push(train);
    }
    let sizes: Vec<usize> = train_by_class.iter().map(Vec::len).collect();
    let n_train: usize = sizes.iter().sum();
    let n_unlabeled = (n_train as f64 * unlabeled_rate).round() as usize;
    let labeled_per_class = apportion(n_train - n_unlabeled, &sizes);

    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for (train, &k) in train_by_class.iter().zip(&labeled_per_class) {
        labeled.extend_from_slice(&train[..k]);
        unlabeled.extend_from_slice(&train[k..]);
    }
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    let test: Vec<usize> = (0..ds.n_samples()).filter(|&i| fold_of[i] == fold).collect();

    Ok(SemiSplit {
        labeled_idx: labeled,
        unlabeled_idx: unlabeled,
        test_idx: test,
        validation_idx: Vec::new(),
        unlabeled_rate,
        fold,
        n_folds,
    })
}

/// Two disjoint column ranges covering every feature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSplit {
    pub view_a: Range<usize>,
    pub view_b: Range<usize>,
}

impl FeatureSplit {
    /// `[0, d/2)` and `[d/2, d)`; for odd `d` the second view gets the extra column.
    pub fn halves(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 features to split into views, got {d}"
            )));
        }
        Ok(Self {
            view_a: 0..d / 2,
            view_b: d / 2..d,
        })
    }

    pub fn project(&self, features: &Matrix) -> Result<(Matrix, Matrix)> {
        Ok((
            features.select_columns(self.view_a.clone())?,
            features.select_columns(self.view_b.clone())?,
        ))
    }
}

pub fn split_features(ds: &Dataset) -> Result<FeatureSplit> {
    FeatureSplit::halves(ds.dim())
}
