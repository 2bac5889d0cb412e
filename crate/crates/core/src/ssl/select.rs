use super::PseudoLabelBatch;
use crate::error::{Error, Result};

/// Open confidence interval `(tau1, tau2)` with `0 <= tau1 < tau2 <= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdBand {
    tau1: f64,
    tau2: f64,
}

impl Default for ThresholdBand {
    fn default() -> Self {
        Self { tau1: 0.9, tau2: 1.0 }
    }
}

impl ThresholdBand {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        if !(0.0 <= tau1 && tau1 < tau2 && tau2 <= 1.0) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 <= tau1 < tau2 <= 1, got ({tau1}, {tau2})"
            )));
        }
        Ok(Self { tau1, tau2 })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn contains(&self, confidence: f64) -> bool {
        self.tau1 < confidence && confidence < self.tau2
    }
}

/// Rank window `[lo, hi)` over U sorted by decreasing confidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountWindow {
    lo: usize,
    hi: usize,
}

impl Default for CountWindow {
    fn default() -> Self {
        Self { lo: 0, hi: 100 }
    }
}

impl CountWindow {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Config(format!("count window needs lo < hi, got [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }
}

/// Every sample with `tau1 < confidence < tau2`, labelled with its prediction.
pub fn select_by_threshold(confidences: &[f64], labels: &[usize], band: ThresholdBand) -> PseudoLabelBatch {
    let indices: Vec<usize> = confidences
        .iter()
        .enumerate()
        .filter(|(_, &c)| band.contains(c))
        .map(|(i, _)| i)
        .collect();
    let labels = indices.iter().map(|&i| labels[i]).collect();
    PseudoLabelBatch {
        indices,
        labels,
        sources: vec![0],
    }
}

/// Samples at confidence ranks `[lo, min(hi, |U|))`, most confident first;
/// equal confidences are ranked by position in U.
pub fn select_by_count(confidences: &[f64], labels: &[usize], window: CountWindow) -> PseudoLabelBatch {
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| confidences[b].total_cmp(&confidences[a]).then(a.cmp(&b)));
    let hi = window.hi.min(order.len());
    let lo = window.lo.min(hi);
    let indices: Vec<usize> = order[lo..hi].to_vec();
    let labels = indices.iter().map(|&i| labels[i]).collect();
    PseudoLabelBatch {
        indices,
        labels,
        sources: vec![0],
    }
}

/// Co-training cross-teaching rule for one sample with confidences `c1`
/// (model 1) and `c2` (model 2): returns `(into_l1, into_l2)`, where L1
/// holds model 1's confident labels (taught to model 2) and L2 the reverse.
pub fn co_training_assignment(c1: f64, c2: f64, tau: f64) -> (bool, bool) {
    (c1 > tau && c2 < tau, c2 > tau && c1 < tau)
}

/// Whether tri-training gives a sample to model `receiver` given the three
/// models' predicted labels: the two other models must agree and, with
/// `disagreement`, the receiver must predict something else.
pub fn tri_training_admits(receiver: usize, preds: [usize; 3], disagreement: bool) -> bool {
    let (j, k) = match receiver {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    preds[j] == preds[k] && (!disagreement || preds[receiver] != preds[k])
}
