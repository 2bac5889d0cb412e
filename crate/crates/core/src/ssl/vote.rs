use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Per-sample majority label of three models. When all three disagree the
/// candidate with the highest summed probability wins, then the lowest
/// class index.
pub fn majority_vote(preds: [&[usize]; 3], probs: [&Matrix; 3]) -> Result<Vec<usize>> {
    let n = preds[0].len();
    if preds.iter().any(|p| p.len() != n) || probs.iter().any(|p| p.rows() != n) {
        return Err(Error::shape(
            format!("prediction lengths {:?}", preds.map(<[usize]>::len)),
            format!("probability rows {:?}", probs.map(Matrix::rows)),
        ));
    }
    let cols = probs[0].cols();
    if probs.iter().any(|p| p.cols() != cols) || preds.iter().flat_map(|p| p.iter()).any(|&l| l >= cols) {
        return Err(Error::shape("labels/probabilities", format!("{cols} classes")));
    }
    Ok((0..n)
        .map(|i| {
            let (a, b, c) = (preds[0][i], preds[1][i], preds[2][i]);
            if a == b || a == c {
                a
            } else if b == c {
                b
            } else {
                let summed = |k: usize| probs.iter().map(|p| p.get(i, k)).sum::<f64>();
                let mut candidates = [a, b, c];
                candidates.sort_unstable();
                let mut best = candidates[0];
                for &k in &candidates[1..] {
                    if summed(k) > summed(best) {
                        best = k;
                    }
                }
                best
            }
        })
        .collect())
}

/// Argmax of the mean of several probability matrices (ties to the lowest class).
pub fn average_vote(probs: &[&Matrix]) -> Result<Vec<usize>> {
    let first = probs
        .first()
        .ok_or_else(|| Error::Argument("average_vote needs at least one model".into()))?;
    if probs.iter().any(|p| p.shape() != first.shape()) {
        return Err(Error::shape(
            format!("{}x{}", first.rows(), first.cols()),
            "probability matrices of differing shapes",
        ));
    }
    let mut sum = Matrix::zeros(first.rows(), first.cols());
    for p in probs {
        for (s, v) in sum.as_mut_slice().iter_mut().zip(p.as_slice()) {
            *s += v;
        }
    }
    Ok(crate::classifier::argmax_rows(&sum).0)
}
