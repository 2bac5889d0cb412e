use super::members::{member_streams, train_round, Combine, Member};
use super::{
    check_pseudo_labels, check_split, co_training_assignment, Algorithm, PseudoLabelBatch,
    SslConfig, SslOutcome,
};
use crate::classifier::TrainConfig;
use crate::dataset::{Dataset, FeatureSplit, SemiSplit};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Two-view co-training.
///
/// Model 1 sees `views.view_a`, model 2 `views.view_b`. At each iteration
/// every sample of U is scored by both; L1 collects samples model 1 is sure
/// of (`> tau`) and model 2 is not (`< tau`), labelled by model 1, and L2
/// the mirror image. Model 1 then retrains on D ∪ L2 and model 2 on
/// D ∪ L1. Stops when both sets are empty or after `max_iterations`.
pub fn run_co_training(
    ds: &Dataset,
    split: &SemiSplit,
    views: &FeatureSplit,
    cfg: &SslConfig,
    train_cfg: &TrainConfig,
    rng: &Rng,
) -> Result<SslOutcome> {
    cfg.validate()?;
    if cfg.algorithm != Algorithm::CoTraining {
        return Err(Error::Config(format!("{} is not co-training", cfg.algorithm)));
    }
    check_split(ds, split)?;
    let (xa, xb) = views.project(ds.features())?;
    let stream = |k| member_streams(rng, if cfg.shared_model_stream { 0 } else { k });
    let mut members = [
        Member::new(ds, split, xa, stream(0))?,
        Member::new(ds, split, xb, stream(1))?,
    ];
    let d_labels: Vec<usize> = split.labeled_idx.iter().map(|&r| ds.labels()[r]).collect();
    let base = [
        members[0].gather(&split.labeled_idx, d_labels.clone())?,
        members[1].gather(&split.labeled_idx, d_labels.clone())?,
    ];
    let mut rounds = vec![train_round(&mut members, &base, train_cfg, Combine::Average)?];
    let mut counts = Vec::new();
    let tau = cfg.band.tau1();
    let u = &split.unlabeled_idx;

    for _ in 0..cfg.max_iterations {
        let p1 = members[0].predict_unlabeled()?;
        let p2 = members[1].predict_unlabeled()?;
        let mut l1 = PseudoLabelBatch { sources: vec![0], ..Default::default() };
        let mut l2 = PseudoLabelBatch { sources: vec![1], ..Default::default() };
        for i in 0..u.len() {
            let (into1, into2) = co_training_assignment(p1.confidences[i], p2.confidences[i], tau);
            if into1 {
                l1.indices.push(i);
                l1.labels.push(p1.labels[i]);
            }
            if into2 {
                l2.indices.push(i);
                l2.labels.push(p2.labels[i]);
            }
        }
        if l1.is_empty() && l2.is_empty() {
            break;
        }
        check_pseudo_labels(split, &l1)?;
        check_pseudo_labels(split, &l2)?;

        // model 1 learns from model 2's labels and vice versa
        let train = [
            augmented(&members[0], split, &d_labels, &l2)?,
            augmented(&members[1], split, &d_labels, &l1)?,
        ];
        if cfg.fresh_model_each_iteration {
            for m in &mut members {
                m.reinitialise()?;
            }
        }
        rounds.push(train_round(&mut members, &train, train_cfg, Combine::Average)?);
        counts.push(vec![l2.len(), l1.len()]);
    }
    let [m1, m2] = members;
    Ok(SslOutcome::from_rounds(
        rounds,
        counts,
        vec![m1.model, m2.model],
        cfg.eval_mode,
        cfg.selection,
    ))
}

pub(crate) fn augmented(
    member: &Member,
    split: &SemiSplit,
    d_labels: &[usize],
    batch: &PseudoLabelBatch,
) -> Result<crate::classifier::LabeledData> {
    let mut rows = split.labeled_idx.clone();
    rows.extend(batch.indices.iter().map(|&p| split.unlabeled_idx[p]));
    let mut labels = d_labels.to_vec();
    labels.extend_from_slice(&batch.labels);
    member.gather(&rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_semi_split, split_features, synthetic_blobs, BlobSpec};
    use crate::ssl::{EvalMode, ThresholdBand};

    fn setup() -> (Dataset, SemiSplit) {
        let ds = synthetic_blobs(&BlobSpec { n_samples: 150, dim: 8, n_classes: 3, separation: 4.0, ..Default::default() })
            .unwrap();
        let split = make_semi_split(&ds, 0.8, 1, 3, &Rng::new(4)).unwrap();
        (ds, split)
    }

    #[test]
    fn runs_and_reports_two_models() {
        let (ds, split) = setup();
        let mut cfg = SslConfig::new(Algorithm::CoTraining);
        cfg.max_iterations = 3;
        cfg.band = ThresholdBand::new(0.6, 1.0).unwrap();
        let train = TrainConfig { epochs: 4, ..Default::default() };
        let fs = split_features(&ds).unwrap();
        let out = run_co_training(&ds, &split, &fs, &cfg, &train, &Rng::new(8)).unwrap();
        assert_eq!(out.final_models.len(), 2);
        assert_eq!(out.final_models[0].input_dim(), 4);
        assert!(out.iterations() <= 3);
        for c in &out.pseudo_label_counts {
            assert!(c.iter().all(|&n| n <= split.unlabeled_idx.len()));
            assert!(c.iter().sum::<usize>() > 0);
        }
        cfg.eval_mode = EvalMode::BestSingle;
        let single = run_co_training(&ds, &split, &fs, &cfg, &train, &Rng::new(8)).unwrap();
        assert_eq!(single.rounds, out.rounds);
        let best = out.rounds.iter().flat_map(|r| &r.members).map(|t| t.max_test()).fold(0.0, f64::max);
        assert_eq!(single.max_test_accuracy, best);
    }

    #[test]
    fn nothing_confident_means_no_iterations() {
        let (ds, split) = setup();
        let mut cfg = SslConfig::new(Algorithm::CoTraining);
        cfg.band = ThresholdBand::new(0.999_999_9, 1.0).unwrap();
        let train = TrainConfig { epochs: 1, ..Default::default() };
        let fs = split_features(&ds).unwrap();
        let out = run_co_training(&ds, &split, &fs, &cfg, &train, &Rng::new(8)).unwrap();
        assert_eq!(out.iterations(), 0);
    }
}
