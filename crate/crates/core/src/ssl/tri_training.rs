use super::co_training::augmented;
use super::members::{member_streams, train_round, Combine, Member};
use super::{
    check_pseudo_labels, check_split, tri_training_admits, Algorithm, PseudoLabelBatch,
    SslConfig, SslOutcome,
};
use crate::classifier::TrainConfig;
use crate::dataset::{bootstrap_sample, Dataset, SemiSplit};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Stream for the initial bootstrap samples, away from the member streams.
const BOOTSTRAP_STREAM: u64 = 100;

/// Tri-training, optionally with the disagreement rule (TTWD).
///
/// Each model starts from its own sample of D drawn by `cfg.sampling`.
/// At every iteration all three models label U first; then model `i`
/// receives D_i, the samples on which the two other models agree (and, for
/// TTWD, model `i` disagrees), and retrains on D ∪ D_i. Stops once every
/// D_i equals its previous value, or after `max_iterations`.
pub fn run_tri_training(
    ds: &Dataset,
    split: &SemiSplit,
    cfg: &SslConfig,
    train_cfg: &TrainConfig,
    rng: &Rng,
) -> Result<SslOutcome> {
    cfg.validate()?;
    let disagreement = match cfg.algorithm {
        Algorithm::TriTraining => false,
        Algorithm::TriTrainingDisagreement => true,
        other => return Err(Error::Config(format!("{other} is not tri-training"))),
    };
    check_split(ds, split)?;
    let stream = |k| member_streams(rng, if cfg.shared_model_stream { 0 } else { k });
    let mut members = [
        Member::new(ds, split, ds.features().clone(), stream(0))?,
        Member::new(ds, split, ds.features().clone(), stream(1))?,
        Member::new(ds, split, ds.features().clone(), stream(2))?,
    ];
    let labels = ds.labels();
    let boot_rng = rng.child(BOOTSTRAP_STREAM);
    let mut initial = Vec::with_capacity(3);
    for (slot, m) in members.iter().enumerate() {
        let slot = if cfg.shared_model_stream { 0 } else { slot };
        let rows = bootstrap_sample(&split.labeled_idx, cfg.sampling, slot, &boot_rng)?;
        let y = rows.iter().map(|&r| labels[r]).collect();
        initial.push(m.gather(&rows, y)?);
    }
    let mut rounds = vec![train_round(&mut members, &initial, train_cfg, Combine::Vote)?];
    let mut counts = Vec::new();
    let d_labels: Vec<usize> = split.labeled_idx.iter().map(|&r| labels[r]).collect();
    let mut previous: [Vec<(usize, usize)>; 3] = Default::default();

    for _ in 0..cfg.max_iterations {
        let preds = [
            members[0].predict_unlabeled()?.labels,
            members[1].predict_unlabeled()?.labels,
            members[2].predict_unlabeled()?.labels,
        ];
        let batches: [PseudoLabelBatch; 3] = std::array::from_fn(|receiver| {
            let mut b = PseudoLabelBatch {
                sources: (0..3).filter(|&s| s != receiver).collect(),
                ..Default::default()
            };
            for i in 0..split.unlabeled_idx.len() {
                let p = [preds[0][i], preds[1][i], preds[2][i]];
                if tri_training_admits(receiver, p, disagreement) {
                    b.indices.push(i);
                    b.labels.push(p[b.sources[0]]);
                }
            }
            b
        });
        let current = batches.clone().map(|b| b.canonical());
        if current == previous {
            break;
        }
        for b in &batches {
            check_pseudo_labels(split, b)?;
        }
        let mut train = Vec::with_capacity(3);
        for (m, b) in members.iter().zip(&batches) {
            train.push(augmented(m, split, &d_labels, b)?);
        }
        if cfg.fresh_model_each_iteration {
            for m in &mut members {
                m.reinitialise()?;
            }
        }
        rounds.push(train_round(&mut members, &train, train_cfg, Combine::Vote)?);
        counts.push(batches.iter().map(PseudoLabelBatch::len).collect());
        previous = current;
    }
    let [a, b, c] = members;
    Ok(SslOutcome::from_rounds(
        rounds,
        counts,
        vec![a.model, b.model, c.model],
        cfg.eval_mode,
        cfg.selection,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::ModelSelection;
    use crate::dataset::{make_semi_split, synthetic_blobs, BlobSpec};
    use crate::ssl::run_supervised;

    fn setup() -> (Dataset, SemiSplit) {
        let ds = synthetic_blobs(&BlobSpec { n_samples: 180, dim: 6, n_classes: 3, separation: 3.0, ..Default::default() })
            .unwrap();
        let split = make_semi_split(&ds, 0.7, 2, 3, &Rng::new(6)).unwrap();
        (ds, split)
    }

    fn quick() -> TrainConfig {
        TrainConfig { epochs: 3, ..Default::default() }
    }

    #[test]
    fn identical_models_under_disagreement_stop_at_once() {
        let (ds, split) = setup();
        let mut cfg = SslConfig::new(Algorithm::TriTrainingDisagreement);
        cfg.shared_model_stream = true;
        let rng = Rng::new(13);
        let out = run_tri_training(&ds, &split, &cfg, &quick(), &rng).unwrap();
        assert_eq!(out.iterations(), 0);
        assert!(out.final_models.iter().all(|m| m == &out.final_models[0]));
        let sup = run_supervised(&ds, &split, &quick(), ModelSelection::MaxTestAccuracy, &rng).unwrap();
        assert_eq!(out.max_test_accuracy, sup.max_test_accuracy);
        assert_eq!(out.final_models[0], sup.final_models[0]);
    }

    #[test]
    fn identical_models_without_disagreement_take_all_of_u() {
        let (ds, split) = setup();
        let mut cfg = SslConfig::new(Algorithm::TriTraining);
        cfg.shared_model_stream = true;
        cfg.max_iterations = 2;
        let out = run_tri_training(&ds, &split, &cfg, &quick(), &Rng::new(13)).unwrap();
        let u = split.unlabeled_idx.len();
        assert_eq!(out.pseudo_label_counts[0], vec![u, u, u]);
    }

    #[test]
    fn sampling_strategies_run() {
        let (ds, split) = setup();
        for s in crate::dataset::SamplingStrategy::table_rows() {
            let mut cfg = SslConfig::new(Algorithm::TriTraining);
            cfg.sampling = s;
            cfg.max_iterations = 2;
            let out = run_tri_training(&ds, &split, &cfg, &quick(), &Rng::new(1)).unwrap();
            assert!(out.iterations() <= 2);
            assert!(out.pseudo_label_counts.iter().flatten().all(|&n| n <= split.unlabeled_idx.len()));
            assert!((0.0..=1.0).contains(&out.max_test_accuracy));
        }
    }

    #[test]
    fn rejects_other_algorithms() {
        let (ds, split) = setup();
        let cfg = SslConfig::new(Algorithm::CountSelfTraining);
        assert!(run_tri_training(&ds, &split, &cfg, &quick(), &Rng::new(1)).is_err());
    }
}
