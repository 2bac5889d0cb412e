use super::members::{member_streams, train_round, Combine, Member};
use super::{
    check_pseudo_labels, check_split, select_by_count, select_by_threshold, Algorithm, EvalMode,
    SslConfig, SslOutcome,
};
use crate::classifier::{ModelSelection, TrainConfig};
use crate::dataset::{Dataset, SemiSplit};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Plain supervised training on D. Uses the same random streams as the
/// initial fit of self-training, so self-training with an empty U gives an
/// identical outcome.
pub fn run_supervised(
    ds: &Dataset,
    split: &SemiSplit,
    train_cfg: &TrainConfig,
    selection: ModelSelection,
    rng: &Rng,
) -> Result<SslOutcome> {
    check_split(ds, split)?;
    let mut member = Member::new(ds, split, ds.features().clone(), member_streams(rng, 0))?;
    let d = labeled_set(ds, split, &member)?;
    let round = train_round(std::slice::from_mut(&mut member), &[d], train_cfg, Combine::Single)?;
    Ok(SslOutcome::from_rounds(
        vec![round],
        Vec::new(),
        vec![member.model],
        EvalMode::Ensemble,
        selection,
    ))
}

fn labeled_set(ds: &Dataset, split: &SemiSplit, member: &Member) -> Result<crate::classifier::LabeledData> {
    let labels = split.labeled_idx.iter().map(|&r| ds.labels()[r]).collect();
    member.gather(&split.labeled_idx, labels)
}

/// Threshold- or count-based self-training.
///
/// Iteration 0 fits on D. Each later iteration predicts every sample of U
/// with the current model, selects pseudo-labels, and retrains on D plus
/// the selection (warm start unless `fresh_model_each_iteration`). Stops
/// after `max_iterations` retrainings, or once the selection covers all of
/// U; an empty U means no retraining at all.
pub fn run_self_training(
    ds: &Dataset,
    split: &SemiSplit,
    cfg: &SslConfig,
    train_cfg: &TrainConfig,
    rng: &Rng,
) -> Result<SslOutcome> {
    cfg.validate()?;
    if !matches!(
        cfg.algorithm,
        Algorithm::ThresholdSelfTraining | Algorithm::CountSelfTraining
    ) {
        return Err(Error::Config(format!("{} is not a self-training algorithm", cfg.algorithm)));
    }
    check_split(ds, split)?;
    let mut member = Member::new(ds, split, ds.features().clone(), member_streams(rng, 0))?;
    let d = labeled_set(ds, split, &member)?;
    let mut rounds = vec![train_round(
        std::slice::from_mut(&mut member),
        std::slice::from_ref(&d),
        train_cfg,
        Combine::Single,
    )?];
    let mut counts = Vec::new();
    let u = &split.unlabeled_idx;

    for _ in 0..cfg.max_iterations {
        if u.is_empty() {
            break;
        }
        let pred = member.predict_unlabeled()?;
        let batch = match cfg.algorithm {
            Algorithm::ThresholdSelfTraining => {
                select_by_threshold(&pred.confidences, &pred.labels, cfg.band)
            }
            _ => select_by_count(&pred.confidences, &pred.labels, cfg.window),
        };
        check_pseudo_labels(split, &batch)?;

        let mut rows = split.labeled_idx.clone();
        rows.extend(batch.indices.iter().map(|&p| u[p]));
        let mut labels = d.y().to_vec();
        labels.extend_from_slice(&batch.labels);
        let train = member.gather(&rows, labels)?;

        if cfg.fresh_model_each_iteration {
            member.reinitialise()?;
        }
        rounds.push(train_round(
            std::slice::from_mut(&mut member),
            &[train],
            train_cfg,
            Combine::Single,
        )?);
        counts.push(vec![batch.len()]);
        if batch.len() == u.len() {
            break;
        }
    }
    Ok(SslOutcome::from_rounds(
        rounds,
        counts,
        vec![member.model],
        EvalMode::Ensemble,
        cfg.selection,
    ))
}
