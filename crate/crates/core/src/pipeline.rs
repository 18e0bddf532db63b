//! Continual training across all time steps of a dataset.

use std::time::Instant;

use crate::error::Result;
use crate::eval::{time_averaged_metrics, AggregateReport, EvalMode};
use crate::kg::GrowingDataset;
use crate::trainer::{plan_time_step, train_time_step, EpochRecord, IncdeModel, TimeStepReport, TrainConfig};

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub report: TimeStepReport,
    pub layer_sizes: Vec<usize>,
    pub wall_ms: f64,
}

/// Trains the model from `model.time + 1` through the last time of `dataset`.
/// `after_step` sees the model after each time step, e.g. to checkpoint it.
pub fn train_continual(
    model: &mut IncdeModel,
    dataset: &GrowingDataset,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
    after_step: &mut dyn FnMut(&IncdeModel, &StepOutcome) -> Result<()>,
) -> Result<Vec<StepOutcome>> {
    config.validate()?;
    let mut outcomes = Vec::new();
    for time in model.time + 1..=dataset.num_times() {
        let started = Instant::now();
        let (scores, plan) = plan_time_step(dataset, time, config)?;
        let report = train_time_step(model, dataset, time, &plan, &scores, config, observer)?;
        let outcome = StepOutcome {
            report,
            layer_sizes: plan.layers.iter().map(|l| l.len()).collect(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        after_step(model, &outcome)?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Trains a fresh model on the whole dataset and returns the filtered
/// time-averaged metrics of the final model.
pub fn train_and_evaluate(dataset: &GrowingDataset, config: &TrainConfig) -> Result<(IncdeModel, AggregateReport)> {
    let mut model = IncdeModel::new(config.dim);
    train_continual(&mut model, dataset, config, &mut |_| {}, &mut |_, _| Ok(()))?;
    let report = time_averaged_metrics(
        &model.table,
        config.norm,
        dataset,
        dataset.num_times(),
        EvalMode::Filtered,
    )?;
    Ok((model, report))
}
