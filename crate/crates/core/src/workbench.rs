//! Sensitivity runs over a family of feature sets, comparison against the
//! published equations, and the report/CSV files behind them.
//!
//! Every model in a run is fitted on one shared training split and scored on
//! one shared testing split.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{evaluate_baseline, BaselineError, BaselineId, BaselineOptions};
use crate::data::{self, DataError, DatasetSplit, Observation, Scale};
use crate::metrics::{compute_metrics, MetricReport, MetricsError, PredictionPair, Units};
use crate::model::{
    self, CoefficientBounds, FeatureId, ModelError, ModelFile, ModelSpec, PowerLawModel,
};
use crate::swarm::{OptimizationResult, SwarmConfig};

/// Smallest dataset a sensitivity run accepts.
pub const MIN_RECORDS: usize = 10;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("dataset has {0} records; at least {MIN_RECORDS} are required")]
    TooFewRecords(usize),
    #[error("record {id} is {found} data but the run expects {expected}")]
    MixedScale {
        id: usize,
        expected: Scale,
        found: Scale,
    },
    #[error("no model spec could be fitted: {}", summarize_failures(.0))]
    AllFitsFailed(Vec<SpecFailure>),
    #[error("no model specs requested")]
    NoSpecs,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn summarize_failures(failures: &[SpecFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("{}: {}", f.spec_id, f.error))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Which residual the swarm minimizes while fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FitTarget {
    /// RMSE of S/y.
    #[default]
    Dimensionless,
    /// RMSE of S = (S/y)·y.
    Meters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkbenchConfig {
    pub swarm: SwarmConfig,
    pub bounds: CoefficientBounds,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub fit_target: FitTarget,
    pub units: Units,
    pub baseline: BaselineOptions,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        Self {
            swarm: SwarmConfig::default(),
            bounds: CoefficientBounds::default(),
            split_ratio: 0.7,
            split_seed: 0,
            fit_target: FitTarget::Dimensionless,
            units: Units::Meters,
            baseline: BaselineOptions::default(),
        }
    }
}

/// Observations of a single scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    scale: Scale,
    observations: Vec<Observation>,
}

impl Dataset {
    pub fn new(scale: Scale, observations: Vec<Observation>) -> Result<Self, WorkbenchError> {
        if let Some(o) = observations.iter().find(|o| o.features.scale != scale) {
            return Err(WorkbenchError::MixedScale {
                id: o.id,
                expected: scale,
                found: o.features.scale,
            });
        }
        Ok(Self {
            scale,
            observations,
        })
    }

    pub fn from_raw(
        scale: Scale,
        records: &[data::RawScourRecord],
    ) -> Result<Self, WorkbenchError> {
        Self::new(scale, data::observations(records)?)
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn split(
        &self,
        ratio: f64,
        seed: u64,
    ) -> Result<DatasetSplit<Observation>, WorkbenchError> {
        Ok(data::split(&self.observations, ratio, seed)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub ratio: f64,
    pub seed: u64,
    pub training_ids: Vec<usize>,
    pub testing_ids: Vec<usize>,
}

impl SplitSummary {
    pub fn of(split: &DatasetSplit<Observation>) -> Self {
        Self {
            ratio: split.ratio,
            seed: split.seed,
            training_ids: split.training.iter().map(|o| o.id).collect(),
            testing_ids: split.testing.iter().map(|o| o.id).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub record_id: usize,
    pub measured_s_over_y: f64,
    pub predicted_s_over_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub iterations: usize,
    pub evaluations: usize,
    pub first_best: f64,
    pub final_best: f64,
}

impl TraceSummary {
    pub fn of(result: &OptimizationResult) -> Self {
        Self {
            iterations: result.best_value_trace.len(),
            evaluations: result.evaluations,
            first_best: result
                .best_value_trace
                .first()
                .copied()
                .unwrap_or(result.best_value),
            final_best: result.best_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Fitted {
        model: ModelFile,
    },
    Baseline {
        id: BaselineId,
        clamped_predictions: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_id: String,
    pub source: ModelSource,
    pub train: MetricReport,
    pub test: MetricReport,
    pub test_points: Vec<ScatterPoint>,
    pub fit_trace: Option<TraceSummary>,
}

impl EvaluationReport {
    pub fn fitted_model(&self) -> Option<Result<PowerLawModel, ModelError>> {
        match &self.source {
            ModelSource::Fitted { model } => Some(PowerLawModel::from_file(model.clone())),
            ModelSource::Baseline { .. } => None,
        }
    }
}

fn metric_pairs<E>(
    observations: &[Observation],
    units: Units,
    predict: &impl Fn(&Observation) -> Result<f64, E>,
) -> Result<(Vec<PredictionPair>, Vec<ScatterPoint>), E> {
    let mut pairs = Vec::with_capacity(observations.len());
    let mut points = Vec::with_capacity(observations.len());
    for o in observations {
        let s_over_y = predict(o)?;
        pairs.push(match units {
            Units::Meters => PredictionPair::new(o.raw.scour_depth, s_over_y * o.raw.flow_depth),
            Units::Dimensionless => PredictionPair::new(o.features.s_over_y, s_over_y),
        });
        points.push(ScatterPoint {
            record_id: o.id,
            measured_s_over_y: o.features.s_over_y,
            predicted_s_over_y: s_over_y,
        });
    }
    Ok((pairs, points))
}

fn evaluate<E>(
    model_id: String,
    source: ModelSource,
    split: &DatasetSplit<Observation>,
    units: Units,
    fit_trace: Option<TraceSummary>,
    predict: impl Fn(&Observation) -> Result<f64, E>,
) -> Result<EvaluationReport, WorkbenchError>
where
    WorkbenchError: From<E>,
{
    let (train_pairs, _) = metric_pairs(&split.training, units, &predict)?;
    let (test_pairs, test_points) = metric_pairs(&split.testing, units, &predict)?;
    Ok(EvaluationReport {
        model_id,
        source,
        train: compute_metrics(&train_pairs, units)?,
        test: compute_metrics(&test_pairs, units)?,
        test_points,
        fit_trace,
    })
}

/// Scores an already-fitted model on both halves of `split`.
pub fn evaluate_model(
    model: &PowerLawModel,
    split: &DatasetSplit<Observation>,
    units: Units,
    fit_trace: Option<TraceSummary>,
) -> Result<EvaluationReport, WorkbenchError> {
    evaluate(
        model.id().to_string(),
        ModelSource::Fitted {
            model: model.to_file(),
        },
        split,
        units,
        fit_trace,
        |o| model.predict(&o.features),
    )
}

pub fn evaluate_baseline_on_split(
    id: BaselineId,
    split: &DatasetSplit<Observation>,
    units: Units,
    options: BaselineOptions,
) -> Result<EvaluationReport, WorkbenchError> {
    let clamped = split
        .training
        .iter()
        .chain(&split.testing)
        .filter_map(|o| evaluate_baseline(id, &o.raw, options).ok())
        .filter(|p| p.clamped)
        .count();
    evaluate(
        id.name().to_string(),
        ModelSource::Baseline {
            id,
            clamped_predictions: clamped,
        },
        split,
        units,
        None,
        |o| evaluate_baseline(id, &o.raw, options).map(|p| p.s_over_y),
    )
}

/// Fits `spec` on the training half and scores it on both halves.
pub fn fit_and_evaluate(
    spec: &ModelSpec,
    split: &DatasetSplit<Observation>,
    config: &WorkbenchConfig,
) -> Result<(PowerLawModel, OptimizationResult, EvaluationReport), WorkbenchError> {
    let training: Vec<_> = split.training.iter().map(|o| o.features).collect();
    let weights: Option<Vec<f64>> = match config.fit_target {
        FitTarget::Dimensionless => None,
        FitTarget::Meters => Some(split.training.iter().map(|o| o.raw.flow_depth).collect()),
    };
    let outcome = model::fit_weighted(
        spec,
        &training,
        weights.as_deref(),
        &config.swarm,
        &config.bounds,
    )?;
    let report = evaluate_model(
        &outcome.model,
        split,
        config.units,
        Some(TraceSummary::of(&outcome.optimization)),
    )?;
    Ok((outcome.model, outcome.optimization, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFailure {
    pub spec_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRun {
    pub scale: Scale,
    pub config: WorkbenchConfig,
    pub spec_ids: Vec<String>,
    pub split: SplitSummary,
    pub reports: Vec<EvaluationReport>,
    pub failures: Vec<SpecFailure>,
    /// Successfully fitted spec ids by ascending test RMSE.
    pub ranking: Vec<String>,
    /// Feature whose single-feature exclusion hurts test RMSE most; needs at
    /// least two single-exclusion specs in the run.
    pub most_effective_feature: Option<FeatureId>,
}

impl SensitivityRun {
    pub fn report(&self, spec_id: &str) -> Option<&EvaluationReport> {
        self.reports.iter().find(|r| r.model_id == spec_id)
    }

    pub fn models(&self) -> Result<Vec<PowerLawModel>, ModelError> {
        self.reports
            .iter()
            .filter_map(EvaluationReport::fitted_model)
            .collect()
    }

    pub fn best_model(&self) -> Option<Result<PowerLawModel, ModelError>> {
        self.report(self.ranking.first()?)?.fitted_model()
    }
}

pub(crate) fn rank_by_test_rmse(reports: &[EvaluationReport]) -> Vec<String> {
    let mut order: Vec<&EvaluationReport> = reports.iter().collect();
    order.sort_by(|a, b| a.test.rmse.total_cmp(&b.test.rmse));
    order.into_iter().map(|r| r.model_id.clone()).collect()
}

fn most_effective_feature(specs: &[ModelSpec], reports: &[EvaluationReport]) -> Option<FeatureId> {
    let candidates: Vec<(FeatureId, f64)> = reports
        .iter()
        .filter_map(|r| {
            let spec = specs.iter().find(|s| s.id == r.model_id)?;
            Some((spec.excluded_feature()?, r.test.rmse))
        })
        .collect();
    if candidates.len() < 2 {
        return None;
    }
    candidates
        .into_iter()
        .reduce(|worst, c| if c.1 > worst.1 { c } else { worst })
        .map(|(f, _)| f)
}

/// Fits every spec on one shared split and ranks them. Specs that fail are
/// recorded and the rest continue; the run fails only if none succeed.
pub fn run_sensitivity(
    dataset: &Dataset,
    specs: &[ModelSpec],
    config: &WorkbenchConfig,
) -> Result<SensitivityRun, WorkbenchError> {
    if specs.is_empty() {
        return Err(WorkbenchError::NoSpecs);
    }
    if dataset.len() < MIN_RECORDS {
        return Err(WorkbenchError::TooFewRecords(dataset.len()));
    }
    for spec in specs {
        spec.validate()?;
        if spec.scale != dataset.scale() {
            return Err(ModelError::Spec {
                id: spec.id.clone(),
                reason: format!(
                    "spec is for {} data but the dataset is {}",
                    spec.scale,
                    dataset.scale()
                ),
            }
            .into());
        }
    }
    let split = dataset.split(config.split_ratio, config.split_seed)?;

    let outcomes: Vec<Result<EvaluationReport, WorkbenchError>> = specs
        .par_iter()
        .map(|spec| fit_and_evaluate(spec, &split, config).map(|(_, _, report)| report))
        .collect();

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (spec, outcome) in specs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(SpecFailure {
                spec_id: spec.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    if reports.is_empty() {
        return Err(WorkbenchError::AllFitsFailed(failures));
    }
    Ok(SensitivityRun {
        scale: dataset.scale(),
        config: config.clone(),
        spec_ids: specs.iter().map(|s| s.id.clone()).collect(),
        split: SplitSummary::of(&split),
        ranking: rank_by_test_rmse(&reports),
        most_effective_feature: most_effective_feature(specs, &reports),
        reports,
        failures,
    })
}

/// Repeats a sensitivity run for several split seeds.
pub fn run_sensitivity_repeated(
    dataset: &Dataset,
    specs: &[ModelSpec],
    config: &WorkbenchConfig,
    split_seeds: &[u64],
) -> Vec<Result<SensitivityRun, WorkbenchError>> {
    split_seeds
        .iter()
        .map(|&seed| {
            let cfg = WorkbenchConfig {
                split_seed: seed,
                ..config.clone()
            };
            run_sensitivity(dataset, specs, &cfg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipNote {
    pub model_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub scale: Scale,
    pub split: SplitSummary,
    pub rows: Vec<EvaluationReport>,
    pub skipped: Vec<SkipNote>,
}

impl ComparisonTable {
    pub fn row(&self, model_id: &str) -> Option<&EvaluationReport> {
        self.rows.iter().find(|r| r.model_id == model_id)
    }

    pub fn ranking(&self) -> Vec<String> {
        rank_by_test_rmse(&self.rows)
    }
}

/// Scores fitted models and published equations on the same testing split.
/// Models may come from the other scale as long as every feature they use
/// exists in this dataset; equations lacking an input are skipped with a note.
pub fn run_comparison(
    dataset: &Dataset,
    models: &[PowerLawModel],
    baselines: &[BaselineId],
    split: &DatasetSplit<Observation>,
    config: &WorkbenchConfig,
) -> Result<ComparisonTable, WorkbenchError> {
    let scale = dataset.scale();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for m in models {
        if let Err(e) = m.applicable_to(scale) {
            skipped.push(SkipNote {
                model_id: m.id().to_string(),
                reason: e.to_string(),
            });
            continue;
        }
        rows.push(evaluate_model(m, split, config.units, None)?);
    }
    for &b in baselines {
        if let Some(input) = b.missing_input(scale) {
            skipped.push(SkipNote {
                model_id: b.name().to_string(),
                reason: format!("{scale} records do not provide {input}"),
            });
            continue;
        }
        rows.push(evaluate_baseline_on_split(
            b,
            split,
            config.units,
            config.baseline,
        )?);
    }
    Ok(ComparisonTable {
        scale,
        split: SplitSummary::of(split),
        rows,
        skipped,
    })
}

/// Writes any report as pretty JSON with a trailing newline.
pub fn emit_report<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<(), WorkbenchError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, WorkbenchError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `record_id,measured_S_over_y,predicted_S_over_y,model_id`, one row per
/// test record per model.
pub fn emit_scatter_data(
    reports: &[EvaluationReport],
    path: impl AsRef<Path>,
) -> Result<(), WorkbenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "record_id",
        "measured_S_over_y",
        "predicted_S_over_y",
        "model_id",
    ])?;
    for r in reports {
        for p in &r.test_points {
            w.write_record([
                p.record_id.to_string(),
                p.measured_s_over_y.to_string(),
                p.predicted_s_over_y.to_string(),
                r.model_id.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `model_id,band_m` from the test metrics.
pub fn emit_band_table(
    reports: &[EvaluationReport],
    path: impl AsRef<Path>,
) -> Result<(), WorkbenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model_id", "band_m"])?;
    for r in reports {
        w.write_record([r.model_id.clone(), opt(r.test.band_width)])?;
    }
    w.flush()?;
    Ok(())
}

/// `model_id,n,r2,rmse_m,bias_m,mae_m,band_m` from the test metrics.
pub fn emit_metric_table(
    reports: &[EvaluationReport],
    path: impl AsRef<Path>,
) -> Result<(), WorkbenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model_id", "n", "r2", "rmse_m", "bias_m", "mae_m", "band_m"])?;
    for r in reports {
        let t = &r.test;
        w.write_record([
            r.model_id.clone(),
            t.n.to_string(),
            opt(t.r2),
            t.rmse.to_string(),
            t.bias.to_string(),
            t.mae.to_string(),
            opt(t.band_width),
        ])?;
    }
    w.flush()?;
    Ok(())
}
