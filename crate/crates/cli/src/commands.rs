use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use scour_core::baseline::BaselineId;
use scour_core::data::{self, RawScourRecord, ScaleInput};
use scour_core::model::{ModelError, ModelSpec, PowerLawModel};
use scour_core::workbench::{
    emit_band_table, emit_metric_table, emit_report, emit_scatter_data, fit_and_evaluate,
    run_comparison, run_sensitivity, EvaluationReport, SplitSummary,
};
use scour_core::{derive_features, Dataset, Scale};
use serde::Serialize;

use crate::args::{BaselinesArgs, FitArgs, PredictArgs, SensitivityArgs, SplitArgs};
use crate::config::{RunConfig, CONFIG_FILE, DEFAULT_SEED, SEED_ENV};
use crate::error::CliError;

fn detect(path: &Path) -> Result<Scale, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(data::detect_scale(BufReader::new(file))?)
}

/// Loads the CSV named in the config, fixing the scale if it was left open.
/// Rejected rows are reported on stderr; a file with no usable rows is an error.
fn load_dataset(cfg: &mut RunConfig) -> Result<Dataset, CliError> {
    let path = cfg.data_path()?.to_path_buf();
    let scale = match cfg.scale {
        Some(s) => s,
        None => detect(&path)?,
    };
    cfg.scale = Some(scale);
    let outcome = data::load_csv(&path, scale, cfg.strict)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    for r in &outcome.rejections {
        eprintln!("{}:{}: rejected row: {}", path.display(), r.line, r.reason);
    }
    if outcome.records.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no valid records",
            path.display()
        )));
    }
    Ok(Dataset::from_raw(scale, &outcome.records)?)
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_dir()?.to_path_buf();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn resolve_specs(ids: &[String], scale: Scale) -> Result<Vec<ModelSpec>, CliError> {
    if ids.iter().any(|s| s.eq_ignore_ascii_case("all")) {
        return Ok(ModelSpec::builtin_for(scale));
    }
    let mut specs = Vec::with_capacity(ids.len());
    for id in ids {
        let spec = ModelSpec::builtin(id)?;
        if spec.scale != scale {
            return Err(CliError::Usage(format!(
                "spec {id} is for {} data but the dataset is {scale}",
                spec.scale
            )));
        }
        specs.push(spec);
    }
    Ok(specs)
}

fn write_tables(reports: &[EvaluationReport], dir: &Path) -> Result<(), CliError> {
    emit_metric_table(reports, dir.join("metrics.csv"))?;
    emit_band_table(reports, dir.join("band_table.csv"))?;
    emit_scatter_data(reports, dir.join("scatter.csv"))?;
    Ok(())
}

#[derive(Serialize)]
struct FitReport<'a> {
    scale: Scale,
    split: SplitSummary,
    reports: &'a [EvaluationReport],
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let mut cfg = args.common.resolve("fit")?;
    if !args.spec.is_empty() {
        cfg.spec_ids.clone_from(&args.spec);
    }
    if cfg.spec_ids.is_empty() {
        return Err(CliError::Usage(format!(
            "--spec is required; valid ids: {} or all",
            ModelSpec::builtin_ids().join(", ")
        )));
    }
    let dataset = load_dataset(&mut cfg)?;
    let specs = resolve_specs(&cfg.spec_ids, dataset.scale())?;
    let dir = prepare_out(&cfg)?;
    let wb = cfg.workbench();
    let split = dataset.split(wb.split_ratio, wb.split_seed)?;

    let mut reports = Vec::with_capacity(specs.len());
    for spec in &specs {
        let (model, optimization, report) = fit_and_evaluate(spec, &split, &wb)?;
        model.save(dir.join(format!("{}.model.json", spec.id)))?;
        optimization.write_trace_csv(BufWriter::new(File::create(
            dir.join(format!("{}.trace.csv", spec.id)),
        )?))?;
        reports.push(report);
    }
    emit_report(
        &FitReport {
            scale: dataset.scale(),
            split: SplitSummary::of(&split),
            reports: &reports,
        },
        dir.join("fit_report.json"),
    )?;
    emit_metric_table(&reports, dir.join("metrics.csv"))?;
    emit_scatter_data(&reports, dir.join("scatter.csv"))?;
    cfg.write_echo(&dir)?;
    for r in &reports {
        println!(
            "{}: test RMSE {} over {} records",
            r.model_id, r.test.rmse, r.test.n
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct RepeatRow<'a> {
    split_seed: u64,
    model_id: &'a str,
    rank: usize,
    test_rmse: f64,
    test_r2: Option<f64>,
}

pub fn sensitivity(args: &SensitivityArgs) -> Result<(), CliError> {
    let mut cfg = args.common.resolve("sensitivity")?;
    if !args.spec.is_empty() {
        cfg.spec_ids.clone_from(&args.spec);
    }
    cfg.compare |= args.compare;
    if let Some(n) = args.repeats {
        cfg.repeats = n;
    }
    if cfg.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    let dataset = load_dataset(&mut cfg)?;
    if cfg.spec_ids.is_empty() {
        cfg.spec_ids = vec!["all".into()];
    }
    let specs = resolve_specs(&cfg.spec_ids, dataset.scale())?;
    let dir = prepare_out(&cfg)?;
    let wb = cfg.workbench();

    let run = run_sensitivity(&dataset, &specs, &wb)?;
    for f in &run.failures {
        eprintln!("{}: fit failed: {}", f.spec_id, f.error);
    }
    emit_report(&run, dir.join("sensitivity_report.json"))?;
    write_tables(&run.reports, &dir)?;
    let models_dir = dir.join("models");
    std::fs::create_dir_all(&models_dir)?;
    for m in run.models()? {
        m.save(models_dir.join(format!("{}.model.json", m.id())))?;
    }

    if cfg.compare {
        let split = dataset.split(wb.split_ratio, wb.split_seed)?;
        let table = run_comparison(&dataset, &run.models()?, &BaselineId::ALL, &split, &wb)?;
        emit_report(&table, dir.join("comparison_report.json"))?;
        emit_metric_table(&table.rows, dir.join("comparison_metrics.csv"))?;
    }

    if cfg.repeats > 1 {
        let mut w = csv_writer(&dir.join("sensitivity_repeats.csv"))?;
        for k in 0..cfg.repeats as u64 {
            let seed = wb.split_seed.wrapping_add(k);
            let rerun;
            let r = if k == 0 {
                &run
            } else {
                let cfg_k = scour_core::WorkbenchConfig {
                    split_seed: seed,
                    ..wb.clone()
                };
                rerun = run_sensitivity(&dataset, &specs, &cfg_k)?;
                &rerun
            };
            for (rank, id) in r.ranking.iter().enumerate() {
                let rep = r.report(id).expect("ranked spec has a report");
                w.serialize(RepeatRow {
                    split_seed: seed,
                    model_id: id,
                    rank: rank + 1,
                    test_rmse: rep.test.rmse,
                    test_r2: rep.test.r2,
                })
                .map_err(|e| CliError::Data(e.to_string()))?;
            }
        }
        w.flush()?;
    }

    cfg.write_echo(&dir)?;
    println!("ranking (best first): {}", run.ranking.join(" "));
    match run.most_effective_feature {
        Some(f) => println!("most effective feature: {f}"),
        None => println!("most effective feature: undetermined"),
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn baselines(args: &BaselinesArgs) -> Result<(), CliError> {
    let mut cfg = args.common.resolve("baselines")?;
    if !args.model.is_empty() {
        cfg.models.clone_from(&args.model);
    }
    let dataset = load_dataset(&mut cfg)?;
    let dir = prepare_out(&cfg)?;
    let wb = cfg.workbench();
    let models = cfg
        .models
        .iter()
        .map(|p| PowerLawModel::load(p).map_err(|e| model_load_error(p, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let split = dataset.split(wb.split_ratio, wb.split_seed)?;
    let table = run_comparison(&dataset, &models, &BaselineId::ALL, &split, &wb)?;
    for s in &table.skipped {
        eprintln!("{}: skipped: {}", s.model_id, s.reason);
    }
    emit_report(&table, dir.join("comparison_report.json"))?;
    write_tables(&table.rows, &dir)?;
    write_baseline_predictions(&dataset, &cfg, &dir.join("baseline_predictions.csv"))?;
    cfg.write_echo(&dir)?;
    for (rank, id) in table.ranking().iter().enumerate() {
        let row = table.row(id).expect("ranked row exists");
        println!("{:>2}. {id}: test RMSE {}", rank + 1, row.test.rmse);
    }
    Ok(())
}

fn model_load_error(path: &Path, e: ModelError) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Every applicable equation's S/y for every record, in input order.
fn write_baseline_predictions(
    dataset: &Dataset,
    cfg: &RunConfig,
    path: &Path,
) -> Result<(), CliError> {
    let scale = dataset.scale();
    let ids: Vec<BaselineId> = BaselineId::ALL
        .into_iter()
        .filter(|b| b.applicable(scale))
        .collect();
    let raw: Vec<RawScourRecord> = dataset.observations().iter().map(|o| o.raw).collect();
    let suite = scour_core::run_baseline_suite(&ids, &raw, cfg.workbench().baseline)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let mut w = csv_writer(path)?;
    let mut header = vec!["record_id".to_string(), "measured_S_over_y".to_string()];
    header.extend(ids.iter().map(|b| b.name().to_string()));
    w.write_record(&header)
        .map_err(|e| CliError::Data(e.to_string()))?;
    for (r, o) in dataset.observations().iter().enumerate() {
        let mut cells = vec![o.id.to_string(), o.features.s_over_y.to_string()];
        cells.extend(
            suite
                .predictions
                .iter()
                .map(|col| col[r].map_or_else(|| "NA".to_string(), |p| p.s_over_y.to_string())),
        );
        w.write_record(&cells)
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let model = PowerLawModel::load(&args.model).map_err(|e| model_load_error(&args.model, e))?;
    let scale_input = match (args.vc, args.l) {
        (Some(vc), None) => ScaleInput::Laboratory {
            critical_velocity: vc,
        },
        (None, Some(l)) => ScaleInput::Field { pier_length: l },
        _ => return Err(CliError::Usage("give exactly one of --Vc or --L".into())),
    };
    let raw = RawScourRecord {
        pier_width: args.d,
        mean_velocity: args.v,
        flow_depth: args.y,
        median_grain_size: args.d50,
        sediment_gradation: args.sigma,
        scour_depth: 0.0,
        scale_input,
    };
    let features = derive_features(&raw)?;
    let s_over_y = model.predict(&features).map_err(|e| match e {
        ModelError::MissingFeature { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    println!("S_over_y={s_over_y}");
    println!("S_m={}", s_over_y * args.y);
    Ok(())
}

#[derive(Serialize)]
struct SplitConfig<'a> {
    command: &'static str,
    data: &'a Path,
    scale: Scale,
    ratio: f64,
    seed: u64,
    strict: bool,
    out_train: &'a Path,
    out_test: &'a Path,
    training_records: usize,
    testing_records: usize,
}

pub fn split(args: &SplitArgs) -> Result<(), CliError> {
    if !(args.ratio > 0.0 && args.ratio < 1.0) {
        return Err(CliError::Usage(format!(
            "--ratio must lie strictly between 0 and 1, got {}",
            args.ratio
        )));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                CliError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
            })?,
            Err(_) => DEFAULT_SEED,
        },
    };
    let scale = detect(&args.data)?;
    let outcome = data::load_csv(&args.data, scale, args.strict)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.data.display())))?;
    for r in &outcome.rejections {
        eprintln!(
            "{}:{}: rejected row: {}",
            args.data.display(),
            r.line,
            r.reason
        );
    }
    let parts = data::split(&outcome.records, args.ratio, seed)?;
    for (path, records) in [
        (&args.out_train, &parts.training),
        (&args.out_test, &parts.testing),
    ] {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        data::write_csv(File::create(path)?, scale, records)?;
    }
    let echo_dir = match &args.out {
        Some(d) => d.clone(),
        None => args
            .out_train
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    std::fs::create_dir_all(&echo_dir)?;
    let echo = SplitConfig {
        command: "split",
        data: &args.data,
        scale,
        ratio: args.ratio,
        seed,
        strict: args.strict,
        out_train: &args.out_train,
        out_test: &args.out_test,
        training_records: parts.training.len(),
        testing_records: parts.testing.len(),
    };
    let mut text = serde_json::to_string_pretty(&echo)?;
    text.push('\n');
    std::fs::write(echo_dir.join(CONFIG_FILE), text)?;
    println!(
        "{} training, {} testing records",
        parts.training.len(),
        parts.testing.len()
    );
    Ok(())
}
