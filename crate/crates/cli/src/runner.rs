//! Execute one experiment spec: ingest -> preprocess -> split -> fit ->
//! predict -> report, with per-split and aggregate (mean, standard error)
//! metrics. A run is a pure function of the spec and the input files, so
//! re-running writes byte-identical reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use twosdr::datamodel::{
    drop_correlated_with_target, load_csv, non_binary_x_columns, quantile_transform_apply,
    quantile_transform_fit, resample_balance, split, ColKind, Dataset, Role, Schema,
};
use twosdr::metrics::{report, FairnessReport};
use twosdr::synth::generate;
use twosdr::twostage::{
    fit_2sdr, fit_direct, predict_2sdr, predict_direct, predictor_to_toml, FirstStageOptions,
};
use twosdr::{Error, Rng};

use crate::spec::{Algorithm, BinarizePatch, ColumnPatch, DatasetRef, ExperimentSpec};
use crate::{resolve_path, CliError, StageExt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
    pub splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: String,
    pub name: String,
    pub aggregate: BTreeMap<String, MetricSummary>,
    #[serde(skip)]
    pub splits: Vec<FairnessReport>,
    #[serde(skip)]
    pub spec: ExperimentSpec,
    #[serde(skip)]
    pub predictor_toml: Option<String>,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.aggregate.get(name).map(|m| m.mean)
    }
}

fn apply_patches(schema: &mut Schema, patches: &[ColumnPatch]) -> Result<(), Error> {
    for patch in patches {
        let col = schema
            .columns
            .iter_mut()
            .find(|c| c.name == patch.name)
            .ok_or_else(|| Error::UnknownColumn {
                name: patch.name.clone(),
            })?;
        if let Some(role) = patch.role {
            col.role = role;
        }
        match &patch.binarize {
            Some(BinarizePatch::Clear(word)) => {
                if word != "none" {
                    return Err(Error::InvalidInput(format!(
                        "binarize patch must be \"none\" or a cut table, got '{word}'"
                    )));
                }
                col.binarize = None;
            }
            Some(BinarizePatch::Set(b)) => col.binarize = Some(*b),
            None => {}
        }
    }
    schema.validate()
}

fn drop_non_numeric_x(schema: &mut Schema) {
    for col in schema.columns.iter_mut() {
        if col.role == Role::Nonsensitive && (col.kind != ColKind::Numeric || col.binarize.is_some())
        {
            col.role = Role::Ignore;
        }
    }
}

/// Load the dataset a spec refers to, with column patches applied.
pub fn load_dataset(spec: &ExperimentSpec, root: &Path) -> Result<Dataset, CliError> {
    match &spec.dataset {
        DatasetRef::Csv { path, schema } => {
            let schema_path = resolve_path(root, schema);
            let mut schema = Schema::from_path(&schema_path).stage("ingest")?;
            apply_patches(&mut schema, &spec.patches).stage("ingest")?;
            if spec.preprocess.continuous_only {
                drop_non_numeric_x(&mut schema);
            }
            let data_path = resolve_path(root, path);
            if !data_path.exists() {
                return Err(CliError::new(
                    "ingest",
                    format!(
                        "dataset file {} not found; run `twosdr fetch-instructions {}` \
                         for the download source and preparation steps",
                        data_path.display(),
                        schema.name
                    ),
                ));
            }
            load_csv(&data_path, &schema).stage("ingest")
        }
        DatasetRef::Synth { synth } => {
            let cfg = synth.to_config();
            let mut rng = Rng::new(spec.seed).derive(&[90]);
            generate(&cfg, &mut rng).stage("ingest")
        }
    }
}

/// Run the full experiment described by a spec.
pub fn run(spec: &ExperimentSpec, root: &Path) -> Result<RunReport, CliError> {
    let mut ds = load_dataset(spec, root)?;
    if let Some(threshold) = spec.preprocess.drop_correlated {
        ds = drop_correlated_with_target(&ds, threshold).stage("preprocess")?;
    }

    let plan = spec.split.to_plan(spec.seed).stage("split")?;
    let pairs = split(&ds, &plan).stage("split")?;

    let first_stage_opts = FirstStageOptions {
        intercept: spec.preprocess.first_stage_intercept,
        variance_correction: spec.preprocess.variance_correction,
        zero_variance_filter: true,
    };
    let second_stage = spec.model.second_stage_spec();
    let base_rng = Rng::new(spec.seed);

    let mut split_reports = Vec::with_capacity(pairs.len());
    let mut predictor_toml = None;
    for (i, (mut train, mut test)) in pairs.into_iter().enumerate() {
        if spec.preprocess.resample_balance {
            let mut rng = base_rng.derive(&[1, i as u64]);
            train = resample_balance(&train, &mut rng).stage("preprocess")?;
        }
        if spec.preprocess.quantile_transform {
            let attrs = non_binary_x_columns(&train);
            if !attrs.is_empty() {
                let maps = quantile_transform_fit(&train, &attrs).stage("preprocess")?;
                train = quantile_transform_apply(&maps, &train).stage("preprocess")?;
                test = quantile_transform_apply(&maps, &test).stage("preprocess")?;
            }
        }

        let mut rng = base_rng.derive(&[2, i as u64]);
        let preds = match spec.model.algorithm {
            Algorithm::Ols => {
                let model = fit_direct(&train, &second_stage, &mut rng).stage("fit")?;
                predict_direct(&model, &test).stage("predict")?
            }
            Algorithm::TwoStage => {
                let predictor =
                    fit_2sdr(&train, &second_stage, &first_stage_opts, &mut rng).stage("fit")?;
                if spec.save_predictor && i == 0 {
                    predictor_toml = Some(predictor_to_toml(&predictor).stage("fit")?);
                }
                predict_2sdr(&predictor, &test).stage("predict")?
            }
        };
        split_reports.push(report(ds.task, &preds, &test, spec.tie_mode).stage("report")?);
    }

    let mut series: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
    for rep in &split_reports {
        for (name, value) in rep.entries() {
            series.entry(name).or_default().push(value);
        }
    }
    let aggregate = series
        .into_iter()
        .map(|(name, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let stderr = if values.len() < 2 {
                0.0
            } else {
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            };
            (
                name.to_string(),
                MetricSummary {
                    mean,
                    stderr,
                    splits: values.len(),
                },
            )
        })
        .collect();

    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        name: spec.name.clone(),
        aggregate,
        splits: split_reports,
        spec: spec.clone(),
        predictor_toml,
    })
}

#[derive(Serialize)]
struct SplitsDoc<'a> {
    split: &'a [FairnessReport],
}

/// Write the report bundle: resolved spec, per-split reports, aggregate TOML
/// and CSV, and the serialized predictor when one was requested. Everything
/// is computed before the first byte is written, so a failed run leaves no
/// partial outputs.
pub fn write_report(report: &RunReport, dir: &Path) -> Result<(), CliError> {
    let splits_doc = toml::to_string_pretty(&SplitsDoc {
        split: &report.splits,
    })
    .stage("write")?;
    let aggregate_doc = toml::to_string_pretty(report).stage("write")?;
    let spec_doc = report.spec.to_toml();
    let mut csv = String::from("metric,mean,stderr,splits\n");
    for (name, m) in &report.aggregate {
        csv.push_str(&format!("{name},{},{},{}\n", m.mean, m.stderr, m.splits));
    }

    std::fs::create_dir_all(dir).stage("write")?;
    let write = |file: &str, text: &str| -> Result<(), CliError> {
        std::fs::write(dir.join(file), text).stage("write")
    };
    write("resolved_spec.toml", &spec_doc)?;
    write("splits.toml", &splits_doc)?;
    write("aggregate.toml", &aggregate_doc)?;
    write("aggregate.csv", &csv)?;
    if let Some(predictor) = &report.predictor_toml {
        write("predictor.toml", predictor)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::ExperimentSpec;

    fn synth_spec() -> ExperimentSpec {
        ExperimentSpec::from_toml_str(
            r#"
name = "synth-demo"
seed = 11

[dataset]
kind = "synth"
[dataset.synth]
n = 400

[model]
algorithm = "2sdr"
second_stage = "ols"

[split]
kind = "holdout"
train_fraction = 0.6666666666666666
"#,
        )
        .unwrap()
    }

    #[test]
    fn synth_run_produces_metrics_and_is_deterministic() {
        let root = std::env::temp_dir();
        let a = run(&synth_spec(), &root).unwrap();
        let b = run(&synth_spec(), &root).unwrap();
        assert_eq!(a.splits, b.splits);
        assert!(a.metric("rmse").is_some());
        assert!(a.metric("corr_coefficient").is_some());
        assert_eq!(a.aggregate["rmse"].splits, 1);
    }

    #[test]
    fn written_reports_are_byte_identical(){
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let root = std::env::temp_dir();
        let report = run(&synth_spec(), &root).unwrap();
        write_report(&report, dir_a.path()).unwrap();
        write_report(&report, dir_b.path()).unwrap();
        for file in ["resolved_spec.toml", "splits.toml", "aggregate.toml", "aggregate.csv"] {
            let a = std::fs::read(dir_a.path().join(file)).unwrap();
            let b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs");
            assert!(!a.is_empty());
        }
    }

    #[test]
    fn missing_dataset_is_an_actionable_ingest_error() {
        let spec = ExperimentSpec::from_toml_str(
            r#"
name = "missing"
seed = 1

[dataset]
kind = "csv"
path = "data/not_there.csv"
schema = "schemas/adult.toml"

[model]
algorithm = "ols"
second_stage = "ridge"

[split]
kind = "holdout"
train_fraction = 0.5
"#,
        )
        .unwrap();
        let err = run(&spec, &crate::repo_root()).unwrap_err();
        assert_eq!(err.stage, "ingest");
        assert!(err.message.contains("fetch-instructions"), "{}", err.message);
    }
}
