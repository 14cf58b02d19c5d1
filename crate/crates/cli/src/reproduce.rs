//! Canned benchmark bundles: each table id maps to a directory of spec files
//! plus reference values with tolerances in `specs/published.toml`. Running
//! a bundle executes every spec, writes the report trees, and emits a
//! side-by-side comparison with one pass/fail line per reference check.
//! `fig1` is the synthetic parameter sweep; it needs no dataset files.

use std::path::Path;

use serde::Deserialize;
use twosdr::synth::{sweep, SweepAxis, SweepCell, SynthConfig};
use twosdr::Rng;

use crate::runner::{run, write_report, RunReport};
use crate::spec::ExperimentSpec;
use crate::{CliError, StageExt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    Fig1,
}

impl TableId {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "t3" => Ok(TableId::T3),
            "t4" => Ok(TableId::T4),
            "t5" => Ok(TableId::T5),
            "t6" => Ok(TableId::T6),
            "t7" => Ok(TableId::T7),
            "t8" => Ok(TableId::T8),
            "t9" => Ok(TableId::T9),
            "t10" => Ok(TableId::T10),
            "t11" => Ok(TableId::T11),
            "fig1" => Ok(TableId::Fig1),
            other => Err(CliError::new(
                "reproduce",
                format!("unknown table id '{other}' (expected t3..t11 or fig1)"),
            )),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TableId::T3 => "t3",
            TableId::T4 => "t4",
            TableId::T5 => "t5",
            TableId::T6 => "t6",
            TableId::T7 => "t7",
            TableId::T8 => "t8",
            TableId::T9 => "t9",
            TableId::T10 => "t10",
            TableId::T11 => "t11",
            TableId::Fig1 => "fig1",
        }
    }

    pub const ALL: [TableId; 10] = [
        TableId::T3,
        TableId::T4,
        TableId::T5,
        TableId::T6,
        TableId::T7,
        TableId::T8,
        TableId::T9,
        TableId::T10,
        TableId::T11,
        TableId::Fig1,
    ];
}

/// One reference check from `specs/published.toml`.
#[derive(Debug, Clone, Deserialize)]
pub struct CheckDef {
    pub table: String,
    pub spec: String,
    pub metric: String,
    pub kind: String,
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub tol: f64,
    #[serde(default)]
    pub lo: f64,
    #[serde(default)]
    pub hi: f64,
}

impl CheckDef {
    pub fn criterion(&self) -> String {
        match self.kind.as_str() {
            "within" => format!("within {} +/- {}", self.value, self.tol),
            "le" => format!("<= {}", self.value),
            "ge" => format!(">= {}", self.value),
            "abs_le" => format!("|x| <= {}", self.value),
            "range" => format!("in [{}, {}]", self.lo, self.hi),
            other => format!("unknown kind '{other}'"),
        }
    }

    pub fn evaluate(&self, observed: f64) -> bool {
        match self.kind.as_str() {
            "within" => (observed - self.value).abs() <= self.tol,
            "le" => observed <= self.value,
            "ge" => observed >= self.value,
            "abs_le" => observed.abs() <= self.value,
            "range" => observed >= self.lo && observed <= self.hi,
            _ => false,
        }
    }
}

#[derive(Debug, Deserialize)]
struct PublishedChecks {
    #[serde(default)]
    check: Vec<CheckDef>,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub spec: String,
    pub metric: String,
    pub observed: Option<f64>,
    pub criterion: String,
    pub pass: bool,
}

#[derive(Debug)]
pub struct ReproduceReport {
    pub table: String,
    pub runs: Vec<RunReport>,
    pub checks: Vec<CheckOutcome>,
    pub sweeps: Vec<SweepCell>,
}

impl ReproduceReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn published_checks(root: &Path, table: TableId) -> Result<Vec<CheckDef>, CliError> {
    let path = root.join("specs").join("published.toml");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::new("reproduce", format!("{}: {e}", path.display())))?;
    let all: PublishedChecks = toml::from_str(&text).stage("reproduce")?;
    Ok(all
        .check
        .into_iter()
        .filter(|c| c.table == table.as_str())
        .collect())
}

#[derive(Debug, Deserialize)]
struct Fig1Config {
    seed: u64,
    runs: usize,
    sweep: Vec<Fig1Sweep>,
}

#[derive(Debug, Deserialize)]
struct Fig1Sweep {
    axis: String,
    values: Vec<f64>,
}

pub fn sweep_to_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("axis,value,algorithm,metric,mean,stderr,runs\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.axis, c.value, c.algorithm, c.metric, c.mean, c.stderr, c.runs
        ));
    }
    out
}

/// Run the synthetic sweeps behind `fig1` and write one CSV per
/// (metric, axis) pair.
pub fn reproduce_fig1(
    root: &Path,
    out_dir: &Path,
    runs_override: Option<usize>,
) -> Result<ReproduceReport, CliError> {
    let path = root.join("specs").join("fig1.toml");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::new("reproduce", format!("{}: {e}", path.display())))?;
    let cfg: Fig1Config = toml::from_str(&text).stage("reproduce")?;
    let runs = runs_override.unwrap_or(cfg.runs);
    let base = SynthConfig::default();
    let rng = Rng::new(cfg.seed);

    std::fs::create_dir_all(out_dir).stage("write")?;
    let mut all_cells = Vec::new();
    for entry in &cfg.sweep {
        let axis = SweepAxis::parse(&entry.axis).stage("reproduce")?;
        let cells = sweep(&base, axis, &entry.values, runs, &rng).stage("reproduce")?;
        for metric in ["abs_cc", "rmse"] {
            let subset: Vec<SweepCell> = cells
                .iter()
                .filter(|c| c.metric == metric)
                .cloned()
                .collect();
            let file = out_dir.join(format!("fig1_{metric}_{}.csv", axis.as_str()));
            std::fs::write(&file, sweep_to_csv(&subset)).stage("write")?;
        }
        all_cells.extend(cells);
    }
    Ok(ReproduceReport {
        table: "fig1".into(),
        runs: Vec::new(),
        checks: Vec::new(),
        sweeps: all_cells,
    })
}

/// Run every spec of a table bundle and evaluate the reference checks.
pub fn reproduce(
    table: TableId,
    root: &Path,
    out_dir: &Path,
    runs_override: Option<usize>,
) -> Result<ReproduceReport, CliError> {
    if table == TableId::Fig1 {
        return reproduce_fig1(root, out_dir, runs_override);
    }
    let dir = root.join("specs").join(table.as_str());
    let mut spec_files: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| CliError::new("reproduce", format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    spec_files.sort();
    if spec_files.is_empty() {
        return Err(CliError::new(
            "reproduce",
            format!("no spec files found in {}", dir.display()),
        ));
    }

    let mut runs = Vec::new();
    for file in &spec_files {
        let spec = ExperimentSpec::from_path(file).stage("reproduce")?;
        let report = run(&spec, root)?;
        write_report(&report, &out_dir.join(&report.name))?;
        runs.push(report);
    }

    let defs = published_checks(root, table)?;
    let mut checks = Vec::new();
    for def in defs {
        let observed = runs
            .iter()
            .find(|r| r.name == def.spec)
            .and_then(|r| r.metric(&def.metric));
        let pass = observed.is_some_and(|v| def.evaluate(v));
        checks.push(CheckOutcome {
            spec: def.spec.clone(),
            metric: def.metric.clone(),
            observed,
            criterion: def.criterion(),
            pass,
        });
    }

    let mut comparison = String::from("spec,metric,observed,criterion,pass\n");
    for c in &checks {
        let observed = c
            .observed
            .map(|v| v.to_string())
            .unwrap_or_else(|| "missing".into());
        comparison.push_str(&format!(
            "{},{},{},\"{}\",{}\n",
            c.spec, c.metric, observed, c.criterion, c.pass
        ));
    }
    std::fs::create_dir_all(out_dir).stage("write")?;
    std::fs::write(out_dir.join("comparison.csv"), comparison).stage("write")?;

    Ok(ReproduceReport {
        table: table.as_str().into(),
        runs,
        checks,
        sweeps: Vec::new(),
    })
}
