//! Experiment specifications. A spec file is a TOML document that fully
//! determines a run: dataset reference, algorithm, split plan, preprocessing
//! toggles and the seed. Reports embed the resolved spec for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use twosdr::datamodel::{Binarize, Role, SplitKind, SplitPlan};
use twosdr::estimators::{
    default_ridge_alphas, DEFAULT_LOGISTIC_MAX_ITER, DEFAULT_LOGISTIC_TOL,
};
use twosdr::metrics::TieMode;
use twosdr::synth::SynthConfig;
use twosdr::twostage::SecondStageSpec;
use twosdr::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Direct fit on `[X | Z]`, no residualization.
    Ols,
    /// Two-stage discrimination remover.
    #[serde(rename = "2sdr")]
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SecondStage {
    Ols,
    Ridge,
    Logistic,
}

fn default_folds() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams {
            alphas: None,
            folds: default_folds(),
        }
    }
}

fn default_max_iter() -> usize {
    DEFAULT_LOGISTIC_MAX_ITER
}

fn default_tol() -> f64 {
    DEFAULT_LOGISTIC_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub second_stage: SecondStage,
    #[serde(default)]
    pub ridge: RidgeParams,
    #[serde(default)]
    pub logistic: LogisticParams,
}

impl ModelSpec {
    pub fn second_stage_spec(&self) -> SecondStageSpec {
        match self.second_stage {
            SecondStage::Ols => SecondStageSpec::Ols,
            SecondStage::Ridge => SecondStageSpec::Ridge {
                alphas: self
                    .ridge
                    .alphas
                    .clone()
                    .unwrap_or_else(default_ridge_alphas),
                folds: self.ridge.folds,
            },
            SecondStage::Logistic => SecondStageSpec::Logistic {
                max_iter: self.logistic.max_iter,
                tol: self.logistic.tol,
            },
        }
    }
}

/// Scalar overrides of the default synthetic generator configuration.
/// Per-dimension parameters are filled with the scalar value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SynthOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_z: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_eta_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
}

impl SynthOverrides {
    pub fn to_config(&self) -> SynthConfig {
        let mut cfg = SynthConfig::default();
        if let Some(d_x) = self.d_x {
            cfg.d_x = d_x;
        }
        if let Some(d_z) = self.d_z {
            cfg.d_z = d_z;
        }
        if let Some(d_s) = self.d_s {
            cfg.d_s = d_s;
        }
        cfg.sigma_eta = vec![1.0; cfg.d_x];
        cfg.sigma_z = vec![1.0; cfg.d_z];
        cfg.sigma_s = Matrix::identity(cfg.d_s);
        let eta_s = self.sigma_eta_s.unwrap_or(0.3);
        cfg.sigma_eta_s = Matrix::from_fn(cfg.d_x, cfg.d_s, |_, _| eta_s);
        let beta_s = self.beta_s.unwrap_or(0.2);
        cfg.beta_s = Matrix::from_fn(cfg.d_s, cfg.d_x, |_, _| beta_s);
        cfg.beta_x = vec![self.beta_x.unwrap_or(0.5); cfg.d_x];
        cfg.beta_z = vec![self.beta_z.unwrap_or(0.5); cfg.d_z];
        if let Some(std_s) = self.std_s {
            cfg.sigma_s = Matrix::from_fn(cfg.d_s, cfg.d_s, |i, j| {
                if i == j {
                    std_s * std_s
                } else {
                    0.0
                }
            });
        }
        if let Some(s) = self.sigma_eps {
            cfg.sigma_eps = s;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(f) = self.train_fraction {
            cfg.train_fraction = f;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetRef {
    Csv {
        path: String,
        schema: String,
    },
    Synth {
        #[serde(default)]
        synth: SynthOverrides,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub stratify: bool,
}

fn default_repeats() -> usize {
    1
}

impl SplitSpec {
    pub fn to_plan(&self, seed: u64) -> Result<SplitPlan> {
        let kind = match self.kind.as_str() {
            "holdout" => SplitKind::Holdout {
                train_fraction: self.train_fraction.ok_or_else(|| {
                    Error::InvalidInput("holdout split needs train_fraction".into())
                })?,
            },
            "kfold" => SplitKind::Kfold {
                k: self
                    .k
                    .ok_or_else(|| Error::InvalidInput("k-fold split needs k".into()))?,
            },
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown split kind '{other}' (expected holdout or kfold)"
                )))
            }
        };
        Ok(SplitPlan {
            kind,
            seed,
            stratify_on_target: self.stratify,
            repeats: self.repeats,
        })
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    #[serde(default)]
    pub quantile_transform: bool,
    #[serde(default)]
    pub resample_balance: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_correlated: Option<f64>,
    #[serde(default = "default_true")]
    pub variance_correction: bool,
    #[serde(default = "default_true")]
    pub first_stage_intercept: bool,
    /// Drop non-numeric attribute columns from X before loading.
    #[serde(default)]
    pub continuous_only: bool,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        PreprocessSpec {
            quantile_transform: false,
            resample_balance: false,
            drop_correlated: None,
            variance_correction: true,
            first_stage_intercept: true,
            continuous_only: false,
        }
    }
}

/// Binarize patch: either the literal string "none" or a full cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BinarizePatch {
    Clear(String),
    Set(Binarize),
}

/// A per-column schema adjustment: change a column's role and/or its
/// binarization. This is how one spec reuses a base schema with, say, a
/// different sensitive attribute or extra explanatory columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPatch {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binarize: Option<BinarizePatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub dataset: DatasetRef,
    pub model: ModelSpec,
    pub split: SplitSpec,
    #[serde(default)]
    pub preprocess: PreprocessSpec,
    #[serde(default, rename = "patch", skip_serializing_if = "Vec::is_empty")]
    pub patches: Vec<ColumnPatch>,
    #[serde(default)]
    pub tie_mode: TieMode,
    #[serde(default)]
    pub save_predictor: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("cannot parse spec: {e}")))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"
seed = 7

[dataset]
kind = "csv"
path = "data/demo.csv"
schema = "schemas/demo.toml"

[model]
algorithm = "2sdr"
second_stage = "ridge"

[split]
kind = "kfold"
k = 10

[preprocess]
quantile_transform = true

[[patch]]
name = "age"
role = "sensitive"
binarize = "none"
"#;

    #[test]
    fn parses_and_roundtrips() {
        let spec = ExperimentSpec::from_toml_str(SAMPLE).unwrap();
        assert_eq!(spec.name, "demo");
        assert_eq!(spec.model.algorithm, Algorithm::TwoStage);
        assert_eq!(spec.model.ridge.folds, 10);
        assert!(spec.preprocess.quantile_transform);
        assert!(spec.preprocess.variance_correction);
        assert_eq!(spec.patches.len(), 1);
        assert!(matches!(
            spec.patches[0].binarize,
            Some(BinarizePatch::Clear(_))
        ));
        let text = spec.to_toml();
        let reparsed = ExperimentSpec::from_toml_str(&text).unwrap();
        assert_eq!(spec, reparsed);
    }

    #[test]
    fn synth_overrides_build_valid_configs() {
        let o = SynthOverrides {
            n: Some(500),
            d_x: Some(3),
            sigma_eta_s: Some(0.1),
            ..SynthOverrides::default()
        };
        let cfg = o.to_config();
        cfg.validate().unwrap();
        assert_eq!(cfg.n, 500);
        assert_eq!(cfg.d_x, 3);
        assert_eq!(cfg.sigma_eta_s.get(0, 0), 0.1);
        assert_eq!(cfg.beta_x.len(), 3);
    }

    #[test]
    fn split_spec_validates_kind() {
        let s = SplitSpec {
            kind: "bogus".into(),
            train_fraction: None,
            k: None,
            repeats: 1,
            stratify: false,
        };
        assert!(s.to_plan(1).is_err());
    }
}
