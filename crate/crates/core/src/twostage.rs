//! The two-stage pipeline: regress the non-sensitive block on the sensitive
//! block (plus an intercept), keep only the residuals, and train an ordinary
//! linear learner on residuals plus explanatory attributes. For binary
//! sensitive attributes the first stage also removes attributes that are
//! constant inside either group and rescales residuals so both groups share
//! each attribute's pooled standard deviation.
//!
//! The intercept appended to the sensitive block makes the training
//! residuals exactly uncorrelated with every sensitive column, which is the
//! finite-sample version of the guarantee the residualization is after. It
//! can be disabled through [`FirstStageOptions`] to run the projection on
//! the raw sensitive block alone.

use std::collections::BTreeMap;
use std::path::Path;

use crate::datamodel::{is_binary_values, Dataset, Task};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_logistic, fit_ols, fit_ridge_classifier, predict, LinearModel, Predictions,
};
use crate::linalg::{solve_least_squares, Matrix, Rng};
use serde::{Deserialize, Serialize};

/// Variance below which an attribute counts as constant inside a group.
pub const ZERO_VARIANCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstStageOptions {
    /// Append an all-ones column to the sensitive block before fitting.
    pub intercept: bool,
    /// Rescale residuals so every binary-pattern group has the pooled
    /// per-attribute standard deviation (binary sensitive columns only).
    pub variance_correction: bool,
    /// Drop attributes with (near-)zero variance inside any binary group.
    pub zero_variance_filter: bool,
}

impl Default for FirstStageOptions {
    fn default() -> Self {
        FirstStageOptions {
            intercept: true,
            variance_correction: true,
            zero_variance_filter: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitiveKind {
    Binary,
    Numeric,
    Mixed,
}

/// Per-group residual rescaling factors, keyed by the pattern of the binary
/// sensitive columns (e.g. "0", "1", "01").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCorrection {
    pub binary_cols: Vec<usize>,
    pub factors: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageModel {
    /// (d_s + 1) x retained coefficient matrix when fitted with an intercept
    /// (the last row holds the intercept coefficients), d_s x retained
    /// otherwise.
    pub coefficients: Matrix,
    pub retained_mask: Vec<bool>,
    pub variance: Option<VarianceCorrection>,
    pub sensitive_kind: SensitiveKind,
    pub intercept: bool,
}

impl FirstStageModel {
    pub fn sensitive_cols(&self) -> usize {
        self.coefficients.rows() - usize::from(self.intercept)
    }

    pub fn retained_count(&self) -> usize {
        self.retained_mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStagePredictor {
    pub first_stage: FirstStageModel,
    pub second_stage: LinearModel,
    pub uses_explanatory: bool,
}

/// Second-stage learner selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SecondStageSpec {
    /// Least squares; on classification tasks this is the least-squares
    /// classifier (ridge with alpha = 0 on +/-1 labels).
    Ols,
    Ridge { alphas: Vec<f64>, folds: usize },
    Logistic { max_iter: usize, tol: f64 },
}

fn binary_sensitive_cols(s: &Matrix) -> Vec<usize> {
    (0..s.cols())
        .filter(|&c| is_binary_values(&s.column(c)))
        .collect()
}

fn pattern_key(s: &Matrix, row: usize, binary_cols: &[usize]) -> Result<String> {
    let mut key = String::with_capacity(binary_cols.len());
    for &c in binary_cols {
        let v = s.get(row, c);
        if v == 0.0 {
            key.push('0');
        } else if v == 1.0 {
            key.push('1');
        } else {
            return Err(Error::invalid(format!(
                "expected a binary value in sensitive column {c}, found {v}"
            )));
        }
    }
    Ok(key)
}

fn column_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
}

/// Mask out attributes whose variance inside the s=0 or s=1 group of any
/// binary sensitive column falls below [`ZERO_VARIANCE_EPS`]; such an
/// attribute is a near-proxy for the group label.
pub fn filter_zero_variance(s: &Matrix, x: &Matrix) -> Result<Vec<bool>> {
    if s.rows() != x.rows() {
        return Err(Error::DimensionMismatch {
            context: "filter_zero_variance".into(),
            expected: format!("{} rows", s.rows()),
            actual: format!("{} rows", x.rows()),
        });
    }
    let binary_cols = binary_sensitive_cols(s);
    if binary_cols.is_empty() {
        return Err(Error::invalid(
            "filter_zero_variance needs at least one binary sensitive column",
        ));
    }
    let mut mask = vec![true; x.cols()];
    for &bc in &binary_cols {
        let col = s.column(bc);
        let g1: Vec<usize> = (0..s.rows()).filter(|&r| col[r] == 1.0).collect();
        let g0: Vec<usize> = (0..s.rows()).filter(|&r| col[r] == 0.0).collect();
        if g1.is_empty() || g0.is_empty() {
            return Err(Error::EmptyGroup(format!(
                "sensitive column {bc} has an empty group (s=1: {}, s=0: {})",
                g1.len(),
                g0.len()
            )));
        }
        for c in 0..x.cols() {
            if !mask[c] {
                continue;
            }
            for group in [&g1, &g0] {
                let values: Vec<f64> = group.iter().map(|&r| x.get(r, c)).collect();
                if column_variance(&values) < ZERO_VARIANCE_EPS {
                    mask[c] = false;
                    break;
                }
            }
        }
    }
    if mask.iter().all(|&m| !m) {
        return Err(Error::invalid(
            "zero-variance filter removed every attribute",
        ));
    }
    Ok(mask)
}

/// Fit the first stage: one joint least-squares of the retained attributes
/// on the (intercept-augmented) sensitive block, plus the optional variance
/// correction factors for binary groups.
pub fn fit_first_stage(s: &Matrix, x: &Matrix, opts: &FirstStageOptions) -> Result<FirstStageModel> {
    if s.rows() != x.rows() {
        return Err(Error::DimensionMismatch {
            context: "fit_first_stage".into(),
            expected: format!("{} rows", s.rows()),
            actual: format!("{} rows", x.rows()),
        });
    }
    if s.rows() <= s.cols() + 1 {
        return Err(Error::invalid(format!(
            "first stage needs n > d_s + 1 (n = {}, d_s = {})",
            s.rows(),
            s.cols()
        )));
    }
    let binary_cols = binary_sensitive_cols(s);
    let sensitive_kind = if binary_cols.len() == s.cols() {
        SensitiveKind::Binary
    } else if binary_cols.is_empty() {
        SensitiveKind::Numeric
    } else {
        SensitiveKind::Mixed
    };
    let retained_mask = if opts.zero_variance_filter && !binary_cols.is_empty() {
        filter_zero_variance(s, x)?
    } else {
        vec![true; x.cols()]
    };
    let x_retained = x.select_cols(&retained_mask);
    let s_plus = if opts.intercept {
        s.append_ones_column()
    } else {
        s.clone()
    };
    let coefficients = solve_least_squares(&s_plus, &x_retained)?;
    let mut model = FirstStageModel {
        coefficients,
        retained_mask,
        variance: None,
        sensitive_kind,
        intercept: opts.intercept,
    };

    if opts.variance_correction && !binary_cols.is_empty() {
        let u = residualize(&model, s, x)?;
        let k = u.cols();
        let pooled: Vec<f64> = (0..k).map(|c| column_variance(&u.column(c)).sqrt()).collect();
        let mut rows_by_group: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for r in 0..u.rows() {
            rows_by_group
                .entry(pattern_key(s, r, &binary_cols)?)
                .or_default()
                .push(r);
        }
        let mut factors = BTreeMap::new();
        for (key, rows) in rows_by_group {
            let mut group_factors = Vec::with_capacity(k);
            for c in 0..k {
                let values: Vec<f64> = rows.iter().map(|&r| u.get(r, c)).collect();
                let std = column_variance(&values).sqrt();
                let f = pooled[c] / std;
                if !f.is_finite() || f <= 0.0 {
                    return Err(Error::EmptyGroup(format!(
                        "degenerate sensitive group '{key}': residual deviation {std:e} \
                         in attribute {c} cannot be rescaled"
                    )));
                }
                group_factors.push(f);
            }
            factors.insert(key, group_factors);
        }
        model.variance = Some(VarianceCorrection {
            binary_cols,
            factors,
        });
    }
    Ok(model)
}

/// Residuals of the retained attributes: `U = X_retained - S+ B`, with the
/// training-time variance factors applied per row group when present. Used
/// identically on training and test rows.
pub fn residualize(model: &FirstStageModel, s: &Matrix, x: &Matrix) -> Result<Matrix> {
    if x.cols() != model.retained_mask.len() {
        return Err(Error::DimensionMismatch {
            context: "residualize".into(),
            expected: format!("{} attribute columns", model.retained_mask.len()),
            actual: format!("{} attribute columns", x.cols()),
        });
    }
    if s.cols() != model.sensitive_cols() {
        return Err(Error::DimensionMismatch {
            context: "residualize".into(),
            expected: format!("{} sensitive columns", model.sensitive_cols()),
            actual: format!("{} sensitive columns", s.cols()),
        });
    }
    let x_retained = x.select_cols(&model.retained_mask);
    let s_plus = if model.intercept {
        s.append_ones_column()
    } else {
        s.clone()
    };
    let mut u = x_retained.sub(&s_plus.matmul(&model.coefficients));
    if let Some(vc) = &model.variance {
        for r in 0..u.rows() {
            let key = pattern_key(s, r, &vc.binary_cols)?;
            let factors = vc.factors.get(&key).ok_or_else(|| {
                Error::EmptyGroup(format!(
                    "sensitive group '{key}' was not present in training data"
                ))
            })?;
            for (c, f) in factors.iter().enumerate() {
                u.set(r, c, u.get(r, c) * f);
            }
        }
    }
    Ok(u)
}

fn second_stage_feature_names(ds: &Dataset, mask: &[bool]) -> Vec<String> {
    let mut names: Vec<String> = ds
        .x_names
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(n, _)| format!("u:{n}"))
        .collect();
    names.extend(ds.z_names.iter().cloned());
    names
}

fn fit_second_stage(
    features: &Matrix,
    ds: &Dataset,
    spec: &SecondStageSpec,
    rng: &mut Rng,
) -> Result<LinearModel> {
    let require_classification = |what: &str| -> Result<()> {
        if ds.task != Task::Classification {
            return Err(Error::invalid(format!(
                "{what} second stage requires a classification task"
            )));
        }
        Ok(())
    };
    match spec {
        SecondStageSpec::Ols => match ds.task {
            Task::Regression => fit_ols(features, &ds.y),
            Task::Classification => {
                fit_ridge_classifier(features, &ds.y_vec(), &[0.0], 2, rng)
            }
        },
        SecondStageSpec::Ridge { alphas, folds } => {
            require_classification("ridge")?;
            fit_ridge_classifier(features, &ds.y_vec(), alphas, *folds, rng)
        }
        SecondStageSpec::Logistic { max_iter, tol } => {
            require_classification("logistic")?;
            fit_logistic(features, &ds.y_vec(), *max_iter, *tol)
        }
    }
}

/// Fit the full two-stage predictor on a training dataset.
pub fn fit_2sdr(
    train: &Dataset,
    spec: &SecondStageSpec,
    opts: &FirstStageOptions,
    rng: &mut Rng,
) -> Result<TwoStagePredictor> {
    let first_stage = fit_first_stage(&train.s, &train.x, opts)?;
    let u = residualize(&first_stage, &train.s, &train.x)?;
    let features = Matrix::hstack(&[&u, &train.z]);
    let names = second_stage_feature_names(train, &first_stage.retained_mask);
    let second_stage = fit_second_stage(&features, train, spec, rng)?.with_feature_names(names)?;
    let uses_explanatory = train.z_names.iter().any(|n| n != "intercept");
    Ok(TwoStagePredictor {
        first_stage,
        second_stage,
        uses_explanatory,
    })
}

/// Apply a fitted two-stage predictor to a test dataset with the same schema.
pub fn predict_2sdr(p: &TwoStagePredictor, test: &Dataset) -> Result<Predictions> {
    let names = second_stage_feature_names(test, &p.first_stage.retained_mask);
    if names != p.second_stage.feature_names {
        return Err(Error::invalid(format!(
            "test schema does not match the fitted predictor (expected features {:?}, got {:?})",
            p.second_stage.feature_names, names
        )));
    }
    let u = residualize(&p.first_stage, &test.s, &test.x)?;
    let features = Matrix::hstack(&[&u, &test.z]);
    predict(&p.second_stage, &features)
}

/// Baseline without residualization: the same second-stage learner on the
/// raw `[X | Z]` features.
pub fn fit_direct(train: &Dataset, spec: &SecondStageSpec, rng: &mut Rng) -> Result<LinearModel> {
    let features = train.features_xz();
    let mut names = train.x_names.clone();
    names.extend(train.z_names.iter().cloned());
    fit_second_stage(&features, train, spec, rng)?.with_feature_names(names)
}

pub fn predict_direct(model: &LinearModel, test: &Dataset) -> Result<Predictions> {
    predict(model, &test.features_xz())
}

/// Serialize a fitted predictor to a TOML document. Floats round-trip at
/// full precision.
pub fn save_predictor(p: &TwoStagePredictor, path: impl AsRef<Path>) -> Result<()> {
    let text = predictor_to_toml(p)?;
    std::fs::write(path.as_ref(), text).map_err(|e| Error::Io {
        path: path.as_ref().display().to_string(),
        source: e,
    })
}

pub fn predictor_to_toml(p: &TwoStagePredictor) -> Result<String> {
    toml::to_string_pretty(p).map_err(|e| Error::invalid(format!("serialize predictor: {e}")))
}

pub fn load_predictor(path: impl AsRef<Path>) -> Result<TwoStagePredictor> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Io {
        path: path.as_ref().display().to_string(),
        source: e,
    })?;
    let p: TwoStagePredictor =
        toml::from_str(&text).map_err(|e| Error::invalid(format!("parse predictor: {e}")))?;
    let residual_features = p
        .second_stage
        .feature_names
        .iter()
        .filter(|n| n.starts_with("u:"))
        .count();
    if p.second_stage.weights.len() != p.second_stage.feature_names.len()
        || residual_features != p.first_stage.retained_count()
        || p.first_stage.coefficients.cols() != p.first_stage.retained_count()
    {
        return Err(Error::invalid(
            "predictor file is inconsistent: weight, feature, and mask counts disagree",
        ));
    }
    Ok(p)
}
