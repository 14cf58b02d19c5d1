//! Fairness and accuracy measures: p%-rule, mean distance, sensitive-attribute
//! AUC, correlation coefficient, RMSE, and accuracy, plus the dispatcher that
//! bundles the ones appropriate for a task / sensitive-attribute combination
//! into a [`FairnessReport`].
//!
//! Covariances use the population (divide by n) convention throughout, which
//! makes the binary-s identity `|cov(s, y_hat)| = p1 (1 - p1) MD` exact.

use crate::datamodel::{is_binary_values, Dataset, Task};
use crate::error::{Error, Result};
use crate::estimators::Predictions;
use serde::{Deserialize, Serialize};

/// Tie handling for [`auc_vs_sensitive`]: `Strict` counts only strictly
/// greater pairs, `Half` gives ties half credit (the usual ROC convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TieMode {
    #[default]
    Strict,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub s1: usize,
    pub s0: usize,
}

/// Metric bundle for one evaluation. Fields are populated according to the
/// task and the kind of sensitive attribute; absent metrics stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FairnessReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc_vs_sensitive: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corr_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_counts: Option<GroupCounts>,
}

impl FairnessReport {
    /// Populated metrics as (name, value) pairs, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("p_percent", self.p_percent),
            ("mean_distance", self.mean_distance),
            ("auc_vs_sensitive", self.auc_vs_sensitive),
            ("corr_coefficient", self.corr_coefficient),
            ("rmse", self.rmse),
            ("accuracy", self.accuracy),
        ] {
            if let Some(v) = v {
                out.push((name, v));
            }
        }
        out
    }
}

fn split_groups(y_hat: &[f64], s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if y_hat.len() != s.len() {
        return Err(Error::DimensionMismatch {
            context: "fairness metric".into(),
            expected: format!("{} predictions", s.len()),
            actual: format!("{} predictions", y_hat.len()),
        });
    }
    let mut g1 = Vec::new();
    let mut g0 = Vec::new();
    for (&p, &g) in y_hat.iter().zip(s) {
        if g == 1.0 {
            g1.push(p);
        } else if g == 0.0 {
            g0.push(p);
        } else {
            return Err(Error::invalid(format!(
                "sensitive column must be binary for this metric, found {g}"
            )));
        }
    }
    if g1.is_empty() || g0.is_empty() {
        return Err(Error::EmptyGroup(format!(
            "group counts s=1: {}, s=0: {}",
            g1.len(),
            g0.len()
        )));
    }
    Ok((g1, g0))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// p%-rule: `min(r1/r0, r0/r1)` over the empirical positive rates of the two
/// groups. Degenerate cases are total: both rates zero gives 1.0 (equal
/// treatment of nothing), exactly one zero gives 0.0.
pub fn p_percent_rule(y_hat: &[f64], s: &[f64]) -> Result<f64> {
    let (g1, g0) = split_groups(y_hat, s)?;
    let r1 = g1.iter().filter(|&&v| v == 1.0).count() as f64 / g1.len() as f64;
    let r0 = g0.iter().filter(|&&v| v == 1.0).count() as f64 / g0.len() as f64;
    Ok(if r1 == 0.0 && r0 == 0.0 {
        1.0
    } else if r1 == 0.0 || r0 == 0.0 {
        0.0
    } else {
        (r1 / r0).min(r0 / r1)
    })
}

/// Mean distance: absolute difference of group mean predictions.
pub fn mean_distance(y_hat: &[f64], s: &[f64]) -> Result<f64> {
    let (g1, g0) = split_groups(y_hat, s)?;
    Ok((mean(&g1) - mean(&g0)).abs())
}

/// Probability that a prediction from group s=1 exceeds one from group s=0,
/// estimated over all cross-group pairs. 0.5 means the prediction carries no
/// group signal.
pub fn auc_vs_sensitive(y_hat: &[f64], s: &[f64], tie_mode: TieMode) -> Result<f64> {
    let (g1, mut g0) = split_groups(y_hat, s)?;
    g0.sort_unstable_by(f64::total_cmp);
    let mut total = 0.0f64;
    for &v in &g1 {
        let below = g0.partition_point(|&t| t < v);
        total += below as f64;
        if tie_mode == TieMode::Half {
            let upto = g0.partition_point(|&t| t <= v);
            total += 0.5 * (upto - below) as f64;
        }
    }
    Ok(total / (g1.len() as f64 * g0.len() as f64))
}

/// Pearson correlation (population convention). Zero variance on either side
/// is an error so it stays distinguishable from a true zero correlation.
pub fn correlation_coefficient(y_hat: &[f64], s: &[f64]) -> Result<f64> {
    if y_hat.len() != s.len() {
        return Err(Error::DimensionMismatch {
            context: "correlation_coefficient".into(),
            expected: format!("{} predictions", s.len()),
            actual: format!("{} predictions", y_hat.len()),
        });
    }
    let n = y_hat.len() as f64;
    let my = mean(y_hat);
    let ms = mean(s);
    let mut cov = 0.0;
    let mut vy = 0.0;
    let mut vs = 0.0;
    for (&a, &b) in y_hat.iter().zip(s) {
        cov += (a - my) * (b - ms);
        vy += (a - my) * (a - my);
        vs += (b - ms) * (b - ms);
    }
    if vy <= 0.0 {
        return Err(Error::ZeroVariance("predictions".into()));
    }
    if vs <= 0.0 {
        return Err(Error::ZeroVariance("sensitive attribute".into()));
    }
    Ok((cov / n) / ((vy / n).sqrt() * (vs / n).sqrt()))
}

pub fn rmse(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() || y.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "rmse".into(),
            expected: format!("{} values", y.len().max(1)),
            actual: format!("{} values", y_hat.len()),
        });
    }
    let mse = y_hat
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64;
    Ok(mse.sqrt())
}

pub fn accuracy(y_hat_class: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat_class.len() != y.len() || y.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "accuracy".into(),
            expected: format!("{} values", y.len().max(1)),
            actual: format!("{} values", y_hat_class.len()),
        });
    }
    let hits = y_hat_class.iter().zip(y).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Build the metric bundle appropriate for the task and the dataset's
/// sensitive attributes: the first binary sensitive column feeds the group
/// metrics (p% for classification, MD and AUC for regression) and the first
/// non-binary one feeds the correlation coefficient.
pub fn report(
    task: Task,
    preds: &Predictions,
    ds: &Dataset,
    tie_mode: TieMode,
) -> Result<FairnessReport> {
    let mut out = FairnessReport::default();
    let y = ds.y_vec();
    let s_cols: Vec<Vec<f64>> = (0..ds.s.cols()).map(|c| ds.s.column(c)).collect();
    let binary_col = s_cols.iter().find(|c| is_binary_values(c));
    let numeric_col = s_cols.iter().find(|c| !is_binary_values(c));

    if let Some(col) = binary_col {
        let n1 = col.iter().filter(|&&v| v == 1.0).count();
        out.group_counts = Some(GroupCounts {
            s1: n1,
            s0: col.len() - n1,
        });
    }

    match task {
        Task::Classification => {
            let classes = preds
                .classes
                .as_ref()
                .ok_or_else(|| Error::invalid("classification report needs hard labels"))?;
            out.accuracy = Some(accuracy(classes, &y)?);
            if let Some(col) = binary_col {
                out.p_percent = Some(p_percent_rule(classes, col)?);
            }
            if let Some(col) = numeric_col {
                out.corr_coefficient = Some(correlation_coefficient(classes, col)?);
            }
        }
        Task::Regression => {
            out.rmse = Some(rmse(&preds.scores, &y)?);
            if let Some(col) = binary_col {
                out.mean_distance = Some(mean_distance(&preds.scores, col)?);
                out.auc_vs_sensitive = Some(auc_vs_sensitive(&preds.scores, col, tie_mode)?);
            }
            if let Some(col) = numeric_col {
                out.corr_coefficient = Some(correlation_coefficient(&preds.scores, col)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Rng};
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn p_percent_hand_cases() {
        // equal rates -> 1.0
        let s = [1.0, 1.0, 0.0, 0.0];
        let yh = [1.0, 0.0, 1.0, 0.0];
        assert_eq!(p_percent_rule(&yh, &s).unwrap(), 1.0);

        // 2/4 vs 1/4 -> 0.5
        let s = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let yh = [1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert_eq!(p_percent_rule(&yh, &s).unwrap(), 0.5);
    }

    #[test]
    fn p_percent_degenerate_rates() {
        let s = [1.0, 0.0];
        assert_eq!(p_percent_rule(&[0.0, 0.0], &s).unwrap(), 1.0);
        assert_eq!(p_percent_rule(&[1.0, 0.0], &s).unwrap(), 0.0);
        assert_eq!(p_percent_rule(&[0.0, 1.0], &s).unwrap(), 0.0);
    }

    #[test]
    fn p_percent_empty_group_is_error() {
        assert!(matches!(
            p_percent_rule(&[1.0, 0.0], &[1.0, 1.0]),
            Err(Error::EmptyGroup(_))
        ));
    }

    #[test]
    fn mean_distance_cases() {
        let s = [1.0, 0.0, 1.0, 0.0];
        assert_eq!(mean_distance(&[2.0, 2.0, 2.0, 2.0], &s).unwrap(), 0.0);
        let md = mean_distance(&[0.35, 0.13, 0.35, 0.13], &s).unwrap();
        assert_close(md, 0.22, 1e-12);
    }

    #[test]
    fn mean_distance_matches_brute_force() {
        let mut rng = Rng::new(40);
        let n = 200;
        let s: Vec<f64> = (0..n).map(|_| f64::from(rng.next_f64() < 0.4)).collect();
        let yh: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let md = mean_distance(&yh, &s).unwrap();
        let (mut s1, mut c1, mut s0, mut c0) = (0.0, 0, 0.0, 0);
        for i in 0..n {
            if s[i] == 1.0 {
                s1 += yh[i];
                c1 += 1;
            } else {
                s0 += yh[i];
                c0 += 1;
            }
        }
        let brute = (s1 / c1 as f64 - s0 / c0 as f64).abs();
        assert_close(md, brute, 1e-12);
    }

    #[test]
    fn auc_extremes_and_ties() {
        let s = [1.0, 1.0, 0.0, 0.0];
        // every s=1 prediction above every s=0 prediction
        let yh = [5.0, 4.0, 1.0, 0.0];
        assert_eq!(auc_vs_sensitive(&yh, &s, TieMode::Strict).unwrap(), 1.0);
        // all identical: strict 0, half 0.5
        let yh = [2.0, 2.0, 2.0, 2.0];
        assert_eq!(auc_vs_sensitive(&yh, &s, TieMode::Strict).unwrap(), 0.0);
        assert_eq!(auc_vs_sensitive(&yh, &s, TieMode::Half).unwrap(), 0.5);
    }

    #[test]
    fn correlation_exact_and_independent() {
        let s: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_close(correlation_coefficient(&s, &s).unwrap(), 1.0, 1e-12);

        let mut rng = Rng::new(15);
        let n = 100_000;
        let a: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.next_normal()).collect();
        assert!(correlation_coefficient(&a, &b).unwrap().abs() <= 0.02);
    }

    #[test]
    fn correlation_zero_variance_is_error() {
        assert!(matches!(
            correlation_coefficient(&[1.0, 1.0], &[0.0, 1.0]),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn rmse_and_accuracy_basics() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        let shifted = [1.5, 2.5, 3.5];
        assert_close(rmse(&shifted, &y).unwrap(), 0.5, 1e-12);
        assert_eq!(accuracy(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1.0, 1.0], &[1.0, 0.0]).unwrap(), 0.5);
        assert!(rmse(&y, &[1.0]).is_err());
    }

    #[test]
    fn report_dispatch_rules() {
        let n = 8;
        let s = Matrix::from_fn(n, 1, |r, _| (r % 2) as f64);
        let x = Matrix::zeros(n, 1);
        let z = Matrix::from_fn(n, 1, |_, _| 1.0);
        let y = Matrix::from_fn(n, 1, |r, _| ((r / 2) % 2) as f64);
        let ds = Dataset::new(
            s,
            x,
            z,
            y,
            vec!["s".into()],
            vec!["x".into()],
            vec!["intercept".into()],
            Task::Classification,
        )
        .unwrap();
        let preds = Predictions {
            scores: vec![0.2; n],
            classes: Some((0..n).map(|r| (r % 2) as f64).collect()),
        };
        let rep = report(Task::Classification, &preds, &ds, TieMode::Strict).unwrap();
        assert!(rep.p_percent.is_some());
        assert!(rep.accuracy.is_some());
        assert!(rep.mean_distance.is_none());
        assert!(rep.auc_vs_sensitive.is_none());
        assert_eq!(rep.group_counts, Some(GroupCounts { s1: 4, s0: 4 }));

        // regression with binary s
        let ds_reg = Dataset::new(
            ds.s.clone(),
            ds.x.clone(),
            ds.z.clone(),
            Matrix::from_fn(n, 1, |r, _| r as f64),
            ds.s_names.clone(),
            ds.x_names.clone(),
            ds.z_names.clone(),
            Task::Regression,
        )
        .unwrap();
        let preds = Predictions {
            scores: (0..n).map(|r| r as f64 + 0.1).collect(),
            classes: None,
        };
        let rep = report(Task::Regression, &preds, &ds_reg, TieMode::Strict).unwrap();
        assert!(rep.mean_distance.is_some());
        assert!(rep.auc_vs_sensitive.is_some());
        assert!(rep.rmse.is_some());
        assert!(rep.p_percent.is_none());
        assert!(rep.corr_coefficient.is_none());

        // regression with numeric s
        let ds_num = Dataset::new(
            Matrix::from_fn(n, 1, |r, _| r as f64 * 0.7),
            ds.x.clone(),
            ds.z.clone(),
            ds_reg.y.clone(),
            ds.s_names.clone(),
            ds.x_names.clone(),
            ds.z_names.clone(),
            Task::Regression,
        )
        .unwrap();
        let rep = report(Task::Regression, &preds, &ds_num, TieMode::Strict).unwrap();
        assert!(rep.corr_coefficient.is_some());
        assert!(rep.rmse.is_some());
        assert!(rep.mean_distance.is_none());
    }

    #[test]
    fn binary_s_covariance_identity() {
        // |cov(s, y_hat)| = p1 (1 - p1) * MD with the 1/n convention
        let mut rng = Rng::new(31);
        for _ in 0..20 {
            let n = 60;
            let s: Vec<f64> = (0..n).map(|_| f64::from(rng.next_f64() < 0.3)).collect();
            if !s.contains(&1.0) || !s.contains(&0.0) {
                continue;
            }
            let yh: Vec<f64> = (0..n).map(|_| rng.next_normal() * 2.0).collect();
            let md = mean_distance(&yh, &s).unwrap();
            let p1 = s.iter().sum::<f64>() / n as f64;
            let ms = mean(&s);
            let myh = mean(&yh);
            let cov = s
                .iter()
                .zip(&yh)
                .map(|(&a, &b)| (a - ms) * (b - myh))
                .sum::<f64>()
                / n as f64;
            assert_close(cov.abs(), p1 * (1.0 - p1) * md, 1e-10);
        }
    }

    proptest! {
        #[test]
        fn auc_equals_brute_force(
            data in proptest::collection::vec((-1.0f64..1.0, any::<bool>()), 2..50),
            half in any::<bool>()
        ) {
            let mut y_hat: Vec<f64> = data.iter().map(|(v, _)| (v * 4.0).round() / 4.0).collect();
            let mut s: Vec<f64> = data.iter().map(|(_, g)| f64::from(*g)).collect();
            // force both groups to exist
            s[0] = 1.0;
            if s.len() > 1 { s[1] = 0.0; }
            y_hat[0] = y_hat[0].abs();
            let mode = if half { TieMode::Half } else { TieMode::Strict };
            let fast = auc_vs_sensitive(&y_hat, &s, mode).unwrap();
            let mut total = 0.0;
            let mut pairs = 0.0;
            for i in 0..s.len() {
                if s[i] != 1.0 { continue; }
                for j in 0..s.len() {
                    if s[j] != 0.0 { continue; }
                    pairs += 1.0;
                    if y_hat[i] > y_hat[j] {
                        total += 1.0;
                    } else if y_hat[i] == y_hat[j] && mode == TieMode::Half {
                        total += 0.5;
                    }
                }
            }
            prop_assert_eq!(fast, total / pairs);
        }

        #[test]
        fn p_percent_symmetric_in_group_labels(
            data in proptest::collection::vec((any::<bool>(), any::<bool>()), 2..60)
        ) {
            let mut s: Vec<f64> = data.iter().map(|(g, _)| f64::from(*g)).collect();
            let y_hat: Vec<f64> = data.iter().map(|(_, v)| f64::from(*v)).collect();
            s[0] = 1.0;
            if s.len() > 1 { s[1] = 0.0; }
            let swapped: Vec<f64> = s.iter().map(|&g| 1.0 - g).collect();
            prop_assert_eq!(
                p_percent_rule(&y_hat, &s).unwrap(),
                p_percent_rule(&y_hat, &swapped).unwrap()
            );
        }

        #[test]
        fn metrics_permutation_invariant(
            data in proptest::collection::vec((-2.0f64..2.0, any::<bool>()), 3..40),
            rot in 1usize..10
        ) {
            let mut y_hat: Vec<f64> = data.iter().map(|(v, _)| *v).collect();
            let mut s: Vec<f64> = data.iter().map(|(_, g)| f64::from(*g)).collect();
            s[0] = 1.0;
            s[1] = 0.0;
            y_hat[0] += 0.25; // avoid fully-constant predictions
            let k = rot % s.len();
            let mut y_rot = y_hat.clone();
            let mut s_rot = s.clone();
            y_rot.rotate_left(k);
            s_rot.rotate_left(k);
            let md_a = mean_distance(&y_hat, &s).unwrap();
            let md_b = mean_distance(&y_rot, &s_rot).unwrap();
            prop_assert!((md_a - md_b).abs() < 1e-12);
            let auc_a = auc_vs_sensitive(&y_hat, &s, TieMode::Half).unwrap();
            let auc_b = auc_vs_sensitive(&y_rot, &s_rot, TieMode::Half).unwrap();
            prop_assert!((auc_a - auc_b).abs() < 1e-12);
        }

        #[test]
        fn auc_half_mode_complement(
            data in proptest::collection::vec((-1.0f64..1.0, any::<bool>()), 2..40)
        ) {
            let mut y_hat: Vec<f64> = data.iter().map(|(v, _)| (v * 8.0).round() / 8.0).collect();
            let mut s: Vec<f64> = data.iter().map(|(_, g)| f64::from(*g)).collect();
            s[0] = 1.0;
            if s.len() > 1 { s[1] = 0.0; }
            y_hat[0] = y_hat[0].abs();
            let a = auc_vs_sensitive(&y_hat, &s, TieMode::Half).unwrap();
            let neg: Vec<f64> = y_hat.iter().map(|v| -v).collect();
            let b = auc_vs_sensitive(&neg, &s, TieMode::Half).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }
}
