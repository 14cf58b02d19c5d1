//! Linear second-stage learners: OLS regression, a ridge classifier with
//! cross-validated regularization strength, and logistic regression fitted
//! by iteratively reweighted least squares.
//!
//! All fitters take a dense feature matrix that already contains any
//! intercept as an explicit all-ones column; the ridge penalty detects that
//! column and leaves it unpenalized.

use crate::datamodel::Task;
use crate::error::{Error, Result};
use crate::linalg::{solve_least_squares, solve_normal_equations, Matrix, Rng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Identity,
    Sign,
    Sigmoid,
}

/// A fitted linear model. `link` decides how raw scores become predictions:
/// identity for regression, sign (strictly positive score -> class 1) for the
/// ridge classifier, sigmoid (probability strictly above 0.5 -> class 1) for
/// logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub feature_names: Vec<String>,
    pub task: Task,
    pub link: Link,
    pub chosen_alpha: Option<f64>,
    pub training_accuracy: Option<f64>,
    pub separation_capped: bool,
    pub iterations: Option<usize>,
}

impl LinearModel {
    fn new(weights: Vec<f64>, task: Task, link: Link) -> Self {
        let feature_names = (0..weights.len()).map(|i| format!("f{i}")).collect();
        LinearModel {
            weights,
            feature_names,
            task,
            link,
            chosen_alpha: None,
            training_accuracy: None,
            separation_capped: false,
            iterations: None,
        }
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                context: "LinearModel::with_feature_names".into(),
                expected: format!("{} names", self.weights.len()),
                actual: format!("{} names", names.len()),
            });
        }
        self.feature_names = names;
        Ok(self)
    }
}

/// Raw scores plus, for classifiers, hard 0/1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub scores: Vec<f64>,
    pub classes: Option<Vec<f64>>,
}

/// Default ridge grid: 13 log-spaced values from 1e-3 to 1e3.
pub fn default_ridge_alphas() -> Vec<f64> {
    (0..13).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect()
}

pub const DEFAULT_LOGISTIC_MAX_ITER: usize = 100;
pub const DEFAULT_LOGISTIC_TOL: f64 = 1e-8;

fn check_labels(labels: &[f64]) -> Result<()> {
    let mut seen = [false, false];
    for &y in labels {
        if y == 0.0 {
            seen[0] = true;
        } else if y == 1.0 {
            seen[1] = true;
        } else {
            return Err(Error::invalid(format!(
                "labels must be 0 or 1, found {y}"
            )));
        }
    }
    if !seen[0] || !seen[1] {
        return Err(Error::SingleClass {
            label: if seen[1] { 1.0 } else { 0.0 },
        });
    }
    Ok(())
}

/// Index of the first all-ones column, if any; that column is the intercept
/// and stays unpenalized.
fn detect_intercept(features: &Matrix) -> Option<usize> {
    (0..features.cols()).find(|&c| (0..features.rows()).all(|r| features.get(r, c) == 1.0))
}

/// Ordinary least squares on a real-valued target.
pub fn fit_ols(features: &Matrix, targets: &Matrix) -> Result<LinearModel> {
    if targets.cols() != 1 {
        return Err(Error::DimensionMismatch {
            context: "fit_ols".into(),
            expected: "single target column".into(),
            actual: format!("{} columns", targets.cols()),
        });
    }
    let b = solve_least_squares(features, targets)?;
    Ok(LinearModel::new(b.column(0), Task::Regression, Link::Identity))
}

fn ridge_solve(
    gram: &Matrix,
    rhs: &Matrix,
    alpha: f64,
    intercept: Option<usize>,
) -> Result<Vec<f64>> {
    let p = gram.rows();
    let penalized = Matrix::from_fn(p, p, |i, j| {
        let mut v = gram.get(i, j);
        if i == j && alpha > 0.0 && Some(i) != intercept {
            v += alpha;
        }
        v
    });
    Ok(solve_normal_equations(&penalized, rhs)?.column(0))
}

fn sign_classes(scores: &[f64]) -> Vec<f64> {
    scores.iter().map(|&s| f64::from(s > 0.0)).collect()
}

fn accuracy_against(classes: &[f64], labels: &[f64]) -> f64 {
    let hits = classes
        .iter()
        .zip(labels)
        .filter(|(a, b)| a == b)
        .count();
    hits as f64 / labels.len() as f64
}

/// Ridge classifier on {-1, +1}-encoded labels with the regularization
/// strength chosen by k-fold cross-validated accuracy (ties go to the
/// largest alpha), then refitted on all rows. The intercept column is never
/// penalized. A single-value grid skips cross-validation.
pub fn fit_ridge_classifier(
    features: &Matrix,
    labels: &[f64],
    alpha_grid: &[f64],
    folds: usize,
    rng: &mut Rng,
) -> Result<LinearModel> {
    let n = features.rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "fit_ridge_classifier".into(),
            expected: format!("{n} labels"),
            actual: format!("{} labels", labels.len()),
        });
    }
    check_labels(labels)?;
    if alpha_grid.is_empty() || alpha_grid.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(Error::invalid(
            "alpha grid must be non-empty with finite non-negative entries",
        ));
    }
    let encoded: Vec<f64> = labels.iter().map(|&y| 2.0 * y - 1.0).collect();
    let targets = Matrix::column_vector(encoded)?;
    let intercept = detect_intercept(features);
    let full_gram = features.gram();
    let full_rhs = features.t_mul(&targets);

    let chosen = if alpha_grid.len() == 1 {
        alpha_grid[0]
    } else {
        if folds < 2 || folds > n {
            return Err(Error::invalid(format!(
                "cross-validation needs 2 <= folds <= n, got folds = {folds}, n = {n}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let base = n / folds;
        let rem = n % folds;
        let mut scores = vec![0.0f64; alpha_grid.len()];
        let mut start = 0;
        for f in 0..folds {
            let size = base + usize::from(f < rem);
            let val_idx = &order[start..start + size];
            start += size;
            let val_x = features.select_rows(val_idx);
            let val_y: Vec<f64> = val_idx.iter().map(|&r| labels[r]).collect();
            let fold_gram = val_x.gram();
            let val_targets =
                Matrix::column_vector(val_idx.iter().map(|&r| 2.0 * labels[r] - 1.0).collect())?;
            let fold_rhs = val_x.t_mul(&val_targets);
            let train_gram = full_gram.sub(&fold_gram);
            let train_rhs = full_rhs.sub(&fold_rhs);
            for (ai, &alpha) in alpha_grid.iter().enumerate() {
                let w = ridge_solve(&train_gram, &train_rhs, alpha, intercept)?;
                let preds = sign_classes(&matvec(&val_x, &w));
                scores[ai] += accuracy_against(&preds, &val_y);
            }
        }
        let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (ai, &alpha) in alpha_grid.iter().enumerate() {
            let acc = scores[ai] / folds as f64;
            if acc > best.0 || (acc == best.0 && alpha > best.1) {
                best = (acc, alpha);
            }
        }
        best.1
    };

    let weights = ridge_solve(&full_gram, &full_rhs, chosen, intercept)?;
    let train_classes = sign_classes(&matvec(features, &weights));
    let mut model = LinearModel::new(weights, Task::Classification, Link::Sign);
    model.chosen_alpha = Some(chosen);
    model.training_accuracy = Some(accuracy_against(&train_classes, labels));
    Ok(model)
}

fn matvec(m: &Matrix, w: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|r| m.row(r).iter().zip(w).map(|(a, b)| a * b).sum())
        .collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Bernoulli log-likelihood of `beta`; probabilities are clamped away from
/// 0/1 so saturated fits stay finite.
pub fn logistic_log_likelihood(features: &Matrix, labels: &[f64], beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let p = sigmoid(dot(features.row(r), beta)).clamp(1e-15, 1.0 - 1e-15);
        ll += y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    ll
}

/// Gradient of the Bernoulli log-likelihood: `F^T (y - p)`.
pub fn logistic_gradient(features: &Matrix, labels: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; features.cols()];
    for (r, &y) in labels.iter().enumerate() {
        let row = features.row(r);
        let resid = y - sigmoid(dot(row, beta));
        for (gi, &x) in g.iter_mut().zip(row) {
            *gi += resid * x;
        }
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const IRLS_WEIGHT_FLOOR: f64 = 1e-10;
const MAX_HALVINGS: usize = 30;
/// Once every margin exceeds this the weight floor stalls the Newton steps
/// anyway (ln(1/IRLS_WEIGHT_FLOOR) ~ 23), so the fit is treated as capped.
const SATURATION_SCORE: f64 = 23.0;

/// Logistic regression via iteratively reweighted least squares with
/// step-halving. Converges when the gradient infinity-norm drops below
/// `tol`; perfectly separated data is returned early with
/// `separation_capped` set instead of diverging.
pub fn fit_logistic(
    features: &Matrix,
    labels: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<LinearModel> {
    fit_logistic_traced(features, labels, max_iter, tol).map(|(m, _)| m)
}

/// Same as [`fit_logistic`] but also returns the log-likelihood after the
/// initial iterate and after each accepted update (non-decreasing).
pub fn fit_logistic_traced(
    features: &Matrix,
    labels: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<(LinearModel, Vec<f64>)> {
    let n = features.rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "fit_logistic".into(),
            expected: format!("{n} labels"),
            actual: format!("{} labels", labels.len()),
        });
    }
    check_labels(labels)?;
    let p = features.cols();
    let mut beta = vec![0.0; p];
    let mut ll = logistic_log_likelihood(features, labels, &beta);
    let mut trace = vec![ll];
    let mut capped = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        // Separation first: a saturated separable fit can also satisfy the
        // gradient tolerance, but it must be reported as capped.
        if is_separated(features, labels, &beta) {
            capped = true;
            return Ok(finish_logistic(features, labels, beta, capped, iterations, trace));
        }
        let grad = logistic_gradient(features, labels, &beta);
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm <= tol {
            return Ok(finish_logistic(features, labels, beta, capped, iterations, trace));
        }

        // Weighted normal equations for the Newton step.
        let mut gram = Matrix::zeros(p, p);
        let mut rhs = vec![0.0; p];
        for (r, &y) in labels.iter().enumerate() {
            let row = features.row(r);
            let score = dot(row, &beta);
            let prob = sigmoid(score);
            let w = (prob * (1.0 - prob)).max(IRLS_WEIGHT_FLOOR);
            let z = score + (y - prob) / w;
            for i in 0..p {
                let wxi = w * row[i];
                rhs[i] += wxi * z;
                for j in i..p {
                    gram.set(i, j, gram.get(i, j) + wxi * row[j]);
                }
            }
        }
        mirror_lower(&mut gram);
        let proposal = solve_normal_equations(&gram, &Matrix::column_vector(rhs)?)?.column(0);

        // Step-halving toward the Newton proposal.
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = beta
                .iter()
                .zip(&proposal)
                .map(|(b, q)| b + t * (q - b))
                .collect();
            let cand_ll = logistic_log_likelihood(features, labels, &candidate);
            if cand_ll >= ll {
                accepted = Some((candidate, cand_ll));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((candidate, cand_ll)) => {
                beta = candidate;
                ll = cand_ll;
                trace.push(ll);
                iterations += 1;
            }
            None => {
                let grad = logistic_gradient(features, labels, &beta);
                let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                return Err(Error::NoConvergence {
                    iterations,
                    gradient_norm: gnorm,
                    last_weights: beta,
                });
            }
        }
    }

    if is_separated(features, labels, &beta) {
        return Ok(finish_logistic(features, labels, beta, true, iterations, trace));
    }
    let grad = logistic_gradient(features, labels, &beta);
    let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gnorm <= tol {
        return Ok(finish_logistic(features, labels, beta, capped, iterations, trace));
    }
    Err(Error::NoConvergence {
        iterations,
        gradient_norm: gnorm,
        last_weights: beta,
    })
}

fn mirror_lower(gram: &mut Matrix) {
    let p = gram.cols();
    for i in 0..p {
        for j in 0..i {
            gram.set(i, j, gram.get(j, i));
        }
    }
}

/// Perfect separation: every score is on the right side and saturated.
fn is_separated(features: &Matrix, labels: &[f64], beta: &[f64]) -> bool {
    let mut min_abs = f64::INFINITY;
    for (r, &y) in labels.iter().enumerate() {
        let score = dot(features.row(r), beta);
        let correct = (y == 1.0 && score > 0.0) || (y == 0.0 && score < 0.0);
        if !correct {
            return false;
        }
        min_abs = min_abs.min(score.abs());
    }
    min_abs > SATURATION_SCORE
}

fn finish_logistic(
    features: &Matrix,
    labels: &[f64],
    beta: Vec<f64>,
    capped: bool,
    iterations: usize,
    trace: Vec<f64>,
) -> (LinearModel, Vec<f64>) {
    let classes: Vec<f64> = (0..features.rows())
        .map(|r| f64::from(sigmoid(dot(features.row(r), &beta)) > 0.5))
        .collect();
    let mut model = LinearModel::new(beta, Task::Classification, Link::Sigmoid);
    model.training_accuracy = Some(accuracy_against(&classes, labels));
    model.separation_capped = capped;
    model.iterations = Some(iterations);
    (model, trace)
}

/// Apply a fitted model: raw scores (probabilities for logistic) and, for
/// classifiers, hard 0/1 labels under the strict thresholds.
pub fn predict(model: &LinearModel, features: &Matrix) -> Result<Predictions> {
    if features.cols() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            context: "predict".into(),
            expected: format!("{} feature columns", model.weights.len()),
            actual: format!("{} feature columns", features.cols()),
        });
    }
    let raw = matvec(features, &model.weights);
    Ok(match model.link {
        Link::Identity => Predictions {
            scores: raw,
            classes: None,
        },
        Link::Sign => {
            let classes = sign_classes(&raw);
            Predictions {
                scores: raw,
                classes: Some(classes),
            }
        }
        Link::Sigmoid => {
            let probs: Vec<f64> = raw.iter().map(|&z| sigmoid(z)).collect();
            let classes = probs.iter().map(|&p| f64::from(p > 0.5)).collect();
            Predictions {
                scores: probs,
                classes: Some(classes),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn with_intercept(xs: &[f64]) -> Matrix {
        Matrix::from_fn(xs.len(), 2, |r, c| if c == 0 { 1.0 } else { xs[r] })
    }

    #[test]
    fn ols_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let features = with_intercept(&xs);
        let targets = Matrix::column_vector(xs.iter().map(|x| 3.0 + 2.0 * x).collect()).unwrap();
        let m = fit_ols(&features, &targets).unwrap();
        assert_close(m.weights[0], 3.0, 1e-8);
        assert_close(m.weights[1], 2.0, 1e-8);
    }

    #[test]
    fn ols_constant_target() {
        let xs = [0.5, 1.5, -2.0, 3.0];
        let features = with_intercept(&xs);
        let targets = Matrix::column_vector(vec![7.0; 4]).unwrap();
        let m = fit_ols(&features, &targets).unwrap();
        assert_close(m.weights[0], 7.0, 1e-8);
        assert_close(m.weights[1], 0.0, 1e-8);
    }

    #[test]
    fn ridge_zero_alpha_equals_ols_on_encoded_labels() {
        let mut rng = Rng::new(4);
        let features = Matrix::from_fn(60, 3, |_, c| if c == 0 { 1.0 } else { rng.next_normal() });
        let labels: Vec<f64> = (0..60).map(|r| f64::from(features.get(r, 1) > 0.0)).collect();
        let ridge =
            fit_ridge_classifier(&features, &labels, &[0.0], 5, &mut Rng::new(1)).unwrap();
        let encoded = Matrix::column_vector(labels.iter().map(|&y| 2.0 * y - 1.0).collect()).unwrap();
        let ols = fit_ols(&features, &encoded).unwrap();
        for (a, b) in ridge.weights.iter().zip(&ols.weights) {
            assert_close(*a, *b, 1e-8);
        }
    }

    #[test]
    fn ridge_huge_alpha_shrinks_non_intercept_weights() {
        let mut rng = Rng::new(9);
        let features = Matrix::from_fn(80, 3, |_, c| if c == 0 { 1.0 } else { rng.next_normal() });
        let labels: Vec<f64> = (0..80).map(|r| f64::from(r % 2 == 0)).collect();
        let m = fit_ridge_classifier(&features, &labels, &[1e12], 5, &mut Rng::new(1)).unwrap();
        assert!(m.weights[1].abs() < 1e-6);
        assert!(m.weights[2].abs() < 1e-6);
    }

    #[test]
    fn ridge_tie_break_prefers_largest_alpha() {
        // strongly separated blobs: every alpha classifies perfectly, so the
        // tie-break should pick the largest grid value
        let n = 40;
        let features = Matrix::from_fn(n, 3, |r, c| match c {
            0 => 1.0,
            1 => {
                if r < n / 2 {
                    -2.0 + 0.01 * (r % 5) as f64
                } else {
                    2.0 + 0.01 * (r % 5) as f64
                }
            }
            _ => 0.02 * (r % 7) as f64,
        });
        let labels: Vec<f64> = (0..n).map(|r| f64::from(r >= n / 2)).collect();
        // every small alpha separates this perfectly, so all CV accuracies
        // tie at 1.0 and the tie-break must pick the largest grid value
        let grid = [0.0, 0.01, 0.1, 1.0];
        let m = fit_ridge_classifier(&features, &labels, &grid, 4, &mut Rng::new(3)).unwrap();
        assert_eq!(m.chosen_alpha, Some(1.0));
        assert_eq!(m.training_accuracy, Some(1.0));
    }

    #[test]
    fn ridge_training_residual_monotone_in_alpha() {
        let mut rng = Rng::new(12);
        let features = Matrix::from_fn(50, 4, |_, c| if c == 0 { 1.0 } else { rng.next_normal() });
        let labels: Vec<f64> = (0..50)
            .map(|r| f64::from(features.get(r, 1) + 0.5 * rng.next_normal() > 0.0))
            .collect();
        let encoded: Vec<f64> = labels.iter().map(|&y| 2.0 * y - 1.0).collect();
        let mut last = -1.0;
        for alpha in [0.0, 0.1, 1.0, 10.0, 100.0, 1000.0] {
            let m = fit_ridge_classifier(&features, &labels, &[alpha], 5, &mut Rng::new(1)).unwrap();
            let resid: f64 = (0..50)
                .map(|r| {
                    let s: f64 = features.row(r).iter().zip(&m.weights).map(|(a, b)| a * b).sum();
                    (encoded[r] - s).powi(2)
                })
                .sum();
            assert!(
                resid + 1e-9 >= last,
                "residual decreased: {resid} after {last} at alpha {alpha}"
            );
            last = resid;
        }
    }

    #[test]
    fn ridge_rejects_single_class() {
        let features = Matrix::from_fn(10, 2, |_, c| if c == 0 { 1.0 } else { 0.5 });
        let labels = vec![1.0; 10];
        assert!(matches!(
            fit_ridge_classifier(&features, &labels, &[1.0], 2, &mut Rng::new(1)),
            Err(Error::SingleClass { .. })
        ));
    }

    #[test]
    fn logistic_balanced_intercept_only() {
        let features = Matrix::from_fn(8, 1, |_, _| 1.0);
        let labels = vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let m = fit_logistic(&features, &labels, 100, 1e-8).unwrap();
        assert_close(m.weights[0], 0.0, 1e-10);
        let preds = predict(&m, &features).unwrap();
        assert_close(preds.scores[0], 0.5, 1e-10);
    }

    #[test]
    fn logistic_quarter_positive_intercept_only() {
        let features = Matrix::from_fn(16, 1, |_, _| 1.0);
        let labels: Vec<f64> = (0..16).map(|r| f64::from(r % 4 == 0)).collect();
        let m = fit_logistic(&features, &labels, 100, 1e-10).unwrap();
        assert_close(m.weights[0], (1.0f64 / 3.0).ln(), 1e-8);
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let mut rng = Rng::new(33);
        let features = Matrix::from_fn(40, 3, |_, c| if c == 0 { 1.0 } else { rng.next_normal() });
        let labels: Vec<f64> = (0..40)
            .map(|r| f64::from(features.get(r, 1) - 0.3 + rng.next_normal() > 0.0))
            .collect();
        let m = fit_logistic(&features, &labels, 100, 1e-8).unwrap();
        let g_hat = logistic_gradient(&features, &labels, &m.weights);
        let gmax = g_hat.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(gmax <= 1e-8, "gradient at optimum {gmax}");

        // central differences at a few random points
        for trial in 0..5 {
            let beta: Vec<f64> = (0..3).map(|i| 0.3 * ((trial + i) as f64 - 2.0)).collect();
            let g = logistic_gradient(&features, &labels, &beta);
            let h = 1e-5;
            for i in 0..3 {
                let mut plus = beta.clone();
                let mut minus = beta.clone();
                plus[i] += h;
                minus[i] -= h;
                let fd = (logistic_log_likelihood(&features, &labels, &plus)
                    - logistic_log_likelihood(&features, &labels, &minus))
                    / (2.0 * h);
                let denom = g[i].abs().max(1.0);
                assert!(
                    (g[i] - fd).abs() / denom <= 1e-4,
                    "component {i}: {} vs fd {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn logistic_loglik_trace_non_decreasing() {
        let mut rng = Rng::new(8);
        let features = Matrix::from_fn(60, 3, |_, c| if c == 0 { 1.0 } else { rng.next_normal() });
        let labels: Vec<f64> = (0..60)
            .map(|r| f64::from(0.8 * features.get(r, 1) + rng.next_normal() > 0.0))
            .collect();
        let (_, trace) = fit_logistic_traced(&features, &labels, 100, 1e-8).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "log-likelihood decreased: {w:?}");
        }
    }

    #[test]
    fn logistic_flags_perfect_separation() {
        let features = Matrix::from_fn(20, 2, |r, c| {
            if c == 0 {
                1.0
            } else if r < 10 {
                -1.0 - 0.05 * r as f64
            } else {
                1.0 + 0.05 * (r - 10) as f64
            }
        });
        let labels: Vec<f64> = (0..20).map(|r| f64::from(r >= 10)).collect();
        let m = fit_logistic(&features, &labels, 200, 1e-12).unwrap();
        assert!(m.separation_capped);
        assert_eq!(m.training_accuracy, Some(1.0));
    }

    #[test]
    fn predict_zero_weights_and_known_line() {
        let features = with_intercept(&[5.0]);
        let zero = LinearModel::new(vec![0.0, 0.0], Task::Classification, Link::Sign);
        let preds = predict(&zero, &features).unwrap();
        assert_eq!(preds.scores, vec![0.0]);
        assert_eq!(preds.classes, Some(vec![0.0])); // strict threshold: 0 is class 0

        let line = LinearModel::new(vec![3.0, 2.0], Task::Regression, Link::Identity);
        let preds = predict(&line, &features).unwrap();
        assert_eq!(preds.scores, vec![13.0]);
        assert!(preds.classes.is_none());
    }

    #[test]
    fn predict_dimension_mismatch() {
        let m = LinearModel::new(vec![1.0, 2.0], Task::Regression, Link::Identity);
        let features = Matrix::zeros(3, 3);
        assert!(matches!(
            predict(&m, &features),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ridge_self_consistent_training_accuracy() {
        let mut rng = Rng::new(19);
        let features = Matrix::from_fn(100, 3, |_, c| if c == 0 { 1.0 } else { rng.next_normal() });
        let labels: Vec<f64> = (0..100)
            .map(|r| f64::from(features.get(r, 1) + 0.7 * rng.next_normal() > 0.0))
            .collect();
        let m = fit_ridge_classifier(
            &features,
            &labels,
            &default_ridge_alphas(),
            10,
            &mut Rng::new(2),
        )
        .unwrap();
        let preds = predict(&m, &features).unwrap();
        let acc = accuracy_against(preds.classes.as_ref().unwrap(), &labels);
        assert_eq!(Some(acc), m.training_accuracy);
    }

    #[test]
    fn fits_are_deterministic() {
        let mut rng = Rng::new(77);
        let features = Matrix::from_fn(50, 3, |_, c| if c == 0 { 1.0 } else { rng.next_normal() });
        let labels: Vec<f64> = (0..50).map(|r| f64::from(r % 3 == 0)).collect();
        let a = fit_ridge_classifier(&features, &labels, &default_ridge_alphas(), 5, &mut Rng::new(5))
            .unwrap();
        let b = fit_ridge_classifier(&features, &labels, &default_ridge_alphas(), 5, &mut Rng::new(5))
            .unwrap();
        assert_eq!(a, b);
    }
}
