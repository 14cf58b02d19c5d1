//! Synthetic data generation and the parameter-sweep experiment.
//!
//! Data follows the standard two-stage generating process: a latent block
//! `(eta, s)` drawn jointly from a block covariance, attributes
//! `x = s' B_s + eta`, independent explanatory noise `z`, and a target
//! `y = x' beta_x + z' beta_z + eps`. Sweeps compare the no-residualization
//! baseline against the two-stage remover while one generator parameter
//! varies, averaging the absolute correlation between `s` and the test
//! predictions plus the test RMSE over seeded runs.

use crate::datamodel::{split, Dataset, SplitPlan, Task};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, sample_mvn, Matrix, Rng};
use crate::metrics::{correlation_coefficient, rmse};
use crate::twostage::{
    fit_2sdr, fit_direct, predict_2sdr, predict_direct, FirstStageOptions, SecondStageSpec,
};
use serde::{Deserialize, Serialize};

/// Generator parameters. `sigma_eps` is a standard deviation; `sigma_eta`
/// and `sigma_z` are covariance diagonals; `sigma_s` and the cross block
/// `sigma_eta_s` are full (co)variance matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub d_x: usize,
    pub d_z: usize,
    pub d_s: usize,
    pub sigma_eps: f64,
    pub sigma_eta: Vec<f64>,
    pub sigma_z: Vec<f64>,
    pub sigma_s: Matrix,
    pub sigma_eta_s: Matrix,
    pub beta_x: Vec<f64>,
    pub beta_z: Vec<f64>,
    pub beta_s: Matrix,
    pub n: usize,
    pub train_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let d_x = 5;
        let d_z = 5;
        let d_s = 1;
        SynthConfig {
            d_x,
            d_z,
            d_s,
            sigma_eps: 3.0,
            sigma_eta: vec![1.0; d_x],
            sigma_z: vec![1.0; d_z],
            sigma_s: Matrix::identity(d_s),
            sigma_eta_s: Matrix::from_fn(d_x, d_s, |_, _| 0.3),
            beta_x: vec![0.5; d_x],
            beta_z: vec![0.5; d_z],
            beta_s: Matrix::from_fn(d_s, d_x, |_, _| 0.2),
            n: 1000,
            train_fraction: 2.0 / 3.0,
        }
    }
}

impl SynthConfig {
    /// The joint covariance of `(eta, s)`:
    /// `[[diag(sigma_eta), sigma_eta_s], [sigma_eta_s', sigma_s]]`.
    pub fn block_covariance(&self) -> Matrix {
        let d = self.d_x + self.d_s;
        Matrix::from_fn(d, d, |i, j| {
            if i < self.d_x && j < self.d_x {
                if i == j {
                    self.sigma_eta[i]
                } else {
                    0.0
                }
            } else if i < self.d_x {
                self.sigma_eta_s.get(i, j - self.d_x)
            } else if j < self.d_x {
                self.sigma_eta_s.get(j, i - self.d_x)
            } else {
                self.sigma_s.get(i - self.d_x, j - self.d_x)
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_eta.len() != self.d_x
            || self.beta_x.len() != self.d_x
            || self.sigma_z.len() != self.d_z
            || self.beta_z.len() != self.d_z
            || self.sigma_s.rows() != self.d_s
            || self.sigma_s.cols() != self.d_s
            || self.sigma_eta_s.rows() != self.d_x
            || self.sigma_eta_s.cols() != self.d_s
            || self.beta_s.rows() != self.d_s
            || self.beta_s.cols() != self.d_x
        {
            return Err(Error::invalid(
                "synth config dimensions are inconsistent with d_x/d_z/d_s",
            ));
        }
        if self.sigma_eps <= 0.0 || !self.sigma_eps.is_finite() {
            return Err(Error::invalid("sigma_eps must be positive and finite"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train_fraction must lie in (0,1)"));
        }
        if self.n < 4 {
            return Err(Error::invalid("synthetic datasets need n >= 4"));
        }
        // positive definiteness of the joint block
        cholesky(&self.block_covariance())?;
        Ok(())
    }

    fn with_axis(&self, axis: SweepAxis, value: f64) -> SynthConfig {
        let mut cfg = self.clone();
        match axis {
            SweepAxis::N => {
                cfg.n = value.round().max(0.0) as usize;
            }
            SweepAxis::DX => {
                let d_x = value.round().max(1.0) as usize;
                cfg.d_x = d_x;
                cfg.sigma_eta = vec![self.sigma_eta[0]; d_x];
                cfg.beta_x = vec![self.beta_x[0]; d_x];
                cfg.sigma_eta_s = Matrix::from_fn(d_x, self.d_s, |_, _| self.sigma_eta_s.get(0, 0));
                cfg.beta_s = Matrix::from_fn(self.d_s, d_x, |_, _| self.beta_s.get(0, 0));
            }
            SweepAxis::SigmaEtaS => {
                cfg.sigma_eta_s = Matrix::from_fn(self.d_x, self.d_s, |_, _| value);
            }
            SweepAxis::StdS => {
                cfg.sigma_s = Matrix::from_fn(self.d_s, self.d_s, |i, j| {
                    if i == j {
                        value * value
                    } else {
                        self.sigma_s.get(i, j)
                    }
                });
            }
        }
        cfg
    }
}

/// Draw one dataset from the generating process. The explanatory block is
/// the raw `z` noise; no intercept column is appended (the coefficients are
/// centered by construction).
pub fn generate(cfg: &SynthConfig, rng: &mut Rng) -> Result<Dataset> {
    cfg.validate()?;
    let joint = sample_mvn(
        &vec![0.0; cfg.d_x + cfg.d_s],
        &cfg.block_covariance(),
        cfg.n,
        rng,
    )?;
    let sigma_z =
        Matrix::from_fn(cfg.d_z, cfg.d_z, |i, j| if i == j { cfg.sigma_z[i] } else { 0.0 });
    let z = sample_mvn(&vec![0.0; cfg.d_z], &sigma_z, cfg.n, rng)?;
    let eps: Vec<f64> = (0..cfg.n).map(|_| cfg.sigma_eps * rng.next_normal()).collect();

    let s = Matrix::from_fn(cfg.n, cfg.d_s, |r, c| joint.get(r, cfg.d_x + c));
    let x = Matrix::from_fn(cfg.n, cfg.d_x, |r, k| {
        let mut v = joint.get(r, k); // eta
        for j in 0..cfg.d_s {
            v += s.get(r, j) * cfg.beta_s.get(j, k);
        }
        v
    });
    let y = Matrix::from_fn(cfg.n, 1, |r, _| {
        let mut v = eps[r];
        for k in 0..cfg.d_x {
            v += x.get(r, k) * cfg.beta_x[k];
        }
        for j in 0..cfg.d_z {
            v += z.get(r, j) * cfg.beta_z[j];
        }
        v
    });
    Dataset::new(
        s,
        x,
        z,
        y,
        (0..cfg.d_s).map(|i| format!("s{i}")).collect(),
        (0..cfg.d_x).map(|i| format!("x{i}")).collect(),
        (0..cfg.d_z).map(|i| format!("z{i}")).collect(),
        Task::Regression,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    N,
    DX,
    SigmaEtaS,
    StdS,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::DX => "d_x",
            SweepAxis::SigmaEtaS => "sigma_eta_s",
            SweepAxis::StdS => "std_s",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "n" => Ok(SweepAxis::N),
            "d_x" => Ok(SweepAxis::DX),
            "sigma_eta_s" => Ok(SweepAxis::SigmaEtaS),
            "std_s" => Ok(SweepAxis::StdS),
            other => Err(Error::invalid(format!(
                "unknown sweep axis '{other}' (expected n, d_x, sigma_eta_s, std_s)"
            ))),
        }
    }

    fn tag(self) -> u64 {
        match self {
            SweepAxis::N => 0,
            SweepAxis::DX => 1,
            SweepAxis::SigmaEtaS => 2,
            SweepAxis::StdS => 3,
        }
    }
}

/// One aggregated sweep cell. Invalid points (the perturbed configuration is
/// not positive definite) carry `valid = false`, NaN statistics and zero runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis: String,
    pub value: f64,
    pub algorithm: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub runs: usize,
    pub valid: bool,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Run the sweep: for every axis value and every seeded run, generate a
/// dataset, split, fit the baseline and the two-stage remover (both with a
/// least-squares second stage), and record `|corr(s, y_hat_test)|` and test
/// RMSE. Cell seeds derive from (axis, value index, run index), so any cell
/// is reproducible in isolation.
pub fn sweep(
    cfg_base: &SynthConfig,
    axis: SweepAxis,
    values: &[f64],
    runs: usize,
    rng: &Rng,
) -> Result<Vec<SweepCell>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one axis value"));
    }
    if runs == 0 {
        return Err(Error::invalid("sweep needs at least one run"));
    }
    let mut cells = Vec::new();
    for (vi, &value) in values.iter().enumerate() {
        let cfg = cfg_base.with_axis(axis, value);
        if cfg.validate().is_err() {
            for algorithm in ["ols", "2sdr"] {
                for metric in ["abs_cc", "rmse"] {
                    cells.push(SweepCell {
                        axis: axis.as_str().into(),
                        value,
                        algorithm: algorithm.into(),
                        metric: metric.into(),
                        mean: f64::NAN,
                        stderr: f64::NAN,
                        runs: 0,
                        valid: false,
                    });
                }
            }
            continue;
        }
        let mut ols_cc = Vec::with_capacity(runs);
        let mut ols_rmse = Vec::with_capacity(runs);
        let mut two_cc = Vec::with_capacity(runs);
        let mut two_rmse = Vec::with_capacity(runs);
        for run in 0..runs {
            let mut cell_rng = rng.derive(&[axis.tag(), vi as u64, run as u64]);
            let ds = generate(&cfg, &mut cell_rng)?;
            let plan = SplitPlan::holdout(cfg.train_fraction, cell_rng.next_u64());
            let (train, test) = split(&ds, &plan)?.remove(0);
            let s_test = test.s.column(0);
            let y_test = test.y_vec();

            let mut fit_rng = cell_rng.derive(&[1]);
            let baseline = fit_direct(&train, &SecondStageSpec::Ols, &mut fit_rng)?;
            let preds = predict_direct(&baseline, &test)?;
            ols_cc.push(correlation_coefficient(&preds.scores, &s_test)?.abs());
            ols_rmse.push(rmse(&preds.scores, &y_test)?);

            let mut fit_rng = cell_rng.derive(&[2]);
            let predictor = fit_2sdr(
                &train,
                &SecondStageSpec::Ols,
                &FirstStageOptions::default(),
                &mut fit_rng,
            )?;
            let preds = predict_2sdr(&predictor, &test)?;
            two_cc.push(correlation_coefficient(&preds.scores, &s_test)?.abs());
            two_rmse.push(rmse(&preds.scores, &y_test)?);
        }
        for (algorithm, series) in [
            ("ols", [&ols_cc, &ols_rmse]),
            ("2sdr", [&two_cc, &two_rmse]),
        ] {
            for (metric, values_run) in ["abs_cc", "rmse"].iter().zip(series) {
                let (mean, stderr) = mean_stderr(values_run);
                cells.push(SweepCell {
                    axis: axis.as_str().into(),
                    value,
                    algorithm: algorithm.into(),
                    metric: (*metric).into(),
                    mean,
                    stderr,
                    runs,
                    valid: true,
                });
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        correlation_coefficient(a, b).unwrap()
    }

    #[test]
    fn defaults_are_valid_and_shapes_match() {
        let cfg = SynthConfig::default();
        cfg.validate().unwrap();
        let ds = generate(&cfg, &mut Rng::new(1)).unwrap();
        assert_eq!(ds.n(), 1000);
        assert_eq!(ds.s.cols(), 1);
        assert_eq!(ds.x.cols(), 5);
        assert_eq!(ds.z.cols(), 5);
        assert_eq!(ds.task, Task::Regression);
        assert!(!ds.z_names.contains(&"intercept".to_string()));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::default();
        let a = generate(&cfg, &mut Rng::new(42)).unwrap();
        let b = generate(&cfg, &mut Rng::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_variance_matches_configured_scale() {
        // sigma_eps is a standard deviation: residual variance must be ~9.0
        let cfg = SynthConfig {
            n: 100_000,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg, &mut Rng::new(7)).unwrap();
        let mut resid = Vec::with_capacity(cfg.n);
        for r in 0..cfg.n {
            let mut v = ds.y.get(r, 0);
            for k in 0..cfg.d_x {
                v -= cfg.beta_x[k] * ds.x.get(r, k);
            }
            for j in 0..cfg.d_z {
                v -= cfg.beta_z[j] * ds.z.get(r, j);
            }
            resid.push(v);
        }
        let m = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / resid.len() as f64;
        let target = cfg.sigma_eps * cfg.sigma_eps;
        assert!(
            (var - target).abs() <= 0.03 * target,
            "residual variance {var}, configured {target}"
        );
    }

    #[test]
    fn correlation_matches_population_oracle() {
        let cfg = SynthConfig {
            n: 100_000,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg, &mut Rng::new(3)).unwrap();
        let s = ds.s.column(0);
        // population: corr(s, x_k) = (beta_s sigma_s + sigma_eta_s) / sqrt(var(x) sigma_s)
        let cov_sx = cfg.beta_s.get(0, 0) * 1.0 + cfg.sigma_eta_s.get(0, 0);
        let var_x = cfg.beta_s.get(0, 0).powi(2) + 2.0 * cfg.beta_s.get(0, 0) * cfg.sigma_eta_s.get(0, 0)
            + cfg.sigma_eta[0];
        let expected = cov_sx / var_x.sqrt();
        for k in 0..cfg.d_x {
            let c = corr(&s, &ds.x.column(k));
            assert!(
                (c - expected).abs() <= 0.02,
                "column {k}: corr {c}, expected {expected}"
            );
        }
    }

    #[test]
    fn uncorrelated_config_is_uncorrelated() {
        let mut cfg = SynthConfig {
            n: 10_000,
            ..SynthConfig::default()
        };
        cfg.sigma_eta_s = Matrix::zeros(cfg.d_x, cfg.d_s);
        cfg.beta_s = Matrix::zeros(cfg.d_s, cfg.d_x);
        let ds = generate(&cfg, &mut Rng::new(5)).unwrap();
        let s = ds.s.column(0);
        for k in 0..cfg.d_x {
            assert!(corr(&s, &ds.x.column(k)).abs() <= 0.05);
        }
    }

    #[test]
    fn first_stage_recovers_population_regression_of_x_on_s() {
        let cfg = SynthConfig {
            n: 10_000,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg, &mut Rng::new(11)).unwrap();
        let model = crate::twostage::fit_first_stage(
            &ds.s,
            &ds.x,
            &crate::twostage::FirstStageOptions::default(),
        )
        .unwrap();
        // population slope: cov(x, s) / var(s) = (beta_s sigma_s + sigma_eta_s) / sigma_s
        let oracle = (cfg.beta_s.get(0, 0) * 1.0 + cfg.sigma_eta_s.get(0, 0)) / 1.0;
        for k in 0..cfg.d_x {
            let slope = model.coefficients.get(0, k);
            assert!(
                (slope - oracle).abs() <= 0.05,
                "column {k}: slope {slope}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn two_stage_removes_prediction_correlation_on_defaults() {
        let cfg = SynthConfig {
            n: 10_000,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg, &mut Rng::new(23)).unwrap();
        let (train, test) = split(&ds, &SplitPlan::holdout(cfg.train_fraction, 4))
            .unwrap()
            .remove(0);
        let s_test = test.s.column(0);

        let baseline = fit_direct(&train, &SecondStageSpec::Ols, &mut Rng::new(1)).unwrap();
        let ols_cc = corr(&predict_direct(&baseline, &test).unwrap().scores, &s_test).abs();

        let p = fit_2sdr(
            &train,
            &SecondStageSpec::Ols,
            &FirstStageOptions::default(),
            &mut Rng::new(1),
        )
        .unwrap();
        let two_cc = corr(&predict_2sdr(&p, &test).unwrap().scores, &s_test).abs();

        assert!(ols_cc > 0.3, "baseline |CC| unexpectedly small: {ols_cc}");
        assert!(two_cc <= 0.05, "two-stage |CC| too large: {two_cc}");
    }

    #[test]
    fn independent_s_makes_both_algorithms_agree() {
        // with no confounding and correction off, the two predictors are the
        // same linear map up to estimation noise
        let mut cfg = SynthConfig {
            n: 50_000,
            ..SynthConfig::default()
        };
        cfg.sigma_eta_s = Matrix::zeros(cfg.d_x, cfg.d_s);
        cfg.beta_s = Matrix::zeros(cfg.d_s, cfg.d_x);
        let ds = generate(&cfg, &mut Rng::new(31)).unwrap();
        let (train, test) = split(&ds, &SplitPlan::holdout(cfg.train_fraction, 8))
            .unwrap()
            .remove(0);
        let baseline = fit_direct(&train, &SecondStageSpec::Ols, &mut Rng::new(1)).unwrap();
        let ols_preds = predict_direct(&baseline, &test).unwrap().scores;
        let p = fit_2sdr(
            &train,
            &SecondStageSpec::Ols,
            &FirstStageOptions {
                variance_correction: false,
                ..FirstStageOptions::default()
            },
            &mut Rng::new(1),
        )
        .unwrap();
        let two_preds = predict_2sdr(&p, &test).unwrap().scores;
        let gap = rmse(&two_preds, &ols_preds).unwrap();
        assert!(gap <= 0.01, "prediction RMSE gap {gap}");
    }

    #[test]
    fn sweep_has_complete_cells_and_marks_invalid_points() {
        let cfg = SynthConfig {
            n: 200,
            ..SynthConfig::default()
        };
        // 0.9 makes the block covariance indefinite with d_x = 5
        let cells = sweep(&cfg, SweepAxis::SigmaEtaS, &[0.0, 0.3, 0.9], 3, &Rng::new(2)).unwrap();
        assert_eq!(cells.len(), 3 * 4);
        let valid: Vec<_> = cells.iter().filter(|c| c.valid).collect();
        let invalid: Vec<_> = cells.iter().filter(|c| !c.valid).collect();
        assert_eq!(valid.len(), 8);
        assert_eq!(invalid.len(), 4);
        assert!(invalid.iter().all(|c| c.value == 0.9 && c.runs == 0));
        assert!(valid.iter().all(|c| c.runs == 3 && c.mean.is_finite()));
    }

    #[test]
    fn sweep_cells_are_reproducible() {
        let cfg = SynthConfig {
            n: 150,
            ..SynthConfig::default()
        };
        let a = sweep(&cfg, SweepAxis::N, &[100.0, 200.0], 2, &Rng::new(6)).unwrap();
        let b = sweep(&cfg, SweepAxis::N, &[100.0, 200.0], 2, &Rng::new(6)).unwrap();
        assert_eq!(a, b);
    }
}
