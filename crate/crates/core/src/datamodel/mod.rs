//! Dataset representation and the preprocessing toolbox: column-partitioned
//! tables, train/test splitting, dummy expansion, binarization, per-group
//! quantile (rank) transforms, class-balancing resampling, and the
//! correlated-attribute filter.

mod load;
mod schema;

pub use load::load_csv;
pub use schema::{Binarize, ColKind, ColumnSpec, Direction, MissingPolicy, Role, Schema};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Rng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

/// Column-partitioned data table: sensitive block `S`, non-sensitive block
/// `X`, explanatory block `Z` (usually just an intercept column), and the
/// target `Y`. All blocks share one row count and values are immutable after
/// construction; every transform returns a new dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub s: Matrix,
    pub x: Matrix,
    pub z: Matrix,
    pub y: Matrix,
    pub s_names: Vec<String>,
    pub x_names: Vec<String>,
    pub z_names: Vec<String>,
    pub task: Task,
}

impl Dataset {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        s: Matrix,
        x: Matrix,
        z: Matrix,
        y: Matrix,
        s_names: Vec<String>,
        x_names: Vec<String>,
        z_names: Vec<String>,
        task: Task,
    ) -> Result<Self> {
        let n = y.rows();
        if n == 0 {
            return Err(Error::invalid("dataset must contain at least one row"));
        }
        for (block, rows) in [("S", s.rows()), ("X", x.rows()), ("Z", z.rows())] {
            if rows != n {
                return Err(Error::DimensionMismatch {
                    context: format!("Dataset block {block}"),
                    expected: format!("{n} rows"),
                    actual: format!("{rows} rows"),
                });
            }
        }
        if y.cols() != 1 {
            return Err(Error::DimensionMismatch {
                context: "Dataset target".into(),
                expected: "1 column".into(),
                actual: format!("{} columns", y.cols()),
            });
        }
        if s_names.len() != s.cols() || x_names.len() != x.cols() || z_names.len() != z.cols() {
            return Err(Error::invalid("column name count does not match block width"));
        }
        if task == Task::Classification {
            for r in 0..n {
                let v = y.get(r, 0);
                if v != 0.0 && v != 1.0 {
                    return Err(Error::invalid(format!(
                        "classification target must be 0 or 1, found {v} at row {r}"
                    )));
                }
            }
        }
        Ok(Dataset {
            s,
            x,
            z,
            y,
            s_names,
            x_names,
            z_names,
            task,
        })
    }

    pub fn n(&self) -> usize {
        self.y.rows()
    }

    pub fn subset_rows(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.s.select_rows(indices),
            self.x.select_rows(indices),
            self.z.select_rows(indices),
            self.y.select_rows(indices),
            self.s_names.clone(),
            self.x_names.clone(),
            self.z_names.clone(),
            self.task,
        )
    }

    /// The direct feature matrix `[X | Z]` used by the no-residualization baseline.
    pub fn features_xz(&self) -> Matrix {
        Matrix::hstack(&[&self.x, &self.z])
    }

    pub fn y_vec(&self) -> Vec<f64> {
        self.y.column(0)
    }

    /// Class counts `(n0, n1)` for a classification target.
    pub fn class_counts(&self) -> (usize, usize) {
        let mut n0 = 0;
        let mut n1 = 0;
        for r in 0..self.n() {
            if self.y.get(r, 0) == 1.0 {
                n1 += 1;
            } else {
                n0 += 1;
            }
        }
        (n0, n1)
    }
}

pub fn is_binary_values(values: &[f64]) -> bool {
    values.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Indices of X columns holding anything other than 0/1 values.
pub fn non_binary_x_columns(ds: &Dataset) -> Vec<usize> {
    (0..ds.x.cols())
        .filter(|&c| !is_binary_values(&ds.x.column(c)))
        .collect()
}

/// Elementwise threshold indicator on a numeric column.
pub fn binarize_threshold(values: &[f64], cut: f64, positive_when: Direction) -> Vec<f64> {
    debug_assert!(cut.is_finite());
    values
        .iter()
        .map(|&v| {
            let hit = match positive_when {
                Direction::Ge => v >= cut,
                Direction::Le => v <= cut,
                Direction::Gt => v > cut,
                Direction::Lt => v < cut,
            };
            if hit {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// One-hot expansion of a categorical column. The category list is learned
/// from training data in first-appearance order; applying to a value outside
/// the learned list is an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DummyEncoder {
    categories: Vec<String>,
}

impl DummyEncoder {
    pub fn fit<S: AsRef<str>>(values: &[S]) -> Self {
        let mut categories: Vec<String> = Vec::new();
        for v in values {
            if !categories.iter().any(|c| c == v.as_ref()) {
                categories.push(v.as_ref().to_string());
            }
        }
        DummyEncoder { categories }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn apply<S: AsRef<str>>(&self, values: &[S], column: &str) -> Result<Matrix> {
        let k = self.categories.len();
        let mut m = Matrix::zeros(values.len(), k);
        for (r, v) in values.iter().enumerate() {
            let idx = self
                .categories
                .iter()
                .position(|c| c == v.as_ref())
                .ok_or_else(|| Error::UnseenCategory {
                    column: column.to_string(),
                    value: v.as_ref().to_string(),
                })?;
            m.set(r, idx, 1.0);
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SplitKind {
    Holdout { train_fraction: f64 },
    Kfold { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub kind: SplitKind,
    pub seed: u64,
    pub stratify_on_target: bool,
    pub repeats: usize,
}

impl SplitPlan {
    pub fn holdout(train_fraction: f64, seed: u64) -> Self {
        SplitPlan {
            kind: SplitKind::Holdout { train_fraction },
            seed,
            stratify_on_target: false,
            repeats: 1,
        }
    }

    pub fn kfold(k: usize, seed: u64) -> Self {
        SplitPlan {
            kind: SplitKind::Kfold { k },
            seed,
            stratify_on_target: false,
            repeats: 1,
        }
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.repeats = repeats;
        self
    }
}

/// Deterministic train/test splitting.
///
/// Holdout takes `ceil(n * train_fraction)` rows for training after a seeded
/// shuffle; k-fold shuffles then cuts k contiguous folds whose sizes differ
/// by at most one (the first `n mod k` folds get the extra row). Repeats
/// re-seed as `seed + repeat_index`.
pub fn split(ds: &Dataset, plan: &SplitPlan) -> Result<Vec<(Dataset, Dataset)>> {
    if plan.repeats < 1 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    match plan.kind {
        SplitKind::Holdout { train_fraction } => {
            if !(train_fraction > 0.0 && train_fraction < 1.0) {
                return Err(Error::invalid(format!(
                    "train_fraction must lie in (0,1), got {train_fraction}"
                )));
            }
            if ds.n() < 2 {
                return Err(Error::invalid("holdout split needs at least 2 rows"));
            }
        }
        SplitKind::Kfold { k } => {
            if k < 2 {
                return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
            }
            if k > ds.n() {
                return Err(Error::invalid(format!(
                    "k-fold needs k <= n, got k = {k}, n = {}",
                    ds.n()
                )));
            }
        }
    }
    let mut out = Vec::new();
    for repeat in 0..plan.repeats {
        let mut rng = Rng::new(plan.seed.wrapping_add(repeat as u64));
        let strata = stratum_indices(ds, plan.stratify_on_target, &mut rng);
        match plan.kind {
            SplitKind::Holdout { train_fraction } => {
                let mut train_idx = Vec::new();
                let mut test_idx = Vec::new();
                for stratum in &strata {
                    let take = ((stratum.len() as f64) * train_fraction).ceil() as usize;
                    train_idx.extend_from_slice(&stratum[..take.min(stratum.len())]);
                    test_idx.extend_from_slice(&stratum[take.min(stratum.len())..]);
                }
                if test_idx.is_empty() {
                    return Err(Error::invalid(
                        "holdout split left an empty test set; lower train_fraction",
                    ));
                }
                out.push((ds.subset_rows(&train_idx)?, ds.subset_rows(&test_idx)?));
            }
            SplitKind::Kfold { k } => {
                let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
                if plan.stratify_on_target {
                    for stratum in &strata {
                        for (i, &row) in stratum.iter().enumerate() {
                            folds[i % k].push(row);
                        }
                    }
                } else {
                    let order = &strata[0];
                    let n = order.len();
                    let base = n / k;
                    let rem = n % k;
                    let mut start = 0;
                    for (f, fold) in folds.iter_mut().enumerate() {
                        let size = base + usize::from(f < rem);
                        fold.extend_from_slice(&order[start..start + size]);
                        start += size;
                    }
                }
                for f in 0..k {
                    let test_idx = &folds[f];
                    let mut train_idx = Vec::with_capacity(ds.n() - test_idx.len());
                    for (g, fold) in folds.iter().enumerate() {
                        if g != f {
                            train_idx.extend_from_slice(fold);
                        }
                    }
                    out.push((ds.subset_rows(&train_idx)?, ds.subset_rows(test_idx)?));
                }
            }
        }
    }
    Ok(out)
}

/// Shuffled row indices, one vector per stratum (a single vector when
/// stratification is off).
fn stratum_indices(ds: &Dataset, stratify: bool, rng: &mut Rng) -> Vec<Vec<usize>> {
    if stratify {
        let mut zero = Vec::new();
        let mut one = Vec::new();
        for r in 0..ds.n() {
            if ds.y.get(r, 0) == 1.0 {
                one.push(r);
            } else {
                zero.push(r);
            }
        }
        let mut strata: Vec<Vec<usize>> = [zero, one].into_iter().filter(|v| !v.is_empty()).collect();
        for s in strata.iter_mut() {
            rng.shuffle(s);
        }
        strata
    } else {
        let mut all: Vec<usize> = (0..ds.n()).collect();
        rng.shuffle(&mut all);
        vec![all]
    }
}

/// Oversample the minority class with replacement until the class counts are
/// equal, then reshuffle the row order. Seeded and deterministic.
pub fn resample_balance(train: &Dataset, rng: &mut Rng) -> Result<Dataset> {
    if train.task != Task::Classification {
        return Err(Error::invalid(
            "resample_balance applies to classification datasets only",
        ));
    }
    let (n0, n1) = train.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass {
            label: if n0 == 0 { 1.0 } else { 0.0 },
        });
    }
    let minority_label = if n0 < n1 { 0.0 } else { 1.0 };
    let minority: Vec<usize> = (0..train.n())
        .filter(|&r| train.y.get(r, 0) == minority_label)
        .collect();
    let deficit = n0.abs_diff(n1);
    let mut indices: Vec<usize> = (0..train.n()).collect();
    for _ in 0..deficit {
        indices.push(minority[rng.next_below(minority.len() as u64) as usize]);
    }
    rng.shuffle(&mut indices);
    train.subset_rows(&indices)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        None
    } else {
        Some(cov / (va * vb).sqrt())
    }
}

/// Remove every X column whose absolute Pearson correlation with the target
/// exceeds `threshold`. Constant columns are kept (their correlation is
/// treated as zero). Computed on the dataset as given, so callers that want
/// the pre-split semantics must apply it before splitting.
pub fn drop_correlated_with_target(ds: &Dataset, threshold: f64) -> Result<Dataset> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "drop-correlated threshold must lie in (0,1], got {threshold}"
        )));
    }
    let y = ds.y_vec();
    if pearson(&y, &y).is_none() {
        return Err(Error::ZeroVariance("target".into()));
    }
    let mut keep = vec![true; ds.x.cols()];
    for c in 0..ds.x.cols() {
        if let Some(r) = pearson(&ds.x.column(c), &y) {
            if r.abs() > threshold {
                keep[c] = false;
            }
        }
    }
    if keep.iter().all(|k| !k) {
        return Err(Error::invalid(
            "correlation filter removed every non-sensitive column",
        ));
    }
    let x_names = ds
        .x_names
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(n, _)| n.clone())
        .collect();
    Dataset::new(
        ds.s.clone(),
        ds.x.select_cols(&keep),
        ds.z.clone(),
        ds.y.clone(),
        ds.s_names.clone(),
        x_names,
        ds.z_names.clone(),
        ds.task,
    )
}

/// Per-group rank maps fitted on training data for the quantile (ordinal)
/// transform: a value maps to the fraction of same-group training values
/// strictly below it.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMaps {
    attrs: Vec<usize>,
    groups: BTreeMap<String, Vec<Vec<f64>>>,
}

fn group_key(s: &Matrix, row: usize) -> Result<String> {
    let mut key = String::with_capacity(s.cols());
    for c in 0..s.cols() {
        let v = s.get(row, c);
        if v == 0.0 {
            key.push('0');
        } else if v == 1.0 {
            key.push('1');
        } else {
            return Err(Error::invalid(format!(
                "quantile transform requires binary (or dummy-expanded) sensitive \
                 attributes; found {v} in sensitive column {c}"
            )));
        }
    }
    Ok(key)
}

/// Fit the per-group quantile transform over the selected X columns.
pub fn quantile_transform_fit(train: &Dataset, attrs: &[usize]) -> Result<RankMaps> {
    for &a in attrs {
        if a >= train.x.cols() {
            return Err(Error::invalid(format!(
                "quantile transform attribute index {a} out of range"
            )));
        }
    }
    let mut groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for r in 0..train.n() {
        let key = group_key(&train.s, r)?;
        let entry = groups
            .entry(key)
            .or_insert_with(|| vec![Vec::new(); attrs.len()]);
        for (i, &a) in attrs.iter().enumerate() {
            entry[i].push(train.x.get(r, a));
        }
    }
    if groups.is_empty() {
        return Err(Error::EmptyGroup("no training rows to fit rank maps".into()));
    }
    for values in groups.values_mut() {
        for v in values.iter_mut() {
            v.sort_unstable_by(f64::total_cmp);
        }
    }
    Ok(RankMaps {
        attrs: attrs.to_vec(),
        groups,
    })
}

/// Apply fitted rank maps; selected columns are replaced by their within-group
/// rank fraction in [0, 1). Rows whose sensitive pattern was never seen in
/// training are an error.
pub fn quantile_transform_apply(maps: &RankMaps, ds: &Dataset) -> Result<Dataset> {
    let mut x = ds.x.clone();
    for r in 0..ds.n() {
        let key = group_key(&ds.s, r)?;
        let sorted = maps.groups.get(&key).ok_or_else(|| {
            Error::EmptyGroup(format!("sensitive group '{key}' not present in training data"))
        })?;
        for (i, &a) in maps.attrs.iter().enumerate() {
            let v = ds.x.get(r, a);
            let below = sorted[i].partition_point(|&t| t < v);
            x.set(r, a, below as f64 / sorted[i].len() as f64);
        }
    }
    Dataset::new(
        ds.s.clone(),
        x,
        ds.z.clone(),
        ds.y.clone(),
        ds.s_names.clone(),
        ds.x_names.clone(),
        ds.z_names.clone(),
        ds.task,
    )
}
