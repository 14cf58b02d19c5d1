//! CSV ingestion driven by a [`Schema`].
//!
//! The loader reads an RFC-4180 file (header optional, delimiter
//! configurable), drops rows with missing values in drop-policy columns,
//! imputes median values where the schema says so, applies summarization
//! maps, expands categoricals into dummies in first-appearance order,
//! binarizes thresholded numerics, and assembles the role blocks. The same
//! file and schema always produce the identical dataset.

use std::path::Path;

use crate::datamodel::schema::{ColKind, MissingPolicy, Role, Schema};
use crate::datamodel::{binarize_threshold, Dataset, DummyEncoder};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A parsed column block ready for assembly.
struct Block {
    role: Role,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(schema.delimiter_byte()?)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: display.clone(),
            source: e,
        })?;

    let mut records = reader.records();
    let used: Vec<usize> = (0..schema.columns.len())
        .filter(|&i| schema.columns[i].role != Role::Ignore)
        .collect();

    // Map schema columns to file positions.
    let positions: Vec<usize> = if schema.has_header {
        let header = match records.next() {
            Some(r) => r.map_err(|e| Error::Csv {
                path: display.clone(),
                source: e,
            })?,
            None => return Err(Error::EmptyAfterDrop),
        };
        let names: Vec<&str> = header.iter().collect();
        schema
            .columns
            .iter()
            .map(|c| {
                names
                    .iter()
                    .position(|&h| h == c.name)
                    .ok_or_else(|| Error::UnknownColumn {
                        name: c.name.clone(),
                    })
            })
            .collect::<Result<Vec<usize>>>()?
    } else {
        (0..schema.columns.len()).collect()
    };

    // Raw cells per used column; None marks a missing value to impute.
    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); used.len()];
    let mut data_row = 0usize;
    for record in records {
        let record = record.map_err(|e| Error::Csv {
            path: display.clone(),
            source: e,
        })?;
        data_row += 1;
        if !schema.has_header && record.len() != schema.columns.len() {
            return Err(Error::Schema(format!(
                "data row {data_row} has {} fields but the header-less schema declares {}",
                record.len(),
                schema.columns.len()
            )));
        }
        let mut row: Vec<Option<String>> = Vec::with_capacity(used.len());
        let mut drop = false;
        for &ci in &used {
            let spec = &schema.columns[ci];
            let cell = record.get(positions[ci]).unwrap_or("");
            let is_missing = spec.missing.as_deref() == Some(cell);
            if is_missing {
                match spec.missing_policy {
                    MissingPolicy::DropRow => {
                        drop = true;
                        break;
                    }
                    MissingPolicy::ImputeMedian => row.push(None),
                }
            } else {
                row.push(Some(cell.to_string()));
            }
        }
        if drop {
            continue;
        }
        for (col, value) in cells.iter_mut().zip(row) {
            col.push(value);
        }
    }
    let n = cells.first().map_or(0, |c| c.len());
    if n == 0 {
        return Err(Error::EmptyAfterDrop);
    }

    let mut blocks: Vec<Block> = Vec::with_capacity(used.len());
    for (ui, &ci) in used.iter().enumerate() {
        let spec = &schema.columns[ci];
        let raw = &cells[ui];
        match spec.kind {
            ColKind::Numeric => {
                let mut values = vec![f64::NAN; n];
                let mut present = Vec::new();
                for (r, cell) in raw.iter().enumerate() {
                    if let Some(text) = cell {
                        let v: f64 = text.parse().map_err(|_| Error::BadCell {
                            row: r + 1,
                            column: spec.name.clone(),
                            value: text.clone(),
                        })?;
                        if !v.is_finite() {
                            return Err(Error::BadCell {
                                row: r + 1,
                                column: spec.name.clone(),
                                value: text.clone(),
                            });
                        }
                        values[r] = v;
                        present.push(v);
                    }
                }
                if present.len() < n {
                    if present.is_empty() {
                        return Err(Error::Schema(format!(
                            "column '{}' has no observed values to impute from",
                            spec.name
                        )));
                    }
                    let med = median(&mut present);
                    for v in values.iter_mut() {
                        if v.is_nan() {
                            *v = med;
                        }
                    }
                }
                let (values, name) = if let Some(binz) = spec.binarize {
                    (
                        binarize_threshold(&values, binz.cut, binz.positive_when),
                        spec.name.clone(),
                    )
                } else {
                    (values, spec.name.clone())
                };
                blocks.push(Block {
                    role: spec.role,
                    names: vec![name],
                    columns: vec![values],
                });
            }
            ColKind::Binary => {
                let mut values = Vec::with_capacity(n);
                for (r, cell) in raw.iter().enumerate() {
                    let text = cell.as_deref().expect("binary columns use drop policy");
                    let v = parse_binary(spec, text).ok_or_else(|| Error::BadCell {
                        row: r + 1,
                        column: spec.name.clone(),
                        value: text.to_string(),
                    })?;
                    values.push(v);
                }
                blocks.push(Block {
                    role: spec.role,
                    names: vec![spec.name.clone()],
                    columns: vec![values],
                });
            }
            ColKind::Categorical => {
                let mut mapped = Vec::with_capacity(n);
                for cell in raw.iter() {
                    let text = cell.as_deref().expect("categorical columns use drop policy");
                    let value = if let Some(map) = &spec.map {
                        map.get(text)
                            .or_else(|| map.get("*"))
                            .ok_or_else(|| Error::UnseenCategory {
                                column: spec.name.clone(),
                                value: text.to_string(),
                            })?
                            .clone()
                    } else {
                        text.to_string()
                    };
                    if let Some(cats) = &spec.categories {
                        if !cats.contains(&value) {
                            return Err(Error::UnseenCategory {
                                column: spec.name.clone(),
                                value,
                            });
                        }
                    }
                    mapped.push(value);
                }
                let encoder = DummyEncoder::fit(&mapped);
                let expanded = encoder.apply(&mapped, &spec.name)?;
                let names = encoder
                    .categories()
                    .iter()
                    .map(|c| format!("{}={}", spec.name, c))
                    .collect();
                let columns = (0..expanded.cols()).map(|c| expanded.column(c)).collect();
                blocks.push(Block {
                    role: spec.role,
                    names,
                    columns,
                });
            }
        }
    }

    assemble(blocks, n, schema)
}

fn parse_binary(spec: &crate::datamodel::ColumnSpec, text: &str) -> Option<f64> {
    if let Some(pos) = &spec.positive_values {
        if pos.iter().any(|p| p == text) {
            return Some(1.0);
        }
        if let Some(neg) = &spec.negative_values {
            if neg.iter().any(|p| p == text) {
                return Some(0.0);
            }
            return None;
        }
        return Some(0.0);
    }
    match text.parse::<f64>() {
        Ok(v) if v == 0.0 || v == 1.0 => Some(v),
        _ => None,
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

fn assemble(blocks: Vec<Block>, n: usize, schema: &Schema) -> Result<Dataset> {
    let mut s_cols = Vec::new();
    let mut s_names = Vec::new();
    let mut x_cols = Vec::new();
    let mut x_names = Vec::new();
    let mut z_cols = Vec::new();
    let mut z_names = Vec::new();
    let mut y_col = None;
    for block in blocks {
        match block.role {
            Role::Sensitive => {
                s_cols.extend(block.columns);
                s_names.extend(block.names);
            }
            Role::Nonsensitive => {
                x_cols.extend(block.columns);
                x_names.extend(block.names);
            }
            Role::Explanatory => {
                z_cols.extend(block.columns);
                z_names.extend(block.names);
            }
            Role::Target => {
                y_col = Some(block.columns.into_iter().next().expect("target column"));
            }
            Role::Ignore => unreachable!("ignored columns are filtered before parsing"),
        }
    }
    if schema.append_intercept {
        z_cols.push(vec![1.0; n]);
        z_names.push("intercept".to_string());
    }
    let y = Matrix::column_vector(y_col.expect("validated schema has a target"))?;
    Dataset::new(
        columns_to_matrix(n, s_cols)?,
        columns_to_matrix(n, x_cols)?,
        columns_to_matrix(n, z_cols)?,
        y,
        s_names,
        x_names,
        z_names,
        schema.task,
    )
}

fn columns_to_matrix(n: usize, cols: Vec<Vec<f64>>) -> Result<Matrix> {
    let width = cols.len();
    let mut data = Vec::with_capacity(n * width);
    for r in 0..n {
        for col in &cols {
            data.push(col[r]);
        }
    }
    Matrix::from_vec(n, width, data)
}
