//! Declarative dataset schemas.
//!
//! A schema is a TOML document with one `[[column]]` entry per column of the
//! raw file, plus file-level options. It is the single source of truth for
//! preprocessing a dataset: roles, kinds, binarization cuts, missing-value
//! markers and policies, and category summarization maps. See the schema
//! files under `schemas/` for complete examples.

use std::collections::BTreeMap;
use std::path::Path;

use crate::datamodel::Task;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sensitive,
    Nonsensitive,
    Explanatory,
    Target,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColKind {
    Numeric,
    Binary,
    Categorical,
}

/// Comparison direction for threshold binarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binarize {
    pub cut: f64,
    pub positive_when: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    DropRow,
    ImputeMedian,
}

/// Per-column description: name, role, kind, and the optional transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: Role,
    pub kind: ColKind,
    /// Numeric-to-binary cut; only valid on numeric columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binarize: Option<Binarize>,
    /// Cell content treated as missing (e.g. "?" or "").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<String>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    /// Categorical summarization: raw value -> summarized category.
    /// The key "*" acts as a catch-all for unlisted raw values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<BTreeMap<String, String>>,
    /// Expected category set after summarization; observed values outside
    /// this list are an error. Also makes the expanded width predictable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    /// For binary string columns: values mapping to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_values: Option<Vec<String>>,
    /// For binary string columns: values mapping to 0. When present, any
    /// other value is an error; when absent, non-positive values map to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_values: Option<Vec<String>>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, role: Role) -> Self {
        ColumnSpec {
            name: name.into(),
            role,
            kind: ColKind::Numeric,
            binarize: None,
            missing: None,
            missing_policy: MissingPolicy::DropRow,
            map: None,
            categories: None,
            positive_values: None,
            negative_values: None,
        }
    }

    pub fn binary(name: &str, role: Role) -> Self {
        ColumnSpec {
            kind: ColKind::Binary,
            ..ColumnSpec::numeric(name, role)
        }
    }

    pub fn categorical(name: &str, role: Role) -> Self {
        ColumnSpec {
            kind: ColKind::Categorical,
            ..ColumnSpec::numeric(name, role)
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_delimiter() -> String {
    ",".into()
}

/// Whole-file schema: task, file framing options, and the column list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    pub task: Task,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// Append a constant-1 column to the explanatory block.
    #[serde(default = "default_true")]
    pub append_intercept: bool,
    #[serde(rename = "column")]
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn from_toml_str(text: &str) -> Result<Schema> {
        let schema: Schema =
            toml::from_str(text).map_err(|e| Error::Schema(format!("cannot parse schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Schema::from_toml_str(&text)
    }

    pub fn delimiter_byte(&self) -> Result<u8> {
        let bytes = self.delimiter.as_bytes();
        if bytes.len() != 1 {
            return Err(Error::Schema(format!(
                "delimiter must be a single byte, got '{}'",
                self.delimiter
            )));
        }
        Ok(bytes[0])
    }

    pub fn validate(&self) -> Result<()> {
        let targets = self
            .columns
            .iter()
            .filter(|c| c.role == Role::Target)
            .count();
        if targets != 1 {
            return Err(Error::Schema(format!(
                "schema must declare exactly one target column, found {targets}"
            )));
        }
        self.delimiter_byte()?;
        let mut seen = Vec::new();
        for col in &self.columns {
            if seen.contains(&&col.name) {
                return Err(Error::Schema(format!("duplicate column '{}'", col.name)));
            }
            seen.push(&col.name);
            if col.binarize.is_some() && col.kind != ColKind::Numeric {
                return Err(Error::Schema(format!(
                    "column '{}': binarize is only permitted on numeric columns",
                    col.name
                )));
            }
            if col.map.is_some() && col.kind != ColKind::Categorical {
                return Err(Error::Schema(format!(
                    "column '{}': a summarization map is only permitted on categorical columns",
                    col.name
                )));
            }
            if (col.positive_values.is_some() || col.negative_values.is_some())
                && col.kind != ColKind::Binary
            {
                return Err(Error::Schema(format!(
                    "column '{}': positive/negative value lists are only permitted on binary columns",
                    col.name
                )));
            }
            if col.missing_policy == MissingPolicy::ImputeMedian && col.kind != ColKind::Numeric {
                return Err(Error::Schema(format!(
                    "column '{}': impute_median is only permitted on numeric columns",
                    col.name
                )));
            }
        }
        let target = self.columns.iter().find(|c| c.role == Role::Target).unwrap();
        if target.kind == ColKind::Categorical {
            return Err(Error::Schema(
                "target column must be numeric (regression) or binary (classification)".into(),
            ));
        }
        Ok(())
    }

    /// Predicted number of data columns after expansion, counting sensitive,
    /// non-sensitive, explanatory (without the synthetic intercept) and the
    /// target. Requires every categorical column to declare its categories
    /// (directly or through the codomain of its map); assumes every declared
    /// category is observed.
    pub fn expected_column_count(&self) -> Option<usize> {
        let mut total = 0usize;
        for col in &self.columns {
            if col.role == Role::Ignore {
                continue;
            }
            total += match col.kind {
                ColKind::Numeric | ColKind::Binary => 1,
                ColKind::Categorical => {
                    if let Some(cats) = &col.categories {
                        cats.len()
                    } else if let Some(map) = &col.map {
                        let mut vals: Vec<&String> = map.values().collect();
                        vals.sort();
                        vals.dedup();
                        vals.len()
                    } else {
                        return None;
                    }
                }
            };
        }
        Some(total)
    }

    pub fn target(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == Role::Target)
            .expect("validated schema has a target")
    }
}
