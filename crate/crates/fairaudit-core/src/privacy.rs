//! Re-identification risk scanning via equivalence-class analysis over
//! quasi-identifier columns.
//!
//! Rows are grouped by their exact quasi-identifier tuple, optionally
//! after declared binning. The scan reports facts (class sizes, unique
//! rate, rows violating the k requirement); what counts as unreasonable
//! risk is decided by the checklist's threshold profile, not here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AuditTable, ColumnData, MISSING_CATEGORY};

pub const DEFAULT_K: usize = 5;

/// Per-column coarsening applied before grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnBinning {
    /// Strictly ascending edges for a numeric column; values fall into
    /// "<e0", "[e0,e1)", …, ">=elast".
    Edges(Vec<f64>),
    /// Category merge map; categories not named stay unchanged.
    Merge(BTreeMap<String, String>),
}

/// Binning declarations keyed by column name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec(pub BTreeMap<String, ColumnBinning>);

/// One group of rows sharing a quasi-identifier tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceClass {
    /// Tuple values in quasi-identifier column order (after binning).
    pub key: Vec<String>,
    pub size: usize,
    /// Row indices (0-based) in ascending order.
    pub rows: Vec<usize>,
}

/// Result of a k-anonymity-style scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskScan {
    pub quasi_identifiers: Vec<String>,
    pub k: usize,
    pub n_rows: usize,
    /// Classes sorted by size ascending, then key lexicographically.
    pub classes: Vec<EquivalenceClass>,
    /// Fraction of rows that are unique on the quasi-identifier tuple.
    pub unique_rate: f64,
    /// Rows in classes smaller than k, ascending.
    pub violating_rows: Vec<usize>,
}

impl RiskScan {
    /// Rows that would violate a different class-size requirement,
    /// recomputed from the stored classes.
    pub fn violations_at(&self, k: usize) -> usize {
        self.classes
            .iter()
            .filter(|c| c.size < k)
            .map(|c| c.size)
            .sum()
    }
}

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("no quasi-identifier columns given")]
    EmptyQuasiIdentifiers,
    #[error("k must be at least 1, got {0}")]
    BadK(usize),
    #[error("column `{0}` not found")]
    UnknownColumn(String),
    #[error("column `{column}`: {message}")]
    BadBinning { column: String, message: String },
}

fn bin_numeric(value: f64, edges: &[f64]) -> String {
    if value < edges[0] {
        return format!("<{}", edges[0]);
    }
    for pair in edges.windows(2) {
        if value < pair[1] {
            return format!("[{},{})", pair[0], pair[1]);
        }
    }
    format!(">={}", edges[edges.len() - 1])
}

fn key_part(
    column: &str,
    data: &ColumnData,
    row: usize,
    binning: &BinningSpec,
) -> Result<String, PrivacyError> {
    let spec = binning.0.get(column);
    let numeric_value = |v: f64| -> String {
        match spec {
            Some(ColumnBinning::Edges(edges)) => bin_numeric(v, edges),
            _ => format!("{v}"),
        }
    };
    let merged = |s: &str| -> String {
        match spec {
            Some(ColumnBinning::Merge(map)) => map.get(s).cloned().unwrap_or_else(|| s.to_owned()),
            _ => s.to_owned(),
        }
    };
    Ok(match data {
        ColumnData::Categorical(v) => merged(&v[row]),
        ColumnData::Numeric(v) => match v[row] {
            Some(x) => numeric_value(x),
            None => MISSING_CATEGORY.to_owned(),
        },
        ColumnData::Real(v) => numeric_value(v[row]),
        ColumnData::Binary(v) => merged(&v[row].to_string()),
    })
}

/// Groups rows by their quasi-identifier tuple (after binning) and
/// reports every class, the unique-row rate, and all rows in classes
/// smaller than k.
pub fn reidentification_scan(
    table: &AuditTable,
    quasi_identifiers: &[String],
    k: usize,
    binning: &BinningSpec,
) -> Result<RiskScan, PrivacyError> {
    if quasi_identifiers.is_empty() {
        return Err(PrivacyError::EmptyQuasiIdentifiers);
    }
    if k == 0 {
        return Err(PrivacyError::BadK(k));
    }
    let mut columns = Vec::with_capacity(quasi_identifiers.len());
    for name in quasi_identifiers {
        let col = table
            .column(name)
            .ok_or_else(|| PrivacyError::UnknownColumn(name.clone()))?;
        if let Some(ColumnBinning::Edges(edges)) = binning.0.get(name) {
            if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PrivacyError::BadBinning {
                    column: name.clone(),
                    message: "bin edges must be nonempty and strictly ascending".into(),
                });
            }
        }
        columns.push(col);
    }

    let mut groups: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for row in 0..table.n_rows() {
        let mut key = Vec::with_capacity(columns.len());
        for col in &columns {
            key.push(key_part(&col.name, &col.data, row, binning)?);
        }
        groups.entry(key).or_default().push(row);
    }

    let mut classes: Vec<EquivalenceClass> = groups
        .into_iter()
        .map(|(key, rows)| EquivalenceClass {
            key,
            size: rows.len(),
            rows,
        })
        .collect();
    classes.sort_by(|a, b| a.size.cmp(&b.size).then_with(|| a.key.cmp(&b.key)));

    let unique_rows: usize = classes.iter().filter(|c| c.size == 1).count();
    let mut violating_rows: Vec<usize> = classes
        .iter()
        .filter(|c| c.size < k)
        .flat_map(|c| c.rows.iter().copied())
        .collect();
    violating_rows.sort_unstable();

    Ok(RiskScan {
        quasi_identifiers: quasi_identifiers.to_vec(),
        k,
        n_rows: table.n_rows(),
        unique_rate: if table.n_rows() == 0 {
            0.0
        } else {
            unique_rows as f64 / table.n_rows() as f64
        },
        classes,
        violating_rows,
    })
}
