//! Detection of proxy variables: features strongly associated with a
//! sensitive attribute.
//!
//! Sensitive attributes are categorical, so associations use Cramér's V
//! (categorical feature) and the correlation ratio (numeric feature)
//! rather than Pearson correlation. No small-sample bias correction is
//! applied; the estimators below are exactly what the report documents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AuditTable, Column, ColumnData};

pub const DEFAULT_PROXY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationMethod {
    CramersV,
    CorrelationRatio,
}

impl AssociationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AssociationMethod::CramersV => "cramers_v",
            AssociationMethod::CorrelationRatio => "correlation_ratio",
        }
    }
}

/// Association score in \[0,1\] with the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Association {
    pub score: f64,
    pub method: AssociationMethod,
}

/// One (feature, sensitive) pair with a defined association score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyFinding {
    pub feature: String,
    pub sensitive: String,
    pub score: f64,
    pub method: AssociationMethod,
    pub flagged: bool,
}

/// Pair whose score is undefined (constant column), kept as a warning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPair {
    pub feature: String,
    pub sensitive: String,
    pub reason: String,
}

/// Outcome of scanning every (feature, sensitive) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyScan {
    pub threshold: f64,
    /// Sorted by score descending, then feature name, then sensitive name.
    pub findings: Vec<ProxyFinding>,
    pub skipped: Vec<SkippedPair>,
}

#[derive(Debug, Error)]
pub enum ProxyError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("column `{column}` cannot be used here: {message}")]
    BadColumn { column: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Cramér's V = sqrt(χ² / (n·(min(r,c)−1))) over the contingency table of
/// two categorical columns. `None` when either column is constant.
pub fn cramers_v<S: AsRef<str>>(xs: &[S], ys: &[S]) -> Result<Option<f64>, ProxyError> {
    if xs.len() != ys.len() {
        return Err(ProxyError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Ok(None);
    }
    use std::collections::BTreeMap;
    let mut cells: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut rows: BTreeMap<&str, u64> = BTreeMap::new();
    let mut cols: BTreeMap<&str, u64> = BTreeMap::new();
    for (x, y) in xs.iter().zip(ys) {
        *cells.entry((x.as_ref(), y.as_ref())).or_default() += 1;
        *rows.entry(x.as_ref()).or_default() += 1;
        *cols.entry(y.as_ref()).or_default() += 1;
    }
    let dof = rows.len().min(cols.len()) - 1;
    if dof == 0 {
        return Ok(None);
    }
    let n = xs.len() as f64;
    let mut chi2 = 0.0;
    for (&rv, &rn) in &rows {
        for (&cv, &cn) in &cols {
            let expected = rn as f64 * cn as f64 / n;
            let observed = cells.get(&(rv, cv)).copied().unwrap_or(0) as f64;
            chi2 += (observed - expected).powi(2) / expected;
        }
    }
    Ok(Some((chi2 / (n * dof as f64)).sqrt().min(1.0)))
}

/// Correlation ratio η = sqrt(between-group SS / total SS) of a numeric
/// feature across sensitive groups. Rows with a missing feature value are
/// excluded pairwise. `None` when the feature is constant or fewer than
/// two groups remain after exclusion.
pub fn correlation_ratio<S: AsRef<str>>(
    values: &[Option<f64>],
    groups: &[S],
) -> Result<Option<f64>, ProxyError> {
    if values.len() != groups.len() {
        return Err(ProxyError::LengthMismatch(values.len(), groups.len()));
    }
    use std::collections::BTreeMap;
    let pairs: Vec<(f64, &str)> = values
        .iter()
        .zip(groups)
        .filter_map(|(v, g)| v.map(|v| (v, g.as_ref())))
        .collect();
    if pairs.is_empty() {
        return Ok(None);
    }
    let n = pairs.len() as f64;
    let grand_mean = pairs.iter().map(|(v, _)| v).sum::<f64>() / n;
    let ss_total: f64 = pairs.iter().map(|(v, _)| (v - grand_mean).powi(2)).sum();
    if ss_total == 0.0 {
        return Ok(None);
    }
    let mut per_group: BTreeMap<&str, (f64, u64)> = BTreeMap::new();
    for (v, g) in &pairs {
        let e = per_group.entry(g).or_default();
        e.0 += v;
        e.1 += 1;
    }
    if per_group.len() < 2 {
        return Ok(None);
    }
    let ss_between: f64 = per_group
        .values()
        .map(|&(sum, count)| {
            let mean = sum / count as f64;
            count as f64 * (mean - grand_mean).powi(2)
        })
        .sum();
    Ok(Some((ss_between / ss_total).sqrt().min(1.0)))
}

/// Association between one feature column and one sensitive column,
/// dispatching on the feature's data kind. `None` when undefined.
pub fn association(
    feature: &Column,
    sensitive: &Column,
) -> Result<Option<Association>, ProxyError> {
    let groups = match &sensitive.data {
        ColumnData::Categorical(v) => v,
        _ => {
            return Err(ProxyError::BadColumn {
                column: sensitive.name.clone(),
                message: "sensitive column must be categorical".into(),
            })
        }
    };
    match &feature.data {
        ColumnData::Categorical(v) => Ok(cramers_v(v, groups)?.map(|score| Association {
            score,
            method: AssociationMethod::CramersV,
        })),
        ColumnData::Numeric(v) => Ok(correlation_ratio(v, groups)?.map(|score| Association {
            score,
            method: AssociationMethod::CorrelationRatio,
        })),
        ColumnData::Real(v) => {
            let opt: Vec<Option<f64>> = v.iter().copied().map(Some).collect();
            Ok(correlation_ratio(&opt, groups)?.map(|score| Association {
                score,
                method: AssociationMethod::CorrelationRatio,
            }))
        }
        ColumnData::Binary(v) => {
            let cats: Vec<String> = v.iter().map(|b| b.to_string()).collect();
            Ok(cramers_v(&cats, groups)?.map(|score| Association {
                score,
                method: AssociationMethod::CramersV,
            }))
        }
    }
}

/// Scores every (feature, sensitive) pair. Pairs with an undefined score
/// are omitted from the findings and reported in `skipped`.
pub fn proxy_scan(table: &AuditTable, threshold: f64) -> Result<ProxyScan, ProxyError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ProxyError::Invalid(format!(
            "proxy threshold {threshold} outside [0,1]"
        )));
    }
    let mut findings = Vec::new();
    let mut skipped = Vec::new();
    for feature in table.feature_columns() {
        for sensitive in table.sensitive_columns() {
            match association(feature, sensitive)? {
                Some(assoc) => findings.push(ProxyFinding {
                    feature: feature.name.clone(),
                    sensitive: sensitive.name.clone(),
                    score: assoc.score,
                    method: assoc.method,
                    flagged: assoc.score >= threshold,
                }),
                None => skipped.push(SkippedPair {
                    feature: feature.name.clone(),
                    sensitive: sensitive.name.clone(),
                    reason: "undefined association (constant column)".into(),
                }),
            }
        }
    }
    findings.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.feature.cmp(&b.feature))
            .then_with(|| a.sensitive.cmp(&b.sensitive))
    });
    skipped.sort_by(|a, b| {
        a.feature
            .cmp(&b.feature)
            .then_with(|| a.sensitive.cmp(&b.sensitive))
    });
    Ok(ProxyScan {
        threshold,
        findings,
        skipped,
    })
}
