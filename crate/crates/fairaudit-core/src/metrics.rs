//! Group fairness metrics, criterion verdicts, generalized entropy, and
//! mutual information.
//!
//! Differences are oriented non-privileged minus privileged, so a negative
//! value means the non-privileged group is disadvantaged. Rates with an
//! empty denominator are `None` ("undefined") and propagate: they never
//! coerce to 0 or 1, and any metric or verdict touching an undefined rate
//! is itself undefined. All reductions run sequentially in row order so
//! reports are bit-identical across runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::AuditTable;

/// Tolerances and estimator orders for the metric suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Criterion verdict tolerance: a criterion passes when the largest
    /// absolute disparity stays within this bound.
    pub epsilon: f64,
    /// Generalized-entropy order; 1 is the Theil index.
    pub alpha: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            epsilon: 0.10,
            alpha: 1.0,
        }
    }
}

/// Per-group confusion counts and derived rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupConfusion {
    pub group: String,
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
    pub n: u64,
    /// P(Y=1 | group).
    pub base_rate: f64,
    /// P(Ŷ=1 | group).
    pub selection_rate: f64,
    /// TP / (TP+FN); `None` when the group has no positive labels.
    pub tpr: Option<f64>,
    /// FP / (FP+TN); `None` when the group has no negative labels.
    pub fpr: Option<f64>,
    /// TP / (TP+FP); `None` when the group has no positive predictions.
    pub ppv: Option<f64>,
}

/// Disparities of one group against the privileged group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDisparity {
    pub group: String,
    /// Statistical parity difference: selection-rate gap.
    pub spd: Option<f64>,
    /// Disparate impact: selection-rate ratio.
    pub di: Option<f64>,
    /// Equal opportunity difference: TPR gap.
    pub eod: Option<f64>,
    /// Average odds difference: mean of FPR gap and TPR gap.
    pub aod: Option<f64>,
    /// Predictive parity difference: PPV gap.
    pub ppd: Option<f64>,
}

/// Criterion verdict at tolerance epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Undefined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Undefined => "undefined",
        }
    }
}

/// Worst disparity per metric: the signed value with the largest deviation
/// (from 0, or from 1 for disparate impact) across groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisparitySummary {
    pub spd: Option<f64>,
    pub di: Option<f64>,
    pub eod: Option<f64>,
    pub aod: Option<f64>,
    pub ppd: Option<f64>,
}

/// All group disparities against the privileged group plus criterion
/// verdicts at the configured tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub privileged: String,
    pub epsilon: f64,
    /// One entry per non-privileged group, sorted by group name.
    pub groups: Vec<GroupDisparity>,
    pub summary: DisparitySummary,
    pub independence: Verdict,
    pub separation: Verdict,
    pub sufficiency: Verdict,
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("column `{0}` not found")]
    UnknownColumn(String),
    #[error("table has no prediction column; binarize scores first")]
    NoPrediction,
    #[error("privileged group `{0}` not present in the data")]
    MissingPrivilegedGroup(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("{0}")]
    Invalid(String),
}

fn rate(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Partitions the table by the named sensitive column and counts each
/// group's confusion cells. Groups come back sorted by name.
pub fn confusion_by_group(
    table: &AuditTable,
    sensitive: &str,
) -> Result<BTreeMap<String, GroupConfusion>, MetricsError> {
    let preds = table.predictions().ok_or(MetricsError::NoPrediction)?;
    let labels = table.labels();
    let groups = table
        .sensitive_values(sensitive)
        .map_err(|_| MetricsError::UnknownColumn(sensitive.into()))?;
    let mut counts: BTreeMap<&str, [u64; 4]> = BTreeMap::new();
    for ((&y, &p), g) in labels.iter().zip(preds).zip(groups) {
        let cell = counts.entry(g.as_str()).or_default();
        match (y, p) {
            (1, 1) => cell[0] += 1, // TP
            (0, 1) => cell[1] += 1, // FP
            (0, 0) => cell[2] += 1, // TN
            _ => cell[3] += 1,      // FN
        }
    }
    Ok(counts
        .into_iter()
        .map(|(g, [tp, fp, tn, fnn])| {
            let n = tp + fp + tn + fnn;
            (
                g.to_owned(),
                GroupConfusion {
                    group: g.to_owned(),
                    true_pos: tp,
                    false_pos: fp,
                    true_neg: tn,
                    false_neg: fnn,
                    n,
                    base_rate: rate(tp + fnn, n).unwrap_or(0.0),
                    selection_rate: rate(tp + fp, n).unwrap_or(0.0),
                    tpr: rate(tp, tp + fnn),
                    fpr: rate(fp, fp + tn),
                    ppv: rate(tp, tp + fp),
                },
            )
        })
        .collect())
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

/// Compares every non-privileged group against the privileged one and
/// evaluates the independence, separation, and sufficiency criteria at
/// `config.epsilon`.
pub fn fairness_report(
    confusions: &BTreeMap<String, GroupConfusion>,
    privileged: &str,
    config: &MetricConfig,
) -> Result<FairnessReport, MetricsError> {
    let priv_c = confusions
        .get(privileged)
        .ok_or_else(|| MetricsError::MissingPrivilegedGroup(privileged.into()))?;
    let mut groups = Vec::new();
    let mut fpr_diffs = Vec::new();
    for (name, c) in confusions {
        if name == privileged {
            continue;
        }
        let spd = Some(c.selection_rate - priv_c.selection_rate);
        let di = (priv_c.selection_rate > 0.0).then(|| c.selection_rate / priv_c.selection_rate);
        let eod = diff(c.tpr, priv_c.tpr);
        let fpr_diff = diff(c.fpr, priv_c.fpr);
        let aod = match (fpr_diff, eod) {
            (Some(df), Some(dt)) => Some(0.5 * (df + dt)),
            _ => None,
        };
        let ppd = diff(c.ppv, priv_c.ppv);
        fpr_diffs.push(fpr_diff);
        groups.push(GroupDisparity {
            group: name.clone(),
            spd,
            di,
            eod,
            aod,
            ppd,
        });
    }

    let worst = |values: &mut dyn Iterator<Item = Option<f64>>, center: f64| -> Option<f64> {
        let mut best: Option<f64> = None;
        for v in values.flatten() {
            if best.is_none_or(|b| (v - center).abs() > (b - center).abs()) {
                best = Some(v);
            }
        }
        best
    };
    let summary = DisparitySummary {
        spd: worst(&mut groups.iter().map(|g| g.spd), 0.0),
        di: worst(&mut groups.iter().map(|g| g.di), 1.0),
        eod: worst(&mut groups.iter().map(|g| g.eod), 0.0),
        aod: worst(&mut groups.iter().map(|g| g.aod), 0.0),
        ppd: worst(&mut groups.iter().map(|g| g.ppd), 0.0),
    };

    // A verdict is undefined as soon as any group's input rate is; it
    // only passes/fails on fully defined disparities.
    let verdict = |max_abs: Option<f64>, any_undefined: bool| {
        if any_undefined {
            Verdict::Undefined
        } else {
            match max_abs {
                Some(m) if m > config.epsilon => Verdict::Fail,
                _ => Verdict::Pass,
            }
        }
    };
    let independence = verdict(
        summary.spd.map(f64::abs),
        groups.iter().any(|g| g.spd.is_none()),
    );
    let sep_values: Vec<Option<f64>> = groups
        .iter()
        .zip(&fpr_diffs)
        .map(|(g, df)| match (g.eod, df) {
            (Some(dt), Some(df)) => Some(dt.abs().max(df.abs())),
            _ => None,
        })
        .collect();
    let separation = verdict(
        sep_values
            .iter()
            .flatten()
            .cloned()
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            }),
        sep_values.iter().any(Option::is_none),
    );
    let sufficiency = verdict(
        summary.ppd.map(f64::abs),
        groups.iter().any(|g| g.ppd.is_none()),
    );

    Ok(FairnessReport {
        privileged: privileged.into(),
        epsilon: config.epsilon,
        groups,
        summary,
        independence,
        separation,
        sufficiency,
    })
}

/// Generalized entropy GE(alpha) of a nonnegative benefit vector.
///
/// GE(1) is the Theil index, (1/n) Σ (b/μ)·ln(b/μ) with 0·ln 0 = 0.
/// GE(0) is the mean log deviation; other alphas use
/// 1/(n·α·(α−1)) Σ ((b/μ)^α − 1). Returns `None` when the mean benefit
/// is zero, a benefit is negative, or the value diverges (a zero benefit
/// at alpha ≤ 0).
pub fn generalized_entropy(benefits: &[f64], alpha: f64) -> Option<f64> {
    if benefits.is_empty() || benefits.iter().any(|&b| b < 0.0) {
        return None;
    }
    let n = benefits.len() as f64;
    let mean = benefits.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return None;
    }
    let value = if alpha == 1.0 {
        benefits
            .iter()
            .map(|&b| {
                let r = b / mean;
                if r > 0.0 {
                    r * r.ln()
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / n
    } else if alpha == 0.0 {
        let mut sum = 0.0;
        for &b in benefits {
            let r = b / mean;
            if r <= 0.0 {
                return None;
            }
            sum += r.ln();
        }
        -sum / n
    } else {
        let sum: f64 = benefits.iter().map(|&b| (b / mean).powf(alpha) - 1.0).sum();
        sum / (n * alpha * (alpha - 1.0))
    };
    value.is_finite().then(|| value.max(0.0))
}

/// Individual-level inequality of the benefit b = ŷ − y + 1 across all
/// rows. Returns `Ok(None)` when every prediction is a false negative
/// (mean benefit zero), which leaves the index undefined.
pub fn theil_index(
    labels: &[u8],
    predictions: &[u8],
    config: &MetricConfig,
) -> Result<Option<f64>, MetricsError> {
    if labels.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch(
            labels.len(),
            predictions.len(),
        ));
    }
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let benefits: Vec<f64> = labels
        .iter()
        .zip(predictions)
        .map(|(&y, &p)| f64::from(p) - f64::from(y) + 1.0)
        .collect();
    Ok(generalized_entropy(&benefits, config.alpha))
}

/// Plug-in mutual information (nats) of the empirical joint distribution
/// of two categorical columns. Empty cells contribute zero.
pub fn mutual_information<X, Y>(xs: &[X], ys: &[Y]) -> Result<f64, MetricsError>
where
    X: Ord + Clone,
    Y: Ord + Clone,
{
    let uniform = vec![1.0; xs.len()];
    weighted_mutual_information(xs, ys, &uniform)
}

/// Plug-in mutual information where row i carries weight `weights[i]`.
pub fn weighted_mutual_information<X, Y>(
    xs: &[X],
    ys: &[Y],
    weights: &[f64],
) -> Result<f64, MetricsError>
where
    X: Ord + Clone,
    Y: Ord + Clone,
{
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() != weights.len() {
        return Err(MetricsError::LengthMismatch(xs.len(), weights.len()));
    }
    if xs.is_empty() {
        return Err(MetricsError::Empty);
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(MetricsError::Invalid(
            "weights must be nonnegative and finite".into(),
        ));
    }
    let mut joint: BTreeMap<(X, Y), f64> = BTreeMap::new();
    let mut mx: BTreeMap<X, f64> = BTreeMap::new();
    let mut my: BTreeMap<Y, f64> = BTreeMap::new();
    let mut total = 0.0;
    for ((x, y), &w) in xs.iter().zip(ys).zip(weights) {
        *joint.entry((x.clone(), y.clone())).or_default() += w;
        *mx.entry(x.clone()).or_default() += w;
        *my.entry(y.clone()).or_default() += w;
        total += w;
    }
    if total <= 0.0 {
        return Err(MetricsError::Invalid("total weight is zero".into()));
    }
    let mut info = 0.0;
    for ((x, y), &w) in &joint {
        if w <= 0.0 {
            continue;
        }
        let p = w / total;
        let px = mx[x] / total;
        let py = my[y] / total;
        info += p * (p / (px * py)).ln();
    }
    Ok(info)
}
