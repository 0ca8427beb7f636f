//! Bias mitigation without retraining: reweighing (pre-processing) and
//! per-group decision-threshold optimization (post-processing).
//!
//! The threshold optimizer equalizes true positive rates across sensitive
//! groups (equal opportunity) while maximizing model performance over a
//! threshold grid. Candidate policies come from two deterministic sweeps:
//! a shared-target-TPR scan, plus a TPR-window sweep that picks each
//! group's best-performing threshold inside every width-epsilon window.
//! The window sweep makes the search exact: the optimal feasible policy
//! has all group TPRs inside the window anchored at its lowest TPR, so
//! the candidate set always contains a policy of equal performance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::AuditTable;

/// Per-cell and per-row sample weights that make the sensitive attribute
/// and the label statistically independent under weighting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightAssignment {
    pub sensitive: String,
    /// (group, label) → weight, one entry per observed cell.
    pub cell_weights: BTreeMap<(String, u8), f64>,
    /// Row-level expansion in table row order; sums to the row count.
    pub row_weights: Vec<f64>,
    /// True when only one sensitive group was observed; all weights are 1
    /// and the assignment is a warned no-op rather than an error.
    pub single_group: bool,
}

/// What the optimizer equalizes across groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MitigationObjective {
    EqualOpportunity,
}

/// Model-performance measure maximized subject to the TPR constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerformanceMetric {
    Accuracy,
    BalancedAccuracy,
}

/// Search settings for [`optimize_thresholds`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearchConfig {
    /// Largest tolerated pairwise TPR gap on the fitting data.
    pub epsilon: f64,
    /// Ordered candidate thresholds, strictly ascending, within \[0,1\].
    pub grid: Vec<f64>,
    pub metric: PerformanceMetric,
}

impl Default for ThresholdSearchConfig {
    fn default() -> Self {
        ThresholdSearchConfig {
            epsilon: 0.10,
            grid: default_grid(),
            metric: PerformanceMetric::Accuracy,
        }
    }
}

/// The default grid: 101 thresholds 0.00, 0.01, …, 1.00.
pub fn default_grid() -> Vec<f64> {
    (0..=100).map(|i| f64::from(i) / 100.0).collect()
}

/// Per-group decision thresholds with the rates they achieve on the
/// fitting data. Serializable standalone so a policy fitted once can be
/// re-applied later via [`apply_policy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub sensitive: String,
    pub objective: MitigationObjective,
    pub epsilon: f64,
    pub thresholds: BTreeMap<String, f64>,
    pub group_tpr: BTreeMap<String, f64>,
    /// Largest pairwise TPR gap under the policy; at most `epsilon`.
    pub max_tpr_gap: f64,
    /// Overall fraction of correct decisions under the policy.
    pub accuracy: f64,
}

#[derive(Debug, Error)]
pub enum MitigateError {
    #[error("column `{0}` not found")]
    UnknownColumn(String),
    #[error("table has no score column")]
    NoScore,
    #[error("group `{group}` has no rows with label {label}; reweighing cannot equalize")]
    EmptyCell { group: String, label: u8 },
    #[error("group `{0}` has no positive-label rows; its TPR is undefined")]
    NoPositives(String),
    #[error("bad threshold grid: {0}")]
    BadGrid(String),
    #[error("inconsistent or empty inputs: {0}")]
    BadInput(String),
    #[error(
        "no threshold assignment meets the TPR gap tolerance {epsilon}; \
         increase epsilon or use a finer grid"
    )]
    Infeasible { epsilon: f64 },
    #[error("row {row} belongs to group `{group}` which the policy does not cover")]
    UnknownGroup { row: usize, group: String },
}

/// Kamiran–Calders reweighing: w(s,y) = P̂(s)·P̂(y) / P̂(s,y) over the
/// empirical frequencies. Requires every (group, label) cell to be
/// observed; otherwise no weighting can factorize the joint distribution.
pub fn reweigh(table: &AuditTable, sensitive: &str) -> Result<WeightAssignment, MitigateError> {
    let groups = table
        .sensitive_values(sensitive)
        .map_err(|_| MitigateError::UnknownColumn(sensitive.into()))?;
    reweigh_from_parts(sensitive, groups, table.labels())
}

/// Slice-level reweighing for callers without an `AuditTable`. A single
/// observed group is degenerate: every weight is 1 and `single_group`
/// flags the no-op.
pub fn reweigh_from_parts(
    sensitive: &str,
    groups: &[String],
    labels: &[u8],
) -> Result<WeightAssignment, MitigateError> {
    if groups.len() != labels.len() || labels.is_empty() {
        return Err(MitigateError::BadInput(format!(
            "{} group values vs {} labels",
            groups.len(),
            labels.len()
        )));
    }
    let n = labels.len() as f64;

    let mut group_counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut label_counts: BTreeMap<u8, u64> = BTreeMap::new();
    let mut cell_counts: BTreeMap<(&str, u8), u64> = BTreeMap::new();
    for (g, &y) in groups.iter().zip(labels) {
        *group_counts.entry(g.as_str()).or_default() += 1;
        *label_counts.entry(y).or_default() += 1;
        *cell_counts.entry((g.as_str(), y)).or_default() += 1;
    }
    let single_group = group_counts.len() == 1;
    if !single_group {
        for &g in group_counts.keys() {
            for &y in label_counts.keys() {
                if !cell_counts.contains_key(&(g, y)) {
                    return Err(MitigateError::EmptyCell {
                        group: g.to_owned(),
                        label: y,
                    });
                }
            }
        }
    }

    let cell_weights: BTreeMap<(String, u8), f64> = cell_counts
        .iter()
        .map(|(&(g, y), &c)| {
            let w = (group_counts[g] as f64 * label_counts[&y] as f64) / (n * c as f64);
            ((g.to_owned(), y), w)
        })
        .collect();
    let row_weights = groups
        .iter()
        .zip(labels)
        .map(|(g, &y)| cell_weights[&(g.clone(), y)])
        .collect();
    Ok(WeightAssignment {
        sensitive: sensitive.into(),
        cell_weights,
        row_weights,
        single_group,
    })
}

struct GroupOptions {
    name: String,
    negatives: u64,
    /// Per grid threshold: (tpr, true positives, false positives).
    options: Vec<(f64, u64, u64)>,
}

/// Picks one threshold per sensitive group so that group TPRs differ by at
/// most `epsilon` while model performance is maximal over the grid.
///
/// Ties on performance are broken by smaller TPR gap, then by the
/// lexicographically smallest threshold vector (groups in name order), so
/// a fixed input and grid always yield the identical policy.
pub fn optimize_thresholds(
    table: &AuditTable,
    sensitive: &str,
    config: &ThresholdSearchConfig,
) -> Result<ThresholdPolicy, MitigateError> {
    let groups = table
        .sensitive_values(sensitive)
        .map_err(|_| MitigateError::UnknownColumn(sensitive.into()))?;
    let scores = table.scores().ok_or(MitigateError::NoScore)?;
    optimize_thresholds_from_parts(sensitive, groups, table.labels(), scores, config)
}

/// Slice-level threshold optimization. With a single observed group the
/// TPR constraint is vacuous and the result is the grid's best-performing
/// threshold.
pub fn optimize_thresholds_from_parts(
    sensitive: &str,
    group_col: &[String],
    labels: &[u8],
    scores: &[f64],
    config: &ThresholdSearchConfig,
) -> Result<ThresholdPolicy, MitigateError> {
    if config.grid.is_empty() {
        return Err(MitigateError::BadGrid("grid is empty".into()));
    }
    if config.grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(MitigateError::BadGrid(
            "thresholds must lie in [0,1]".into(),
        ));
    }
    if config.grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MitigateError::BadGrid(
            "thresholds must be strictly ascending".into(),
        ));
    }
    if config.epsilon < 0.0 {
        return Err(MitigateError::BadGrid("epsilon must be nonnegative".into()));
    }
    if group_col.len() != labels.len() || labels.len() != scores.len() || labels.is_empty() {
        return Err(MitigateError::BadInput(format!(
            "{} group values, {} labels, {} scores",
            group_col.len(),
            labels.len(),
            scores.len()
        )));
    }
    let mut per_group: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((g, &y), &s) in group_col.iter().zip(labels).zip(scores) {
        let e = per_group.entry(g.as_str()).or_default();
        if y == 1 {
            e.0.push(s);
        } else {
            e.1.push(s);
        }
    }

    let total_rows = labels.len() as f64;
    let total_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let total_neg = total_rows - total_pos;

    let mut groups = Vec::new();
    for (name, (pos, neg)) in &per_group {
        if pos.is_empty() {
            return Err(MitigateError::NoPositives((*name).to_owned()));
        }
        let options = config
            .grid
            .iter()
            .map(|&theta| {
                let tp = pos.iter().filter(|&&s| s >= theta).count() as u64;
                let fp = neg.iter().filter(|&&s| s >= theta).count() as u64;
                (tp as f64 / pos.len() as f64, tp, fp)
            })
            .collect();
        groups.push(GroupOptions {
            name: (*name).to_owned(),
            negatives: neg.len() as u64,
            options,
        });
    }

    // Per-option performance contribution under the configured metric.
    let contribution = |g: &GroupOptions, idx: usize| -> f64 {
        let (_, tp, fp) = g.options[idx];
        let tn = g.negatives - fp;
        match config.metric {
            PerformanceMetric::Accuracy => (tp + tn) as f64 / total_rows,
            PerformanceMetric::BalancedAccuracy => {
                let pos_part = tp as f64 / total_pos / 2.0;
                let neg_part = if total_neg > 0.0 {
                    tn as f64 / total_neg / 2.0
                } else {
                    0.0
                };
                pos_part + neg_part
            }
        }
    };

    let targets: BTreeSet<u64> = groups
        .iter()
        .flat_map(|g| g.options.iter().map(|o| o.0.to_bits()))
        .collect();
    let mut candidates: BTreeSet<Vec<usize>> = BTreeSet::new();

    // Shared-target scan: per group the threshold whose TPR is closest to
    // the target, ties resolved toward the larger threshold.
    for &bits in &targets {
        let t = f64::from_bits(bits);
        let choice: Vec<usize> = groups
            .iter()
            .map(|g| {
                let mut best = 0;
                for (idx, &(tpr, _, _)) in g.options.iter().enumerate() {
                    if (tpr - t).abs() <= (g.options[best].0 - t).abs() {
                        best = idx;
                    }
                }
                best
            })
            .collect();
        candidates.insert(choice);
    }

    // Window sweep: anchor a [t, t+epsilon] TPR window at every attainable
    // TPR and take each group's best-performing in-window threshold
    // (ties toward the smaller threshold).
    for &bits in &targets {
        let lo = f64::from_bits(bits);
        let mut choice = Vec::with_capacity(groups.len());
        let mut complete = true;
        for g in &groups {
            let mut best: Option<(usize, f64)> = None;
            for (idx, &(tpr, _, _)) in g.options.iter().enumerate() {
                if tpr >= lo && tpr - lo <= config.epsilon {
                    let value = contribution(g, idx);
                    if best.is_none_or(|(_, bv)| value > bv) {
                        best = Some((idx, value));
                    }
                }
            }
            match best {
                Some((idx, _)) => choice.push(idx),
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if complete {
            candidates.insert(choice);
        }
    }

    let mut selected: Option<(f64, f64, Vec<f64>, Vec<usize>)> = None;
    for choice in &candidates {
        let tprs: Vec<f64> = groups
            .iter()
            .zip(choice)
            .map(|(g, &idx)| g.options[idx].0)
            .collect();
        let max_tpr = tprs.iter().cloned().fold(f64::MIN, f64::max);
        let min_tpr = tprs.iter().cloned().fold(f64::MAX, f64::min);
        let gap = max_tpr - min_tpr;
        if gap > config.epsilon {
            continue;
        }
        let value: f64 = groups
            .iter()
            .zip(choice)
            .map(|(g, &idx)| contribution(g, idx))
            .sum();
        let thetas: Vec<f64> = choice.iter().map(|&idx| config.grid[idx]).collect();
        let better = match &selected {
            None => true,
            Some((bv, bg, bt, _)) => {
                value > *bv
                    || (value == *bv && gap < *bg)
                    || (value == *bv && gap == *bg && thetas < *bt)
            }
        };
        if better {
            selected = Some((value, gap, thetas, choice.clone()));
        }
    }

    let (_, gap, thetas, choice) = selected.ok_or(MitigateError::Infeasible {
        epsilon: config.epsilon,
    })?;
    let correct: u64 = groups
        .iter()
        .zip(&choice)
        .map(|(g, &idx)| {
            let (_, tp, fp) = g.options[idx];
            tp + (g.negatives - fp)
        })
        .sum();
    Ok(ThresholdPolicy {
        sensitive: sensitive.into(),
        objective: MitigationObjective::EqualOpportunity,
        epsilon: config.epsilon,
        thresholds: groups
            .iter()
            .zip(&thetas)
            .map(|(g, &t)| (g.name.clone(), t))
            .collect(),
        group_tpr: groups
            .iter()
            .zip(&choice)
            .map(|(g, &idx)| (g.name.clone(), g.options[idx].0))
            .collect(),
        max_tpr_gap: gap,
        accuracy: correct as f64 / total_rows,
    })
}

/// Applies a fitted policy: prediction is 1 iff the row's score reaches
/// its group's threshold. Every row's group must appear in the policy.
pub fn apply_policy(
    table: &AuditTable,
    policy: &ThresholdPolicy,
) -> Result<Vec<u8>, MitigateError> {
    let scores = table.scores().ok_or(MitigateError::NoScore)?;
    let groups = table
        .sensitive_values(&policy.sensitive)
        .map_err(|_| MitigateError::UnknownColumn(policy.sensitive.clone()))?;
    groups
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(row, (g, &s))| match policy.thresholds.get(g) {
            Some(&theta) => Ok(u8::from(s >= theta)),
            None => Err(MitigateError::UnknownGroup {
                row: row + 1,
                group: g.clone(),
            }),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AuditTable, Column, ColumnData, ColumnRole};
    use crate::metrics::weighted_mutual_information;

    fn score_table(rows: &[(u8, f64, &str)]) -> AuditTable {
        let columns = vec![
            Column {
                name: "y".into(),
                role: ColumnRole::Label,
                data: ColumnData::Binary(rows.iter().map(|r| r.0).collect()),
            },
            Column {
                name: "score".into(),
                role: ColumnRole::Score,
                data: ColumnData::Real(rows.iter().map(|r| r.1).collect()),
            },
            Column {
                name: "group".into(),
                role: ColumnRole::Sensitive,
                data: ColumnData::Categorical(rows.iter().map(|r| r.2.to_owned()).collect()),
            },
        ];
        AuditTable::new(columns, BTreeMap::new()).unwrap()
    }

    /// n=10: group a has 4 positives and 2 negatives, group b 1 and 3.
    fn reweigh_fixture() -> AuditTable {
        let mut rows = Vec::new();
        for _ in 0..4 {
            rows.push((1u8, 0.9, "a"));
        }
        for _ in 0..2 {
            rows.push((0u8, 0.1, "a"));
        }
        rows.push((1u8, 0.9, "b"));
        for _ in 0..3 {
            rows.push((0u8, 0.1, "b"));
        }
        score_table(&rows)
    }

    #[test]
    fn reweigh_hand_weights() {
        let w = reweigh(&reweigh_fixture(), "group").unwrap();
        assert!((w.cell_weights[&("a".into(), 1)] - 0.75).abs() < 1e-12);
        assert!((w.cell_weights[&("a".into(), 0)] - 1.5).abs() < 1e-12);
        assert!((w.cell_weights[&("b".into(), 1)] - 2.0).abs() < 1e-12);
        assert!((w.cell_weights[&("b".into(), 0)] - 2.0 / 3.0).abs() < 1e-12);
        let total: f64 = w.row_weights.iter().sum();
        assert!((total - 10.0).abs() < 1e-9);
        assert!(!w.single_group);
    }

    #[test]
    fn reweigh_is_identity_when_independent() {
        // 2x2 proportional cells: S and Y already independent.
        let mut rows = Vec::new();
        for (g, y, count) in [("a", 1u8, 2), ("a", 0u8, 2), ("b", 1u8, 3), ("b", 0u8, 3)] {
            for _ in 0..count {
                rows.push((y, 0.5, g));
            }
        }
        let w = reweigh(&score_table(&rows), "group").unwrap();
        for weight in &w.row_weights {
            assert!((weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reweigh_invariant_under_duplication() {
        let t = reweigh_fixture();
        let once = reweigh(&t, "group").unwrap();
        let mut doubled_rows = Vec::new();
        for _ in 0..2 {
            for i in 0..t.n_rows() {
                doubled_rows.push((
                    t.labels()[i],
                    t.scores().unwrap()[i],
                    t.sensitive_values("group").unwrap()[i].clone(),
                ));
            }
        }
        let doubled_rows: Vec<(u8, f64, &str)> = doubled_rows
            .iter()
            .map(|(y, s, g)| (*y, *s, g.as_str()))
            .collect();
        let twice = reweigh(&score_table(&doubled_rows), "group").unwrap();
        assert_eq!(once.cell_weights, twice.cell_weights);
    }

    #[test]
    fn reweigh_removes_dependence() {
        let t = reweigh_fixture();
        let w = reweigh(&t, "group").unwrap();
        let mi = weighted_mutual_information(
            t.sensitive_values("group").unwrap(),
            t.labels(),
            &w.row_weights,
        )
        .unwrap();
        assert!(mi.abs() <= 1e-9, "weighted MI = {mi}");
    }

    #[test]
    fn reweigh_rejects_empty_cell() {
        let rows = [
            (1u8, 0.9, "a"),
            (0u8, 0.1, "a"),
            (0u8, 0.2, "b"),
            (0u8, 0.3, "b"),
        ];
        let err = reweigh(&score_table(&rows), "group").unwrap_err();
        assert!(matches!(err, MitigateError::EmptyCell { ref group, label: 1 } if group == "b"));
    }

    /// Shifted-score fixture: uniform 0.5 threshold has a 0.25 TPR gap;
    /// per-group thresholds reach TPR 1 in both groups and 16/16 accuracy.
    fn shifted_fixture() -> AuditTable {
        let mut rows = Vec::new();
        for s in [0.9, 0.8, 0.7, 0.6] {
            rows.push((1u8, s, "a"));
        }
        for s in [0.4, 0.3, 0.2, 0.1] {
            rows.push((0u8, s, "a"));
        }
        for s in [0.7, 0.6, 0.5, 0.4] {
            rows.push((1u8, s, "b"));
        }
        for s in [0.3, 0.25, 0.2, 0.1] {
            rows.push((0u8, s, "b"));
        }
        score_table(&rows)
    }

    #[test]
    fn shifted_fixture_reaches_zero_gap_and_full_accuracy() {
        let cfg = ThresholdSearchConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let policy = optimize_thresholds(&shifted_fixture(), "group", &cfg).unwrap();
        let ta = policy.thresholds["a"];
        let tb = policy.thresholds["b"];
        assert!(ta > 0.4 && ta <= 0.6, "theta_a = {ta}");
        assert!(tb > 0.3 && tb <= 0.4, "theta_b = {tb}");
        assert_eq!(policy.group_tpr["a"], 1.0);
        assert_eq!(policy.group_tpr["b"], 1.0);
        assert_eq!(policy.max_tpr_gap, 0.0);
        assert_eq!(policy.accuracy, 1.0);
    }

    #[test]
    fn identically_distributed_groups_share_the_uniform_optimum() {
        let mut rows = Vec::new();
        for g in ["a", "b"] {
            for s in [0.9, 0.8, 0.3] {
                rows.push((1u8, s, g));
            }
            for s in [0.6, 0.2, 0.1] {
                rows.push((0u8, s, g));
            }
        }
        let cfg = ThresholdSearchConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let policy = optimize_thresholds(&score_table(&rows), "group", &cfg).unwrap();
        assert_eq!(policy.thresholds["a"], policy.thresholds["b"]);
        // Best shared threshold classifies {0.9, 0.8, 0.3} vs the rest or
        // keeps only {0.9, 0.8} positive: both reach 5/6 correct.
        assert!((policy.accuracy - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_group_maximizes_accuracy_unconstrained() {
        let groups = vec!["only".to_string(); 6];
        let labels = [1u8, 1, 1, 0, 0, 0];
        let scores = [0.9, 0.8, 0.3, 0.6, 0.2, 0.1];
        let cfg = ThresholdSearchConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let policy =
            optimize_thresholds_from_parts("group", &groups, &labels, &scores, &cfg).unwrap();
        assert!((policy.accuracy - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(policy.max_tpr_gap, 0.0);
    }

    #[test]
    fn balanced_accuracy_prefers_catching_the_rare_positive() {
        // One positive at 0.6 among negatives {0.7, 0.65, 0.1 x8}:
        // plain accuracy prefers predicting everything negative (10/11),
        // balanced accuracy prefers the threshold that keeps TPR = 1.
        let groups = vec!["only".to_string(); 11];
        let mut labels = vec![1u8];
        labels.extend([0; 10]);
        let mut scores = vec![0.6];
        scores.extend([0.7, 0.65, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]);
        let accuracy_cfg = ThresholdSearchConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        let plain =
            optimize_thresholds_from_parts("g", &groups, &labels, &scores, &accuracy_cfg).unwrap();
        assert!(plain.thresholds["only"] > 0.7, "{:?}", plain.thresholds);
        let balanced_cfg = ThresholdSearchConfig {
            epsilon: 0.0,
            metric: PerformanceMetric::BalancedAccuracy,
            ..Default::default()
        };
        let balanced =
            optimize_thresholds_from_parts("g", &groups, &labels, &scores, &balanced_cfg).unwrap();
        assert_eq!(balanced.group_tpr["only"], 1.0);
        assert!(balanced.thresholds["only"] <= 0.6, "{:?}", balanced.thresholds);
    }

    #[test]
    fn single_group_reweigh_is_a_warned_noop() {
        let groups = vec!["only".to_string(); 4];
        let labels = [1u8, 0, 1, 0];
        let w = reweigh_from_parts("group", &groups, &labels).unwrap();
        assert!(w.single_group);
        assert!(w.row_weights.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn infeasible_grid_reports_epsilon() {
        // Grid {0.5} only: TPRs are 1 vs 0 and cannot be reconciled.
        let rows = [
            (1u8, 0.9, "a"),
            (0u8, 0.1, "a"),
            (1u8, 0.2, "b"),
            (0u8, 0.1, "b"),
        ];
        let cfg = ThresholdSearchConfig {
            epsilon: 0.1,
            grid: vec![0.5],
            metric: PerformanceMetric::Accuracy,
        };
        let err = optimize_thresholds(&score_table(&rows), "group", &cfg).unwrap_err();
        assert!(matches!(err, MitigateError::Infeasible { epsilon } if epsilon == 0.1));
    }

    #[test]
    fn apply_policy_uses_ge_rule() {
        let t = shifted_fixture();
        let policy = ThresholdPolicy {
            sensitive: "group".into(),
            objective: MitigationObjective::EqualOpportunity,
            epsilon: 0.0,
            thresholds: [("a".to_string(), 0.5), ("b".to_string(), 0.4)]
                .into_iter()
                .collect(),
            group_tpr: BTreeMap::new(),
            max_tpr_gap: 0.0,
            accuracy: 0.0,
        };
        let preds = apply_policy(&t, &policy).unwrap();
        // Group b score 0.4 is on the boundary and classifies positive.
        assert_eq!(preds[11], 1);
    }

    #[test]
    fn uniform_policy_equals_binarize() {
        let t = shifted_fixture();
        let policy = ThresholdPolicy {
            sensitive: "group".into(),
            objective: MitigationObjective::EqualOpportunity,
            epsilon: 1.0,
            thresholds: [("a".to_string(), 0.5), ("b".to_string(), 0.5)]
                .into_iter()
                .collect(),
            group_tpr: BTreeMap::new(),
            max_tpr_gap: 0.0,
            accuracy: 0.0,
        };
        let preds = apply_policy(&t, &policy).unwrap();
        let binarized = t.binarize(0.5).unwrap();
        assert_eq!(preds.as_slice(), binarized.predictions().unwrap());
    }

    #[test]
    fn unseen_group_is_an_error() {
        let t = shifted_fixture();
        let policy = ThresholdPolicy {
            sensitive: "group".into(),
            objective: MitigationObjective::EqualOpportunity,
            epsilon: 0.0,
            thresholds: [("a".to_string(), 0.5)].into_iter().collect(),
            group_tpr: BTreeMap::new(),
            max_tpr_gap: 0.0,
            accuracy: 0.0,
        };
        let err = apply_policy(&t, &policy).unwrap_err();
        assert!(matches!(err, MitigateError::UnknownGroup { ref group, .. } if group == "b"));
    }

    #[test]
    fn policy_round_trips_through_json() {
        let cfg = ThresholdSearchConfig::default();
        let policy = optimize_thresholds(&shifted_fixture(), "group", &cfg).unwrap();
        let json = serde_json::to_string(&policy).unwrap();
        let back: ThresholdPolicy = serde_json::from_str(&json).unwrap();
        assert_eq!(policy, back);
    }
}
