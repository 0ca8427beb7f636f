//! Global explainability: a shallow decision tree fitted to the black
//! box's predictions (never the ground truth), with fidelity and feature
//! importances.
//!
//! Induction is greedy top-down on Gini impurity decrease and fully
//! deterministic: ties are broken by feature column order, then by the
//! smaller split value. Numeric candidates are midpoints between
//! consecutive distinct values; categorical splits are one-vs-rest per
//! category. Rows with a missing numeric value route to the right
//! ("not less than") branch.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{AuditTable, Column, ColumnData, ColumnRole};

/// Surrogate induction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurrogateConfig {
    /// Depth budget; 0 fits a single leaf. Kept small so the whole tree
    /// stays readable.
    pub max_depth: usize,
    /// Minimum rows each side of a split must keep.
    pub min_leaf: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            max_depth: 4,
            min_leaf: 5,
        }
    }
}

/// Test applied at an internal node; rows passing it go left.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// Numeric: value < threshold (missing values fail the test).
    NumericLess { feature: String, threshold: f64 },
    /// Categorical: value equals the named category.
    CategoryIs { feature: String, category: String },
}

impl SplitRule {
    pub fn feature(&self) -> &str {
        match self {
            SplitRule::NumericLess { feature, .. } => feature,
            SplitRule::CategoryIs { feature, .. } => feature,
        }
    }

    fn describe(&self, passed: bool) -> String {
        match self {
            SplitRule::NumericLess { feature, threshold } => {
                if passed {
                    format!("{feature} < {threshold}")
                } else {
                    format!("{feature} >= {threshold}")
                }
            }
            SplitRule::CategoryIs { feature, category } => {
                if passed {
                    format!("{feature} = {category}")
                } else {
                    format!("{feature} != {category}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        rule: SplitRule,
        n: usize,
        /// Gini impurity decrease achieved by this split.
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class: u8,
        n: usize,
    },
}

/// Fitted surrogate tree together with the feature signature it expects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateTree {
    pub root: TreeNode,
    /// Feature column names in table order.
    pub features: Vec<String>,
    pub n: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("table has no feature columns")]
    NoFeatures,
    #[error("table has no prediction column; the surrogate explains predictions")]
    NoPrediction,
    #[error("need at least {min} rows, got {got}")]
    TooFewRows { min: usize, got: usize },
    #[error("evaluation table does not match the fitted features: {0}")]
    ColumnMismatch(String),
    #[error("evaluation table is empty")]
    EmptyEvaluation,
    #[error("{0}")]
    Invalid(String),
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// True when the row passes the rule (routes left).
fn passes(rule: &SplitRule, col: &Column, row: usize) -> bool {
    match (rule, &col.data) {
        (SplitRule::NumericLess { threshold, .. }, ColumnData::Numeric(v)) => {
            v[row].is_some_and(|x| x < *threshold)
        }
        (SplitRule::CategoryIs { category, .. }, ColumnData::Categorical(v)) => &v[row] == category,
        _ => false,
    }
}

struct FitContext<'a> {
    features: Vec<&'a Column>,
    target: &'a [u8],
    min_leaf: usize,
}

fn majority(target: &[u8], rows: &[usize]) -> (u8, usize) {
    let pos = rows.iter().filter(|&&r| target[r] == 1).count();
    let class = if pos * 2 > rows.len() { 1 } else { 0 };
    (class, pos)
}

fn best_split(ctx: &FitContext, rows: &[usize]) -> Option<(SplitRule, f64)> {
    let n = rows.len();
    let (_, pos) = majority(ctx.target, rows);
    let parent = gini(pos, n);
    let mut best: Option<(SplitRule, f64)> = None;

    let mut consider = |rule: SplitRule, col: &Column| {
        let mut nl = 0;
        let mut pl = 0;
        for &r in rows {
            if passes(&rule, col, r) {
                nl += 1;
                if ctx.target[r] == 1 {
                    pl += 1;
                }
            }
        }
        let nr = n - nl;
        if nl < ctx.min_leaf || nr < ctx.min_leaf {
            return;
        }
        let pr = pos - pl;
        let weighted =
            (nl as f64 / n as f64) * gini(pl, nl) + (nr as f64 / n as f64) * gini(pr, nr);
        let gain = parent - weighted;
        // Strict improvement keeps the earliest candidate on ties, which
        // realizes the column-order-then-smaller-value tie break.
        if gain > 0.0 && best.as_ref().is_none_or(|(_, bg)| gain > *bg) {
            best = Some((rule, gain));
        }
    };

    for col in &ctx.features {
        match &col.data {
            ColumnData::Numeric(values) => {
                let mut distinct: Vec<f64> = rows.iter().filter_map(|&r| values[r]).collect();
                distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite feature values"));
                distinct.dedup();
                for pair in distinct.windows(2) {
                    let threshold = (pair[0] + pair[1]) / 2.0;
                    consider(
                        SplitRule::NumericLess {
                            feature: col.name.clone(),
                            threshold,
                        },
                        col,
                    );
                }
            }
            ColumnData::Categorical(values) => {
                let mut cats: Vec<&String> = rows.iter().map(|&r| &values[r]).collect();
                cats.sort();
                cats.dedup();
                for cat in cats.into_iter().cloned().collect::<Vec<String>>() {
                    consider(
                        SplitRule::CategoryIs {
                            feature: col.name.clone(),
                            category: cat,
                        },
                        col,
                    );
                }
            }
            _ => {}
        }
    }
    best
}

fn grow(ctx: &FitContext, rows: Vec<usize>, depth_left: usize) -> TreeNode {
    let (class, pos) = majority(ctx.target, &rows);
    let pure = pos == 0 || pos == rows.len();
    if depth_left == 0 || pure || rows.len() < 2 * ctx.min_leaf {
        return TreeNode::Leaf {
            class,
            n: rows.len(),
        };
    }
    match best_split(ctx, &rows) {
        None => TreeNode::Leaf {
            class,
            n: rows.len(),
        },
        Some((rule, gain)) => {
            let col = ctx
                .features
                .iter()
                .find(|c| c.name == rule.feature())
                .expect("rule names a fitted feature");
            let (left, right): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&r| passes(&rule, col, r));
            let n = rows.len();
            TreeNode::Split {
                rule,
                n,
                gain,
                left: Box::new(grow(ctx, left, depth_left - 1)),
                right: Box::new(grow(ctx, right, depth_left - 1)),
            }
        }
    }
}

/// Fits a surrogate tree to the table's prediction column using its
/// feature columns. Constant predictions produce a single-leaf tree.
pub fn fit_surrogate(
    table: &AuditTable,
    config: &SurrogateConfig,
) -> Result<SurrogateTree, ExplainError> {
    if config.min_leaf == 0 {
        return Err(ExplainError::Invalid("min_leaf must be at least 1".into()));
    }
    let features = table.feature_columns();
    if features.is_empty() {
        return Err(ExplainError::NoFeatures);
    }
    let target = table.predictions().ok_or(ExplainError::NoPrediction)?;
    if table.n_rows() < config.min_leaf {
        return Err(ExplainError::TooFewRows {
            min: config.min_leaf,
            got: table.n_rows(),
        });
    }
    let ctx = FitContext {
        features: features.clone(),
        target,
        min_leaf: config.min_leaf,
    };
    let root = grow(&ctx, (0..table.n_rows()).collect(), config.max_depth);
    Ok(SurrogateTree {
        root,
        features: features.iter().map(|c| c.name.clone()).collect(),
        n: table.n_rows(),
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
    })
}

impl SurrogateTree {
    fn check_columns(&self, table: &AuditTable) -> Result<(), ExplainError> {
        for name in &self.features {
            match table.column(name) {
                Some(c) if c.role == ColumnRole::Feature => {}
                Some(_) => {
                    return Err(ExplainError::ColumnMismatch(format!(
                        "`{name}` is not a feature column"
                    )))
                }
                None => {
                    return Err(ExplainError::ColumnMismatch(format!(
                        "missing feature column `{name}`"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Routes one row to its leaf class.
    pub fn predict_row(&self, table: &AuditTable, row: usize) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Split {
                    rule, left, right, ..
                } => {
                    let col = table.column(rule.feature()).expect("checked feature");
                    node = if passes(rule, col, row) { left } else { right };
                }
            }
        }
    }

    /// One line per root-to-leaf path, conditions joined with " and ".
    pub fn rule_lines(&self) -> Vec<String> {
        fn walk(node: &TreeNode, path: &mut Vec<String>, out: &mut Vec<String>) {
            match node {
                TreeNode::Leaf { class, n } => {
                    if path.is_empty() {
                        out.push(format!("class {class} (n={n})"));
                    } else {
                        out.push(format!("{} → class {class} (n={n})", path.join(" and ")));
                    }
                }
                TreeNode::Split {
                    rule, left, right, ..
                } => {
                    path.push(rule.describe(true));
                    walk(left, path, out);
                    path.pop();
                    path.push(rule.describe(false));
                    walk(right, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }
}

/// Fraction of rows where the surrogate agrees with the black-box
/// prediction column.
pub fn surrogate_fidelity(tree: &SurrogateTree, table: &AuditTable) -> Result<f64, ExplainError> {
    tree.check_columns(table)?;
    let target = table.predictions().ok_or(ExplainError::NoPrediction)?;
    if table.n_rows() == 0 {
        return Err(ExplainError::EmptyEvaluation);
    }
    let agree = (0..table.n_rows())
        .filter(|&r| tree.predict_row(table, r) == target[r])
        .count();
    Ok(agree as f64 / table.n_rows() as f64)
}

/// Importance of each split feature: the sum over its internal nodes of
/// (node sample share) × (impurity decrease), normalized to sum to 1.
/// Empty for a single-leaf tree. Sorted descending, ties by name.
pub fn feature_importance(tree: &SurrogateTree) -> Vec<(String, f64)> {
    use std::collections::BTreeMap;
    fn walk(node: &TreeNode, n_root: f64, acc: &mut BTreeMap<String, f64>) {
        if let TreeNode::Split {
            rule,
            n,
            gain,
            left,
            right,
        } = node
        {
            *acc.entry(rule.feature().to_owned()).or_default() += (*n as f64 / n_root) * gain;
            walk(left, n_root, acc);
            walk(right, n_root, acc);
        }
    }
    let mut acc = BTreeMap::new();
    walk(&tree.root, tree.n as f64, &mut acc);
    let total: f64 = acc.values().sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut out: Vec<(String, f64)> = acc
        .into_iter()
        .map(|(name, raw)| (name, raw / total))
        .collect();
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("importances are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}
