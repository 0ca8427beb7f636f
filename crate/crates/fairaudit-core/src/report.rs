//! Canonical audit report: one deterministic document assembling every
//! module's output, plus a human-readable markdown view.
//!
//! The canonical JSON body has sorted keys and is byte-stable for
//! identical inputs and config. Every numeric quantity carries both a
//! display form (shortest decimal capped at 6 significant digits) and the
//! exact machine value; undefined quantities render as the explicit
//! string "undefined". The content digest covers the canonical body with
//! the generation timestamp (and only the timestamp) removed.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checklist::{Assessment, PrincipleVerdict};
use crate::explain::SurrogateTree;
use crate::metrics::{DisparitySummary, FairnessReport, GroupConfusion, Verdict};
use crate::mitigate::{ThresholdPolicy, WeightAssignment};
use crate::privacy::RiskScan;
use crate::proxy::ProxyScan;

/// A possibly-undefined numeric value. Serializes as
/// `{"display": "...", "exact": <number|null>}`; non-finite inputs are
/// treated as undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity(Option<f64>);

impl Quantity {
    pub fn new(value: Option<f64>) -> Self {
        Quantity(value.filter(|v| v.is_finite()))
    }

    pub fn defined(value: f64) -> Self {
        Quantity::new(Some(value))
    }

    pub fn value(&self) -> Option<f64> {
        self.0
    }

    pub fn display(&self) -> String {
        match self.0 {
            Some(v) => format_sig(v, 6),
            None => "undefined".into(),
        }
    }
}

impl From<Option<f64>> for Quantity {
    fn from(value: Option<f64>) -> Self {
        Quantity::new(value)
    }
}

impl From<f64> for Quantity {
    fn from(value: f64) -> Self {
        Quantity::defined(value)
    }
}

impl Serialize for Quantity {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Quantity", 2)?;
        s.serialize_field("display", &self.display())?;
        s.serialize_field("exact", &self.0)?;
        s.end()
    }
}

fn sig_digit_count(text: &str) -> usize {
    text.chars()
        .filter(|c| c.is_ascii_digit())
        .collect::<String>()
        .trim_start_matches('0')
        .len()
}

/// Shortest round-trip decimal, capped at `sig` significant digits.
pub fn format_sig(value: f64, sig: usize) -> String {
    if value == 0.0 {
        return "0".into();
    }
    let shortest = format!("{value}");
    if sig_digit_count(&shortest) <= sig {
        return shortest;
    }
    let exp_form = format!("{:.*e}", sig - 1, value);
    let (mantissa, exponent) = exp_form
        .split_once('e')
        .expect("exponential format always contains e");
    let exponent: i32 = exponent.parse().expect("valid exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = exponent + 1; // digits before the decimal point
    let mut body = if point <= 0 {
        format!("0.{}{}", "0".repeat(-point as usize), digits)
    } else if (point as usize) >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        format!(
            "{}.{}",
            &digits[..point as usize],
            &digits[point as usize..]
        )
    };
    if body.contains('.') {
        body = body.trim_end_matches('0').trim_end_matches('.').to_owned();
    }
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// A report section is either computed content or an explicit skip note.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Section<T> {
    Present(T),
    Skipped { skipped: String },
}

impl<T> Section<T> {
    pub fn skipped(reason: &str) -> Self {
        Section::Skipped {
            skipped: reason.into(),
        }
    }

    pub fn as_present(&self) -> Option<&T> {
        match self {
            Section::Present(t) => Some(t),
            Section::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupConfusionDoc {
    pub group: String,
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
    pub n: u64,
    pub base_rate: Quantity,
    pub selection_rate: Quantity,
    pub tpr: Quantity,
    pub fpr: Quantity,
    pub ppv: Quantity,
}

impl From<&GroupConfusion> for GroupConfusionDoc {
    fn from(c: &GroupConfusion) -> Self {
        GroupConfusionDoc {
            group: c.group.clone(),
            true_pos: c.true_pos,
            false_pos: c.false_pos,
            true_neg: c.true_neg,
            false_neg: c.false_neg,
            n: c.n,
            base_rate: c.base_rate.into(),
            selection_rate: c.selection_rate.into(),
            tpr: c.tpr.into(),
            fpr: c.fpr.into(),
            ppv: c.ppv.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDisparityDoc {
    pub group: String,
    pub spd: Quantity,
    pub di: Quantity,
    pub eod: Quantity,
    pub aod: Quantity,
    pub ppd: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessDoc {
    pub privileged: String,
    pub epsilon: f64,
    pub groups: Vec<GroupDisparityDoc>,
    pub summary: BTreeMap<String, Quantity>,
    pub independence: Verdict,
    pub separation: Verdict,
    pub sufficiency: Verdict,
}

impl From<&FairnessReport> for FairnessDoc {
    fn from(r: &FairnessReport) -> Self {
        let DisparitySummary {
            spd,
            di,
            eod,
            aod,
            ppd,
        } = r.summary;
        FairnessDoc {
            privileged: r.privileged.clone(),
            epsilon: r.epsilon,
            groups: r
                .groups
                .iter()
                .map(|g| GroupDisparityDoc {
                    group: g.group.clone(),
                    spd: g.spd.into(),
                    di: g.di.into(),
                    eod: g.eod.into(),
                    aod: g.aod.into(),
                    ppd: g.ppd.into(),
                })
                .collect(),
            summary: [
                ("spd".to_owned(), spd.into()),
                ("di".to_owned(), di.into()),
                ("eod".to_owned(), eod.into()),
                ("aod".to_owned(), aod.into()),
                ("ppd".to_owned(), ppd.into()),
            ]
            .into_iter()
            .collect(),
            independence: r.independence,
            separation: r.separation,
            sufficiency: r.sufficiency,
        }
    }
}

/// Metrics for one sensitive column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitiveMetricsDoc {
    pub confusions: Vec<GroupConfusionDoc>,
    pub fairness: FairnessDoc,
    pub mutual_information: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSection {
    /// Binarization threshold applied to scores, when one was needed.
    pub threshold_used: Option<f64>,
    pub per_sensitive: BTreeMap<String, SensitiveMetricsDoc>,
    pub theil_alpha: f64,
    pub theil_index: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxySection {
    pub threshold: f64,
    pub findings: Vec<ProxyFindingDoc>,
    pub skipped: Vec<SkippedPairDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyFindingDoc {
    pub feature: String,
    pub sensitive: String,
    pub method: String,
    pub score: Quantity,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPairDoc {
    pub feature: String,
    pub sensitive: String,
    pub reason: String,
}

impl From<&ProxyScan> for ProxySection {
    fn from(scan: &ProxyScan) -> Self {
        ProxySection {
            threshold: scan.threshold,
            findings: scan
                .findings
                .iter()
                .map(|f| ProxyFindingDoc {
                    feature: f.feature.clone(),
                    sensitive: f.sensitive.clone(),
                    method: f.method.as_str().into(),
                    score: f.score.into(),
                    flagged: f.flagged,
                })
                .collect(),
            skipped: scan
                .skipped
                .iter()
                .map(|s| SkippedPairDoc {
                    feature: s.feature.clone(),
                    sensitive: s.sensitive.clone(),
                    reason: s.reason.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReweighCellDoc {
    pub group: String,
    pub label: u8,
    pub weight: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReweighDoc {
    pub sensitive: String,
    pub cells: Vec<ReweighCellDoc>,
    pub total_weight: Quantity,
    pub single_group: bool,
}

impl From<&WeightAssignment> for ReweighDoc {
    fn from(w: &WeightAssignment) -> Self {
        ReweighDoc {
            sensitive: w.sensitive.clone(),
            cells: w
                .cell_weights
                .iter()
                .map(|((group, label), weight)| ReweighCellDoc {
                    group: group.clone(),
                    label: *label,
                    weight: (*weight).into(),
                })
                .collect(),
            total_weight: w.row_weights.iter().sum::<f64>().into(),
            single_group: w.single_group,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDoc {
    pub sensitive: String,
    pub objective: String,
    pub epsilon: f64,
    pub thresholds: BTreeMap<String, Quantity>,
    pub group_tpr: BTreeMap<String, Quantity>,
    pub max_tpr_gap: Quantity,
    pub accuracy: Quantity,
}

impl From<&ThresholdPolicy> for PolicyDoc {
    fn from(p: &ThresholdPolicy) -> Self {
        PolicyDoc {
            sensitive: p.sensitive.clone(),
            objective: "equal_opportunity".into(),
            epsilon: p.epsilon,
            thresholds: p
                .thresholds
                .iter()
                .map(|(g, t)| (g.clone(), (*t).into()))
                .collect(),
            group_tpr: p
                .group_tpr
                .iter()
                .map(|(g, t)| (g.clone(), (*t).into()))
                .collect(),
            max_tpr_gap: p.max_tpr_gap.into(),
            accuracy: p.accuracy.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitigationSection {
    pub reweigh: ReweighDoc,
    pub policy: PolicyDoc,
    /// Fairness on the policy's predictions, same sensitive column.
    pub post_fairness: FairnessDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceDoc {
    pub feature: String,
    pub importance: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationSection {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub fidelity: Quantity,
    pub importances: Vec<ImportanceDoc>,
    pub rules: Vec<String>,
    pub tree: serde_json::Value,
}

impl ExplanationSection {
    pub fn build(
        tree: &SurrogateTree,
        fidelity: f64,
        importances: &[(String, f64)],
    ) -> Result<Self, ReportError> {
        Ok(ExplanationSection {
            max_depth: tree.max_depth,
            min_leaf: tree.min_leaf,
            fidelity: fidelity.into(),
            importances: importances
                .iter()
                .map(|(feature, importance)| ImportanceDoc {
                    feature: feature.clone(),
                    importance: (*importance).into(),
                })
                .collect(),
            rules: tree.rule_lines(),
            tree: serde_json::to_value(&tree.root)
                .map_err(|e| ReportError::Serialize(e.to_string()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDoc {
    pub size: usize,
    pub rows: Vec<usize>,
    /// Quasi-identifier tuple; omitted unless value disclosure was
    /// explicitly requested (a privacy report must not leak the data it
    /// audits).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacySection {
    pub quasi_identifiers: Vec<String>,
    pub k: usize,
    pub n_rows: usize,
    pub class_count: usize,
    pub unique_rate: Quantity,
    pub violating_rows: Vec<usize>,
    pub classes: Vec<ClassDoc>,
}

impl PrivacySection {
    pub fn build(scan: &RiskScan, include_values: bool) -> Self {
        PrivacySection {
            quasi_identifiers: scan.quasi_identifiers.clone(),
            k: scan.k,
            n_rows: scan.n_rows,
            class_count: scan.classes.len(),
            unique_rate: scan.unique_rate.into(),
            violating_rows: scan.violating_rows.clone(),
            classes: scan
                .classes
                .iter()
                .map(|c| ClassDoc {
                    size: c.size,
                    rows: c.rows.clone(),
                    values: include_values.then(|| c.key.clone()),
                })
                .collect(),
        }
    }
}

/// One questionnaire entry with the answer given, for rendering the
/// questionnaire grouped by principle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentQuestionDoc {
    pub id: String,
    pub principle: crate::checklist::Principle,
    pub answer: crate::checklist::Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentSection {
    pub assessment: Assessment,
    /// Questions in questionnaire order with their answers.
    pub questions: Vec<AssessmentQuestionDoc>,
    pub warnings: Vec<String>,
}

impl AssessmentSection {
    pub fn build(
        def: &crate::checklist::QuestionnaireDef,
        assessment: Assessment,
        warnings: Vec<String>,
    ) -> Self {
        let questions = def
            .questions
            .iter()
            .filter_map(|q| {
                assessment
                    .answers
                    .get(&q.id)
                    .map(|answer| AssessmentQuestionDoc {
                        id: q.id.clone(),
                        principle: q.principle,
                        answer: *answer,
                    })
            })
            .collect();
        AssessmentSection {
            assessment,
            questions,
            warnings,
        }
    }
}

/// Every module's output slot, present or explicitly skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSections {
    pub metrics: Section<MetricsSection>,
    pub proxies: Section<ProxySection>,
    pub mitigation: Section<MitigationSection>,
    pub explanation: Section<ExplanationSection>,
    pub privacy: Section<PrivacySection>,
    pub assessment: Section<AssessmentSection>,
}

impl ReportSections {
    pub fn all_skipped(reason: &str) -> Self {
        ReportSections {
            metrics: Section::skipped(reason),
            proxies: Section::skipped(reason),
            mitigation: Section::skipped(reason),
            explanation: Section::skipped(reason),
            privacy: Section::skipped(reason),
            assessment: Section::skipped(reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub tool_version: String,
    /// Content hash (sha-256 hex) of each input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    /// Echo of the configuration the run used.
    pub config: serde_json::Value,
    pub sections: ReportSections,
    /// Generation time; excluded from the canonical digest.
    pub timestamp: String,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("every section is skipped; nothing to report")]
    AllSkipped,
    #[error("serialization failed: {0}")]
    Serialize(String),
}

/// Sha-256 hex digest of raw bytes, used for input files.
pub fn content_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the report, requiring at least one computed section.
pub fn assemble(
    tool_version: &str,
    sections: ReportSections,
    config: serde_json::Value,
    input_digests: BTreeMap<String, String>,
    timestamp: String,
) -> Result<AuditReport, ReportError> {
    let any_present = sections.metrics.as_present().is_some()
        || sections.proxies.as_present().is_some()
        || sections.mitigation.as_present().is_some()
        || sections.explanation.as_present().is_some()
        || sections.privacy.as_present().is_some()
        || sections.assessment.as_present().is_some();
    if !any_present {
        return Err(ReportError::AllSkipped);
    }
    Ok(AuditReport {
        tool_version: tool_version.into(),
        input_digests,
        config,
        sections,
        timestamp,
    })
}

impl AuditReport {
    fn to_sorted_value(&self) -> Result<serde_json::Value, ReportError> {
        serde_json::to_value(self).map_err(|e| ReportError::Serialize(e.to_string()))
    }

    /// Full report document with sorted keys, timestamp included.
    pub fn full_json(&self) -> Result<String, ReportError> {
        let value = self.to_sorted_value()?;
        serde_json::to_string_pretty(&value).map_err(|e| ReportError::Serialize(e.to_string()))
    }

    /// Canonical body: sorted keys, timestamp (and only the timestamp)
    /// removed. Byte-stable for identical inputs and config.
    pub fn canonical_json(&self) -> Result<String, ReportError> {
        let mut value = self.to_sorted_value()?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timestamp");
        }
        serde_json::to_string(&value).map_err(|e| ReportError::Serialize(e.to_string()))
    }

    /// Sha-256 hex digest of the canonical body.
    pub fn digest(&self) -> Result<String, ReportError> {
        Ok(content_digest(self.canonical_json()?.as_bytes()))
    }

    /// Human-readable view. Pure rendering: nothing is recomputed.
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, line: &str| {
            out.push_str(line);
            out.push('\n');
        };
        push(&mut out, "# Audit report");
        push(&mut out, "");
        push(&mut out, &format!("- tool version: {}", self.tool_version));
        for (path, digest) in &self.input_digests {
            push(&mut out, &format!("- input `{path}`: sha256 {digest}"));
        }
        push(&mut out, "");

        push(&mut out, "## Principles");
        push(&mut out, "");
        match &self.sections.assessment {
            Section::Present(a) => {
                push(&mut out, "| principle | verdict |");
                push(&mut out, "|---|---|");
                for (principle, verdict) in &a.assessment.verdicts {
                    let shown = match verdict {
                        PrincipleVerdict::Blocked => "BLOCKED".to_owned(),
                        v => v.as_str().to_owned(),
                    };
                    push(&mut out, &format!("| {} | {} |", principle.as_str(), shown));
                }
            }
            Section::Skipped { skipped } => {
                push(&mut out, &format!("assessment skipped: {skipped}"));
            }
        }
        push(&mut out, "");

        push(&mut out, "## Metrics");
        push(&mut out, "");
        match &self.sections.metrics {
            Section::Skipped { skipped } => push(&mut out, &format!("skipped: {skipped}")),
            Section::Present(m) => {
                if let Some(t) = m.threshold_used {
                    push(
                        &mut out,
                        &format!("scores binarized at threshold {}", format_sig(t, 6)),
                    );
                    push(&mut out, "");
                }
                for (sensitive, doc) in &m.per_sensitive {
                    push(&mut out, &format!("### sensitive column `{sensitive}`"));
                    push(&mut out, "");
                    push(&mut out, "| group | n | selection rate | TPR | FPR | PPV |");
                    push(&mut out, "|---|---|---|---|---|---|");
                    for c in &doc.confusions {
                        push(
                            &mut out,
                            &format!(
                                "| {} | {} | {} | {} | {} | {} |",
                                c.group,
                                c.n,
                                c.selection_rate.display(),
                                c.tpr.display(),
                                c.fpr.display(),
                                c.ppv.display()
                            ),
                        );
                    }
                    push(&mut out, "");
                    push(
                        &mut out,
                        &format!(
                            "privileged group `{}`, tolerance {}",
                            doc.fairness.privileged,
                            format_sig(doc.fairness.epsilon, 6)
                        ),
                    );
                    push(&mut out, "");
                    push(&mut out, "| group | SPD | DI | EOD | AOD | PPD |");
                    push(&mut out, "|---|---|---|---|---|---|");
                    for g in &doc.fairness.groups {
                        push(
                            &mut out,
                            &format!(
                                "| {} | {} | {} | {} | {} | {} |",
                                g.group,
                                g.spd.display(),
                                g.di.display(),
                                g.eod.display(),
                                g.aod.display(),
                                g.ppd.display()
                            ),
                        );
                    }
                    push(&mut out, "");
                    push(
                        &mut out,
                        &format!(
                            "criteria: independence {}, separation {}, sufficiency {}",
                            doc.fairness.independence.as_str(),
                            doc.fairness.separation.as_str(),
                            doc.fairness.sufficiency.as_str()
                        ),
                    );
                    push(
                        &mut out,
                        &format!(
                            "mutual information I(prediction; {sensitive}) = {}",
                            doc.mutual_information.display()
                        ),
                    );
                    push(&mut out, "");
                }
                push(
                    &mut out,
                    &format!(
                        "generalized entropy (alpha = {}): {}",
                        format_sig(m.theil_alpha, 6),
                        m.theil_index.display()
                    ),
                );
            }
        }
        push(&mut out, "");

        push(&mut out, "## Proxies");
        push(&mut out, "");
        match &self.sections.proxies {
            Section::Skipped { skipped } => push(&mut out, &format!("skipped: {skipped}")),
            Section::Present(p) => {
                if p.findings.is_empty() {
                    push(&mut out, "no proxy findings");
                } else {
                    push(
                        &mut out,
                        "| feature | sensitive | method | score | flagged |",
                    );
                    push(&mut out, "|---|---|---|---|---|");
                    for f in &p.findings {
                        push(
                            &mut out,
                            &format!(
                                "| {} | {} | {} | {} | {} |",
                                f.feature,
                                f.sensitive,
                                f.method,
                                f.score.display(),
                                if f.flagged { "yes" } else { "no" }
                            ),
                        );
                    }
                }
                for s in &p.skipped {
                    push(
                        &mut out,
                        &format!(
                            "skipped pair ({}, {}): {}",
                            s.feature, s.sensitive, s.reason
                        ),
                    );
                }
            }
        }
        push(&mut out, "");

        push(&mut out, "## Mitigation");
        push(&mut out, "");
        match &self.sections.mitigation {
            Section::Skipped { skipped } => push(&mut out, &format!("skipped: {skipped}")),
            Section::Present(m) => {
                push(
                    &mut out,
                    &format!(
                        "reweighing on `{}` (total weight {})",
                        m.reweigh.sensitive,
                        m.reweigh.total_weight.display()
                    ),
                );
                push(&mut out, "");
                push(&mut out, "| group | label | weight |");
                push(&mut out, "|---|---|---|");
                for c in &m.reweigh.cells {
                    push(
                        &mut out,
                        &format!("| {} | {} | {} |", c.group, c.label, c.weight.display()),
                    );
                }
                push(&mut out, "");
                push(
                    &mut out,
                    &format!(
                        "threshold policy (objective {}, epsilon {}, accuracy {}):",
                        m.policy.objective,
                        format_sig(m.policy.epsilon, 6),
                        m.policy.accuracy.display()
                    ),
                );
                for (group, theta) in &m.policy.thresholds {
                    let tpr = m
                        .policy
                        .group_tpr
                        .get(group)
                        .map(|q| q.display())
                        .unwrap_or_else(|| "undefined".into());
                    push(
                        &mut out,
                        &format!(
                            "- group `{group}`: threshold {}, TPR {tpr}",
                            theta.display()
                        ),
                    );
                }
                push(
                    &mut out,
                    &format!(
                        "post-mitigation criteria: independence {}, separation {}, sufficiency {}",
                        m.post_fairness.independence.as_str(),
                        m.post_fairness.separation.as_str(),
                        m.post_fairness.sufficiency.as_str()
                    ),
                );
            }
        }
        push(&mut out, "");

        push(&mut out, "## Explanation");
        push(&mut out, "");
        match &self.sections.explanation {
            Section::Skipped { skipped } => push(&mut out, &format!("skipped: {skipped}")),
            Section::Present(e) => {
                push(
                    &mut out,
                    &format!(
                        "surrogate tree (max depth {}, min leaf {}), fidelity {}",
                        e.max_depth,
                        e.min_leaf,
                        e.fidelity.display()
                    ),
                );
                push(&mut out, "");
                for rule in &e.rules {
                    push(&mut out, &format!("- {rule}"));
                }
                if !e.importances.is_empty() {
                    push(&mut out, "");
                    push(&mut out, "feature importances:");
                    for imp in &e.importances {
                        push(
                            &mut out,
                            &format!("- {}: {}", imp.feature, imp.importance.display()),
                        );
                    }
                }
            }
        }
        push(&mut out, "");

        push(&mut out, "## Privacy");
        push(&mut out, "");
        match &self.sections.privacy {
            Section::Skipped { skipped } => push(&mut out, &format!("skipped: {skipped}")),
            Section::Present(p) => {
                push(
                    &mut out,
                    &format!(
                        "quasi-identifiers: {}; k = {}; {} classes over {} rows",
                        p.quasi_identifiers.join(", "),
                        p.k,
                        p.class_count,
                        p.n_rows
                    ),
                );
                push(
                    &mut out,
                    &format!("unique-row rate: {}", p.unique_rate.display()),
                );
                if p.violating_rows.is_empty() {
                    push(&mut out, &format!("no rows violate k = {}", p.k));
                } else {
                    push(
                        &mut out,
                        &format!(
                            "{} row(s) violate k = {}: {:?}",
                            p.violating_rows.len(),
                            p.k,
                            p.violating_rows
                        ),
                    );
                }
            }
        }
        push(&mut out, "");

        push(&mut out, "## Assessment");
        push(&mut out, "");
        match &self.sections.assessment {
            Section::Skipped { skipped } => push(&mut out, &format!("skipped: {skipped}")),
            Section::Present(a) => {
                for principle in crate::checklist::Principle::all() {
                    let mine: Vec<&AssessmentQuestionDoc> = a
                        .questions
                        .iter()
                        .filter(|q| q.principle == principle)
                        .collect();
                    if mine.is_empty() {
                        continue;
                    }
                    push(&mut out, &format!("### {}", principle.as_str()));
                    for q in mine {
                        push(&mut out, &format!("- {}: {}", q.id, q.answer.as_str()));
                    }
                    push(&mut out, "");
                }
                if a.assessment.items.is_empty() {
                    push(&mut out, "no open items");
                } else {
                    push(&mut out, "| question | kind | check | status |");
                    push(&mut out, "|---|---|---|---|");
                    for item in &a.assessment.items {
                        push(
                            &mut out,
                            &format!(
                                "| {} | {} | {} | {} |",
                                item.question_id,
                                item.kind.as_str(),
                                item.check.as_str(),
                                item.status.as_str()
                            ),
                        );
                    }
                }
                for w in &a.warnings {
                    push(&mut out, &format!("warning: {w}"));
                }
            }
        }
        out
    }
}
