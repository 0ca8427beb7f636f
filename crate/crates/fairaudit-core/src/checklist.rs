//! Questionnaire-driven responsible-AI checklist.
//!
//! A questionnaire assigns each question to one of five principles and
//! marks how it is addressed: through training (a risk answer opens a
//! human-review item) or through a technical tool (a risk answer opens a
//! required check that must be satisfied by computed evidence before the
//! principle can pass). Evidence gating is quantitative: a failed check
//! blocks the principle; anything short of demonstrated compliance never
//! silently passes.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::FairnessReport;
use crate::privacy::RiskScan;
use crate::proxy::ProxyScan;

/// The five governance principles questions are filed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Principle {
    Fair,
    TransparentExplainable,
    HumanCentric,
    PrivacySecurity,
    ThirdParties,
}

impl Principle {
    pub fn as_str(self) -> &'static str {
        match self {
            Principle::Fair => "fair",
            Principle::TransparentExplainable => "transparent_explainable",
            Principle::HumanCentric => "human_centric",
            Principle::PrivacySecurity => "privacy_security",
            Principle::ThirdParties => "third_parties",
        }
    }

    pub fn all() -> [Principle; 5] {
        [
            Principle::Fair,
            Principle::TransparentExplainable,
            Principle::HumanCentric,
            Principle::PrivacySecurity,
            Principle::ThirdParties,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    NotApplicable,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::NotApplicable => "not_applicable",
        }
    }
}

/// How a question is addressed in the organization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backing {
    Training,
    TechnicalTool,
}

/// Computed check a technical-tool question can require.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkedCheck {
    ProxyScan,
    FairnessMetrics,
    ReidentificationScan,
    SurrogateFidelity,
    /// Explicitly no in-scope check; a risk answer opens a human-review
    /// item instead of a required check.
    None,
}

impl LinkedCheck {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkedCheck::ProxyScan => "proxy_scan",
            LinkedCheck::FairnessMetrics => "fairness_metrics",
            LinkedCheck::ReidentificationScan => "reidentification_scan",
            LinkedCheck::SurrogateFidelity => "surrogate_fidelity",
            LinkedCheck::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub principle: Principle,
    pub text: String,
    /// The answer that raises concern; yes or no, never not_applicable.
    pub risk_answer: Answer,
    pub backing: Backing,
    /// Required for technical-tool questions ("none" is an acceptable
    /// explicit value); optional for training-backed questions.
    pub linked_check: Option<LinkedCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireDef {
    pub id: String,
    pub version: String,
    pub questions: Vec<Question>,
}

/// Thresholds the evidence gate compares computed results against.
/// These are the documented defaults for the whole toolkit: metric
/// tolerance 0.10, disparate-impact band [0.8, 1.25] (the four-fifths
/// rule), class size k = 5, surrogate fidelity at least 0.8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdProfile {
    pub epsilon: f64,
    pub di_low: f64,
    pub di_high: f64,
    pub k: usize,
    pub min_fidelity: f64,
}

impl Default for ThresholdProfile {
    fn default() -> Self {
        ThresholdProfile {
            epsilon: 0.10,
            di_low: 0.8,
            di_high: 1.25,
            k: 5,
            min_fidelity: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    HumanReview,
    RequiredCheck,
}

impl ItemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::HumanReview => "human_review",
            ItemKind::RequiredCheck => "required_check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Open,
    Satisfied,
    Failed,
}

impl ItemStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemStatus::Open => "open",
            ItemStatus::Satisfied => "satisfied",
            ItemStatus::Failed => "failed",
        }
    }
}

/// Follow-up raised by a risk answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentItem {
    pub question_id: String,
    pub principle: Principle,
    pub kind: ItemKind,
    pub check: LinkedCheck,
    pub status: ItemStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrincipleVerdict {
    Pass,
    Attention,
    Blocked,
}

impl PrincipleVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            PrincipleVerdict::Pass => "pass",
            PrincipleVerdict::Attention => "attention",
            PrincipleVerdict::Blocked => "blocked",
        }
    }
}

/// Evaluated questionnaire: answers, the items they opened, and one
/// verdict per principle. Immutable; evidence attaches via
/// [`attach_evidence`], which returns an updated copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub questionnaire_id: String,
    pub questionnaire_version: String,
    pub answers: BTreeMap<String, Answer>,
    pub items: Vec<AssessmentItem>,
    pub verdicts: BTreeMap<Principle, PrincipleVerdict>,
    pub profile: ThresholdProfile,
}

/// Computed results offered to open required checks.
#[derive(Debug, Clone)]
pub enum Evidence<'a> {
    /// One fairness report per audited sensitive column; all must be
    /// inside the profile's bounds.
    FairnessMetrics(Vec<&'a FairnessReport>),
    ProxyScan(&'a ProxyScan),
    Reidentification(&'a RiskScan),
    SurrogateFidelity(f64),
}

impl Evidence<'_> {
    fn check(&self) -> LinkedCheck {
        match self {
            Evidence::FairnessMetrics(_) => LinkedCheck::FairnessMetrics,
            Evidence::ProxyScan(_) => LinkedCheck::ProxyScan,
            Evidence::Reidentification(_) => LinkedCheck::ReidentificationScan,
            Evidence::SurrogateFidelity(_) => LinkedCheck::SurrogateFidelity,
        }
    }
}

#[derive(Debug, Error)]
pub enum ChecklistError {
    #[error("duplicate question id `{0}`")]
    DuplicateId(String),
    #[error("question `{0}` is backed by a technical tool but declares no linked check")]
    MissingLinkedCheck(String),
    #[error("question `{0}` has not_applicable as its risk answer")]
    BadRiskAnswer(String),
    #[error("answers reference unknown question id `{0}`")]
    UnknownQuestion(String),
    #[error("question `{0}` is unanswered")]
    Unanswered(String),
    #[error("failed to parse questionnaire: {0}")]
    Parse(String),
}

/// The built-in questionnaire: 19 questions across the five principles.
pub fn builtin_questionnaire() -> QuestionnaireDef {
    let q = |id: &str,
             principle: Principle,
             text: &str,
             risk_answer: Answer,
             backing: Backing,
             linked_check: Option<LinkedCheck>| Question {
        id: id.into(),
        principle,
        text: text.into(),
        risk_answer,
        backing,
        linked_check,
    };
    use Answer::{No, Yes};
    use Backing::{TechnicalTool, Training};
    use Principle::*;
    QuestionnaireDef {
        id: "builtin".into(),
        version: "1".into(),
        questions: vec![
            q(
                "sensitive-variables",
                Fair,
                "Does your data set contain sensitive variables?",
                Yes,
                Training,
                None,
            ),
            q(
                "proxy-correlation",
                Fair,
                "Does any of the variables strongly correlate with sensitive variables?",
                Yes,
                TechnicalTool,
                Some(LinkedCheck::ProxyScan),
            ),
            q(
                "dataset-bias",
                Fair,
                "Is/are your training data set(s) biased with respect to the target groups in case those include \u{201c}protected groups\u{201d}?",
                Yes,
                TechnicalTool,
                Some(LinkedCheck::FairnessMetrics),
            ),
            q(
                "error-impact",
                Fair,
                "Is there an important impact in the specific domain of false positives (FP) and/or false negatives (FN)?",
                Yes,
                Training,
                None,
            ),
            // Filed under Fair: the check it requires compares error rates
            // across protected groups, which is a fairness criterion.
            q(
                "error-distribution",
                Fair,
                "Are FP and FN unequally distributed across different (protected) groups?",
                Yes,
                TechnicalTool,
                Some(LinkedCheck::FairnessMetrics),
            ),
            q(
                "human-impersonation",
                TransparentExplainable,
                "Could the user think that s/he interacts with a person rather than with your system?",
                Yes,
                Training,
                None,
            ),
            q(
                "life-impact",
                TransparentExplainable,
                "Is the AI system\u{2019}s outcome significantly affecting people\u{2019}s lives?",
                Yes,
                Training,
                None,
            ),
            q(
                "understanding-gap",
                TransparentExplainable,
                "Do you lack sufficient understanding of how the AI-generated decisions are constructed for the domain at hand?",
                Yes,
                Training,
                None,
            ),
            q(
                "explanation-request",
                TransparentExplainable,
                "Could the user request an explanation for the AI-generated conclusion?",
                Yes,
                Training,
                None,
            ),
            q(
                "data-purpose-clarity",
                TransparentExplainable,
                "Is it difficult to be explicit about whether the data used is personal or non-personal, and about the purpose the AI system uses the data for?",
                Yes,
                Training,
                None,
            ),
            q(
                "algorithm-transparency",
                TransparentExplainable,
                "Is it possible to understand how the algorithm has reached its conclusions? For example, what variables have influenced the result of the algorithm and how much?",
                No,
                TechnicalTool,
                Some(LinkedCheck::SurrogateFidelity),
            ),
            q(
                "human-rights",
                HumanCentric,
                "Is there a possibility that your P&S has a negative impact on Human Rights?",
                Yes,
                Training,
                None,
            ),
            q(
                "sdg-impact",
                HumanCentric,
                "Does your P&S negatively impact the UN\u{2019}s SDGs?",
                Yes,
                Training,
                None,
            ),
            q(
                "personal-data",
                PrivacySecurity,
                "Does your AI system use personal data?",
                Yes,
                Training,
                None,
            ),
            q(
                "pia-concerns",
                PrivacySecurity,
                "Has your Privacy Impact Assessment revealed any important concerns?",
                Yes,
                Training,
                None,
            ),
            q(
                "reidentification-risk",
                PrivacySecurity,
                "In case your P&S uses anonymized data, is there an unreasonable risk of re-identification?",
                Yes,
                TechnicalTool,
                Some(LinkedCheck::ReidentificationScan),
            ),
            q(
                "security-concerns",
                PrivacySecurity,
                "Has your Security Assessment revealed any important concerns?",
                Yes,
                Training,
                None,
            ),
            // Adversarial robustness testing needs model access, which
            // this toolkit does not have; the explicit "none" check turns
            // a risk answer into a human-review item.
            q(
                "attack-robustness",
                ThirdParties,
                "Is the system robust against attacks that seek to exploit weaknesses in it and manipulate the outputs?",
                No,
                TechnicalTool,
                Some(LinkedCheck::None),
            ),
            q(
                "supplier-information",
                ThirdParties,
                "Do you need more information from your supplier to understand whether the AI module is consistent with the Principles?",
                Yes,
                Training,
                None,
            ),
        ],
    }
}

fn validate_questionnaire(def: &QuestionnaireDef) -> Result<(), ChecklistError> {
    let mut seen = std::collections::BTreeSet::new();
    for question in &def.questions {
        if !seen.insert(question.id.as_str()) {
            return Err(ChecklistError::DuplicateId(question.id.clone()));
        }
        if question.risk_answer == Answer::NotApplicable {
            return Err(ChecklistError::BadRiskAnswer(question.id.clone()));
        }
        if question.backing == Backing::TechnicalTool && question.linked_check.is_none() {
            return Err(ChecklistError::MissingLinkedCheck(question.id.clone()));
        }
    }
    Ok(())
}

/// Parses and validates a questionnaire definition document.
pub fn load_questionnaire<R: Read>(source: R) -> Result<QuestionnaireDef, ChecklistError> {
    let def: QuestionnaireDef =
        serde_json::from_reader(source).map_err(|e| ChecklistError::Parse(e.to_string()))?;
    validate_questionnaire(&def)?;
    Ok(def)
}

fn compute_verdicts(items: &[AssessmentItem]) -> BTreeMap<Principle, PrincipleVerdict> {
    Principle::all()
        .into_iter()
        .map(|p| {
            let mine = items.iter().filter(|i| i.principle == p);
            let mut verdict = PrincipleVerdict::Pass;
            for item in mine {
                match item.status {
                    ItemStatus::Failed => {
                        verdict = PrincipleVerdict::Blocked;
                        break;
                    }
                    ItemStatus::Open => verdict = PrincipleVerdict::Attention,
                    ItemStatus::Satisfied => {}
                }
            }
            (p, verdict)
        })
        .collect()
}

/// Evaluates a complete answer set: every risk answer opens an item
/// (human review for training-backed questions and for technical-tool
/// questions without an in-scope check; a required check otherwise) and
/// per-principle verdicts follow from the item statuses.
pub fn evaluate_answers(
    def: &QuestionnaireDef,
    answers: &BTreeMap<String, Answer>,
    profile: &ThresholdProfile,
) -> Result<Assessment, ChecklistError> {
    validate_questionnaire(def)?;
    for id in answers.keys() {
        if !def.questions.iter().any(|q| &q.id == id) {
            return Err(ChecklistError::UnknownQuestion(id.clone()));
        }
    }
    let mut items = Vec::new();
    for question in &def.questions {
        let answer = answers
            .get(&question.id)
            .ok_or_else(|| ChecklistError::Unanswered(question.id.clone()))?;
        if *answer != question.risk_answer {
            continue;
        }
        let check = question.linked_check.unwrap_or(LinkedCheck::None);
        let kind = if question.backing == Backing::TechnicalTool && check != LinkedCheck::None {
            ItemKind::RequiredCheck
        } else {
            ItemKind::HumanReview
        };
        items.push(AssessmentItem {
            question_id: question.id.clone(),
            principle: question.principle,
            kind,
            check: if kind == ItemKind::RequiredCheck {
                check
            } else {
                LinkedCheck::None
            },
            status: ItemStatus::Open,
            note: None,
        });
    }
    let verdicts = compute_verdicts(&items);
    Ok(Assessment {
        questionnaire_id: def.id.clone(),
        questionnaire_version: def.version.clone(),
        answers: answers.clone(),
        items,
        verdicts,
        profile: *profile,
    })
}

fn gate(evidence: &Evidence, profile: &ThresholdProfile) -> (bool, String) {
    match evidence {
        Evidence::FairnessMetrics(reports) => {
            for report in reports {
                for g in &report.groups {
                    let fail = |metric: &str, detail: String| {
                        (
                            false,
                            format!(
                                "group `{}` vs `{}`: {metric} {detail}",
                                g.group, report.privileged
                            ),
                        )
                    };
                    match g.di {
                        Some(di) if di >= profile.di_low && di <= profile.di_high => {}
                        Some(di) => {
                            return fail(
                                "disparate impact",
                                format!("{di} outside [{}, {}]", profile.di_low, profile.di_high),
                            )
                        }
                        None => return fail("disparate impact", "undefined".into()),
                    }
                    for (name, value) in [("SPD", g.spd), ("EOD", g.eod), ("AOD", g.aod)] {
                        match value {
                            Some(v) if v.abs() <= profile.epsilon => {}
                            Some(v) => {
                                return fail(
                                    name,
                                    format!("|{v}| exceeds tolerance {}", profile.epsilon),
                                )
                            }
                            None => return fail(name, "undefined".into()),
                        }
                    }
                }
            }
            (true, "all group metrics within the profile bounds".into())
        }
        Evidence::ProxyScan(scan) => {
            let flagged = scan.findings.iter().filter(|f| f.flagged).count();
            if flagged == 0 {
                (true, "no flagged proxy findings".into())
            } else {
                (false, format!("{flagged} flagged proxy finding(s)"))
            }
        }
        Evidence::Reidentification(scan) => {
            let violations = scan.violations_at(profile.k);
            if violations == 0 {
                (
                    true,
                    format!("every equivalence class has at least {} rows", profile.k),
                )
            } else {
                (
                    false,
                    format!("{violations} row(s) in classes smaller than {}", profile.k),
                )
            }
        }
        Evidence::SurrogateFidelity(fidelity) => {
            if *fidelity >= profile.min_fidelity {
                (true, format!("surrogate fidelity {fidelity}"))
            } else {
                (
                    false,
                    format!(
                        "surrogate fidelity {fidelity} below required {}",
                        profile.min_fidelity
                    ),
                )
            }
        }
    }
}

/// Offers computed evidence to every required-check item for this check
/// kind. Open items become satisfied or failed; satisfied items can still
/// be downgraded by later failing evidence; failed is terminal, which
/// makes repeated attachment of the same evidence a no-op. Evidence for a
/// check with no matching item is ignored with a warning.
pub fn attach_evidence(
    assessment: &Assessment,
    evidence: &Evidence,
    profile: &ThresholdProfile,
) -> (Assessment, Vec<String>) {
    let check = evidence.check();
    let mut updated = assessment.clone();
    let mut warnings = Vec::new();
    let (satisfied, note) = gate(evidence, profile);
    let mut touched = false;
    for item in &mut updated.items {
        if item.kind != ItemKind::RequiredCheck || item.check != check {
            continue;
        }
        touched = true;
        match (item.status, satisfied) {
            (ItemStatus::Failed, _) => {}
            (_, true) => {
                if item.status == ItemStatus::Open {
                    item.status = ItemStatus::Satisfied;
                    item.note = Some(note.clone());
                }
            }
            (_, false) => {
                item.status = ItemStatus::Failed;
                item.note = Some(note.clone());
            }
        }
    }
    if !touched {
        warnings.push(format!(
            "evidence for `{}` matched no required-check item; ignored",
            check.as_str()
        ));
    }
    updated.verdicts = compute_verdicts(&updated.items);
    (updated, warnings)
}
