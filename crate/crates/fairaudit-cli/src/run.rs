//! The audit pipeline: load, metrics, proxy, privacy, explain, mitigate,
//! re-metrics on mitigated predictions, evidence attachment, report.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use fairaudit_core::checklist::{
    attach_evidence, builtin_questionnaire, evaluate_answers, load_questionnaire, Answer,
    Assessment, Evidence, ItemKind, ItemStatus, LinkedCheck, PrincipleVerdict, QuestionnaireDef,
};
use fairaudit_core::dataset::AuditTable;
use fairaudit_core::explain::{
    feature_importance, fit_surrogate, surrogate_fidelity, SurrogateConfig,
};
use fairaudit_core::metrics::{
    confusion_by_group, fairness_report, mutual_information, theil_index, FairnessReport,
};
use fairaudit_core::mitigate::{apply_policy, optimize_thresholds, reweigh, ThresholdSearchConfig};
use fairaudit_core::privacy::reidentification_scan;
use fairaudit_core::proxy::proxy_scan;
use fairaudit_core::report::{
    assemble, content_digest, AssessmentSection, AuditReport, ExplanationSection, FairnessDoc,
    MetricsSection, MitigationSection, PolicyDoc, PrivacySection, ProxySection, ReportSections,
    ReweighDoc, Section, SensitiveMetricsDoc,
};

use crate::config::{AuditConfig, Stages};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Replayable answers document: what interactive mode writes and batch
/// mode reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswersDocument {
    pub questionnaire_id: String,
    pub answers: BTreeMap<String, Answer>,
}

/// Everything a finished run produces.
pub struct RunOutcome {
    pub report: AuditReport,
    pub exit_code: i32,
}

pub fn exit_code_for(
    verdicts: &BTreeMap<fairaudit_core::checklist::Principle, PrincipleVerdict>,
) -> i32 {
    let worst = verdicts
        .values()
        .max()
        .copied()
        .unwrap_or(PrincipleVerdict::Pass);
    match worst {
        PrincipleVerdict::Pass => 0,
        PrincipleVerdict::Attention => 2,
        PrincipleVerdict::Blocked => 3,
    }
}

pub fn load_questionnaire_source(
    source: &str,
) -> Result<(QuestionnaireDef, Option<(String, String)>)> {
    if source == "builtin" {
        return Ok((builtin_questionnaire(), None));
    }
    let bytes =
        std::fs::read(source).with_context(|| format!("cannot read questionnaire `{source}`"))?;
    let digest = content_digest(&bytes);
    let def = load_questionnaire(bytes.as_slice())
        .with_context(|| format!("questionnaire `{source}`"))?;
    Ok((def, Some((source.to_owned(), digest))))
}

pub fn load_answers(path: &Path) -> Result<(AnswersDocument, (String, String))> {
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot read answers `{}`", path.display()))?;
    let digest = content_digest(&bytes);
    let doc: AnswersDocument = serde_json::from_slice(&bytes)
        .with_context(|| format!("cannot parse answers `{}`", path.display()))?;
    Ok((doc, (path.display().to_string(), digest)))
}

fn unix_timestamp() -> String {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".into())
}

struct MetricsOutput {
    section: MetricsSection,
    /// Pre-mitigation fairness reports, one per sensitive column; these
    /// are what the evidence gate judges.
    reports: Vec<FairnessReport>,
}

fn run_metrics(
    table: &AuditTable,
    threshold_used: Option<f64>,
    config: &AuditConfig,
) -> Result<MetricsOutput> {
    let sensitive = table.sensitive_columns();
    if sensitive.is_empty() {
        bail!("metrics stage requires at least one sensitive column");
    }
    let preds = table
        .predictions()
        .ok_or_else(|| anyhow!("metrics stage requires predictions"))?;
    let mut per_sensitive = BTreeMap::new();
    let mut reports = Vec::new();
    for column in sensitive {
        let privileged = table.privileged_value(&column.name).ok_or_else(|| {
            anyhow!(
                "no privileged value declared for sensitive column `{}`",
                column.name
            )
        })?;
        let confusions = confusion_by_group(table, &column.name)?;
        let report = fairness_report(&confusions, privileged, &config.metrics)?;
        let mi = mutual_information(preds, table.sensitive_values(&column.name)?)?;
        per_sensitive.insert(
            column.name.clone(),
            SensitiveMetricsDoc {
                confusions: confusions.values().map(Into::into).collect(),
                fairness: FairnessDoc::from(&report),
                mutual_information: mi.into(),
            },
        );
        reports.push(report);
    }
    let theil = theil_index(table.labels(), preds, &config.metrics)?;
    Ok(MetricsOutput {
        section: MetricsSection {
            threshold_used,
            per_sensitive,
            theil_alpha: config.metrics.alpha,
            theil_index: theil.into(),
        },
        reports,
    })
}

fn run_mitigation(
    table: &AuditTable,
    config: &AuditConfig,
    out_dir: &Path,
) -> Result<MitigationSection> {
    let sensitive = match &config.mitigation.sensitive {
        Some(name) => name.clone(),
        None => table
            .sensitive_columns()
            .first()
            .map(|c| c.name.clone())
            .ok_or_else(|| anyhow!("mitigation requires a sensitive column"))?,
    };
    let weights = reweigh(table, &sensitive)?;
    let weighted = table.with_weights(weights.row_weights.clone())?;
    let mut weighted_out = Vec::new();
    let format = config.dataset.table_format()?;
    weighted.write_to(&mut weighted_out, format)?;
    let name = match format {
        fairaudit_core::dataset::TableFormat::Delimited { .. } => "reweighed.csv",
        fairaudit_core::dataset::TableFormat::Records => "reweighed.jsonl",
    };
    std::fs::write(out_dir.join(name), &weighted_out).context("writing reweighed dataset")?;

    let search = ThresholdSearchConfig {
        epsilon: config.mitigation.epsilon,
        grid: config.mitigation.grid(),
        metric: config.mitigation.metric,
    };
    let policy = optimize_thresholds(table, &sensitive, &search)?;
    std::fs::write(
        out_dir.join("policy.json"),
        serde_json::to_string_pretty(&policy).context("serializing policy")?,
    )
    .context("writing policy document")?;

    let mitigated = table.with_predictions(apply_policy(table, &policy)?)?;
    let confusions = confusion_by_group(&mitigated, &sensitive)?;
    let privileged = table
        .privileged_value(&sensitive)
        .ok_or_else(|| anyhow!("no privileged value declared for `{sensitive}`"))?;
    let post = fairness_report(&confusions, privileged, &config.metrics)?;

    Ok(MitigationSection {
        reweigh: ReweighDoc::from(&weights),
        policy: PolicyDoc::from(&policy),
        post_fairness: FairnessDoc::from(&post),
    })
}

fn attach_available_evidence(
    assessment: Assessment,
    reports: &[FairnessReport],
    proxy: Option<&fairaudit_core::proxy::ProxyScan>,
    privacy: Option<&fairaudit_core::privacy::RiskScan>,
    fidelity: Option<f64>,
    config: &AuditConfig,
) -> (Assessment, Vec<String>) {
    let mut current = assessment;
    let mut warnings = Vec::new();
    let mut open_checks: Vec<LinkedCheck> = current
        .items
        .iter()
        .filter(|i| i.kind == ItemKind::RequiredCheck && i.status == ItemStatus::Open)
        .map(|i| i.check)
        .collect();
    open_checks.dedup();
    for check in open_checks {
        let evidence = match check {
            LinkedCheck::FairnessMetrics if !reports.is_empty() => {
                Some(Evidence::FairnessMetrics(reports.iter().collect()))
            }
            LinkedCheck::ProxyScan => proxy.map(Evidence::ProxyScan),
            LinkedCheck::ReidentificationScan => privacy.map(Evidence::Reidentification),
            LinkedCheck::SurrogateFidelity => fidelity.map(Evidence::SurrogateFidelity),
            _ => None,
        };
        match evidence {
            Some(evidence) => {
                let (next, mut w) = attach_evidence(&current, &evidence, &config.profile);
                current = next;
                warnings.append(&mut w);
            }
            None => warnings.push(format!(
                "required check `{}` has no computed evidence in this run; item stays open",
                check.as_str()
            )),
        }
    }
    (current, warnings)
}

/// Executes the requested stages in fixed order and writes the report
/// artifacts into the output directory.
pub fn run_audit(config: &AuditConfig, stages: Stages) -> Result<RunOutcome> {
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output dir `{}`", out_dir.display()))?;

    // load
    let bytes = std::fs::read(&config.dataset.path).with_context(|| {
        format!(
            "stage load: cannot read dataset `{}`",
            config.dataset.path.display()
        )
    })?;
    let mut input_digests = BTreeMap::new();
    input_digests.insert(
        config.dataset.path.display().to_string(),
        content_digest(&bytes),
    );
    let format = config.dataset.table_format()?;
    let loaded =
        AuditTable::load(bytes.as_slice(), format, &config.schema).context("stage load")?;
    // Prediction-consuming stages run on binarized scores when the file
    // carries no prediction column.
    let (table, threshold_used) = if loaded.predictions().is_none() {
        (
            loaded
                .binarize(config.dataset.score_threshold)
                .context("stage load")?,
            Some(config.dataset.score_threshold),
        )
    } else {
        (loaded, None)
    };

    fn skipped<T>(on: bool) -> Option<Section<T>> {
        (!on).then(|| Section::skipped("not requested"))
    }

    // metrics
    let mut fairness_reports = Vec::new();
    let metrics_section = match skipped(stages.metrics) {
        Some(s) => s,
        None => {
            let output = run_metrics(&table, threshold_used, config).context("stage metrics")?;
            fairness_reports = output.reports;
            Section::Present(output.section)
        }
    };

    // proxy
    let mut proxy_result = None;
    let proxy_section = match skipped(stages.proxy) {
        Some(s) => s,
        None => {
            let scan = proxy_scan(&table, config.proxy.threshold).context("stage proxy")?;
            let section = ProxySection::from(&scan);
            proxy_result = Some(scan);
            Section::Present(section)
        }
    };

    // privacy
    let mut privacy_result = None;
    let privacy_section = match skipped(stages.privacy) {
        Some(s) => s,
        None => {
            let quasi = match &config.privacy.quasi_identifiers {
                Some(columns) => columns.clone(),
                None => table
                    .quasi_identifier_columns()
                    .iter()
                    .map(|c| c.name.clone())
                    .collect(),
            };
            let scan =
                reidentification_scan(&table, &quasi, config.privacy.k, &config.privacy.binning)
                    .context("stage privacy")?;
            let section = PrivacySection::build(&scan, config.privacy.include_values);
            privacy_result = Some(scan);
            Section::Present(section)
        }
    };

    // explain
    let mut fidelity_result = None;
    let explanation_section = match skipped(stages.explain) {
        Some(s) => s,
        None => {
            let surrogate_config = SurrogateConfig {
                max_depth: config.surrogate.max_depth,
                min_leaf: config.surrogate.min_leaf,
            };
            let tree = fit_surrogate(&table, &surrogate_config).context("stage explain")?;
            let fidelity = surrogate_fidelity(&tree, &table).context("stage explain")?;
            let importances = feature_importance(&tree);
            fidelity_result = Some(fidelity);
            Section::Present(
                ExplanationSection::build(&tree, fidelity, &importances)
                    .context("stage explain")?,
            )
        }
    };

    // mitigate (+ re-metrics on the mitigated predictions)
    let mitigation_section = match skipped(stages.mitigate) {
        Some(s) => s,
        None => {
            Section::Present(run_mitigation(&table, config, out_dir).context("stage mitigate")?)
        }
    };

    // assess
    let assessment_section = if !stages.assess {
        Section::skipped("not requested")
    } else if let Some(answers_path) = &config.answers {
        let (questionnaire, questionnaire_digest) =
            load_questionnaire_source(&config.questionnaire).context("stage assess")?;
        if let Some((path, digest)) = questionnaire_digest {
            input_digests.insert(path, digest);
        }
        let (doc, (answers_name, answers_digest)) =
            load_answers(answers_path).context("stage assess")?;
        input_digests.insert(answers_name, answers_digest);
        if doc.questionnaire_id != questionnaire.id {
            bail!(
                "stage assess: answers are for questionnaire `{}` but `{}` is configured",
                doc.questionnaire_id,
                questionnaire.id
            );
        }
        let assessment = evaluate_answers(&questionnaire, &doc.answers, &config.profile)
            .context("stage assess")?;
        let (assessment, warnings) = attach_available_evidence(
            assessment,
            &fairness_reports,
            proxy_result.as_ref(),
            privacy_result.as_ref(),
            fidelity_result,
            config,
        );
        Section::Present(AssessmentSection::build(
            &questionnaire,
            assessment,
            warnings,
        ))
    } else {
        Section::skipped("no answers document configured")
    };

    let exit_code = assessment_section
        .as_present()
        .map(|a| exit_code_for(&a.assessment.verdicts))
        .unwrap_or(0);

    let sections = ReportSections {
        metrics: metrics_section,
        proxies: proxy_section,
        mitigation: mitigation_section,
        explanation: explanation_section,
        privacy: privacy_section,
        assessment: assessment_section,
    };
    let report = assemble(
        TOOL_VERSION,
        sections,
        config.echo()?,
        input_digests,
        unix_timestamp(),
    )?;

    std::fs::write(out_dir.join("report.json"), report.full_json()?)
        .context("writing report.json")?;
    std::fs::write(out_dir.join("report.md"), report.render_markdown())
        .context("writing report.md")?;
    std::fs::write(out_dir.join("report.digest"), report.digest()?)
        .context("writing report.digest")?;

    Ok(RunOutcome { report, exit_code })
}
