//! Audit toolkit for binary classifiers: group fairness metrics, bias
//! mitigation (reweighing and per-group threshold optimization), global
//! surrogate explanations, re-identification risk scanning, and a
//! questionnaire-driven responsible-AI checklist whose risk answers are
//! gated by computed metric evidence.
//!
//! The toolkit never loads a model. It works on prediction files: a tabular
//! dataset with a label column, a score or prediction column, and one or
//! more sensitive-attribute columns (see [`dataset::AuditTable`]).

pub mod checklist;
pub mod dataset;
pub mod explain;
pub mod metrics;
pub mod mitigate;
pub mod privacy;
pub mod proxy;
pub mod report;
