//! Loading, validation, and typing of tabular prediction files.
//!
//! An [`AuditTable`] is the single input object every check in this crate
//! runs on. Columns are typed by their declared [`ColumnRole`]; validation
//! is exhaustive at load time so downstream metrics never have to re-check
//! label ranges or missing values.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Explicit category assigned to missing values in categorical feature and
/// quasi-identifier columns. Missing values in label, score, prediction,
/// sensitive, and weight columns are hard errors instead.
pub const MISSING_CATEGORY: &str = "(missing)";

/// Role a column plays in the audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    /// Ground-truth outcome, values in {0,1} with 1 the favorable outcome.
    Label,
    /// Classifier score in \[0,1\], interpreted as P(favorable).
    Score,
    /// Binarized classifier decision, values in {0,1}.
    Prediction,
    /// Protected attribute; categorical with at least two observed groups.
    Sensitive,
    /// Model input feature (categorical or numeric, missing allowed).
    Feature,
    /// Column usable for re-identification (categorical or numeric).
    QuasiIdentifier,
    /// Per-row sample weight, positive real.
    Weight,
    /// Present in the file but not used by any check.
    Ignore,
}

impl ColumnRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnRole::Label => "label",
            ColumnRole::Score => "score",
            ColumnRole::Prediction => "prediction",
            ColumnRole::Sensitive => "sensitive",
            ColumnRole::Feature => "feature",
            ColumnRole::QuasiIdentifier => "quasi_identifier",
            ColumnRole::Weight => "weight",
            ColumnRole::Ignore => "ignore",
        }
    }
}

/// Input file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    /// Delimited text, first row is the header, UTF-8.
    Delimited { delimiter: u8 },
    /// One JSON object per line. Column order is the sorted key set.
    Records,
}

impl TableFormat {
    pub fn csv() -> Self {
        TableFormat::Delimited { delimiter: b',' }
    }
}

/// Declarative column-role assignment for a file.
///
/// Columns present in the file but absent from `roles` default to
/// [`ColumnRole::Ignore`], so role assignment is total after load.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    /// Column name → role.
    pub roles: BTreeMap<String, ColumnRole>,
    /// Sensitive column name → privileged category.
    #[serde(default)]
    pub privileged: BTreeMap<String, String>,
    /// When set, the favorable outcome in the file is 0 rather than 1:
    /// labels and predictions are flipped and scores replaced by `1 - s`
    /// at load so the in-memory convention (1 = favorable) always holds.
    #[serde(default)]
    pub invert_labels: bool,
}

/// Typed column storage. The variant is determined by the column role:
/// label/prediction → `Binary`, score/weight → `Real`, sensitive →
/// `Categorical`, feature/quasi-identifier → `Categorical` or `Numeric`
/// (numeric when every non-missing value parses as a number), ignore →
/// `Categorical` (raw text).
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Binary(Vec<u8>),
    Real(Vec<f64>),
    Categorical(Vec<String>),
    Numeric(Vec<Option<f64>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Binary(v) => v.len(),
            ColumnData::Real(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A named, typed column with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
    pub data: ColumnData,
}

/// Validated tabular dataset. Immutable after construction; mutating
/// operations ([`AuditTable::binarize`], [`AuditTable::with_weights`])
/// return a new table.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditTable {
    n_rows: usize,
    columns: Vec<Column>,
    privileged: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to parse input: {0}")]
    Parse(String),
    #[error("row {row}, column `{column}`: {message}")]
    Value {
        row: usize,
        column: String,
        message: String,
    },
    #[error("column `{column}`: {message}")]
    Column { column: String, message: String },
    #[error("schema names column `{0}` which is not in the file")]
    MissingColumn(String),
    #[error("{0}")]
    Invalid(String),
}

/// Raw cell as read from the file; `None` is a missing value.
type RawRow = Vec<Option<String>>;

fn parse_number(raw: &str) -> Option<f64> {
    let v: f64 = raw.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_binary(raw: &str) -> Option<u8> {
    let v = parse_number(raw)?;
    if v == 0.0 {
        Some(0)
    } else if v == 1.0 {
        Some(1)
    } else {
        None
    }
}

impl AuditTable {
    /// Builds a table from typed columns, enforcing every invariant.
    /// Row order of the inputs is preserved.
    pub fn new(
        columns: Vec<Column>,
        privileged: BTreeMap<String, String>,
    ) -> Result<Self, DatasetError> {
        let n_rows = columns.first().map(|c| c.data.len()).unwrap_or(0);
        let table = AuditTable {
            n_rows,
            columns,
            privileged,
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = BTreeSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(DatasetError::Column {
                    column: col.name.clone(),
                    message: "duplicate column name".into(),
                });
            }
            if col.data.len() != self.n_rows {
                return Err(DatasetError::Column {
                    column: col.name.clone(),
                    message: format!(
                        "length {} does not match table ({} rows)",
                        col.data.len(),
                        self.n_rows
                    ),
                });
            }
            let kind_ok = match col.role {
                ColumnRole::Label | ColumnRole::Prediction => {
                    matches!(col.data, ColumnData::Binary(_))
                }
                ColumnRole::Score | ColumnRole::Weight => matches!(col.data, ColumnData::Real(_)),
                ColumnRole::Sensitive => matches!(col.data, ColumnData::Categorical(_)),
                ColumnRole::Feature | ColumnRole::QuasiIdentifier => matches!(
                    col.data,
                    ColumnData::Categorical(_) | ColumnData::Numeric(_)
                ),
                ColumnRole::Ignore => true,
            };
            if !kind_ok {
                return Err(DatasetError::Column {
                    column: col.name.clone(),
                    message: format!("data kind does not match role `{}`", col.role.as_str()),
                });
            }
            match (&col.role, &col.data) {
                (ColumnRole::Label | ColumnRole::Prediction, ColumnData::Binary(v)) => {
                    if let Some(i) = v.iter().position(|&b| b > 1) {
                        return Err(DatasetError::Value {
                            row: i + 1,
                            column: col.name.clone(),
                            message: "binary value outside {0,1}".into(),
                        });
                    }
                }
                (ColumnRole::Score, ColumnData::Real(v)) => {
                    if let Some(i) = v.iter().position(|s| !(0.0..=1.0).contains(s)) {
                        return Err(DatasetError::Value {
                            row: i + 1,
                            column: col.name.clone(),
                            message: "score outside [0,1]".into(),
                        });
                    }
                }
                (ColumnRole::Weight, ColumnData::Real(v)) => {
                    if let Some(i) = v.iter().position(|w| !w.is_finite() || *w <= 0.0) {
                        return Err(DatasetError::Value {
                            row: i + 1,
                            column: col.name.clone(),
                            message: "weight must be a positive finite number".into(),
                        });
                    }
                }
                (ColumnRole::Sensitive, ColumnData::Categorical(v)) => {
                    if let Some(i) = v.iter().position(|c| c == MISSING_CATEGORY || c.is_empty()) {
                        return Err(DatasetError::Value {
                            row: i + 1,
                            column: col.name.clone(),
                            message: "missing value in sensitive column".into(),
                        });
                    }
                    let groups: BTreeSet<&String> = v.iter().collect();
                    if self.n_rows > 0 && groups.len() < 2 {
                        return Err(DatasetError::Column {
                            column: col.name.clone(),
                            message: "sensitive column needs at least 2 observed categories".into(),
                        });
                    }
                }
                _ => {}
            }
        }
        let count = |role| self.columns.iter().filter(|c| c.role == role).count();
        if count(ColumnRole::Label) != 1 {
            return Err(DatasetError::Invalid(format!(
                "expected exactly one label column, found {}",
                count(ColumnRole::Label)
            )));
        }
        if count(ColumnRole::Score) > 1 || count(ColumnRole::Prediction) > 1 {
            return Err(DatasetError::Invalid(
                "at most one score and one prediction column allowed".into(),
            ));
        }
        if count(ColumnRole::Score) + count(ColumnRole::Prediction) == 0 {
            return Err(DatasetError::Invalid(
                "need a score or a prediction column".into(),
            ));
        }
        for name in self.privileged.keys() {
            match self.columns.iter().find(|c| &c.name == name) {
                None => return Err(DatasetError::MissingColumn(name.clone())),
                Some(c) if c.role != ColumnRole::Sensitive => {
                    return Err(DatasetError::Column {
                        column: name.clone(),
                        message: "privileged value declared for a non-sensitive column".into(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Parses and validates a table from `source`.
    ///
    /// Columns named in `schema.roles` get that role; all other file
    /// columns become [`ColumnRole::Ignore`]. Errors name the offending
    /// row (1-based, header excluded) and column.
    pub fn load<R: Read>(
        source: R,
        format: TableFormat,
        schema: &TableSchema,
    ) -> Result<Self, DatasetError> {
        let (headers, rows) = read_raw(source, format)?;
        for name in schema.roles.keys() {
            if !headers.contains(name) {
                return Err(DatasetError::MissingColumn(name.clone()));
            }
        }
        let mut columns = Vec::with_capacity(headers.len());
        for (ci, name) in headers.iter().enumerate() {
            let role = schema
                .roles
                .get(name)
                .copied()
                .unwrap_or(ColumnRole::Ignore);
            let raw: Vec<&Option<String>> = rows.iter().map(|r| &r[ci]).collect();
            let data = type_column(name, role, &raw, schema.invert_labels)?;
            columns.push(Column {
                name: name.clone(),
                role,
                data,
            });
        }
        AuditTable::new(columns, schema.privileged.clone())
    }

    /// Writes the table back out in `format`. Loading the result with the
    /// same schema reproduces this table exactly (missing markers written
    /// literally round-trip as the same explicit categories).
    pub fn write_to<W: Write>(&self, out: W, format: TableFormat) -> Result<(), DatasetError> {
        match format {
            TableFormat::Delimited { delimiter } => {
                let mut w = csv::WriterBuilder::new()
                    .delimiter(delimiter)
                    .from_writer(out);
                w.write_record(self.columns.iter().map(|c| c.name.as_str()))
                    .map_err(|e| DatasetError::Parse(e.to_string()))?;
                for row in 0..self.n_rows {
                    let rec: Vec<String> = self
                        .columns
                        .iter()
                        .map(|c| cell_text(&c.data, row).unwrap_or_default())
                        .collect();
                    w.write_record(&rec)
                        .map_err(|e| DatasetError::Parse(e.to_string()))?;
                }
                w.flush().map_err(|e| DatasetError::Parse(e.to_string()))?;
            }
            TableFormat::Records => {
                let mut out = out;
                for row in 0..self.n_rows {
                    let mut obj = serde_json::Map::new();
                    for c in &self.columns {
                        let v = match &c.data {
                            ColumnData::Binary(v) => serde_json::json!(v[row]),
                            ColumnData::Real(v) => serde_json::json!(v[row]),
                            ColumnData::Categorical(v) => serde_json::json!(v[row]),
                            ColumnData::Numeric(v) => match v[row] {
                                Some(x) => serde_json::json!(x),
                                None => serde_json::Value::Null,
                            },
                        };
                        obj.insert(c.name.clone(), v);
                    }
                    serde_json::to_writer(&mut out, &serde_json::Value::Object(obj))
                        .map_err(|e| DatasetError::Parse(e.to_string()))?;
                    out.write_all(b"\n")
                        .map_err(|e| DatasetError::Parse(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    fn columns_with_role(&self, role: ColumnRole) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(move |c| c.role == role)
    }

    /// Ground-truth labels; present by construction.
    pub fn labels(&self) -> &[u8] {
        match self
            .columns_with_role(ColumnRole::Label)
            .next()
            .map(|c| &c.data)
        {
            Some(ColumnData::Binary(v)) => v,
            _ => unreachable!("validated table always has one label column"),
        }
    }

    pub fn scores(&self) -> Option<&[f64]> {
        match self
            .columns_with_role(ColumnRole::Score)
            .next()
            .map(|c| &c.data)
        {
            Some(ColumnData::Real(v)) => Some(v),
            _ => None,
        }
    }

    pub fn predictions(&self) -> Option<&[u8]> {
        match self
            .columns_with_role(ColumnRole::Prediction)
            .next()
            .map(|c| &c.data)
        {
            Some(ColumnData::Binary(v)) => Some(v),
            _ => None,
        }
    }

    pub fn sensitive_columns(&self) -> Vec<&Column> {
        self.columns_with_role(ColumnRole::Sensitive).collect()
    }

    pub fn feature_columns(&self) -> Vec<&Column> {
        self.columns_with_role(ColumnRole::Feature).collect()
    }

    pub fn quasi_identifier_columns(&self) -> Vec<&Column> {
        self.columns_with_role(ColumnRole::QuasiIdentifier)
            .collect()
    }

    /// Group labels of a sensitive column.
    pub fn sensitive_values(&self, name: &str) -> Result<&[String], DatasetError> {
        match self.column(name) {
            Some(Column {
                role: ColumnRole::Sensitive,
                data: ColumnData::Categorical(v),
                ..
            }) => Ok(v),
            Some(_) => Err(DatasetError::Column {
                column: name.into(),
                message: "not a sensitive column".into(),
            }),
            None => Err(DatasetError::MissingColumn(name.into())),
        }
    }

    pub fn privileged_value(&self, sensitive: &str) -> Option<&str> {
        self.privileged.get(sensitive).map(|s| s.as_str())
    }

    pub fn privileged_map(&self) -> &BTreeMap<String, String> {
        &self.privileged
    }

    /// Returns a new table whose prediction column is `score >= threshold`
    /// (ties classified positive). The original table is unchanged.
    pub fn binarize(&self, threshold: f64) -> Result<AuditTable, DatasetError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(DatasetError::Invalid(format!(
                "threshold {threshold} outside [0,1]"
            )));
        }
        let scores = self.scores().ok_or_else(|| {
            DatasetError::Invalid("no score column present; cannot binarize".into())
        })?;
        let preds: Vec<u8> = scores.iter().map(|&s| u8::from(s >= threshold)).collect();
        self.with_predictions(preds)
    }

    /// Returns a new table with `preds` as the prediction column,
    /// replacing any existing one.
    pub fn with_predictions(&self, preds: Vec<u8>) -> Result<AuditTable, DatasetError> {
        if preds.len() != self.n_rows {
            return Err(DatasetError::Invalid(format!(
                "prediction vector length {} does not match table ({} rows)",
                preds.len(),
                self.n_rows
            )));
        }
        let mut columns = self.columns.clone();
        if let Some(col) = columns
            .iter_mut()
            .find(|c| c.role == ColumnRole::Prediction)
        {
            col.data = ColumnData::Binary(preds);
        } else {
            if columns.iter().any(|c| c.name == "prediction") {
                return Err(DatasetError::Column {
                    column: "prediction".into(),
                    message: "name already taken by a non-prediction column".into(),
                });
            }
            columns.push(Column {
                name: "prediction".into(),
                role: ColumnRole::Prediction,
                data: ColumnData::Binary(preds),
            });
        }
        AuditTable::new(columns, self.privileged.clone())
    }

    /// Returns a new table with `weights` as the weight column,
    /// replacing any existing one.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<AuditTable, DatasetError> {
        if weights.len() != self.n_rows {
            return Err(DatasetError::Invalid(format!(
                "weight vector length {} does not match table ({} rows)",
                weights.len(),
                self.n_rows
            )));
        }
        let mut columns = self.columns.clone();
        if let Some(col) = columns.iter_mut().find(|c| c.role == ColumnRole::Weight) {
            col.data = ColumnData::Real(weights);
        } else {
            if columns.iter().any(|c| c.name == "weight") {
                return Err(DatasetError::Column {
                    column: "weight".into(),
                    message: "name already taken by a non-weight column".into(),
                });
            }
            columns.push(Column {
                name: "weight".into(),
                role: ColumnRole::Weight,
                data: ColumnData::Real(weights),
            });
        }
        AuditTable::new(columns, self.privileged.clone())
    }
}

fn cell_text(data: &ColumnData, row: usize) -> Option<String> {
    match data {
        ColumnData::Binary(v) => Some(v[row].to_string()),
        ColumnData::Real(v) => Some(format!("{}", v[row])),
        ColumnData::Categorical(v) => Some(v[row].clone()),
        ColumnData::Numeric(v) => v[row].map(|x| format!("{x}")),
    }
}

fn read_raw<R: Read>(
    source: R,
    format: TableFormat,
) -> Result<(Vec<String>, Vec<RawRow>), DatasetError> {
    match format {
        TableFormat::Delimited { delimiter } => {
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .flexible(false)
                .from_reader(source);
            let headers: Vec<String> = reader
                .headers()
                .map_err(|e| DatasetError::Parse(e.to_string()))?
                .iter()
                .map(str::to_owned)
                .collect();
            let mut rows = Vec::new();
            for (i, rec) in reader.records().enumerate() {
                let rec = rec.map_err(|e| DatasetError::Parse(format!("row {}: {e}", i + 1)))?;
                rows.push(
                    rec.iter()
                        .map(|s| (!s.is_empty()).then(|| s.to_owned()))
                        .collect(),
                );
            }
            Ok((headers, rows))
        }
        TableFormat::Records => {
            let mut text = String::new();
            let mut source = source;
            source
                .read_to_string(&mut text)
                .map_err(|e| DatasetError::Parse(e.to_string()))?;
            let mut objects = Vec::new();
            let mut keys = BTreeSet::new();
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value = serde_json::from_str(line)
                    .map_err(|e| DatasetError::Parse(format!("row {}: {e}", i + 1)))?;
                let obj = value.as_object().cloned().ok_or_else(|| {
                    DatasetError::Parse(format!("row {}: expected a JSON object", i + 1))
                })?;
                keys.extend(obj.keys().cloned());
                objects.push(obj);
            }
            let headers: Vec<String> = keys.into_iter().collect();
            let rows = objects
                .into_iter()
                .map(|obj| {
                    headers
                        .iter()
                        .map(|k| match obj.get(k) {
                            None | Some(serde_json::Value::Null) => None,
                            Some(serde_json::Value::String(s)) => Some(s.clone()),
                            Some(v) => Some(v.to_string()),
                        })
                        .collect()
                })
                .collect();
            Ok((headers, rows))
        }
    }
}

fn type_column(
    name: &str,
    role: ColumnRole,
    raw: &[&Option<String>],
    invert: bool,
) -> Result<ColumnData, DatasetError> {
    let missing_err = |row: usize| DatasetError::Value {
        row: row + 1,
        column: name.into(),
        message: "missing value not allowed for this role".into(),
    };
    let value_err = |row: usize, message: &str| DatasetError::Value {
        row: row + 1,
        column: name.into(),
        message: message.into(),
    };
    match role {
        ColumnRole::Label | ColumnRole::Prediction => {
            let mut out = Vec::with_capacity(raw.len());
            for (i, cell) in raw.iter().enumerate() {
                let text = cell.as_ref().ok_or_else(|| missing_err(i))?;
                let b = parse_binary(text)
                    .ok_or_else(|| value_err(i, &format!("value `{text}` outside {{0,1}}")))?;
                out.push(if invert { 1 - b } else { b });
            }
            Ok(ColumnData::Binary(out))
        }
        ColumnRole::Score => {
            let mut out = Vec::with_capacity(raw.len());
            for (i, cell) in raw.iter().enumerate() {
                let text = cell.as_ref().ok_or_else(|| missing_err(i))?;
                let v = parse_number(text)
                    .filter(|v| (0.0..=1.0).contains(v))
                    .ok_or_else(|| value_err(i, &format!("score `{text}` outside [0,1]")))?;
                out.push(if invert { 1.0 - v } else { v });
            }
            Ok(ColumnData::Real(out))
        }
        ColumnRole::Weight => {
            let mut out = Vec::with_capacity(raw.len());
            for (i, cell) in raw.iter().enumerate() {
                let text = cell.as_ref().ok_or_else(|| missing_err(i))?;
                let v = parse_number(text)
                    .filter(|v| *v > 0.0)
                    .ok_or_else(|| value_err(i, &format!("weight `{text}` must be positive")))?;
                out.push(v);
            }
            Ok(ColumnData::Real(out))
        }
        ColumnRole::Sensitive => {
            let mut out = Vec::with_capacity(raw.len());
            for (i, cell) in raw.iter().enumerate() {
                let text = cell.as_ref().ok_or_else(|| missing_err(i))?;
                out.push(text.clone());
            }
            Ok(ColumnData::Categorical(out))
        }
        ColumnRole::Feature | ColumnRole::QuasiIdentifier => {
            let numeric = raw
                .iter()
                .filter_map(|c| c.as_ref())
                .all(|text| parse_number(text).is_some());
            if numeric && raw.iter().any(|c| c.is_some()) {
                Ok(ColumnData::Numeric(
                    raw.iter()
                        .map(|c| c.as_ref().map(|t| parse_number(t).unwrap()))
                        .collect(),
                ))
            } else {
                Ok(ColumnData::Categorical(
                    raw.iter()
                        .map(|c| (*c).clone().unwrap_or_else(|| MISSING_CATEGORY.to_owned()))
                        .collect(),
                ))
            }
        }
        ColumnRole::Ignore => Ok(ColumnData::Categorical(
            raw.iter()
                .map(|c| (*c).clone().unwrap_or_default())
                .collect(),
        )),
    }
}
