//! Warning CSV ingestion and numeric encoding.
//!
//! A dataset file has one header row and one row per reported warning. One
//! column carries the ground-truth label, an optional column carries the
//! warning id, every other column is a feature. Features whose observed values
//! all parse as finite numbers are z-standardized; everything else is one-hot
//! expanded over the vocabulary seen when the schema was fitted.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: file is empty (no header row)")]
    EmptyFile { path: PathBuf },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        path: PathBuf,
        row: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}: row {row} has unrecognised label `{value}` in column `{column}`")]
    UnrecognisedLabel {
        path: PathBuf,
        row: u64,
        column: String,
        value: String,
    },
    #[error("{path}: duplicate warning id `{id}` at row {row}")]
    DuplicateId { path: PathBuf, row: u64, id: String },
    #[error("no non-deleted records to fit a schema on")]
    EmptyDataset,
    #[error("schema mismatch for record `{record}`: {detail}")]
    SchemaMismatch { record: String, detail: String },
}

/// Ground-truth state of one warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Closed in a later revision.
    Actionable,
    /// Still present after the revision interval.
    Unactionable,
    /// Removed together with its code; excluded from modeling.
    Deleted,
    /// No ground truth (interactive triage).
    Unknown,
}

impl Label {
    pub fn class(self) -> Option<Class> {
        match self {
            Label::Actionable => Some(Class::Positive),
            Label::Unactionable => Some(Class::Negative),
            Label::Deleted | Label::Unknown => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Actionable => "actionable",
            Label::Unactionable => "unactionable",
            Label::Deleted => "deleted",
            Label::Unknown => "unknown",
        })
    }
}

/// Binary target used by the learners: positive = actionable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Positive,
    Negative,
}

impl Class {
    pub fn sign(self) -> f64 {
        match self {
            Class::Positive => 1.0,
            Class::Negative => -1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Class::Positive
    }

    pub fn label(self) -> Label {
        match self {
            Class::Positive => Label::Actionable,
            Class::Negative => Label::Unactionable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningRecord {
    pub id: String,
    /// Raw feature values keyed by column name, in file column order.
    pub features: IndexMap<String, String>,
    pub label: Label,
}

/// How to interpret the columns of a warning CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvOptions {
    /// Ground-truth column. `None` loads every record as [`Label::Unknown`].
    pub label_column: Option<String>,
    pub positive_token: String,
    pub negative_token: String,
    pub deleted_token: String,
    /// Column holding warning ids. Without it, the 0-based data row index is the id.
    pub id_column: Option<String>,
    /// Columns that are neither features nor label/id.
    pub ignore_columns: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            label_column: Some("label".to_string()),
            positive_token: "close".to_string(),
            negative_token: "open".to_string(),
            deleted_token: "delete".to_string(),
            id_column: None,
            ignore_columns: Vec::new(),
        }
    }
}

impl CsvOptions {
    fn parse_label(&self, raw: &str) -> Option<Label> {
        let v = raw.trim();
        if v.is_empty() {
            Some(Label::Unknown)
        } else if v.eq_ignore_ascii_case(&self.positive_token) {
            Some(Label::Actionable)
        } else if v.eq_ignore_ascii_case(&self.negative_token) {
            Some(Label::Unactionable)
        } else if v.eq_ignore_ascii_case(&self.deleted_token) {
            Some(Label::Deleted)
        } else {
            None
        }
    }
}

/// Read a warning CSV. Deleted rows are kept and flagged [`Label::Deleted`].
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Vec<WarningRecord>, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_records(file, path, opts)
}

/// [`load_csv`] over any reader; `origin` only labels error messages.
pub fn read_records<R: std::io::Read>(
    reader: R,
    origin: &Path,
    opts: &CsvOptions,
) -> Result<Vec<WarningRecord>, DatasetError> {
    let csv_err = |source| DatasetError::Csv {
        path: origin.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DatasetError::EmptyFile {
            path: origin.to_path_buf(),
        });
    }

    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn {
                path: origin.to_path_buf(),
                column: name.to_string(),
            })
    };
    let label_idx = opts.label_column.as_deref().map(find).transpose()?;
    let id_idx = opts.id_column.as_deref().map(find).transpose()?;
    let ignored: HashSet<usize> = opts
        .ignore_columns
        .iter()
        .map(|c| find(c))
        .collect::<Result<_, _>>()?;
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|i| Some(*i) != label_idx && Some(*i) != id_idx && !ignored.contains(i))
        .collect();

    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    for (row_index, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map(|p| p.line()).unwrap_or(row_index as u64 + 2);
        if row.len() != header.len() {
            return Err(DatasetError::RaggedRow {
                path: origin.to_path_buf(),
                row: line,
                expected: header.len(),
                found: row.len(),
            });
        }
        let label = match label_idx {
            Some(i) => opts.parse_label(&row[i]).ok_or_else(|| DatasetError::UnrecognisedLabel {
                path: origin.to_path_buf(),
                row: line,
                column: header[i].clone(),
                value: row[i].to_string(),
            })?,
            None => Label::Unknown,
        };
        let id = match id_idx {
            Some(i) => row[i].trim().to_string(),
            None => row_index.to_string(),
        };
        if !seen_ids.insert(id.clone()) {
            return Err(DatasetError::DuplicateId {
                path: origin.to_path_buf(),
                row: line,
                id,
            });
        }
        let features = feature_cols
            .iter()
            .map(|&i| (header[i].clone(), row[i].trim().to_string()))
            .collect();
        records.push(WarningRecord { id, features, label });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric { mean: f64, sd: f64 },
    Categorical { vocabulary: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn width(&self) -> usize {
        match &self.kind {
            FeatureKind::Numeric { .. } => 1,
            FeatureKind::Categorical { vocabulary } => vocabulary.len(),
        }
    }
}

/// Encoding metadata fitted on training-side records and reused verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn n_columns(&self) -> usize {
        self.features.iter().map(FeatureSpec::width).sum()
    }

    /// Names of the encoded columns: `feature` for numerics, `feature=value` for one-hot slots.
    pub fn column_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.n_columns());
        for f in &self.features {
            match &f.kind {
                FeatureKind::Numeric { .. } => out.push(f.name.clone()),
                FeatureKind::Categorical { vocabulary } => {
                    out.extend(vocabulary.iter().map(|v| format!("{}={}", f.name, v)))
                }
            }
        }
        out
    }

    /// Hex SHA-256 of the canonical JSON form; ties persisted models to their encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn parse_finite(v: &str) -> Option<f64> {
    v.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Relative threshold below which a numeric column counts as constant.
const ZERO_VARIANCE: f64 = 1e-12;

pub fn fit_schema(records: &[WarningRecord]) -> Result<FeatureSchema, DatasetError> {
    let live: Vec<&WarningRecord> = records.iter().filter(|r| r.label != Label::Deleted).collect();
    let first = live.first().ok_or(DatasetError::EmptyDataset)?;
    let names: Vec<&String> = first.features.keys().collect();
    for r in &live {
        check_names(r, names.iter().map(|s| s.as_str()))?;
    }

    let features = names
        .iter()
        .map(|name| {
            let values: Vec<&str> = live.iter().map(|r| r.features[name.as_str()].as_str()).collect();
            let numeric: Option<Vec<f64>> = values.iter().map(|v| parse_finite(v)).collect();
            let kind = match numeric {
                Some(xs) => {
                    let n = xs.len() as f64;
                    let mean = xs.iter().sum::<f64>() / n;
                    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                    let mut sd = var.sqrt();
                    if sd <= ZERO_VARIANCE * mean.abs().max(1.0) {
                        sd = 0.0;
                    }
                    FeatureKind::Numeric { mean, sd }
                }
                None => {
                    let mut seen = HashSet::new();
                    let vocabulary = values
                        .iter()
                        .filter(|v| seen.insert(**v))
                        .map(|v| v.to_string())
                        .collect();
                    FeatureKind::Categorical { vocabulary }
                }
            };
            FeatureSpec {
                name: (*name).clone(),
                kind,
            }
        })
        .collect();
    Ok(FeatureSchema { features })
}

fn check_names<'a>(
    record: &WarningRecord,
    expected: impl ExactSizeIterator<Item = &'a str>,
) -> Result<(), DatasetError> {
    let n = expected.len();
    for name in expected {
        if !record.features.contains_key(name) {
            return Err(DatasetError::SchemaMismatch {
                record: record.id.clone(),
                detail: format!("missing feature `{name}`"),
            });
        }
    }
    if record.features.len() != n {
        return Err(DatasetError::SchemaMismatch {
            record: record.id.clone(),
            detail: format!("{} features, schema expects {}", record.features.len(), n),
        });
    }
    Ok(())
}

/// Numeric design matrix with row-aligned ids and optional ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDataset {
    pub x: Matrix,
    /// `None` where no ground truth is known.
    pub labels: Vec<Option<Class>>,
    pub ids: Vec<String>,
    pub schema: FeatureSchema,
}

impl EncodedDataset {
    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|l| **l == Some(Class::Positive)).count()
    }

    pub fn n_negative(&self) -> usize {
        self.labels.iter().filter(|l| **l == Some(Class::Negative)).count()
    }

    /// All rows carry a known label.
    pub fn fully_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    /// Known labels, or `None` if any row lacks ground truth.
    pub fn known_labels(&self) -> Option<Vec<Class>> {
        self.labels.iter().copied().collect()
    }

    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    /// Hex SHA-256 over ids and matrix bits; checkpoints use it to refuse a different pool.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for id in &self.ids {
            h.update(id.as_bytes());
            h.update([0u8]);
        }
        h.update((self.x.rows() as u64).to_le_bytes());
        h.update((self.x.cols() as u64).to_le_bytes());
        for v in self.x.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Encode non-deleted records under `schema`, preserving record order.
///
/// Unseen categorical values encode as an all-zero one-hot block. A value that
/// does not parse in a numeric column is imputed with the fitted mean (0 after
/// standardization).
pub fn encode(records: &[WarningRecord], schema: &FeatureSchema) -> Result<EncodedDataset, DatasetError> {
    let live: Vec<&WarningRecord> = records.iter().filter(|r| r.label != Label::Deleted).collect();
    let width = schema.n_columns();
    let mut x = Matrix::zeros(live.len(), width);
    let vocab_index: Vec<Option<HashMap<&str, usize>>> = schema
        .features
        .iter()
        .map(|f| match &f.kind {
            FeatureKind::Categorical { vocabulary } => Some(
                vocabulary
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.as_str(), i))
                    .collect(),
            ),
            FeatureKind::Numeric { .. } => None,
        })
        .collect();

    for (row, record) in live.iter().enumerate() {
        check_names(record, schema.features.iter().map(|f| f.name.as_str()))?;
        let out = x.row_mut(row);
        let mut col = 0;
        for (spec, index) in schema.features.iter().zip(&vocab_index) {
            let raw = record.features[spec.name.as_str()].as_str();
            match (&spec.kind, index) {
                (FeatureKind::Numeric { mean, sd }, _) => {
                    out[col] = match parse_finite(raw) {
                        Some(v) if *sd > 0.0 => (v - mean) / sd,
                        _ => 0.0,
                    };
                }
                (FeatureKind::Categorical { .. }, Some(index)) => {
                    if let Some(&slot) = index.get(raw) {
                        out[col + slot] = 1.0;
                    }
                }
                (FeatureKind::Categorical { .. }, None) => unreachable!(),
            }
            col += spec.width();
        }
    }

    Ok(EncodedDataset {
        x,
        labels: live.iter().map(|r| r.label.class()).collect(),
        ids: live.iter().map(|r| r.id.clone()).collect(),
        schema: schema.clone(),
    })
}

/// Previous version (training side) and current version (test side) under one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct VersionPair {
    pub train: EncodedDataset,
    pub test: EncodedDataset,
}

impl VersionPair {
    /// Fit the schema on `train` only and encode both sides with it.
    pub fn from_records(train: &[WarningRecord], test: &[WarningRecord]) -> Result<Self, DatasetError> {
        let schema = fit_schema(train)?;
        Ok(Self {
            train: encode(train, &schema)?,
            test: encode(test, &schema)?,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.train.schema
    }
}

pub fn load_version_pair(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    opts: &CsvOptions,
) -> Result<VersionPair, DatasetError> {
    let train = load_csv(train_path, opts)?;
    let test = load_csv(test_path, opts)?;
    VersionPair::from_records(&train, &test)
}

/// Load one file and encode it under a schema fitted on itself.
pub fn load_encoded(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<EncodedDataset, DatasetError> {
    let records = load_csv(path, opts)?;
    let schema = fit_schema(&records)?;
    encode(&records, &schema)
}
