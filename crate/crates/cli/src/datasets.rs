//! Loading warning CSVs for the CLI and the service.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use actriage_core::dataset::{self, CsvOptions, DatasetError, EncodedDataset, Label, WarningRecord};
use serde::Serialize;

/// Use `id` and `label` columns when the header has them.
pub fn detect_options(path: &Path) -> Result<CsvOptions, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let has = |name: &str| header.iter().any(|h| h.trim() == name);
    Ok(CsvOptions {
        label_column: has("label").then(|| "label".to_string()),
        id_column: has("id").then(|| "id".to_string()),
        ..CsvOptions::default()
    })
}

/// A pool plus the raw records its rows came from, for display.
#[derive(Debug)]
pub struct LoadedDataset {
    pub name: String,
    pub path: PathBuf,
    /// Non-deleted records, aligned with `pool` rows.
    pub records: Vec<WarningRecord>,
    pub pool: Arc<EncodedDataset>,
}

impl LoadedDataset {
    pub fn load(name: &str, path: &Path, opts: &CsvOptions) -> Result<Self, DatasetError> {
        let records = dataset::load_csv(path, opts)?;
        let schema = dataset::fit_schema(&records)?;
        let pool = dataset::encode(&records, &schema)?;
        let records: Vec<WarningRecord> = records.into_iter().filter(|r| r.label != Label::Deleted).collect();
        debug_assert!(records.iter().zip(&pool.ids).all(|(r, id)| r.id == *id));
        Ok(Self {
            name: name.to_string(),
            path: path.to_path_buf(),
            records,
            pool: Arc::new(pool),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub rows: usize,
    pub features: usize,
}

/// `*.csv` files in one directory, addressed by file stem, loaded lazily.
#[derive(Debug)]
pub struct DatasetRegistry {
    dir: PathBuf,
    cache: Mutex<HashMap<String, Arc<LoadedDataset>>>,
}

impl DatasetRegistry {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn names(&self) -> std::io::Result<Vec<String>> {
        let mut names: Vec<String> = std::fs::read_dir(&self.dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .collect();
        names.sort();
        Ok(names)
    }

    /// `None` when no such dataset exists.
    pub fn get(&self, name: &str) -> Result<Option<Arc<LoadedDataset>>, DatasetError> {
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Ok(None);
        }
        if let Some(d) = self.cache.lock().expect("registry lock").get(name) {
            return Ok(Some(d.clone()));
        }
        let path = self.dir.join(format!("{name}.csv"));
        if !path.is_file() {
            return Ok(None);
        }
        let opts = detect_options(&path)?;
        let loaded = Arc::new(LoadedDataset::load(name, &path, &opts)?);
        self.cache
            .lock()
            .expect("registry lock")
            .insert(name.to_string(), loaded.clone());
        Ok(Some(loaded))
    }

    pub fn list(&self) -> Result<Vec<DatasetInfo>, DatasetError> {
        let names = self.names().map_err(|source| DatasetError::Io {
            path: self.dir.clone(),
            source,
        })?;
        names
            .iter()
            .filter_map(|n| self.get(n).transpose())
            .map(|d| {
                d.map(|d| DatasetInfo {
                    name: d.name.clone(),
                    rows: d.pool.n_rows(),
                    features: d.records.first().map_or(0, |r| r.features.len()),
                })
            })
            .collect()
    }
}
