//! Interactive triage sessions: creation, querying, labeling and checkpoints.
//!
//! Every engine call for one session runs under that session's mutex, so
//! submissions are serialized; a stale submit (the id is no longer the pending
//! query) is rejected as a conflict rather than applied.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use actriage_core::dataset::Label;
use actriage_core::engine::{EngineConfig, EngineError, Phase, SessionCheckpoint, SessionState};
use actriage_core::learners::{LearnerError, LearnerKind};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::{DatasetRegistry, LoadedDataset};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("no dataset `{0}`")]
    UnknownDataset(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

/// An error and its source chain on one line.
pub fn describe(e: &dyn std::error::Error) -> String {
    let mut out = e.to_string();
    let mut cur = e.source();
    while let Some(s) = cur {
        out.push_str(": ");
        out.push_str(&s.to_string());
        cur = s.source();
    }
    out
}

impl From<EngineError> for SessionError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownId(_) | EngineError::AlreadyLabeled(_) | EngineError::Exhausted => {
                SessionError::Conflict(e.to_string())
            }
            EngineError::InvalidLabel(_) | EngineError::InvalidConfig(_) | EngineError::EmptyPool => {
                SessionError::BadRequest(e.to_string())
            }
            other => SessionError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub id: String,
    pub dataset: String,
    pub config: EngineConfig,
    /// Unix seconds.
    pub created_at: u64,
    pub status: SessionStatus,
    #[serde(default)]
    pub label_budget: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub dataset: String,
    #[serde(default = "default_learner")]
    pub learner: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub label_budget: Option<usize>,
    #[serde(default)]
    pub certainty_switch_threshold: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
}

fn default_learner() -> String {
    "svm".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub labeled: usize,
    pub positives: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPayload {
    pub session_id: String,
    pub warning_id: String,
    /// Raw values as they appear in the dataset file.
    pub features: IndexMap<String, String>,
    /// Current model's probability of actionable; 0.5 while no model exists.
    pub probability: f64,
    pub model_ready: bool,
    pub phase: Phase,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedItem {
    pub id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressReport {
    pub session_id: String,
    pub status: SessionStatus,
    pub phase: Phase,
    pub labeled: usize,
    pub positives: usize,
    pub total: usize,
    pub label_budget: Option<usize>,
    pub model_ready: bool,
    /// Remaining items, most likely actionable first.
    pub ranking: Vec<RankedItem>,
}

/// On-disk form of one session.
#[derive(Debug, Serialize, Deserialize)]
struct StoredSession {
    handle: SessionHandle,
    checkpoint: SessionCheckpoint,
}

struct Session {
    handle: SessionHandle,
    state: SessionState,
    data: Arc<LoadedDataset>,
}

impl Session {
    fn progress(&self) -> Progress {
        Progress {
            labeled: self.state.labeled_count(),
            positives: self.state.positive_count(),
            total: self.state.pool().n_rows(),
        }
    }

    fn ensure_active(&self) -> Result<(), SessionError> {
        match self.handle.status {
            SessionStatus::Active => Ok(()),
            SessionStatus::Stopped => Err(SessionError::Conflict(format!("session `{}` is stopped", self.handle.id))),
        }
    }
}

pub struct SessionManager {
    datasets: DatasetRegistry,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    checkpoint_dir: Option<PathBuf>,
}

impl SessionManager {
    pub fn new(data_dir: impl Into<PathBuf>, checkpoint_dir: Option<PathBuf>) -> Self {
        Self {
            datasets: DatasetRegistry::new(data_dir),
            sessions: RwLock::new(HashMap::new()),
            checkpoint_dir,
        }
    }

    /// Like [`SessionManager::new`], then reload every checkpoint found.
    pub fn open(data_dir: impl Into<PathBuf>, checkpoint_dir: Option<PathBuf>) -> Result<Self, SessionError> {
        let m = Self::new(data_dir, checkpoint_dir);
        if let Some(dir) = &m.checkpoint_dir {
            std::fs::create_dir_all(dir).map_err(|e| SessionError::Internal(format!("{}: {e}", dir.display())))?;
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(|e| SessionError::Internal(e.to_string()))?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            paths.sort();
            for p in paths {
                m.load_checkpoint(&p)?;
            }
        }
        Ok(m)
    }

    fn load_checkpoint(&self, path: &Path) -> Result<(), SessionError> {
        let fail = |e: String| SessionError::Internal(format!("{}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        let stored: StoredSession = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        let data = self
            .datasets
            .get(&stored.handle.dataset)
            .map_err(|e| fail(describe(&e)))?
            .ok_or_else(|| fail(format!("dataset `{}` is gone", stored.handle.dataset)))?;
        let state = SessionState::restore(data.pool.clone(), stored.checkpoint).map_err(|e| fail(e.to_string()))?;
        let id = stored.handle.id.clone();
        let session = Session {
            handle: stored.handle,
            state,
            data,
        };
        self.sessions
            .write()
            .expect("sessions lock")
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(())
    }

    pub fn datasets(&self) -> &DatasetRegistry {
        &self.datasets
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    fn persist(&self, s: &Session) -> Result<(), SessionError> {
        let Some(dir) = &self.checkpoint_dir else {
            return Ok(());
        };
        let stored = StoredSession {
            handle: s.handle.clone(),
            checkpoint: s.state.checkpoint(),
        };
        let text = serde_json::to_string(&stored).map_err(|e| SessionError::Internal(e.to_string()))?;
        let path = dir.join(format!("{}.json", s.handle.id));
        let tmp = dir.join(format!(".{}.json.tmp", s.handle.id));
        std::fs::create_dir_all(dir)
            .and_then(|_| std::fs::write(&tmp, text))
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|e| SessionError::Internal(format!("checkpoint {}: {e}", path.display())))
    }

    pub fn create(&self, req: CreateSession) -> Result<SessionHandle, SessionError> {
        let kind: LearnerKind = req.learner.parse().map_err(|e: LearnerError| SessionError::BadRequest(e.to_string()))?;
        let data = self
            .datasets
            .get(&req.dataset)
            .map_err(|e| SessionError::BadRequest(describe(&e)))?
            .ok_or_else(|| SessionError::UnknownDataset(req.dataset.clone()))?;
        let mut config = EngineConfig::new(kind).with_seed(req.seed);
        if let Some(t) = req.certainty_switch_threshold {
            config.certainty_switch_threshold = t;
        }
        if let Some(b) = req.batch_size {
            config.batch_size = b;
        }
        if req.label_budget == Some(0) {
            return Err(SessionError::BadRequest("label_budget must be at least 1".into()));
        }
        let state = SessionState::new(data.pool.clone(), config.clone())?;
        let handle = SessionHandle {
            id: uuid::Uuid::new_v4().simple().to_string(),
            dataset: req.dataset,
            config,
            created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            status: SessionStatus::Active,
            label_budget: req.label_budget,
        };
        let session = Session {
            handle: handle.clone(),
            state,
            data,
        };
        self.persist(&session)?;
        self.sessions
            .write()
            .expect("sessions lock")
            .insert(handle.id.clone(), Arc::new(Mutex::new(session)));
        Ok(handle)
    }

    pub fn handle(&self, id: &str) -> Result<SessionHandle, SessionError> {
        Ok(self.session(id)?.lock().expect("session lock").handle.clone())
    }

    pub fn list(&self) -> Vec<SessionHandle> {
        let sessions: Vec<Arc<Mutex<Session>>> = self.sessions.read().expect("sessions lock").values().cloned().collect();
        let mut out: Vec<SessionHandle> = sessions.iter().map(|s| s.lock().expect("session lock").handle.clone()).collect();
        out.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        out
    }

    /// The pending query. Repeated calls without a label return the same warning.
    pub fn next(&self, id: &str) -> Result<QueryPayload, SessionError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock");
        s.ensure_active()?;
        let row = s.state.next_rows()?[0];
        Ok(QueryPayload {
            session_id: s.handle.id.clone(),
            warning_id: s.state.pool().ids[row].clone(),
            features: s.data.records[row].features.clone(),
            probability: s.state.probability(row),
            model_ready: s.state.model().is_some(),
            phase: s.state.phase(),
            progress: s.progress(),
        })
    }

    /// Label the pending query (or a member of the pending batch).
    pub fn submit(&self, id: &str, warning_id: &str, label: Label) -> Result<ProgressReport, SessionError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        s.ensure_active()?;
        if label.class().is_none() {
            return Err(SessionError::BadRequest(format!(
                "label must be actionable or unactionable, got {label}"
            )));
        }
        let pending = s.state.next_batch()?;
        if !pending.iter().any(|p| p == warning_id) {
            return Err(SessionError::Conflict(format!(
                "`{warning_id}` is not the pending query (expected `{}`)",
                pending[0]
            )));
        }
        s.state.submit_label(warning_id, label)?;
        let budget_spent = s.handle.label_budget.is_some_and(|b| s.state.labeled_count() >= b);
        if budget_spent || s.state.unlabeled_count() == 0 {
            s.handle.status = SessionStatus::Stopped;
        }
        self.persist(&s)?;
        Ok(report(&s, None))
    }

    pub fn progress(&self, id: &str, limit: Option<usize>) -> Result<ProgressReport, SessionError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock");
        Ok(report(&s, limit))
    }

    pub fn stop(&self, id: &str) -> Result<SessionHandle, SessionError> {
        let s = self.session(id)?;
        let mut s = s.lock().expect("session lock");
        s.handle.status = SessionStatus::Stopped;
        self.persist(&s)?;
        Ok(s.handle.clone())
    }

    /// `id,label` rows in labeling order.
    pub fn export_csv(&self, id: &str) -> Result<String, SessionError> {
        let s = self.session(id)?;
        let s = s.lock().expect("session lock");
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "label"]).map_err(|e| SessionError::Internal(e.to_string()))?;
        for h in s.state.history() {
            w.write_record([h.id.as_str(), &h.label.label().to_string()])
                .map_err(|e| SessionError::Internal(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| SessionError::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| SessionError::Internal(e.to_string()))
    }
}

fn report(s: &Session, limit: Option<usize>) -> ProgressReport {
    let ranking = s
        .state
        .ranking()
        .into_iter()
        .take(limit.unwrap_or(usize::MAX))
        .map(|(row, probability)| RankedItem {
            id: s.state.pool().ids[row].clone(),
            probability,
        })
        .collect();
    let p = s.progress();
    ProgressReport {
        session_id: s.handle.id.clone(),
        status: s.handle.status,
        phase: s.state.phase(),
        labeled: p.labeled,
        positives: p.positives,
        total: p.total,
        label_budget: s.handle.label_budget,
        model_ready: s.state.model().is_some(),
        ranking,
    }
}
