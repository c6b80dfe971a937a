//! Run-set records and their markdown summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{cost_at_recall, summarize, RecallCostCurve, RunSummary};

/// Recall thresholds reported in the cost table.
pub const THRESHOLDS: [f64; 5] = [0.7, 0.8, 0.9, 0.95, 1.0];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("run set is empty")]
    EmptyRunSet,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One row of a run set. A cost is `None` when the run never reached that recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub project: String,
    pub method: String,
    pub seed: u64,
    pub auc: Option<f64>,
    #[serde(rename = "cost@0.7")]
    pub cost_70: Option<f64>,
    #[serde(rename = "cost@0.8")]
    pub cost_80: Option<f64>,
    #[serde(rename = "cost@0.9")]
    pub cost_90: Option<f64>,
    #[serde(rename = "cost@0.95")]
    pub cost_95: Option<f64>,
    #[serde(rename = "cost@1.0")]
    pub cost_100: Option<f64>,
}

impl RunRecord {
    pub fn from_curve(project: &str, method: &str, seed: u64, auc: Option<f64>, curve: &RecallCostCurve) -> Self {
        let c = THRESHOLDS.map(|t| {
            let r = cost_at_recall(curve, t);
            r.reached.then_some(r.cost)
        });
        Self {
            project: project.to_string(),
            method: method.to_string(),
            seed,
            auc,
            cost_70: c[0],
            cost_80: c[1],
            cost_90: c[2],
            cost_95: c[3],
            cost_100: c[4],
        }
    }

    pub fn costs(&self) -> [Option<f64>; 5] {
        [self.cost_70, self.cost_80, self.cost_90, self.cost_95, self.cost_100]
    }
}

pub fn write_records<W: io::Write>(out: W, records: &[RunRecord]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: io::Read>(input: R) -> Result<Vec<RunRecord>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Median/IQR of one metric within one (project, method) group.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub summary: Option<RunSummary>,
    /// Runs in the group that have a value.
    pub available: usize,
    pub runs: usize,
}

impl Cell {
    fn of(values: impl Iterator<Item = Option<f64>>) -> Self {
        let all: Vec<Option<f64>> = values.collect();
        let present: Vec<f64> = all.iter().flatten().copied().collect();
        Self {
            summary: summarize(&present).ok(),
            available: present.len(),
            runs: all.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub project: String,
    pub method: String,
    pub auc: Cell,
    pub costs: [Cell; 5],
}

pub fn summarize_runs(records: &[RunRecord]) -> Result<Vec<GroupSummary>, ReportError> {
    if records.is_empty() {
        return Err(ReportError::EmptyRunSet);
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.project, &r.method)).or_default().push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((project, method), rs)| GroupSummary {
            project: project.to_string(),
            method: method.to_string(),
            auc: Cell::of(rs.iter().map(|r| r.auc)),
            costs: std::array::from_fn(|i| Cell::of(rs.iter().map(|r| r.costs()[i]))),
        })
        .collect())
}

/// `median(IQR)` in percent, with a note when some runs lack the value.
fn percent_cell(c: &Cell) -> String {
    match &c.summary {
        None => "n/a".to_string(),
        Some(s) => {
            let mut out = format!("{:.0}({:.0})", s.median * 100.0, s.iqr * 100.0);
            if c.available < c.runs {
                let _ = write!(out, " [{}/{}]", c.available, c.runs);
            }
            out
        }
    }
}

/// Markdown report: AUC table (projects × methods) then a cost-at-recall table.
pub fn render_markdown(records: &[RunRecord], auc_note: Option<&str>) -> Result<String, ReportError> {
    let groups = summarize_runs(records)?;
    let mut methods: Vec<&str> = groups.iter().map(|g| g.method.as_str()).collect();
    methods.dedup();
    methods.sort_unstable();
    methods.dedup();
    let mut projects: Vec<&str> = groups.iter().map(|g| g.project.as_str()).collect();
    projects.dedup();
    let lookup: BTreeMap<(&str, &str), &GroupSummary> =
        groups.iter().map(|g| ((g.project.as_str(), g.method.as_str()), g)).collect();
    let runs = groups.iter().map(|g| g.auc.runs).max().unwrap_or(0);

    let mut s = String::new();
    let _ = writeln!(s, "# Run-set report\n");
    let _ = writeln!(s, "## AUC % (median(IQR)) over {runs} runs\n");
    if let Some(note) = auc_note {
        let _ = writeln!(s, "{note}\n");
    }
    let _ = writeln!(s, "| Project | {} |", methods.join(" | "));
    let _ = writeln!(s, "|---|{}", "---|".repeat(methods.len()));
    for p in &projects {
        let cells: Vec<String> = methods
            .iter()
            .map(|m| lookup.get(&(*p, *m)).map_or("n/a".to_string(), |g| percent_cell(&g.auc)))
            .collect();
        let _ = writeln!(s, "| {p} | {} |", cells.join(" | "));
    }

    let _ = writeln!(s, "\n## Cost % to reach recall (median(IQR))\n");
    let heads: Vec<String> = THRESHOLDS.iter().map(|t| format!("{:.0}%", t * 100.0)).collect();
    let _ = writeln!(s, "| Project | Method | {} |", heads.join(" | "));
    let _ = writeln!(s, "|---|---|{}", "---|".repeat(THRESHOLDS.len()));
    for g in &groups {
        let cells: Vec<String> = g.costs.iter().map(percent_cell).collect();
        let _ = writeln!(s, "| {} | {} | {} |", g.project, g.method, cells.join(" | "));
    }
    Ok(s)
}
