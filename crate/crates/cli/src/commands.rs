//! CLI subcommands. Every command computes all results before writing, so a
//! failure leaves no partial output behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use actriage_core::baselines;
use actriage_core::dataset::{self, CsvOptions, EncodedDataset, VersionPair};
use actriage_core::engine::{run_simulation, EngineConfig};
use actriage_core::learners::{self, LearnerKind, TrainConfig};
use actriage_core::metrics::{self, session_auc, AucConstruction, RecallCostCurve};
use actriage_core::report::{self, RunRecord, THRESHOLDS};
use actriage_core::synthetic::{self, Separation, SyntheticSpec};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;

/// One finished run: its record and curve.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub curve: RecallCostCurve,
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub data: PathBuf,
    pub train: Option<PathBuf>,
    pub learner: LearnerKind,
    pub seeds: u64,
    pub seed_start: u64,
    pub stop: f64,
    pub project: Option<String>,
    pub csv: CsvOptions,
    pub auc: AucConstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    Random,
    Supervised,
}

#[derive(Debug, Clone)]
pub struct BaselineArgs {
    pub mode: BaselineMode,
    pub data: PathBuf,
    pub train: Option<PathBuf>,
    pub learner: LearnerKind,
    pub seeds: u64,
    pub seed_start: u64,
    pub project: Option<String>,
    pub csv: CsvOptions,
}

/// `derby_v5.csv` → `derby`.
pub fn project_name(path: &Path) -> String {
    let stem = path.file_stem().map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    match stem.rsplit_once("_v") {
        Some((head, tail)) if !head.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) && !tail.is_empty() => {
            head.to_string()
        }
        _ => stem,
    }
}

fn seeds(start: u64, count: u64) -> Vec<u64> {
    (start..start + count).collect()
}

fn load_pool(path: &Path, opts: &CsvOptions) -> Result<EncodedDataset> {
    dataset::load_encoded(path, opts).with_context(|| format!("loading {}", path.display()))
}

fn load_pair(train: &Path, test: &Path, opts: &CsvOptions) -> Result<VersionPair> {
    dataset::load_version_pair(train, test, opts)
        .with_context(|| format!("loading {} and {}", train.display(), test.display()))
}

pub fn simulate(args: &SimulateArgs) -> Result<Vec<RunOutput>> {
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let project = args.project.clone().unwrap_or_else(|| project_name(&args.data));
    let (pool, warm) = match &args.train {
        Some(train) => {
            let pair = load_pair(train, &args.data, &args.csv)?;
            let labels = pair.train.known_labels().context("training version has unlabeled rows")?;
            let cfg = TrainConfig::new(args.learner);
            let model = learners::train(&pair.train.x, &labels, &cfg).context("training warm-start model")?;
            (pair.test, Some(model))
        }
        None => (load_pool(&args.data, &args.csv)?, None),
    };
    if !pool.fully_labeled() {
        bail!("{} has rows without ground truth; simulation needs every label", args.data.display());
    }
    let pool = Arc::new(pool);
    let method = format!(
        "active_{}{}",
        args.learner.short_name(),
        if warm.is_some() { "_warm" } else { "" }
    );
    seeds(args.seed_start, args.seeds)
        .into_par_iter()
        .map(|seed| {
            let mut cfg = EngineConfig::new(args.learner).with_seed(seed).with_stop_recall(args.stop);
            cfg.warm_start_model = warm.clone();
            let out = run_simulation(pool.clone(), cfg)?;
            let auc = session_auc(&out.state, out.state.model(), args.auc).ok();
            Ok(RunOutput {
                record: RunRecord::from_curve(&project, &method, seed, auc, &out.curve),
                curve: out.curve,
            })
        })
        .collect()
}

pub fn baseline(args: &BaselineArgs) -> Result<Vec<RunOutput>> {
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let project = args.project.clone().unwrap_or_else(|| project_name(&args.data));
    match args.mode {
        BaselineMode::Random => {
            let pool = load_pool(&args.data, &args.csv)?;
            let labels = pool.known_labels().context("random baseline needs ground truth for every row")?;
            seeds(args.seed_start, args.seeds)
                .into_par_iter()
                .map(|seed| {
                    let run = baselines::random_run(&pool, seed)?;
                    // earlier in the order scores higher
                    let index = pool.id_index();
                    let mut scores = vec![0.0; pool.n_rows()];
                    for (k, id) in run.order.iter().enumerate() {
                        scores[index[id.as_str()]] = (pool.n_rows() - k) as f64;
                    }
                    let auc = metrics::roc_auc(&scores, &labels).ok();
                    Ok(RunOutput {
                        record: RunRecord::from_curve(&project, "random", seed, auc, &run.curve),
                        curve: run.curve,
                    })
                })
                .collect()
        }
        BaselineMode::Supervised => {
            let Some(train) = &args.train else {
                bail!("supervised baseline needs --train (the previous version)");
            };
            let pair = load_pair(train, &args.data, &args.csv)?;
            let method = format!("supervised_{}", args.learner.short_name());
            seeds(args.seed_start, args.seeds)
                .into_par_iter()
                .map(|seed| {
                    let cfg = TrainConfig::new(args.learner).with_seed(seed);
                    let run = baselines::supervised_ranking(&pair, &cfg)?;
                    Ok(RunOutput {
                        record: RunRecord::from_curve(&project, &method, seed, Some(run.auc), &run.curve),
                        curve: run.curve,
                    })
                })
                .collect()
        }
    }
}

/// `metric,median,q1,q3,iqr,available,runs` per metric.
pub fn summary_csv(records: &[RunRecord]) -> Result<String> {
    let groups = report::summarize_runs(records)?;
    let mut s = String::from("project,method,metric,median,q1,q3,iqr,available,runs\n");
    for g in &groups {
        let names = std::iter::once("auc".to_string()).chain(THRESHOLDS.iter().map(|t| format!("cost@{t:?}")));
        let cells = std::iter::once(&g.auc).chain(g.costs.iter());
        for (name, c) in names.zip(cells) {
            let (m, q1, q3, iqr) = c
                .summary
                .as_ref()
                .map_or((String::new(), String::new(), String::new(), String::new()), |s| {
                    (s.median.to_string(), s.q1.to_string(), s.q3.to_string(), s.iqr.to_string())
                });
            let _ = writeln!(s, "{},{},{name},{m},{q1},{q3},{iqr},{},{}", g.project, g.method, c.available, c.runs);
        }
    }
    Ok(s)
}

/// Write `runs.csv`, `summary.csv` and one curve per run under `out`.
pub fn write_run_set(out: &Path, runs: &[RunOutput]) -> Result<()> {
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    let summary = summary_csv(&records)?;
    let mut buf = Vec::new();
    report::write_records(&mut buf, &records)?;
    let curves = out.join("curves");
    std::fs::create_dir_all(&curves).with_context(|| format!("creating {}", curves.display()))?;
    for r in runs {
        let name = format!("{}_{}_seed{}.csv", r.record.project, r.record.method, r.record.seed);
        std::fs::write(curves.join(name), r.curve.to_csv())?;
    }
    std::fs::write(out.join("runs.csv"), buf)?;
    std::fs::write(out.join("summary.csv"), summary)?;
    Ok(())
}

pub fn report(runs: &[PathBuf], auc_note: Option<&str>) -> Result<String> {
    let mut records = Vec::new();
    for p in runs {
        let f = std::fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        records.extend(report::read_records(f).with_context(|| format!("reading {}", p.display()))?);
    }
    Ok(report::render_markdown(&records, auc_note)?)
}

#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub project: Option<String>,
    pub negatives: usize,
    pub positives: usize,
    pub deleted: usize,
    pub separable: Option<f64>,
    pub signal: f64,
    pub seed: u64,
}

pub fn synth(args: &SynthArgs) -> Result<Vec<actriage_core::WarningRecord>> {
    let mut spec = match &args.project {
        Some(p) => SyntheticSpec::for_project(p, args.seed).with_context(|| format!("unknown project `{p}`"))?,
        None => SyntheticSpec {
            deleted: args.deleted,
            ..SyntheticSpec::new(args.negatives, args.positives, args.seed)
        },
    };
    spec.separation = match args.separable {
        Some(m) => Separation::Separable(m),
        None => Separation::Gaussian(args.signal),
    };
    if spec.negatives + spec.positives == 0 {
        bail!("synthetic dataset would be empty");
    }
    Ok(synthetic::generate(&spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn project_names() {
        assert_eq!(project_name(Path::new("/x/derby_v5.csv")), "derby");
        assert_eq!(project_name(Path::new("ant.csv")), "ant");
        assert_eq!(project_name(Path::new("my_vault.csv")), "my_vault");
    }
}
