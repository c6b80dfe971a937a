use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use actriage::commands::{self, BaselineArgs, BaselineMode, SimulateArgs, SynthArgs};
use actriage::http;
use actriage::sessions::SessionManager;
use actriage_core::dataset::CsvOptions;
use actriage_core::learners::LearnerKind;
use actriage_core::metrics::AucConstruction;
use actriage_core::synthetic;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "actriage", version, about = "Active-learning triage of static-analysis warnings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate active-learning sessions against a labeled dataset.
    Simulate(SimulateCmd),
    /// Random or supervised comparison runs.
    Baseline(BaselineCmd),
    /// Render run-set CSVs as a markdown report.
    Report(ReportCmd),
    /// Serve the interactive session API.
    Serve(ServeCmd),
    /// Write a synthetic warning dataset.
    Synth(SynthCmd),
}

#[derive(Args)]
struct CsvFlags {
    /// Ground-truth column.
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Id column; the row index is used when absent.
    #[arg(long)]
    id_column: Option<String>,
    #[arg(long, default_value = "close")]
    positive_token: String,
    #[arg(long, default_value = "open")]
    negative_token: String,
    #[arg(long, default_value = "delete")]
    deleted_token: String,
    /// Columns to skip (repeatable).
    #[arg(long = "ignore-column")]
    ignore_columns: Vec<String>,
}

impl CsvFlags {
    fn options(&self) -> CsvOptions {
        CsvOptions {
            label_column: Some(self.label_column.clone()),
            positive_token: self.positive_token.clone(),
            negative_token: self.negative_token.clone(),
            deleted_token: self.deleted_token.clone(),
            id_column: self.id_column.clone(),
            ignore_columns: self.ignore_columns.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Learner {
    Svm,
    Rf,
    Dt,
}

impl From<Learner> for LearnerKind {
    fn from(l: Learner) -> Self {
        match l {
            Learner::Svm => LearnerKind::LinearSvm,
            Learner::Rf => LearnerKind::RandomForest,
            Learner::Dt => LearnerKind::DecisionTree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AucMode {
    /// Queried items by retrieval order, then the rest by final-model probability.
    Retrieval,
    /// Final-model probabilities over never-queried items only.
    Heldout,
}

#[derive(Args)]
struct RunSetFlags {
    /// Dataset to rank (the current version).
    #[arg(long)]
    data: PathBuf,
    /// Previous version: warm start for simulate, training side for supervised.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "svm")]
    learner: Learner,
    /// Number of repetitions.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_start: u64,
    /// Project name in outputs; defaults to the file stem without `_vN`.
    #[arg(long)]
    project: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    csv: CsvFlags,
}

#[derive(Args)]
struct SimulateCmd {
    #[command(flatten)]
    run: RunSetFlags,
    /// Stop once this recall is reached.
    #[arg(long, default_value_t = 0.95)]
    stop: f64,
    #[arg(long, value_enum, default_value = "retrieval")]
    auc: AucMode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Random,
    Supervised,
}

#[derive(Args)]
struct BaselineCmd {
    #[arg(long, value_enum)]
    mode: Mode,
    #[command(flatten)]
    run: RunSetFlags,
}

#[derive(Args)]
struct ReportCmd {
    /// `runs.csv` files to combine.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Text placed above the AUC table.
    #[arg(long)]
    auc_note: Option<String>,
}

#[derive(Args)]
struct ServeCmd {
    #[arg(long, env = "ACTRIAGE_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Directory of `*.csv` datasets.
    #[arg(long, env = "ACTRIAGE_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    /// Where session checkpoints live; sessions found here are resumed.
    #[arg(long, env = "ACTRIAGE_CHECKPOINT_DIR")]
    checkpoint_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    /// Use the class counts of a known project.
    #[arg(long)]
    project: Option<String>,
    #[arg(long, default_value_t = 45)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    positives: usize,
    #[arg(long, default_value_t = 0)]
    deleted: usize,
    /// Make the classes linearly separable with this margin.
    #[arg(long)]
    separable: Option<f64>,
    /// Class shift in standard deviations for the default mode.
    #[arg(long, default_value_t = 1.5)]
    signal: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let args = SimulateArgs {
                data: c.run.data,
                train: c.run.train,
                learner: c.run.learner.into(),
                seeds: c.run.seeds,
                seed_start: c.run.seed_start,
                stop: c.stop,
                project: c.run.project,
                csv: c.run.csv.options(),
                auc: match c.auc {
                    AucMode::Retrieval => AucConstruction::RetrievalOrder,
                    AucMode::Heldout => AucConstruction::FinalModelHeldOut,
                },
            };
            let runs = commands::simulate(&args)?;
            commands::write_run_set(&c.run.out, &runs)?;
            eprintln!("wrote {} runs to {}", runs.len(), c.run.out.display());
        }
        Command::Baseline(c) => {
            let args = BaselineArgs {
                mode: match c.mode {
                    Mode::Random => BaselineMode::Random,
                    Mode::Supervised => BaselineMode::Supervised,
                },
                data: c.run.data,
                train: c.run.train,
                learner: c.run.learner.into(),
                seeds: c.run.seeds,
                seed_start: c.run.seed_start,
                project: c.run.project,
                csv: c.run.csv.options(),
            };
            let runs = commands::baseline(&args)?;
            commands::write_run_set(&c.run.out, &runs)?;
            eprintln!("wrote {} runs to {}", runs.len(), c.run.out.display());
        }
        Command::Report(c) => {
            let md = commands::report(&c.runs, c.auc_note.as_deref())?;
            match c.out {
                Some(p) => std::fs::write(&p, md).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{md}"),
            }
        }
        Command::Serve(c) => serve(c)?,
        Command::Synth(c) => {
            let records = commands::synth(&SynthArgs {
                project: c.project,
                negatives: c.negatives,
                positives: c.positives,
                deleted: c.deleted,
                separable: c.separable,
                signal: c.signal,
                seed: c.seed,
            })?;
            synthetic::write_csv_file(&c.out, &records).with_context(|| format!("writing {}", c.out.display()))?;
        }
    }
    Ok(())
}

fn serve(c: ServeCmd) -> Result<()> {
    std::fs::read_dir(&c.data_dir).with_context(|| format!("reading data directory {}", c.data_dir.display()))?;
    let manager = Arc::new(SessionManager::open(c.data_dir, c.checkpoint_dir)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(c.listen)
            .await
            .with_context(|| format!("binding {}", c.listen))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, http::router(manager))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
