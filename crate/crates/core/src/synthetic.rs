//! Seeded generator of warning corpora with the golden-feature layout.
//!
//! Used for tests, demos and the UI's small sample dataset. The class signal is
//! a latent shift applied to a subset of numeric features and a skew in the
//! categorical ones, so difficulty is controlled by a single `signal` knob.

use std::io;
use std::path::Path;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Label, WarningRecord};
use crate::rng;

/// Numeric golden features, in column order.
pub const NUMERIC_FEATURES: [&str; 18] = [
    "warning_context_in_method",
    "warning_context_in_file",
    "warning_context_for_warning_type",
    "defect_likelihood_for_warning_pattern",
    "discretization_of_defect_likelihood",
    "average_lifetime_for_warning_type",
    "comment_code_ratio",
    "method_depth",
    "file_depth",
    "methods_in_file",
    "classes_in_package",
    "warnings_in_package",
    "file_age",
    "file_creation",
    "developers",
    "added_loc_in_file_last_3_months",
    "added_loc_in_package_last_3_months",
    "warning_lifetime_by_revision",
];

/// Categorical golden features with their vocabularies.
pub const CATEGORICAL_FEATURES: [(&str, &[&str]); 5] = [
    (
        "warning_pattern",
        &["NP_NULL_ON_SOME_PATH", "DLS_DEAD_LOCAL_STORE", "SE_BAD_FIELD", "EI_EXPOSE_REP", "URF_UNREAD_FIELD", "RV_RETURN_VALUE_IGNORED"],
    ),
    ("warning_type", &["CORRECTNESS", "BAD_PRACTICE", "STYLE", "PERFORMANCE", "MALICIOUS_CODE"]),
    ("warning_priority", &["1", "2", "3"]),
    ("parameter_signature", &["()V", "(Ljava/lang/String;)V", "(I)I", "(Ljava/lang/Object;)Z"]),
    ("method_visibility", &["public", "protected", "private", "package"]),
];

/// Version-5 class counts `(project, unactionable, actionable, deleted)`.
pub const PROJECT_COUNTS: [(&str, usize, usize, usize); 9] = [
    ("ant", 1061, 54, 0),
    ("commons", 744, 42, 0),
    ("tomcat", 1115, 326, 0),
    ("jmeter", 468, 145, 7),
    ("cass", 2245, 356, 64),
    ("phoenix", 2046, 343, 13),
    ("mvn", 790, 28, 44),
    ("lucence", 2257, 1168, 440),
    ("derby", 2386, 121, 0),
];

pub fn project_counts(project: &str) -> Option<(usize, usize, usize)> {
    PROJECT_COUNTS
        .iter()
        .find(|(p, ..)| *p == project)
        .map(|&(_, n, p, d)| (n, p, d))
}

/// How the actionable class differs from the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    /// Informative numeric features shifted by this many standard deviations.
    Gaussian(f64),
    /// Linearly separable with the given margin along the informative features.
    Separable(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub negatives: usize,
    pub positives: usize,
    pub deleted: usize,
    pub separation: Separation,
    /// How many leading numeric features carry signal.
    pub informative: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(negatives: usize, positives: usize, seed: u64) -> Self {
        Self {
            negatives,
            positives,
            deleted: 0,
            separation: Separation::Gaussian(1.5),
            informative: 6,
            seed,
        }
    }

    /// Counts taken from [`PROJECT_COUNTS`].
    pub fn for_project(project: &str, seed: u64) -> Option<Self> {
        let (n, p, d) = project_counts(project)?;
        Some(Self {
            deleted: d,
            ..Self::new(n, p, seed)
        })
    }
}

pub fn generate(spec: &SyntheticSpec) -> Vec<WarningRecord> {
    let mut r = rng::seeded(spec.seed);
    let informative = spec.informative.clamp(1, NUMERIC_FEATURES.len());
    let mut labels: Vec<Label> = std::iter::repeat_n(Label::Unactionable, spec.negatives)
        .chain(std::iter::repeat_n(Label::Actionable, spec.positives))
        .chain(std::iter::repeat_n(Label::Deleted, spec.deleted))
        .collect();
    labels.shuffle(&mut r);

    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let positive = label == Label::Actionable;
            let mut features = IndexMap::new();
            let along: f64 = match spec.separation {
                Separation::Separable(margin) => {
                    // distance from the hyperplane sum(informative) = 0, scaled per feature
                    let d = StandardNormal.sample(&mut r);
                    let d: f64 = f64::abs(d) + margin / 2.0;
                    if positive {
                        d
                    } else {
                        -d
                    }
                }
                Separation::Gaussian(shift) => {
                    if positive {
                        shift
                    } else {
                        0.0
                    }
                }
            };
            let mut noise: Vec<f64> = (0..NUMERIC_FEATURES.len()).map(|_| StandardNormal.sample(&mut r)).collect();
            if let Separation::Separable(_) = spec.separation {
                // project the informative noise onto the hyperplane so only `along` decides the side
                let mean = noise[..informative].iter().sum::<f64>() / informative as f64;
                for v in &mut noise[..informative] {
                    *v -= mean;
                }
            }
            for (j, name) in NUMERIC_FEATURES.iter().enumerate() {
                let v = if j < informative { noise[j] + along } else { noise[j] };
                // print with fixed precision so files are stable across platforms
                features.insert((*name).to_string(), format!("{:.6}", 10.0 + 3.0 * v));
            }
            for (k, (name, vocab)) in CATEGORICAL_FEATURES.iter().enumerate() {
                // positives favour the first category of the first two features
                let skew = positive && k < 2 && matches!(spec.separation, Separation::Gaussian(_));
                let idx = if skew && r.gen_bool(0.5) { 0 } else { r.gen_range(0..vocab.len()) };
                features.insert((*name).to_string(), vocab[idx].to_string());
            }
            WarningRecord {
                id: format!("w{i:05}"),
                features,
                label,
            }
        })
        .collect()
}

/// Write records as CSV with an `id` column first and `label` last, using the
/// default `close` / `open` / `delete` tokens.
pub fn write_csv<W: io::Write>(out: W, records: &[WarningRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = records.first() else {
        w.flush()?;
        return Ok(());
    };
    let mut header = vec!["id".to_string()];
    header.extend(first.features.keys().cloned());
    header.push("label".to_string());
    w.write_record(&header)?;
    for rec in records {
        let mut row = vec![rec.id.clone()];
        row.extend(rec.features.values().cloned());
        row.push(
            match rec.label {
                Label::Actionable => "close",
                Label::Unactionable => "open",
                Label::Deleted => "delete",
                Label::Unknown => "",
            }
            .to_string(),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: impl AsRef<Path>, records: &[WarningRecord]) -> Result<(), csv::Error> {
    let f = std::fs::File::create(path)?;
    write_csv(io::BufWriter::new(f), records)
}
