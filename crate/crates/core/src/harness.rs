//! Multi-seed experiment runs and their summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{accuracy, centroid_1nn, distill, DistillOptions};
use crate::dataset::{centroids, load_csv, CsvSpec, Dataset};
use crate::error::{Error, Result};
use crate::linefind::FinderRegistry;
use crate::synth::{generate, preset, BlobSpec, SynthPreset};

pub const RESULT_FORMAT: &str = "protolines-experiment";
pub const RESULT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Regenerated for every seed; the spec's own seed is ignored.
    Synthetic(BlobSpec),
    Csv { path: PathBuf, spec: CsvSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: DataSource,
    pub method: String,
    pub distill: DistillOptions,
}

pub const PENGUINS_FEATURES: [&str; 4] = ["bill_length_mm", "bill_depth_mm", "flipper_length_mm", "body_mass_g"];
pub const ECOLI_FEATURES: [&str; 6] = ["mcg", "gvh", "lip", "aac", "alm1", "alm2"];

impl ExperimentConfig {
    pub fn synthetic(p: &SynthPreset) -> Self {
        Self {
            name: p.name.clone(),
            source: DataSource::Synthetic(p.spec.clone()),
            method: p.method.into(),
            distill: DistillOptions::new(p.lines),
        }
    }

    /// Five classes (species × island), four measurements, one attraction cluster.
    pub fn penguins(path: impl Into<PathBuf>) -> Self {
        Self {
            name: "penguins".into(),
            source: DataSource::Csv {
                path: path.into(),
                spec: CsvSpec::new(["species", "island"]).with_features(PENGUINS_FEATURES),
            },
            method: "da".into(),
            distill: DistillOptions::new(1),
        }
    }

    /// Five localization classes, six features, two attraction clusters.
    pub fn ecoli(path: impl Into<PathBuf>) -> Self {
        Self {
            name: "ecoli".into(),
            source: DataSource::Csv {
                path: path.into(),
                spec: CsvSpec::new(["class"]).with_features(ECOLI_FEATURES),
            },
            method: "da".into(),
            distill: DistillOptions::new(2),
        }
    }

    /// A synthetic preset, or `penguins` / `ecoli` read from `data_dir`.
    pub fn named(name: &str, dim: Option<usize>, data_dir: &Path) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "penguins" => Ok(Self::penguins(data_dir.join("penguins.csv"))),
            "ecoli" => Ok(Self::ecoli(data_dir.join("ecoli.csv"))),
            _ => preset(name, dim, 0).map(|p| Self::synthetic(&p)),
        }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.source, DataSource::Synthetic(_))
    }
}

/// Outcome of one seed (or the single run of a file-backed dataset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: Option<u64>,
    pub classes: usize,
    pub points: usize,
    pub dim: usize,
    pub lines: usize,
    pub hslap: f64,
    pub onenn: f64,
    /// Set when the seed failed; the numeric fields are then zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub method: String,
    pub lines: usize,
    pub classes: usize,
    pub dim: usize,
    pub repeats: usize,
    pub base_seed: Option<u64>,
    pub failures: usize,
    pub mean_lines: f64,
    pub hslap_mean: f64,
    pub hslap_std: f64,
    pub onenn_mean: f64,
    pub onenn_std: f64,
    /// `mean_lines / classes`.
    pub prototypes_ratio: f64,
    /// `hslap_mean / onenn_mean`.
    pub accuracy_ratio: f64,
    pub records: Vec<SeedRecord>,
}

/// Mean and population standard deviation, summed in slice order.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn evaluate(ds: &Dataset, config: &ExperimentConfig, registry: &FinderRegistry) -> Result<(usize, f64, f64)> {
    let finder = registry.get(&config.method)?;
    let model = distill(ds, finder, &config.distill)?;
    let hslap = accuracy(&model.predict_dataset(ds)?, ds.labels())?;
    let onenn = accuracy(&centroid_1nn(&centroids(ds), ds.points())?, ds.labels())?;
    Ok((model.lines.len(), hslap, onenn))
}

/// The record for one seed, plus the error that failed it, if any.
fn run_one(config: &ExperimentConfig, registry: &FinderRegistry, seed: Option<u64>) -> Result<(SeedRecord, Option<Error>)> {
    let ds = match (&config.source, seed) {
        (DataSource::Synthetic(spec), Some(seed)) => generate(&BlobSpec { seed, ..spec.clone() })?,
        (DataSource::Synthetic(_), None) => unreachable!("synthetic runs are always seeded"),
        (DataSource::Csv { path, spec }, _) => load_csv(path, spec)?.0,
    };
    let blank = SeedRecord {
        seed,
        classes: ds.class_count(),
        points: ds.len(),
        dim: ds.dim(),
        lines: 0,
        hslap: 0.0,
        onenn: 0.0,
        error: None,
    };
    Ok(match evaluate(&ds, config, registry) {
        Ok((lines, hslap, onenn)) => (
            SeedRecord {
                lines,
                hslap,
                onenn,
                ..blank
            },
            None,
        ),
        Err(e) => {
            log::warn!("{} seed {seed:?}: {e}", config.name);
            let record = SeedRecord {
                error: Some(format!("{}: {e}", e.category().as_str())),
                ..blank
            };
            (record, Some(e))
        }
    })
}

/// Runs `config` for seeds `base_seed + k`, `k < repeats` (file-backed data runs
/// once). Failing seeds are kept as records and left out of the statistics;
/// if every seed fails the first error is returned.
pub fn run(config: &ExperimentConfig, registry: &FinderRegistry, repeats: usize, base_seed: u64) -> Result<ExperimentResult> {
    if repeats == 0 {
        return Err(Error::Usage("repeats must be at least 1".into()));
    }
    let seeds: Vec<Option<u64>> = if config.is_synthetic() {
        (0..repeats as u64).map(|k| Some(base_seed.wrapping_add(k))).collect()
    } else {
        vec![None]
    };
    let outcomes: Vec<(SeedRecord, Option<Error>)> = seeds
        .par_iter()
        .map(|&s| run_one(config, registry, s))
        .collect::<Result<_>>()?;
    let (records, mut errors): (Vec<SeedRecord>, Vec<Option<Error>>) = outcomes.into_iter().unzip();
    let ok: Vec<&SeedRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    if ok.is_empty() {
        return Err(errors.swap_remove(0).expect("a failed record carries its error"));
    }
    let lines: Vec<f64> = ok.iter().map(|r| r.lines as f64).collect();
    let hslap: Vec<f64> = ok.iter().map(|r| r.hslap).collect();
    let onenn: Vec<f64> = ok.iter().map(|r| r.onenn).collect();
    let (mean_lines, _) = mean_std(&lines);
    let (hslap_mean, hslap_std) = mean_std(&hslap);
    let (onenn_mean, onenn_std) = mean_std(&onenn);
    let classes = records[0].classes;
    let dim = records[0].dim;
    Ok(ExperimentResult {
        name: config.name.clone(),
        method: config.method.clone(),
        lines: config.distill.find.lines,
        classes,
        dim,
        repeats: seeds.len(),
        base_seed: config.is_synthetic().then_some(base_seed),
        failures: records.len() - ok.len(),
        mean_lines,
        hslap_mean,
        hslap_std,
        onenn_mean,
        onenn_std,
        prototypes_ratio: mean_lines / classes as f64,
        accuracy_ratio: hslap_mean / onenn_mean,
        records,
    })
}

/// The 80-class attraction regime at each requested dimension.
pub fn dim_sweep(
    dims: &[usize],
    registry: &FinderRegistry,
    repeats: usize,
    base_seed: u64,
    mut tweak: impl FnMut(&mut ExperimentConfig),
) -> Result<Vec<ExperimentResult>> {
    dims.iter()
        .map(|&d| {
            let mut config = ExperimentConfig::synthetic(&preset("dimsweep", Some(d), 0)?);
            config.name = format!("dimsweep-d{d}");
            tweak(&mut config);
            run(&config, registry, repeats, base_seed)
        })
        .collect()
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    format: &'static str,
    version: u32,
    #[serde(flatten)]
    result: &'a ExperimentResult,
}

impl ExperimentResult {
    pub fn to_json(&self) -> Result<String> {
        let doc = ResultDocument {
            format: RESULT_FORMAT,
            version: RESULT_VERSION,
            result: self,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn records_csv(&self) -> String {
        let mut out = String::from("experiment,seed,classes,points,lines,hslap,onenn,error\n");
        for r in &self.records {
            let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
            let err = r.error.as_deref().unwrap_or("").replace(['"', '\n'], "'");
            let _ = writeln!(
                out,
                "{},{seed},{},{},{},{},{},\"{err}\"",
                self.name, r.classes, r.points, r.lines, r.hslap, r.onenn
            );
        }
        out
    }
}

pub const SWEEP_HEADER: &str =
    "d,classes,repeats,failures,mean_lines,hslap_mean,hslap_std,onenn_mean,onenn_std,prototypes_ratio,accuracy_ratio";

/// One row per result, columns as in [`SWEEP_HEADER`].
pub fn sweep_table_csv(rows: &[ExperimentResult]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.dim,
            r.classes,
            r.repeats,
            r.failures,
            r.mean_lines,
            r.hslap_mean,
            r.hslap_std,
            r.onenn_mean,
            r.onenn_std,
            r.prototypes_ratio,
            r.accuracy_ratio
        );
    }
    out
}
