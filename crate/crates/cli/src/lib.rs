//! Command-line front end: dataset synthesis, distillation, evaluation,
//! experiments and decision-landscape export.

pub mod raster;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use protolines::classify::{accuracy, centroid_1nn, confusion_matrix, distill, DistillOptions, PrototypeModel};
use protolines::dataset::{centroids, load_csv, load_csv_with_classes, CsvSpec, Dataset};
use protolines::harness::{self, sweep_table_csv, ExperimentConfig, ExperimentResult};
use protolines::linefind::{FinderRegistry, ScoreMode};
use protolines::softlabel::{BoundaryMode, MarginPolicy};
use protolines::synth::{self, generate, BlobSpec};
use protolines::{Error, ErrorCategory, Result, ToleranceConfig};

#[derive(Debug, Parser)]
#[command(name = "protolines", version, about = "Distill labelled data into soft-label prototype lines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded Gaussian-blob dataset as CSV.
    Synth(SynthArgs),
    /// Fit a prototype-line model to a CSV dataset.
    Distill(DistillArgs),
    /// Score a model on a CSV dataset.
    Eval(EvalArgs),
    /// Run an experiment preset over many seeds.
    Experiment(ExperimentArgs),
    /// Render the decision landscape of a two-dimensional model as a PPM image.
    Landscape(LandscapeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Take class sizes and dimension from a synthetic preset.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    /// Feature dimension (also selects the dimension of the `dimsweep` preset).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = synth::DEFAULT_CENTER_BOX)]
    pub center_box: f64,
    #[arg(long, default_value_t = synth::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Label column; repeat to join several columns into one label.
    #[arg(long = "label", default_value = "label")]
    pub labels: Vec<String>,
    /// Comma-separated feature columns (default: every non-label column).
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
}

impl DataArgs {
    fn spec(&self) -> CsvSpec {
        CsvSpec::new(self.labels.clone()).with_features(self.features.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Midpoint,
    Pseudocode,
}

impl From<BoundaryArg> for BoundaryMode {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Midpoint => BoundaryMode::Midpoint,
            BoundaryArg::Pseudocode => BoundaryMode::Pseudocode,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Line-finding method: brute, rr or da.
    #[arg(long)]
    pub method: Option<String>,
    /// Number of lines (brute) or preliminary clusters (rr, da).
    #[arg(long)]
    pub lines: Option<usize>,
    #[arg(long, default_value_t = ToleranceConfig::DEFAULT_EPS_REG)]
    pub eps_reg: f64,
    #[arg(long, default_value_t = ToleranceConfig::DEFAULT_EPS_OPT)]
    pub eps_opt: f64,
    /// Score brute-force candidates over every point instead of the centroids.
    #[arg(long)]
    pub score_all_points: bool,
    /// Attach classes left off every line to their nearest line.
    #[arg(long)]
    pub fold_uncovered: bool,
    /// Where neighbouring classes are made to tie.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Midpoint)]
    pub boundary: BoundaryArg,
    /// Shrink the dominance margin when a line's program is infeasible.
    #[arg(long)]
    pub relax_margin: bool,
}

impl FitArgs {
    fn apply(&self, opts: &mut DistillOptions) -> Result<()> {
        let tol = ToleranceConfig::new(self.eps_reg, self.eps_opt)?;
        if let Some(m) = self.lines {
            if m == 0 {
                return Err(Error::Usage("--lines must be at least 1".into()));
            }
            opts.find.lines = m;
        }
        opts.find.eps_reg = tol.eps_reg;
        opts.find.eps_opt = tol.eps_opt;
        if self.score_all_points {
            opts.find.score_mode = ScoreMode::AllPoints;
        }
        opts.fold_uncovered |= self.fold_uncovered;
        opts.boundary = self.boundary.into();
        if self.relax_margin {
            opts.margin_policy = MarginPolicy::Relax;
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// regular1, regular2, regular5, small, imbalanced1, imbalanced2, giant,
    /// dimsweep, penguins or ecoli.
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    /// Seed of the first repeat; repeat k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dimensions for `dimsweep`.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5, 6, 7, 8, 9, 10])]
    pub dims: Vec<usize>,
    /// Directory holding penguins.csv and ecoli.csv.
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub center_box: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset drawn over the landscape; also widens the plotted region.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long = "label", default_value = "label")]
    pub labels: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, default_value_t = 800)]
    pub width: usize,
    #[arg(long, default_value_t = 800)]
    pub height: usize,
    /// Padding around the plotted region, as a fraction of its extent.
    #[arg(long, default_value_t = 0.05)]
    pub pad: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code(category: ErrorCategory) -> i32 {
    match category {
        ErrorCategory::Usage => 2,
        ErrorCategory::Data => 3,
        ErrorCategory::Infeasible => 4,
        ErrorCategory::LineFinding => 5,
    }
}

/// Parses `args` and runs the command, writing reports to `out` and the
/// one-line error to `err`. Returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("bad arguments");
            let _ = writeln!(err, "error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let category = e.category();
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error[{}]: {line}", category.as_str());
            exit_code(category)
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(&a, out),
        Command::Distill(a) => cmd_distill(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Landscape(a) => cmd_landscape(&a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::Usage(format!("cannot write report: {e}")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = match &a.preset {
        Some(name) => synth::preset(name, a.dim, a.seed)?.spec,
        None => BlobSpec::uniform(a.classes, a.per_class, a.dim.unwrap_or(2), a.seed),
    };
    spec.center_box = a.center_box;
    spec.sigma = a.sigma;
    let ds = generate(&spec)?;
    ds.save_csv(&a.out)?;
    emit(
        out,
        &format!(
            "wrote {} points, {} classes, dimension {} to {}\n",
            ds.len(),
            ds.class_count(),
            ds.dim(),
            a.out.display()
        ),
    )
}

fn load(data: &DataArgs) -> Result<Dataset> {
    let (ds, report) = load_csv(&data.data, &data.spec())?;
    if report.rows_dropped > 0 {
        log::info!("{}: dropped {} incomplete rows", data.data.display(), report.rows_dropped);
    }
    Ok(ds)
}

pub fn cmd_distill(a: &DistillArgs, out: &mut dyn Write) -> Result<()> {
    let ds = load(&a.data)?;
    let registry = FinderRegistry::default();
    let method = a.fit.method.as_deref().unwrap_or("brute");
    let finder = registry.get(method)?;
    let lines = a
        .fit
        .lines
        .ok_or_else(|| Error::Usage("--lines is required".into()))?;
    let mut opts = DistillOptions::new(lines);
    a.fit.apply(&mut opts)?;
    let model = distill(&ds, finder, &opts)?;
    model.save(&a.out)?;
    let mut report = format!(
        "method: {method}\nlines: {}\nprototypes: {}\n",
        model.lines.len(),
        model.prototype_count()
    );
    if !model.provenance.uncovered.is_empty() {
        report += &format!("uncovered classes: {:?}\n", model.provenance.uncovered);
    }
    for (i, line) in model.lines.iter().enumerate() {
        if line.margin < opts.find.eps_opt * opts.find.eps_opt {
            report += &format!("line {i}: dominance margin relaxed to {:e}\n", line.margin);
        }
    }
    emit(out, &report)
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let model = PrototypeModel::load(&a.model)?;
    let (ds, _) = load_csv_with_classes(&a.data.data, &a.data.spec(), &model.class_names)?;
    let pred = model.predict_dataset(&ds)?;
    let acc = accuracy(&pred, ds.labels())?;
    let mut report = format!("accuracy: {acc:.4}\n");
    // The baseline needs every class present to form its centroids.
    if let Ok((full, _)) = load_csv(&a.data.data, &a.data.spec()) {
        if full.class_names() == model.class_names.as_slice() {
            let base = accuracy(&centroid_1nn(&centroids(&full), full.points())?, full.labels())?;
            report += &format!("centroid-1nn accuracy: {base:.4}\n");
        }
    }
    report += "confusion (rows: true class, columns: predicted)\n";
    let m = confusion_matrix(&pred, ds.labels(), model.class_count());
    report += &format!("class,{}\n", model.class_names.join(","));
    for (name, row) in model.class_names.iter().zip(&m) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        report += &format!("{name},{}\n", cells.join(","));
    }
    emit(out, &report)
}

fn summary_line(r: &ExperimentResult) -> String {
    format!(
        "{}: classes {} lines {:.4} hslap {:.4}±{:.4} 1nn {:.4}±{:.4} prototypes-ratio {:.4} accuracy-ratio {:.4} failures {}/{}\n",
        r.name,
        r.classes,
        r.mean_lines,
        r.hslap_mean,
        r.hslap_std,
        r.onenn_mean,
        r.onenn_std,
        r.prototypes_ratio,
        r.accuracy_ratio,
        r.failures,
        r.repeats
    )
}

fn save_result(dir: &Path, r: &ExperimentResult) -> Result<()> {
    write_file(&dir.join(format!("{}.json", r.name)), (r.to_json()? + "\n").as_bytes())?;
    write_file(&dir.join(format!("{}.csv", r.name)), r.records_csv().as_bytes())
}

pub fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(&a.out).map_err(|e| Error::Data(format!("{}: {e}", a.out.display())))?;
    let registry = FinderRegistry::default();
    let mut failure: Option<Error> = None;
    let mut tweak = |config: &mut ExperimentConfig| {
        if let Some(m) = &a.fit.method {
            config.method = m.clone();
        }
        if let harness::DataSource::Synthetic(spec) = &mut config.source {
            if let Some(b) = a.center_box {
                spec.center_box = b;
            }
            if let Some(s) = a.sigma {
                spec.sigma = s;
            }
        }
        if let Err(e) = a.fit.apply(&mut config.distill) {
            failure.get_or_insert(e);
        }
    };
    if a.preset.eq_ignore_ascii_case("dimsweep") {
        let rows = harness::dim_sweep(&a.dims, &registry, a.repeats, a.seed, &mut tweak)?;
        if let Some(e) = failure {
            return Err(e);
        }
        let mut report = String::new();
        for r in &rows {
            save_result(&a.out, r)?;
            report += &summary_line(r);
        }
        write_file(&a.out.join("dimsweep.csv"), sweep_table_csv(&rows).as_bytes())?;
        return emit(out, &report);
    }
    let mut config = ExperimentConfig::named(&a.preset, None, &a.data_dir)?;
    tweak(&mut config);
    if let Some(e) = failure {
        return Err(e);
    }
    let r = harness::run(&config, &registry, a.repeats, a.seed)?;
    save_result(&a.out, &r)?;
    emit(out, &summary_line(&r))
}

pub fn cmd_landscape(a: &LandscapeArgs, out: &mut dyn Write) -> Result<()> {
    let model = PrototypeModel::load(&a.model)?;
    let data = match &a.data {
        Some(path) => {
            let spec = CsvSpec::new(a.labels.clone()).with_features(a.features.clone());
            Some(load_csv_with_classes(path, &spec, &model.class_names)?.0)
        }
        None => None,
    };
    let bounds = raster::Bounds::covering(&model, data.as_ref(), a.pad);
    let img = raster::render(&model, data.as_ref(), a.width, a.height, bounds)?;
    let mut bytes = Vec::new();
    img.write_ppm(&mut bytes).expect("writing to memory");
    write_file(&a.out, &bytes)?;
    emit(out, &format!("wrote {}x{} landscape to {}\n", a.width, a.height, a.out.display()))
}
