//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 internal invariant
//! failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::classify::{build_cohort, mai_effect_experiment, ExperimentConfig, ForestParams};
use crate::cleanse::cleanse;
use crate::error::Error;
use crate::ingest::{parse_refined, parse_transcripts, write_refined, write_transcripts};
use crate::mai::ClassTables;
use crate::model::{Department, RefinedRecord};
use crate::refine::{refine_all, summarize_refinement, RefineCoeffs};
use crate::report::{
    render_experiment, render_fit, render_refinement, render_stats_summary, render_ttests, stats_summary, FileDigest, FitReport,
    Format, RunManifest,
};
use crate::stats::{compare_models, fit_refine_coeffs, table_one, table_one_ttests, ReferenceRow};
use crate::synth::{generate, SynthConfig};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "markrefine", version, about = "Transcript cleansing, assessment-index refinement and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic transcripts
    Synth(SynthArgs),
    /// Infer missing assessment methods and drop markless records
    Clean(CleanArgs),
    /// Assign assessment indices and refined marks
    Refine(RefineArgs),
    /// Fit linear and quadratic models of mark against assessment index
    Fit(ReportArgs),
    /// Statistical reports
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Year-2 prediction with and without the assessment index
    Predict(PredictArgs),
    /// clean, refine and summarize in one run
    Pipeline(PipelineArgs),
    /// Per-method refinement summary, optionally for one student
    Report(StudentReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; with several departments, `_<DEPT>` is added before the extension
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CleanArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    dept: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct RefineOpts {
    #[arg(long, default_value_t = RefineCoeffs::DEFAULT.beta1, allow_hyphen_values = true)]
    beta1: f64,
    #[arg(long, default_value_t = RefineCoeffs::DEFAULT.beta2, allow_hyphen_values = true)]
    beta2: f64,
    /// Class table file overriding the built-in tables
    #[arg(long)]
    classes: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    dept: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: RefineOpts,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Refined table
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    dept: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Paired t-tests between assessment methods over department means
    Ttest(TtestArgs),
    /// Group means, refinement, correlations and model comparison
    Summary(ReportArgs),
}

#[derive(Debug, Args)]
struct TtestArgs {
    /// Use the built-in department means
    #[arg(long, conflicts_with = "input")]
    table1: bool,
    /// Means file with columns department, exam, coursework, mixed
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Refined table spanning two years of study
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    dept: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// 0 means unlimited
    #[arg(long, default_value_t = 0)]
    max_depth: usize,
    #[arg(long, default_value_t = 0.7)]
    split: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    dept: String,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "json")]
    format: String,
    #[command(flatten)]
    opts: RefineOpts,
}

#[derive(Debug, Args)]
struct StudentReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    dept: String,
    #[arg(long)]
    regno: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Debug)]
enum Kind {
    Usage,
    Data,
    Internal,
}

#[derive(Debug)]
struct Failure {
    stage: &'static str,
    kind: Kind,
    message: String,
}

impl Failure {
    fn code(&self) -> i32 {
        match self.kind {
            Kind::Usage => EXIT_USAGE,
            Kind::Data => EXIT_DATA,
            Kind::Internal => EXIT_INTERNAL,
        }
    }
}

trait Stage<T> {
    fn at(self, stage: &'static str) -> Result<T, Failure>;
    fn usage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for Result<T, Error> {
    fn at(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { stage, kind: Kind::Data, message: e.to_string() })
    }

    fn usage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { stage, kind: Kind::Usage, message: e.to_string() })
    }
}

fn internal(stage: &'static str, message: impl Into<String>) -> Failure {
    Failure { stage, kind: Kind::Internal, message: message.into() }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn open(path: &Path, stage: &'static str) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure {
        stage,
        kind: Kind::Data,
        message: format!("{}: {e}", path.display()),
    })
}

fn create(path: &Path, stage: &'static str) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        stage,
        kind: Kind::Data,
        message: format!("{}: {e}", path.display()),
    })
}

fn digest(path: &Path, stage: &'static str) -> Result<FileDigest, Failure> {
    FileDigest::of(path).at(stage)
}

fn emit(text: &str, out: Option<&Path>, stage: &'static str) -> Result<(), Failure> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| Failure { stage, kind: Kind::Data, message: format!("{}: {e}", p.display()) })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tables_for(opts: Option<&Path>, stage: &'static str) -> Result<(ClassTables, String), Failure> {
    let mut tables = ClassTables::builtin();
    match opts {
        None => Ok((tables, "builtin".to_string())),
        Some(p) => {
            tables.load_overrides(open(p, stage)?).at(stage)?;
            Ok((tables, p.display().to_string()))
        }
    }
}

fn refine_coeffs(opts: &RefineOpts) -> Result<RefineCoeffs, Failure> {
    if !opts.beta1.is_finite() || !opts.beta2.is_finite() {
        return Err(Failure { stage: "refine", kind: Kind::Usage, message: "coefficients must be finite".into() });
    }
    Ok(RefineCoeffs { beta1: opts.beta1, beta2: opts.beta2 })
}

fn finish(mut manifest: RunManifest, out: &Path) -> Result<(), Failure> {
    manifest.finished_unix = now();
    manifest.write(&manifest_path(out)).at("manifest")
}

fn cmd_synth(a: SynthArgs) -> Result<(), Failure> {
    let mut manifest =
        RunManifest { subcommand: "synth".into(), started_unix: now(), class_tables: "builtin".into(), ..Default::default() };
    let mut config = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure {
                stage: "synth",
                kind: Kind::Data,
                message: format!("{}: {e}", p.display()),
            })?;
            manifest.inputs.push(digest(p, "synth")?);
            SynthConfig::from_toml(&text).at("synth")?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    manifest.seed = Some(config.seed);
    let tables = ClassTables::builtin();
    let (records, report) = generate(&config, &tables).at("synth")?;
    let several = config.departments.len() > 1;
    for dept in config.departments.keys() {
        let path = if several { suffixed(&a.out, *dept) } else { a.out.clone() };
        let part: Vec<_> = records.iter().filter(|r| r.department == *dept).cloned().collect();
        let mut w = create(&path, "synth")?;
        write_transcripts(&part, &mut w).at("synth")?;
        w.flush().map_err(|e| internal("synth", e.to_string()))?;
        drop(w);
        manifest.outputs.push(digest(&path, "synth")?);
    }
    manifest.count("synth", &report);
    finish(manifest, &a.out)
}

fn suffixed(path: &Path, dept: Department) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{dept}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{dept}"),
    };
    path.with_file_name(name)
}

fn department(name: &str) -> Result<Department, Failure> {
    name.parse().usage("arguments")
}

fn read_transcripts(
    path: &Path,
    dept: Department,
    stage: &'static str,
    manifest: &mut RunManifest,
) -> Result<Vec<crate::model::TranscriptRecord>, Failure> {
    let (records, report) = parse_transcripts(open(path, stage)?, dept).at(stage)?;
    manifest.inputs.push(digest(path, stage)?);
    manifest.count("ingest", &report);
    Ok(records)
}

fn read_refined(path: &Path, dept: Department, stage: &'static str) -> Result<Vec<RefinedRecord>, Failure> {
    let (records, _) = parse_refined(open(path, stage)?, dept).at(stage)?;
    Ok(records)
}

fn write_csv_output<F>(path: &Path, stage: &'static str, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> crate::Result<()>,
{
    let mut w = create(path, stage)?;
    write(&mut w).at(stage)?;
    w.flush().map_err(|e| Failure { stage, kind: Kind::Data, message: e.to_string() })
}

fn cmd_clean(a: CleanArgs) -> Result<(), Failure> {
    let dept = department(&a.dept)?;
    let mut manifest =
        RunManifest { subcommand: "clean".into(), started_unix: now(), class_tables: "builtin".into(), ..Default::default() };
    let records = read_transcripts(&a.input, dept, "clean", &mut manifest)?;
    let (cleaned, report) = cleanse(records);
    write_csv_output(&a.out, "clean", |w| write_transcripts(&cleaned, w))?;
    manifest.count("clean", &report);
    manifest.outputs.push(digest(&a.out, "clean")?);
    finish(manifest, &a.out)
}

fn check_refined(records: &[RefinedRecord]) -> Result<(), Failure> {
    for r in records {
        if r.mai == Some(0) && r.rmm != r.record.module_mark {
            return Err(internal("refine", format!("index 0 changed the mark of {}", r.record.regno)));
        }
        if matches!(r.rmm, Some(v) if !(0.0..=100.0).contains(&v)) {
            return Err(internal("refine", "refined mark outside [0, 100]"));
        }
    }
    Ok(())
}

fn cmd_refine(a: RefineArgs) -> Result<(), Failure> {
    let dept = department(&a.dept)?;
    let coeffs = refine_coeffs(&a.opts)?;
    let (tables, source) = tables_for(a.opts.classes.as_deref(), "refine")?;
    let mut manifest = RunManifest {
        subcommand: "refine".into(),
        started_unix: now(),
        class_tables: source,
        coefficients: Some(coeffs),
        ..Default::default()
    };
    let records = read_transcripts(&a.input, dept, "refine", &mut manifest)?;
    let refined = refine_all(&records, &tables, coeffs);
    check_refined(&refined)?;
    write_csv_output(&a.out, "refine", |w| write_refined(&refined, w))?;
    manifest.count("refine", refined.iter().filter(|r| r.flag.is_none()).count());
    manifest.outputs.push(digest(&a.out, "refine")?);
    finish(manifest, &a.out)
}

fn format_arg(s: &str) -> Result<Format, Failure> {
    s.parse().usage("arguments")
}

fn cmd_fit(a: ReportArgs) -> Result<(), Failure> {
    let format = format_arg(&a.format)?;
    let dept = department(&a.dept)?;
    let records = read_refined(&a.input, dept, "fit")?;
    let (_, coefficients) = fit_refine_coeffs(&records).at("fit")?;
    let (x, y): (Vec<f64>, Vec<f64>) = records.iter().filter_map(|r| Some((f64::from(r.mai?), r.record.module_mark?))).unzip();
    let comparison = compare_models(&x, &y).at("fit")?;
    let text = render_fit(&FitReport { comparison, coefficients }, format);
    emit(&text, a.out.as_deref(), "fit")
}

fn read_means(path: &Path) -> Result<Vec<ReferenceRow>, Failure> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path, "stats")?);
    let headers = reader.headers().map_err(Error::from).at("stats")?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or(Error::MissingColumn(name));
    let (d, e, c, m) =
        (col("department").at("stats")?, col("exam").at("stats")?, col("coursework").at("stats")?, col("mixed").at("stats")?);
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(Error::from).at("stats")?;
        let num = |i: usize| {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("non-numeric cell `{}`", rec.get(i).unwrap_or(""))))
        };
        rows.push(ReferenceRow {
            department: rec.get(d).unwrap_or("").parse().at("stats")?,
            students: 0,
            exam: num(e).at("stats")?,
            coursework: num(c).at("stats")?,
            mixed: num(m).at("stats")?,
        });
    }
    Ok(rows)
}

fn cmd_stats(c: StatsCommand) -> Result<(), Failure> {
    match c {
        StatsCommand::Ttest(a) => {
            let format = format_arg(&a.format)?;
            let rows = match (&a.input, a.table1) {
                (Some(p), false) => read_means(p)?,
                (None, true) => table_one().to_vec(),
                _ => return Err(Failure { stage: "arguments", kind: Kind::Usage, message: "give --table1 or --in PATH".into() }),
            };
            let tests = table_one_ttests(&rows).at("stats")?;
            emit(&render_ttests(&tests, format), a.out.as_deref(), "stats")
        }
        StatsCommand::Summary(a) => {
            let format = format_arg(&a.format)?;
            let dept = department(&a.dept)?;
            let records = read_refined(&a.input, dept, "stats")?;
            emit(&render_stats_summary(&stats_summary(&records), format), a.out.as_deref(), "stats")
        }
    }
}

fn cmd_predict(a: PredictArgs) -> Result<(), Failure> {
    let format = format_arg(&a.format)?;
    let dept = department(&a.dept)?;
    let records = read_refined(&a.input, dept, "predict")?;
    let cohort = build_cohort(&records);
    let config = ExperimentConfig {
        split: a.split,
        seed: a.seed,
        forest: ForestParams {
            trees: a.trees,
            max_depth: (a.max_depth > 0).then_some(a.max_depth),
            seed: a.seed,
            ..ForestParams::default()
        },
        ..ExperimentConfig::default()
    };
    let report = mai_effect_experiment(&cohort, &config).at("predict")?;
    emit(&render_experiment(&report, format), a.out.as_deref(), "predict")
}

fn cmd_report(a: StudentReportArgs) -> Result<(), Failure> {
    let format = format_arg(&a.format)?;
    let dept = department(&a.dept)?;
    let mut records = read_refined(&a.input, dept, "report")?;
    if let Some(regno) = &a.regno {
        records.retain(|r| &r.record.regno == regno);
    }
    let summary = summarize_refinement(&records).at("report")?;
    emit(&render_refinement(&summary, format), a.out.as_deref(), "report")
}

/// File names written by `pipeline` inside its output directory.
pub fn pipeline_outputs(format: Format) -> [String; 3] {
    ["cleaned.csv".into(), "refined.csv".into(), format!("summary.{}", format.extension())]
}

fn cmd_pipeline(a: PipelineArgs) -> Result<(), Failure> {
    let format = format_arg(&a.format)?;
    let dept = department(&a.dept)?;
    let coeffs = refine_coeffs(&a.opts)?;
    let (tables, source) = tables_for(a.opts.classes.as_deref(), "refine")?;
    std::fs::create_dir_all(&a.out).map_err(|e| Failure {
        stage: "pipeline",
        kind: Kind::Data,
        message: format!("{}: {e}", a.out.display()),
    })?;
    let [cleaned_name, refined_name, summary_name] = pipeline_outputs(format);
    let mut manifest = RunManifest {
        subcommand: "pipeline".into(),
        started_unix: now(),
        class_tables: source,
        coefficients: Some(coeffs),
        ..Default::default()
    };

    // each stage re-reads the previous stage's file, so the outputs match
    // separate clean / refine / stats invocations exactly
    let records = read_transcripts(&a.input, dept, "clean", &mut manifest)?;
    let (cleaned, report) = cleanse(records);
    let cleaned_path = a.out.join(cleaned_name);
    write_csv_output(&cleaned_path, "clean", |w| write_transcripts(&cleaned, w))?;
    manifest.count("clean", &report);
    manifest.outputs.push(digest(&cleaned_path, "clean")?);

    let (records, _) = parse_transcripts(open(&cleaned_path, "refine")?, dept).at("refine")?;
    let refined = refine_all(&records, &tables, coeffs);
    check_refined(&refined)?;
    let refined_path = a.out.join(refined_name);
    write_csv_output(&refined_path, "refine", |w| write_refined(&refined, w))?;
    manifest.count("refine", refined.iter().filter(|r| r.flag.is_none()).count());
    manifest.outputs.push(digest(&refined_path, "refine")?);

    let refined = read_refined(&refined_path, dept, "stats")?;
    let summary_path = a.out.join(summary_name);
    emit(&render_stats_summary(&stats_summary(&refined), format), Some(&summary_path), "stats")?;
    manifest.outputs.push(digest(&summary_path, "stats")?);

    manifest.finished_unix = now();
    manifest.write(&a.out.join("manifest.json")).at("manifest")
}

/// Parses `argv` (including the program name), runs one subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Clean(a) => cmd_clean(a),
        Command::Refine(a) => cmd_refine(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Stats(c) => cmd_stats(c),
        Command::Predict(a) => cmd_predict(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("markrefine: {} failed: {}", f.stage, f.message);
            f.code()
        }
    }
}
