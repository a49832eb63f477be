//! Command line front end. Results go to stdout (JSON or CSV), diagnostics
//! to stderr. Exit status: 0 success, 2 usage, 3 bad input data,
//! 4 computation failure, 5 file I/O, 6 session store or server.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use scalecal_core::calibration::{calibrate_average, CalibrationError, WeightMethod};
use scalecal_core::dataset::{
    clean, cr_histogram, distance_category_stats, ingest_path, ratio_histogram, write_records,
    AnalysisError, DataFormat, IngestError, RemovalReason, RespondentRecord,
};
use scalecal_core::ri::{simulate_ri, RiError, DEFAULT_SAMPLES, LONG_RUN_SAMPLES};
use scalecal_core::scales::{
    catalog_values, enumerate_grid, full_catalog, write_catalog_csv, CatalogParams,
    CatalogScaleName, GridSpec, ScaleError, ScaleParams, VerbalCategory,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::service::{Service, ServiceError};

#[derive(Debug, Parser)]
#[command(
    name = "scalecal",
    version,
    about = "Calibrate verbal pairwise-comparison scales against direct scores"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the (s, m, l) scale that best matches respondents' direct scores.
    Calibrate(CalibrateArgs),
    /// Estimate the Random Index of a scale by Monte Carlo simulation.
    SimulateRi(SimulateRiArgs),
    /// Drop respondents that do not use the whole scale or gave a zero score.
    Clean(CleanArgs),
    /// Descriptive analyses of a response file.
    Analyze {
        #[command(subcommand)]
        analysis: Analysis,
    },
    /// Run the questionnaire HTTP service.
    Serve(ServeArgs),
    /// Export completed sessions from a session log.
    Export(ExportArgs),
    /// Print value lists of the published scales.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// csv or jsonl; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<DataFormat>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "em")]
    pub method: WeightMethod,
    /// `default` or `s_max,m_max,l_max,step`.
    #[arg(long, default_value = "default")]
    pub grid: String,
    /// Apply the cleaning rules before calibrating.
    #[arg(long)]
    pub clean: bool,
    /// Write each respondent's own optimum as CSV.
    #[arg(long)]
    pub per_respondent: Option<PathBuf>,
    /// Also write the summary JSON to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateRiArgs {
    #[arg(long)]
    pub n: usize,
    /// Scale values, comma separated; reciprocals and 1 are added.
    #[arg(long, value_delimiter = ',', required = true)]
    pub scale: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES, conflicts_with = "long_run")]
    pub samples: u64,
    /// Use 10^7 samples instead of --samples.
    #[arg(long)]
    pub long_run: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Kept records; format follows the extension.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// Histogram of score ratios for one verbal category (CSV center,count).
    Ratios {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        category: VerbalCategory,
        #[arg(long, default_value_t = 0.25)]
        bin_width: f64,
        #[arg(long, default_value_t = 10.0)]
        cap: f64,
    },
    /// Histogram of consistency ratios (CSV lower,count).
    CrHist {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "1.5,1.7,2")]
        scale: ScaleParams,
        #[arg(long, default_value_t = 0.09224)]
        ri: f64,
        #[arg(long, default_value_t = 0.01)]
        bin_width: f64,
    },
    /// Consistency ratio summary per repeat-question step distance.
    RepeatStats {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "1.5,1.7,2")]
        scale: ScaleParams,
        #[arg(long, default_value_t = 0.09224)]
        ri: f64,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value = "sessions.ndjson")]
    pub store_path: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Require `Authorization: Bearer <token>` on /export.
    #[arg(long)]
    pub admin_token: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub store_path: PathBuf,
    /// csv, jsonl or bundle (records plus protocol metadata as JSON).
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// One scale; all scales with their usual parameters when omitted.
    #[arg(long)]
    pub name: Option<CatalogScaleName>,
    #[arg(long, requires = "name")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "name")]
    pub beta: Option<f64>,
    /// Number of values (Koczkodaj scale).
    #[arg(long, requires = "name")]
    pub points: Option<u32>,
    /// json or csv.
    #[arg(long, default_value = "json")]
    pub format: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Ri(#[from] RiError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Service(#[from] ServiceError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Ingest(IngestError::Io(_)) => 5,
            CliError::Ingest(_) | CliError::Analysis(_) => 3,
            CliError::Calibration(
                CalibrationError::Record { .. } | CalibrationError::EmptyCohort,
            ) => 3,
            CliError::Calibration(_) | CliError::Ri(_) | CliError::Scale(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Service(_) => 6,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Io {
        path: "<stdout>".into(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| stdout_err(e.into()))?;
    writeln!(out).map_err(stdout_err)
}

fn load(input: &InputArgs) -> Result<Vec<RespondentRecord>, CliError> {
    Ok(ingest_path(&input.input, input.format)?)
}

pub fn parse_grid(text: &str) -> Result<GridSpec, CliError> {
    if text == "default" {
        return Ok(GridSpec::default());
    }
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--grid {text:?}: {e}")))?;
    match parts[..] {
        [s_max, m_max, l_max, step] => Ok(GridSpec {
            step,
            s_max,
            m_max,
            l_max,
        }),
        _ => Err(CliError::Usage(format!(
            "--grid expects `default` or s_max,m_max,l_max,step, got {text:?}"
        ))),
    }
}

fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let spec = parse_grid(&args.grid)?;
    let grid = enumerate_grid(&spec)?;
    let mut records = load(&args.input)?;
    if args.clean {
        records = clean(records).kept;
    }
    let result = calibrate_average(&records, &grid, args.method, args.per_respondent.is_some())?;
    if let (Some(path), Some(rows)) = (&args.per_respondent, &result.per_respondent) {
        let mut out = create(path)?;
        let mut write = || -> io::Result<()> {
            writeln!(out, "id,s,m,l,distance")?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.id, r.best.s, r.best.m, r.best.l, r.distance
                )?;
            }
            out.flush()
        };
        write().map_err(io_err(path))?;
    }
    let summary = json!({
        "method": result.method,
        "best": result.best,
        "mean_distance": result.best_distance,
        "respondents": records.len(),
        "evaluated_count": result.evaluated_count,
        "grid": spec,
        "normalization": result.normalization,
        "aggregate": result.aggregate,
        "tie_break": result.tie_break,
    });
    if let Some(path) = &args.summary {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &summary).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e.into(),
        })?;
        writeln!(out)
            .and_then(|()| out.flush())
            .map_err(io_err(path))?;
    }
    print_json(&summary)
}

fn simulate(args: SimulateRiArgs) -> Result<(), CliError> {
    let samples = if args.long_run {
        LONG_RUN_SAMPLES
    } else {
        args.samples
    };
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let estimate = simulate_ri(args.n, &args.scale, samples, args.seed, workers)?;
    print_json(&estimate)
}

fn run_clean(args: CleanArgs) -> Result<(), CliError> {
    let records = load(&args.input)?;
    let total = records.len();
    let outcome = clean(records);
    let format = DataFormat::from_path(&args.output);
    let mut out = create(&args.output)?;
    write_records(&outcome.kept, format, &mut out)?;
    out.flush().map_err(io_err(&args.output))?;
    print_json(&json!({
        "input": total,
        "kept": outcome.kept.len(),
        "removed": outcome.removed,
        "removed_scale_not_covered": outcome.removed_count(RemovalReason::ScaleNotCovered),
        "removed_zero_score": outcome.removed_count(RemovalReason::ZeroScore),
        "rules_applied": outcome.rules_applied,
        "equal_category_exempt": outcome.equal_category_exempt,
    }))
}

fn analyze(analysis: Analysis) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    match analysis {
        Analysis::Ratios {
            input,
            category,
            bin_width,
            cap,
        } => {
            let bins = ratio_histogram(&load(&input)?, category, bin_width, cap)?;
            writeln!(out, "center,count").map_err(stdout_err)?;
            for b in bins {
                writeln!(out, "{},{}", b.center, b.count).map_err(stdout_err)?;
            }
        }
        Analysis::CrHist {
            input,
            scale,
            ri,
            bin_width,
        } => {
            let bins = cr_histogram(&load(&input)?, &scale, ri, bin_width)?;
            writeln!(out, "lower,count").map_err(stdout_err)?;
            for b in bins {
                writeln!(out, "{},{}", b.lower, b.count).map_err(stdout_err)?;
            }
        }
        Analysis::RepeatStats { input, scale, ri } => {
            let stats = distance_category_stats(&load(&input)?, &scale, ri)?;
            writeln!(out, "distance,count,min,q1,median,q3,max").map_err(stdout_err)?;
            for (d, s) in stats {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    d.value(),
                    s.count,
                    s.min,
                    s.q1,
                    s.median,
                    s.q3,
                    s.max
                )
                .map_err(stdout_err)?;
            }
        }
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let service = Arc::new(Service::open(&args.store_path, args.seed)?);
    eprintln!(
        "serving {} sessions from {} on {}:{}",
        service.session_count(),
        args.store_path.display(),
        args.host,
        args.port
    );
    let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: "<runtime>".into(),
        source,
    })?;
    let addr = format!("{}:{}", args.host, args.port);
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|source| CliError::Io {
                path: addr.clone(),
                source,
            })?;
        axum::serve(listener, crate::http::router(service, args.admin_token))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|source| CliError::Io { path: addr, source })
    })
}

fn export(args: ExportArgs) -> Result<(), CliError> {
    if !args.store_path.exists() {
        return Err(CliError::Io {
            path: args.store_path.display().to_string(),
            source: io::Error::new(io::ErrorKind::NotFound, "no such session log"),
        });
    }
    let bundle = Service::open(&args.store_path, 0)?.export()?;
    let mut out: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let target = args
        .output
        .as_deref()
        .map_or("<stdout>".to_string(), |p| p.display().to_string());
    let wrap = |source: io::Error| CliError::Io {
        path: target.clone(),
        source,
    };
    match args.format.as_str() {
        "bundle" => {
            serde_json::to_writer_pretty(&mut out, &bundle).map_err(|e| wrap(e.into()))?;
            writeln!(out).map_err(wrap)?;
        }
        other => {
            let format: DataFormat = other.parse().map_err(CliError::Usage)?;
            write_records(&bundle.records, format, &mut out)?;
        }
    }
    out.flush().map_err(wrap)
}

fn catalog(args: CatalogArgs) -> Result<(), CliError> {
    let scales = match args.name {
        Some(name) => vec![catalog_values(
            name,
            CatalogParams {
                alpha: args.alpha,
                beta: args.beta,
                n: args.points,
            },
        )?],
        None => full_catalog(),
    };
    match args.format.as_str() {
        "json" if scales.len() == 1 => print_json(&scales[0]),
        "json" => print_json(&scales),
        "csv" => {
            let out = io::stdout().lock();
            write_catalog_csv(&scales, out).map_err(|e| stdout_err(io::Error::other(e)))
        }
        other => Err(CliError::Usage(format!(
            "--format expects json or csv, got {other:?}"
        ))),
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Calibrate(a) => calibrate(a),
        Command::SimulateRi(a) => simulate(a),
        Command::Clean(a) => run_clean(a),
        Command::Analyze { analysis } => analyze(analysis),
        Command::Serve(a) => serve(a),
        Command::Export(a) => export(a),
        Command::Catalog(a) => catalog(a),
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
