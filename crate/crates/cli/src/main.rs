//! `geomoments`: moments of geometric measures over random subsets.
//!
//! Exit codes: 0 success, 1 data error, 2 usage or scope error.

mod bench;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geomoments::dataio::{self, Dataset, Generator, ResultFormat};
use geomoments::engine::{self, DEFAULT_EPSILON};
use geomoments::oracle::{self, DEFAULT_SAMPLES};
use geomoments::{par, BernoulliModel, Distribution, Engine, Error, MeasureKind, Method, MomentResult, Result};

#[derive(Parser)]
#[command(name = "geomoments", version, about = "Moments of geometric measures over random subsets of a point set")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic engines.
    Moments(MomentsArgs),
    /// Full enumeration of all subsets (n <= 20).
    Oracle(OracleArgs),
    /// Monte Carlo sampling baseline.
    Sample(SampleArgs),
    /// Writes a synthetic point file.
    Gen(GenArgs),
    /// Runs a timing and accuracy grid.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Bbox,
    Hull,
    Centroid,
    Mpd,
    Sed,
}

impl Measure {
    fn kind(self) -> MeasureKind {
        match self {
            Measure::Bbox => MeasureKind::BBoxVolume,
            Measure::Hull => MeasureKind::ConvexHullVolume,
            Measure::Centroid => MeasureKind::CentroidSqDist,
            Measure::Mpd => MeasureKind::Mpd,
            Measure::Sed => MeasureKind::SedDiameter,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Dist {
    Bernoulli,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ResultFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ResultFormat::Json,
            Format::Csv => ResultFormat::Csv,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Point file with header x1,...,xd and an optional prob column.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    measure: Measure,
    #[arg(long, value_enum)]
    dist: Dist,
    /// Subset size under the fixed-size model.
    #[arg(long)]
    s: Option<usize>,
    /// Same inclusion probability for every point, overriding the file.
    #[arg(long)]
    prob: Option<f64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    common: Common,
    /// Every tabulated subset size (fixed-size bbox, hull, centroid, mpd).
    #[arg(long)]
    all_s: bool,
    #[arg(long, value_enum, default_value = "exact")]
    method: MethodArg,
    /// Approximation parameter of the approximate engine.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Every subset size 0..=n.
    #[arg(long)]
    all_s: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Uniform,
    Clustered,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of clusters.
    #[arg(long, default_value_t = 5)]
    clusters: usize,
    /// Standard deviation of each cluster.
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    /// Adds a prob column with this value.
    #[arg(long)]
    prob: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

/// Space-joined arguments, quoting those that need it.
fn command_line() -> String {
    std::env::args()
        .enumerate()
        .map(|(i, a)| {
            let a = if i == 0 {
                Path::new(&a).file_name().map_or(a.clone(), |f| f.to_string_lossy().into_owned())
            } else {
                a
            };
            if a.is_empty() || a.chars().any(|c| c.is_whitespace() || "'\"$\\".contains(c)) {
                format!("'{}'", a.replace('\'', r"'\''"))
            } else {
                a
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn uniform_probs(n: usize, p: f64) -> Result<BernoulliModel> {
    BernoulliModel::uniform(n, p).map_err(|_| Error::InvalidArgument(format!("--prob {p} not in (0, 1)")))
}

fn load(common: &Common) -> Result<Dataset> {
    let mut data = dataio::read_csv(&common.input)?;
    if let Some(p) = common.prob {
        data.probs = Some(uniform_probs(data.len(), p)?);
    }
    Ok(data)
}

/// The model for a single-size run.
fn distribution(common: &Common, data: &Dataset) -> Result<Distribution> {
    match common.dist {
        Dist::Bernoulli => {
            if common.s.is_some() {
                return Err(Error::InvalidArgument("--s applies to --dist fixed only".into()));
            }
            data.probs.clone().map(Distribution::Bernoulli).ok_or_else(|| {
                Error::InvalidArgument("--dist bernoulli needs a prob column or --prob".into())
            })
        }
        Dist::Fixed => common
            .s
            .map(|s| Distribution::FixedSize { s })
            .ok_or_else(|| Error::InvalidArgument("--dist fixed needs --s N or --all-s".into())),
    }
}

fn emit(mut result: MomentResult, common: &Common) -> Result<()> {
    result.command = Some(command_line());
    match &common.out {
        Some(path) => dataio::write_result(&result, common.format.into(), path),
        None => dataio::write_result_to(&result, common.format.into(), std::io::stdout().lock()),
    }
}

fn scope_all_s(common: &Common) -> Result<()> {
    if common.dist != Dist::Fixed {
        return Err(Error::InvalidArgument("--all-s applies to --dist fixed only".into()));
    }
    if common.s.is_some() {
        return Err(Error::InvalidArgument("--s and --all-s are exclusive".into()));
    }
    Ok(())
}

fn run_moments(args: &MomentsArgs) -> Result<()> {
    let common = &args.common;
    let engine = match (args.method, args.epsilon) {
        (MethodArg::Exact, Some(_)) => {
            return Err(Error::InvalidArgument("--epsilon applies to --method approx only".into()))
        }
        (MethodArg::Exact, None) => Engine::Exact,
        (MethodArg::Approx, eps) => Engine::Approx { epsilon: eps.unwrap_or(DEFAULT_EPSILON) },
    };
    let data = load(common)?;
    let result = if args.all_s {
        scope_all_s(common)?;
        common.measure.kind().check_scope(&Distribution::FixedSize { s: data.len() }, data.dim(), false)?;
        engine::size_table(&data.points, common.measure.kind(), engine)?
    } else {
        let dist = distribution(common, &data)?;
        engine::moments(&data.points, &dist, common.measure.kind(), engine)?
    };
    emit(result, common)
}

fn run_oracle(args: &OracleArgs) -> Result<()> {
    let common = &args.common;
    let data = load(common)?;
    let kind = common.measure.kind();
    let result = if args.all_s {
        scope_all_s(common)?;
        let n = data.len();
        if n > oracle::ORACLE_CAP {
            return Err(Error::TooLarge { n, cap: oracle::ORACLE_CAP });
        }
        kind.check_scope(&Distribution::FixedSize { s: n }, data.dim(), false)?;
        let rows = oracle::oracle_size_table(&data.points, kind)?;
        MomentResult::from_table(kind.name(), Method::Oracle, n, data.dim(), rows)
    } else {
        oracle::oracle_moments(&data.points, &distribution(common, &data)?, kind)?
    };
    emit(result, common)
}

fn run_sample(args: &SampleArgs) -> Result<()> {
    let common = &args.common;
    let data = load(common)?;
    let dist = distribution(common, &data)?;
    let result = oracle::monte_carlo_moments(&data.points, &dist, common.measure.kind(), args.samples, args.seed)?;
    emit(result, common)
}

fn run_gen(args: &GenArgs) -> Result<()> {
    let kind = match args.kind {
        GenKind::Uniform => Generator::Uniform,
        GenKind::Clustered => Generator::Clustered { k: args.clusters, spread: args.spread },
    };
    let mut data = dataio::generate(kind, args.n, args.d, args.seed)?;
    if let Some(p) = args.prob {
        data.probs = Some(uniform_probs(args.n, p)?);
    }
    dataio::write_csv(&data, &args.out)
}

fn threads_from_env() -> std::result::Result<usize, String> {
    match std::env::var("GEOMOMENTS_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| format!("GEOMOMENTS_THREADS must be a count, got {v:?}")),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads_from_env() {
        Ok(t) => par::configure_threads(t),
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Moments(a) => run_moments(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Sample(a) => run_sample(a),
        Command::Gen(a) => run_gen(a),
        Command::Bench(a) => bench::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
