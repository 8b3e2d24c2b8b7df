//! Scaled-down experiment grids: exact, approximate and sampled moments
//! with engine-only wall times (median of three runs).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use geomoments::dataio::{self, Dataset, Generator};
use geomoments::engine::{self, DEFAULT_EPSILON};
use geomoments::oracle::{self, DEFAULT_SAMPLES};
use geomoments::{BernoulliModel, Distribution, Engine, Error, MeasureKind, MomentResult, Result};

#[derive(Clone, Copy, PartialEq, ValueEnum)]
pub enum Suite {
    MpdVsN,
    MpdVsS,
    MpdVsEps,
    MpdVsD,
    BboxVsN,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Directory for datasets, per-run rows and the summary.
    #[arg(long)]
    out: PathBuf,
    /// Smaller grid for smoke testing.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

const REPEATS: usize = 3;
const BBOX_PROB: f64 = 0.5;

struct Row {
    n: usize,
    d: usize,
    s: Option<usize>,
    epsilon: Option<f64>,
    method: &'static str,
    time_ms: f64,
    mean: f64,
    variance: Option<f64>,
    rel_err_mean: Option<f64>,
    rel_err_var: Option<f64>,
    command: String,
}

/// Runs `f` three times and keeps the result with the median engine time.
fn timed(f: impl Fn() -> Result<MomentResult>) -> Result<MomentResult> {
    let mut runs = (0..REPEATS).map(|_| f()).collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| a.elapsed_ms.total_cmp(&b.elapsed_ms));
    Ok(runs.swap_remove(REPEATS / 2))
}

fn rel_err(a: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        a.abs()
    } else {
        (a - truth).abs() / truth.abs()
    }
}

struct Grid<'a> {
    dir: &'a Path,
    seed: u64,
    rows: Vec<Row>,
}

impl Grid<'_> {
    fn dataset(&self, n: usize, d: usize, prob: Option<f64>) -> Result<(Dataset, PathBuf)> {
        let mut data = dataio::generate(Generator::Uniform, n, d, self.seed)?;
        let path = self.dir.join(format!("uniform_n{n}_d{d}_seed{}.csv", self.seed));
        if let Some(p) = prob {
            data.probs = Some(BernoulliModel::uniform(n, p)?);
        }
        dataio::write_csv(&data, &path)?;
        Ok((data, path))
    }

    /// Exact, approximate and sampled MPD at subset size `s`.
    fn mpd_cell(&mut self, n: usize, d: usize, s: usize, epsilons: &[f64], sample: bool) -> Result<()> {
        let (data, path) = self.dataset(n, d, None)?;
        let base = format!("geomoments moments --input {} --measure mpd --dist fixed --s {s}", path.display());
        let exact = timed(|| engine::size_table(&data.points, MeasureKind::Mpd, Engine::Exact))?;
        let truth = *exact.row(s).ok_or_else(|| Error::InvalidArgument(format!("no row for s = {s}")))?;
        let true_var = truth.variance.unwrap_or(0.0);
        self.rows.push(Row {
            n,
            d,
            s: Some(s),
            epsilon: None,
            method: "exact",
            time_ms: exact.elapsed_ms,
            mean: truth.mean,
            variance: truth.variance,
            rel_err_mean: Some(0.0),
            rel_err_var: Some(0.0),
            command: base.clone(),
        });
        for &epsilon in epsilons {
            let approx = timed(|| engine::size_table(&data.points, MeasureKind::Mpd, Engine::Approx { epsilon }))?;
            let row = *approx.row(s).expect("approximate table covers the exact sizes");
            self.rows.push(Row {
                n,
                d,
                s: Some(s),
                epsilon: Some(epsilon),
                method: "approx",
                time_ms: approx.elapsed_ms,
                mean: row.mean,
                variance: row.variance,
                rel_err_mean: Some(rel_err(row.mean, truth.mean)),
                rel_err_var: row.variance.map(|v| rel_err(v, true_var)),
                command: format!("{base} --method approx --epsilon {epsilon}"),
            });
        }
        if sample {
            let dist = Distribution::FixedSize { s };
            let mc = timed(|| oracle::monte_carlo_moments(&data.points, &dist, MeasureKind::Mpd, DEFAULT_SAMPLES, self.seed))?;
            self.push_sample(n, d, Some(s), &mc, truth.mean, Some(true_var), &path, "mpd --dist fixed", Some(s));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn push_sample(
        &mut self,
        n: usize,
        d: usize,
        s: Option<usize>,
        mc: &MomentResult,
        mean: f64,
        var: Option<f64>,
        path: &Path,
        flags: &str,
        s_flag: Option<usize>,
    ) {
        let s_arg = s_flag.map(|s| format!(" --s {s}")).unwrap_or_default();
        self.rows.push(Row {
            n,
            d,
            s,
            epsilon: None,
            method: "sample",
            time_ms: mc.elapsed_ms,
            mean: mc.mean,
            variance: mc.variance,
            rel_err_mean: Some(rel_err(mc.mean, mean)),
            rel_err_var: var.zip(mc.variance).map(|(t, v)| rel_err(v, t)),
            command: format!(
                "geomoments sample --input {} --measure {flags}{s_arg} --samples {DEFAULT_SAMPLES} --seed {}",
                path.display(),
                self.seed
            ),
        });
    }

    fn bbox_cell(&mut self, n: usize) -> Result<()> {
        let (data, path) = self.dataset(n, 2, Some(BBOX_PROB))?;
        let dist = Distribution::Bernoulli(data.probs.clone().expect("probabilities set above"));
        let exact = timed(|| engine::moments(&data.points, &dist, MeasureKind::BBoxVolume, Engine::Exact))?;
        self.rows.push(Row {
            n,
            d: 2,
            s: None,
            epsilon: None,
            method: "exact",
            time_ms: exact.elapsed_ms,
            mean: exact.mean,
            variance: None,
            rel_err_mean: Some(0.0),
            rel_err_var: None,
            command: format!("geomoments moments --input {} --measure bbox --dist bernoulli", path.display()),
        });
        let mc = timed(|| oracle::monte_carlo_moments(&data.points, &dist, MeasureKind::BBoxVolume, DEFAULT_SAMPLES, self.seed))?;
        self.push_sample(n, 2, None, &mc, exact.mean, None, &path, "bbox --dist bernoulli", None);
        Ok(())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_rows(rows: &[Row], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n", "d", "s", "epsilon", "method", "time_ms", "mean", "variance", "rel_err_mean", "rel_err_var", "command",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.d.to_string(),
            opt(r.s),
            opt(r.epsilon),
            r.method.to_string(),
            format!("{:.3}", r.time_ms),
            r.mean.to_string(),
            opt(r.variance),
            opt(r.rel_err_mean),
            opt(r.rel_err_var),
            r.command.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-method aggregate: run count, total time, worst mean and variance
/// errors.
fn summary(rows: &[Row]) -> Vec<(&'static str, usize, f64, f64, Option<f64>)> {
    let mut out: Vec<(&'static str, usize, f64, f64, Option<f64>)> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|e| e.0 == r.method) {
            Some(i) => i,
            None => {
                out.push((r.method, 0, 0.0, 0.0, None));
                out.len() - 1
            }
        };
        let e = &mut out[i];
        e.1 += 1;
        e.2 += r.time_ms;
        e.3 = e.3.max(r.rel_err_mean.unwrap_or(0.0));
        if let Some(v) = r.rel_err_var {
            e.4 = Some(e.4.map_or(v, |m: f64| m.max(v)));
        }
    }
    out
}

pub fn run(args: &BenchArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let mut grid = Grid { dir: &args.out, seed: args.seed, rows: Vec::new() };
    let (n0, sizes): (usize, &[usize]) =
        if args.quick { (400, &[200, 400, 800]) } else { (2000, &[1000, 2000, 4000, 8000]) };
    let name = match args.suite {
        Suite::MpdVsN => {
            for &n in sizes {
                grid.mpd_cell(n, 3, n / 5, &[DEFAULT_EPSILON], true)?;
            }
            "mpd-vs-n"
        }
        Suite::MpdVsS => {
            for k in 1..=9 {
                grid.mpd_cell(n0, 3, n0 * k / 10, &[DEFAULT_EPSILON], true)?;
            }
            "mpd-vs-s"
        }
        Suite::MpdVsEps => {
            let eps: Vec<f64> = (0..19).map(|k| ((5 + 5 * k) as f64) / 100.0).collect();
            grid.mpd_cell(n0, 3, n0 / 5, &eps, false)?;
            "mpd-vs-eps"
        }
        Suite::MpdVsD => {
            for d in 2..=6 {
                grid.mpd_cell(n0, d, n0 / 5, &[DEFAULT_EPSILON], true)?;
            }
            "mpd-vs-d"
        }
        Suite::BboxVsN => {
            for &n in sizes {
                grid.bbox_cell(n)?;
            }
            "bbox-vs-n"
        }
    };
    write_rows(&grid.rows, &args.out.join(format!("{name}.csv")))?;
    let mut table = String::new();
    writeln!(table, "{name}: method runs total_ms max_rel_err_mean max_rel_err_var").unwrap();
    let mut w = csv::Writer::from_path(args.out.join(format!("{name}_summary.csv")))?;
    w.write_record(["method", "runs", "total_ms", "max_rel_err_mean", "max_rel_err_var"])?;
    for (method, runs, total, em, ev) in summary(&grid.rows) {
        writeln!(table, "{method:>8} {runs:>4} {total:>10.1} {em:>10.3e} {:>10}", ev.map_or("-".into(), |v| format!("{v:.3e}")))
            .unwrap();
        w.write_record([method.to_string(), runs.to_string(), format!("{total:.3}"), em.to_string(), opt(ev)])?;
    }
    w.flush()?;
    print!("{table}");
    Ok(())
}
