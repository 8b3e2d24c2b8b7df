//! Dataset ingestion, synthetic generators and result serialization.
//!
//! Point files are CSV with a header `x1,...,xd` and an optional trailing
//! `prob` column. Rows are numbered from 1, counting data rows only.
//! Generators use ChaCha8 seeded with `seed_from_u64`, so a seed maps to
//! the same bit stream on every platform.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::{BernoulliModel, Error, MomentResult, PointSet, Result, SizeRow};

/// Largest perturbation applied to break coordinate collisions.
pub const JITTER: f64 = 1e-9;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Generated { kind: Generator, seed: u64 },
    Memory,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::File(p) => write!(f, "{}", p.display()),
            Source::Generated { kind, seed } => write!(f, "{kind} seed={seed}"),
            Source::Memory => f.write_str("memory"),
        }
    }
}

/// Points with optional per-point inclusion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: PointSet,
    pub probs: Option<BernoulliModel>,
    pub source: Source,
}

impl Dataset {
    pub fn new(points: PointSet, probs: Option<Vec<f64>>) -> Result<Self> {
        let probs = match probs {
            Some(p) if p.len() != points.len() => {
                return Err(Error::InvalidArgument(format!(
                    "{} probabilities for {} points",
                    p.len(),
                    points.len()
                )))
            }
            Some(p) => Some(BernoulliModel::new(p)?),
            None => None,
        };
        Ok(Dataset { points, probs, source: Source::Memory })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }
}

fn parse_error(path: &Path, row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), row, column, message: message.into() }
}

/// Reads a point file. Rejects non-finite values, probabilities outside
/// `(0, 1)` and two points sharing a coordinate value.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    let has_prob = header.iter().next_back() == Some("prob");
    let d = header.len() - usize::from(has_prob);
    if d == 0 {
        return Err(parse_error(path, 0, 1, "header has no coordinate columns"));
    }
    for (k, name) in header.iter().take(d).enumerate() {
        if name != format!("x{}", k + 1) {
            return Err(parse_error(path, 0, k + 1, format!("expected header x{}, found {name:?}", k + 1)));
        }
    }
    let mut coords = Vec::new();
    let mut probs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(parse_error(
                path,
                row,
                record.len().min(header.len()) + 1,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        for (k, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| parse_error(path, row, k + 1, format!("not a number: {field:?}")))?;
            if !value.is_finite() {
                return Err(parse_error(path, row, k + 1, format!("non-finite value {field}")));
            }
            if k < d {
                coords.push(value);
            } else if value <= 0.0 || value >= 1.0 {
                return Err(parse_error(path, row, k + 1, format!("probability {value} not in (0, 1)")));
            } else {
                probs.push(value);
            }
        }
    }
    if coords.is_empty() {
        return Err(parse_error(path, 1, 1, "no data rows"));
    }
    let points = PointSet::from_flat(coords, d)?;
    if let Some((k, i, j)) = points.find_shared_coordinate() {
        return Err(Error::Degenerate(format!(
            "{}: rows {} and {} share the value {} in column x{}",
            path.display(),
            i + 1,
            j + 1,
            points.point(i)[k],
            k + 1
        )));
    }
    let mut data = Dataset::new(points, has_prob.then_some(probs))?;
    data.source = Source::File(path.to_path_buf());
    Ok(data)
}

/// Writes a dataset in the format read by [`read_csv`]. Values use the
/// shortest representation that parses back to the same bits.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = data.dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    if data.probs.is_some() {
        header.push("prob".into());
    }
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.points.point(i).iter().map(|v| v.to_string()).collect();
        if let Some(m) = &data.probs {
            row.push(m.prob(i).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Synthetic point distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// i.i.d. uniform in `[0, 1]^d`.
    Uniform,
    /// `k` Gaussian blobs with uniform centres in `[0, 1]^d` and standard
    /// deviation `spread`.
    Clustered { k: usize, spread: f64 },
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Uniform => f.write_str("uniform"),
            Generator::Clustered { k, spread } => write!(f, "clustered k={k} spread={spread}"),
        }
    }
}

/// Draws `n` points in `R^d`. Coordinate collisions are broken by seeded
/// jitter of at most [`JITTER`].
pub fn generate(kind: Generator, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!("cannot generate n = {n}, d = {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * d);
    match kind {
        Generator::Uniform => coords.extend((0..n * d).map(|_| rng.random::<f64>())),
        Generator::Clustered { k, spread } => {
            if k == 0 || !(spread > 0.0 && spread.is_finite()) {
                return Err(Error::InvalidArgument(format!("invalid clustering k = {k}, spread = {spread}")));
            }
            let centres: Vec<f64> = (0..k * d).map(|_| rng.random::<f64>()).collect();
            let noise = Normal::new(0.0, spread).expect("positive spread");
            for _ in 0..n {
                let c = rng.random_range(0..k);
                coords.extend((0..d).map(|j| centres[c * d + j] + noise.sample(&mut rng)));
            }
        }
    }
    let mut points = PointSet::from_flat(coords, d)?;
    while let Some((k, _, j)) = points.find_shared_coordinate() {
        let delta = rng.random_range(-JITTER..JITTER);
        let mut c = points.flat().to_vec();
        c[j * d + k] += delta;
        points = PointSet::from_flat(c, d)?;
    }
    Ok(Dataset { points, probs: None, source: Source::Generated { kind, seed } })
}

/// Serialization format of a [`MomentResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultFormat {
    Json,
    Csv,
}

impl FromStr for ResultFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ResultFormat::Json),
            "csv" => Ok(ResultFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}, expected json or csv"))),
        }
    }
}

fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a result. The CSV form has one `s,mean,variance` row per
/// table entry, or a single row without a table.
pub fn write_result_to(result: &MomentResult, format: ResultFormat, mut out: impl Write) -> Result<()> {
    match format {
        ResultFormat::Json => {
            serde_json::to_writer_pretty(&mut out, result)?;
            writeln!(out)?;
        }
        ResultFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["s", "mean", "variance"])?;
            let single = [SizeRow { s: result.s.unwrap_or(0), mean: result.mean, variance: result.variance }];
            let rows = result.per_s.as_deref().unwrap_or(&single);
            for r in rows {
                let s = if result.per_s.is_none() && result.s.is_none() { String::new() } else { r.s.to_string() };
                w.write_record([s, sig17(r.mean), r.variance.map(sig17).unwrap_or_default()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write_result(result: &MomentResult, format: ResultFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_result_to(result, format, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Reads a JSON result written by [`write_result`].
pub fn read_result(path: impl AsRef<Path>) -> Result<MomentResult> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// Reads the rows of a CSV result written by [`write_result`].
pub fn read_result_csv(path: impl AsRef<Path>) -> Result<Vec<SizeRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let field = |k: usize| record.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k).parse().map_err(|_| parse_error(path, i + 1, k + 1, format!("not a number: {:?}", field(k))))
        };
        let s = if field(0).is_empty() { 0 } else { num(0)? as usize };
        let variance = if field(2).is_empty() { None } else { Some(num(2)?) };
        rows.push(SizeRow { s, mean: num(1)?, variance });
    }
    Ok(rows)
}
