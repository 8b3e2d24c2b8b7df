//! Ground-truth engines: direct measure evaluation on a subset, full
//! enumeration of all subsets, and the Monte Carlo sampling baseline.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{circumdisk, diametral_disk, distance, orient2d, squared_distance, Disk};
use crate::geometry::{signed_simplex_det, DiskSide};
use crate::prob::SubsetSampler;
use crate::{par, Distribution, Error, Method, MomentResult, PointSet, Result, SizeRow};

/// Largest point set the enumeration oracle accepts.
pub const ORACLE_CAP: usize = 20;

/// Sampling-method default, matching the usual thousand draws.
pub const DEFAULT_SAMPLES: usize = 1000;

const MC_BATCH: usize = 256;

/// The geometric measures of a subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    BBoxVolume,
    ConvexHullVolume,
    CentroidSqDist,
    Mpd,
    SedDiameter,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 5] = [
        MeasureKind::BBoxVolume,
        MeasureKind::ConvexHullVolume,
        MeasureKind::CentroidSqDist,
        MeasureKind::Mpd,
        MeasureKind::SedDiameter,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::BBoxVolume => "bbox",
            MeasureKind::ConvexHullVolume => "hull",
            MeasureKind::CentroidSqDist => "centroid",
            MeasureKind::Mpd => "mpd",
            MeasureKind::SedDiameter => "sed",
        }
    }

    /// Rejects combinations outside the supported scope. `allow_bernoulli`
    /// lifts the fixed-size restriction of the centroid and MPD measures.
    pub fn check_scope(&self, dist: &Distribution, dim: usize, allow_bernoulli: bool) -> Result<()> {
        let bernoulli = matches!(dist, Distribution::Bernoulli(_));
        match self {
            MeasureKind::CentroidSqDist | MeasureKind::Mpd if bernoulli && !allow_bernoulli => {
                Err(Error::Unsupported(format!(
                    "{} is defined for the fixed-size model only",
                    self.name()
                )))
            }
            MeasureKind::SedDiameter if dim != 2 => Err(Error::Unsupported(format!(
                "sed requires points in the plane, got d = {dim}"
            ))),
            MeasureKind::ConvexHullVolume if dim > 3 => Err(Error::Unsupported(format!(
                "hull volume is available for d <= 3, got d = {dim}"
            ))),
            MeasureKind::Mpd => match dist {
                Distribution::FixedSize { s } if *s < 2 => Err(Error::InvalidArgument(
                    "mpd needs subsets of at least two points".into(),
                )),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown measure '{s}'")))
    }
}

/// Evaluates `kind` on the points of `points` selected by `subset`.
///
/// Under-determined subsets evaluate to zero (bounding box and diameter for
/// `|S| <= 1`, hull for `|S| <= d`); MPD on fewer than two points is an error.
pub fn eval_measure(kind: MeasureKind, points: &PointSet, subset: &[usize]) -> Result<f64> {
    let d = points.dim();
    match kind {
        MeasureKind::BBoxVolume => Ok(bbox_volume(points, subset)),
        MeasureKind::ConvexHullVolume => match d {
            1 => Ok(bbox_volume(points, subset)),
            2 => Ok(hull_area_2d(points, subset)),
            3 => hull_volume_3d(points, subset),
            _ => Err(Error::Unsupported(format!("oracle hull volume for d = {d}"))),
        },
        MeasureKind::CentroidSqDist => Ok(centroid_sq_dist(points, subset)),
        MeasureKind::Mpd => {
            if subset.len() < 2 {
                return Err(Error::InvalidArgument(
                    "mean pairwise distance needs at least two points".into(),
                ));
            }
            Ok(mean_pairwise_distance(points, subset))
        }
        MeasureKind::SedDiameter => {
            if d != 2 {
                return Err(Error::Unsupported(format!("smallest enclosing disk for d = {d}")));
            }
            Ok(smallest_enclosing_disk(points, subset)?.map_or(0.0, |disk| disk.diameter()))
        }
    }
}

/// Like [`eval_measure`], but MPD of fewer than two points is zero.
fn eval_lenient(kind: MeasureKind, points: &PointSet, subset: &[usize]) -> Result<f64> {
    if kind == MeasureKind::Mpd && subset.len() < 2 {
        return Ok(0.0);
    }
    eval_measure(kind, points, subset)
}

fn bbox_volume(points: &PointSet, subset: &[usize]) -> f64 {
    if subset.len() <= 1 {
        return 0.0;
    }
    (0..points.dim())
        .map(|k| {
            let (lo, hi) = subset.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let c = points.point(i)[k];
                (lo.min(c), hi.max(c))
            });
            hi - lo
        })
        .product()
}

fn centroid_sq_dist(points: &PointSet, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let d = points.dim();
    let s = subset.len() as f64;
    let mut c = vec![0.0; d];
    for &i in subset {
        for (ck, &x) in c.iter_mut().zip(points.point(i)) {
            *ck += x;
        }
    }
    c.iter_mut().for_each(|ck| *ck /= s);
    subset.iter().map(|&i| squared_distance(points.point(i), &c)).sum::<f64>() / s
}

fn mean_pairwise_distance(points: &PointSet, subset: &[usize]) -> f64 {
    let s = subset.len();
    let mut total = 0.0;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            total += distance(points.point(i), points.point(j));
        }
    }
    2.0 * total / (s * (s - 1)) as f64
}

/// Area of the convex hull of planar points (monotone chain + shoelace).
fn hull_area_2d(points: &PointSet, subset: &[usize]) -> f64 {
    if subset.len() < 3 {
        return 0.0;
    }
    let mut pts: Vec<&[f64]> = subset.iter().map(|&i| points.point(i)).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut hull: Vec<&[f64]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &&[f64]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orient2d(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let m = hull.len();
    let twice: f64 = (0..m)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % m]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    twice.abs() / 2.0
}

fn orient3d(a: &[f64], b: &[f64], c: &[f64], p: &[f64]) -> f64 {
    signed_simplex_det(&[a, b, c, p])
}

/// Volume of the convex hull of points in `R^3` by incremental construction.
fn hull_volume_3d(points: &PointSet, subset: &[usize]) -> Result<f64> {
    let pts: Vec<&[f64]> = subset.iter().map(|&i| points.point(i)).collect();
    let k = pts.len();
    if k < 4 {
        return Ok(0.0);
    }
    // Initial tetrahedron from the first affinely independent points.
    let i0 = 0;
    let Some(i1) = (1..k).find(|&i| pts[i] != pts[i0]) else { return Ok(0.0) };
    let cross_norm = |i: usize| {
        let (u, v) = (sub(pts[i1], pts[i0]), sub(pts[i], pts[i0]));
        let c = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        c.iter().map(|x| x * x).sum::<f64>()
    };
    let Some(i2) = (1..k).filter(|&i| i != i1).find(|&i| cross_norm(i) > 0.0) else {
        return Ok(0.0);
    };
    let Some(i3) = (1..k)
        .filter(|&i| i != i1 && i != i2)
        .find(|&i| orient3d(pts[i0], pts[i1], pts[i2], pts[i]) != 0.0)
    else {
        return Ok(0.0);
    };
    let interior: Vec<f64> = (0..3)
        .map(|a| (pts[i0][a] + pts[i1][a] + pts[i2][a] + pts[i3][a]) / 4.0)
        .collect();
    let orient_face = |f: [usize; 3]| {
        if orient3d(pts[f[0]], pts[f[1]], pts[f[2]], &interior) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    let mut faces: Vec<[usize; 3]> = [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]]
        .into_iter()
        .map(orient_face)
        .collect();
    for p in 0..k {
        if [i0, i1, i2, i3].contains(&p) {
            continue;
        }
        let (visible, hidden): (Vec<[usize; 3]>, Vec<[usize; 3]>) = faces
            .iter()
            .partition(|f| orient3d(pts[f[0]], pts[f[1]], pts[f[2]], pts[p]) > 0.0);
        if visible.is_empty() {
            continue;
        }
        let edges: HashSet<(usize, usize)> = visible
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .collect();
        faces = hidden;
        for &(u, v) in &edges {
            if !edges.contains(&(v, u)) {
                faces.push([u, v, p]);
            }
        }
    }
    let volume: f64 = faces
        .iter()
        .map(|f| orient3d(pts[f[0]], pts[f[1]], pts[f[2]], &interior))
        .sum::<f64>()
        .abs()
        / 6.0;
    Ok(volume)
}

fn sub(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn outside(disk: &Disk, p: &[f64]) -> bool {
    disk.classify(p) == DiskSide::Outside
}

/// Smallest enclosing disk of planar points (incremental minidisk); `None`
/// for fewer than two points.
pub fn smallest_enclosing_disk(points: &PointSet, subset: &[usize]) -> Result<Option<Disk>> {
    let pts: Vec<&[f64]> = subset.iter().map(|&i| points.point(i)).collect();
    if pts.len() < 2 {
        return Ok(None);
    }
    let mut disk = diametral_disk(pts[0], pts[1])?;
    for i in 2..pts.len() {
        if !outside(&disk, pts[i]) {
            continue;
        }
        disk = diametral_disk(pts[0], pts[i])?;
        for j in 1..i {
            if !outside(&disk, pts[j]) {
                continue;
            }
            disk = diametral_disk(pts[i], pts[j])?;
            for l in 0..j {
                if outside(&disk, pts[l]) {
                    disk = circumdisk(pts[i], pts[j], pts[l])?;
                }
            }
        }
    }
    Ok(Some(disk))
}

fn check_oracle_size(points: &PointSet) -> Result<()> {
    if points.len() > ORACLE_CAP {
        return Err(Error::TooLarge { n: points.len(), cap: ORACLE_CAP });
    }
    Ok(())
}

fn indices_of(mask: u32, out: &mut Vec<usize>) {
    out.clear();
    let mut m = mask;
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
}

/// Exact moments by enumerating every subset; see [`oracle_moments_with`].
pub fn oracle_moments(points: &PointSet, dist: &Distribution, kind: MeasureKind) -> Result<MomentResult> {
    oracle_moments_with(points, dist, kind, false)
}

/// Exact mean and variance by full enumeration (`n <= 20`). Bernoulli weighs
/// each subset `Q` by `π(Q)·π̄(P∖Q)`; fixed-size visits the `C(n, s)`
/// subsets of size `s` with equal weight. `allow_bernoulli` admits the
/// centroid and MPD measures under the Bernoulli model (MPD of fewer than
/// two points then counts as zero).
pub fn oracle_moments_with(
    points: &PointSet,
    dist: &Distribution,
    kind: MeasureKind,
    allow_bernoulli: bool,
) -> Result<MomentResult> {
    check_oracle_size(points)?;
    dist.validate(points.len())?;
    kind.check_scope(dist, points.dim(), allow_bernoulli)?;
    let start = Instant::now();
    let n = points.len();
    let masks: Vec<u32> = match dist {
        Distribution::Bernoulli(_) => (0..1u32 << n).collect(),
        Distribution::FixedSize { s } => (0..1u32 << n).filter(|m| m.count_ones() as usize == *s).collect(),
    };
    let weighted = evaluate_masks(points, kind, &masks, |mask| match dist {
        Distribution::Bernoulli(m) => (0..n)
            .map(|i| if mask & (1 << i) != 0 { m.prob(i) } else { 1.0 - m.prob(i) })
            .product(),
        Distribution::FixedSize { .. } => 1.0 / masks.len() as f64,
    })?;
    let mean: f64 = weighted.iter().map(|(v, w)| v * w).sum();
    let variance: f64 = weighted.iter().map(|(v, w)| w * (v - mean) * (v - mean)).sum();
    let mut result = MomentResult::new(kind.name(), dist, Method::Oracle, n, points.dim());
    result.mean = mean;
    result.variance = Some(variance);
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

fn evaluate_masks(
    points: &PointSet,
    kind: MeasureKind,
    masks: &[u32],
    weight: impl Fn(u32) -> f64 + Sync + Send,
) -> Result<Vec<(f64, f64)>> {
    let blocks = par::block_ranges(masks.len(), 64);
    let chunks = par::map_indexed(blocks.len(), |b| -> Result<Vec<(f64, f64)>> {
        let mut idx = Vec::new();
        masks[blocks[b].clone()]
            .iter()
            .map(|&mask| {
                indices_of(mask, &mut idx);
                Ok((eval_lenient(kind, points, &idx)?, weight(mask)))
            })
            .collect()
    });
    let mut out = Vec::with_capacity(masks.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Fixed-size mean and variance for every `s` in `0..=n` from one pass over
/// all `2^n` subsets. MPD rows for `s < 2` report zero.
pub fn oracle_size_table(points: &PointSet, kind: MeasureKind) -> Result<Vec<SizeRow>> {
    check_oracle_size(points)?;
    kind.check_scope(&Distribution::FixedSize { s: 2 }, points.dim(), false)?;
    let n = points.len();
    let masks: Vec<u32> = (0..1u32 << n).collect();
    let values = evaluate_masks(points, kind, &masks, |_| 1.0)?;
    let mut sums = vec![(0.0, 0usize); n + 1];
    for (mask, (v, _)) in values.iter().enumerate() {
        let s = (mask as u32).count_ones() as usize;
        sums[s].0 += v;
        sums[s].1 += 1;
    }
    let means: Vec<f64> = sums.iter().map(|(t, c)| t / *c as f64).collect();
    let mut sq = vec![0.0; n + 1];
    for (mask, (v, _)) in values.iter().enumerate() {
        let s = (mask as u32).count_ones() as usize;
        sq[s] += (v - means[s]) * (v - means[s]);
    }
    Ok((0..=n)
        .map(|s| SizeRow { s, mean: means[s], variance: Some(sq[s] / sums[s].1 as f64) })
        .collect())
}

/// Streaming mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Welford {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

/// The sampling method: evaluates the measure on `num_samples` independent
/// random subsets and reports their mean and unbiased variance.
///
/// Draws are split into fixed batches of 256, batch `b` using ChaCha8 seeded
/// with `seed` on stream `b`; batch statistics are merged in batch order, so
/// the output depends only on the arguments.
pub fn monte_carlo_moments(
    points: &PointSet,
    dist: &Distribution,
    kind: MeasureKind,
    num_samples: usize,
    seed: u64,
) -> Result<MomentResult> {
    monte_carlo_moments_with(points, dist, kind, num_samples, seed, false)
}

pub fn monte_carlo_moments_with(
    points: &PointSet,
    dist: &Distribution,
    kind: MeasureKind,
    num_samples: usize,
    seed: u64,
    allow_bernoulli: bool,
) -> Result<MomentResult> {
    if num_samples < 2 {
        return Err(Error::InvalidArgument("the sampling method needs at least 2 samples".into()));
    }
    dist.validate(points.len())?;
    kind.check_scope(dist, points.dim(), allow_bernoulli)?;
    let start = Instant::now();
    let n = points.len();
    let batches = num_samples.div_ceil(MC_BATCH);
    let stats = par::map_indexed(batches, |b| -> Result<Welford> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let mut sampler = SubsetSampler::new(n);
        let mut subset = Vec::new();
        let mut acc = Welford::default();
        let count = MC_BATCH.min(num_samples - b * MC_BATCH);
        for _ in 0..count {
            sampler.sample(dist, &mut rng, &mut subset);
            acc.push(eval_lenient(kind, points, &subset)?);
        }
        Ok(acc)
    });
    let mut total = Welford::default();
    for s in stats {
        total = total.merge(s?);
    }
    let mut result = MomentResult::new(kind.name(), dist, Method::Sample, n, points.dim());
    result.mean = total.mean;
    result.variance = Some(total.m2 / (total.count - 1.0));
    result.samples = Some(num_samples);
    result.seed = Some(seed);
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}
