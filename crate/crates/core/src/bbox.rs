//! Expected bounding-box volume.
//!
//! Writing `max x - min x = max x + max(-x)`, the volume of the box expands
//! into `2^d` terms of the form `E[Π_i max_{p∈S} p_i]`, one per choice of
//! reflected axes. In the plane each term is a sum over argmax pairs
//! evaluated with a [`ProductTree`] sweep in `O(n log n)`. In general
//! dimension the argmax points of a subset form a *concise set*, and each
//! term is a sum over all concise sets of at most `d` points.

use std::time::Instant;

use crate::product_tree::ProductTree;
use crate::{par, BernoulliModel, BinomialTable, Distribution, Error, Method, MomentResult};
use crate::{PointSet, Result, SizeRow};

/// Largest dimension accepted by the concise-set engines.
pub const MAX_CONCISE_DIM: usize = 4;

/// Which end of a coordinate range a corner term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Max,
    Min,
}

impl Extreme {
    fn sign(self) -> f64 {
        match self {
            Extreme::Max => 1.0,
            Extreme::Min => -1.0,
        }
    }
}

fn check_model(points: &PointSet, model: &BernoulliModel) -> Result<()> {
    if model.len() != points.len() {
        return Err(Error::InvalidArgument(format!(
            "{} probabilities for {} points",
            model.len(),
            points.len()
        )));
    }
    Ok(())
}

fn check_planar(points: &PointSet) -> Result<()> {
    if points.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: points.dim() });
    }
    Ok(())
}

/// `E[ext_x x · ext_y y]` over a Bernoulli subset of planar points, where
/// each extreme is taken over the subset (empty subsets contribute zero).
pub fn corner_term_2d(points: &PointSet, model: &BernoulliModel, x: Extreme, y: Extreme) -> Result<f64> {
    check_planar(points)?;
    check_model(points, model)?;
    let xs: Vec<f64> = points.iter().map(|p| x.sign() * p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| y.sign() * p[1]).collect();
    Ok(x.sign() * y.sign() * max_max(&xs, &ys, model.probs())?)
}

/// `E[max x · max y]` by sweeping points in increasing x.
///
/// For the pair (argmax x = p, argmax y = q) with `p ≠ q` the probability is
/// `π(p)·π̄(P_x^+(p))·π(q)·π̄({r : r_x < p_x, r_y > q_y})` and requires
/// `q_x < p_x`, `q_y > p_y`. The tree holds weights `q_y·π(q)` and is marked
/// in x order, so after marking `p` a query at `p` sums exactly those `q`.
/// The diagonal `p = q` needs `π̄` of the marked points above `p`, which the
/// same query returns.
fn max_max(xs: &[f64], ys: &[f64], probs: &[f64]) -> Result<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    if let Some(w) = order.windows(2).find(|w| xs[w[0]] == xs[w[1]]) {
        return Err(Error::Degenerate(format!(
            "points {} and {} share the x-coordinate {}",
            w[0], w[1], xs[w[0]]
        )));
    }
    // π̄ of the points to the right of each point in x.
    let mut right = vec![1.0; n];
    let mut acc = 1.0;
    for &i in order.iter().rev() {
        right[i] = acc;
        acc *= 1.0 - probs[i];
    }
    let weights: Vec<f64> = (0..n).map(|q| ys[q] * probs[q]).collect();
    let mut tree = ProductTree::build(ys, &weights, probs)?;
    let mut total = 0.0;
    for &p in &order {
        tree.addmark(p)?;
        let (b, above) = tree.query_with_product(p)?;
        let a = xs[p] * probs[p] * right[p];
        total += a * (b + ys[p] * above);
    }
    Ok(total)
}

/// Expected bounding-box area of a Bernoulli subset of planar points.
pub fn expected_bbox_area_2d_bernoulli(points: &PointSet, model: &BernoulliModel) -> Result<MomentResult> {
    check_planar(points)?;
    check_model(points, model)?;
    let start = Instant::now();
    let centered = points.centered();
    let configs = [
        (Extreme::Max, Extreme::Max),
        (Extreme::Max, Extreme::Min),
        (Extreme::Min, Extreme::Max),
        (Extreme::Min, Extreme::Min),
    ];
    let terms = par::map_indexed(4, |k| {
        let (x, y) = configs[k];
        corner_term_2d(&centered, model, x, y).map(|t| x.sign() * y.sign() * t)
    });
    let mut mean = 0.0;
    for t in terms {
        mean += t?;
    }
    let dist = Distribution::Bernoulli(model.clone());
    let mut result = MomentResult::new("bbox", &dist, Method::Exact, points.len(), 2);
    result.mean = mean;
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// A set of at most `d` points each attaining the maximum of the set in at
/// least one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConciseSet {
    /// Point indices in increasing order.
    pub members: Vec<usize>,
    /// Per-dimension maximum over the members.
    pub maxima: Vec<f64>,
    /// Per-dimension member attaining the maximum.
    pub argmax: Vec<usize>,
    /// Points exceeding some maximum, i.e. `P^+(H)`.
    pub dominators: Vec<usize>,
}

impl ConciseSet {
    /// `Π_i max_{p∈H} p_i`.
    pub fn max_product(&self) -> f64 {
        self.maxima.iter().product()
    }
}

fn check_concise_dim(d: usize) -> Result<()> {
    if d > MAX_CONCISE_DIM {
        return Err(Error::Unsupported(format!(
            "concise-set enumeration is limited to d <= {MAX_CONCISE_DIM}, got d = {d}"
        )));
    }
    Ok(())
}

/// Argmax per dimension of `members`, or `None` when some member attains no
/// maximum.
fn concise_argmax(points: &PointSet, members: &[usize]) -> Option<Vec<usize>> {
    let argmax: Vec<usize> = (0..points.dim())
        .map(|k| {
            *members
                .iter()
                .max_by(|&&a, &&b| points.point(a)[k].total_cmp(&points.point(b)[k]))
                .expect("non-empty set")
        })
        .collect();
    members.iter().all(|m| argmax.contains(m)).then_some(argmax)
}

/// Visits every concise set whose smallest index is `first`, extending only
/// with larger indices; subsets of concise sets are concise, so non-concise
/// prefixes are pruned.
fn visit_concise_from(points: &PointSet, first: usize, max_k: usize, f: &mut impl FnMut(&[usize], &[usize])) {
    let n = points.len();
    let mut stack: Vec<usize> = vec![first];
    loop {
        if let Some(argmax) = concise_argmax(points, &stack) {
            f(&stack, &argmax);
            if stack.len() < max_k {
                let next = stack[stack.len() - 1] + 1;
                if next < n {
                    stack.push(next);
                    continue;
                }
            }
        }
        // Advance the deepest position, popping exhausted levels.
        loop {
            if stack.len() == 1 {
                return;
            }
            let last = stack.pop().expect("non-empty stack") + 1;
            if last < n {
                stack.push(last);
                break;
            }
        }
    }
}

fn dominators<'a>(points: &'a PointSet, maxima: &[f64]) -> impl Iterator<Item = usize> + 'a {
    let maxima = maxima.to_vec();
    (0..points.len()).filter(move |&r| points.point(r).iter().zip(&maxima).any(|(c, m)| c > m))
}

/// All concise sets of size at most `max_k`, each exactly once.
pub fn enumerate_concise_sets(points: &PointSet, max_k: usize) -> Result<Vec<ConciseSet>> {
    check_concise_dim(points.dim())?;
    let mut out = Vec::new();
    for first in 0..points.len() {
        visit_concise_from(points, first, max_k, &mut |members, argmax| {
            let maxima: Vec<f64> = argmax.iter().enumerate().map(|(k, &a)| points.point(a)[k]).collect();
            let dominators = dominators(points, &maxima).collect();
            out.push(ConciseSet { members: members.to_vec(), maxima, argmax: argmax.to_vec(), dominators });
        });
    }
    Ok(out)
}

/// Reflects the axes whose bit is set in `mask`.
fn reflect(points: &PointSet, mask: usize) -> PointSet {
    points.map_coords(|k, v| if mask & (1 << k) != 0 { -v } else { v })
}

/// Runs `visit` over every (reflection, block of first indices) cell and
/// returns the per-cell results in a fixed order.
fn over_reflections<T: Send>(points: &PointSet, visit: impl Fn(&PointSet, std::ops::Range<usize>) -> T + Sync + Send) -> Vec<T> {
    let d = points.dim();
    let centered = points.centered();
    let reflections: Vec<PointSet> = (0..1usize << d).map(|m| reflect(&centered, m)).collect();
    let blocks = par::block_ranges(points.len(), 32);
    let cells = reflections.len() * blocks.len();
    par::map_indexed(cells, |c| {
        let refl = &reflections[c / blocks.len()];
        visit(refl, blocks[c % blocks.len()].clone())
    })
}

/// Expected bounding-box volume of a Bernoulli subset in `d <= 4`
/// dimensions, summing `Π max · π(H) · π̄(P^+(H))` over concise sets `H`.
pub fn expected_bbox_volume_dd_bernoulli(points: &PointSet, model: &BernoulliModel) -> Result<MomentResult> {
    check_concise_dim(points.dim())?;
    check_model(points, model)?;
    let start = Instant::now();
    let d = points.dim();
    let probs = model.probs();
    let sums = over_reflections(points, |refl, firsts| {
        let mut sum = 0.0;
        for first in firsts {
            visit_concise_from(refl, first, d, &mut |members, argmax| {
                let mut con: f64 = argmax.iter().enumerate().map(|(k, &a)| refl.point(a)[k]).product();
                con *= members.iter().map(|&m| probs[m]).product::<f64>();
                let maxima: Vec<f64> = argmax.iter().enumerate().map(|(k, &a)| refl.point(a)[k]).collect();
                con *= dominators(refl, &maxima).map(|r| 1.0 - probs[r]).product::<f64>();
                sum += con;
            });
        }
        sum
    });
    let dist = Distribution::Bernoulli(model.clone());
    let mut result = MomentResult::new("bbox", &dist, Method::Exact, points.len(), d);
    result.mean = sums.into_iter().sum();
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// `SUM[k][g]`: the summed max-products of concise `k`-sets `H` with
/// `n - k - |P^+(H)| = g`, accumulated over all reflections.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionTable {
    n: usize,
    sums: Vec<Vec<f64>>,
}

impl ContributionTable {
    fn new(n: usize, d: usize) -> Self {
        ContributionTable { n, sums: vec![vec![0.0; n + 1]; d + 1] }
    }

    fn add(&mut self, other: &ContributionTable) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn get(&self, k: usize, g: usize) -> f64 {
        self.sums.get(k).and_then(|row| row.get(g)).copied().unwrap_or(0.0)
    }

    /// `Σ_k Σ_g SUM[k][g]·C(g, s-k)/C(n, s)`.
    pub fn expectation(&self, binom: &BinomialTable, s: usize) -> f64 {
        let mut total = 0.0;
        for (k, row) in self.sums.iter().enumerate().skip(1) {
            if k > s {
                break;
            }
            for (g, &v) in row.iter().enumerate() {
                if v != 0.0 && g >= s - k {
                    total += v * binom.choose_ratio(g, s - k, s);
                }
            }
        }
        total
    }
}

/// Builds the contribution table of a point set (all reflections).
pub fn contribution_table(points: &PointSet) -> Result<ContributionTable> {
    check_concise_dim(points.dim())?;
    let (n, d) = (points.len(), points.dim());
    let parts = over_reflections(points, |refl, firsts| {
        let mut table = ContributionTable::new(n, d);
        for first in firsts {
            visit_concise_from(refl, first, d, &mut |members, argmax| {
                let maxima: Vec<f64> = argmax.iter().enumerate().map(|(k, &a)| refl.point(a)[k]).collect();
                let k = members.len();
                let g = n - k - dominators(refl, &maxima).count();
                table.sums[k][g] += maxima.iter().product::<f64>();
            });
        }
        table
    });
    let mut table = ContributionTable::new(n, d);
    for p in &parts {
        table.add(p);
    }
    Ok(table)
}

/// Expected bounding-box volume of a uniform `s`-subset for every
/// `1 <= s <= n` (mean only).
pub fn expected_bbox_volume_dd_fixed(points: &PointSet) -> Result<MomentResult> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let start = Instant::now();
    let n = points.len();
    let table = contribution_table(points)?;
    let binom = BinomialTable::new(n);
    let rows: Vec<SizeRow> = (1..=n)
        .map(|s| SizeRow { s, mean: if s == 1 { 0.0 } else { table.expectation(&binom, s) }, variance: None })
        .collect();
    let mut result = MomentResult::from_table("bbox", Method::Exact, n, points.dim(), rows);
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// Expected bounding-box volume under either model. Bernoulli in the plane
/// uses the product-tree sweep; everything else the concise-set engines.
pub fn expected_bbox_volume(points: &PointSet, dist: &Distribution) -> Result<MomentResult> {
    dist.validate(points.len())?;
    match dist {
        Distribution::Bernoulli(model) if points.dim() == 2 => expected_bbox_area_2d_bernoulli(points, model),
        Distribution::Bernoulli(model) => expected_bbox_volume_dd_bernoulli(points, model),
        Distribution::FixedSize { s } => {
            let start = Instant::now();
            if *s == 0 {
                let mut r = MomentResult::new("bbox", dist, Method::Exact, points.len(), points.dim());
                r.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
                return Ok(r);
            }
            let mut r = expected_bbox_volume_dd_fixed(points)?.select(*s)?;
            r.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(r)
        }
    }
}
