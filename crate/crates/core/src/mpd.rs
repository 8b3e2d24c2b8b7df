//! Mean pairwise distance of a uniform `s`-subset: exact moments from one
//! `O(n²)` pass and `(1 - ε)`-approximate moments from a WSPD.
//!
//! Writing `MPD(S) = 1/(s(s-1))·Σ_{p≠q∈S} δ(p,q)` over ordered pairs, the
//! square is a sum over pairs of ordered pairs. Split by how many points
//! the two pairs share:
//!
//! * the same two points (`4·D2` in total), selected with `ρ₂`;
//! * exactly one shared point (`4·Sum2`), selected with `ρ₃`;
//! * four distinct points (`Sum1`), selected with `ρ₄`;
//!
//! where `ρ_k = C(n-k, s-k)/C(n, s)`, `Sum2 = Σ_p (W_p² - Σ_q δ(p,q)²)` and
//! `Sum1 = 4·D1² - 4·D2 - 4·Sum2`.

use std::time::Instant;

use crate::geometry::distance;
use crate::prob::variance_from_moments;
use crate::wspd::{add_pair_mass, build_split_tree, fold_pairs, push_down};
use crate::{par, BinomialTable, Error, Method, MomentResult, PointSet, Result, SizeRow};

/// Sums over point pairs of a distance function `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairAggregates {
    /// `Σ_{p<q} δ(p,q)`.
    pub d1: f64,
    /// `Σ_{p<q} δ(p,q)²`.
    pub d2: f64,
    /// `Σ_p W_p²` with `W_p = Σ_{q≠p} δ(p,q)`.
    pub sumsq: f64,
    /// `Σ_p Σ_{q≠p} δ(p,q)²`.
    pub sqp: f64,
}

impl PairAggregates {
    /// `E[MPD]` for subset size `s >= 2`.
    pub fn mean(&self, binom: &BinomialTable, s: usize) -> f64 {
        let sf = s as f64;
        2.0 * self.d1 * binom.inclusion_ratio(2, s) / (sf * (sf - 1.0))
    }

    /// `E[MPD²]` for subset size `s >= 2`.
    pub fn second_moment(&self, binom: &BinomialTable, s: usize) -> f64 {
        let sum2 = self.sumsq - self.sqp;
        let sum1 = 4.0 * self.d1 * self.d1 - 4.0 * self.d2 - 4.0 * sum2;
        let sf = s as f64;
        let norm = sf * sf * (sf - 1.0) * (sf - 1.0);
        (sum1 * binom.inclusion_ratio(4, s) + 4.0 * sum2 * binom.inclusion_ratio(3, s)
            + 4.0 * self.d2 * binom.inclusion_ratio(2, s))
            / norm
    }

    fn from_point_sums(d1: f64, d2: f64, w: &[f64]) -> Self {
        PairAggregates { d1, d2, sumsq: w.iter().map(|x| x * x).sum(), sqp: 2.0 * d2 }
    }
}

/// Aggregates of exact Euclidean distances.
pub fn exact_aggregates(points: &PointSet) -> PairAggregates {
    let n = points.len();
    let blocks = par::block_ranges(n, 128);
    let parts = par::map_indexed(blocks.len(), |b| {
        let (mut d1, mut d2) = (0.0, 0.0);
        let mut w = vec![0.0; n];
        for i in blocks[b].clone() {
            let pi = points.point(i);
            let mut wi = 0.0;
            for (j, wj) in w.iter_mut().enumerate().skip(i + 1) {
                let dist = distance(pi, points.point(j));
                d1 += dist;
                d2 += dist * dist;
                wi += dist;
                *wj += dist;
            }
            w[i] += wi;
        }
        (d1, d2, w)
    });
    let (mut d1, mut d2) = (0.0, 0.0);
    let mut w = vec![0.0; n];
    for (a, b, wb) in parts {
        d1 += a;
        d2 += b;
        w.iter_mut().zip(wb).for_each(|(x, y)| *x += y);
    }
    PairAggregates::from_point_sums(d1, d2, &w)
}

/// Aggregates of ball distances of a WSPD with separation factor `z`,
/// without visiting individual point pairs.
pub fn wspd_aggregates(points: &PointSet, z: f64) -> Result<PairAggregates> {
    let tree = build_split_tree(points)?;
    let nodes = tree.nodes().len();
    let parts = fold_pairs(
        &tree,
        z,
        || (0.0, 0.0, vec![(0.0, 0.0); nodes]),
        |state, pair| {
            let w = (pair.size_a * pair.size_b) as f64;
            state.0 += w * pair.delta;
            state.1 += w * pair.delta * pair.delta;
            add_pair_mass(&mut state.2, &pair);
        },
    )?;
    let (mut d1, mut d2) = (0.0, 0.0);
    let mut ms = vec![(0.0, 0.0); nodes];
    for (a, b, m) in parts {
        d1 += a;
        d2 += b;
        for (x, y) in ms.iter_mut().zip(m) {
            x.0 += y.0;
            x.1 += y.1;
        }
    }
    let sums = push_down(&tree, ms);
    Ok(PairAggregates::from_point_sums(d1, d2, &sums.sum))
}

/// `E[MPD_ε]` alone, from a WSPD with `z = 4/ε`.
pub fn approx_mean_aggregate(points: &PointSet, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let tree = build_split_tree(points)?;
    let parts = fold_pairs(&tree, 4.0 / epsilon, || 0.0, |acc, pair| {
        *acc += (pair.size_a * pair.size_b) as f64 * pair.delta;
    })?;
    Ok(parts.into_iter().sum())
}

fn check_points(points: &PointSet) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("mean pairwise distance needs at least two points".into()));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Table rows from `(mean, variance_agg)` where the variance is that of the
/// MPD defined by `variance_agg`.
fn rows(n: usize, mean_agg: &PairAggregates, variance_agg: &PairAggregates, exact_last: bool) -> (Vec<SizeRow>, bool) {
    let binom = BinomialTable::new(n);
    let mut clamped = false;
    let rows = (2..=n)
        .map(|s| {
            let mean = mean_agg.mean(&binom, s);
            let variance = if exact_last && s == n {
                0.0
            } else {
                let second = variance_agg.second_moment(&binom, s);
                let (v, c) = variance_from_moments(second, variance_agg.mean(&binom, s));
                clamped |= c;
                v
            };
            SizeRow { s, mean, variance: Some(variance) }
        })
        .collect();
    (rows, clamped)
}

/// Exact mean and variance of `MPD(S)` for every `2 <= s <= n`.
pub fn mpd_exact_moments(points: &PointSet) -> Result<MomentResult> {
    check_points(points)?;
    let start = Instant::now();
    let n = points.len();
    let agg = exact_aggregates(points);
    let (rows, clamped) = rows(n, &agg, &agg, true);
    let mut result = MomentResult::from_table("mpd", Method::Exact, n, points.dim(), rows);
    result.variance_clamped = clamped;
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// Approximate moments of `MPD(S)` for every `2 <= s <= n`: the mean of
/// `MPD_ε` (WSPD with `z = 4/ε`), which lies in `[(1-ε)·E, E]`, and the
/// variance of `MPD_{ε/2}` (WSPD with `z = 8/ε`).
pub fn mpd_approx_moments(points: &PointSet, epsilon: f64) -> Result<MomentResult> {
    check_points(points)?;
    check_epsilon(epsilon)?;
    let start = Instant::now();
    let n = points.len();
    let mean_d1 = approx_mean_aggregate(points, epsilon)?;
    let var_agg = wspd_aggregates(points, 8.0 / epsilon)?;
    let mean_agg = PairAggregates { d1: mean_d1, ..var_agg };
    let (rows, clamped) = rows(n, &mean_agg, &var_agg, false);
    let mut result = MomentResult::from_table("mpd", Method::Approx, n, points.dim(), rows);
    result.epsilon = Some(epsilon);
    result.variance_clamped = clamped;
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}
