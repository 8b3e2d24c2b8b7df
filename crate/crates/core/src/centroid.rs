//! Mean and variance of the mean squared centroid distance under the
//! fixed-size model, for every subset size at once.
//!
//! With `X = Σ_{p∈S} ‖p‖²` and `Y = ‖Σ_{p∈S} p‖²` we have
//! `CD(S) = X/s - Y/s²`. Both moments reduce to expectations of sums over
//! ordered tuples of selected points. A tuple whose entries fall into `k`
//! distinct points is selected with probability `C(n-k, s-k)/C(n, s)`, so
//! each expectation is `Σ_k c_k·C(n-k, s-k)/C(n, s)` where `c_k` sums the
//! tuple products over all coincidence patterns with `k` distinct points.
//! Sums over distinct points come from unrestricted power sums by Möbius
//! inversion on the lattice of set partitions.

use std::time::Instant;

use crate::prob::variance_from_moments;
use crate::{BinomialTable, Error, Method, MomentResult, PointSet, Result, SizeRow};

/// One point slot of a tuple sum: exponents on the two summed dimensions.
type Slot = (usize, usize);

/// `X²`: `Σ_{i,j} Σ_{g,h} g_i² h_j²`.
const X_SQUARED: &[Slot] = &[(2, 0), (0, 2)];
/// `X·Y`: `Σ_{i,j} Σ_{g,q,r} g_i² q_j r_j`.
const X_TIMES_Y: &[Slot] = &[(2, 0), (0, 1), (0, 1)];
/// `Y²`: `Σ_{i,j} Σ_{p,q,r,t} p_i q_i r_j t_j`.
const Y_SQUARED: &[Slot] = &[(1, 0), (1, 0), (0, 1), (0, 1)];

/// `T[a][b][i][j] = Σ_x x_i^a x_j^b` for `a, b <= 2`.
#[derive(Debug, Clone)]
pub struct PowerSums {
    d: usize,
    sums: Vec<f64>,
}

impl PowerSums {
    pub fn new(points: &PointSet) -> Self {
        let d = points.dim();
        let mut sums = vec![0.0; 9 * d * d];
        for x in points.iter() {
            for i in 0..d {
                let pi = [1.0, x[i], x[i] * x[i]];
                for j in 0..d {
                    let pj = [1.0, x[j], x[j] * x[j]];
                    for a in 0..3 {
                        for b in 0..3 {
                            sums[((a * 3 + b) * d + i) * d + j] += pi[a] * pj[b];
                        }
                    }
                }
            }
        }
        PowerSums { d, sums }
    }

    pub fn get(&self, a: usize, b: usize, i: usize, j: usize) -> f64 {
        self.sums[((a * 3 + b) * self.d + i) * self.d + j]
    }
}

/// All set partitions of `m` slots as restricted growth strings.
fn set_partitions(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; m];
    loop {
        out.push(labels.clone());
        // Next restricted growth string: bump the last position that may grow.
        let mut k = m;
        loop {
            if k <= 1 {
                return out;
            }
            k -= 1;
            let max_prefix = labels[..k].iter().copied().max().unwrap_or(0);
            if labels[k] <= max_prefix {
                labels[k] += 1;
                labels[k + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
        }
    }
}

fn block_count(p: &[usize]) -> usize {
    p.iter().copied().max().map_or(0, |m| m + 1)
}

/// Whether `coarse` merges blocks of `fine` only.
fn refines(fine: &[usize], coarse: &[usize]) -> bool {
    (0..fine.len()).all(|a| (0..fine.len()).all(|b| fine[a] != fine[b] || coarse[a] == coarse[b]))
}

/// Möbius function of the partition lattice between `fine <= coarse`.
fn mobius(fine: &[usize], coarse: &[usize]) -> f64 {
    (0..block_count(coarse))
        .map(|c| {
            let mut merged: Vec<usize> = (0..fine.len()).filter(|&a| coarse[a] == c).map(|a| fine[a]).collect();
            merged.sort_unstable();
            merged.dedup();
            let b = merged.len();
            let fact: f64 = (1..b).map(|x| x as f64).product();
            if b % 2 == 1 { fact } else { -fact }
        })
        .product()
}

/// Unrestricted tuple sum with slots merged per `partition`.
fn unrestricted(sums: &PowerSums, slots: &[Slot], partition: &[usize]) -> f64 {
    let blocks: Vec<Slot> = (0..block_count(partition))
        .map(|c| {
            slots
                .iter()
                .zip(partition)
                .filter(|(_, &l)| l == c)
                .fold((0, 0), |(a, b), (s, _)| (a + s.0, b + s.1))
        })
        .collect();
    let d = sums.d;
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            total += blocks.iter().map(|&(a, b)| sums.get(a, b, i, j)).product::<f64>();
        }
    }
    total
}

/// `c_k` for `k = 0..=4`: tuple sums over patterns with `k` distinct points.
fn coincidence_coefficients(sums: &PowerSums, slots: &[Slot]) -> [f64; 5] {
    let parts = set_partitions(slots.len());
    let u: Vec<f64> = parts.iter().map(|p| unrestricted(sums, slots, p)).collect();
    let mut c = [0.0; 5];
    for fine in &parts {
        let distinct: f64 = parts
            .iter()
            .zip(&u)
            .filter(|(coarse, _)| refines(fine, coarse))
            .map(|(coarse, &uc)| mobius(fine, coarse) * uc)
            .sum();
        c[block_count(fine)] += distinct;
    }
    c
}

fn expectation(c: &[f64; 5], binom: &BinomialTable, s: usize) -> f64 {
    (1..5).map(|k| c[k] * binom.inclusion_ratio(k, s)).sum()
}

/// Mean and variance of `CD(S)` for a uniform `s`-subset, every
/// `1 <= s <= n`.
pub fn centroid_moments(points: &PointSet) -> Result<MomentResult> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let start = Instant::now();
    let (n, d) = (points.len(), points.dim());
    let mean_point: Vec<f64> = (0..d).map(|k| -points.column(k).iter().sum::<f64>() / n as f64).collect();
    let centered = points.translated(&mean_point);
    let sums = PowerSums::new(&centered);

    let norm_sq: f64 = (0..d).map(|i| sums.get(2, 0, i, i)).sum();
    let total_sq: f64 = (0..d).map(|i| sums.get(1, 0, i, i).powi(2)).sum();
    let cross = total_sq - norm_sq;

    let x2 = coincidence_coefficients(&sums, X_SQUARED);
    let xy = coincidence_coefficients(&sums, X_TIMES_Y);
    let y2 = coincidence_coefficients(&sums, Y_SQUARED);
    let binom = BinomialTable::new(n);

    let mut clamped = false;
    let rows = (1..=n)
        .map(|s| {
            if s == 1 {
                return SizeRow { s, mean: 0.0, variance: Some(0.0) };
            }
            let sf = s as f64;
            let r1 = binom.inclusion_ratio(1, s);
            let r2 = binom.inclusion_ratio(2, s);
            let ex = r1 * norm_sq;
            let ey = r1 * norm_sq + r2 * cross;
            let mean = ex / sf - ey / (sf * sf);
            if s == n {
                return SizeRow { s, mean, variance: Some(0.0) };
            }
            let second = expectation(&x2, &binom, s) / (sf * sf) - 2.0 * expectation(&xy, &binom, s) / sf.powi(3)
                + expectation(&y2, &binom, s) / sf.powi(4);
            let (variance, c) = variance_from_moments(second, mean);
            clamped |= c;
            SizeRow { s, mean, variance: Some(variance) }
        })
        .collect();
    let mut result = MomentResult::from_table("centroid", Method::Exact, n, d, rows);
    result.variance_clamped = clamped;
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}
