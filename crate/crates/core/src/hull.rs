//! Expected convex-hull volume as a signed sum of simplex volumes.
//!
//! Fix an origin `O` outside the hull of `P`. For a subset `S`, every facet
//! `F_Z` of `CH(S)` spans a simplex with `O`. Facets whose remaining points
//! lie on `O`'s side (upper facets) cover the hull plus the region between
//! `O` and the hull; the other facets (lower) cover exactly that region. So
//! `vol(CH(S)) = Σ_upper vol(O, Z) - Σ_lower vol(O, Z)`, and by linearity
//! the expectation is a sum over all `d`-subsets `Z` of `P` weighted by the
//! probability of each role.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use crate::geometry::{next_combination, nearly_collinear, orient2d, signed_simplex_det, simplex_volume};
use crate::tolerance::GEOMETRIC_REL;
use crate::{par, BinomialTable, Distribution, Error, Method, MomentResult, PointSet, Result, SizeRow};

/// Largest dimension of the shipped engine.
pub const MAX_HULL_DIM: usize = 3;

/// Offsets in `(0, 1)` derived from the golden ratio, one per axis.
fn axis_offset(k: usize) -> f64 {
    (0.5 + (k as f64 + 1.0) * 0.618_033_988_749_894_9).fract()
}

/// A point strictly outside the bounding box of `points`: below the minimum
/// of every axis by between half and one and a half times the box extent.
pub fn choose_origin(points: &PointSet) -> Vec<f64> {
    points
        .bounds()
        .iter()
        .enumerate()
        .map(|(k, &(lo, hi))| {
            let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
            lo - span * (0.5 + axis_offset(k))
        })
        .collect()
}

/// A `d`-subset `Z` of the points and how the rest split around its
/// hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetCandidate {
    pub vertices: Vec<usize>,
    /// Points strictly on the origin's side.
    pub same_side: Vec<usize>,
    /// Points strictly on the other side.
    pub opposite: Vec<usize>,
    /// Volume of the simplex spanned by `O` and `Z`.
    pub volume: f64,
}

/// Probabilities that the candidate is an upper and a lower facet of the
/// hull of the random subset.
pub fn facet_probability(fc: &FacetCandidate, dist: &Distribution, binom: &BinomialTable) -> (f64, f64) {
    let d = fc.vertices.len();
    match dist {
        Distribution::FixedSize { s } => {
            if *s < d {
                return (0.0, 0.0);
            }
            (
                binom.choose_ratio(fc.same_side.len(), s - d, *s),
                binom.choose_ratio(fc.opposite.len(), s - d, *s),
            )
        }
        Distribution::Bernoulli(m) => {
            let pz = m.pi_product(&fc.vertices);
            (pz * m.pibar_product(&fc.opposite), pz * m.pibar_product(&fc.same_side))
        }
    }
}

fn degenerate(vertices: &[usize], k: usize) -> Error {
    Error::Degenerate(format!("point {k} lies on the hyperplane through points {vertices:?}"))
}

/// Side of `x` relative to the hyperplane through `z`, or `None` when `x`
/// is within the tolerance band of it.
fn side(z: &[&[f64]], x: &[f64]) -> Option<bool> {
    let mut verts: Vec<&[f64]> = z.to_vec();
    verts.push(x);
    let det = signed_simplex_det(&verts);
    let base = z[0];
    let scale: f64 = verts[1..]
        .iter()
        .map(|v| v.iter().zip(base).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .product();
    if det.abs() <= GEOMETRIC_REL * scale {
        None
    } else {
        Some(det > 0.0)
    }
}

/// Classifies every point against the hyperplane through `vertices`.
fn build_candidate(points: &PointSet, origin: &[f64], vertices: &[usize]) -> Result<FacetCandidate> {
    let z: Vec<&[f64]> = vertices.iter().map(|&i| points.point(i)).collect();
    let mut simplex = vec![origin];
    simplex.extend(&z);
    let volume = simplex_volume(&simplex)?;
    let origin_side = side(&z, origin);
    let mut fc = FacetCandidate { vertices: vertices.to_vec(), same_side: vec![], opposite: vec![], volume };
    for k in 0..points.len() {
        if vertices.contains(&k) {
            continue;
        }
        let sk = side(&z, points.point(k)).ok_or_else(|| degenerate(vertices, k))?;
        // An origin on the hyperplane makes the simplex flat; its side is moot.
        if origin_side.is_none_or(|o| o == sk) {
            fc.same_side.push(k);
        } else {
            fc.opposite.push(k);
        }
    }
    Ok(fc)
}

/// All `C(n, d)` facet candidates for the given origin.
pub fn facet_candidates(points: &PointSet, origin: &[f64]) -> Result<Vec<FacetCandidate>> {
    let (n, d) = (points.len(), points.dim());
    if n < d {
        return Ok(Vec::new());
    }
    let mut idx: Vec<usize> = (0..d).collect();
    let mut out = Vec::new();
    loop {
        out.push(build_candidate(points, origin, &idx)?);
        if !next_combination(&mut idx, n) {
            return Ok(out);
        }
    }
}

/// What an engine accumulates over facet candidates.
#[derive(Debug, Clone)]
enum Accumulator {
    /// `Σ vol·(p_up - p_low)` for one Bernoulli model.
    Bernoulli(f64),
    /// `net[m]`: volume of candidates with `m` points on the origin side
    /// minus volume of those with `m` points opposite.
    Counts(Vec<f64>),
}

impl Accumulator {
    fn new(dist: &Distribution, n: usize) -> Self {
        match dist {
            Distribution::Bernoulli(_) => Accumulator::Bernoulli(0.0),
            Distribution::FixedSize { .. } => Accumulator::Counts(vec![0.0; n + 1]),
        }
    }

    fn merge(&mut self, other: Accumulator) {
        match (self, other) {
            (Accumulator::Bernoulli(a), Accumulator::Bernoulli(b)) => *a += b,
            (Accumulator::Counts(a), Accumulator::Counts(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
            _ => unreachable!("accumulators of one engine share a kind"),
        }
    }
}

fn check_dim(points: &PointSet) -> Result<()> {
    if points.dim() > MAX_HULL_DIM {
        return Err(Error::Unsupported(format!(
            "hull volume is available for d <= {MAX_HULL_DIM}, got d = {}",
            points.dim()
        )));
    }
    Ok(())
}

/// Candidates whose first vertex is `first`, in the generic engine.
fn accumulate_from(points: &PointSet, origin: &[f64], dist: &Distribution, first: usize) -> Result<Accumulator> {
    let (n, d) = (points.len(), points.dim());
    let mut acc = Accumulator::new(dist, n);
    let rest = n - first - 1;
    if rest < d - 1 {
        return Ok(acc);
    }
    let mut tail: Vec<usize> = (0..d - 1).collect();
    loop {
        let mut vertices = vec![first];
        vertices.extend(tail.iter().map(|t| t + first + 1));
        let fc = build_candidate(points, origin, &vertices)?;
        match (&mut acc, dist) {
            (Accumulator::Bernoulli(sum), Distribution::Bernoulli(m)) => {
                let pz = m.pi_product(&fc.vertices);
                *sum += fc.volume * pz * (m.pibar_product(&fc.opposite) - m.pibar_product(&fc.same_side));
            }
            (Accumulator::Counts(net), _) => {
                net[fc.same_side.len()] += fc.volume;
                net[fc.opposite.len()] -= fc.volume;
            }
            _ => unreachable!(),
        }
        if d == 1 || !next_combination(&mut tail, rest) {
            return Ok(acc);
        }
    }
}

/// Planar candidates `(i, j)` with `j > i`, by a radial sweep around `i`.
fn accumulate_pivot_2d(points: &PointSet, origin: &[f64], dist: &Distribution, i: usize) -> Result<Accumulator> {
    let n = points.len();
    let mut acc = Accumulator::new(dist, n);
    let pi = points.point(i);
    let mut others: Vec<(f64, usize)> = (0..n)
        .filter(|&k| k != i)
        .map(|k| {
            let p = points.point(k);
            ((p[1] - pi[1]).atan2(p[0] - pi[0]), k)
        })
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = others.len();
    let angle = |t: usize| others[t % m].0 + if t >= m { TAU } else { 0.0 };
    // Prefix sums of ln(1 - π) over the doubled circular order.
    let log_prefix: Vec<f64> = match dist {
        Distribution::Bernoulli(model) => {
            let mut v = Vec::with_capacity(2 * m + 1);
            v.push(0.0);
            for t in 0..2 * m {
                let last = v[t];
                v.push(last + (1.0 - model.prob(others[t % m].1)).ln());
            }
            v
        }
        Distribution::FixedSize { .. } => Vec::new(),
    };
    let mut end = 0;
    for a in 0..m {
        let j = others[a].1;
        end = end.max(a + 1);
        while end < a + m && angle(end) < angle(a) + PI {
            end += 1;
        }
        if j < i {
            continue;
        }
        let pj = points.point(j);
        // Collinear points can only sit next to the window boundaries.
        for t in [a + m - 1, a + 1, end - 1, end] {
            let k = others[t % m].1;
            if k != j && nearly_collinear(pi, pj, points.point(k)) {
                return Err(degenerate(&[i, j], k));
            }
        }
        let left = end - a - 1;
        let right = m - 1 - left;
        let volume = orient2d(origin, pi, pj).abs() / 2.0;
        let origin_left = orient2d(pi, pj, origin) > 0.0;
        match (&mut acc, dist) {
            (Accumulator::Bernoulli(sum), Distribution::Bernoulli(model)) => {
                let ln_left = log_prefix[end] - log_prefix[a + 1];
                let ln_right = log_prefix[a + m] - log_prefix[end];
                let (ln_same, ln_opp) = if origin_left { (ln_left, ln_right) } else { (ln_right, ln_left) };
                let pz = model.prob(i) * model.prob(j);
                *sum += volume * pz * (ln_opp.exp() - ln_same.exp());
            }
            (Accumulator::Counts(net), _) => {
                let (same, opp) = if origin_left { (left, right) } else { (right, left) };
                net[same] += volume;
                net[opp] -= volume;
            }
            _ => unreachable!(),
        }
    }
    Ok(acc)
}

fn accumulate(points: &PointSet, origin: &[f64], dist: &Distribution) -> Result<Accumulator> {
    let n = points.len();
    let cells = par::map_indexed(n, |i| {
        if points.dim() == 2 {
            accumulate_pivot_2d(points, origin, dist, i)
        } else {
            accumulate_from(points, origin, dist, i)
        }
    });
    let mut acc = Accumulator::new(dist, n);
    for c in cells {
        acc.merge(c?);
    }
    Ok(acc)
}

fn count_rows(net: &[f64], n: usize, d: usize) -> Vec<SizeRow> {
    let binom = BinomialTable::new(n);
    (1..=n)
        .map(|s| {
            let mean = if s <= d {
                0.0
            } else {
                net.iter().enumerate().map(|(m, &v)| v * binom.choose_ratio(m, s - d, s)).sum()
            };
            SizeRow { s, mean, variance: None }
        })
        .collect()
}

/// Expected hull volume of a uniform `s`-subset for every `1 <= s <= n`.
pub fn expected_hull_volume_table(points: &PointSet) -> Result<MomentResult> {
    check_dim(points)?;
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let start = Instant::now();
    let (n, d) = (points.len(), points.dim());
    let centered = points.centered();
    let origin = choose_origin(&centered);
    let Accumulator::Counts(net) = accumulate(&centered, &origin, &Distribution::FixedSize { s: n })? else {
        unreachable!()
    };
    let mut result = MomentResult::from_table("hull", Method::Exact, n, d, count_rows(&net, n, d));
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// Expected hull volume (mean only) under either model.
pub fn expected_hull_volume(points: &PointSet, dist: &Distribution) -> Result<MomentResult> {
    let origin = choose_origin(&points.centered());
    let mid: Vec<f64> = points.bounds().iter().map(|(lo, hi)| (lo + hi) / 2.0).collect();
    let origin: Vec<f64> = origin.iter().zip(&mid).map(|(o, m)| o + m).collect();
    expected_hull_volume_with_origin(points, dist, &origin)
}

/// [`expected_hull_volume`] with a caller-chosen origin, which must lie
/// outside the convex hull of the points.
pub fn expected_hull_volume_with_origin(points: &PointSet, dist: &Distribution, origin: &[f64]) -> Result<MomentResult> {
    check_dim(points)?;
    dist.validate(points.len())?;
    if origin.len() != points.dim() {
        return Err(Error::DimensionMismatch { expected: points.dim(), found: origin.len() });
    }
    let start = Instant::now();
    let (n, d) = (points.len(), points.dim());
    let mid: Vec<f64> = points.bounds().iter().map(|(lo, hi)| -(lo + hi) / 2.0).collect();
    let centered = points.translated(&mid);
    let origin: Vec<f64> = origin.iter().zip(&mid).map(|(o, m)| o + m).collect();
    let mut result = MomentResult::new("hull", dist, Method::Exact, n, d);
    result.mean = match (accumulate(&centered, &origin, dist)?, dist) {
        (Accumulator::Bernoulli(sum), _) => sum,
        (Accumulator::Counts(net), Distribution::FixedSize { s }) => {
            if *s <= d {
                0.0
            } else {
                let binom = BinomialTable::new(n);
                net.iter().enumerate().map(|(m, &v)| v * binom.choose_ratio(m, s - d, *s)).sum()
            }
        }
        _ => unreachable!(),
    };
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_moments, oracle_size_table, MeasureKind};
    use crate::tolerance::rel_close;
    use crate::BernoulliModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PointSet {
        let flat: Vec<f64> = (0..n * d).map(|_| rng.random_range(0.0..1.0)).collect();
        PointSet::from_flat(flat, d).unwrap()
    }

    fn random_model(rng: &mut ChaCha8Rng, n: usize) -> BernoulliModel {
        BernoulliModel::new((0..n).map(|_| rng.random_range(0.05..0.95)).collect()).unwrap()
    }

    #[test]
    fn origin_outside_box() {
        let p = PointSet::new(&[[5.0, 5.0]]).unwrap();
        let o = choose_origin(&p);
        assert!(o[0] < 5.0 && o[1] < 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_points(&mut rng, 20, 3);
        let o = choose_origin(&p);
        for (k, (lo, _)) in p.bounds().into_iter().enumerate() {
            assert!(o[k] < lo);
        }
    }

    #[test]
    fn triangle_area() {
        let p = PointSet::new(&[[0.0, 0.0], [2.0, 1.0], [1.0, 3.0]]).unwrap();
        let r = expected_hull_volume(&p, &Distribution::FixedSize { s: 3 }).unwrap();
        assert!((r.mean - 2.5).abs() < 1e-12);
        let r = expected_hull_volume(&p, &Distribution::FixedSize { s: 2 }).unwrap();
        assert_eq!(r.mean, 0.0);
    }

    #[test]
    fn facet_probability_examples() {
        let p = PointSet::new(&[[0.0, 0.0], [2.0, 1.0]]).unwrap();
        let o = choose_origin(&p);
        let fcs = facet_candidates(&p, &o).unwrap();
        let binom = BinomialTable::new(2);
        let (up, low) = facet_probability(&fcs[0], &Distribution::FixedSize { s: 2 }, &binom);
        assert_eq!((up, low), (1.0, 1.0));

        let p = PointSet::new(&[[0.0, 0.0], [2.0, 1.0], [1.0, 3.0]]).unwrap();
        let m = BernoulliModel::new(vec![0.3, 0.4, 0.5]).unwrap();
        let dist = Distribution::Bernoulli(m);
        for fc in facet_candidates(&p, &choose_origin(&p)).unwrap() {
            let (up, _) = facet_probability(&fc, &dist, &BinomialTable::new(3));
            if fc.opposite.is_empty() {
                let pz: f64 = fc.vertices.iter().map(|&v| [0.3, 0.4, 0.5][v]).product();
                assert!((up - pz).abs() < 1e-15);
            }
        }
    }

    /// Upper/lower role of each candidate, counted over all `s`-subsets.
    #[test]
    fn facet_probabilities_match_enumeration() {
        let p = PointSet::new(&[[0.0, 0.0], [4.0, 0.3], [1.5, 3.0], [1.8, 1.1]]).unwrap();
        let o = choose_origin(&p);
        let n = 4;
        let binom = BinomialTable::new(n);
        for s in 2..=4 {
            let dist = Distribution::FixedSize { s };
            for fc in facet_candidates(&p, &o).unwrap() {
                let (mut up, mut low, mut total) = (0.0, 0.0, 0.0);
                for mask in 0u32..1 << n {
                    if mask.count_ones() as usize != s {
                        continue;
                    }
                    total += 1.0;
                    if fc.vertices.iter().any(|&v| mask & (1 << v) == 0) {
                        continue;
                    }
                    let others = (0..n).filter(|&k| mask & (1 << k) != 0 && !fc.vertices.contains(&k));
                    let (mut all_same, mut all_opp) = (true, true);
                    for k in others {
                        all_same &= fc.same_side.contains(&k);
                        all_opp &= fc.opposite.contains(&k);
                    }
                    up += f64::from(u8::from(all_same));
                    low += f64::from(u8::from(all_opp));
                }
                let (pu, pl) = facet_probability(&fc, &dist, &binom);
                assert!((pu - up / total).abs() < 1e-15);
                assert!((pl - low / total).abs() < 1e-15);
            }
        }
    }

    /// `Σ_Z p_up` against the enumerated count of back-facing hull edges.
    #[test]
    fn expected_upper_facet_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 9;
        let p = random_points(&mut rng, n, 2);
        let o = choose_origin(&p);
        let binom = BinomialTable::new(n);
        let fcs = facet_candidates(&p, &o).unwrap();
        for s in 3..=n {
            let dist = Distribution::FixedSize { s };
            let predicted: f64 = fcs.iter().map(|fc| facet_probability(fc, &dist, &binom).0).sum();
            let (mut count, mut total) = (0.0, 0.0);
            for mask in 0u32..1 << n {
                if mask.count_ones() as usize != s {
                    continue;
                }
                total += 1.0;
                let idx: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
                for a in 0..idx.len() {
                    for b in 0..idx.len() {
                        if a == b {
                            continue;
                        }
                        let (pa, pb) = (p.point(idx[a]), p.point(idx[b]));
                        // Hull edge a->b in counter-clockwise order.
                        let edge = idx.iter().all(|&k| k == idx[a] || k == idx[b] || orient2d(pa, pb, p.point(k)) > 0.0);
                        if edge && orient2d(pa, pb, &o) > 0.0 {
                            count += 1.0;
                        }
                    }
                }
            }
            assert!((predicted - count / total).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn engines_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..30 {
            let d = 2 + trial % 2;
            let n = 1 + trial % if d == 2 { 12 } else { 10 };
            let p = random_points(&mut rng, n, d);
            let m = random_model(&mut rng, n);
            let dist = Distribution::Bernoulli(m);
            let truth = oracle_moments(&p, &dist, MeasureKind::ConvexHullVolume).unwrap().mean;
            let got = expected_hull_volume(&p, &dist).unwrap().mean;
            assert!(rel_close(got, truth, 1e-9, 1e-12), "d={d} n={n}: {got} vs {truth}");
            let table = oracle_size_table(&p, MeasureKind::ConvexHullVolume).unwrap();
            for row in expected_hull_volume_table(&p).unwrap().per_s.unwrap() {
                assert!(rel_close(row.mean, table[row.s].mean, 1e-9, 1e-12), "s={}", row.s);
            }
        }
    }

    #[test]
    fn one_dimension_is_range_length() {
        let p = PointSet::from_flat(vec![0.3, 2.0, -1.0, 0.9], 1).unwrap();
        let table = oracle_size_table(&p, MeasureKind::BBoxVolume).unwrap();
        for row in expected_hull_volume_table(&p).unwrap().per_s.unwrap() {
            assert!(rel_close(row.mean, table[row.s].mean, 1e-12, 1e-12));
        }
    }

    #[test]
    fn origin_and_translation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 2..=3 {
            let p = random_points(&mut rng, 9, d);
            let m = random_model(&mut rng, 9);
            let dist = Distribution::Bernoulli(m);
            let a = expected_hull_volume(&p, &dist).unwrap().mean;
            let far: Vec<f64> = (0..d).map(|k| -3.0 - k as f64 * 0.37).collect();
            let b = expected_hull_volume_with_origin(&p, &dist, &far).unwrap().mean;
            assert!(rel_close(a, b, 1e-9, 1e-12));
            let shift: Vec<f64> = (0..d).map(|k| 100.0 + k as f64).collect();
            let c = expected_hull_volume(&p.translated(&shift), &dist).unwrap().mean;
            assert!(rel_close(a, c, 1e-9, 1e-12));
        }
    }

    #[test]
    fn table_is_nondecreasing_and_zero_at_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_points(&mut rng, 40, 2);
        let rows = expected_hull_volume_table(&p).unwrap().per_s.unwrap();
        assert_eq!(rows[1].mean, 0.0);
        for w in rows.windows(2) {
            assert!(w[1].mean >= w[0].mean - 1e-12);
        }
        let last = rows.last().unwrap().mean;
        let direct = crate::oracle::eval_measure(MeasureKind::ConvexHullVolume, &p, &(0..40).collect::<Vec<_>>()).unwrap();
        assert!(rel_close(last, direct, 1e-9, 1e-12));
    }

    #[test]
    fn degenerate_and_scope_errors() {
        let p = PointSet::new(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(expected_hull_volume_table(&p), Err(Error::Degenerate(_))));
        let p = PointSet::new(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.2, 0.3, 1.0]]).unwrap();
        assert!(matches!(expected_hull_volume_table(&p), Err(Error::Degenerate(_))));
        let p = PointSet::new(&[[0.0; 4]]).unwrap();
        assert!(matches!(expected_hull_volume_table(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn large_bernoulli_stays_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = random_points(&mut rng, 600, 2);
        let dist = Distribution::Bernoulli(BernoulliModel::uniform(600, 0.9).unwrap());
        let r = expected_hull_volume(&p, &dist).unwrap();
        assert!(r.mean.is_finite() && r.mean > 0.5 && r.mean <= 1.0);
    }
}
