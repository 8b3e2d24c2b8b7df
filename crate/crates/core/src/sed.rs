//! Expected diameter of the smallest enclosing disk of a random subset of
//! planar points.
//!
//! The smallest enclosing disk `D(S)` is either the diametral disk of two
//! points of `S` or the circumdisk of three points forming a non-obtuse
//! triangle, and in both cases every other point of `S` lies inside it.
//! These candidate events are disjoint, so the expectation is a sum of
//! `diameter · P[candidate = D(S)]` over pairs and triples.
//!
//! For a pair `(p, q)`, every disk through `p` and `q` has its centre on the
//! bisector, `c(x) = m + x·v`, with `m` the midpoint and `v` the unit
//! normal. A third point `t` defines the parameter `x_t` of the disk
//! through `p, q, t`; a point `w` with `v·(w - m) > 0` lies inside `D(x)`
//! exactly when `x > x_w`, and one on the other side when `x < x_w`. After
//! sorting the candidates by `x_t`, inside counts and outside probability
//! products follow from prefix and suffix scans.

use std::time::Instant;

use crate::geometry::{distance, nearly_collinear};
use crate::tolerance::GEOMETRIC_REL;
use crate::{par, BinomialTable, Distribution, Error, Method, MomentResult, PointSet, Result};

/// `(a - apex)·(b - apex)`: negative exactly when the angle at `apex` is
/// obtuse, i.e. `apex` lies strictly inside the diametral disk of `ab`.
fn angle_dot(apex: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - apex[0]) * (b[0] - apex[0]) + (a[1] - apex[1]) * (b[1] - apex[1])
}

fn check_planar(points: &PointSet) -> Result<()> {
    if points.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "smallest enclosing disk is computed in the plane, got d = {}",
            points.dim()
        )));
    }
    Ok(())
}

/// Probability weights under a distribution, shared by both candidate
/// kinds.
struct Weights<'a> {
    dist: &'a Distribution,
    binom: Option<BinomialTable>,
}

impl<'a> Weights<'a> {
    fn new(dist: &'a Distribution, n: usize) -> Self {
        let binom = matches!(dist, Distribution::FixedSize { .. }).then(|| BinomialTable::new(n));
        Weights { dist, binom }
    }

    /// Probability that exactly the `k` defining points are selected, all
    /// `inside` points are free, and everything else is unselected.
    /// `outside_pibar` is the Bernoulli product over the excluded points.
    fn event(&self, defining: &[usize], inside: usize, outside_pibar: impl FnOnce() -> f64) -> f64 {
        match (self.dist, &self.binom) {
            (Distribution::FixedSize { s }, Some(binom)) => {
                let k = defining.len();
                if *s < k {
                    0.0
                } else {
                    binom.choose_ratio(inside, s - k, *s)
                }
            }
            (Distribution::Bernoulli(m), _) => m.pi_product(defining) * outside_pibar(),
            _ => unreachable!("fixed-size weights carry a binomial table"),
        }
    }

    fn pibar(&self, i: usize) -> f64 {
        match self.dist {
            Distribution::Bernoulli(m) => 1.0 - m.prob(i),
            Distribution::FixedSize { .. } => 1.0,
        }
    }
}

/// `Σ_{p<q} value(p, q)·P[diametral disk of pq is D(S)]`.
fn pair_sum(points: &PointSet, weights: &Weights, diameters: bool) -> f64 {
    let n = points.len();
    par::sum_indexed(n, |p| {
        let pp = points.point(p);
        let mut total = 0.0;
        for q in p + 1..n {
            let pq = points.point(q);
            let mut inside = 0;
            let mut excluded = Vec::new();
            for w in (0..n).filter(|&w| w != p && w != q) {
                if angle_dot(points.point(w), pp, pq) < 0.0 {
                    inside += 1;
                } else {
                    excluded.push(w);
                }
            }
            let prob = weights.event(&[p, q], inside, || excluded.iter().map(|&w| weights.pibar(w)).product());
            total += prob * if diameters { distance(pp, pq) } else { 1.0 };
        }
        total
    })
}

/// Sum of the diameters (or unit weights) of the two-point candidates,
/// weighted by their probability of being the smallest enclosing disk.
pub fn two_point_contribution(points: &PointSet, dist: &Distribution) -> Result<f64> {
    check_planar(points)?;
    dist.validate(points.len())?;
    Ok(pair_sum(points, &Weights::new(dist, points.len()), true))
}

/// A candidate third point in the frame of a pair.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    index: usize,
    /// Centre parameter of the disk through `p, q, t`.
    x: f64,
    /// `t` lies on the side the normal points to.
    plus: bool,
}

/// `Σ_t value(p, q, t)·P[circumdisk of pqt is D(S)]` over third points
/// `t > q` forming a non-obtuse triangle with `p` and `q`.
fn triple_sweep(p: usize, q: usize, points: &PointSet, weights: &Weights, diameters: bool) -> Result<f64> {
    let n = points.len();
    let (pp, pq) = (points.point(p), points.point(q));
    let m = [(pp[0] + pq[0]) / 2.0, (pp[1] + pq[1]) / 2.0];
    let h = distance(pp, pq) / 2.0;
    let v = [-(pq[1] - pp[1]) / (2.0 * h), (pq[0] - pp[0]) / (2.0 * h)];
    let mut cands = Vec::with_capacity(n.saturating_sub(2));
    for t in (0..n).filter(|&t| t != p && t != q) {
        let pt = points.point(t);
        if nearly_collinear(pp, pq, pt) {
            return Err(Error::Degenerate(format!("points {p}, {q} and {t} are collinear")));
        }
        let (dx, dy) = (pt[0] - m[0], pt[1] - m[1]);
        let a = v[0] * dx + v[1] * dy;
        let x = (dx * dx + dy * dy - h * h) / (2.0 * a);
        cands.push(Candidate { index: t, x, plus: a > 0.0 });
    }
    cands.sort_by(|a, b| a.x.total_cmp(&b.x));
    for w in cands.windows(2) {
        let tol = GEOMETRIC_REL * (h + w[0].x.abs() + w[1].x.abs());
        if w[1].x - w[0].x <= tol {
            return Err(Error::Degenerate(format!(
                "points {p}, {q}, {} and {} are concyclic",
                w[0].index, w[1].index
            )));
        }
    }
    let k = cands.len();
    // minus_before[i]: Π pibar over minus-side candidates before i;
    // plus_after[i]: Π pibar over plus-side candidates after i.
    let mut minus_before = vec![1.0; k + 1];
    for i in 0..k {
        minus_before[i + 1] = minus_before[i] * if cands[i].plus { 1.0 } else { weights.pibar(cands[i].index) };
    }
    let mut plus_after = vec![1.0; k + 1];
    for i in (0..k).rev() {
        plus_after[i] = plus_after[i + 1] * if cands[i].plus { weights.pibar(cands[i].index) } else { 1.0 };
    }
    let mut plus_inside = 0;
    let mut minus_inside = cands.iter().filter(|c| !c.plus).count();
    let mut total = 0.0;
    for (i, c) in cands.iter().enumerate() {
        if !c.plus {
            minus_inside -= 1;
        }
        if i == 0 {
            // Explicit containment check of the first disk against the sweep.
            let centre = [m[0] + c.x * v[0], m[1] + c.x * v[1]];
            let r2 = h * h + c.x * c.x;
            let direct = cands[1..]
                .iter()
                .filter(|o| {
                    let po = points.point(o.index);
                    (po[0] - centre[0]).powi(2) + (po[1] - centre[1]).powi(2) < r2
                })
                .count();
            if direct != plus_inside + minus_inside {
                return Err(Error::Degenerate(format!(
                    "inconsistent containment in the sweep of points {p} and {q}"
                )));
            }
        }
        let t = c.index;
        let pt = points.point(t);
        let non_obtuse =
            angle_dot(pt, pp, pq) >= 0.0 && angle_dot(pp, pq, pt) >= 0.0 && angle_dot(pq, pp, pt) >= 0.0;
        if t > q && non_obtuse {
            let inside = plus_inside + minus_inside;
            let prob = weights.event(&[p, q, t], inside, || minus_before[i] * plus_after[i + 1]);
            let value = if diameters { 2.0 * (h * h + c.x * c.x).sqrt() } else { 1.0 };
            total += prob * value;
        }
        if c.plus {
            plus_inside += 1;
        }
    }
    Ok(total)
}

/// `F(p, q)`: the three-point candidates through `p` and `q` whose third
/// point has a larger index than both, weighted by diameter and
/// probability. Summed over all pairs `p < q`, every triple counts once.
pub fn triple_sweep_f(p: usize, q: usize, points: &PointSet, dist: &Distribution) -> Result<f64> {
    check_planar(points)?;
    dist.validate(points.len())?;
    if p == q || p >= points.len() || q >= points.len() {
        return Err(Error::InvalidArgument(format!("invalid pair ({p}, {q})")));
    }
    let (p, q) = (p.min(q), p.max(q));
    triple_sweep(p, q, points, &Weights::new(dist, points.len()), true)
}

fn candidate_sum(points: &PointSet, dist: &Distribution, diameters: bool) -> Result<f64> {
    check_planar(points)?;
    dist.validate(points.len())?;
    if points.len() < 2 {
        return Err(Error::InvalidArgument("smallest enclosing disk needs at least two points".into()));
    }
    if matches!(dist, Distribution::FixedSize { s } if *s < 2) {
        return Err(Error::InvalidArgument("fixed-size subsets need s >= 2".into()));
    }
    let n = points.len();
    let weights = Weights::new(dist, n);
    let pairs = pair_sum(points, &weights, diameters);
    let triples = par::map_indexed(n, |p| -> Result<f64> {
        let mut acc = 0.0;
        for q in p + 1..n {
            acc += triple_sweep(p, q, points, &weights, diameters)?;
        }
        Ok(acc)
    });
    let mut total = pairs;
    for t in triples {
        total += t?;
    }
    Ok(total)
}

/// Expected diameter of the smallest enclosing disk (mean only).
pub fn expected_sed_diameter(points: &PointSet, dist: &Distribution) -> Result<MomentResult> {
    let start = Instant::now();
    let mean = candidate_sum(points, dist, true)?;
    let mut result = MomentResult::new("sed", dist, Method::Exact, points.len(), 2);
    result.mean = mean;
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

/// Total probability of all two- and three-point candidate events, which
/// equals `P[|S| >= 2]`.
pub fn candidate_probability_mass(points: &PointSet, dist: &Distribution) -> Result<f64> {
    candidate_sum(points, dist, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_moments, MeasureKind};
    use crate::tolerance::rel_close;
    use crate::BernoulliModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
        let flat: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
        PointSet::from_flat(flat, 2).unwrap()
    }

    fn equilateral() -> PointSet {
        PointSet::new(&[[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]).unwrap()
    }

    #[test]
    fn two_points() {
        let p = PointSet::new(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        let r = expected_sed_diameter(&p, &Distribution::FixedSize { s: 2 }).unwrap();
        assert_eq!(r.mean, 5.0);
        assert_eq!(two_point_contribution(&p, &Distribution::FixedSize { s: 2 }).unwrap(), 5.0);
    }

    #[test]
    fn equilateral_triangle() {
        let p = equilateral();
        let two = two_point_contribution(&p, &Distribution::FixedSize { s: 2 }).unwrap();
        assert!((two - 1.0).abs() < 1e-12);
        let dist = Distribution::FixedSize { s: 3 };
        assert_eq!(two_point_contribution(&p, &dist).unwrap(), 0.0);
        let f = triple_sweep_f(0, 1, &p, &dist).unwrap();
        assert!((f - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        let r = expected_sed_diameter(&p, &dist).unwrap();
        assert!((r.mean - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triple_contributes_nothing() {
        let p = PointSet::new(&[[0.0, 0.0], [4.0, 0.1], [2.0, 0.5]]).unwrap();
        let dist = Distribution::FixedSize { s: 3 };
        assert_eq!(triple_sweep_f(0, 1, &p, &dist).unwrap(), 0.0);
        let r = expected_sed_diameter(&p, &dist).unwrap();
        assert!((r.mean - distance(p.point(0), p.point(1))).abs() < 1e-12);
    }

    #[test]
    fn right_triangle() {
        let p = PointSet::new(&[[0.0, 0.0], [4.0, 0.001], [0.0, 3.0]]).unwrap();
        let r = expected_sed_diameter(&p, &Distribution::FixedSize { s: 3 }).unwrap();
        assert!((r.mean - 5.0).abs() < 1e-3);
    }

    #[test]
    fn matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..40 {
            let n = 2 + trial % 9;
            let p = random_points(&mut rng, n);
            let m = BernoulliModel::new((0..n).map(|_| rng.random_range(0.05..0.95)).collect()).unwrap();
            let dist = Distribution::Bernoulli(m);
            let truth = oracle_moments(&p, &dist, MeasureKind::SedDiameter).unwrap().mean;
            let got = expected_sed_diameter(&p, &dist).unwrap().mean;
            assert!(rel_close(got, truth, 1e-9, 1e-12), "n={n}: {got} vs {truth}");
            for s in 2..=n {
                let dist = Distribution::FixedSize { s };
                let truth = oracle_moments(&p, &dist, MeasureKind::SedDiameter).unwrap().mean;
                let got = expected_sed_diameter(&p, &dist).unwrap().mean;
                assert!(rel_close(got, truth, 1e-9, 1e-12), "n={n} s={s}: {got} vs {truth}");
            }
        }
    }

    #[test]
    fn candidate_events_partition_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=12 {
            let p = random_points(&mut rng, n);
            for s in 2..=n {
                let mass = candidate_probability_mass(&p, &Distribution::FixedSize { s }).unwrap();
                assert!((mass - 1.0).abs() < 1e-9, "n={n} s={s}: {mass}");
            }
            let probs: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
            let at_most_one: f64 = probs.iter().map(|x| 1.0 - x).product::<f64>()
                * (1.0 + probs.iter().map(|x| x / (1.0 - x)).sum::<f64>());
            let m = BernoulliModel::new(probs).unwrap();
            let mass = candidate_probability_mass(&p, &Distribution::Bernoulli(m)).unwrap();
            assert!((mass - (1.0 - at_most_one)).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_points(&mut rng, 9);
        let dist = Distribution::FixedSize { s: 4 };
        let a = expected_sed_diameter(&p, &dist).unwrap().mean;
        let b = expected_sed_diameter(&p.map_coords(|_, v| 2.5 * v), &dist).unwrap().mean;
        assert!(rel_close(b, 2.5 * a, 1e-12, 1e-12));
    }

    #[test]
    fn degenerate_inputs() {
        let p = PointSet::new(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        assert!(matches!(
            expected_sed_diameter(&p, &Distribution::FixedSize { s: 2 }),
            Err(Error::Degenerate(_))
        ));
        let p = PointSet::new(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!(matches!(
            expected_sed_diameter(&p, &Distribution::FixedSize { s: 3 }),
            Err(Error::Degenerate(_))
        ));
        let p = PointSet::new(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(
            expected_sed_diameter(&p, &Distribution::FixedSize { s: 2 }),
            Err(Error::Unsupported(_))
        ));
    }
}
