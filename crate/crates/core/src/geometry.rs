//! Geometric primitives shared by the measure engines and the oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tolerance::GEOMETRIC_REL;
use crate::{Error, Result};

/// A point in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("a point needs at least one coordinate".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coordinate {c}")));
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
}

impl PointSet {
    pub fn new<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.as_ref().len());
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty point set".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, dim)
    }

    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "point {} has a non-finite coordinate",
                i / dim
            )));
        }
        Ok(PointSet { coords, dim })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate `k` of every point.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.iter().map(|p| p[k]).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<PointSet> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::UnknownPoint(i));
            }
            coords.extend_from_slice(self.point(i));
        }
        PointSet::from_flat(coords, self.dim)
    }

    /// Applies `f` to every coordinate; `f` receives `(dimension, value)`.
    pub fn map_coords(&self, f: impl Fn(usize, f64) -> f64) -> PointSet {
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, &c)| f(i % self.dim, c))
            .collect();
        PointSet { coords, dim: self.dim }
    }

    pub fn translated(&self, offset: &[f64]) -> PointSet {
        self.map_coords(|k, c| c + offset[k])
    }

    /// Per-dimension `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.iter() {
            for (k, &c) in p.iter().enumerate() {
                b[k].0 = b[k].0.min(c);
                b[k].1 = b[k].1.max(c);
            }
        }
        b
    }

    /// Copy translated so that the bounding box is centred on the origin.
    pub fn centered(&self) -> PointSet {
        let mid: Vec<f64> = self.bounds().iter().map(|(lo, hi)| -(lo + hi) / 2.0).collect();
        self.translated(&mid)
    }

    /// First pair of points sharing a coordinate value, as `(dimension, i, j)`.
    pub fn find_shared_coordinate(&self) -> Option<(usize, usize, usize)> {
        let n = self.len();
        for k in 0..self.dim {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| self.point(a)[k].total_cmp(&self.point(b)[k]));
            for w in order.windows(2) {
                if self.point(w[0])[k] == self.point(w[1])[k] {
                    let (i, j) = (w[0].min(w[1]), w[0].max(w[1]));
                    return Some((k, i, j));
                }
            }
        }
        None
    }

    /// Checks the general-position assumption: distinct coordinate values per
    /// dimension and no `k+1` points on a common `(k-1)`-flat for `k <= d`.
    /// The affine part is exhaustive for `n <= 64` and sampled above that.
    pub fn check_general_position(&self) -> Result<()> {
        if let Some((k, i, j)) = self.find_shared_coordinate() {
            return Err(Error::Degenerate(format!(
                "points {i} and {j} share coordinate {} (value {})",
                k + 1,
                self.point(i)[k]
            )));
        }
        let n = self.len();
        for size in 3..=(self.dim + 1).min(n) {
            if n <= EXHAUSTIVE_GP_LIMIT {
                let mut idx: Vec<usize> = (0..size).collect();
                loop {
                    self.check_affine(&idx)?;
                    if !next_combination(&mut idx, n) {
                        break;
                    }
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(0x6765_6f6d);
                let mut idx = vec![0; size];
                for _ in 0..SAMPLED_GP_CHECKS {
                    sample_distinct(&mut rng, n, &mut idx);
                    self.check_affine(&idx)?;
                }
            }
        }
        Ok(())
    }

    fn check_affine(&self, idx: &[usize]) -> Result<()> {
        if affine_sine(self, idx) <= GEOMETRIC_REL {
            return Err(Error::Degenerate(format!(
                "points {idx:?} are affinely dependent"
            )));
        }
        Ok(())
    }
}

const EXHAUSTIVE_GP_LIMIT: usize = 64;
const SAMPLED_GP_CHECKS: usize = 100_000;

fn sample_distinct(rng: &mut ChaCha8Rng, n: usize, out: &mut [usize]) {
    let mut filled = 0;
    while filled < out.len() {
        let c = rng.random_range(0..n);
        if !out[..filled].contains(&c) {
            out[filled] = c;
            filled += 1;
        }
    }
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
pub fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Scale-free flatness of the simplex spanned by the indexed points:
/// `sqrt(det Gram(e_1..e_k)) / prod |e_i|`, zero iff they are affinely
/// dependent.
fn affine_sine(points: &PointSet, idx: &[usize]) -> f64 {
    let base = points.point(idx[0]);
    let edges: Vec<Vec<f64>> = idx[1..]
        .iter()
        .map(|&i| points.point(i).iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let k = edges.len();
    let norms: Vec<f64> = edges.iter().map(|e| dot(e, e).sqrt()).collect();
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            gram[a * k + b] = dot(&edges[a], &edges[b]) / (norms[a] * norms[b]);
        }
    }
    determinant(gram, k).max(0.0).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean distance without dimension checks.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean_distance(p: &Point, q: &Point) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    Ok(distance(p.coords(), q.coords()))
}

/// Determinant by Gaussian elimination with partial pivoting; `m` is
/// row-major `k x k`.
pub fn determinant(mut m: Vec<f64>, k: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| m[a * k + col].abs().total_cmp(&m[b * k + col].abs()))
            .unwrap_or(col);
        if m[pivot * k + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..k {
                m.swap(pivot * k + c, col * k + c);
            }
            det = -det;
        }
        let p = m[col * k + col];
        det *= p;
        for r in col + 1..k {
            let f = m[r * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    m[r * k + c] -= f * m[col * k + c];
                }
            }
        }
    }
    det
}

/// Signed `det(v_1 - v_0, ..., v_d - v_0)` for `d + 1` vertices in `R^d`.
pub fn signed_simplex_det(vertices: &[&[f64]]) -> f64 {
    let d = vertices.len() - 1;
    let base = vertices[0];
    let mut m = Vec::with_capacity(d * d);
    for v in &vertices[1..] {
        m.extend(v.iter().zip(base).map(|(a, b)| a - b));
    }
    determinant(m, d)
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// Volume of the simplex spanned by `d + 1` vertices in `R^d`.
pub fn simplex_volume(vertices: &[&[f64]]) -> Result<f64> {
    let d = vertices.first().map_or(0, |v| v.len());
    if d == 0 || vertices.len() != d + 1 {
        return Err(Error::WrongVertexCount { expected: d + 1, found: vertices.len() });
    }
    if let Some(v) = vertices.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: v.len() });
    }
    Ok(signed_simplex_det(vertices).abs() / factorial(d))
}

/// Twice the signed area of triangle `abc`; positive when counter-clockwise.
#[inline]
pub fn orient2d(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// True when `orient2d(a, b, c)` is within the relative tolerance band.
pub fn nearly_collinear(a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let scale = distance(a, b) * distance(a, c);
    orient2d(a, b, c).abs() <= GEOMETRIC_REL * scale
}

/// A closed or open disk in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Position of a point relative to a disk under the tolerance policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiskSide {
    Inside,
    Boundary,
    Outside,
}

impl Disk {
    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn classify(&self, p: &[f64]) -> DiskSide {
        let dist = distance(&self.center, &p[..2]);
        let band = GEOMETRIC_REL * self.radius.max(dist);
        if dist < self.radius - band {
            DiskSide::Inside
        } else if dist > self.radius + band {
            DiskSide::Outside
        } else {
            DiskSide::Boundary
        }
    }
}

fn require_2d(p: &[f64]) -> Result<()> {
    if p.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: p.len() });
    }
    Ok(())
}

/// Disk with `pq` as a diameter.
pub fn diametral_disk(p: &[f64], q: &[f64]) -> Result<Disk> {
    require_2d(p)?;
    require_2d(q)?;
    if p == q {
        return Err(Error::Degenerate("diametral disk of a point with itself".into()));
    }
    Ok(Disk {
        center: [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0],
        radius: distance(p, q) / 2.0,
    })
}

/// The unique disk with `p`, `q`, `t` on its boundary.
pub fn circumdisk(p: &[f64], q: &[f64], t: &[f64]) -> Result<Disk> {
    require_2d(p)?;
    require_2d(q)?;
    require_2d(t)?;
    if nearly_collinear(p, q, t) {
        return Err(Error::Degenerate(format!(
            "collinear triple ({}, {}), ({}, {}), ({}, {})",
            p[0], p[1], q[0], q[1], t[0], t[1]
        )));
    }
    let (bx, by) = (q[0] - p[0], q[1] - p[1]);
    let (cx, cy) = (t[0] - p[0], t[1] - p[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Ok(Disk {
        center: [p[0] + ux, p[1] + uy],
        radius: (ux * ux + uy * uy).sqrt(),
    })
}

/// Membership test; boundary points count for closed disks only.
pub fn disk_contains(disk: &Disk, p: &[f64], closed: bool) -> bool {
    match disk.classify(p) {
        DiskSide::Inside => true,
        DiskSide::Boundary => closed,
        DiskSide::Outside => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(&pt(&[0.0, 0.0]), &pt(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&pt(&[0.0, 0.0]), &pt(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(
            euclidean_distance(&pt(&[1.0, 2.0, 3.0]), &pt(&[4.0, 6.0, 3.0])).unwrap(),
            5.0
        );
        assert!(matches!(
            euclidean_distance(&pt(&[0.0]), &pt(&[0.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn simplex_examples() {
        let v = simplex_volume(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let v = simplex_volume(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]).unwrap();
        assert_eq!(v, 0.0);
        let v = simplex_volume(&[
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            simplex_volume(&[&[0.0, 0.0], &[1.0, 0.0]]),
            Err(Error::WrongVertexCount { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn diametral_examples() {
        let d = diametral_disk(&[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert_eq!((d.center, d.radius), ([1.0, 0.0], 1.0));
        let d = diametral_disk(&[0.0, 0.0], &[0.0, 4.0]).unwrap();
        assert_eq!((d.center, d.radius), ([0.0, 2.0], 2.0));
        let d = diametral_disk(&[1.0, 1.0], &[4.0, 5.0]).unwrap();
        assert_eq!((d.center, d.radius), ([2.5, 3.0], 2.5));
        assert!(diametral_disk(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn circumdisk_examples() {
        let d = circumdisk(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(d.center[0].abs() < 1e-15 && d.center[1].abs() < 1e-15);
        assert!((d.radius - 1.0).abs() < 1e-15);
        let d = circumdisk(&[0.0, 0.0], &[1.0, 0.0], &[0.5, 3f64.sqrt() / 2.0]).unwrap();
        assert!((d.radius - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let d = circumdisk(&[0.0, 0.0], &[4.0, 0.0], &[0.0, 3.0]).unwrap();
        assert!((d.center[0] - 2.0).abs() < 1e-15 && (d.center[1] - 1.5).abs() < 1e-15);
        assert!((d.radius - 2.5).abs() < 1e-15);
        assert!(matches!(
            circumdisk(&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn disk_contains_examples() {
        let unit = Disk { center: [0.0, 0.0], radius: 1.0 };
        assert!(disk_contains(&unit, &[0.0, 0.0], true));
        assert!(!disk_contains(&unit, &[2.0, 0.0], true));
        assert!(disk_contains(&unit, &[1.0, 0.0], true));
        assert!(!disk_contains(&unit, &[1.0, 0.0], false));
    }

    #[test]
    fn general_position_rejects_shared_coordinate() {
        let p = PointSet::new(&[[0.0, 1.0], [0.0, 2.0]]).unwrap();
        assert!(matches!(p.check_general_position(), Err(Error::Degenerate(_))));
        let p = PointSet::new(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0 + 1e-12]]).unwrap();
        assert!(p.check_general_position().is_err());
        let p = PointSet::new(&[[0.0, 0.0], [1.0, 0.3], [2.0, 1.7]]).unwrap();
        assert!(p.check_general_position().is_ok());
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut idx = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut idx, 6) {
            count += 1;
        }
        assert_eq!(count, 20);
    }

    fn arb_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, d)
    }

    proptest! {
        #[test]
        fn simplex_volume_permutation_and_translation_invariant(
            verts in proptest::collection::vec(arb_point(3), 4),
            shift in arb_point(3),
            perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
        ) {
            let refs: Vec<&[f64]> = verts.iter().map(|v| v.as_slice()).collect();
            let base = simplex_volume(&refs).unwrap();
            let permuted: Vec<&[f64]> = perm.iter().map(|&i| verts[i].as_slice()).collect();
            let moved: Vec<Vec<f64>> = verts
                .iter()
                .map(|v| v.iter().zip(&shift).map(|(a, b)| a + b).collect())
                .collect();
            let moved_refs: Vec<&[f64]> = moved.iter().map(|v| v.as_slice()).collect();
            let scale = base.max(1.0);
            prop_assert!((simplex_volume(&permuted).unwrap() - base).abs() <= 1e-12 * scale);
            prop_assert!((simplex_volume(&moved_refs).unwrap() - base).abs() <= 1e-12 * scale * 100.0);
        }

        #[test]
        fn triangle_inequality(a in arb_point(3), b in arb_point(3), c in arb_point(3)) {
            prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-12);
        }

        #[test]
        fn circumdisk_is_equidistant(a in arb_point(2), b in arb_point(2), c in arb_point(2)) {
            prop_assume!(!nearly_collinear(&a, &b, &c) && orient2d(&a, &b, &c).abs() > 1e-3);
            let d = circumdisk(&a, &b, &c).unwrap();
            for p in [&a, &b, &c] {
                prop_assert!((distance(&d.center, p) - d.radius).abs() <= 1e-9 * d.radius);
            }
        }
    }
}
