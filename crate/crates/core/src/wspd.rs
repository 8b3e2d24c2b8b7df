//! Fair-split tree and well-separated pair decomposition.
//!
//! Each node of the split tree owns the points in a box; internal nodes cut
//! the tight bounding box of their points across its longest side at the
//! midpoint. A node's ball is the ball circumscribing that box. Two nodes
//! `A`, `B` are well separated for factor `z` when, with `r` the larger of
//! their radii, `‖c_A - c_B‖ - 2r ≥ z·r`.

use crate::geometry::distance;
use crate::{par, Error, PointSet, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitNode {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Number of points below the node.
    pub count: usize,
    pub children: Option<(usize, usize)>,
    pub parent: Option<usize>,
    /// Range of [`SplitTree::order`] holding the node's points.
    pub start: usize,
}

#[derive(Debug, Clone)]
pub struct SplitTree {
    nodes: Vec<SplitNode>,
    /// Point indices arranged so that every node's points are contiguous.
    order: Vec<usize>,
    leaf_of: Vec<usize>,
}

impl SplitTree {
    pub fn nodes(&self) -> &[SplitNode] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &SplitNode {
        &self.nodes[v]
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Leaf holding point `p`.
    pub fn leaf(&self, p: usize) -> usize {
        self.leaf_of[p]
    }

    /// Point indices below node `v`.
    pub fn points_of(&self, v: usize) -> &[usize] {
        let node = &self.nodes[v];
        &self.order[node.start..node.start + node.count]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_none()).count()
    }

    /// Internal nodes in creation order (parents before children).
    fn internal_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].children.is_some()).collect()
    }
}

/// Builds the fair-split tree. Duplicate points are rejected.
pub fn build_split_tree(points: &PointSet) -> Result<SplitTree> {
    let (n, d) = (points.len(), points.dim());
    if n == 0 {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut nodes: Vec<SplitNode> = Vec::with_capacity(2 * n - 1);
    let mut leaf_of = vec![0; n];
    let mut stack: Vec<(usize, usize, Option<usize>, bool)> = vec![(0, n, None, false)];
    while let Some((start, count, parent, is_right)) = stack.pop() {
        let id = nodes.len();
        if let Some(p) = parent {
            let children = nodes[p].children.get_or_insert((usize::MAX, usize::MAX));
            if is_right {
                children.1 = id;
            } else {
                children.0 = id;
            }
        }
        let slice = &mut order[start..start + count];
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in slice.iter() {
            for (k, &c) in points.point(i).iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (a + b) / 2.0).collect();
        let radius = distance(&lo, &hi) / 2.0;
        nodes.push(SplitNode { center, radius, count, children: None, parent, start });
        if count == 1 {
            leaf_of[slice[0]] = id;
            continue;
        }
        let (axis, span) = (0..d)
            .map(|k| (k, hi[k] - lo[k]))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if span <= 0.0 {
            return Err(Error::Degenerate(format!("duplicate points {:?}", &slice[..2])));
        }
        let mid = (lo[axis] + hi[axis]) / 2.0;
        let mut left = 0;
        for t in 0..count {
            if points.point(slice[t])[axis] <= mid {
                slice.swap(left, t);
                left += 1;
            }
        }
        // Push the right half first so the left child is created first.
        stack.push((start + left, count - left, Some(id), true));
        stack.push((start, left, Some(id), false));
    }
    Ok(SplitTree { nodes, order, leaf_of })
}

/// A well-separated pair of split-tree nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WSPair {
    pub a: usize,
    pub b: usize,
    pub size_a: usize,
    pub size_b: usize,
    /// Distance between the two balls, `max(0, ‖c_A - c_B‖ - r_A - r_B)`.
    pub delta: f64,
}

fn separated(a: &SplitNode, b: &SplitNode, z: f64) -> bool {
    let r = a.radius.max(b.radius);
    distance(&a.center, &b.center) - 2.0 * r >= z * r
}

fn ball_distance(a: &SplitNode, b: &SplitNode) -> f64 {
    (distance(&a.center, &b.center) - a.radius - b.radius).max(0.0)
}

/// Well-separated pairs between the two subtrees of internal node `u`.
fn pairs_below(tree: &SplitTree, u: usize, z: f64, visit: &mut impl FnMut(WSPair)) {
    let Some((l, r)) = tree.nodes[u].children else { return };
    let mut stack = vec![(l, r)];
    while let Some((a, b)) = stack.pop() {
        let (na, nb) = (&tree.nodes[a], &tree.nodes[b]);
        if separated(na, nb, z) {
            visit(WSPair { a, b, size_a: na.count, size_b: nb.count, delta: ball_distance(na, nb) });
            continue;
        }
        // Split the node with the larger ball; a leaf has radius zero.
        let (big, other, swap) = if na.radius >= nb.radius { (a, b, false) } else { (b, a, true) };
        let (c1, c2) = tree.nodes[big].children.expect("a node with positive radius is internal");
        for c in [c2, c1] {
            stack.push(if swap { (other, c) } else { (c, other) });
        }
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(z >= 1.0 && z.is_finite()) {
        return Err(Error::InvalidArgument(format!("separation factor must be >= 1, got {z}")));
    }
    Ok(())
}

/// Runs `visit_block` over blocks of internal nodes, each collecting into
/// its own state, and returns the states in block order.
pub(crate) fn fold_pairs<T: Send>(
    tree: &SplitTree,
    z: f64,
    init: impl Fn() -> T + Sync + Send,
    step: impl Fn(&mut T, WSPair) + Sync + Send,
) -> Result<Vec<T>> {
    check_z(z)?;
    let internal = tree.internal_nodes();
    let blocks = par::block_ranges(internal.len(), 64);
    Ok(par::map_indexed(blocks.len(), |b| {
        let mut state = init();
        for &u in &internal[blocks[b].clone()] {
            pairs_below(tree, u, z, &mut |pair| step(&mut state, pair));
        }
        state
    }))
}

/// The well-separated pair decomposition for separation factor `z >= 1`.
pub fn wspd_pairs(tree: &SplitTree, z: f64) -> Result<Vec<WSPair>> {
    let parts = fold_pairs(tree, z, Vec::new, |v: &mut Vec<WSPair>, p| v.push(p))?;
    Ok(parts.into_iter().flatten().collect())
}

/// Per-point sums over the pairs covering it:
/// `SUM(p) = Σ_{(A,B), p∈A} |B|·δ(A,B)` and the same with `δ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSums {
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

/// Node-level `(ms, ms²)` increments of one pair.
pub(crate) fn add_pair_mass(ms: &mut [(f64, f64)], pair: &WSPair) {
    let (d, d2) = (pair.delta, pair.delta * pair.delta);
    ms[pair.a].0 += pair.size_b as f64 * d;
    ms[pair.a].1 += pair.size_b as f64 * d2;
    ms[pair.b].0 += pair.size_a as f64 * d;
    ms[pair.b].1 += pair.size_a as f64 * d2;
}

/// Pushes node masses down the tree and reads them at the leaves.
pub(crate) fn push_down(tree: &SplitTree, mut ms: Vec<(f64, f64)>) -> PointSums {
    // Nodes are created parents first, so one forward pass suffices.
    for v in 1..tree.nodes.len() {
        let p = tree.nodes[v].parent.expect("non-root node has a parent");
        ms[v].0 += ms[p].0;
        ms[v].1 += ms[p].1;
    }
    let n = tree.leaf_of.len();
    PointSums {
        sum: (0..n).map(|p| ms[tree.leaf_of[p]].0).collect(),
        sum_sq: (0..n).map(|p| ms[tree.leaf_of[p]].1).collect(),
    }
}

/// Accumulates `SUM(p)` for every point from a pair list of this tree.
pub fn sum_per_point(tree: &SplitTree, pairs: &[WSPair]) -> Result<PointSums> {
    let mut ms = vec![(0.0, 0.0); tree.nodes.len()];
    for pair in pairs {
        if pair.a >= ms.len() || pair.b >= ms.len() {
            return Err(Error::InvalidArgument("pair refers to a node outside the tree".into()));
        }
        add_pair_mass(&mut ms, pair);
    }
    Ok(push_down(tree, ms))
}
