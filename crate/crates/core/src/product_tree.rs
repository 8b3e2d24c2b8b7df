//! Balanced product tree over y-sorted points with marks.
//!
//! Every point `q` carries a base weight `w(q)` and a probability `π(q)`.
//! Once marked, `q` contributes to two aggregates kept at every node `v`:
//!
//! * `iproduct[v]`: the product of `1 - π(r)` over marked `r` below `v`;
//! * `sproduct[v]`: the sum over marked `q` below `v` of `w(q)` times the
//!   product of `1 - π(r)` over marked `r` below `v` with `r_y > q_y`.
//!
//! Children merge as `iproduct = i_l·i_r` and `sproduct = s_l·i_r + s_r`.
//! [`ProductTree::query`] therefore returns
//! `Σ_{marked q, q_y > p_y} w(q)·Π_{marked r, r_y > q_y} (1 - π(r))`.
//! With `w(q) = D(q) / π̄(P_y^+(q))` this is the same quantity as
//! `Σ D(q) / π̄(unmarked r above q)`, but no factor `1 / (1 - π)` is ever
//! formed, so nothing overflows for large `n` or `π` close to 1.
//!
//! A third aggregate holds the product of `1 - π(r)` over *unmarked* `r`,
//! answering [`ProductTree::complement_query`].

use std::cell::Cell;

use crate::{Error, Result};

/// Aggregates of a subtree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAggregate {
    pub sproduct: f64,
    pub iproduct: f64,
    pub unmarked_product: f64,
}

impl NodeAggregate {
    const EMPTY: NodeAggregate = NodeAggregate { sproduct: 0.0, iproduct: 1.0, unmarked_product: 1.0 };

    /// Combines a subtree with one whose points all lie above it in y.
    fn then(self, upper: NodeAggregate) -> NodeAggregate {
        NodeAggregate {
            sproduct: self.sproduct * upper.iproduct + upper.sproduct,
            iproduct: self.iproduct * upper.iproduct,
            unmarked_product: self.unmarked_product * upper.unmarked_product,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProductTree {
    /// Number of leaf slots (a power of two); node `k` has children `2k`, `2k+1`.
    width: usize,
    nodes: Vec<NodeAggregate>,
    /// Leaf slot of each point, indexed by the caller's point index.
    slot: Vec<usize>,
    weight: Vec<f64>,
    prob: Vec<f64>,
    marked: Vec<bool>,
    visits: Cell<usize>,
}

impl ProductTree {
    /// Builds the tree for points with y-coordinates `ys`, base weights and
    /// probabilities. All points start unmarked.
    pub fn build(ys: &[f64], weights: &[f64], probs: &[f64]) -> Result<Self> {
        let n = ys.len();
        if weights.len() != n || probs.len() != n {
            return Err(Error::InvalidArgument(
                "product tree needs one weight and one probability per point".into(),
            ));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
        for w in order.windows(2) {
            if ys[w[0]] == ys[w[1]] {
                return Err(Error::Degenerate(format!(
                    "points {} and {} share the y-coordinate {}",
                    w[0], w[1], ys[w[0]]
                )));
            }
        }
        let width = n.next_power_of_two().max(1);
        let mut slot = vec![0; n];
        let mut nodes = vec![NodeAggregate::EMPTY; 2 * width];
        for (rank, &i) in order.iter().enumerate() {
            slot[i] = rank;
            nodes[width + rank].unmarked_product = 1.0 - probs[i];
        }
        for k in (1..width).rev() {
            nodes[k] = nodes[2 * k].then(nodes[2 * k + 1]);
        }
        Ok(ProductTree {
            width,
            nodes,
            slot,
            weight: weights.to_vec(),
            prob: probs.to_vec(),
            marked: vec![false; n],
            visits: Cell::new(0),
        })
    }

    pub fn len(&self) -> usize {
        self.slot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot.is_empty()
    }

    pub fn is_marked(&self, p: usize) -> bool {
        self.marked.get(p).copied().unwrap_or(false)
    }

    fn check(&self, p: usize) -> Result<()> {
        if p >= self.slot.len() {
            return Err(Error::UnknownPoint(p));
        }
        Ok(())
    }

    /// Marks point `p` and refreshes its ancestors.
    pub fn addmark(&mut self, p: usize) -> Result<()> {
        self.check(p)?;
        if self.marked[p] {
            return Err(Error::AlreadyMarked(p));
        }
        self.marked[p] = true;
        let mut k = self.width + self.slot[p];
        self.nodes[k] = NodeAggregate {
            sproduct: self.weight[p],
            iproduct: 1.0 - self.prob[p],
            unmarked_product: 1.0,
        };
        self.bump();
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k].then(self.nodes[2 * k + 1]);
            self.bump();
        }
        Ok(())
    }

    /// Aggregate over all points strictly above `p` in y.
    fn above(&self, p: usize) -> Result<NodeAggregate> {
        self.check(p)?;
        let mut acc = NodeAggregate::EMPTY;
        let mut k = self.width + self.slot[p];
        self.bump();
        while k > 1 {
            if k.is_multiple_of(2) {
                acc = acc.then(self.nodes[k + 1]);
            }
            k /= 2;
            self.bump();
        }
        Ok(acc)
    }

    /// `Σ_{marked q, q_y > p_y} w(q)·Π_{marked r, r_y > q_y} (1 - π(r))`.
    pub fn query(&self, p: usize) -> Result<f64> {
        Ok(self.above(p)?.sproduct)
    }

    /// Returns [`Self::query`] together with the product of `1 - π(r)` over
    /// marked `r` above `p`.
    pub fn query_with_product(&self, p: usize) -> Result<(f64, f64)> {
        let a = self.above(p)?;
        Ok((a.sproduct, a.iproduct))
    }

    /// Product of `1 - π(r)` over unmarked `r` with `r_y > p_y`.
    pub fn complement_query(&self, p: usize) -> Result<f64> {
        Ok(self.above(p)?.unmarked_product)
    }

    /// Aggregates of the whole tree.
    pub fn root(&self) -> NodeAggregate {
        self.nodes[1]
    }

    /// Aggregates recomputed from the leaves, bypassing the stored nodes.
    pub fn recompute_root(&self) -> NodeAggregate {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| self.slot[i]);
        order.iter().fold(NodeAggregate::EMPTY, |acc, &i| {
            let leaf = if self.marked[i] {
                NodeAggregate { sproduct: self.weight[i], iproduct: 1.0 - self.prob[i], unmarked_product: 1.0 }
            } else {
                NodeAggregate { sproduct: 0.0, iproduct: 1.0, unmarked_product: 1.0 - self.prob[i] }
            };
            acc.then(leaf)
        })
    }

    /// Tree height (edges from root to a leaf).
    pub fn height(&self) -> usize {
        self.width.trailing_zeros() as usize
    }

    /// Nodes touched by `addmark` and queries since the last reset.
    pub fn visits(&self) -> usize {
        self.visits.get()
    }

    pub fn reset_visits(&self) {
        self.visits.set(0);
    }

    fn bump(&self) {
        self.visits.set(self.visits.get() + 1);
    }
}
