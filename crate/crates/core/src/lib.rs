//! Exact and approximate moments of geometric measures over random subsets
//! of a point set.
//!
//! A subset `S` of a point set `P` is drawn either under the *Bernoulli*
//! model (each point kept independently with its own probability) or the
//! *fixed-size* model (a uniformly random `s`-subset). For several measures
//! of `S` this crate computes `E[M(S)]` and, where available, `V[M(S)]`
//! without enumerating subsets:
//!
//! | measure | module | models | moments |
//! |---------|--------|--------|---------|
//! | bounding-box volume | [`bbox`] | both | mean |
//! | convex-hull volume | [`hull`] | both | mean |
//! | mean squared centroid distance | [`centroid`] | fixed-size | mean, variance |
//! | mean pairwise distance | [`mpd`] | fixed-size | mean, variance (exact and `1-ε`) |
//! | smallest enclosing disk diameter | [`sed`] | both | mean |
//!
//! [`oracle`] holds the brute-force enumeration and Monte Carlo engines the
//! analytic ones are checked against.

pub mod bbox;
pub mod centroid;
pub mod dataio;
pub mod engine;
mod error;
pub mod geometry;
pub mod hull;
pub mod mpd;
pub mod oracle;
pub mod par;
pub mod prob;
pub mod product_tree;
pub mod sed;
pub mod tolerance;
pub mod wspd;

pub use engine::Engine;
pub use error::{Error, Result};
pub use geometry::{Disk, Point, PointSet};
pub use oracle::MeasureKind;
pub use prob::{BernoulliModel, BinomialTable, Distribution, Method, MomentResult, SizeRow};
