//! Single entry point over the analytic engines.

use crate::oracle::MeasureKind;
use crate::{bbox, centroid, hull, mpd, sed};
use crate::{Distribution, Error, MomentResult, PointSet, Result};

/// Default approximation parameter of the MPD engine.
pub const DEFAULT_EPSILON: f64 = 0.5;

/// Which analytic engine to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Exact,
    /// The WSPD-based MPD approximation.
    Approx { epsilon: f64 },
}

fn check_engine(kind: MeasureKind, engine: Engine) -> Result<()> {
    match (kind, engine) {
        (MeasureKind::Mpd, _) | (_, Engine::Exact) => Ok(()),
        (_, Engine::Approx { .. }) => Err(Error::Unsupported(format!(
            "the approximate engine exists for mpd only, not {kind}"
        ))),
    }
}

/// Moments of `kind` under `dist`.
pub fn moments(points: &PointSet, dist: &Distribution, kind: MeasureKind, engine: Engine) -> Result<MomentResult> {
    kind.check_scope(dist, points.dim(), false)?;
    check_engine(kind, engine)?;
    dist.validate(points.len())?;
    match (kind, dist) {
        (MeasureKind::BBoxVolume, _) => bbox::expected_bbox_volume(points, dist),
        (MeasureKind::ConvexHullVolume, _) => hull::expected_hull_volume(points, dist),
        (MeasureKind::SedDiameter, _) => sed::expected_sed_diameter(points, dist),
        (_, Distribution::FixedSize { s }) => size_table(points, kind, engine)?.select(*s),
        (_, Distribution::Bernoulli(_)) => unreachable!("rejected by the scope check"),
    }
}

/// Fixed-size moments of `kind` for every subset size the engine tabulates.
pub fn size_table(points: &PointSet, kind: MeasureKind, engine: Engine) -> Result<MomentResult> {
    check_engine(kind, engine)?;
    match (kind, engine) {
        (MeasureKind::BBoxVolume, _) => bbox::expected_bbox_volume_dd_fixed(points),
        (MeasureKind::ConvexHullVolume, _) => hull::expected_hull_volume_table(points),
        (MeasureKind::CentroidSqDist, _) => centroid::centroid_moments(points),
        (MeasureKind::Mpd, Engine::Exact) => mpd::mpd_exact_moments(points),
        (MeasureKind::Mpd, Engine::Approx { epsilon }) => mpd::mpd_approx_moments(points, epsilon),
        (MeasureKind::SedDiameter, _) => Err(Error::Unsupported(
            "sed has no per-size table; pass a single subset size".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BernoulliModel;

    fn square() -> PointSet {
        PointSet::new(&[[0.0, 0.1], [1.0, 0.0], [1.2, 0.9], [0.15, 1.1], [0.5, 0.55]]).unwrap()
    }

    #[test]
    fn scope_rules() {
        let p = square();
        let bern = Distribution::Bernoulli(BernoulliModel::uniform(5, 0.5).unwrap());
        for kind in [MeasureKind::CentroidSqDist, MeasureKind::Mpd] {
            let err = moments(&p, &bern, kind, Engine::Exact).unwrap_err();
            assert!(err.is_usage(), "{err}");
        }
        let err = moments(&p, &bern, MeasureKind::BBoxVolume, Engine::Approx { epsilon: 0.5 }).unwrap_err();
        assert!(err.is_usage());
        assert!(size_table(&p, MeasureKind::SedDiameter, Engine::Exact).unwrap_err().is_usage());
    }

    #[test]
    fn dispatch_selects_rows() {
        let p = square();
        let table = size_table(&p, MeasureKind::Mpd, Engine::Exact).unwrap();
        let one = moments(&p, &Distribution::FixedSize { s: 3 }, MeasureKind::Mpd, Engine::Exact).unwrap();
        assert_eq!(one.mean, table.row(3).unwrap().mean);
        assert_eq!(one.s, Some(3));
        for kind in MeasureKind::ALL {
            let r = moments(&p, &Distribution::FixedSize { s: 4 }, kind, Engine::Exact).unwrap();
            assert!(r.mean > 0.0, "{kind}");
        }
    }
}
