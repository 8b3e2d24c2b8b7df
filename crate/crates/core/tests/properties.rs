use geomoments::dataio::{generate, Generator};
use geomoments::engine::{moments, size_table};
use geomoments::mpd::{mpd_approx_moments, mpd_exact_moments};
use geomoments::oracle::{oracle_moments, oracle_size_table};
use geomoments::tolerance::rel_close;
use geomoments::wspd::{build_split_tree, wspd_pairs};
use geomoments::{par, BernoulliModel, Distribution, Engine, MeasureKind, PointSet};
use proptest::prelude::*;

fn point_set(n: std::ops::RangeInclusive<usize>, d: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, d), n)
        .prop_filter_map("general position", |rows| {
            let p = PointSet::new(&rows).ok()?;
            p.check_general_position().ok()?;
            Some(p)
        })
}

fn probs(n: usize) -> impl Strategy<Value = BernoulliModel> {
    prop::collection::vec(0.05..0.95f64, n).prop_map(|p| BernoulliModel::new(p).unwrap())
}

/// Exponent of the scale factor in each measure.
fn degree(kind: MeasureKind, d: usize) -> i32 {
    match kind {
        MeasureKind::BBoxVolume | MeasureKind::ConvexHullVolume => d as i32,
        MeasureKind::CentroidSqDist => 2,
        MeasureKind::Mpd | MeasureKind::SedDiameter => 1,
    }
}

fn kinds(d: usize) -> Vec<MeasureKind> {
    MeasureKind::ALL.into_iter().filter(|k| d == 2 || *k != MeasureKind::SedDiameter).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn engines_match_oracle_fixed(p in point_set(2..=8, 2), s_frac in 0.0..1.0f64) {
        let s = 2 + (s_frac * (p.len() - 1) as f64) as usize;
        let s = s.min(p.len());
        let dist = Distribution::FixedSize { s };
        for kind in kinds(2) {
            let got = moments(&p, &dist, kind, Engine::Exact);
            let Ok(got) = got else { continue };
            let truth = oracle_moments(&p, &dist, kind).unwrap();
            prop_assert!(rel_close(got.mean, truth.mean, 1e-8, 1e-10), "{kind}: {} vs {}", got.mean, truth.mean);
        }
    }

    #[test]
    fn engines_match_oracle_bernoulli(
        (p, m) in point_set(1..=8, 3).prop_flat_map(|p| { let n = p.len(); (Just(p), probs(n)) })
    ) {
        let dist = Distribution::Bernoulli(m);
        for kind in [MeasureKind::BBoxVolume, MeasureKind::ConvexHullVolume] {
            let got = moments(&p, &dist, kind, Engine::Exact).unwrap();
            let truth = oracle_moments(&p, &dist, kind).unwrap();
            prop_assert!(rel_close(got.mean, truth.mean, 1e-8, 1e-10), "{kind}: {} vs {}", got.mean, truth.mean);
        }
    }

    #[test]
    fn translation_invariance(p in point_set(3..=9, 2), shift in prop::collection::vec(-50.0..50.0f64, 2)) {
        let q = p.translated(&shift);
        let dist = Distribution::FixedSize { s: 3 };
        for kind in kinds(2) {
            let (Ok(a), Ok(b)) = (moments(&p, &dist, kind, Engine::Exact), moments(&q, &dist, kind, Engine::Exact)) else { continue };
            prop_assert!(rel_close(a.mean, b.mean, 1e-7, 1e-9), "{kind}: {} vs {}", a.mean, b.mean);
        }
    }

    #[test]
    fn scale_equivariance(p in point_set(3..=9, 3), lambda in 0.1..10.0f64) {
        let q = p.map_coords(|_, v| lambda * v);
        let dist = Distribution::FixedSize { s: 3 };
        for kind in kinds(3) {
            let a = moments(&p, &dist, kind, Engine::Exact).unwrap().mean;
            let b = moments(&q, &dist, kind, Engine::Exact).unwrap().mean;
            prop_assert!(rel_close(b, lambda.powi(degree(kind, 3)) * a, 1e-9, 1e-12), "{kind}");
        }
    }

    #[test]
    fn tables_match_oracle_tables(p in point_set(2..=9, 3)) {
        for kind in [MeasureKind::BBoxVolume, MeasureKind::CentroidSqDist, MeasureKind::Mpd] {
            let table = size_table(&p, kind, Engine::Exact).unwrap();
            for truth in oracle_size_table(&p, kind).unwrap() {
                let Some(row) = table.row(truth.s) else { continue };
                prop_assert!(rel_close(row.mean, truth.mean, 1e-9, 1e-12), "{kind} s={}", truth.s);
                if let (Some(v), Some(t)) = (row.variance, truth.variance) {
                    prop_assert!((v - t).abs() <= 1e-9 * truth.mean.powi(2).max(1e-12), "{kind} s={}: {v} vs {t}", truth.s);
                }
            }
        }
    }

    #[test]
    fn mpd_approximation_sandwich(p in point_set(2..=120, 2), eps_idx in 0..3usize) {
        let epsilon = [0.05, 0.25, 0.5][eps_idx];
        let exact = mpd_exact_moments(&p).unwrap();
        let approx = mpd_approx_moments(&p, epsilon).unwrap();
        for (e, a) in exact.per_s.unwrap().iter().zip(approx.per_s.unwrap()) {
            prop_assert!(a.mean <= e.mean + 1e-12 && a.mean >= (1.0 - epsilon) * e.mean - 1e-12);
        }
    }

    #[test]
    fn wspd_covers_every_pair_once(p in point_set(2..=150, 3), z in 1.0..20.0f64) {
        let tree = build_split_tree(&p).unwrap();
        let pairs = wspd_pairs(&tree, z).unwrap();
        let n = p.len();
        let mut seen = vec![0u8; n * n];
        for pair in &pairs {
            for &a in tree.points_of(pair.a) {
                for &b in tree.points_of(pair.b) {
                    seen[a.min(b) * n + a.max(b)] += 1;
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(seen[i * n + j], 1);
            }
        }
    }
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let p = generate(Generator::Uniform, 600, 2, 3).unwrap().points;
    let m = BernoulliModel::new((0..600).map(|i| 0.1 + 0.8 * ((i * 37 % 600) as f64 / 600.0)).collect()).unwrap();
    let run = || {
        let a = mpd_exact_moments(&p).unwrap().per_s.unwrap();
        let b = mpd_approx_moments(&p, 0.5).unwrap().per_s.unwrap();
        let c = moments(&p, &Distribution::Bernoulli(m.clone()), MeasureKind::BBoxVolume, Engine::Exact).unwrap().mean;
        let d = size_table(&p, MeasureKind::CentroidSqDist, Engine::Exact).unwrap().per_s.unwrap();
        (a, b, c, d)
    };
    let parallel = run();
    let sequential = par::run_sequential(run);
    assert_eq!(parallel, sequential);
}
