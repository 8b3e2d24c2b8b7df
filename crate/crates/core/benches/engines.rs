use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geomoments::dataio::{generate, Generator};
use geomoments::engine::{moments, size_table};
use geomoments::{par, BernoulliModel, Distribution, Engine, MeasureKind, PointSet};

fn uniform(n: usize, d: usize) -> PointSet {
    generate(Generator::Uniform, n, d, 1).unwrap().points
}

/// Runs `f` on the rayon pool and pinned to one thread.
fn compare<F>(c: &mut Criterion, group: &str, n: usize, f: F)
where
    F: Fn() + Send + Sync,
{
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| b.iter(&f));
    g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
        b.iter(|| par::run_sequential(&f))
    });
    g.finish();
}

fn mpd(c: &mut Criterion) {
    for n in [1000, 4000] {
        let p = uniform(n, 3);
        compare(c, "mpd_exact", n, || {
            size_table(&p, MeasureKind::Mpd, Engine::Exact).unwrap();
        });
        compare(c, "mpd_approx", n, || {
            size_table(&p, MeasureKind::Mpd, Engine::Approx { epsilon: 0.5 }).unwrap();
        });
    }
}

fn bbox(c: &mut Criterion) {
    let n = 20_000;
    let p = uniform(n, 2);
    let dist = Distribution::Bernoulli(BernoulliModel::uniform(n, 0.5).unwrap());
    compare(c, "bbox_2d_bernoulli", n, || {
        moments(&p, &dist, MeasureKind::BBoxVolume, Engine::Exact).unwrap();
    });
    let p = uniform(300, 3);
    compare(c, "bbox_3d_fixed", 300, || {
        size_table(&p, MeasureKind::BBoxVolume, Engine::Exact).unwrap();
    });
}

fn hull_sed(c: &mut Criterion) {
    let p = uniform(400, 2);
    let dist = Distribution::FixedSize { s: 40 };
    compare(c, "hull_2d", 400, || {
        moments(&p, &dist, MeasureKind::ConvexHullVolume, Engine::Exact).unwrap();
    });
    let p = uniform(120, 2);
    compare(c, "sed", 120, || {
        moments(&p, &dist, MeasureKind::SedDiameter, Engine::Exact).unwrap();
    });
}

criterion_group!(benches, mpd, bbox, hull_sed);
criterion_main!(benches);
