use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tricorr::bench::{example2_witness, example_distributions};
use tricorr::codesim::{mixture_eval, soft_cover_codebook, EvalConfig};
use tricorr::ratereg::{collab_corner_points, OptimizerConfig, Roles};
use tricorr::Exec;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn soft_cover_l1(c: &mut Criterion) {
    let j = example_distributions("example2").unwrap();
    let w = example2_witness().unwrap();
    let chan = w.joint.conditional(&["X", "Y", "Z"], &["U"]).unwrap();
    let book = soft_cover_codebook(&w.joint, &["U"], 10, 0.7545, 0.25, 1).unwrap();
    let handle = mixture_eval(&book, &chan).unwrap();
    let mut g = c.benchmark_group("soft_cover_l1_n10");
    for (name, exec) in MODES {
        let cfg = EvalConfig {
            exec,
            ..EvalConfig::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| handle.l1_to(&j, cfg).unwrap())
        });
    }
    g.finish();
}

fn corner_points(c: &mut Criterion) {
    let j = example_distributions("example2").unwrap();
    let roles = Roles::first_three(&j).unwrap();
    let mut g = c.benchmark_group("collab_corners_example2");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = OptimizerConfig {
            restarts: 8,
            exec,
            ..OptimizerConfig::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| collab_corner_points(&j, &roles, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, soft_cover_l1, corner_points);
criterion_main!(benches);
