use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cm_pencil::verify::{run_suite, Execution, Suite, VerifyConfig};

fn sequential_vs_parallel(c: &mut Criterion) {
    let cases = [
        (Suite::Jacobi, 3),
        (Suite::Involutivity, 4),
        (Suite::ReductionRoundtrip, 5),
        (Suite::Torsion, 3),
    ];
    for (suite, n) in cases {
        let mut group = c.benchmark_group(format!("{suite}/n{n}"));
        group.sample_size(10);
        let cfg = VerifyConfig {
            n,
            trials: 32,
            seed: 1,
            tol: suite.default_tol(),
        };
        for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
                b.iter(|| run_suite(black_box(suite), black_box(&cfg), exec).unwrap())
            });
        }
        group.finish();
    }
}

criterion_group!(benches, sequential_vs_parallel);
criterion_main!(benches);
