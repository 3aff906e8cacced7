use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use llfba::bench::{run_benchmark, BenchGrid};
use llfba::benders::{DirectionAssignment, SubsystemFinder};
use llfba::synthetic::{random_model, RandomModelParams};
use llfba::{Execution, HighsBackend, MetabolicModel};

const EXECUTIONS: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

/// First random model whose all-forward assignment has several subsystems.
fn mis_instance() -> (MetabolicModel, DirectionAssignment) {
    for seed in 0.. {
        let model = random_model(seed, &RandomModelParams::default());
        let k = model.internal().len();
        let a = DirectionAssignment(vec![true; k]);
        let s_i = model.internal_submatrix();
        let finder = SubsystemFinder::new(&s_i, 1.0, &HighsBackend);
        if finder.enumerate_mis(&a, k).unwrap().len() >= 3 {
            return (model, a);
        }
    }
    unreachable!()
}

fn enumerate(c: &mut Criterion) {
    let (model, a) = mis_instance();
    let s_i = model.internal_submatrix();
    let k = a.0.len();
    let mut group = c.benchmark_group("enumerate_mis");
    for (name, execution) in EXECUTIONS {
        let mut finder = SubsystemFinder::new(&s_i, 1.0, &HighsBackend);
        finder.execution = execution;
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| finder.enumerate_mis(&a, k).unwrap())
        });
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let mut grid: BenchGrid = toml::from_str(
        r#"
instances = ["random:1", "random:2", "random:3", "random:4", "builtin:two-cycle"]
[[methods]]
method = "benders"
pct = 100.0
[[methods]]
method = "hull"
"#,
    )
    .unwrap();
    let mut group = c.benchmark_group("run_benchmark");
    group.sample_size(10);
    for (name, execution) in EXECUTIONS {
        grid.execution = execution;
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_benchmark(&grid, &HighsBackend).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumerate, grid);
criterion_main!(benches);
