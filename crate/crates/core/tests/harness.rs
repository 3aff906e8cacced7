use std::path::Path;

use llfba::bench::{aggregate, make_performance_profile, run_benchmark, write_profile, BenchGrid};
use llfba::formulations::solve_llfba;
use llfba::io::load_model;
use llfba::report::{read_rows, write_rows};
use llfba::{Execution, HighsBackend, LooplessConfig, SolveSettings, SolveStatus};

fn e_coli_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/e_coli_core.json")
}

#[test]
fn e_coli_core_loads() {
    let model = load_model(e_coli_path()).unwrap();
    assert_eq!(model.num_metabolites(), 72);
    assert_eq!(model.num_reactions(), 95);
    assert_eq!(model.internal().len() + model.exchange().len(), 95);
    assert!(model.exchange().iter().all(|&j| {
        let id = &model.reaction_ids()[j];
        id.starts_with("EX_") || model.stoichiometry().column(j).count() == 1
    }));
}

const GRID: &str = r#"
instances = ["builtin:example", "builtin:two-cycle", "random:7", "e_coli_core.json"]
time_limit_s = 60
seed = 3
execution = "sequential"

[[methods]]
method = "bigm"

[[methods]]
method = "hull"

[[methods]]
method = "benders"
pct = 50.0
strategy = "distinct"

[[methods]]
method = "benders"
no_good_only = true
"#;

#[test]
fn grid_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(e_coli_path(), dir.path().join("e_coli_core.json")).unwrap();
    let grid_path = dir.path().join("grid.toml");
    std::fs::write(&grid_path, GRID).unwrap();
    let grid = BenchGrid::load(&grid_path).unwrap();
    let rows = run_benchmark(&grid, &HighsBackend).unwrap();
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[0].instance, "builtin:example");
    assert_eq!(rows[2].pct, Some(50.0));
    assert!(rows.iter().all(|r| r.status == SolveStatus::Optimal), "{rows:#?}");
    // every method agrees per instance
    for chunk in rows.chunks(4) {
        let first = chunk[0].objective.unwrap();
        assert!(chunk.iter().all(|r| (r.objective.unwrap() - first).abs() <= 1e-6), "{chunk:#?}");
    }
    assert!((rows[0].objective.unwrap() - 20.0).abs() <= 1e-6);

    let csv_path = dir.path().join("report.csv");
    write_rows(std::fs::File::create(&csv_path).unwrap(), &rows).unwrap();
    let back = read_rows(std::fs::File::open(&csv_path).unwrap(), "report.csv").unwrap();
    assert_eq!(back, rows);

    let summary = aggregate(&back, Some(grid.time_limit_s));
    assert_eq!(summary.methods.len(), 4);
    assert!(summary.methods.iter().all(|m| m.solved == 4 && m.instances == 4));
    let text = summary.render();
    assert!(text.contains("benders[bigm,pct=50,distinct]"), "{text}");

    let profile = make_performance_profile(&back);
    let mut out = Vec::new();
    write_profile(&mut out, &profile).unwrap();
    assert!(String::from_utf8(out).unwrap().lines().count() > 4);
}

#[test]
fn enzyme_grid_runs() {
    let grid: BenchGrid = toml::from_str(
        r#"
instances = ["builtin:example", "random:11"]
enzyme_seed = 5
[[methods]]
method = "fba"
[[methods]]
method = "benders"
[[methods]]
method = "indicator"
"#,
    )
    .unwrap();
    let rows = run_benchmark(&grid, &HighsBackend).unwrap();
    assert_eq!(rows.len(), 6);
    for chunk in rows.chunks(3) {
        assert!(chunk.iter().all(|r| r.status == SolveStatus::Optimal), "{chunk:#?}");
        let (fba, cb, ind) = (chunk[0].objective.unwrap(), chunk[1].objective.unwrap(), chunk[2].objective.unwrap());
        assert!(cb <= fba + 1e-6);
        assert!((cb - ind).abs() <= 1e-6);
    }
}

#[test]
fn parallel_and_sequential_grids_agree() {
    let mut grid: BenchGrid = toml::from_str(
        r#"
instances = ["random:1", "random:2", "random:3", "builtin:two-cycle"]
[[methods]]
method = "benders"
pct = 100.0
[[methods]]
method = "bigm"
"#,
    )
    .unwrap();
    grid.execution = Execution::Parallel;
    let par = run_benchmark(&grid, &HighsBackend).unwrap();
    grid.execution = Execution::Sequential;
    let seq = run_benchmark(&grid, &HighsBackend).unwrap();
    for (a, b) in par.iter().zip(&seq) {
        assert_eq!((&a.instance, &a.method, a.status), (&b.instance, &b.method, b.status));
        assert!((a.objective.unwrap() - b.objective.unwrap()).abs() <= 1e-6);
        assert_eq!(a.iterations, b.iterations);
    }
}

#[test]
fn concurrent_solves_are_independent() {
    let models: Vec<_> = (0..8)
        .map(|s| llfba::synthetic::random_model(s, &Default::default()))
        .collect();
    let serial: Vec<f64> = models
        .iter()
        .map(|m| {
            solve_llfba(m, &LooplessConfig::default(), &SolveSettings::default(), &HighsBackend)
                .unwrap()
                .objective_value
        })
        .collect();
    let threaded: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = models
            .iter()
            .map(|m| {
                scope.spawn(move || {
                    solve_llfba(m, &LooplessConfig::default(), &SolveSettings::default(), &HighsBackend)
                        .unwrap()
                        .objective_value
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (a, b) in serial.iter().zip(&threaded) {
        assert!((a - b).abs() <= 1e-9);
    }
}
