//! Method × instance grids, report aggregation and performance profiles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benders::{solve_llfba_benders, BendersConfig, CutStrategy, MasterFormulation};
use crate::enzyme::{build_enzyme_model, generate_enzyme_data, EnzymeDataParams};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::formulations::{solve_fba, solve_llfba, FluxSystem, Formulation, LooplessConfig};
use crate::io::load_model;
use crate::model::{build_example_loop_model, FluxSolution, MetabolicModel};
use crate::report::{ReportRow, SolveReport};
use crate::solver::{Backend, SolveSettings, SolveStatus};
use crate::synthetic::{random_model, two_cycle_model, RandomModelParams};

/// Shift added to every time before taking geometric means.
pub const GEOMEAN_SHIFT_S: f64 = 1.0;

/// Lower edges of the instance buckets, by fastest solve time.
pub const BUCKET_EDGES_S: [f64; 6] = [0.0, 10.0, 60.0, 100.0, 600.0, 1800.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fba,
    Bigm,
    Indicator,
    Hull,
    Benders,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "fba" => Method::Fba,
            "bigm" | "big-m" => Method::Bigm,
            "indicator" => Method::Indicator,
            "hull" => Method::Hull,
            "benders" | "cb" => Method::Benders,
            other => return Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Fba => "fba",
            Method::Bigm => "bigm",
            Method::Indicator => "indicator",
            Method::Hull => "hull",
            Method::Benders => "benders",
        })
    }
}

/// One solver configuration of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub big_m: Option<f64>,
    /// Benders: cuts per iteration as a percentage of the reactions.
    #[serde(default)]
    pub pct: f64,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_master")]
    pub master: String,
    #[serde(default)]
    pub no_good_only: bool,
    /// Overrides the grid time limit.
    #[serde(default)]
    pub time_limit_s: Option<f64>,
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_strategy() -> String {
    "all".into()
}

fn default_master() -> String {
    "bigm".into()
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec {
            method,
            epsilon: default_epsilon(),
            big_m: None,
            pct: 0.0,
            strategy: default_strategy(),
            master: default_master(),
            no_good_only: false,
            time_limit_s: None,
        }
    }

    pub fn loopless(&self) -> LooplessConfig {
        LooplessConfig {
            epsilon: self.epsilon,
            big_m: self.big_m,
            formulation: match self.method {
                Method::Hull => Formulation::Hull,
                Method::Indicator => Formulation::Indicator,
                _ => Formulation::BigM,
            },
            allow_indicator_fallback: true,
        }
    }

    pub fn benders(&self, execution: Execution) -> Result<BendersConfig> {
        Ok(BendersConfig {
            master_formulation: self.master.parse::<MasterFormulation>()?,
            cuts_per_iter_pct: self.pct,
            cut_strategy: self.strategy.parse::<CutStrategy>()?,
            no_good_only: self.no_good_only,
            epsilon: self.epsilon,
            big_m: self.big_m,
            execution,
            ..BendersConfig::default()
        })
    }
}

/// Runs one method and fills a report. Wall time covers the whole call; a
/// solve that overruns its limit is reported as `TimeLimit`.
pub fn solve_with(
    spec: &MethodSpec,
    system: &dyn FluxSystem,
    settings: &SolveSettings,
    backend: &dyn Backend,
    execution: Execution,
) -> Result<(FluxSolution, SolveReport)> {
    let start = Instant::now();
    let (sol, mut report) = match spec.method {
        Method::Benders => {
            let cfg = spec.benders(execution)?;
            solve_llfba_benders(system, &cfg, settings, backend)?
        }
        method => {
            let sol = if method == Method::Fba {
                solve_fba(system, settings, backend)?
            } else {
                solve_llfba(system, &spec.loopless(), settings, backend)?
            };
            let mut report = SolveReport::new(method.to_string(), sol.status);
            report.formulation = method.to_string();
            report.iterations = 1;
            report.objective = sol.objective_value.is_finite().then_some(sol.objective_value);
            (sol, report)
        }
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    if report.wall_time_s > settings.time_limit_s && report.status == SolveStatus::Optimal {
        report.status = SolveStatus::TimeLimit;
    }
    Ok((sol, report))
}

/// A benchmark grid as read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchGrid {
    /// Model paths (relative to the grid file), `builtin:example`,
    /// `builtin:two-cycle` or `random:<seed>`.
    #[serde(default)]
    pub instances: Vec<String>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
    #[serde(default)]
    pub seed: u64,
    /// When set, every instance is solved as an enzyme-constrained model with
    /// data generated from this seed.
    #[serde(default)]
    pub enzyme_seed: Option<u64>,
    #[serde(default)]
    pub execution: Execution,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_time_limit() -> f64 {
    1800.0
}

impl BenchGrid {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut grid: BenchGrid = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        grid.base_dir = path.parent().map(Path::to_path_buf);
        Ok(grid)
    }
}

/// Resolves an instance name to a model.
pub fn load_instance(name: &str, base_dir: Option<&Path>) -> Result<MetabolicModel> {
    if let Some(builtin) = name.strip_prefix("builtin:") {
        return match builtin {
            "example" => Ok(build_example_loop_model()),
            "two-cycle" => Ok(two_cycle_model()),
            other => Err(Error::InvalidInput(format!("unknown built-in instance `{other}`"))),
        };
    }
    if let Some(seed) = name.strip_prefix("random:") {
        let seed = seed
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad seed in `{name}`")))?;
        return Ok(random_model(seed, &RandomModelParams::default()));
    }
    let path = Path::new(name);
    match base_dir {
        Some(dir) if path.is_relative() => load_model(dir.join(path)),
        _ => load_model(path),
    }
}

/// Solves every (instance, method) pair. Rows come back in grid order
/// (instances outer, methods inner). A failing solve yields a
/// `NumericalError` row; only unloadable instances abort the run.
pub fn run_benchmark(grid: &BenchGrid, backend: &dyn Backend) -> Result<Vec<ReportRow>> {
    let mut systems: Vec<Box<dyn FluxSystem>> = Vec::new();
    for name in &grid.instances {
        let model = load_instance(name, grid.base_dir.as_deref())?;
        systems.push(match grid.enzyme_seed {
            Some(seed) => {
                let data = generate_enzyme_data(&model, seed, &EnzymeDataParams::default());
                Box::new(build_enzyme_model(&model, &data)?)
            }
            None => Box::new(model),
        });
    }
    let jobs: Vec<(usize, &MethodSpec)> = (0..systems.len())
        .flat_map(|i| grid.methods.iter().map(move |m| (i, m)))
        .collect();
    let rows = exec::map(grid.execution, &jobs, |&(i, spec)| {
        let settings = SolveSettings {
            time_limit_s: spec.time_limit_s.unwrap_or(grid.time_limit_s),
            seed: grid.seed,
            ..SolveSettings::default()
        };
        // rows are already spread over the pool; keep MIS enumeration serial
        let inner = Execution::Sequential;
        let mut report = match solve_with(spec, systems[i].as_ref(), &settings, backend, inner) {
            Ok((_, report)) => report,
            Err(e) => {
                log::warn!("{} / {}: {e}", grid.instances[i], spec.method);
                let mut r = SolveReport::new(spec.method.to_string(), SolveStatus::NumericalError);
                r.formulation = spec.method.to_string();
                r
            }
        };
        report.instance = grid.instances[i].clone();
        if spec.method == Method::Benders {
            report.formulation = spec.master.clone();
            report.pct = Some(spec.pct);
        }
        report.to_row()
    });
    Ok(rows)
}

/// Label grouping rows of one solver configuration.
pub fn method_label(row: &ReportRow) -> String {
    match row.pct {
        Some(pct) => format!("{}[{},pct={},{}]", row.method, row.formulation, pct, row.strategy),
        None => row.method.clone(),
    }
}

/// `exp(mean(ln(t + s))) - s`
pub fn shifted_geomean(times: &[f64], shift: f64) -> Option<f64> {
    if times.is_empty() {
        return None;
    }
    let mean = times.iter().map(|t| (t + shift).ln()).sum::<f64>() / times.len() as f64;
    Some(mean.exp() - shift)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub label: String,
    pub instances: usize,
    pub solved: usize,
    pub pct_solved: f64,
    /// Unsolved instances counted at the time limit.
    pub geomean_all: Option<f64>,
    /// Solved instances only.
    pub geomean_solved: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BucketSummary {
    pub label: String,
    pub instances: usize,
    pub methods: Vec<MethodSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub time_limit_s: f64,
    pub shift_s: f64,
    pub methods: Vec<MethodSummary>,
    pub buckets: Vec<BucketSummary>,
}

fn summarize(label: &str, rows: &[&ReportRow], limit: f64) -> MethodSummary {
    let solved: Vec<f64> = rows
        .iter()
        .filter(|r| r.status == SolveStatus::Optimal)
        .map(|r| r.wall_time_s)
        .collect();
    let all: Vec<f64> = rows
        .iter()
        .map(|r| if r.status == SolveStatus::Optimal { r.wall_time_s } else { limit })
        .collect();
    MethodSummary {
        label: label.to_string(),
        instances: rows.len(),
        solved: solved.len(),
        pct_solved: if rows.is_empty() { 0.0 } else { 100.0 * solved.len() as f64 / rows.len() as f64 },
        geomean_all: shifted_geomean(&all, GEOMEAN_SHIFT_S),
        geomean_solved: shifted_geomean(&solved, GEOMEAN_SHIFT_S),
    }
}

fn bucket_label(k: usize) -> String {
    match BUCKET_EDGES_S.get(k + 1) {
        Some(hi) => format!("[{},{})", BUCKET_EDGES_S[k], hi),
        None => format!("[{},inf)", BUCKET_EDGES_S[k]),
    }
}

/// Per-method solve rates and shifted geometric means, overall and per bucket
/// of instances grouped by their fastest solve. `time_limit_s` defaults to the
/// largest wall time in the report.
pub fn aggregate(rows: &[ReportRow], time_limit_s: Option<f64>) -> Summary {
    let limit = time_limit_s.unwrap_or_else(|| rows.iter().map(|r| r.wall_time_s).fold(0.0, f64::max));
    let mut by_method: BTreeMap<String, Vec<&ReportRow>> = BTreeMap::new();
    let mut fastest: BTreeMap<&str, Option<f64>> = BTreeMap::new();
    for row in rows {
        by_method.entry(method_label(row)).or_default().push(row);
        let best = fastest.entry(row.instance.as_str()).or_insert(None);
        if row.status == SolveStatus::Optimal {
            *best = Some(best.map_or(row.wall_time_s, |b| b.min(row.wall_time_s)));
        }
    }
    let methods = by_method.iter().map(|(l, rs)| summarize(l, rs, limit)).collect();

    let bucket_of = |instance: &str| -> Option<usize> {
        let t = fastest.get(instance).copied().flatten()?;
        Some(BUCKET_EDGES_S.iter().rposition(|&edge| t >= edge).unwrap_or(0))
    };
    let mut buckets = Vec::new();
    for k in 0..BUCKET_EDGES_S.len() {
        let members: Vec<&str> = fastest.keys().copied().filter(|i| bucket_of(i) == Some(k)).collect();
        if members.is_empty() {
            continue;
        }
        let methods = by_method
            .iter()
            .map(|(l, rs)| {
                let inside: Vec<&ReportRow> = rs.iter().copied().filter(|r| members.contains(&r.instance.as_str())).collect();
                summarize(l, &inside, limit)
            })
            .collect();
        buckets.push(BucketSummary {
            label: bucket_label(k),
            instances: members.len(),
            methods,
        });
    }
    let unsolved = fastest.values().filter(|t| t.is_none()).count();
    if unsolved > 0 {
        let methods = by_method
            .iter()
            .map(|(l, rs)| {
                let inside: Vec<&ReportRow> = rs.iter().copied().filter(|r| fastest[r.instance.as_str()].is_none()).collect();
                summarize(l, &inside, limit)
            })
            .collect();
        buckets.push(BucketSummary {
            label: "unsolved".into(),
            instances: unsolved,
            methods,
        });
    }
    Summary {
        time_limit_s: limit,
        shift_s: GEOMEAN_SHIFT_S,
        methods,
        buckets,
    }
}

impl Summary {
    /// Plain-text table with the aggregation settings as `#` comments.
    pub fn render(&self) -> String {
        let fmt_opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        let mut out = String::new();
        writeln!(out, "# shifted geometric mean, shift = {} s", self.shift_s).unwrap();
        writeln!(out, "# geomean_all counts unsolved instances at the time limit ({} s)", self.time_limit_s).unwrap();
        writeln!(out, "# geomean_solved uses solved instances only").unwrap();
        let mut table = |title: &str, instances: usize, methods: &[MethodSummary]| {
            writeln!(out, "\n## {title} ({instances} instances)").unwrap();
            writeln!(out, "method,solved,pct_solved,geomean_all_s,geomean_solved_s").unwrap();
            for m in methods {
                writeln!(
                    out,
                    "{},{}/{},{:.1},{},{}",
                    m.label,
                    m.solved,
                    m.instances,
                    m.pct_solved,
                    fmt_opt(m.geomean_all),
                    fmt_opt(m.geomean_solved)
                )
                .unwrap();
            }
        };
        let total = self.methods.iter().map(|m| m.instances).max().unwrap_or(0);
        table("all", total, &self.methods);
        for b in &self.buckets {
            table(&format!("fastest solve in {}", b.label), b.instances, &b.methods);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub method: String,
    pub time_s: f64,
    pub solved: usize,
}

/// Cumulative solved count over time per method: the k-th fastest solve at
/// time `t_k` gives the point `(t_k, k)`. A method without solves gets the
/// single point `(0, 0)`.
pub fn make_performance_profile(rows: &[ReportRow]) -> Vec<ProfilePoint> {
    let mut by_method: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in rows {
        let times = by_method.entry(method_label(row)).or_default();
        if row.status == SolveStatus::Optimal {
            times.push(row.wall_time_s);
        }
    }
    let mut points = Vec::new();
    for (method, mut times) in by_method {
        if times.is_empty() {
            points.push(ProfilePoint {
                method,
                time_s: 0.0,
                solved: 0,
            });
            continue;
        }
        times.sort_by(f64::total_cmp);
        for (k, t) in times.into_iter().enumerate() {
            points.push(ProfilePoint {
                method: method.clone(),
                time_s: t,
                solved: k + 1,
            });
        }
    }
    points
}

pub fn write_profile<W: std::io::Write>(out: W, points: &[ProfilePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)
            .map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv write failed: {e}")))
}
