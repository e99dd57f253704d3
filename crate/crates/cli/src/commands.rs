//! Subcommands: solve, write `result.json` and plot tables.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};
use sosmm_core::certify::{emptiness_certificate_seeded, BallSos, Outcome};
use sosmm_core::matrixsos::{hypothesis_margin, sos_preimage, verify_bound};
use sosmm_core::minmax::{
    alternate_two_stage, dual_weights, solve_minmax, two_stage, uniform_weights, BilinearObjective, BoundStatus, Inner,
};
use sosmm_core::sdp::Status;
use sosmm_core::sosmin::{certificate_gap, solve_min, Polynomial};
use sosmm_core::{SetKind, SimpleSet};

use crate::format::Table;
use crate::instances;
use crate::problem::{self, Overrides, Problem, ProblemFile};

/// Rows of the one-dimensional plot tables.
pub const PLOT_POINTS: usize = 1000;
/// Default oracle grid: points for one coordinate, per axis for two.
pub const GRID_1D: usize = 100_000;
pub const GRID_2D: usize = 1000;
/// Keys of `result.json` left out of reproducibility comparisons.
pub const VOLATILE_KEYS: [&str; 2] = ["timestamp", "timings"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveMin,
    SolveMinmax,
    TwoStage,
    Alternate,
    Certify,
    VerifyMatrixSos,
    Validate,
    Repro(Figure),
    /// Whatever the input file names in its `"command"` field.
    Run,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::SolveMin => "solve-min".into(),
            Command::SolveMinmax => "solve-minmax".into(),
            Command::TwoStage => "two-stage".into(),
            Command::Alternate => "alternate".into(),
            Command::Certify => "certify".into(),
            Command::VerifyMatrixSos => "verify-matrix-sos".into(),
            Command::Validate => "validate".into(),
            Command::Repro(f) => format!("repro {}", f.name()),
            Command::Run => "run".into(),
        }
    }

    /// Inverse of [`Command::name`] for the commands a problem file may name.
    pub fn from_file_name(name: &str) -> Option<Self> {
        Some(match name {
            "solve-min" => Command::SolveMin,
            "solve-minmax" => Command::SolveMinmax,
            "two-stage" => Command::TwoStage,
            "alternate" => Command::Alternate,
            "certify" => Command::Certify,
            "verify-matrix-sos" => Command::VerifyMatrixSos,
            "validate" => Command::Validate,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Two-stage upper bounds at increasing levels.
    Fig1,
    /// One-stage relaxation and dual weights on the three-polynomial instance.
    Fig2,
    /// Bivariate min-max.
    Fig3,
    /// Four polynomials on the square.
    Fig4,
    /// Alternating two-stage.
    Fig5,
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub seed: Option<u64>,
    pub hierarchy_x: Option<u32>,
    pub hierarchy_y: Option<u32>,
    pub grid: Option<usize>,
    pub out: PathBuf,
    pub format: Format,
    pub levels: Option<Vec<u32>>,
    pub iters: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: None,
            seed: None,
            hierarchy_x: None,
            hierarchy_y: None,
            grid: None,
            out: out.into(),
            format: Format::Json,
            levels: None,
            iters: None,
        }
    }
}

/// Outcome of a run: exit code, the `result.json` document and named tables.
#[derive(Debug, Clone)]
pub struct Report {
    pub exit_code: i32,
    pub result: Value,
    pub tables: Vec<(String, Table)>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub messages: Vec<String>,
}

impl CliError {
    fn new(kind: &'static str, msg: impl Into<String>) -> Self {
        Self { kind, messages: vec![msg.into()] }
    }
}

impl From<sosmm_core::Error> for CliError {
    fn from(e: sosmm_core::Error) -> Self {
        let kind = match e {
            sosmm_core::Error::Solver(_) => "solver",
            sosmm_core::Error::Conditioning(_) => "conditioning",
            _ => "input",
        };
        Self::new(kind, e.to_string())
    }
}

type Res<T> = Result<T, CliError>;

/// Runs a command, writes its artifacts under `cfg.out` and returns the
/// report. Failures produce exit code 1 and an `error.json`.
pub fn run(cfg: &RunConfig) -> Report {
    let started = Instant::now();
    let report = match execute(cfg) {
        Ok(r) => r,
        Err(e) => Report {
            exit_code: 1,
            result: json!({
                "command": cfg.command.name(),
                "error": {"kind": e.kind, "messages": e.messages},
            }),
            tables: Vec::new(),
        },
    };
    let mut result = report.result;
    if let Value::Object(map) = &mut result {
        let t = map.entry("timings").or_insert_with(|| json!({}));
        t["total_s"] = json!(started.elapsed().as_secs_f64());
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        map.insert("timestamp".into(), json!(now));
    }
    let report = Report { result, ..report };
    if let Err(e) = write_artifacts(cfg, &report) {
        eprintln!("{}", json!({"error": {"kind": "io", "messages": [e.to_string()]}}));
        return Report { exit_code: 1, ..report };
    }
    report
}

fn write_artifacts(cfg: &RunConfig, report: &Report) -> std::io::Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let (name, stale) = if report.exit_code == 1 && report.result.get("error").is_some() {
        ("error.json", "result.json")
    } else {
        ("result.json", "error.json")
    };
    // A leftover from an earlier run in the same directory would be misleading.
    match std::fs::remove_file(cfg.out.join(stale)) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e),
        _ => {}
    }
    let mut text = serde_json::to_string_pretty(&report.result).expect("serializable");
    text.push('\n');
    std::fs::write(cfg.out.join(name), text)?;
    for (n, t) in &report.tables {
        t.write(&cfg.out.join(format!("{n}.csv")))?;
    }
    Ok(())
}

/// `result` without the keys that change from run to run.
pub fn stable_result(v: &Value) -> Value {
    let mut v = v.clone();
    if let Value::Object(map) = &mut v {
        for k in VOLATILE_KEYS {
            map.remove(k);
        }
    }
    v
}

fn execute(cfg: &RunConfig) -> Res<Report> {
    match cfg.command {
        Command::Validate => validate(cfg),
        Command::VerifyMatrixSos => verify_matrix(cfg),
        Command::Repro(fig) => repro(cfg, fig),
        Command::Run => {
            let file = load(cfg)?;
            let Some(name) = file.command.as_deref() else {
                return Err(CliError::new("schema", "run needs a \"command\" field in the input file"));
            };
            let Some(command) = Command::from_file_name(name) else {
                return Err(CliError::new("schema", format!("unknown command \"{name}\"")));
            };
            execute(&RunConfig { command, ..cfg.clone() })
        }
        _ => {
            let file = load(cfg)?;
            dispatch(cfg, cfg.command, &file)
        }
    }
}

fn load(cfg: &RunConfig) -> Res<ProblemFile> {
    let Some(path) = &cfg.input else {
        return Err(CliError::new("usage", format!("{} needs an input file", cfg.command.name())));
    };
    problem::read(path).map_err(|messages| CliError { kind: "schema", messages })
}

fn build(cfg: &RunConfig, file: &ProblemFile) -> Res<Problem> {
    let ov = Overrides { sx: cfg.hierarchy_x, sy: cfg.hierarchy_y };
    problem::build(file, ov, false).map_err(|messages| CliError { kind: "schema", messages })
}

fn seed_of(cfg: &RunConfig, file: &ProblemFile) -> u64 {
    cfg.seed.or(file.seed).unwrap_or(0)
}

fn dispatch(cfg: &RunConfig, command: Command, file: &ProblemFile) -> Res<Report> {
    let seed = seed_of(cfg, file);
    let problem = build(cfg, file)?;
    let mut report = match (command, problem) {
        (Command::SolveMin, Problem::Min { set, f }) => solve_min_cmd(cfg, &set, &f, seed)?,
        (Command::SolveMin, _) => return Err(CliError::new("schema", "solve-min needs one function \"g\" and no \"setY\"")),
        (Command::Certify, p) => certify_cmd(p, seed)?,
        (c, Problem::Min { set, f }) => {
            let obj = BilinearObjective::finite(&set, vec![f])?;
            minmax_family(cfg, c, file, &obj, seed)?
        }
        (c, Problem::MinMax { obj }) => minmax_family(cfg, c, file, &obj, seed)?,
        (_, Problem::Matrix { .. }) => {
            return Err(CliError::new("schema", "matrix problems are handled by verify-matrix-sos"));
        }
    };
    if let Value::Object(m) = &mut report.result {
        m.insert("command".into(), json!(command.name()));
        m.insert("seed".into(), json!(seed));
    }
    Ok(report)
}

fn minmax_family(cfg: &RunConfig, c: Command, file: &ProblemFile, obj: &BilinearObjective, seed: u64) -> Res<Report> {
    match c {
        Command::SolveMinmax => solve_minmax_cmd(cfg, obj, seed),
        Command::TwoStage => {
            let levels = cfg.levels.clone().or(file.levels.clone()).unwrap_or_else(|| vec![obj.set_x().level()]);
            two_stage_cmd(cfg, obj, &levels, seed)
        }
        Command::Alternate => alternate_cmd(cfg, obj, cfg.iters.or(file.iters).unwrap_or(6), seed),
        _ => unreachable!("handled by dispatch"),
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Optimal => "Optimal",
        Status::Infeasible => "Infeasible",
        Status::Unbounded => "Unbounded",
        Status::MaxIter => "MaxIter",
        Status::NumericalFailure => "NumericalFailure",
    }
}

fn bound_name(b: BoundStatus) -> &'static str {
    match b {
        BoundStatus::LowerBound => "LowerBound",
        BoundStatus::Tight => "Tight",
        BoundStatus::UpperBound => "UpperBound",
        BoundStatus::Unknown => "Unknown",
    }
}

/// Grid over a set for oracles and plots, `n` points per coordinate.
pub fn grid_points(set: &SimpleSet, n: usize) -> Option<Vec<Vec<f64>>> {
    let axis = |lo: f64, hi: f64, closed: bool| -> Vec<f64> {
        let steps = if closed { n.saturating_sub(1).max(1) } else { n };
        (0..n).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect()
    };
    let cart = |axes: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        axes.into_iter().fold(vec![Vec::new()], |acc, ax| {
            acc.into_iter()
                .flat_map(|p| {
                    ax.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect()
        })
    };
    match set.kind() {
        SetKind::Trig { d } if *d <= 2 => Some(cart(vec![axis(0.0, 1.0, false); *d])),
        SetKind::Ball { d } if *d <= 2 => Some(
            cart(vec![axis(-1.0, 1.0, true); *d]).into_iter().filter(|x| x.iter().map(|v| v * v).sum::<f64>() <= 1.0).collect(),
        ),
        SetKind::Sphere { d: 1 } => Some(
            axis(0.0, 1.0, false)
                .into_iter()
                .map(|t| {
                    let a = 2.0 * std::f64::consts::PI * t;
                    vec![a.cos(), a.sin()]
                })
                .collect(),
        ),
        SetKind::BooleanCube { d } if *d <= 16 => Some(
            (0..1usize << d).map(|v| (0..*d).map(|i| if v >> i & 1 == 1 { 1.0 } else { -1.0 }).collect()).collect(),
        ),
        SetKind::Discrete { size } => Some((0..*size).map(|k| vec![k as f64]).collect()),
        SetKind::Product(fs) => {
            let parts: Option<Vec<Vec<Vec<f64>>>> = fs.iter().map(|f| grid_points(f, n)).collect();
            let parts = parts?;
            let total: usize = parts.iter().map(Vec::len).product();
            (total <= 4_000_000).then(|| {
                parts.into_iter().fold(vec![Vec::new()], |acc, part| {
                    acc.into_iter()
                        .flat_map(|p| {
                            part.iter().map(move |q| {
                                let mut r = p.clone();
                                r.extend_from_slice(q);
                                r
                            })
                        })
                        .collect()
                })
            })
        }
        _ => None,
    }
}

fn continuous_dims(set: &SimpleSet) -> usize {
    match set.kind() {
        SetKind::Discrete { .. } | SetKind::BooleanCube { .. } => 0,
        SetKind::Product(fs) => fs.iter().map(continuous_dims).sum(),
        _ => set.ambient_dim(),
    }
}

fn default_grid(total_dims: usize) -> Option<usize> {
    match total_dims {
        0 | 1 => Some(GRID_1D),
        2 => Some(GRID_2D),
        _ => None,
    }
}

/// Grid minimum of `max_y g(x, y)`: the value and a minimizing `x`.
pub fn grid_minmax(obj: &BilinearObjective, n: usize) -> Option<(f64, Vec<f64>)> {
    let xs = grid_points(obj.set_x(), n)?;
    let inner: Box<dyn Fn(&[f64]) -> f64> = match obj.inner() {
        Inner::Finite(g) => {
            let g = g.clone();
            Box::new(move |x| g.iter().map(|g| g.evaluate(x).unwrap_or(f64::NAN)).fold(f64::NEG_INFINITY, f64::max))
        }
        Inner::Set { set, g } => {
            let ys = grid_points(set, n)?;
            let g = g.clone();
            Box::new(move |x| {
                ys.iter()
                    .map(|y| {
                        let z: Vec<f64> = x.iter().chain(y).copied().collect();
                        g.evaluate(&z).unwrap_or(f64::NAN)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
        }
    };
    let mut best = (f64::INFINITY, Vec::new());
    for x in xs {
        let v = inner(&x);
        if v < best.0 {
            best = (v, x);
        }
    }
    // Minima of a max of smooth functions are often kinks, where a uniform
    // grid is only first-order accurate; zoom in on the torus.
    if let SetKind::Trig { d } = obj.set_x().kind() {
        let (d, k) = (*d, 20i64);
        let mut h = 1.0 / n as f64;
        for _ in 0..ZOOM_ROUNDS {
            let center = best.1.clone();
            let steps = (0..(2 * k + 1).pow(d as u32)).map(|mut idx| {
                (0..d)
                    .map(|i| {
                        let o = idx % (2 * k + 1) - k;
                        idx /= 2 * k + 1;
                        (center[i] + o as f64 * h / k as f64).rem_euclid(1.0)
                    })
                    .collect::<Vec<f64>>()
            });
            for x in steps {
                let v = inner(&x);
                if v < best.0 {
                    best = (v, x);
                }
            }
            h /= k as f64 / 2.0;
        }
    }
    Some(best)
}

/// Local refinement rounds of the torus grid oracle.
const ZOOM_ROUNDS: usize = 6;

fn oracle_json(obj: &BilinearObjective, cfg: &RunConfig, value: f64) -> Value {
    let dims = continuous_dims(obj.set_x()) + obj.set_y().map_or(0, continuous_dims);
    let Some(n) = cfg.grid.or(default_grid(dims)) else { return Value::Null };
    match grid_minmax(obj, n) {
        Some((v, x)) => json!({"grid_n": n, "value": v, "x": x, "relaxation_minus_oracle": value - v}),
        None => Value::Null,
    }
}

fn one_dim_plot(set: &SimpleSet) -> Option<Vec<Vec<f64>>> {
    match set.kind() {
        SetKind::Trig { d: 1 } | SetKind::Ball { d: 1 } => grid_points(set, PLOT_POINTS),
        _ => None,
    }
}

fn solve_min_cmd(cfg: &RunConfig, set: &SimpleSet, f: &Polynomial, seed: u64) -> Res<Report> {
    let t = Instant::now();
    let r = solve_min(set, f, seed)?;
    let elapsed = t.elapsed().as_secs_f64();
    let obj = BilinearObjective::finite(set, vec![f.clone()])?;
    let mut result = json!({
        "status": status_name(r.status),
        "value": r.value,
        "x_star": r.x_star,
        "moment_rank": r.moment_rank,
        "refined": r.refined,
        "certificate_gap": certificate_gap(f, &r),
        "duality_gap": r.solution.gap,
        "level": set.level(),
        "dims": set.dims(),
        "solve_s": elapsed,
        "oracle": oracle_json(&obj, cfg, r.value),
    });
    move_timing(&mut result, "solve_s");
    let mut tables = Vec::new();
    if let Some(xs) = one_dim_plot(set) {
        let mut t = Table::new(["x", "f"]);
        for x in xs {
            t.push(vec![x[0], f.evaluate(&x)?]);
        }
        tables.push(("solve_min".into(), t));
    }
    let exit_code = if r.status == Status::Optimal { 0 } else { 2 };
    Ok(Report { exit_code, result, tables })
}

/// Moves a wall-clock entry into the `timings` object so that the rest of
/// the document is reproducible.
fn move_timing(result: &mut Value, key: &str) {
    if let Value::Object(m) = result {
        if let Some(v) = m.remove(key) {
            let t = m.entry("timings").or_insert_with(|| Value::Object(Map::new()));
            if let Value::Object(t) = t {
                t.insert(key.into(), v);
            }
        }
    }
}

fn solve_minmax_cmd(cfg: &RunConfig, obj: &BilinearObjective, seed: u64) -> Res<Report> {
    let t = Instant::now();
    let r = solve_minmax(obj, seed)?;
    let elapsed = t.elapsed().as_secs_f64();
    let optimal = r.status == Status::Optimal;
    let v_star = if optimal && obj.p().is_some() { Some(dual_weights(&r, &r.x_star)?) } else { None };
    let mut result = json!({
        "status": status_name(r.status),
        "value": r.value,
        "x_star": r.x_star,
        "bound_status": bound_name(r.bound_status),
        "moment_rank": r.moment_rank,
        "refined": r.refined,
        "duality_gap": r.solution.gap,
        "level_x": obj.set_x().level(),
        "level_y": obj.set_y().map(|s| s.level()),
        "dims": obj.set_x().dims(),
        "v_at_x_star": v_star,
        "solve_s": elapsed,
        "oracle": oracle_json(obj, cfg, r.value),
    });
    move_timing(&mut result, "solve_s");
    let mut tables = Vec::new();
    if let (Some(xs), Inner::Finite(g)) = (one_dim_plot(obj.set_x()), obj.inner()) {
        let p = g.len();
        let mut header: Vec<String> = vec!["x".into()];
        header.extend((1..=p).map(|j| format!("g_{j}")));
        header.push("max_g".into());
        if optimal {
            header.extend((1..=p).map(|j| format!("v_{j}")));
        }
        let mut t = Table::new(header);
        for x in xs {
            let vals: Vec<f64> = g.iter().map(|g| g.evaluate(&x)).collect::<Result<_, _>>()?;
            let mut row = vec![x[0]];
            row.extend(&vals);
            row.push(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            if optimal {
                row.extend(dual_weights(&r, &x)?);
            }
            t.push(row);
        }
        tables.push(("minmax".into(), t));
    } else if let (Some(xs), Inner::Set { set, .. }) = (one_dim_plot(obj.set_x()), obj.inner()) {
        if let Some(ys) = grid_points(set, 200) {
            let mut t = Table::new(["x", "max_y_g"]);
            for x in xs.iter().step_by(5) {
                let m = ys.iter().map(|y| obj.evaluate(x, y).unwrap_or(f64::NAN)).fold(f64::NEG_INFINITY, f64::max);
                t.push(vec![x[0], m]);
            }
            tables.push(("minmax".into(), t));
        }
    }
    let exit_code = if optimal && r.bound_status != BoundStatus::Unknown { 0 } else { 2 };
    Ok(Report { exit_code, result, tables })
}

fn max_g(obj: &BilinearObjective, x: &[f64], ys: Option<&[Vec<f64>]>) -> f64 {
    match (obj.inner(), ys) {
        (Inner::Finite(g), _) => g.iter().map(|g| g.evaluate(x).unwrap_or(f64::NAN)).fold(f64::NEG_INFINITY, f64::max),
        (Inner::Set { .. }, Some(ys)) => {
            ys.iter().map(|y| obj.evaluate(x, y).unwrap_or(f64::NAN)).fold(f64::NEG_INFINITY, f64::max)
        }
        _ => f64::NAN,
    }
}

fn two_stage_cmd(cfg: &RunConfig, obj: &BilinearObjective, levels: &[u32], seed: u64) -> Res<Report> {
    if levels.is_empty() {
        return Err(CliError::new("usage", "at least one level is required"));
    }
    let mut runs = Vec::new();
    let mut per_level = Vec::new();
    let mut all_optimal = true;
    for &level in levels {
        let o = obj.with_hierarchy(level, None)?;
        let (_, m1, _) = o.set_x().dims();
        let pts = o.set_x().sample_points(m1, seed)?;
        let mu = uniform_weights(o.set_x(), pts.points())?;
        let r = two_stage(&o, pts.points(), &mu, seed)?;
        all_optimal &= r.stage1.is_optimal() && r.stage2.status == Status::Optimal;
        per_level.push(json!({
            "level": level,
            "value": r.value,
            "stage1_value": r.stage1_value,
            "x_star": r.x_star,
            "certificate_gap": r.certificate_gap,
            "stage1_status": status_name(r.stage1.status),
            "duality_gap": r.stage1.gap,
        }));
        runs.push(r);
    }
    let last = runs.last().expect("one level");
    let mut result = json!({
        "status": if all_optimal { "Optimal" } else { "Unknown" },
        "value": last.value,
        "x_star": last.x_star,
        "bound_status": "UpperBound",
        "levels": per_level,
        "oracle": oracle_json(obj, cfg, last.value),
    });
    let mut tables = Vec::new();
    if let Some(xs) = one_dim_plot(obj.set_x()) {
        let ys = obj.set_y().and_then(|s| grid_points(s, 200));
        let mut header = vec!["x".to_string(), "max_g".into()];
        header.extend(levels.iter().map(|l| format!("a_{l}")));
        let mut t = Table::new(header);
        let step = if ys.is_some() { 5 } else { 1 };
        // Slack of each bound over max g, and the largest rise from one level
        // to the next; the latter is positive when the bounds cross.
        let mut min_slack = vec![f64::INFINITY; runs.len()];
        let mut max_rise = vec![f64::NEG_INFINITY; runs.len().saturating_sub(1)];
        for x in xs.iter().step_by(step) {
            let g = max_g(obj, x, ys.as_deref());
            let a: Vec<f64> = runs.iter().map(|r| r.upper_bound(x)).collect();
            for (k, v) in a.iter().enumerate() {
                min_slack[k] = min_slack[k].min(v - g);
            }
            for (k, w) in a.windows(2).enumerate() {
                max_rise[k] = max_rise[k].max(w[1] - w[0]);
            }
            let mut row = vec![x[0], g];
            row.extend(a);
            t.push(row);
        }
        result["pointwise"] = json!({ "min_slack": min_slack, "max_rise": max_rise });
        tables.push(("two_stage".into(), t));
    }
    Ok(Report { exit_code: if all_optimal { 0 } else { 2 }, result, tables })
}

fn alternate_cmd(cfg: &RunConfig, obj: &BilinearObjective, iters: usize, seed: u64) -> Res<Report> {
    let (_, m1, _) = obj.set_x().dims();
    let pts = obj.set_x().sample_points(m1, seed)?;
    let mu = uniform_weights(obj.set_x(), pts.points())?;
    let tr = alternate_two_stage(obj, pts.points(), &mu, iters, seed)?;
    let last = *tr.values.last().expect("at least one iteration");
    let result = json!({
        "status": "Optimal",
        "value": last,
        "x_star": tr.x_star.last(),
        "bound_status": "UpperBound",
        "iterations": iters,
        "values": tr.values,
        "stage2_values": tr.stage2_values,
        "x_stars": tr.x_star,
        "oracle": oracle_json(obj, cfg, last),
    });
    let d = obj.set_x().ambient_dim();
    let mut header = vec!["iteration".to_string(), "value".into(), "stage2_value".into()];
    header.extend((1..=d).map(|i| format!("x_star_{i}")));
    let mut t = Table::new(header);
    for k in 0..tr.values.len() {
        let mut row = vec![(k + 1) as f64, tr.values[k], tr.stage2_values[k]];
        row.extend(&tr.x_star[k]);
        t.push(row);
    }
    Ok(Report { exit_code: 0, result, tables: vec![("alternate".into(), t)] })
}

fn gram_json(m: &DMatrix<f64>) -> Value {
    json!({"order": m.nrows(), "row_major": m.transpose().as_slice().to_vec()})
}

fn sos_json(q: &BallSos) -> Value {
    json!({
        "u_basis": q.u_basis,
        "u_gram": gram_json(&q.u_gram),
        "v_basis": q.v_basis,
        "v_gram": gram_json(&q.v_gram),
        "min_eigenvalue": q.min_eigenvalue(),
    })
}

fn certify_cmd(p: Problem, seed: u64) -> Res<Report> {
    let (g_list, level) = match p {
        Problem::Min { set, f } => (vec![f], set.level()),
        Problem::MinMax { obj } => match obj.inner() {
            Inner::Finite(g) => (g.clone(), obj.set_x().level()),
            Inner::Set { .. } => return Err(CliError::new("schema", "certify needs a list of functions \"g_list\"")),
        },
        Problem::Matrix { .. } => return Err(CliError::new("schema", "certify needs functions on a ball")),
    };
    match emptiness_certificate_seeded(&g_list, level, seed)? {
        Outcome::Certificate(c) => {
            let result = json!({
                "status": "Certificate",
                "value": c.value,
                "c": c.c,
                "degree": c.degree,
                "residual": c.residual,
                "min_eigenvalue": c.min_eigenvalue,
                "correction": c.correction,
                "psd_margins": c.gram_blocks().iter().map(|g| sosmm_core::matalg::sym_eigen(g).values.iter().copied().fold(f64::INFINITY, f64::min)).collect::<Vec<_>>(),
                "certificate": {
                    "degree": c.degree,
                    "dim": c.dim,
                    "c": c.c,
                    "q0": sos_json(&c.q0),
                    "q": c.q.iter().map(sos_json).collect::<Vec<_>>(),
                    "points": c.points,
                },
            });
            Ok(Report { exit_code: 0, result, tables: Vec::new() })
        }
        Outcome::Undecided { value, note } => {
            let result = json!({"status": "Undecided", "value": value, "degree": level, "note": note});
            Ok(Report { exit_code: 2, result, tables: Vec::new() })
        }
    }
}

fn bound_table() -> Res<Table> {
    let mut t = Table::new(["d", "r", "s", "max_dev", "bound", "ok"]);
    for d in 1..=2u32 {
        for r in 1..=2u32 {
            for s in 3 * r..=12 {
                let b = verify_bound(d, r, s)?;
                t.push(vec![d.into(), r.into(), s.into(), b.max_dev, b.bound, if b.ok { 1.0 } else { 0.0 }]);
            }
        }
    }
    Ok(t)
}

fn verify_matrix(cfg: &RunConfig) -> Res<Report> {
    let table = bound_table()?;
    let all_ok = table.column("ok").expect("column").iter().all(|v| *v == 1.0);
    let mut result = json!({"command": "verify-matrix-sos", "bounds_ok": all_ok});
    let mut ok = all_ok;
    if cfg.input.is_some() {
        let file = load(cfg)?;
        let Problem::Matrix { f, r, s } = build(cfg, &file)? else {
            return Err(CliError::new("schema", "verify-matrix-sos needs a \"matrix\" entry"));
        };
        let n = cfg.grid.unwrap_or(if f.dim() == 1 { 10_000 } else { 200 });
        let margin = hypothesis_margin(&f, r, s, n)?;
        let h = sos_preimage(&f, s)?;
        let h_min = h.grid_min_eigenvalue(n);
        ok &= h_min >= -1e-9;
        result["matrix"] = json!({
            "r": r,
            "s": s,
            "grid_n": n,
            "hypothesis_margin": margin,
            "hypothesis_holds": margin >= 0.0,
            "preimage_min_eigenvalue": h_min,
            "preimage_psd": h_min >= -1e-9,
        });
    }
    result["status"] = json!(if ok { "Optimal" } else { "Unknown" });
    Ok(Report { exit_code: if ok { 0 } else { 2 }, result, tables: vec![("matrix_sos".into(), table)] })
}

fn validate(cfg: &RunConfig) -> Res<Report> {
    let errors = match load(cfg) {
        Ok(f) => problem::validate(&f),
        Err(e) => e.messages,
    };
    let ok = errors.is_empty();
    let result = json!({"command": "validate", "valid": ok, "errors": errors});
    Ok(Report { exit_code: if ok { 0 } else { 1 }, result, tables: Vec::new() })
}

fn repro(cfg: &RunConfig, fig: Figure) -> Res<Report> {
    let write_input = |file: &ProblemFile| -> Res<()> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::new("io", e.to_string()))?;
        let text = serde_json::to_string_pretty(file).expect("serializable") + "\n";
        std::fs::write(cfg.out.join("problem.json"), text).map_err(|e| CliError::new("io", e.to_string()))
    };
    let mut report = match fig {
        Figure::Fig1 => {
            let mut file = instances::three_poly(instances::FIG_SEED);
            file.levels = Some(vec![2, 4, 8]);
            write_input(&file)?;
            let mut r = dispatch(cfg, Command::TwoStage, &file)?;
            let one = {
                let mut f = file.clone();
                f.hierarchy = Some(problem::Hierarchy { sx: Some(4), sy: None });
                dispatch(cfg, Command::SolveMinmax, &f)?
            };
            r.result["one_stage"] = json!({
                "level": 4,
                "value": one.result["value"],
                "bound_status": one.result["bound_status"],
            });
            r
        }
        Figure::Fig2 => {
            let mut file = instances::three_poly(instances::FIG_SEED);
            file.hierarchy = Some(problem::Hierarchy { sx: Some(4), sy: None });
            write_input(&file)?;
            let mut r = dispatch(cfg, Command::SolveMinmax, &file)?;
            let two = dispatch(cfg, Command::TwoStage, &file)?;
            r.result["two_stage"] = json!({"value": two.result["value"], "x_star": two.result["x_star"]});
            if let (Some(t1), Some(t2)) = (r.table("minmax").cloned(), two.table("two_stage")) {
                let a = t2.column("a_4").expect("level 4");
                let mut header: Vec<String> = t1.header().to_vec();
                header.push("a_two_stage".into());
                let mut t = Table::new(header);
                for (row, a) in t1.rows().iter().zip(a) {
                    let mut row = row.clone();
                    row.push(a);
                    t.push(row);
                }
                r.tables = vec![("fig2".into(), t)];
            }
            r
        }
        Figure::Fig3 => {
            let file = instances::bivariate(instances::BIVARIATE_SEED);
            write_input(&file)?;
            let mut r = dispatch(cfg, Command::SolveMinmax, &file)?;
            let two = dispatch(cfg, Command::TwoStage, &file)?;
            r.result["two_stage"] = json!({"value": two.result["value"], "x_star": two.result["x_star"]});
            if let Some(t) = two.table("two_stage") {
                r.tables.push(("fig3_two_stage".into(), t.clone()));
            }
            r
        }
        Figure::Fig4 => {
            let mut file = instances::four_poly_square(instances::SQUARE_SEED);
            file.hierarchy = Some(problem::Hierarchy { sx: Some(2), sy: None });
            write_input(&file)?;
            let mut r = dispatch(cfg, Command::SolveMinmax, &file)?;
            let Problem::MinMax { obj } = build(cfg, &file)? else { unreachable!("finite instance") };
            let n = 100;
            let mut t = Table::new(["x_1", "x_2", "max_g"]);
            for x in grid_points(obj.set_x(), n).expect("torus grid") {
                t.push(vec![x[0], x[1], max_g(&obj, &x, None)]);
            }
            r.tables.push(("fig4".into(), t));
            r
        }
        Figure::Fig5 => {
            let mut file = instances::three_poly(instances::ALTERNATE_SEED);
            file.iters = Some(6);
            write_input(&file)?;
            dispatch(cfg, Command::Alternate, &file)?
        }
    };
    report.result["command"] = json!(Command::Repro(fig).name());
    Ok(report)
}

/// Reads `result.json` from a run directory.
pub fn read_result(dir: &Path) -> std::io::Result<Value> {
    let text = std::fs::read_to_string(dir.join("result.json"))?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}
