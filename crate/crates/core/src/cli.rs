//! Command-line front end.
//!
//! Every subcommand writes exactly one primary output (JSON or CSV) to
//! `--output` or stdout. When written to a file, a `<output>.manifest.json`
//! recording inputs, resolved parameters and seed is placed beside it.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a check did not pass.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cluster::{
    box4_paper_state, build_cluster_collision, build_cluster_ideal, local_equivalence, verify_cluster,
    ClusterGraph, GateSet, BOX4_COLLISION_ORDER,
};
use crate::dynamics::{
    echo_analysis, required_fock_dim, write_trajectory_csv, JumpConvention, SystemParams, DEFAULT_G,
    DEFAULT_OMEGA0,
};
use crate::gate::{controlled_phase_from, gate_conditions, ground_first, truth_table_residuals, DEFAULT_K};
use crate::grover::{
    calibrate, decode, oracle_truth, prepare_cluster, write_branches_csv, ClusterSource, MeasurementOrder,
    OracleSetting,
};
use crate::schedule::{
    experiment_budget, feasibility_scan, solve_schedule, validate_schedule, write_scan_csv, Orientation,
    PhysicalBounds, ScheduleConfig, SolveOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "oneway-cqed", version, about = "Cavity-QED one-way quantum computing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct OutputArgs {
    /// Write the result here instead of stdout (a manifest is written beside it).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Composite controlled-phase gate and its truth-table residuals.
    GateCheck {
        #[arg(long, default_value_t = DEFAULT_G)]
        g: f64,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: u32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Two-atom trajectory under the full and effective models.
    Dynamics(DynamicsArgs),
    /// Collision schedule search and validation.
    #[command(subcommand)]
    Schedule(ScheduleCommand),
    /// Four-atom cluster state checks.
    #[command(subcommand)]
    Cluster(ClusterCommand),
    /// Two-qubit Grover search on the four-atom cluster.
    #[command(subcommand)]
    Grover(GroverCommand),
    /// Timing budget of a schedule against the gate duration.
    Budget {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_G)]
        g: f64,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: u32,
        /// Detector distance from the source in metres.
        #[arg(long)]
        detector: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    /// JSON file with system parameters; flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Rabi frequency Ω of the drive.
    #[arg(long)]
    omega: Option<f64>,
    /// Cavity damping rate Γ.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_th: Option<f64>,
    #[arg(long)]
    fock_dim: Option<usize>,
    #[arg(long, default_value = "paper_literal")]
    convention: JumpConvention,
    #[arg(long, default_value_t = 1)]
    periods: u32,
    #[arg(long)]
    steps_per_period: Option<usize>,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Which trajectory goes to the CSV.
    #[arg(long, value_parser = ["full", "effective"], default_value = "full")]
    model: String,
    /// Also write the summary JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand, Debug)]
enum ScheduleCommand {
    /// Search for a collision schedule for N atoms.
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        starts: usize,
        #[arg(long, default_value = "paper_eq10")]
        orientation: Orientation,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check a schedule against the physical bounds.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Success rate of the solver over a range of N.
    Scan {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        starts: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Subcommand, Debug)]
enum ClusterCommand {
    /// Correlation-operator check of a Box(4) cluster state.
    Verify {
        #[arg(long, value_parser = ["ideal", "collision", "paper"], default_value = "collision")]
        source: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct SettingArgs {
    /// Oracle angle α: `pi`, `0` or a number in radians.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, default_value = "collision")]
    source: ClusterSource,
    /// Optional preset file with `alpha`, `beta` and `source`, overriding the flags.
    #[arg(long)]
    preset: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GroverCommand {
    /// All 16 measurement branches.
    Enumerate {
        #[command(flatten)]
        setting: SettingArgs,
        /// Measure atom 3 before atom 4.
        #[arg(long)]
        three_first: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Stochastic single-shot runs.
    Sample {
        #[command(flatten)]
        setting: SettingArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        shots: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    match t.as_str() {
        "pi" | "π" => Ok(PI),
        "-pi" | "-π" => Ok(-PI),
        _ => t.parse::<f64>().map_err(|_| format!("'{s}' is not an angle (use pi, 0 or radians)")),
    }
}

/// A failed command: exit code plus message for stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Reproducibility record written beside every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp: u64,
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

struct Run {
    subcommand: &'static str,
    parameters: Value,
    inputs: Vec<PathBuf>,
    seed: Option<u64>,
}

impl Run {
    fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            parameters: Value::Null,
            inputs: Vec::new(),
            seed: None,
        }
    }

    fn manifest(&self, outputs: &[&Path]) -> RunManifest {
        RunManifest {
            subcommand: self.subcommand.to_string(),
            parameters: self.parameters.clone(),
            inputs: self.inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp(),
        }
    }

    /// Writes `body` to `path` (with its manifest) or to stdout.
    fn emit(&self, path: Option<&Path>, body: &str) -> Result<(), Failure> {
        match path {
            None => {
                print!("{body}");
                Ok(())
            }
            Some(p) => {
                write_file(p, body)?;
                let manifest = self.manifest(&[p]);
                let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
                write_file(&manifest_path(p), &(text + "\n"))
            }
        }
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::input(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, body).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("results serialize") + "\n"
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> String {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn status(pass: bool) -> i32 {
    if pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

// ---------------------------------------------------------------------------
// Config loading

/// Reads typed fields out of a JSON object, collecting every problem.
struct Fields<'a> {
    map: &'a Map<String, Value>,
    used: Vec<&'static str>,
    errors: Vec<String>,
}

impl<'a> Fields<'a> {
    fn new(map: &'a Map<String, Value>) -> Self {
        Self {
            map,
            used: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn f64(&mut self, key: &'static str) -> Option<f64> {
        let v = self.raw(key)?;
        match v.as_f64() {
            Some(x) => Some(x),
            None => {
                self.errors.push(format!("{key}: expected a number, found {v}"));
                None
            }
        }
    }

    fn usize(&mut self, key: &'static str) -> Option<usize> {
        let v = self.raw(key)?;
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.errors.push(format!("{key}: expected a non-negative integer, found {v}"));
                None
            }
        }
    }

    fn string(&mut self, key: &'static str) -> Option<&'a str> {
        let v = self.raw(key)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.errors.push(format!("{key}: expected a string, found {v}"));
                None
            }
        }
    }

    fn f64_list(&mut self, key: &'static str) -> Option<Vec<f64>> {
        let v = self.raw(key)?;
        let Some(items) = v.as_array() else {
            self.errors.push(format!("{key}: expected an array of numbers"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            match item.as_f64() {
                Some(x) => out.push(x),
                None => self.errors.push(format!("{key}[{i}]: expected a number, found {item}")),
            }
        }
        (out.len() == items.len()).then_some(out)
    }

    fn finish(mut self) -> Vec<String> {
        let mut unknown: Vec<&String> = self.map.keys().filter(|k| !self.used.contains(&k.as_str())).collect();
        unknown.sort();
        for k in unknown {
            self.errors.push(format!("{k}: unknown field"));
        }
        self.errors
    }
}

fn read_object(path: &Path) -> Result<Map<String, Value>, Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let value: Value = serde_json::from_str(&text).map_err(|e| vec![format!("{}: invalid JSON: {e}", path.display())])?;
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(vec![format!("{}: expected a JSON object", path.display())]),
    }
}

fn load_error(path: &Path, errors: Vec<String>) -> Failure {
    let mut msg = format!("invalid config {}:", path.display());
    for e in errors {
        msg.push_str("\n  ");
        msg.push_str(&e);
    }
    Failure::input(msg)
}

/// System parameters from a JSON object. Omitted fields default to
/// `g = 2π·25 kHz`, `δ = g`, `Ω = 5δ`, `Γ = g/100`, `n_th = 1` and the
/// truncation required by `n_th`.
pub fn params_from_map(map: &Map<String, Value>) -> Result<SystemParams, Vec<String>> {
    let mut f = Fields::new(map);
    let g = f.f64("g").unwrap_or(DEFAULT_G);
    let omega0 = f.f64("omega0").unwrap_or(DEFAULT_OMEGA0);
    let delta = f.f64("delta").unwrap_or(g);
    let rabi = f.f64("Omega").unwrap_or(5.0 * delta);
    let gamma = f.f64("Gamma").unwrap_or(g / 100.0);
    let n_th = f.f64("n_th").unwrap_or(1.0);
    let fock_dim = f.usize("fock_dim");
    let mut errors = f.finish();
    let params = SystemParams {
        g,
        omega0,
        delta,
        rabi,
        gamma,
        n_th,
        fock_dim: fock_dim.unwrap_or_else(|| if n_th.is_finite() && n_th >= 0.0 { required_fock_dim(n_th) } else { 2 }),
    };
    errors.extend(params.validation_errors());
    if errors.is_empty() {
        Ok(params)
    } else {
        Err(errors)
    }
}

pub fn load_params(path: &Path) -> Result<SystemParams, Vec<String>> {
    params_from_map(&read_object(path)?)
}

pub fn bounds_from_map(map: &Map<String, Value>) -> Result<PhysicalBounds, Vec<String>> {
    let d = PhysicalBounds::default();
    let mut f = Fields::new(map);
    let v_range = match f.f64_list("v_range") {
        Some(v) if v.len() == 2 => (v[0], v[1]),
        Some(v) => {
            f.errors.push(format!("v_range: expected [min, max], found {} entries", v.len()));
            d.v_range
        }
        None => d.v_range,
    };
    let bounds = PhysicalBounds {
        v_range,
        velocity_precision: f.f64("velocity_precision").unwrap_or(d.velocity_precision),
        timing_precision: f.f64("timing_precision").unwrap_or(d.timing_precision),
        max_length: f.f64("max_length").unwrap_or(d.max_length),
        cavity_waist: f.f64("cavity_waist").unwrap_or(d.cavity_waist),
        min_event_gap: f.f64("min_event_gap").unwrap_or(d.min_event_gap),
        min_cavity_position: f.f64("min_cavity_position").unwrap_or(d.min_cavity_position),
        emission_window: f.f64("emission_window").unwrap_or(d.emission_window),
        detector_position: f.f64("detector_position").unwrap_or(d.detector_position),
    };
    let mut errors = f.finish();
    errors.extend(bounds.validation_errors());
    if errors.is_empty() {
        Ok(bounds)
    } else {
        Err(errors)
    }
}

pub fn load_bounds(path: &Path) -> Result<PhysicalBounds, Vec<String>> {
    bounds_from_map(&read_object(path)?)
}

pub fn schedule_from_map(map: &Map<String, Value>) -> Result<ScheduleConfig, Vec<String>> {
    let mut f = Fields::new(map);
    let n = f.usize("n");
    let orientation = f.string("orientation").map(|s| s.parse::<Orientation>());
    let v = f.f64_list("v_mps");
    let t = f.f64_list("t_s");
    let l = f.f64_list("L_m");
    let mut errors = f.finish();
    for (key, present) in [("v_mps", v.is_some()), ("t_s", t.is_some()), ("L_m", l.is_some())] {
        if !present && !map.contains_key(key) {
            errors.push(format!("{key}: required"));
        }
    }
    let orientation = match orientation {
        Some(Ok(o)) => o,
        Some(Err(e)) => {
            errors.push(format!("orientation: {e}"));
            Orientation::PaperEq10
        }
        None => Orientation::PaperEq10,
    };
    if let Some(v) = &v {
        for (i, x) in v.iter().enumerate() {
            if !(*x > 0.0 && x.is_finite()) {
                errors.push(format!("v_mps[{i}]: speed must be positive, got {x}"));
            }
        }
    }
    if let (Some(n), Some(v)) = (n, &v) {
        if n != v.len() {
            errors.push(format!("n: {n} does not match {} speeds", v.len()));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let (v, t, l) = (v.unwrap_or_default(), t.unwrap_or_default(), l.unwrap_or_default());
    ScheduleConfig::new(orientation, v, t, l).map_err(|e| vec![e.to_string()])
}

pub fn load_schedule(path: &Path) -> Result<ScheduleConfig, Vec<String>> {
    schedule_from_map(&read_object(path)?)
}

fn bounds_or_default(run: &mut Run, path: &Option<PathBuf>) -> Result<PhysicalBounds, Failure> {
    match path {
        None => Ok(PhysicalBounds::default()),
        Some(p) => {
            run.inputs.push(p.clone());
            load_bounds(p).map_err(|e| load_error(p, e))
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_gate_check(g: f64, m: u32, k: u32, out: &OutputArgs) -> CmdResult {
    let mut run = Run::new("gate-check");
    let params = gate_conditions(g, m, k).map_err(|e| Failure::input(e.to_string()))?;
    run.parameters = json!({ "g": g, "m": m, "k": k });
    let gate = controlled_phase_from(&params).map_err(|e| Failure::input(e.to_string()))?;
    let report = truth_table_residuals(&gate);
    let gf = ground_first(&gate);
    let rows = |f: fn(&crate::quantum::C64) -> f64| -> Vec<Vec<f64>> {
        (0..4).map(|r| (0..4).map(|c| f(&gf.entry(r, c))).collect()).collect()
    };
    let body = json!({
        "params": params,
        "basis": ["gg", "ge", "eg", "ee"],
        "gate_re": rows(|z| z.re),
        "gate_im": rows(|z| z.im),
        "truth_table": report,
    });
    run.emit(out.output.as_deref(), &to_json(&body))?;
    Ok(status(report.pass))
}

fn cmd_dynamics(a: &DynamicsArgs) -> CmdResult {
    let mut run = Run::new("dynamics");
    let mut map = match &a.params {
        Some(p) => {
            run.inputs.push(p.clone());
            read_object(p).map_err(|e| load_error(p, e))?
        }
        None => Map::new(),
    };
    let overrides = [("g", a.g), ("delta", a.delta), ("Omega", a.omega), ("Gamma", a.gamma), ("n_th", a.n_th)];
    for (key, value) in overrides {
        if let Some(v) = value {
            map.insert(key.into(), json!(v));
        }
    }
    if let Some(d) = a.fock_dim {
        map.insert("fock_dim".into(), json!(d));
    }
    let params = params_from_map(&map).map_err(|e| {
        load_error(a.params.as_deref().unwrap_or(Path::new("<flags>")), e)
    })?;
    run.parameters = json!({
        "system": params,
        "convention": a.convention,
        "periods": a.periods,
        "steps_per_period": a.steps_per_period,
        "stride": a.stride,
        "model": a.model,
    });
    let report = echo_analysis(&params, a.convention, a.periods, a.steps_per_period)
        .map_err(|e| Failure::input(e.to_string()))?;
    let traj = if a.model == "effective" { &report.effective } else { &report.full };
    let csv = csv_string(|buf| write_trajectory_csv(traj, buf, a.stride));
    run.emit(a.out.output.as_deref(), &csv)?;
    if let Some(path) = &a.report {
        let summary = json!({ "params": params, "convention": a.convention, "report": &report });
        write_file(path, &to_json(&summary))?;
        let text = to_json(&run.manifest(&[path]));
        write_file(&manifest_path(path), &text)?;
    }
    Ok(EXIT_OK)
}

fn cmd_schedule(cmd: &ScheduleCommand) -> CmdResult {
    match cmd {
        ScheduleCommand::Solve {
            n,
            seed,
            bounds,
            starts,
            orientation,
            out,
        } => {
            let mut run = Run::new("schedule solve");
            let bounds = bounds_or_default(&mut run, bounds)?;
            run.seed = Some(*seed);
            run.parameters = json!({ "n": n, "starts": starts, "orientation": orientation, "bounds": bounds });
            let opts = SolveOptions {
                starts: *starts,
                orientation: *orientation,
                ..SolveOptions::default()
            };
            let outcome = solve_schedule(*n, &bounds, *seed, &opts);
            run.emit(out.output.as_deref(), &to_json(&outcome))?;
            Ok(status(outcome.is_solved()))
        }
        ScheduleCommand::Validate { config, bounds, out } => {
            let mut run = Run::new("schedule validate");
            run.inputs.push(config.clone());
            let cfg = load_schedule(config).map_err(|e| load_error(config, e))?;
            let bounds = bounds_or_default(&mut run, bounds)?;
            run.parameters = json!({ "config": cfg, "bounds": bounds });
            let report = validate_schedule(&cfg, &bounds);
            let body = json!({ "clean": report.is_clean(), "report": report });
            run.emit(out.output.as_deref(), &to_json(&body))?;
            Ok(status(report.is_clean()))
        }
        ScheduleCommand::Scan {
            n_min,
            n_max,
            trials,
            seed,
            bounds,
            starts,
            out,
        } => {
            if n_min > n_max || *n_min < 2 {
                return Err(Failure::input(format!("need 2 <= n-min <= n-max, got {n_min}..{n_max}")));
            }
            let mut run = Run::new("schedule scan");
            let bounds = bounds_or_default(&mut run, bounds)?;
            run.seed = Some(*seed);
            run.parameters = json!({ "n_min": n_min, "n_max": n_max, "trials": trials, "starts": starts, "bounds": bounds });
            let opts = SolveOptions {
                starts: *starts,
                ..SolveOptions::default()
            };
            let rows = feasibility_scan(*n_min..=*n_max, &bounds, *trials, *seed, &opts);
            run.emit(out.output.as_deref(), &csv_string(|buf| write_scan_csv(&rows, buf)))?;
            Ok(EXIT_OK)
        }
    }
}

fn cmd_cluster(cmd: &ClusterCommand) -> CmdResult {
    let ClusterCommand::Verify { source, out } = cmd;
    let mut run = Run::new("cluster verify");
    run.parameters = json!({ "source": source, "graph": "box4" });
    let graph = ClusterGraph::box4();
    let fail = |e: crate::cluster::ClusterError| Failure::input(e.to_string());
    let ideal = build_cluster_ideal(&graph).map_err(fail)?.state;
    let state = match source.as_str() {
        "ideal" => ideal.clone(),
        "paper" => box4_paper_state(),
        _ => {
            let gate = crate::gate::controlled_phase(DEFAULT_K);
            build_cluster_collision(&graph, &gate, &BOX4_COLLISION_ORDER).map_err(fail)?.state
        }
    };
    let verification = verify_cluster(&state, &graph).map_err(fail)?;
    let frame = local_equivalence(&state, &ideal, GateSet::PauliHadamard);
    let clifford = match &frame {
        Some(_) => None,
        None => local_equivalence(&state, &ideal, GateSet::Clifford),
    };
    let body = json!({
        "source": source,
        "edges": graph.edges(),
        "is_eigenstate": verification.is_eigenstate(),
        "kappa": verification.kappa(),
        "max_residual": verification.max_residual(),
        "vertices": verification.vertices,
        "pauli_hadamard_frame": frame,
        "clifford_frame": clifford,
    });
    run.emit(out.output.as_deref(), &to_json(&body))?;
    Ok(status(verification.is_eigenstate()))
}

fn resolve_setting(run: &mut Run, s: &SettingArgs) -> Result<(OracleSetting, ClusterSource), Failure> {
    let (mut alpha, mut beta, mut source) = (s.alpha, s.beta, s.source);
    if let Some(p) = &s.preset {
        run.inputs.push(p.clone());
        let map = read_object(p).map_err(|e| load_error(p, e))?;
        let mut f = Fields::new(&map);
        let angle = |f: &mut Fields, key: &'static str| -> Option<f64> {
            let v = f.raw(key)?;
            let parsed = match v {
                Value::String(s) => parse_angle(s).ok(),
                other => other.as_f64(),
            };
            if parsed.is_none() {
                f.errors.push(format!("{key}: expected an angle, found {v}"));
            }
            parsed
        };
        let a = angle(&mut f, "alpha");
        let b = angle(&mut f, "beta");
        let src = f.string("source").map(|s| s.parse::<ClusterSource>());
        let mut errors = f.finish();
        match src {
            Some(Ok(x)) => source = x,
            Some(Err(e)) => errors.push(format!("source: {e}")),
            None => {}
        }
        if !errors.is_empty() {
            return Err(load_error(p, errors));
        }
        alpha = a.or(alpha);
        beta = b.or(beta);
    }
    match (alpha, beta) {
        (Some(a), Some(b)) => Ok((OracleSetting::new(a, b), source)),
        _ => Err(Failure::input("both --alpha and --beta are required (or a --preset providing them)")),
    }
}

fn cmd_grover(cmd: &GroverCommand) -> CmdResult {
    let cal = calibrate().map_err(|e| Failure::input(e.to_string()))?;
    match cmd {
        GroverCommand::Enumerate {
            setting,
            three_first,
            out,
        } => {
            let mut run = Run::new("grover enumerate");
            let (setting, source) = resolve_setting(&mut run, setting)?;
            let order = if *three_first {
                MeasurementOrder::ThreeFirst
            } else {
                MeasurementOrder::FourFirst
            };
            run.parameters = json!({ "setting": setting, "source": source, "order": order, "calibration": cal });
            let cluster = prepare_cluster(source).map_err(|e| Failure::input(e.to_string()))?;
            let records = cal.protocol(order).enumerate(&setting, &cluster);
            run.emit(out.output.as_deref(), &csv_string(|buf| write_branches_csv(&records, buf)))?;
            let consistent = match oracle_truth(&setting) {
                Ok(truth) => records.iter().filter(|r| r.valid).all(|r| r.decoded == truth),
                Err(_) => true,
            };
            Ok(status(consistent))
        }
        GroverCommand::Sample {
            setting,
            seed,
            shots,
            out,
        } => {
            let mut run = Run::new("grover sample");
            let (setting, source) = resolve_setting(&mut run, setting)?;
            run.seed = Some(*seed);
            run.parameters = json!({ "setting": setting, "source": source, "shots": shots, "calibration": cal });
            let cluster = prepare_cluster(source).map_err(|e| Failure::input(e.to_string()))?;
            let protocol = cal.protocol(MeasurementOrder::FourFirst);
            let mut records = Vec::with_capacity(*shots);
            for s in 0..*shots {
                let rec = protocol
                    .sample(&setting, &cluster, seed.wrapping_add(s as u64))
                    .map_err(|e| Failure::input(e.to_string()))?;
                records.push(rec);
            }
            let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
            for r in &records {
                *histogram.entry(format!("{}{}{}{}", r.r4, r.r3, r.r2, r.r1)).or_default() += 1;
            }
            let mut decoded: BTreeMap<String, usize> = BTreeMap::new();
            for r in records.iter().filter(|r| r.valid) {
                let (a, b) = decode(r.r1, r.r2, r.r3, r.r4);
                *decoded.entry(format!("{a}{b}")).or_default() += 1;
            }
            let truth = oracle_truth(&setting).ok();
            let body = json!({
                "setting": setting,
                "source": source,
                "oracle_element": truth.map(|(a, b)| format!("{a}{b}")),
                "shots": records,
                "branch_histogram": histogram,
                "decoded_histogram": decoded,
            });
            run.emit(out.output.as_deref(), &to_json(&body))?;
            let consistent = truth.is_none_or(|t| records.iter().filter(|r| r.valid).all(|r| r.decoded == t));
            Ok(status(consistent))
        }
    }
}

fn cmd_budget(config: &Option<PathBuf>, g: f64, m: u32, k: u32, detector: Option<f64>, out: &OutputArgs) -> CmdResult {
    let mut run = Run::new("budget");
    let cfg = match config {
        Some(p) => {
            run.inputs.push(p.clone());
            load_schedule(p).map_err(|e| load_error(p, e))?
        }
        None => ScheduleConfig::table1(),
    };
    let detector = detector.unwrap_or(PhysicalBounds::default().detector_position);
    let gate = gate_conditions(g, m, k).map_err(|e| Failure::input(e.to_string()))?;
    let params = gate.system_params();
    run.parameters = json!({ "g": g, "m": m, "k": k, "detector_position": detector, "config": cfg });
    let budget = experiment_budget(&cfg, &params, &gate, detector);
    run.emit(out.output.as_deref(), &to_json(&budget))?;
    Ok(status(budget.pass))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::GateCheck { g, m, k, out } => cmd_gate_check(*g, *m, *k, out),
        Command::Dynamics(a) => cmd_dynamics(a),
        Command::Schedule(c) => cmd_schedule(c),
        Command::Cluster(c) => cmd_cluster(c),
        Command::Grover(c) => cmd_grover(c),
        Command::Budget {
            config,
            g,
            m,
            k,
            detector,
            out,
        } => cmd_budget(config, *g, *m, *k, *detector, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
