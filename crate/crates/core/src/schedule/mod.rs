//! Kinematic scheduling of atom collisions.
//!
//! Atom `i` leaves the source at `t_i` with speed `v_i`; every pair `(i, j)`
//! must reach the centre of its assigned cavity `L_k` at the same moment:
//! `t_i + L_k/v_i = t_j + L_k/v_j`. With `N` atoms there are `N(N−1)/2` such
//! equations in `4(N−1)` unknowns once `t₁ = 0`.

mod lm;
mod solve;

pub use lm::{minimize, LmOptions, LmOutcome};
pub use solve::{feasibility_scan, solve_schedule, write_scan_csv, ScanRow, SolveOptions, SolveOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::SystemParams;
use crate::gate::GateParams;

/// Rydberg atom radiative lifetime.
pub const ATOM_LIFETIME: f64 = 3e-2;
/// Photon storage time of the cavity.
pub const PHOTON_STORAGE: f64 = 1e-3;
/// Effective cavity decay time for the gate.
pub const EFFECTIVE_CAVITY_DECAY: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("need at least 2 atoms, got {0}")]
    TooFewAtoms(usize),
    #[error("pair ({i}, {j}) invalid for {n} atoms")]
    InvalidPair { i: usize, j: usize, n: usize },
    #[error("atoms {i} and {j} have equal speeds and never cross")]
    ParallelWorldlines { i: usize, j: usize },
    #[error("malformed schedule: {0}")]
    Malformed(String),
    #[error("pair ({i}, {j}) crosses {offset:e} m from cavity {k}, beyond the waist")]
    MissedCavity { i: usize, j: usize, k: usize, offset: f64 },
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

/// How atom pairs map to cavities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `k = i + j − 2`.
    PaperEq10,
    /// `k = 2N − i − j`, the same system with atoms relabelled `i ↦ N+1−i`.
    Table1Reversed,
}

impl std::str::FromStr for Orientation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper_eq10" => Ok(Self::PaperEq10),
            "table1_reversed" => Ok(Self::Table1Reversed),
            other => Err(format!("unknown orientation '{other}' (expected paper_eq10 or table1_reversed)")),
        }
    }
}

/// Cavity index (1-based) shared by atoms `i < j`.
pub fn pair_to_cavity(i: usize, j: usize, n: usize, orientation: Orientation) -> Result<usize> {
    if !(1 <= i && i < j && j <= n) {
        return Err(ScheduleError::InvalidPair { i, j, n });
    }
    Ok(match orientation {
        Orientation::PaperEq10 => i + j - 2,
        Orientation::Table1Reversed => 2 * n - i - j,
    })
}

/// All pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub n: usize,
    pub orientation: Orientation,
    #[serde(rename = "v_mps")]
    pub v: Vec<f64>,
    #[serde(rename = "t_s")]
    pub t: Vec<f64>,
    #[serde(rename = "L_m")]
    pub l: Vec<f64>,
}

impl ScheduleConfig {
    pub fn new(orientation: Orientation, v: Vec<f64>, t: Vec<f64>, l: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            n: v.len(),
            orientation,
            v,
            t,
            l,
        };
        cfg.check_shape()?;
        Ok(cfg)
    }

    /// The four-atom schedule listed in the original experiment proposal.
    pub fn table1() -> Self {
        Self {
            n: 4,
            orientation: Orientation::Table1Reversed,
            v: vec![100.0, 122.0, 146.0, 250.0],
            t: vec![0.0, 0.359e-3, 0.471e-3, 0.500e-3],
            l: vec![0.0100, 0.0335, 0.0833, 0.1500, 0.2000],
        }
    }

    pub fn cavity_count(&self) -> usize {
        2 * self.n - 3
    }

    /// Lengths, `t₁ = 0`, positive speeds, strictly increasing cavities.
    pub fn check_shape(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.n < 2 {
            return Err(ScheduleError::TooFewAtoms(self.n));
        }
        if self.v.len() != self.n {
            errs.push(format!("v_mps: expected {} entries, found {}", self.n, self.v.len()));
        }
        if self.t.len() != self.n {
            errs.push(format!("t_s: expected {} entries, found {}", self.n, self.t.len()));
        }
        if self.l.len() != self.cavity_count() {
            errs.push(format!("L_m: expected {} entries, found {}", self.cavity_count(), self.l.len()));
        }
        for (i, v) in self.v.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                errs.push(format!("v_mps[{i}]: must be positive, got {v}"));
            }
        }
        for (i, t) in self.t.iter().enumerate() {
            if !t.is_finite() {
                errs.push(format!("t_s[{i}]: must be finite"));
            }
        }
        if self.t.first().is_some_and(|t| *t != 0.0) {
            errs.push("t_s[0]: the first emission time must be 0".into());
        }
        for (k, w) in self.l.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                errs.push(format!("L_m[{}]: cavity positions must be strictly increasing", k + 1));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScheduleError::Malformed(errs.join("; ")))
        }
    }

    fn cavity(&self, i: usize, j: usize) -> Result<usize> {
        pair_to_cavity(i, j, self.n, self.orientation)
    }

    /// Arrival time of atom `i` (1-based) at position `x`.
    pub fn arrival(&self, i: usize, x: f64) -> f64 {
        self.t[i - 1] + x / self.v[i - 1]
    }

    /// Position of atom `i` at time `time`.
    pub fn position(&self, i: usize, time: f64) -> f64 {
        self.v[i - 1] * (time - self.t[i - 1])
    }
}

/// `t_i + L_k/v_i − (t_j + L_k/v_j)` for every pair, lexicographic order.
pub fn residuals(config: &ScheduleConfig) -> Result<Vec<f64>> {
    config.check_shape()?;
    pairs(config.n)
        .into_iter()
        .map(|(i, j)| {
            let lk = config.l[config.cavity(i, j)? - 1];
            Ok(config.arrival(i, lk) - config.arrival(j, lk))
        })
        .collect()
}

pub fn max_abs_residual(config: &ScheduleConfig) -> Result<f64> {
    Ok(residuals(config)?.iter().map(|r| r.abs()).fold(0.0, f64::max))
}

/// Where the worldlines of atoms `i` and `j` cross.
pub fn collision_distance(i: usize, j: usize, config: &ScheduleConfig) -> Result<f64> {
    if !(1 <= i && i <= config.n && 1 <= j && j <= config.n && i != j) {
        return Err(ScheduleError::InvalidPair { i, j, n: config.n });
    }
    let (vi, vj) = (config.v[i - 1], config.v[j - 1]);
    if vi == vj {
        return Err(ScheduleError::ParallelWorldlines { i, j });
    }
    Ok((config.t[j - 1] - config.t[i - 1]) / (1.0 / vi - 1.0 / vj))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollisionEvent {
    pub pair: (usize, usize),
    pub cavity: usize,
    pub time: f64,
    pub position: f64,
}

/// One event per pair at the worldline crossing, sorted by time. Fails when a
/// crossing lies farther than `waist` from its cavity centre.
pub fn collision_events_within(config: &ScheduleConfig, waist: f64) -> Result<Vec<CollisionEvent>> {
    config.check_shape()?;
    let mut events = Vec::new();
    for (i, j) in pairs(config.n) {
        let k = config.cavity(i, j)?;
        let x = collision_distance(i, j, config)?;
        let offset = x - config.l[k - 1];
        if offset.abs() > waist {
            return Err(ScheduleError::MissedCavity { i, j, k, offset });
        }
        events.push(CollisionEvent {
            pair: (i, j),
            cavity: k,
            time: config.arrival(i, x),
            position: x,
        });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.pair.cmp(&b.pair)));
    Ok(events)
}

pub fn collision_events(config: &ScheduleConfig) -> Result<Vec<CollisionEvent>> {
    collision_events_within(config, PhysicalBounds::default().cavity_waist)
}

/// Detector arrival `(atom, time)` pairs, earliest first.
pub fn detector_arrivals(config: &ScheduleConfig, detector_position: f64) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = (1..=config.n).map(|i| (i, config.arrival(i, detector_position))).collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    out
}

/// Apparatus and timing limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBounds {
    pub v_range: (f64, f64),
    pub velocity_precision: f64,
    pub timing_precision: f64,
    pub max_length: f64,
    pub cavity_waist: f64,
    pub min_event_gap: f64,
    /// Closest allowed cavity centre to the source.
    pub min_cavity_position: f64,
    /// Emission times are searched within `±emission_window` of atom 1.
    pub emission_window: f64,
    pub detector_position: f64,
}

impl Default for PhysicalBounds {
    fn default() -> Self {
        Self {
            v_range: (50.0, 500.0),
            velocity_precision: 2.0,
            timing_precision: 2e-6,
            max_length: 0.20,
            cavity_waist: 3e-3,
            min_event_gap: 2e-5,
            min_cavity_position: 0.01,
            emission_window: 3e-3,
            detector_position: 0.25,
        }
    }
}

impl PhysicalBounds {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let (lo, hi) = self.v_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            errs.push(format!("v_range: need 0 < min < max, got ({lo}, {hi})"));
        }
        for (name, v) in [
            ("velocity_precision", self.velocity_precision),
            ("timing_precision", self.timing_precision),
            ("max_length", self.max_length),
            ("cavity_waist", self.cavity_waist),
            ("min_event_gap", self.min_event_gap),
            ("min_cavity_position", self.min_cavity_position),
            ("emission_window", self.emission_window),
            ("detector_position", self.detector_position),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name}: must be positive, got {v}"));
            }
        }
        errs
    }

    /// Half-width of the time window around an event that must stay clear.
    pub fn event_half_window(&self) -> f64 {
        self.min_event_gap / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub max_residual_s: f64,
    pub violations: Vec<Violation>,
    pub events: Vec<CollisionEvent>,
    pub total_span_s: f64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Smallest distance of atom `m` from `centre` over `[time − w, time + w]`.
fn clearance(config: &ScheduleConfig, m: usize, centre: f64, time: f64, half_window: f64) -> f64 {
    let x = config.position(m, time);
    ((x - centre).abs() - config.v[m - 1] * half_window).max(0.0)
}

pub fn validate_schedule(config: &ScheduleConfig, bounds: &PhysicalBounds) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |check: &str, detail: String| {
        violations.push(Violation {
            check: check.into(),
            detail,
        })
    };
    if let Err(e) = config.check_shape() {
        push("shape", e.to_string());
        return ValidationReport {
            max_residual_s: f64::NAN,
            violations,
            events: Vec::new(),
            total_span_s: f64::NAN,
        };
    }
    for e in bounds.validation_errors() {
        push("bounds", e);
    }
    let n = config.n;
    let w = bounds.cavity_waist;

    for (k, pair) in config.l.windows(2).enumerate() {
        let gap = pair[1] - pair[0];
        if gap <= 2.0 * w {
            push(
                "cavity_separation",
                format!("L{} - L{} = {gap:.4e} m is not above twice the waist", k + 2, k + 1),
            );
        }
    }
    if let Some(&first) = config.l.first() {
        if first < bounds.min_cavity_position {
            push("cavity_position", format!("L1 = {first} m is closer than {} m", bounds.min_cavity_position));
        }
    }
    if let Some(&last) = config.l.last() {
        if last > bounds.max_length {
            push("length", format!("L{} = {last} m exceeds {} m", config.l.len(), bounds.max_length));
        }
        if bounds.detector_position <= last {
            push("detector", format!("detector at {} m is not beyond the last cavity", bounds.detector_position));
        }
    }
    let (vlo, vhi) = bounds.v_range;
    for (i, &v) in config.v.iter().enumerate() {
        if v < vlo || v > vhi {
            push("velocity_range", format!("v{} = {v} m/s outside [{vlo}, {vhi}]", i + 1));
        }
    }

    let res = residuals(config).unwrap_or_default();
    let max_residual_s = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let mut events = Vec::new();
    for ((i, j), r) in pairs(n).into_iter().zip(&res) {
        let dv = (config.v[i - 1] - config.v[j - 1]).abs();
        if dv <= bounds.velocity_precision {
            push(
                "velocity_separation",
                format!("|v{i} - v{j}| = {dv} m/s within the {} m/s precision", bounds.velocity_precision),
            );
            continue;
        }
        if r.abs() >= bounds.timing_precision {
            push("residual", format!("pair ({i}, {j}) misses by {:.3e} s", r.abs()));
        }
        let k = pair_to_cavity(i, j, n, config.orientation).expect("valid pair");
        let x = collision_distance(i, j, config).expect("distinct speeds");
        let offset = x - config.l[k - 1];
        if offset.abs() > w {
            push("crossing", format!("pair ({i}, {j}) crosses {offset:.3e} m from L{k}"));
        }
        events.push(CollisionEvent {
            pair: (i, j),
            cavity: k,
            time: config.arrival(i, x),
            position: x,
        });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.pair.cmp(&b.pair)));

    for e in &events {
        let centre = config.l[e.cavity - 1];
        for m in (1..=n).filter(|&m| m != e.pair.0 && m != e.pair.1) {
            let d = clearance(config, m, centre, e.time, bounds.event_half_window());
            if d <= w {
                push(
                    "third_atom",
                    format!(
                        "atom {m} comes within {d:.3e} m of L{} during the ({}, {}) event",
                        e.cavity, e.pair.0, e.pair.1
                    ),
                );
            }
        }
    }
    for (a, ea) in events.iter().enumerate() {
        for eb in &events[a + 1..] {
            if ea.cavity == eb.cavity && (ea.time - eb.time).abs() <= bounds.min_event_gap {
                push(
                    "event_gap",
                    format!(
                        "events ({}, {}) and ({}, {}) in cavity {} are {:.3e} s apart",
                        ea.pair.0,
                        ea.pair.1,
                        eb.pair.0,
                        eb.pair.1,
                        ea.cavity,
                        (ea.time - eb.time).abs()
                    ),
                );
            }
        }
    }
    let total_span_s = detector_arrivals(config, bounds.detector_position)
        .last()
        .map(|a| a.1)
        .unwrap_or(0.0);
    if total_span_s >= ATOM_LIFETIME {
        push("lifetime", format!("last detection at {total_span_s:.3e} s exceeds the atom lifetime"));
    }
    ValidationReport {
        max_residual_s,
        violations,
        events,
        total_span_s,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentBudget {
    pub g: f64,
    pub delta: f64,
    pub total_flight_time: f64,
    pub interaction_time: f64,
    pub atom_lifetime: f64,
    pub photon_storage: f64,
    pub effective_cavity_decay: f64,
    /// `T_r / total_flight_time`.
    pub lifetime_margin: f64,
    /// `T_ceff / interaction_time`.
    pub cavity_decay_margin: f64,
    /// `T_c / interaction_time`.
    pub storage_margin: f64,
    pub detector_order: Vec<usize>,
    pub pass: bool,
}

pub fn experiment_budget(
    config: &ScheduleConfig,
    params: &SystemParams,
    gate: &GateParams,
    detector_position: f64,
) -> ExperimentBudget {
    let arrivals = detector_arrivals(config, detector_position);
    let total = arrivals.last().map(|a| a.1).unwrap_or(0.0);
    let interaction = gate.t_gate;
    ExperimentBudget {
        g: params.g,
        delta: params.delta,
        total_flight_time: total,
        interaction_time: interaction,
        atom_lifetime: ATOM_LIFETIME,
        photon_storage: PHOTON_STORAGE,
        effective_cavity_decay: EFFECTIVE_CAVITY_DECAY,
        lifetime_margin: ATOM_LIFETIME / total,
        cavity_decay_margin: EFFECTIVE_CAVITY_DECAY / interaction,
        storage_margin: PHOTON_STORAGE / interaction,
        detector_order: arrivals.iter().map(|a| a.0).collect(),
        pass: total < ATOM_LIFETIME && interaction < EFFECTIVE_CAVITY_DECAY,
    }
}
