use std::io::Write;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::lm::{minimize, LmOptions};
use super::{
    pair_to_cavity, pairs, residuals, validate_schedule, Orientation, PhysicalBounds, ScheduleConfig,
    ValidationReport,
};

/// Margin applied to every inequality inside the solver so that converged
/// points clear the validator's strict thresholds.
const PENALTY_MARGIN: f64 = 1.25;
const PENALTY_WEIGHT: f64 = 10.0;
const INIT_SPREAD: f64 = 2.5;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub starts: usize,
    /// Starts evaluated together before checking for success.
    pub batch: usize,
    pub orientation: Orientation,
    pub lm: LmOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            starts: 200,
            batch: 8,
            orientation: Orientation::PaperEq10,
            lm: LmOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveOutcome {
    Solved {
        config: ScheduleConfig,
        max_residual_s: f64,
        start: usize,
        starts_used: usize,
        report: ValidationReport,
    },
    Infeasible {
        best_residual_s: f64,
        starts_used: usize,
    },
}

impl SolveOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, SolveOutcome::Solved { .. })
    }

    pub fn best_residual(&self) -> f64 {
        match self {
            SolveOutcome::Solved { max_residual_s, .. } => *max_residual_s,
            SolveOutcome::Infeasible { best_residual_s, .. } => *best_residual_s,
        }
    }

    pub fn config(&self) -> Option<&ScheduleConfig> {
        match self {
            SolveOutcome::Solved { config, .. } => Some(config),
            SolveOutcome::Infeasible { .. } => None,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Maps unconstrained variables onto a schedule inside the bounds.
///
/// Layout: `N` speed variables, `N−1` emission-time variables, then `K+1`
/// softmax weights splitting the free cavity length (the last one is slack).
struct Layout<'a> {
    n: usize,
    bounds: &'a PhysicalBounds,
    orientation: Orientation,
}

impl Layout<'_> {
    fn cavities(&self) -> usize {
        2 * self.n - 3
    }

    fn len(&self) -> usize {
        self.n + (self.n - 1) + self.cavities() + 1
    }

    fn min_gap(&self) -> f64 {
        2.0 * self.bounds.cavity_waist * 1.05
    }

    fn unpack(&self, x: &[f64]) -> ScheduleConfig {
        let n = self.n;
        let k = self.cavities();
        let (vlo, vhi) = self.bounds.v_range;
        let v: Vec<f64> = x[..n].iter().map(|&u| vlo + (vhi - vlo) * sigmoid(u)).collect();
        let mut t = vec![0.0];
        t.extend(x[n..2 * n - 1].iter().map(|&u| self.bounds.emission_window * u.tanh()));
        let w = &x[2 * n - 1..];
        let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|&y| (y - top).exp()).collect();
        let total: f64 = e.iter().sum();
        let lmin = self.bounds.min_cavity_position;
        let gmin = self.min_gap();
        let free = self.bounds.max_length - lmin - (k - 1) as f64 * gmin;
        let mut acc = 0.0;
        let l = (0..k)
            .map(|i| {
                acc += e[i] / total;
                lmin + free * acc + gmin * i as f64
            })
            .collect();
        ScheduleConfig {
            n,
            orientation: self.orientation,
            v,
            t,
            l,
        }
    }

    fn objective(&self, x: &[f64]) -> Vec<f64> {
        let cfg = self.unpack(x);
        let b = self.bounds;
        let n = self.n;
        let hinge = |slack: f64| PENALTY_WEIGHT * slack.max(0.0);
        let res = residuals(&cfg).expect("layout produces valid shapes");
        let mut out: Vec<f64> = res.iter().map(|r| r / b.timing_precision).collect();
        let mut events = Vec::with_capacity(res.len());
        for (i, j) in pairs(n) {
            let (vi, vj) = (cfg.v[i - 1], cfg.v[j - 1]);
            out.push(hinge((PENALTY_MARGIN * b.velocity_precision - (vi - vj).abs()) / b.velocity_precision));
            let k = pair_to_cavity(i, j, n, self.orientation).expect("valid pair");
            let centre = cfg.l[k - 1];
            let time = cfg.arrival(i, centre);
            events.push((k, time));
            for m in (1..=n).filter(|&m| m != i && m != j) {
                let d = (cfg.position(m, time) - centre).abs() - cfg.v[m - 1] * b.event_half_window();
                out.push(hinge((PENALTY_MARGIN * b.cavity_waist - d) / b.cavity_waist));
            }
        }
        for (a, ea) in events.iter().enumerate() {
            for eb in &events[a + 1..] {
                if ea.0 == eb.0 {
                    let gap = (ea.1 - eb.1).abs();
                    out.push(hinge((PENALTY_MARGIN * b.min_event_gap - gap) / b.min_event_gap));
                }
            }
        }
        out
    }
}

struct StartResult {
    start: usize,
    config: ScheduleConfig,
    max_residual: f64,
    report: ValidationReport,
}

impl StartResult {
    fn success(&self, bounds: &PhysicalBounds) -> bool {
        self.max_residual < bounds.timing_precision / 2.0 && self.report.is_clean()
    }

    fn apparatus_length(&self) -> f64 {
        self.config.l.last().copied().unwrap_or(0.0)
    }

    fn schedule_time(&self) -> f64 {
        self.report.events.last().map(|e| e.time).unwrap_or(0.0)
    }
}

fn run_start(layout: &Layout, seed: u64, start: usize, lm: &LmOptions) -> StartResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let mut x0: Vec<f64> = (0..layout.len()).map(|_| rng.random_range(-INIT_SPREAD..INIT_SPREAD)).collect();
    // Later atoms fly faster so that each pair meets after both have left the
    // source; sorting the initial speeds and emission times starts every run
    // in that ordering.
    let n = layout.n;
    x0[..n].sort_by(f64::total_cmp);
    x0[n..2 * n - 1].iter_mut().for_each(|u| *u = u.abs() / INIT_SPREAD);
    x0[n..2 * n - 1].sort_by(f64::total_cmp);
    let out = minimize(|x| layout.objective(x), &x0, lm);
    let config = layout.unpack(&out.x);
    let max_residual = residuals(&config)
        .expect("valid shape")
        .iter()
        .map(|r| r.abs())
        .fold(0.0, f64::max);
    let report = validate_schedule(&config, layout.bounds);
    StartResult {
        start,
        config,
        max_residual,
        report,
    }
}

/// Multi-start damped least squares over the free schedule variables.
///
/// Starts run in fixed-size batches; the first batch containing a success
/// ends the search and the shortest apparatus (then earliest last event,
/// then lowest start index) among its successes wins.
pub fn solve_schedule(n: usize, bounds: &PhysicalBounds, seed: u64, opts: &SolveOptions) -> SolveOutcome {
    if n < 2 || !bounds.validation_errors().is_empty() {
        return SolveOutcome::Infeasible {
            best_residual_s: f64::INFINITY,
            starts_used: 0,
        };
    }
    let layout = Layout {
        n,
        bounds,
        orientation: opts.orientation,
    };
    let batch = opts.batch.max(1);
    let mut best_residual = f64::INFINITY;
    let mut begin = 0;
    while begin < opts.starts {
        let end = (begin + batch).min(opts.starts);
        let results: Vec<StartResult> = (begin..end)
            .into_par_iter()
            .map(|s| run_start(&layout, seed, s, &opts.lm))
            .collect();
        for r in &results {
            best_residual = best_residual.min(r.max_residual);
        }
        let winner = results
            .into_iter()
            .filter(|r| r.success(bounds))
            .min_by(|a, b| {
                a.apparatus_length()
                    .total_cmp(&b.apparatus_length())
                    .then(a.schedule_time().total_cmp(&b.schedule_time()))
                    .then(a.start.cmp(&b.start))
            });
        if let Some(w) = winner {
            return SolveOutcome::Solved {
                config: w.config,
                max_residual_s: w.max_residual,
                start: w.start,
                starts_used: end,
                report: w.report,
            };
        }
        begin = end;
    }
    SolveOutcome::Infeasible {
        best_residual_s: best_residual,
        starts_used: opts.starts,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub best_residual_s: f64,
}

/// Solves each `N` with seeds `seed, seed+1, …` and counts successes.
pub fn feasibility_scan(
    n_range: RangeInclusive<usize>,
    bounds: &PhysicalBounds,
    trials: usize,
    seed: u64,
    opts: &SolveOptions,
) -> Vec<ScanRow> {
    n_range
        .map(|n| {
            let outcomes: Vec<SolveOutcome> = (0..trials.max(1))
                .map(|t| solve_schedule(n, bounds, seed.wrapping_add(t as u64), opts))
                .collect();
            ScanRow {
                n,
                trials: trials.max(1),
                successes: outcomes.iter().filter(|o| o.is_solved()).count(),
                best_residual_s: outcomes.iter().map(|o| o.best_residual()).fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,trials,successes,best_residual_s")?;
    for r in rows {
        writeln!(out, "{},{},{},{:.6e}", r.n, r.trials, r.successes, r.best_residual_s)?;
    }
    Ok(())
}
