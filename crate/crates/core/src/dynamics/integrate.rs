use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::max_step_for;
use super::{effective_unitary, DetunedHamiltonian, DynamicsError, Hamiltonian, Result, SystemParams};
use crate::quantum::{
    fidelity, fock_annihilation, partial_trace_field_unchecked, tensor_product, DensityMatrix,
    HilbertSpec, Operator, QuantumError, SparseOperator, StateVector, C64, I, ONE, ZERO,
};

/// Which thermal rate multiplies which cavity jump operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpConvention {
    /// `√(Γ n_th) a` and `√(Γ (n_th+1)) a†`.
    PaperLiteral,
    /// `√(Γ (n_th+1)) a` and `√(Γ n_th) a†`.
    StandardThermal,
}

impl FromStr for JumpConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "paper_literal" | "paper-literal" => Ok(Self::PaperLiteral),
            "standard_thermal" | "standard-thermal" => Ok(Self::StandardThermal),
            other => Err(format!(
                "unknown jump convention '{other}' (expected paper_literal or standard_thermal)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub time: f64,
    pub p_gg: f64,
    pub p_ee: f64,
    /// `Re ρ_{gg,ee}`.
    pub re_coh: f64,
    /// `Im ρ_{gg,ee}`.
    pub im_coh: f64,
    pub purity: f64,
    pub mean_n: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub samples: Vec<TrajectorySample>,
    pub final_atomic: DensityMatrix,
    pub final_pure: Option<StateVector>,
    pub final_density: Option<DensityMatrix>,
}

impl TrajectoryResult {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("at least the initial sample")
    }

    /// Sample whose time is closest to `t`.
    pub fn at(&self, t: f64) -> &TrajectorySample {
        self.samples
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("non-empty")
    }
}

fn sample_from_atomic(time: f64, atomic: &DensityMatrix, mean_n: f64) -> TrajectorySample {
    let last = atomic.dim() - 1;
    let coh = atomic.entry(last, 0);
    TrajectorySample {
        time,
        p_gg: atomic.entry(last, last).re,
        p_ee: atomic.entry(0, 0).re,
        re_coh: coh.re,
        im_coh: coh.im,
        purity: atomic.purity(),
        mean_n,
    }
}

fn pure_observables(time: f64, psi: &DVector<C64>, spec: &HilbertSpec) -> (TrajectorySample, DensityMatrix) {
    let da = spec.atomic_dim();
    let df = spec.fock_dim();
    let mut rho = DMatrix::zeros(da, da);
    let mut mean_n = 0.0;
    for a in 0..da {
        for n in 0..df {
            mean_n += psi[a * df + n].norm_sqr() * n as f64;
        }
        for b in 0..=a {
            let mut acc = ZERO;
            for n in 0..df {
                acc += psi[a * df + n] * psi[b * df + n].conj();
            }
            rho[(a, b)] = acc;
            rho[(b, a)] = acc.conj();
        }
    }
    let atomic = DensityMatrix::from_matrix_unchecked(rho);
    (sample_from_atomic(time, &atomic, mean_n), atomic)
}

fn mixed_observables(time: f64, rho: &DMatrix<C64>, spec: &HilbertSpec) -> (TrajectorySample, DensityMatrix) {
    let df = spec.fock_dim();
    let mean_n = (0..rho.nrows()).map(|i| rho[(i, i)].re * (i % df) as f64).sum();
    let atomic = partial_trace_field_unchecked(rho, spec);
    (sample_from_atomic(time, &atomic, mean_n), atomic)
}

fn step_grid(t_final: f64, dt: f64, max_step: f64) -> Result<(usize, f64)> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(DynamicsError::InvalidTime(t_final));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::StepTooLarge { dt, max: max_step });
    }
    if dt > max_step * (1.0 + 1e-12) {
        return Err(DynamicsError::StepTooLarge { dt, max: max_step });
    }
    let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    Ok((steps, h))
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const MAGNUS_COMMUTATOR: f64 = 0.144_337_567_297_406_43; // √3/12

/// One fourth-order Magnus step with the exponential applied by Taylor series.
fn magnus_step<H: Hamiltonian + ?Sized>(h: &H, t: f64, dt: f64, v: &DVector<C64>) -> DVector<C64> {
    let n = v.len();
    let t1 = t + (0.5 - GAUSS_OFFSET) * dt;
    let t2 = t + (0.5 + GAUSS_OFFSET) * dt;
    let lin = -I * (dt / 2.0);
    let com = C64::new(-MAGNUS_COMMUTATOR * dt * dt, 0.0);
    let mut h1 = DVector::zeros(n);
    let mut h2 = DVector::zeros(n);
    let mut h21 = DVector::zeros(n);
    let mut h12 = DVector::zeros(n);
    let mut apply_omega = |x: &DVector<C64>| -> DVector<C64> {
        h.apply(t1, x, &mut h1);
        h.apply(t2, x, &mut h2);
        h.apply(t2, &h1, &mut h21);
        h.apply(t1, &h2, &mut h12);
        let mut out = DVector::zeros(n);
        for i in 0..n {
            out[i] = lin * (h1[i] + h2[i]) + com * (h21[i] - h12[i]);
        }
        out
    };
    let mut sum = v.clone();
    let mut term = v.clone();
    for k in 1..=60 {
        term = apply_omega(&term) / C64::new(k as f64, 0.0);
        sum += &term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Propagates `i dψ/dt = H(t) ψ` with a fixed-step fourth-order Magnus scheme
/// (Hamiltonian sampled at the two Gauss points of each step).
pub fn integrate_schrodinger<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t_final: f64,
    dt: f64,
) -> Result<TrajectoryResult> {
    let spec = h.spec();
    if psi0.dim() != spec.dim() {
        return Err(QuantumError::DimensionMismatch {
            expected: spec.dim(),
            found: psi0.dim(),
        }
        .into());
    }
    let (steps, step) = step_grid(t_final, dt, max_step_for(h.max_frequency()))?;
    let mut psi = psi0.amplitudes().clone();
    let mut samples = Vec::with_capacity(steps + 1);
    let (s0, mut atomic) = pure_observables(0.0, &psi, &spec);
    samples.push(s0);
    for k in 0..steps {
        let t = k as f64 * step;
        psi = magnus_step(h, t, step, &psi);
        let (s, a) = pure_observables((k + 1) as f64 * step, &psi, &spec);
        samples.push(s);
        atomic = a;
    }
    Ok(TrajectoryResult {
        samples,
        final_atomic: atomic,
        final_pure: Some(StateVector::from_vector(psi)),
        final_density: None,
    })
}

/// Cavity jump operators with their rates folded in; zero-rate channels are dropped.
pub fn jump_operators(params: &SystemParams, convention: JumpConvention) -> Result<Vec<Operator>> {
    params.validate()?;
    let a = tensor_product(&Operator::identity(4), &fock_annihilation(params.fock_dim)?)?;
    let (rate_a, rate_adag) = match convention {
        JumpConvention::PaperLiteral => (params.gamma * params.n_th, params.gamma * (params.n_th + 1.0)),
        JumpConvention::StandardThermal => (params.gamma * (params.n_th + 1.0), params.gamma * params.n_th),
    };
    let mut out = Vec::new();
    if rate_a > 0.0 {
        out.push(a.scale(C64::new(rate_a.sqrt(), 0.0)));
    }
    if rate_adag > 0.0 {
        out.push(a.adjoint().scale(C64::new(rate_adag.sqrt(), 0.0)));
    }
    Ok(out)
}

struct Lindbladian<'a, H: Hamiltonian + ?Sized> {
    h: &'a H,
    jumps: Vec<SparseOperator>,
    damping: SparseOperator,
}

impl<H: Hamiltonian + ?Sized> Lindbladian<'_, H> {
    fn rhs(&self, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let n = rho.nrows();
        // With K = H − i/2 Σ L†L: dρ = −iKρ + (−iKρ)† + Σ LρL†.
        let mut m = DMatrix::zeros(n, n);
        self.h.left_mul_acc(t, rho, -I, &mut m);
        self.damping.mul_mat_acc(rho, C64::new(-0.5, 0.0), &mut m);
        let mut out = &m + m.adjoint();
        for l in &self.jumps {
            let lr = l.mul_mat(rho);
            l.mul_mat_acc(&lr.adjoint(), ONE, &mut out);
        }
        out
    }
}

/// Propagates the master equation for the full interaction Hamiltonian.
pub fn integrate_lindblad(
    params: &SystemParams,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    convention: JumpConvention,
) -> Result<TrajectoryResult> {
    let h = DetunedHamiltonian::interaction(params)?;
    let jumps = jump_operators(params, convention)?;
    integrate_lindblad_with(&h, &jumps, rho0, t_final, dt)
}

/// Fixed-step RK4 on `dρ/dt = −i[H(t), ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
pub fn integrate_lindblad_with<H: Hamiltonian + ?Sized>(
    h: &H,
    jumps: &[Operator],
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<TrajectoryResult> {
    let spec = h.spec();
    if rho0.dim() != spec.dim() {
        return Err(QuantumError::DimensionMismatch {
            expected: spec.dim(),
            found: rho0.dim(),
        }
        .into());
    }
    rho0.validate()?;
    let (steps, step) = step_grid(t_final, dt, max_step_for(h.max_frequency()))?;
    let mut damping = Operator::zeros(spec.dim());
    for l in jumps {
        damping = &damping + &(&l.adjoint() * l);
    }
    let lind = Lindbladian {
        h,
        jumps: jumps.iter().map(SparseOperator::from_dense).collect(),
        damping: SparseOperator::from_dense(&damping),
    };
    let mut rho = rho0.matrix().clone();
    let mut samples = Vec::with_capacity(steps + 1);
    let (s0, mut atomic) = mixed_observables(0.0, &rho, &spec);
    samples.push(s0);
    let half = C64::new(step / 2.0, 0.0);
    let full = C64::new(step, 0.0);
    let sixth = C64::new(step / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    for k in 0..steps {
        let t = k as f64 * step;
        let k1 = lind.rhs(t, &rho);
        let k2 = lind.rhs(t + step / 2.0, &(&rho + &k1 * half));
        let k3 = lind.rhs(t + step / 2.0, &(&rho + &k2 * half));
        let k4 = lind.rhs(t + step, &(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let (s, a) = mixed_observables((k + 1) as f64 * step, &rho, &spec);
        samples.push(s);
        atomic = a;
    }
    Ok(TrajectoryResult {
        samples,
        final_atomic: atomic,
        final_pure: None,
        final_density: Some(DensityMatrix::from_matrix_unchecked(rho)),
    })
}

/// Default step for comparisons: a quarter of the resolution bound.
pub fn comparison_step(params: &SystemParams) -> f64 {
    params.max_step() / 4.0
}

/// Fidelity of the reduced atomic state after full propagation of
/// `ψ_atoms ⊗ ρ_field` against the effective unitary applied to `ψ_atoms`.
pub fn effective_vs_full_fidelity(
    params: &SystemParams,
    psi_atoms0: &StateVector,
    field_state: &DensityMatrix,
    t: f64,
) -> Result<f64> {
    effective_vs_full_fidelity_with_step(params, psi_atoms0, field_state, t, comparison_step(params))
}

pub fn effective_vs_full_fidelity_with_step(
    params: &SystemParams,
    psi_atoms0: &StateVector,
    field_state: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let target = effective_unitary(params, t)?.apply(psi_atoms0)?;
    if field_state.dim() != params.fock_dim {
        return Err(QuantumError::DimensionMismatch {
            expected: params.fock_dim,
            found: field_state.dim(),
        }
        .into());
    }
    let h = DetunedHamiltonian::interaction(params)?;
    let components = field_state.spectral_components(1e-14);
    let reduced: Vec<Result<DMatrix<C64>>> = components
        .par_iter()
        .map(|(w, phi)| {
            let psi0 = psi_atoms0.tensor(phi);
            let traj = integrate_schrodinger(&h, &psi0, t, dt)?;
            Ok(traj.final_atomic.into_matrix() * C64::new(*w, 0.0))
        })
        .collect();
    let mut rho = DMatrix::zeros(4, 4);
    for r in reduced {
        rho += r?;
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    rho /= C64::new(total, 0.0);
    Ok(fidelity(&DensityMatrix::from_matrix_unchecked(rho), &target)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct EchoReport {
    /// `max |p_full − p_eff|` over both populations divided by the slow peak-to-peak amplitude.
    pub ripple_ratio: f64,
    /// Fast residual after a one-drive-period moving average, same normalization.
    pub highpass_ripple_ratio: f64,
    pub slow_amplitude: f64,
    pub slow_turning_points: usize,
    pub coherent_oscillation: bool,
    pub purity_at_echo: f64,
    pub effective_purity_at_echo: f64,
    pub echo_time: f64,
    #[serde(skip)]
    pub full: TrajectoryResult,
    #[serde(skip)]
    pub effective: TrajectoryResult,
}

fn peak_to_peak(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn turning_points(xs: &[f64], min_swing: f64) -> usize {
    let mut count = 0;
    let mut anchor = xs.first().copied().unwrap_or(0.0);
    let mut rising: Option<bool> = None;
    for &x in xs.iter().skip(1) {
        match rising {
            None => {
                if (x - anchor).abs() > min_swing {
                    rising = Some(x > anchor);
                    anchor = x;
                }
            }
            Some(up) => {
                if (up && x > anchor) || (!up && x < anchor) {
                    anchor = x;
                } else if (x - anchor).abs() > min_swing {
                    count += 1;
                    rising = Some(!up);
                    anchor = x;
                }
            }
        }
    }
    count
}

fn highpass_max(xs: &[f64], window: usize) -> f64 {
    let half = window / 2;
    if xs.len() <= 2 * half + 1 || window < 2 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in half..xs.len() - half {
        let avg: f64 = xs[i - half..=i + half].iter().sum::<f64>() / (2 * half + 1) as f64;
        worst = worst.max((xs[i] - avg).abs());
    }
    worst
}

/// Atomic dynamics from `|g g⟩ ⊗ thermal` under the full and effective
/// models with identical cavity damping, over `periods` detuning periods.
pub fn echo_analysis(
    params: &SystemParams,
    convention: JumpConvention,
    periods: u32,
    steps_per_period: Option<usize>,
) -> Result<EchoReport> {
    params.validate()?;
    if params.delta == 0.0 {
        return Err(DynamicsError::ZeroDetuning);
    }
    let period = 2.0 * PI / params.delta.abs();
    let min_steps = (period / comparison_step(params)).ceil() as usize;
    let steps = steps_per_period.unwrap_or(min_steps).max(1);
    let dt = period / steps as f64;
    let t_final = period * periods.max(1) as f64;

    let gg = StateVector::basis(4, 3);
    let field = super::thermal_state(params.n_th, params.fock_dim)?;
    let rho0 = DensityMatrix::pure(&gg).tensor(&field);
    let jumps = jump_operators(params, convention)?;
    let full_h = DetunedHamiltonian::interaction(params)?;
    let eff_h = DetunedHamiltonian::effective_with_drive(params)?;
    let (full, effective) = rayon::join(
        || integrate_lindblad_with(&full_h, &jumps, &rho0, t_final, dt),
        || integrate_lindblad_with(&eff_h, &jumps, &rho0, t_final, dt),
    );
    let (full, effective) = (full?, effective?);

    let eff_gg: Vec<f64> = effective.samples.iter().map(|s| s.p_gg).collect();
    let eff_ee: Vec<f64> = effective.samples.iter().map(|s| s.p_ee).collect();
    let full_gg: Vec<f64> = full.samples.iter().map(|s| s.p_gg).collect();
    let full_ee: Vec<f64> = full.samples.iter().map(|s| s.p_ee).collect();
    let slow_amplitude = peak_to_peak(&eff_gg).max(peak_to_peak(&eff_ee));
    let deviation = full_gg
        .iter()
        .zip(&eff_gg)
        .chain(full_ee.iter().zip(&eff_ee))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let window = if params.rabi > 0.0 {
        ((2.0 * PI / params.rabi) / dt).round() as usize
    } else {
        0
    };
    let highpass = highpass_max(&full_gg, window).max(highpass_max(&full_ee, window));
    let norm = slow_amplitude.max(f64::MIN_POSITIVE);
    let slow_turning_points = turning_points(&eff_gg, 0.05);
    let echo = full.at(period);
    let eff_echo = effective.at(period);
    Ok(EchoReport {
        ripple_ratio: deviation / norm,
        highpass_ripple_ratio: highpass / norm,
        slow_amplitude,
        slow_turning_points,
        coherent_oscillation: slow_amplitude > 0.1 && slow_turning_points >= 1,
        purity_at_echo: echo.purity,
        effective_purity_at_echo: eff_echo.purity,
        echo_time: period,
        full,
        effective,
    })
}

/// Writes one row per `stride` samples (the final sample is always included).
pub fn write_trajectory_csv<W: Write>(traj: &TrajectoryResult, mut out: W, stride: usize) -> std::io::Result<()> {
    writeln!(out, "time_s,p_gg,p_ee,re_coh,im_coh,purity,mean_n")?;
    let stride = stride.max(1);
    let last = traj.samples.len().saturating_sub(1);
    for (i, s) in traj.samples.iter().enumerate() {
        if i % stride == 0 || i == last {
            writeln!(
                out,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                s.time, s.p_gg, s.p_ee, s.re_coh, s.im_coh, s.purity, s.mean_n
            )?;
        }
    }
    Ok(())
}
