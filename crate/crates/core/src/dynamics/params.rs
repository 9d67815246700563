use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DynamicsError, Result, STEPS_PER_PERIOD};
use crate::quantum::{DensityMatrix, C64};

/// Atom-cavity coupling `g = 2π × 25 kHz`.
pub const DEFAULT_G: f64 = 2.0 * PI * 25.0e3;
/// Circular Rydberg transition `ω₀ = 2π × 51.1 GHz`.
pub const DEFAULT_OMEGA0: f64 = 2.0 * PI * 51.1e9;
/// Thermal occupation left outside the Fock truncation.
pub const THERMAL_TAIL_TOL: f64 = 1e-4;
/// Fock levels kept even for a cold cavity.
pub const MIN_FOCK_DIM: usize = 6;

/// Physical parameters of the two-atom cavity system. All rates in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub g: f64,
    pub omega0: f64,
    /// `ω₀ − ω_a`.
    pub delta: f64,
    #[serde(rename = "Omega")]
    pub rabi: f64,
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    pub n_th: f64,
    pub fock_dim: usize,
}

impl SystemParams {
    /// Defaults: `ω₀` as above, `Γ = g/100`, `n_th = 1`, truncation from the thermal tail.
    pub fn new(g: f64, delta: f64, rabi: f64) -> Self {
        let n_th = 1.0;
        Self {
            g,
            omega0: DEFAULT_OMEGA0,
            delta,
            rabi,
            gamma: g / 100.0,
            n_th,
            fock_dim: required_fock_dim(n_th),
        }
    }

    pub fn with_n_th(mut self, n_th: f64) -> Self {
        self.n_th = n_th;
        self.fock_dim = required_fock_dim(n_th);
        self
    }

    pub fn with_fock_dim(mut self, fock_dim: usize) -> Self {
        self.fock_dim = fock_dim;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Cavity frequency `ω_a = ω₀ − δ`.
    pub fn omega_a(&self) -> f64 {
        self.omega0 - self.delta
    }

    /// The classical drive is resonant with the atoms.
    pub fn drive_frequency(&self) -> f64 {
        self.omega0
    }

    pub fn lambda(&self) -> f64 {
        self.g * self.g / (4.0 * self.delta)
    }

    pub fn max_frequency(&self) -> f64 {
        self.rabi.abs().max(self.delta.abs()).max(self.g.abs())
    }

    /// Largest step allowed by the integrators.
    pub fn max_step(&self) -> f64 {
        max_step_for(self.max_frequency())
    }

    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut finite = |name: &str, v: f64| {
            if !v.is_finite() {
                errs.push(format!("{name}: must be finite"));
                false
            } else {
                true
            }
        };
        let ok_g = finite("g", self.g);
        finite("omega0", self.omega0);
        finite("delta", self.delta);
        let ok_rabi = finite("Omega", self.rabi);
        let ok_gamma = finite("Gamma", self.gamma);
        let ok_nth = finite("n_th", self.n_th);
        if ok_g && self.g < 0.0 {
            errs.push("g: must be non-negative".into());
        }
        if ok_rabi && self.rabi < 0.0 {
            errs.push("Omega: must be non-negative".into());
        }
        if ok_gamma && self.gamma < 0.0 {
            errs.push("Gamma: must be non-negative".into());
        }
        if ok_nth && self.n_th < 0.0 {
            errs.push("n_th: must be non-negative".into());
        }
        if self.fock_dim < 2 {
            errs.push(format!("fock_dim: must be at least 2, got {}", self.fock_dim));
        } else if ok_nth && self.n_th >= 0.0 {
            let tail = thermal_tail(self.n_th, self.fock_dim);
            if tail >= THERMAL_TAIL_TOL {
                errs.push(format!(
                    "fock_dim: {} leaves thermal tail {tail:.3e} >= {THERMAL_TAIL_TOL:e} (need >= {})",
                    self.fock_dim,
                    required_fock_dim(self.n_th)
                ));
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(DynamicsError::InvalidParams(errs))
        }
    }
}

pub(crate) fn max_step_for(max_frequency: f64) -> f64 {
    if max_frequency > 0.0 {
        2.0 * PI / (STEPS_PER_PERIOD * max_frequency)
    } else {
        f64::INFINITY
    }
}

/// `Σ_{n ≥ dim} p_th(n) = (n̄/(n̄+1))^dim`.
fn thermal_tail(n_th: f64, dim: usize) -> f64 {
    if n_th == 0.0 {
        return 0.0;
    }
    (n_th / (n_th + 1.0)).powi(dim as i32)
}

/// Smallest truncation keeping the thermal tail below tolerance.
pub fn required_fock_dim(n_th: f64) -> usize {
    let mut dim = 2;
    while thermal_tail(n_th, dim) >= THERMAL_TAIL_TOL {
        dim += 1;
    }
    dim.max(MIN_FOCK_DIM)
}

/// Thermal field state with mean `n_th`, truncated and renormalized.
pub fn thermal_state(n_th: f64, fock_dim: usize) -> Result<DensityMatrix> {
    if !(n_th >= 0.0 && n_th.is_finite()) {
        return Err(DynamicsError::InvalidParams(vec![format!(
            "n_th: must be a non-negative number, got {n_th}"
        )]));
    }
    if fock_dim < 2 {
        return Err(crate::quantum::QuantumError::InvalidFockDim(fock_dim).into());
    }
    let ratio = n_th / (n_th + 1.0);
    let weights: Vec<f64> = (0..fock_dim).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = DMatrix::zeros(fock_dim, fock_dim);
    for (n, w) in weights.iter().enumerate() {
        m[(n, n)] = C64::new(w / total, 0.0);
    }
    Ok(DensityMatrix::from_matrix_unchecked(m))
}
