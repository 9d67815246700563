//! Driven two-atom cavity dynamics.
//!
//! Two identical two-level atoms couple to one detuned cavity mode while a
//! resonant classical field drives them. In the interaction picture the
//! Hamiltonian is
//!
//! ```text
//! H_i(t) = Σ_j [ Ω/2 (σ⁺_j + σ⁻_j) + g/2 (e^{−iδt} a† σ⁻_j + e^{iδt} a σ⁺_j) ]
//! ```
//!
//! and for strong driving (Ω ≫ δ, g) the rapidly rotating terms drop out,
//! leaving `Ω σ_x + g/2 (e^{−iδt} a† + e^{iδt} a) σ_x` with the collective
//! `σ_x = ½ Σ_j σ_x^{(j)}`. Whenever `δt` is a multiple of 2π the field
//! disentangles and the atoms see `exp(−iΩtσ_x − iλtσ_x²)`, `λ = g²/4δ`.

mod integrate;
mod params;

pub use integrate::{
    effective_vs_full_fidelity, echo_analysis, integrate_lindblad, integrate_lindblad_with,
    integrate_schrodinger, jump_operators, write_trajectory_csv, EchoReport, JumpConvention,
    TrajectoryResult, TrajectorySample,
};
pub use params::{required_fock_dim, thermal_state, SystemParams, DEFAULT_G, DEFAULT_OMEGA0};

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::quantum::{
    fock_annihilation, matrix_exponential_skew, qubit, tensor_all, tensor_product, HilbertSpec,
    Operator, QuantumError, SparseOperator, C64, I,
};

/// Relative tolerance on `δt / 2π` being an integer.
pub const ECHO_TOL: f64 = 1e-9;
/// Minimum number of steps per period of the fastest frequency.
pub const STEPS_PER_PERIOD: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("detuning must be nonzero")]
    ZeroDetuning,
    #[error("delta*t = 2pi*{periods} is not a positive integer number of periods")]
    NotEchoTime { periods: f64 },
    #[error("step {dt:e} s exceeds the resolution bound {max:e} s")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("final time must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Operators on `atoms ⊗ field` for a fixed truncation.
#[derive(Clone, Debug)]
pub struct CavityOperators {
    pub spec: HilbertSpec,
    pub a: Operator,
    pub sigma_plus: Vec<Operator>,
    pub sigma_minus: Vec<Operator>,
    /// Collective `½ Σ_j σ_x^{(j)}` on the joint space.
    pub sigma_x: Operator,
}

impl CavityOperators {
    pub fn new(atom_count: usize, fock_dim: usize) -> Result<Self> {
        let spec = HilbertSpec::new(atom_count, fock_dim)?;
        let id_field = Operator::identity(fock_dim);
        let a = tensor_product(&Operator::identity(spec.atomic_dim()), &fock_annihilation(fock_dim)?)?;
        let embed = |single: &Operator, site: usize| -> Result<Operator> {
            let id2 = qubit::identity();
            let mut factors: Vec<&Operator> =
                (0..atom_count).map(|k| if k == site { single } else { &id2 }).collect();
            factors.push(&id_field);
            Ok(tensor_all(&factors)?)
        };
        let sp = qubit::sigma_plus();
        let sm = qubit::sigma_minus();
        let sigma_plus = (0..atom_count).map(|j| embed(&sp, j)).collect::<Result<Vec<_>>>()?;
        let sigma_minus = (0..atom_count).map(|j| embed(&sm, j)).collect::<Result<Vec<_>>>()?;
        let sigma_x = tensor_product(&collective_sigma_x(atom_count)?, &id_field)?;
        Ok(Self {
            spec,
            a,
            sigma_plus,
            sigma_minus,
            sigma_x,
        })
    }
}

/// Collective `½ Σ_j σ_x^{(j)}` on `atom_count` qubits.
pub fn collective_sigma_x(atom_count: usize) -> Result<Operator> {
    let dim = 1usize << atom_count;
    let mut acc = Operator::zeros(dim);
    for j in 0..atom_count {
        acc = &acc + &crate::quantum::embed_qubit_operator(&qubit::pauli_x(), j, atom_count)?;
    }
    Ok(acc.scale(C64::new(0.5, 0.0)))
}

/// A Hamiltonian evaluated on demand at time `t`.
pub trait Hamiltonian: Sync {
    fn spec(&self) -> HilbertSpec;
    /// Largest angular frequency present, used for step-size checks.
    fn max_frequency(&self) -> f64;
    /// `out = H(t) v`.
    fn apply(&self, t: f64, v: &DVector<C64>, out: &mut DVector<C64>);
    /// `out += scale · H(t) m`.
    fn left_mul_acc(&self, t: f64, m: &DMatrix<C64>, scale: C64, out: &mut DMatrix<C64>);
    fn matrix(&self, t: f64) -> Operator;
}

/// `H(t) = H_s + e^{−iδt} X + e^{iδt} X†`.
#[derive(Clone, Debug)]
pub struct DetunedHamiltonian {
    spec: HilbertSpec,
    stat: SparseOperator,
    up: SparseOperator,
    down: SparseOperator,
    delta: f64,
    max_frequency: f64,
}

impl DetunedHamiltonian {
    pub fn new(
        spec: HilbertSpec,
        stat: &Operator,
        up: &Operator,
        delta: f64,
        max_frequency: f64,
    ) -> Result<Self> {
        for op in [stat, up] {
            if op.dim() != spec.dim() {
                return Err(QuantumError::DimensionMismatch {
                    expected: spec.dim(),
                    found: op.dim(),
                }
                .into());
            }
        }
        Ok(Self {
            spec,
            stat: SparseOperator::from_dense(stat),
            up: SparseOperator::from_dense(up),
            down: SparseOperator::from_dense(&up.adjoint()),
            delta,
            max_frequency,
        })
    }

    pub fn constant(spec: HilbertSpec, h: &Operator, max_frequency: f64) -> Result<Self> {
        Self::new(spec, h, &Operator::zeros(h.dim()), 0.0, max_frequency)
    }

    /// The full interaction-picture Hamiltonian `H_i(t)`.
    pub fn interaction(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let ops = CavityOperators::new(2, params.fock_dim)?;
        let n = ops.spec.dim();
        let mut drive = Operator::zeros(n);
        let mut up = Operator::zeros(n);
        let a_dag = ops.a.adjoint();
        for j in 0..2 {
            drive = &drive + &(&ops.sigma_plus[j] + &ops.sigma_minus[j]);
            up = &up + &(&a_dag * &ops.sigma_minus[j]);
        }
        Self::new(
            ops.spec,
            &drive.scale(C64::new(params.rabi / 2.0, 0.0)),
            &up.scale(C64::new(params.g / 2.0, 0.0)),
            params.delta,
            params.max_frequency(),
        )
    }

    /// The slow coupling `H_e(t)` alone.
    pub fn effective(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let ops = CavityOperators::new(2, params.fock_dim)?;
        let up = (&ops.a.adjoint() * &ops.sigma_x).scale(C64::new(params.g / 2.0, 0.0));
        Self::new(ops.spec, &Operator::zeros(ops.spec.dim()), &up, params.delta, params.max_frequency())
    }

    /// `Ω σ_x + H_e(t)`: the effective model in the same frame as `H_i`.
    pub fn effective_with_drive(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let ops = CavityOperators::new(2, params.fock_dim)?;
        let up = (&ops.a.adjoint() * &ops.sigma_x).scale(C64::new(params.g / 2.0, 0.0));
        Self::new(
            ops.spec,
            &ops.sigma_x.scale(C64::new(params.rabi, 0.0)),
            &up,
            params.delta,
            params.max_frequency(),
        )
    }

    fn phase(&self, t: f64) -> C64 {
        C64::from_polar(1.0, -self.delta * t)
    }
}

impl Hamiltonian for DetunedHamiltonian {
    fn spec(&self) -> HilbertSpec {
        self.spec
    }

    fn max_frequency(&self) -> f64 {
        self.max_frequency
    }

    fn apply(&self, t: f64, v: &DVector<C64>, out: &mut DVector<C64>) {
        let p = self.phase(t);
        let pc = p.conj();
        self.stat.mul_vec_into(v, out);
        let up = self.up.mul_vec(v);
        let down = self.down.mul_vec(v);
        for i in 0..out.len() {
            out[i] += p * up[i] + pc * down[i];
        }
    }

    fn left_mul_acc(&self, t: f64, m: &DMatrix<C64>, scale: C64, out: &mut DMatrix<C64>) {
        let p = self.phase(t);
        self.stat.mul_mat_acc(m, scale, out);
        self.up.mul_mat_acc(m, scale * p, out);
        self.down.mul_mat_acc(m, scale * p.conj(), out);
    }

    fn matrix(&self, t: f64) -> Operator {
        let p = self.phase(t);
        let m = self.stat.to_dense().into_matrix()
            + self.up.to_dense().into_matrix() * p
            + self.down.to_dense().into_matrix() * p.conj();
        Operator::from_matrix(m).expect("square")
    }
}

/// `H_i(t)` on `atom1 ⊗ atom2 ⊗ field`.
pub fn interaction_hamiltonian(params: &SystemParams, t: f64) -> Result<Operator> {
    Ok(DetunedHamiltonian::interaction(params)?.matrix(t))
}

/// `H_e(t) = g/2 (e^{−iδt} a† + e^{iδt} a) σ_x`.
pub fn effective_hamiltonian(params: &SystemParams, t: f64) -> Result<Operator> {
    Ok(DetunedHamiltonian::effective(params)?.matrix(t))
}

/// Coefficients of the normal-ordered effective propagator
/// `U_e(t) = e^{−iAσ_x²} e^{−iBσ_x a} e^{−iCσ_x a†}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveCoefficients {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub lambda: f64,
}

/// `e^{ix} − 1` without cancellation near multiples of 2π.
fn expi_minus_one(x: f64) -> C64 {
    C64::from_polar(2.0 * (x / 2.0).sin(), x / 2.0) * I
}

pub fn effective_coefficients(params: &SystemParams, t: f64) -> Result<EffectiveCoefficients> {
    let (g, d) = (params.g, params.delta);
    if d == 0.0 {
        return Err(DynamicsError::ZeroDetuning);
    }
    let two_i_delta = C64::new(0.0, 2.0 * d);
    let b = expi_minus_one(d * t) * g / two_i_delta;
    let c = -expi_minus_one(-d * t) * g / two_i_delta;
    let a = (C64::new(t, 0.0) + expi_minus_one(-d * t) / C64::new(0.0, d)) * (g * g / (4.0 * d));
    Ok(EffectiveCoefficients {
        a,
        b,
        c,
        lambda: params.lambda(),
    })
}

/// Number of detuning periods in `t` when it is a positive integer.
pub fn echo_periods(delta: f64, t: f64) -> Result<u64> {
    if delta == 0.0 {
        return Err(DynamicsError::ZeroDetuning);
    }
    let periods = delta * t / (2.0 * PI);
    let m = periods.round();
    if m < 1.0 || (periods - m).abs() > ECHO_TOL * m.max(1.0) {
        return Err(DynamicsError::NotEchoTime { periods });
    }
    Ok(m as u64)
}

/// `exp(−iθ_r σ_x − iθ_nl σ_x²)` on two atoms.
pub fn two_atom_collective_unitary(theta_rabi: f64, theta_nl: f64) -> Operator {
    let sx = collective_sigma_x(2).expect("two atoms");
    let gen = &sx.scale(C64::new(theta_rabi, 0.0)) + &(&sx * &sx).scale(C64::new(theta_nl, 0.0));
    matrix_exponential_skew(&gen, 1.0).expect("real combination of Hermitian operators")
}

/// `U(t) = exp(−iΩtσ_x − iλtσ_x²)`, valid when `δt = 2πm`.
pub fn effective_unitary(params: &SystemParams, t: f64) -> Result<Operator> {
    echo_periods(params.delta, t)?;
    Ok(two_atom_collective_unitary(params.rabi * t, params.lambda() * t))
}
