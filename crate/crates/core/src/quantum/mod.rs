//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Every space used in this crate is `atom_1 ⊗ atom_2 ⊗ … ⊗ field`, with the
//! atomic basis ordered `(|e⟩, |g⟩)` so that the computational identification
//! `|0⟩ = |e⟩`, `|1⟩ = |g⟩` is a direct index map. Dimensions stay below a few
//! hundred, so storage is dense; [`SparseOperator`] exists only as a product
//! kernel for the integrators.

mod sparse;

pub use sparse::SparseOperator;

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Allowed `max |M − M†|` (relative to `max(1, max |M|)`) for a Hermitian claim.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed `max |U†U − I|` for a unitary claim.
pub const UNITARY_TOL: f64 = 1e-10;
/// Allowed norm deviation of a normalized state.
pub const NORM_TOL: f64 = 1e-10;
/// Density-matrix validity checks.
pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-8;
pub const DENSITY_EIGEN_FLOOR: f64 = -1e-8;

/// Upper bound on any operator dimension built here.
pub const MAX_DIM: usize = 1 << 13;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not Hermitian (max |M - M^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("fock dimension must be at least 2, got {0}")]
    InvalidFockDim(usize),
    #[error("atom count must be positive")]
    NoAtoms,
    #[error("dimension {0} exceeds the dense limit {MAX_DIM}")]
    DimensionOverflow(usize),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// Layout of `atoms ⊗ field`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    atom_count: usize,
    fock_dim: usize,
}

impl HilbertSpec {
    pub fn new(atom_count: usize, fock_dim: usize) -> Result<Self> {
        if atom_count == 0 {
            return Err(QuantumError::NoAtoms);
        }
        if fock_dim < 2 {
            return Err(QuantumError::InvalidFockDim(fock_dim));
        }
        let dim = (1usize << atom_count)
            .checked_mul(fock_dim)
            .ok_or(QuantumError::DimensionOverflow(usize::MAX))?;
        if dim > MAX_DIM {
            return Err(QuantumError::DimensionOverflow(dim));
        }
        Ok(Self { atom_count, fock_dim })
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn atomic_dim(&self) -> usize {
        1 << self.atom_count
    }

    pub fn dim(&self) -> usize {
        self.atomic_dim() * self.fock_dim
    }
}

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QuantumError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    /// Builds an `n × n` operator from row-major entries.
    pub fn from_rows(n: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(QuantumError::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        Ok(Self {
            matrix: DMatrix::from_row_slice(n, n, entries),
        })
    }

    pub fn from_real_rows(n: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(n, &c)
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&DVector::from_column_slice(entries)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            matrix: &self.matrix * factor,
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `max |self − other|` entrywise.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "operator dimensions differ");
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL * self.max_abs().max(1.0)
    }

    pub fn unitary_deviation(&self) -> f64 {
        let prod = Operator {
            matrix: self.matrix.adjoint() * &self.matrix,
        };
        prod.max_abs_diff(&Operator::identity(self.dim()))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary_deviation() < UNITARY_TOL
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(StateVector {
            amplitudes: &self.matrix * &psi.amplitudes,
        })
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim(), rho.dim())?;
        Ok(DensityMatrix {
            matrix: &self.matrix * &rho.matrix * self.matrix.adjoint(),
        })
    }

    /// Equality up to a global phase, returning the phase `φ` with
    /// `self ≈ φ · other` when the entrywise error is below `tol`.
    pub fn equal_up_to_phase(&self, other: &Operator, tol: f64) -> Option<C64> {
        if self.dim() != other.dim() {
            return None;
        }
        let (idx, pivot) = other
            .matrix
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
        if pivot.norm() < tol {
            return (self.max_abs() < tol).then_some(ONE);
        }
        let ratio = self.matrix.iter().nth(idx).copied()? / pivot;
        let phase = ratio / ratio.norm();
        let diff = self.max_abs_diff(&other.scale(phase));
        (diff < tol).then_some(phase)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

/// A ket.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Self {
        Self {
            amplitudes: DVector::from_vec(amplitudes),
        }
    }

    pub fn from_vector(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self::from_amplitudes(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            amplitudes: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QuantumError::ZeroNorm);
        }
        self.amplitudes.unscale_mut(n);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    pub fn scale(&self, factor: C64) -> StateVector {
        StateVector {
            amplitudes: &self.amplitudes * factor,
        }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector {
            amplitudes: &self.amplitudes + &rhs.amplitudes,
        }
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        StateVector {
            amplitudes: &self.amplitudes - &rhs.amplitudes,
        }
    }
}

/// A mixed state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wraps a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix);
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without validation; integrators use this for
    /// intermediate states and validate where a contract requires it.
    pub fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        Self { matrix }
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.projector()
    }

    /// `Σ_k w_k |ψ_k⟩⟨ψ_k|`.
    pub fn mixture(components: &[(f64, StateVector)]) -> Result<Self> {
        let dim = components
            .first()
            .map(|(_, s)| s.dim())
            .ok_or_else(|| QuantumError::InvalidDensityMatrix("empty mixture".into()))?;
        let mut m = DMatrix::zeros(dim, dim);
        for (w, s) in components {
            check_dim(dim, s.dim())?;
            m += s.projector().matrix * C64::new(*w, 0.0);
        }
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ_ij |ρ_ij|² for Hermitian ρ.
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        check_dim(self.dim(), op.dim())?;
        Ok((&self.matrix * op.matrix()).trace())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut v: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Spectral decomposition `(weight, eigenvector)` keeping weights above
    /// `floor`, largest first.
    pub fn spectral_components(&self, floor: f64) -> Vec<(f64, StateVector)> {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let mut out: Vec<(f64, StateVector)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > floor)
            .map(|(k, &w)| {
                (
                    w,
                    StateVector::from_vector(eig.eigenvectors.column(k).into_owned()),
                )
            })
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrix.nrows() != self.matrix.ncols() {
            return Err(QuantumError::NotSquare {
                rows: self.matrix.nrows(),
                cols: self.matrix.ncols(),
            });
        }
        let herm = self
            .matrix
            .iter()
            .zip(self.matrix.adjoint().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if herm > DENSITY_HERMITIAN_TOL {
            return Err(QuantumError::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.matrix.trace();
        if (tr - ONE).norm() > DENSITY_TRACE_TOL {
            return Err(QuantumError::InvalidDensityMatrix(format!(
                "trace {} differs from 1",
                tr.re
            )));
        }
        let min_eig = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min_eig < DENSITY_EIGEN_FLOOR {
            return Err(QuantumError::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(QuantumError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &Operator, b: &Operator) -> Result<Operator> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(QuantumError::DimensionOverflow(usize::MAX))?;
    if dim > MAX_DIM {
        return Err(QuantumError::DimensionOverflow(dim));
    }
    Ok(Operator {
        matrix: a.matrix.kronecker(&b.matrix),
    })
}

/// `a_1 ⊗ a_2 ⊗ …`.
pub fn tensor_all(ops: &[&Operator]) -> Result<Operator> {
    let mut iter = ops.iter();
    let first = iter
        .next()
        .map(|o| (*o).clone())
        .unwrap_or_else(|| Operator::identity(1));
    iter.try_fold(first, |acc, o| tensor_product(&acc, o))
}

/// Truncated cavity annihilation operator, `⟨n−1|a|n⟩ = √n`.
pub fn fock_annihilation(fock_dim: usize) -> Result<Operator> {
    if fock_dim < 2 {
        return Err(QuantumError::InvalidFockDim(fock_dim));
    }
    let mut m = DMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator { matrix: m })
}

pub fn fock_creation(fock_dim: usize) -> Result<Operator> {
    Ok(fock_annihilation(fock_dim)?.adjoint())
}

pub fn number_operator(fock_dim: usize) -> Operator {
    let diag: Vec<C64> = (0..fock_dim).map(|n| C64::new(n as f64, 0.0)).collect();
    Operator::diagonal(&diag)
}

/// `exp(−i h t)` for Hermitian `h`, through its eigendecomposition.
pub fn matrix_exponential_skew(h: &Operator, t: f64) -> Result<Operator> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(QuantumError::NotHermitian { deviation });
    }
    let herm = (&h.matrix + h.matrix.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&e| C64::from_polar(1.0, -e * t))
        .collect();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, p) in phases.iter().enumerate() {
        for r in 0..scaled.nrows() {
            scaled[(r, k)] *= p;
        }
    }
    Ok(Operator {
        matrix: scaled * v.adjoint(),
    })
}

/// Traces out the cavity mode of a state on `atoms ⊗ field`.
pub fn partial_trace_field(rho: &DensityMatrix, spec: &HilbertSpec) -> Result<DensityMatrix> {
    check_dim(spec.dim(), rho.dim())?;
    Ok(partial_trace_field_unchecked(rho.matrix(), spec))
}

pub(crate) fn partial_trace_field_unchecked(rho: &DMatrix<C64>, spec: &HilbertSpec) -> DensityMatrix {
    let da = spec.atomic_dim();
    let df = spec.fock_dim();
    let mut out = DMatrix::zeros(da, da);
    for a in 0..da {
        for b in 0..da {
            let mut acc = ZERO;
            for n in 0..df {
                acc += rho[(a * df + n, b * df + n)];
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix { matrix: out }
}

/// Traces out the atoms, leaving the cavity-mode state.
pub fn partial_trace_atoms(rho: &DensityMatrix, spec: &HilbertSpec) -> Result<DensityMatrix> {
    check_dim(spec.dim(), rho.dim())?;
    let da = spec.atomic_dim();
    let df = spec.fock_dim();
    let mut out = DMatrix::zeros(df, df);
    for n in 0..df {
        for m in 0..df {
            let mut acc = ZERO;
            for a in 0..da {
                acc += rho.matrix[(a * df + n, a * df + m)];
            }
            out[(n, m)] = acc;
        }
    }
    Ok(DensityMatrix { matrix: out })
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    check_dim(rho.dim(), psi.dim())?;
    let v = psi.amplitudes.dotc(&(&rho.matrix * &psi.amplitudes));
    Ok(v.re.clamp(0.0, 1.0))
}

/// Single-qubit building blocks in the `(|e⟩, |g⟩)` ordering.
pub mod qubit {
    use super::{Operator, C64, ONE, ZERO};

    pub fn identity() -> Operator {
        Operator::identity(2)
    }

    pub fn pauli_x() -> Operator {
        Operator::from_rows(2, &[ZERO, ONE, ONE, ZERO]).unwrap()
    }

    pub fn pauli_y() -> Operator {
        let i = C64::new(0.0, 1.0);
        Operator::from_rows(2, &[ZERO, -i, i, ZERO]).unwrap()
    }

    pub fn pauli_z() -> Operator {
        Operator::diagonal(&[ONE, -ONE])
    }

    /// `σ⁺ = |e⟩⟨g|`.
    pub fn sigma_plus() -> Operator {
        Operator::from_rows(2, &[ZERO, ONE, ZERO, ZERO]).unwrap()
    }

    /// `σ⁻ = |g⟩⟨e|`.
    pub fn sigma_minus() -> Operator {
        Operator::from_rows(2, &[ZERO, ZERO, ONE, ZERO]).unwrap()
    }

    /// Standard Hadamard in the `|0⟩ = |e⟩`, `|1⟩ = |g⟩` identification.
    pub fn hadamard() -> Operator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::from_real_rows(2, &[s, s, s, -s]).unwrap()
    }

    pub fn phase_s() -> Operator {
        Operator::diagonal(&[ONE, C64::new(0.0, 1.0)])
    }

    pub fn excited() -> super::StateVector {
        super::StateVector::basis(2, 0)
    }

    pub fn ground() -> super::StateVector {
        super::StateVector::basis(2, 1)
    }
}

/// `op` acting on `site` of `n_sites` qubits, identity elsewhere.
pub fn embed_qubit_operator(op: &Operator, site: usize, n_sites: usize) -> Result<Operator> {
    check_dim(2, op.dim())?;
    if site >= n_sites {
        return Err(QuantumError::DimensionMismatch {
            expected: n_sites,
            found: site,
        });
    }
    let id = Operator::identity(2);
    let factors: Vec<&Operator> = (0..n_sites).map(|k| if k == site { op } else { &id }).collect();
    tensor_all(&factors)
}
