//! Measurement-based Grover search over four elements on the Box(4) cluster.
//!
//! Atoms 4 and 3 are measured in phase bases `(|0⟩ ± e^{iφ}|1⟩)/√2`, atoms 2
//! and 1 go through `σ_z` then a Hadamard and are read out in the
//! computational basis. The answer is `(r₁⊕r₃, r₂⊕r₄)`.
//!
//! Which of α, β drives which atom and which outcome patterns can be trusted
//! are not hard-coded: [`calibrate`] enumerates every branch on the
//! collision-built cluster for both assignments and keeps what reproduces the
//! oracle table.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cluster::{
    apply_single_qubit, box4_paper_state, build_cluster_collision, build_cluster_ideal, local_equivalence,
    ClusterError, ClusterGraph, GateSet, BOX4_COLLISION_ORDER,
};
use crate::gate::{controlled_phase, DEFAULT_K};
use crate::quantum::{qubit, C64, StateVector};

/// Branches below this probability are treated as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-12;
const SETTING_TOL: f64 = 1e-9;
const QUBITS: usize = 4;

#[derive(Debug, Error)]
pub enum GroverError {
    #[error("oracle setting (α = {alpha}, β = {beta}) is not one of 0, π")]
    NonCanonicalSetting { alpha: f64, beta: f64 },
    #[error("qubit {qubit} out of range for a {n}-qubit state")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("readout transform applies to atoms 1 and 2 only, got {0}")]
    NotReadoutQubit(usize),
    #[error("state dimension {0} is not a power of two")]
    NotQubitRegister(usize),
    #[error("forced outcome {outcome} has probability {probability:e}")]
    ImpossibleOutcome { outcome: u8, probability: f64 },
    #[error("outcome must be 0 or 1, got {0}")]
    InvalidBit(u8),
    #[error("no basis assignment reproduces the oracle table")]
    Uncalibrated,
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

pub type Result<T> = std::result::Result<T, GroverError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleSetting {
    pub alpha: f64,
    pub beta: f64,
}

impl OracleSetting {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    /// The four oracle settings, ordered by the element they mark.
    pub fn all() -> [OracleSetting; 4] {
        [
            Self::new(PI, PI),
            Self::new(PI, 0.0),
            Self::new(0.0, PI),
            Self::new(0.0, 0.0),
        ]
    }

    /// `(α is π, β is π)` when both angles are canonical.
    fn canonical(&self) -> Option<(bool, bool)> {
        let which = |x: f64| {
            if x.abs() < SETTING_TOL {
                Some(false)
            } else if (x - PI).abs() < SETTING_TOL {
                Some(true)
            } else {
                None
            }
        };
        Some((which(self.alpha)?, which(self.beta)?))
    }

    pub fn label(&self) -> String {
        let name = |x: f64| {
            if (x - PI).abs() < SETTING_TOL {
                "pi".to_string()
            } else if x.abs() < SETTING_TOL {
                "0".to_string()
            } else {
                format!("{x}")
            }
        };
        format!("{}-{}", name(self.alpha), name(self.beta))
    }
}

/// Element marked by the oracle: ππ → 00, π0 → 01, 0π → 10, 00 → 11.
pub fn oracle_truth(setting: &OracleSetting) -> Result<(u8, u8)> {
    let (a, b) = setting.canonical().ok_or(GroverError::NonCanonicalSetting {
        alpha: setting.alpha,
        beta: setting.beta,
    })?;
    Ok((u8::from(!a), u8::from(!b)))
}

pub fn decode(r1: u8, r2: u8, r3: u8, r4: u8) -> (u8, u8) {
    (r1 ^ r3, r2 ^ r4)
}

/// How the outcome of a measurement is chosen.
#[derive(Clone, Copy, Debug)]
pub enum Outcome {
    Forced(u8),
    /// Uniform draw in `[0, 1)`; outcome 0 when below its probability.
    Sampled(f64),
}

fn register_size(state: &StateVector) -> Result<usize> {
    let dim = state.dim();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(GroverError::NotQubitRegister(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_qubit(qubit: usize, n: usize) -> Result<()> {
    if qubit == 0 || qubit > n {
        return Err(GroverError::QubitOutOfRange { qubit, n });
    }
    Ok(())
}

/// Projects qubit `q` (1-based, qubit 1 most significant) onto `|v⟩` without
/// renormalising.
fn project(state: &StateVector, q: usize, n: usize, v: [C64; 2]) -> StateVector {
    let b = 1usize << (n - q);
    let amps = state.amplitudes();
    let mut out = amps.clone();
    for base in (0..state.dim()).filter(|i| i & b == 0) {
        let overlap = v[0].conj() * amps[base] + v[1].conj() * amps[base | b];
        out[base] = v[0] * overlap;
        out[base | b] = v[1] * overlap;
    }
    StateVector::from_vector(out)
}

fn phase_vector(phase: f64, bit: u8) -> [C64; 2] {
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    [
        C64::new(FRAC_1_SQRT_2, 0.0),
        C64::from_polar(sign * FRAC_1_SQRT_2, phase),
    ]
}

fn computational_vector(bit: u8) -> [C64; 2] {
    if bit == 0 {
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    } else {
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
    }
}

fn measure_with(state: &StateVector, q: usize, basis: impl Fn(u8) -> [C64; 2], how: Outcome) -> Result<(u8, f64, StateVector)> {
    let n = register_size(state)?;
    check_qubit(q, n)?;
    let norm2 = state.norm().powi(2);
    let branch0 = project(state, q, n, basis(0));
    let p0 = (branch0.norm().powi(2) / norm2).clamp(0.0, 1.0);
    let outcome = match how {
        Outcome::Forced(bit) if bit > 1 => return Err(GroverError::InvalidBit(bit)),
        Outcome::Forced(bit) => bit,
        Outcome::Sampled(u) => u8::from(u >= p0),
    };
    let (p, branch) = if outcome == 0 {
        (p0, branch0)
    } else {
        (1.0 - p0, project(state, q, n, basis(1)))
    };
    if p < PROBABILITY_FLOOR {
        return Err(GroverError::ImpossibleOutcome { outcome, probability: p });
    }
    let post = branch.normalized().map_err(|_| GroverError::ImpossibleOutcome { outcome, probability: p })?;
    Ok((outcome, p, post))
}

/// Measures qubit `q` in `(|0⟩ ± e^{iφ}|1⟩)/√2`; outcome 0 is the `+` state.
pub fn measure_in_basis(state: &StateVector, q: usize, phase: f64, how: Outcome) -> Result<(u8, f64, StateVector)> {
    measure_with(state, q, |bit| phase_vector(phase, bit), how)
}

pub fn measure_computational(state: &StateVector, q: usize, how: Outcome) -> Result<(u8, f64, StateVector)> {
    measure_with(state, q, computational_vector, how)
}

/// `σ_z` followed by a Hadamard on atom 1 or 2.
pub fn readout_transform(state: &StateVector, q: usize) -> Result<StateVector> {
    if q != 1 && q != 2 {
        return Err(GroverError::NotReadoutQubit(q));
    }
    let n = register_size(state)?;
    check_qubit(q, n)?;
    let gate = &qubit::hadamard() * &qubit::pauli_z();
    Ok(apply_single_qubit(state, &gate, q, n)?)
}

/// Which phase-basis angle drives which atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisAssignment {
    /// α on atom 4, β on atom 3.
    AlphaOnAtom4,
    /// α on atom 3, β on atom 4.
    AlphaOnAtom3,
}

impl BasisAssignment {
    /// `(phase for atom 4, phase for atom 3)`.
    pub fn phases(&self, setting: &OracleSetting) -> (f64, f64) {
        match self {
            BasisAssignment::AlphaOnAtom4 => (setting.alpha, setting.beta),
            BasisAssignment::AlphaOnAtom3 => (setting.beta, setting.alpha),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementOrder {
    FourFirst,
    ThreeFirst,
}

impl MeasurementOrder {
    pub fn sequence(&self) -> [usize; 4] {
        match self {
            MeasurementOrder::FourFirst => [4, 3, 2, 1],
            MeasurementOrder::ThreeFirst => [3, 4, 2, 1],
        }
    }
}

/// Which `(r₄, r₃)` patterns give a trustworthy answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ValidityRule {
    /// `admitted[r4][r3]`.
    pub admitted: [[bool; 2]; 2],
}

impl ValidityRule {
    /// Rejects only `r₃ = r₄ = 0`.
    pub fn not_both_zero() -> Self {
        Self {
            admitted: [[false, true], [true, true]],
        }
    }

    pub fn admits(&self, r4: u8, r3: u8) -> bool {
        self.admitted[r4 as usize][r3 as usize]
    }

    /// Every pattern this rule admits is also admitted by `other`.
    pub fn within(&self, other: &ValidityRule) -> bool {
        (0..2).all(|a| (0..2).all(|b| !self.admitted[a][b] || other.admitted[a][b]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSource {
    PaperExplicit,
    CollisionGenerated,
}

impl std::str::FromStr for ClusterSource {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" | "paper_explicit" | "paper-explicit" => Ok(Self::PaperExplicit),
            "collision" | "collision_generated" | "collision-generated" => Ok(Self::CollisionGenerated),
            other => Err(format!("unknown cluster source '{other}' (expected paper or collision)")),
        }
    }
}

/// A cluster state ready for the search, with the local correction that
/// maps it onto the ideal Box(4) cluster when one exists.
#[derive(Clone, Debug)]
pub struct PreparedCluster {
    pub source: ClusterSource,
    pub state: StateVector,
    /// Per-qubit `{I, Z, X, H}` correction already applied, if one was found.
    pub correction: Option<Vec<String>>,
}

pub fn prepare_cluster(source: ClusterSource) -> Result<PreparedCluster> {
    let graph = ClusterGraph::box4();
    let raw = match source {
        ClusterSource::PaperExplicit => box4_paper_state(),
        ClusterSource::CollisionGenerated => {
            build_cluster_collision(&graph, &controlled_phase(DEFAULT_K), &BOX4_COLLISION_ORDER)?.state
        }
    };
    let ideal = build_cluster_ideal(&graph)?.state;
    let frame = local_equivalence(&raw, &ideal, GateSet::PauliHadamard);
    let (state, correction) = match frame {
        Some(eq) => {
            let gates = GateSet::PauliHadamard.gates();
            let mut psi = raw;
            for (q, name) in eq.gates.iter().enumerate() {
                let op = &gates.iter().find(|(g, _)| g == name).expect("gate from the same set").1;
                psi = apply_single_qubit(&psi, op, q + 1, QUBITS)?;
            }
            (psi, Some(eq.gates))
        }
        None => (raw, None),
    };
    Ok(PreparedCluster {
        source,
        state,
        correction,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub order: [usize; 4],
    pub r4: u8,
    pub r3: u8,
    pub r2: u8,
    pub r1: u8,
    pub probability: f64,
    pub decoded: (u8, u8),
    pub valid: bool,
}

impl MeasurementRecord {
    pub fn decoded_label(&self) -> String {
        format!("{}{}", self.decoded.0, self.decoded.1)
    }
}

/// Assignment, validity rule and measurement order used for a search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GroverProtocol {
    pub assignment: BasisAssignment,
    pub rule: ValidityRule,
    pub order: MeasurementOrder,
}

impl GroverProtocol {
    fn bits(&self, branch: usize) -> [u8; 4] {
        // branch index is r4 r3 r2 r1 read as a binary number
        [3, 2, 1, 0].map(|s| ((branch >> s) & 1) as u8)
    }

    /// Forced walk along one branch; returns the unnormalised probability.
    fn branch_probability(&self, state: &StateVector, setting: &OracleSetting, bits: [u8; 4]) -> f64 {
        let (phase4, phase3) = self.assignment.phases(setting);
        let [r4, r3, r2, r1] = bits;
        let mut psi = state.clone();
        for atom in self.order.sequence() {
            psi = match atom {
                4 => project(&psi, 4, QUBITS, phase_vector(phase4, r4)),
                3 => project(&psi, 3, QUBITS, phase_vector(phase3, r3)),
                q => {
                    let turned = readout_transform(&psi, q).expect("atoms 1 and 2 exist");
                    project(&turned, q, QUBITS, computational_vector(if q == 2 { r2 } else { r1 }))
                }
            };
        }
        psi.norm().powi(2) / state.norm().powi(2)
    }

    fn record(&self, bits: [u8; 4], probability: f64) -> MeasurementRecord {
        let [r4, r3, r2, r1] = bits;
        MeasurementRecord {
            order: self.order.sequence(),
            r4,
            r3,
            r2,
            r1,
            probability,
            decoded: decode(r1, r2, r3, r4),
            valid: probability >= PROBABILITY_FLOOR && self.rule.admits(r4, r3),
        }
    }

    /// All 16 forced-outcome branches, ordered by `(r₄, r₃, r₂, r₁)`.
    pub fn enumerate(&self, setting: &OracleSetting, cluster: &PreparedCluster) -> Vec<MeasurementRecord> {
        (0..16usize)
            .into_par_iter()
            .map(|branch| {
                let bits = self.bits(branch);
                self.record(bits, self.branch_probability(&cluster.state, setting, bits))
            })
            .collect()
    }

    /// One stochastic run drawing each outcome from the seeded generator.
    pub fn sample(&self, setting: &OracleSetting, cluster: &PreparedCluster, seed: u64) -> Result<MeasurementRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (phase4, phase3) = self.assignment.phases(setting);
        let mut psi = cluster.state.clone().normalized().map_err(|_| GroverError::NotQubitRegister(0))?;
        let mut bits = [0u8; 4];
        let mut probability = 1.0;
        for atom in self.order.sequence() {
            let how = Outcome::Sampled(rng.random::<f64>());
            let (bit, p, post) = match atom {
                4 => measure_in_basis(&psi, 4, phase4, how)?,
                3 => measure_in_basis(&psi, 3, phase3, how)?,
                q => measure_computational(&readout_transform(&psi, q)?, q, how)?,
            };
            bits[4 - atom] = bit;
            probability *= p;
            psi = post;
        }
        Ok(self.record(bits, probability))
    }
}

/// Outcome of the brute-force search over assignments and validity patterns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub assignment: BasisAssignment,
    pub rule: ValidityRule,
    /// Patterns that decode correctly under the α-on-atom-4 reading.
    pub stated_assignment_rule: ValidityRule,
    /// The "not both zero" rule only admits patterns that decode correctly.
    pub paper_rule_sufficient: bool,
    /// The derived rule rejects `r₃ = r₄ = 0`.
    pub paper_rule_necessary: bool,
}

/// Patterns `(r₄, r₃)` whose every possible branch decodes to the marked
/// element for all four oracle settings.
fn derive_rule(assignment: BasisAssignment, cluster: &PreparedCluster) -> ValidityRule {
    let probe = GroverProtocol {
        assignment,
        rule: ValidityRule {
            admitted: [[true; 2]; 2],
        },
        order: MeasurementOrder::FourFirst,
    };
    let mut admitted = [[true; 2]; 2];
    for setting in OracleSetting::all() {
        let truth = oracle_truth(&setting).expect("canonical");
        for rec in probe.enumerate(&setting, cluster) {
            if rec.probability >= PROBABILITY_FLOOR && rec.decoded != truth {
                admitted[rec.r4 as usize][rec.r3 as usize] = false;
            }
        }
    }
    ValidityRule { admitted }
}

fn admitted_count(rule: &ValidityRule) -> usize {
    rule.admitted.iter().flatten().filter(|a| **a).count()
}

/// Derives the basis assignment and validity rule on the collision-built
/// cluster. The stated assignment is kept unless the swapped one admits
/// strictly more patterns.
pub fn calibrate() -> Result<Calibration> {
    let cluster = prepare_cluster(ClusterSource::CollisionGenerated)?;
    let stated = derive_rule(BasisAssignment::AlphaOnAtom4, &cluster);
    let swapped = derive_rule(BasisAssignment::AlphaOnAtom3, &cluster);
    let (assignment, rule) = if admitted_count(&swapped) > admitted_count(&stated) {
        (BasisAssignment::AlphaOnAtom3, swapped)
    } else {
        (BasisAssignment::AlphaOnAtom4, stated)
    };
    if admitted_count(&rule) == 0 {
        return Err(GroverError::Uncalibrated);
    }
    Ok(Calibration {
        assignment,
        rule,
        stated_assignment_rule: stated,
        paper_rule_sufficient: ValidityRule::not_both_zero().within(&rule),
        paper_rule_necessary: !rule.admits(0, 0),
    })
}

impl Calibration {
    pub fn protocol(&self, order: MeasurementOrder) -> GroverProtocol {
        GroverProtocol {
            assignment: self.assignment,
            rule: self.rule,
            order,
        }
    }
}

pub fn enumerate_branches(setting: &OracleSetting, source: ClusterSource) -> Result<Vec<MeasurementRecord>> {
    let protocol = calibrate()?.protocol(MeasurementOrder::FourFirst);
    Ok(protocol.enumerate(setting, &prepare_cluster(source)?))
}

pub fn sample_run(setting: &OracleSetting, source: ClusterSource, seed: u64) -> Result<MeasurementRecord> {
    let protocol = calibrate()?.protocol(MeasurementOrder::FourFirst);
    protocol.sample(setting, &prepare_cluster(source)?, seed)
}

pub fn write_branches_csv<W: Write>(records: &[MeasurementRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "r4,r3,r2,r1,probability,decoded,valid")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.12e},{},{}",
            r.r4,
            r.r3,
            r.r2,
            r.r1,
            r.probability,
            r.decoded_label(),
            r.valid
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(amps: &[f64]) -> StateVector {
        StateVector::from_real(amps)
    }

    #[test]
    fn plus_state_gives_outcome_zero() {
        let plus = ket(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let (bit, p, post) = measure_in_basis(&plus, 1, 0.0, Outcome::Sampled(0.999)).unwrap();
        assert_eq!(bit, 0);
        assert!((p - 1.0).abs() < 1e-15);
        assert!(post.max_abs_diff(&plus) < 1e-15);
        assert!(matches!(
            measure_in_basis(&plus, 1, 0.0, Outcome::Forced(1)),
            Err(GroverError::ImpossibleOutcome { .. })
        ));
    }

    #[test]
    fn basis_state_is_unbiased_in_every_phase_basis() {
        let zero = ket(&[1.0, 0.0]);
        for phase in [0.0, 0.3, PI / 2.0, PI, 4.0] {
            for bit in 0..2 {
                let (_, p, post) = measure_in_basis(&zero, 1, phase, Outcome::Forced(bit)).unwrap();
                assert!((p - 0.5).abs() < 1e-15);
                let expected = StateVector::from_amplitudes(phase_vector(phase, bit).to_vec());
                assert!(post.max_abs_diff(&expected) < 1e-15);
            }
        }
    }

    #[test]
    fn explicit_state_atom4_is_unbiased() {
        let s = box4_paper_state();
        let (_, p0, _) = measure_in_basis(&s, 4, PI, Outcome::Forced(0)).unwrap();
        let (_, p1, _) = measure_in_basis(&s, 4, PI, Outcome::Forced(1)).unwrap();
        assert!((p0 - 0.5).abs() < 1e-12 && (p1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn readout_examples() {
        let zero = ket(&[1.0, 0.0]);
        let one = ket(&[0.0, 1.0]);
        let out0 = readout_transform(&zero, 1).unwrap();
        assert!(out0.max_abs_diff(&ket(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])) < 1e-15);
        let out1 = readout_transform(&one, 1).unwrap();
        assert!(out1.max_abs_diff(&ket(&[-FRAC_1_SQRT_2, FRAC_1_SQRT_2])) < 1e-15);
        assert!(readout_transform(&box4_paper_state(), 3).is_err());
        let hz = &qubit::hadamard() * &qubit::pauli_z();
        let xh = &qubit::pauli_x() * &qubit::hadamard();
        assert!(hz.max_abs_diff(&xh) < 1e-15);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(0, 0, 0, 0), (0, 0));
        assert_eq!(decode(1, 0, 1, 0), (0, 0));
        assert_eq!(decode(1, 1, 0, 1), (1, 0));
    }

    #[test]
    fn oracle_table() {
        let truth: Vec<_> = OracleSetting::all().iter().map(|s| oracle_truth(s).unwrap()).collect();
        assert_eq!(truth, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert!(oracle_truth(&OracleSetting::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn calibration_swaps_the_assignment() {
        let cal = calibrate().unwrap();
        assert_eq!(cal.assignment, BasisAssignment::AlphaOnAtom3);
        assert_eq!(cal.rule.admitted, [[true; 2]; 2]);
        assert_eq!(cal.stated_assignment_rule.admitted, [[false; 2]; 2]);
        assert!(cal.paper_rule_sufficient);
        assert!(!cal.paper_rule_necessary);
    }

    #[test]
    fn every_setting_decodes_to_its_element() {
        for setting in OracleSetting::all() {
            let truth = oracle_truth(&setting).unwrap();
            let recs = enumerate_branches(&setting, ClusterSource::CollisionGenerated).unwrap();
            assert_eq!(recs.len(), 16);
            let total: f64 = recs.iter().map(|r| r.probability).sum();
            assert!((total - 1.0).abs() < 1e-9);
            for r in recs.iter().filter(|r| r.valid) {
                assert_eq!(r.decoded, truth, "{} branch {:?}", setting.label(), r);
            }
        }
    }

    #[test]
    fn measurement_order_does_not_matter() {
        let cal = calibrate().unwrap();
        let cluster = prepare_cluster(ClusterSource::CollisionGenerated).unwrap();
        for setting in OracleSetting::all() {
            let a = cal.protocol(MeasurementOrder::FourFirst).enumerate(&setting, &cluster);
            let b = cal.protocol(MeasurementOrder::ThreeFirst).enumerate(&setting, &cluster);
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.decoded, y.decoded);
                assert!((x.probability - y.probability).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn explicit_state_has_no_correction_frame() {
        let paper = prepare_cluster(ClusterSource::PaperExplicit).unwrap();
        assert!(paper.correction.is_none());
        let coll = prepare_cluster(ClusterSource::CollisionGenerated).unwrap();
        assert_eq!(coll.correction, Some(vec!["I".to_string(); 4]));
        let recs = enumerate_branches(&OracleSetting::new(PI, PI), ClusterSource::PaperExplicit).unwrap();
        let total: f64 = recs.iter().map(|r| r.probability).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = OracleSetting::new(PI, PI);
        let a = sample_run(&s, ClusterSource::CollisionGenerated, 42).unwrap();
        let b = sample_run(&s, ClusterSource::CollisionGenerated, 42).unwrap();
        assert_eq!(a, b);
        assert!(!a.valid || a.decoded == (0, 0));
    }
}
