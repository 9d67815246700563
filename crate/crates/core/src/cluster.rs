//! Cluster graphs, cluster-state construction and stabilizer verification.
//!
//! Vertices are labelled `1..=n` and vertex `v` is tensor factor `v` counted
//! from the left, i.e. bit `n − v` of a basis index. Bit value 0 is `|0⟩ = |e⟩`.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quantum::{qubit, tensor_all, Operator, QuantumError, StateVector, C64, ONE};

/// Largest register simulated densely.
pub const MAX_CLUSTER_QUBITS: usize = 10;
/// Norm tolerance for `K|ψ⟩ = ±|ψ⟩`.
pub const EIGEN_TOL: f64 = 1e-9;
/// Required overlap for a local-equivalence hit is `1 − OVERLAP_TOL`.
pub const OVERLAP_TOL: f64 = 1e-9;
/// Largest register searched exhaustively for local equivalence.
pub const MAX_EQUIVALENCE_QUBITS: usize = 4;

/// Collision order that entangles the four-atom box.
pub const BOX4_COLLISION_ORDER: [(usize, usize); 4] = [(4, 3), (4, 1), (3, 2), (2, 1)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("graph needs at least one vertex")]
    Empty,
    #[error("vertex {vertex} outside 1..={n}")]
    UnknownVertex { vertex: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("{n} qubits exceed the dense limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("pair ({0}, {1}) is not an edge of the graph")]
    NotAnEdge(usize, usize),
    #[error("kappa has {found} entries for {n} vertices")]
    KappaLength { found: usize, n: usize },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

pub type Result<T> = std::result::Result<T, ClusterError>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    kappa: Option<Vec<u8>>,
}

impl ClusterGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(ClusterError::Empty);
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            for v in [a, b] {
                if v == 0 || v > n {
                    return Err(ClusterError::UnknownVertex { vertex: v, n });
                }
            }
            if a == b {
                return Err(ClusterError::SelfLoop(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
            kappa: None,
        })
    }

    /// The four-cycle 1-2-3-4-1.
    pub fn box4() -> Self {
        Self::new(4, &[(1, 2), (2, 3), (3, 4), (1, 4)]).expect("valid")
    }

    pub fn linear(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Self::new(n, &edges)
    }

    pub fn with_kappa(mut self, kappa: Vec<u8>) -> Result<Self> {
        if kappa.len() != self.n {
            return Err(ClusterError::KappaLength {
                found: kappa.len(),
                n: self.n,
            });
        }
        self.kappa = Some(kappa.into_iter().map(|k| k & 1).collect());
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn kappa(&self) -> Option<&[u8]> {
        self.kappa.as_deref()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn neighbors(&self, a: usize) -> Result<Vec<usize>> {
        self.check_vertex(a)?;
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(u, v)| {
                if u == a {
                    Some(v)
                } else if v == a {
                    Some(u)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    fn check_vertex(&self, a: usize) -> Result<()> {
        if a == 0 || a > self.n {
            return Err(ClusterError::UnknownVertex { vertex: a, n: self.n });
        }
        Ok(())
    }

    /// `K^(a)` as a Pauli string.
    pub fn stabilizer(&self, a: usize) -> Result<PauliString> {
        let mut p = PauliString::identity(self.n);
        p.set_x(a);
        for b in self.neighbors(a)? {
            p.set_z(b);
        }
        Ok(p)
    }
}

/// A tensor product of `X`, `Z` and `XZ` factors, applied without building matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    n: usize,
    x_mask: usize,
    z_mask: usize,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, x_mask: 0, z_mask: 0 }
    }

    fn bit(&self, v: usize) -> usize {
        1 << (self.n - v)
    }

    pub fn set_x(&mut self, v: usize) {
        self.x_mask |= self.bit(v);
    }

    pub fn set_z(&mut self, v: usize) {
        self.z_mask |= self.bit(v);
    }

    /// Applies `X^x Z^z` factor-wise (Z acts first).
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let dim = psi.dim();
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (i, slot) in out.iter_mut().enumerate() {
            let src = i ^ self.x_mask;
            let sign = if (src & self.z_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            *slot = psi.amplitude(src) * sign;
        }
        StateVector::from_amplitudes(out)
    }
}

/// `K^(a) = σ_x^(a) ⊗_{b ∈ nghb(a)} σ_z^(b)` as a dense operator.
pub fn correlation_operator(graph: &ClusterGraph, a: usize) -> Result<Operator> {
    let nb = graph.neighbors(a)?;
    if graph.n > MAX_CLUSTER_QUBITS {
        return Err(ClusterError::TooLarge {
            n: graph.n,
            limit: MAX_CLUSTER_QUBITS,
        });
    }
    let (x, z, id) = (qubit::pauli_x(), qubit::pauli_z(), qubit::identity());
    let factors: Vec<&Operator> = (1..=graph.n)
        .map(|v| {
            if v == a {
                &x
            } else if nb.contains(&v) {
                &z
            } else {
                &id
            }
        })
        .collect();
    Ok(tensor_all(&factors)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    IdealCz,
    CollisionSequence,
    PaperExplicit,
}

#[derive(Clone, Debug)]
pub struct ClusterState {
    pub state: StateVector,
    pub graph: ClusterGraph,
    pub provenance: Provenance,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_CLUSTER_QUBITS {
        return Err(ClusterError::TooLarge {
            n,
            limit: MAX_CLUSTER_QUBITS,
        });
    }
    Ok(())
}

/// `|+⟩^⊗n`.
pub fn plus_state(n: usize) -> StateVector {
    let dim = 1usize << n;
    let amp = (dim as f64).sqrt().recip();
    StateVector::from_amplitudes(vec![C64::new(amp, 0.0); dim])
}

/// `|+⟩^⊗n` with a standard CZ on every edge.
pub fn build_cluster_ideal(graph: &ClusterGraph) -> Result<ClusterState> {
    check_size(graph.n)?;
    let n = graph.n;
    let dim = 1usize << n;
    let amp = (dim as f64).sqrt().recip();
    let amps = (0..dim)
        .map(|i| {
            let parity = graph
                .edges
                .iter()
                .filter(|&&(u, v)| (i >> (n - u)) & 1 == 1 && (i >> (n - v)) & 1 == 1)
                .count();
            C64::new(if parity % 2 == 0 { amp } else { -amp }, 0.0)
        })
        .collect();
    Ok(ClusterState {
        state: StateVector::from_amplitudes(amps),
        graph: graph.clone(),
        provenance: Provenance::IdealCz,
    })
}

/// Applies a 4×4 gate to qubits `(q1, q2)`; `q1` is the gate's first factor.
pub fn apply_two_qubit(psi: &StateVector, gate: &Operator, q1: usize, q2: usize, n: usize) -> Result<StateVector> {
    if gate.dim() != 4 {
        return Err(QuantumError::DimensionMismatch {
            expected: 4,
            found: gate.dim(),
        }
        .into());
    }
    for q in [q1, q2] {
        if q == 0 || q > n {
            return Err(ClusterError::UnknownVertex { vertex: q, n });
        }
    }
    if q1 == q2 {
        return Err(ClusterError::SelfLoop(q1));
    }
    let (b1, b2) = (1usize << (n - q1), 1usize << (n - q2));
    let mut out = psi.amplitudes().clone();
    let m = gate.matrix();
    for base in 0..psi.dim() {
        if base & (b1 | b2) != 0 {
            continue;
        }
        let idx = [base, base | b2, base | b1, base | b1 | b2];
        let v: [C64; 4] = idx.map(|i| psi.amplitude(i));
        for r in 0..4 {
            out[idx[r]] = (0..4).map(|c| m[(r, c)] * v[c]).sum();
        }
    }
    Ok(StateVector::from_vector(out))
}

/// Applies a 2×2 gate to qubit `q`.
pub fn apply_single_qubit(psi: &StateVector, gate: &Operator, q: usize, n: usize) -> Result<StateVector> {
    if gate.dim() != 2 {
        return Err(QuantumError::DimensionMismatch {
            expected: 2,
            found: gate.dim(),
        }
        .into());
    }
    if q == 0 || q > n {
        return Err(ClusterError::UnknownVertex { vertex: q, n });
    }
    let b = 1usize << (n - q);
    let m = gate.matrix();
    let mut out = psi.amplitudes().clone();
    for base in (0..psi.dim()).filter(|i| i & b == 0) {
        let (v0, v1) = (psi.amplitude(base), psi.amplitude(base | b));
        out[base] = m[(0, 0)] * v0 + m[(0, 1)] * v1;
        out[base | b] = m[(1, 0)] * v0 + m[(1, 1)] * v1;
    }
    Ok(StateVector::from_vector(out))
}

/// Starts from `|+⟩^⊗n` and applies `gate` to each pair of `order` in turn.
pub fn build_cluster_collision(graph: &ClusterGraph, gate: &Operator, order: &[(usize, usize)]) -> Result<ClusterState> {
    check_size(graph.n)?;
    let mut psi = plus_state(graph.n);
    for &(a, b) in order {
        if !graph.has_edge(a, b) {
            return Err(ClusterError::NotAnEdge(a, b));
        }
        psi = apply_two_qubit(&psi, gate, a, b, graph.n)?;
    }
    Ok(ClusterState {
        state: psi,
        graph: graph.clone(),
        provenance: Provenance::CollisionSequence,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexCheck {
    pub vertex: usize,
    /// `⟨ψ|K^(a)|ψ⟩`.
    pub expectation: f64,
    /// `min(‖K|ψ⟩ − |ψ⟩‖, ‖K|ψ⟩ + |ψ⟩‖)`.
    pub residual: f64,
    pub kappa: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterVerification {
    pub vertices: Vec<VertexCheck>,
    /// First vertex that is not an eigenvector, with its residual.
    pub violation: Option<(usize, f64)>,
}

impl ClusterVerification {
    pub fn kappa(&self) -> Option<Vec<u8>> {
        self.vertices.iter().map(|v| v.kappa).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.vertices.iter().map(|v| v.residual).fold(0.0, f64::max)
    }

    pub fn is_eigenstate(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn verify_cluster(state: &StateVector, graph: &ClusterGraph) -> Result<ClusterVerification> {
    if state.dim() != 1usize << graph.n {
        return Err(QuantumError::DimensionMismatch {
            expected: 1 << graph.n,
            found: state.dim(),
        }
        .into());
    }
    let mut vertices = Vec::with_capacity(graph.n);
    let mut violation = None;
    for a in 1..=graph.n {
        let k_psi = graph.stabilizer(a)?.apply(state);
        let plus = (&k_psi - state).norm();
        let minus = (&k_psi + state).norm();
        let residual = plus.min(minus);
        let kappa = (residual < EIGEN_TOL).then_some(if plus <= minus { 0 } else { 1 });
        if kappa.is_none() && violation.is_none() {
            violation = Some((a, residual));
        }
        vertices.push(VertexCheck {
            vertex: a,
            expectation: state.inner(&k_psi)?.re,
            residual,
            kappa,
        });
    }
    Ok(ClusterVerification { vertices, violation })
}

/// `½ (|0+0+⟩ + |0−1−⟩ + |1−0+⟩ + |1+1−⟩)` on qubits 1..4.
pub fn box4_paper_state() -> StateVector {
    let s = FRAC_1_SQRT_2;
    let zero = StateVector::from_real(&[1.0, 0.0]);
    let one = StateVector::from_real(&[0.0, 1.0]);
    let plus = StateVector::from_real(&[s, s]);
    let minus = StateVector::from_real(&[s, -s]);
    let term = |a: &StateVector, b: &StateVector, c: &StateVector, d: &StateVector| a.tensor(b).tensor(c).tensor(d);
    let terms = [
        term(&zero, &plus, &zero, &plus),
        term(&zero, &minus, &one, &minus),
        term(&one, &minus, &zero, &plus),
        term(&one, &plus, &one, &minus),
    ];
    let sum = terms.iter().skip(1).fold(terms[0].clone(), |acc, t| &acc + t);
    sum.scale(C64::new(0.5, 0.0))
}

pub fn box4_paper_cluster() -> ClusterState {
    ClusterState {
        state: box4_paper_state(),
        graph: ClusterGraph::box4(),
        provenance: Provenance::PaperExplicit,
    }
}

/// Per-qubit gate alphabet for the equivalence search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateSet {
    /// `{I, Z, X, H}`.
    PauliHadamard,
    /// All 24 single-qubit Clifford operations up to phase.
    Clifford,
}

impl GateSet {
    pub fn gates(&self) -> Vec<(String, Operator)> {
        match self {
            GateSet::PauliHadamard => vec![
                ("I".into(), qubit::identity()),
                ("Z".into(), qubit::pauli_z()),
                ("X".into(), qubit::pauli_x()),
                ("H".into(), qubit::hadamard()),
            ],
            GateSet::Clifford => single_qubit_cliffords(),
        }
    }
}

/// Breadth-first closure of `{H, S}` modulo global phase, shortest words first.
pub fn single_qubit_cliffords() -> Vec<(String, Operator)> {
    let generators = [("H", qubit::hadamard()), ("S", qubit::phase_s())];
    let same_up_to_phase = |a: &Operator, b: &Operator| (&a.adjoint() * b).trace().norm() > 2.0 - 1e-9;
    let mut found: Vec<(String, Operator)> = vec![("I".into(), qubit::identity())];
    let mut frontier = 0;
    while frontier < found.len() {
        let (word, op) = found[frontier].clone();
        for (name, g) in &generators {
            let next = g * &op;
            if !found.iter().any(|(_, f)| same_up_to_phase(f, &next)) {
                let label = if word == "I" { (*name).to_string() } else { format!("{name}{word}") };
                found.push((label, next));
            }
        }
        frontier += 1;
    }
    found
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalEquivalence {
    /// Gate name per qubit, qubit 1 first.
    pub gates: Vec<String>,
    /// Phase `φ` with `(⊗U_j)|s1⟩ ≈ φ|s2⟩`.
    pub phase_re: f64,
    pub phase_im: f64,
    pub overlap: f64,
}

/// Exhaustive search for `⊗_j U_j` with `|⟨s2|(⊗U_j)|s1⟩| > 1 − 1e-9`.
/// Assignments are scanned in lexicographic order (qubit 1 slowest) and the
/// first hit is returned.
pub fn local_equivalence(s1: &StateVector, s2: &StateVector, gate_set: GateSet) -> Option<LocalEquivalence> {
    if s1.dim() != s2.dim() || !s1.dim().is_power_of_two() {
        return None;
    }
    let n = s1.dim().trailing_zeros() as usize;
    if n == 0 || n > MAX_EQUIVALENCE_QUBITS {
        return None;
    }
    let gates = gate_set.gates();
    let g = gates.len();
    let total = g.pow(n as u32);
    let hit = (0..total).into_par_iter().find_first(|&code| {
        let overlap = assignment_overlap(s1, s2, &gates, code, n);
        overlap.norm() > 1.0 - OVERLAP_TOL
    })?;
    let ov = assignment_overlap(s1, s2, &gates, hit, n);
    let phase = ov / ov.norm();
    Some(LocalEquivalence {
        gates: decode_assignment(hit, g, n).into_iter().map(|k| gates[k].0.clone()).collect(),
        phase_re: phase.re,
        phase_im: phase.im,
        overlap: ov.norm(),
    })
}

fn decode_assignment(code: usize, g: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut c = code;
    for slot in out.iter_mut().rev() {
        *slot = c % g;
        c /= g;
    }
    out
}

fn assignment_overlap(s1: &StateVector, s2: &StateVector, gates: &[(String, Operator)], code: usize, n: usize) -> C64 {
    let mut psi = s1.clone();
    for (q, k) in decode_assignment(code, gates.len(), n).into_iter().enumerate() {
        if k != 0 || gates[0].0 != "I" {
            psi = apply_single_qubit(&psi, &gates[k].1, q + 1, n).expect("valid qubit");
        }
    }
    s2.inner(&psi).unwrap_or(C64::new(0.0, 0.0))
}

/// `Π_a (I + (−1)^{κ_a} K^(a)) / 2` applied to `psi`.
pub fn stabilizer_projection(psi: &StateVector, graph: &ClusterGraph, kappa: &[u8]) -> Result<StateVector> {
    let mut out = psi.clone();
    for a in 1..=graph.n {
        let k = graph.stabilizer(a)?.apply(&out);
        let sign = if kappa.get(a - 1).copied().unwrap_or(0) == 0 { ONE } else { -ONE };
        out = (&out + &k.scale(sign)).scale(C64::new(0.5, 0.0));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{controlled_phase, standard_cz, DEFAULT_K};

    #[test]
    fn graph_validation() {
        assert!(ClusterGraph::new(3, &[(1, 1)]).is_err());
        assert!(ClusterGraph::new(3, &[(1, 4)]).is_err());
        assert!(ClusterGraph::new(0, &[]).is_err());
        let g = ClusterGraph::box4();
        assert_eq!(g.edges(), &[(1, 2), (1, 4), (2, 3), (3, 4)]);
        assert_eq!(g.neighbors(1).unwrap(), vec![2, 4]);
        assert!(g.neighbors(5).is_err());
    }

    #[test]
    fn isolated_vertex_operator_is_sigma_x() {
        let g = ClusterGraph::new(1, &[]).unwrap();
        assert_eq!(correlation_operator(&g, 1).unwrap(), qubit::pauli_x());
    }

    #[test]
    fn box4_first_correlation_operator() {
        let g = ClusterGraph::box4();
        let k = correlation_operator(&g, 1).unwrap();
        let expected =
            tensor_all(&[&qubit::pauli_x(), &qubit::pauli_z(), &qubit::identity(), &qubit::pauli_z()]).unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn correlation_operators_commute_and_square_to_identity() {
        let graphs = [
            ClusterGraph::box4(),
            ClusterGraph::linear(4).unwrap(),
            ClusterGraph::new(4, &[(1, 2), (1, 3), (1, 4), (2, 3)]).unwrap(),
            ClusterGraph::new(3, &[(1, 2), (2, 3), (1, 3)]).unwrap(),
        ];
        for g in &graphs {
            let ks: Vec<Operator> = (1..=g.n()).map(|a| correlation_operator(g, a).unwrap()).collect();
            for (i, ka) in ks.iter().enumerate() {
                assert!(ka.is_hermitian());
                assert!((ka * ka).max_abs_diff(&Operator::identity(ka.dim())) < 1e-15);
                for kb in &ks[i + 1..] {
                    assert!(ka.commutator(kb).max_abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn pauli_string_matches_dense_operator() {
        let g = ClusterGraph::new(4, &[(1, 2), (1, 3), (3, 4)]).unwrap();
        let psi = StateVector::from_amplitudes((0..16).map(|i| C64::new(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect());
        for a in 1..=4 {
            let dense = correlation_operator(&g, a).unwrap().apply(&psi).unwrap();
            let fast = g.stabilizer(a).unwrap().apply(&psi);
            assert!(dense.max_abs_diff(&fast) < 1e-15);
        }
    }

    #[test]
    fn small_ideal_clusters() {
        let single = build_cluster_ideal(&ClusterGraph::new(1, &[]).unwrap()).unwrap();
        assert_eq!(verify_cluster(&single.state, &single.graph).unwrap().kappa(), Some(vec![0]));

        let pair = build_cluster_ideal(&ClusterGraph::new(2, &[(1, 2)]).unwrap()).unwrap();
        // (|0+⟩ + |1−⟩)/√2 = ½(1, 1, 1, −1)
        let expected = StateVector::from_real(&[0.5, 0.5, 0.5, -0.5]);
        assert!(pair.state.max_abs_diff(&expected) < 1e-15);
        assert_eq!(verify_cluster(&pair.state, &pair.graph).unwrap().kappa(), Some(vec![0, 0]));
    }

    #[test]
    fn ideal_box4_is_the_joint_eigenstate() {
        let c = build_cluster_ideal(&ClusterGraph::box4()).unwrap();
        let v = verify_cluster(&c.state, &c.graph).unwrap();
        assert_eq!(v.kappa(), Some(vec![0, 0, 0, 0]));
        assert!(v.max_residual() < 1e-12);
        for check in &v.vertices {
            assert!((check.expectation - 1.0).abs() < 1e-12);
        }
        let proj = stabilizer_projection(&c.state, &c.graph, &[0, 0, 0, 0]).unwrap();
        assert!(proj.max_abs_diff(&c.state) < 1e-9);
        // the projector onto κ = 0 has rank one: a generic input lands on the cluster
        let generic = StateVector::from_amplitudes((0..16).map(|i| C64::new(1.0 + i as f64, 0.3)).collect());
        let p = stabilizer_projection(&generic, &c.graph, &[0, 0, 0, 0]).unwrap().normalized().unwrap();
        assert!(p.inner(&c.state).unwrap().norm() > 1.0 - 1e-12);
    }

    #[test]
    fn product_state_fails_verification() {
        let v = verify_cluster(&StateVector::basis(16, 0), &ClusterGraph::box4()).unwrap();
        assert_eq!(v.violation.map(|(a, _)| a), Some(1));
        assert!(v.kappa().is_none());
    }

    #[test]
    fn z_flips_only_its_own_kappa() {
        for g in [ClusterGraph::box4(), ClusterGraph::linear(3).unwrap()] {
            let c = build_cluster_ideal(&g).unwrap();
            for v in 1..=g.n() {
                let flipped = apply_single_qubit(&c.state, &qubit::pauli_z(), v, g.n()).unwrap();
                let kappa = verify_cluster(&flipped, &g).unwrap().kappa().unwrap();
                for a in 1..=g.n() {
                    assert_eq!(kappa[a - 1], u8::from(a == v), "v = {v}, a = {a}");
                }
            }
        }
    }

    #[test]
    fn collision_route_with_cz_equals_ideal() {
        let g = ClusterGraph::box4();
        let ideal = build_cluster_ideal(&g).unwrap();
        let coll = build_cluster_collision(&g, &standard_cz(), &BOX4_COLLISION_ORDER).unwrap();
        assert!(coll.state.max_abs_diff(&ideal.state) < 1e-15);
        let empty = build_cluster_collision(&g, &standard_cz(), &[]).unwrap();
        assert!(empty.state.max_abs_diff(&plus_state(4)) < 1e-15);
        assert!(build_cluster_collision(&g, &standard_cz(), &[(1, 3)]).is_err());
    }

    #[test]
    fn collision_route_with_composite_gate() {
        let g = ClusterGraph::box4();
        let coll = build_cluster_collision(&g, &controlled_phase(DEFAULT_K), &BOX4_COLLISION_ORDER).unwrap();
        let v = verify_cluster(&coll.state, &g).unwrap();
        assert_eq!(v.kappa(), Some(vec![0, 0, 0, 0]));
        let ideal = build_cluster_ideal(&g).unwrap();
        let eq = local_equivalence(&coll.state, &ideal.state, GateSet::PauliHadamard).unwrap();
        assert_eq!(eq.gates, vec!["I"; 4]);

        let g2 = ClusterGraph::new(2, &[(1, 2)]).unwrap();
        let two = build_cluster_collision(&g2, &controlled_phase(DEFAULT_K), &[(1, 2)]).unwrap();
        let ideal2 = build_cluster_ideal(&g2).unwrap();
        assert!(local_equivalence(&two.state, &ideal2.state, GateSet::PauliHadamard).is_some());
    }

    #[test]
    fn explicit_state_amplitudes() {
        let s = box4_paper_state();
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!((s.amplitude(0) - C64::new(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn explicit_state_is_a_line_not_a_box() {
        let s = box4_paper_state();
        let line = build_cluster_ideal(&ClusterGraph::linear(4).unwrap()).unwrap();
        assert!(s.max_abs_diff(&line.state) < 1e-15);
        let v = verify_cluster(&s, &ClusterGraph::box4()).unwrap();
        assert_eq!(v.violation.map(|(a, _)| a), Some(1));
        assert_eq!(v.vertices[1].kappa, Some(0));
        assert_eq!(v.vertices[2].kappa, Some(0));
        assert!(v.vertices[0].expectation.abs() < 1e-12);
        assert!(v.vertices[3].expectation.abs() < 1e-12);
    }

    #[test]
    fn local_equivalence_search() {
        let ideal = build_cluster_ideal(&ClusterGraph::box4()).unwrap().state;
        let eq = local_equivalence(&ideal, &ideal, GateSet::PauliHadamard).unwrap();
        assert_eq!(eq.gates, vec!["I"; 4]);
        let z1 = apply_single_qubit(&ideal, &qubit::pauli_z(), 1, 4).unwrap();
        let eq = local_equivalence(&ideal, &z1, GateSet::PauliHadamard).unwrap();
        // Z on qubit 1 of the box equals X on qubit 4 times Z on qubit 3 up to the stabilizers;
        // the lexicographic scan meets that form first.
        assert_eq!(eq.gates, vec!["I", "I", "Z", "X"]);
        let table = GateSet::PauliHadamard.gates();
        let mut mapped = ideal.clone();
        for (q, name) in eq.gates.iter().enumerate() {
            let op = &table.iter().find(|(n, _)| n == name).unwrap().1;
            mapped = apply_single_qubit(&mapped, op, q + 1, 4).unwrap();
        }
        assert!(z1.inner(&mapped).unwrap().norm() > 1.0 - 1e-12);
        let line = build_cluster_ideal(&ClusterGraph::linear(2).unwrap()).unwrap().state;
        let z_line = apply_single_qubit(&line, &qubit::pauli_z(), 1, 2).unwrap();
        let eq = local_equivalence(&line, &z_line, GateSet::PauliHadamard).unwrap();
        assert_eq!(eq.gates, vec!["I", "X"]);
        let paper = box4_paper_state();
        assert!(local_equivalence(&paper, &ideal, GateSet::PauliHadamard).is_none());
    }

    #[test]
    fn clifford_group_has_24_elements() {
        let c = single_qubit_cliffords();
        assert_eq!(c.len(), 24);
        assert!(c.iter().all(|(_, op)| op.is_unitary()));
    }
}
