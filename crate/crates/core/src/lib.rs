//! Simulation toolkit for one-way quantum computing with flying Rydberg atoms
//! in thermal microwave cavities.
//!
//! The crate covers the two-atom driven cavity interaction and its effective
//! controlled-phase gate, cluster-state generation by a chain of atom
//! collisions, the kinematic schedule that makes those collisions happen, and
//! the four-element Grover search run by measuring the resulting cluster.

pub mod cli;
pub mod cluster;
pub mod dynamics;
pub mod gate;
pub mod grover;
pub mod quantum;
pub mod schedule;

pub use quantum::{DensityMatrix, HilbertSpec, Operator, StateVector};
