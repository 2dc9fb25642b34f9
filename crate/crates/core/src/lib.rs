//! Vibronic simulation of Rydberg atoms held in optical tweezers.
//!
//! The pipeline builds the resonant electronic manifold of a small array,
//! expands the interaction to second order in atomic displacement, reduces
//! the motion to the modes that actually couple, and then solves the
//! resulting vibronic Hamiltonian either exactly in a truncated Fock space,
//! analytically in the solvable limits, or in the Born–Oppenheimer picture.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bopes;
pub mod eigen;
pub mod error;
pub mod fock;
pub mod graph;
pub mod params;
pub mod vibronic;

pub use error::{Error, Result};
pub use fock::{FockOperator, FockOptions, Frame, SolveReport};
pub use graph::{
    build_resonant_manifold, graph_classify, DetuningRule, ElectronicConfig, Geometry, Preset, ResonantGraph, Topology,
    TopologyKind,
};
pub use params::{derive_couplings, Couplings, PhysicalParams, PotentialModel, PowerLawTerm};
pub use vibronic::{
    build_molecule, ModeBasis, ModeSelection, Molecule, MotionPolicy, QuadraticForm, QuadraticVibronic, VibronicModel,
};

/// Relative energy window for membership in the resonant manifold.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;
