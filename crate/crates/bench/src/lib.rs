//! Fixtures shared by the solver benchmarks.

use vibronic_core::{Molecule, PhysicalParams, PotentialModel, Preset};

/// Preset molecule with explicit couplings at ν = 0.1 and ω = x0 = 1.
pub fn molecule(preset: Preset, kappa: f64, xi: f64, rabi: f64) -> Molecule {
    let params = PhysicalParams::default().with_rabi(rabi);
    Molecule::preset(preset, &PotentialModel::explicit(kappa, xi, params.nu), params).expect("valid benchmark molecule")
}
