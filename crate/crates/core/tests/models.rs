use vibronic_core::fock::{self, build_fock_matrix, FockOptions, Frame};
use vibronic_core::vibronic::dumbbell_hamiltonian;
use vibronic_core::{analytic, Molecule, PhysicalParams, PotentialModel, Preset};

fn params(rabi: f64) -> PhysicalParams {
    PhysicalParams::from_nu(1.0, 1.0, 0.1).unwrap().with_rabi(rabi)
}

#[test]
fn dumbbell_manifold_matches_symmetric_two_state_model() {
    let p = params(0.3);
    let m = Molecule::preset(Preset::Dumbbell, &PotentialModel::explicit(0.4, -0.1, p.nu), p).unwrap();
    assert_eq!(m.graph.len(), 3);
    let reduced = dumbbell_hamiltonian(&m.params, &m.couplings);
    let opts = FockOptions::with_cutoff(48);
    let full = fock::solve_model(&m.model(), &opts, 1e-12).unwrap().1.energy;
    let two = fock::solve_model(&reduced, &opts, 1e-12).unwrap().1.energy;
    assert!((full - two).abs() < 1e-10, "{full} vs {two}");
}

#[test]
fn fock_operator_is_symmetric_in_both_frames() {
    let p = params(0.4);
    let m = Molecule::preset(Preset::Triangle, &PotentialModel::explicit(-0.6, -0.05, p.nu), p).unwrap();
    for frame in [Frame::Standard, Frame::Displaced] {
        let op = build_fock_matrix(
            &m.model(),
            &FockOptions {
                cutoff: 5,
                frame,
                max_dim: 1 << 20,
            },
        )
        .unwrap();
        assert!(op.hermiticity_residual() < 1e-12, "{frame:?}");
        let dense = op.to_dense();
        assert!((&dense - dense.transpose()).amax() < 1e-12);
    }
}

#[test]
fn frames_agree_once_converged() {
    let p = params(0.2);
    let m = Molecule::preset(Preset::Dumbbell, &PotentialModel::explicit(0.3, 0.05, p.nu), p).unwrap();
    let std = fock::converge_model(&m.model(), Frame::Standard, 1e-10, 256, 1 << 20).unwrap();
    let disp = fock::converge_model(&m.model(), Frame::Displaced, 1e-10, 256, 1 << 20).unwrap();
    assert!(std.converged && disp.converged);
    assert!((std.energy - disp.energy).abs() < 1e-8);
    assert!(disp.cutoff <= std.cutoff);
}

#[test]
fn tetrahedron_zero_rabi_ground_state_is_closed_form() {
    let p = params(0.0);
    let (kappa, xi) = (-0.8, 0.05);
    let m = Molecule::preset(Preset::Tetrahedron, &PotentialModel::explicit(kappa, xi, p.nu), p).unwrap();
    let (e, node) = fock::decoupled_ground_energy(&m.model(), 256, Frame::Displaced).unwrap();
    let expected = analytic::tetrahedron_ground_energy(kappa, xi, 1.0, p.nu).unwrap();
    assert!((e - expected).abs() < 1e-9, "{e} vs {expected}");
    assert_eq!(m.graph.nodes[node].excitations(), 2);
}

#[test]
fn oversized_problems_are_refused() {
    let p = params(0.1);
    let m = Molecule::preset(Preset::Tetrahedron, &PotentialModel::explicit(-0.6, 0.0, p.nu), p).unwrap();
    let opts = FockOptions {
        cutoff: 32,
        frame: Frame::Displaced,
        max_dim: 1_000_000,
    };
    assert!(build_fock_matrix(&m.model(), &opts).is_err());
}
