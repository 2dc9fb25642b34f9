//! Closed-form results at zero Rabi frequency.
//!
//! Couplings follow the ladder-operator convention of the vibronic module:
//! a parallel relative mode sees `ω b†b + √2κ(b + b†) + ξ(b + b†)²`, a
//! perpendicular mode of the tetrahedron sees `ξ_eff = νκ/√2`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};

/// Squeezing transformation diagonalising `ω c†c + ξ_eff (c + c†)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovSolution {
    pub w: f64,
    pub omega_tilde: f64,
    pub exists: bool,
}

/// Solves for the squeeze parameter with φ = ω/(2ξ_eff). Beyond the
/// critical curvature ξ_eff ≤ −ω/4 no real transformation exists and `w`,
/// `omega_tilde` are NaN.
pub fn bogoliubov_w(omega: f64, xi_eff: f64) -> BogoliubovSolution {
    if !(omega > 0.0) || !xi_eff.is_finite() || xi_eff <= -omega / 4.0 {
        return BogoliubovSolution {
            w: f64::NAN,
            omega_tilde: f64::NAN,
            exists: false,
        };
    }
    if xi_eff == 0.0 {
        return BogoliubovSolution {
            w: 0.0,
            omega_tilde: omega,
            exists: true,
        };
    }
    let phi = omega / (2.0 * xi_eff);
    let root = ((1.0 + phi).powi(2) - 1.0).sqrt();
    // Reciprocal of the other root; avoids cancellation for small ξ_eff.
    let w = 1.0 / (1.0 + phi + phi.signum() * root);
    BogoliubovSolution {
        w,
        omega_tilde: omega * (1.0 + w) / (1.0 - w),
        exists: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    pub xi_c: f64,
    pub kappa_c: f64,
}

/// ξ_c = −ω/4 and κ_c = −ω/(2√2ν).
pub fn critical_points(omega: f64, nu: f64) -> Result<CriticalPoints> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
    }
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    Ok(CriticalPoints {
        xi_c: -omega / 4.0,
        kappa_c: -omega / (2.0 * SQRT_2 * nu),
    })
}

/// Which effective curvature a relative mode feels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Parallel,
    Perpendicular,
}

pub fn xi_eff(kind: ModeKind, kappa: f64, xi: f64, nu: f64) -> f64 {
    match kind {
        ModeKind::Parallel => xi,
        ModeKind::Perpendicular => nu * kappa * FRAC_1_SQRT_2,
    }
}

/// `1 − ratio` with the stability checks shared by all closed forms.
fn stiffness(name: &str, ratio: f64) -> Result<f64> {
    if ratio == 1.0 {
        Err(Error::CriticalBoundary(format!("{name} = 1")))
    } else if ratio > 1.0 || ratio.is_nan() {
        Err(Error::Unstable(format!("{name} = {ratio} exceeds 1")))
    } else {
        Ok(1.0 - ratio)
    }
}

fn xi_bar(xi: f64, omega: f64) -> Result<f64> {
    Ok(xi / critical_points(omega, 1.0)?.xi_c)
}

fn kappa_bar(kappa: f64, omega: f64, nu: f64) -> Result<f64> {
    Ok(kappa / critical_points(omega, nu)?.kappa_c)
}

/// Dumbbell ground energy of the doubly excited block in units of ω.
pub fn epsilon2(kappa: f64, xi: f64, omega: f64) -> Result<f64> {
    let s = stiffness("xi/xi_c", xi_bar(xi, omega)?)?;
    Ok(-(2.0 * kappa * kappa / (omega * omega)) / s + 0.5 * (s.sqrt() - 1.0))
}

/// Tetrahedron ground energy of a doubly excited block in units of ω.
pub fn epsilon4(kappa: f64, xi: f64, omega: f64, nu: f64) -> Result<f64> {
    let perp = stiffness("kappa/kappa_c", kappa_bar(kappa, omega, nu)?)?;
    Ok(epsilon2(kappa, xi, omega)? + perp.sqrt() - 1.0)
}

/// min{ωε₂, 0}.
pub fn dumbbell_ground_energy(kappa: f64, xi: f64, omega: f64) -> Result<f64> {
    Ok((omega * epsilon2(kappa, xi, omega)?).min(0.0))
}

/// min{ωε₄, 0}.
pub fn tetrahedron_ground_energy(kappa: f64, xi: f64, omega: f64, nu: f64) -> Result<f64> {
    Ok((omega * epsilon4(kappa, xi, omega, nu)?).min(0.0))
}

/// Gaussian widths (w̄₊, w̄₋) = (2(1+w)/(1−w), 2(1−w)/(1+w)).
pub fn wigner_widths(w: f64) -> Result<(f64, f64)> {
    if !(w.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("|w| must be below 1, got {w}")));
    }
    Ok((2.0 * (1.0 + w) / (1.0 - w), 2.0 * (1.0 - w) / (1.0 + w)))
}

/// Wigner function of the squeezed vacuum at α = re + i·im.
pub fn wigner(w: f64, re: f64, im: f64) -> Result<f64> {
    let (wp, wm) = wigner_widths(w)?;
    Ok(2.0 / PI * (-wp * re * re - wm * im * im).exp())
}

/// Wigner function of the squeezed vacuum displaced to `centre`.
pub fn wigner_displaced(w: f64, centre: (f64, f64), re: f64, im: f64) -> Result<f64> {
    wigner(w, re - centre.0, im - centre.1)
}

/// Coherent amplitude ⟨c⟩ of the parallel mode in the doubly excited state.
pub fn parallel_displacement(kappa: f64, xi: f64, omega: f64) -> Result<f64> {
    let s = stiffness("xi/xi_c", xi_bar(xi, omega)?)?;
    Ok(-SQRT_2 * kappa / (omega * s))
}

/// Quantum ground energy minus the Born–Oppenheimer minimum of the triangle
/// at zero Rabi frequency: (ω/2)[√(1−ξ̄) + √(1−κ̄) − 2].
pub fn quantum_correction(kappa: f64, xi: f64, omega: f64, nu: f64) -> Result<f64> {
    let par = stiffness("xi/xi_c", xi_bar(xi, omega)?)?;
    let perp = stiffness("kappa/kappa_c", kappa_bar(kappa, omega, nu)?)?;
    Ok(0.5 * omega * (par.sqrt() + perp.sqrt() - 2.0))
}

/// Triangle ground energy at zero Rabi frequency: a doubly excited node
/// carries one parallel and one perpendicular mode, singly excited nodes sit
/// at zero.
pub fn triangle_ground_energy(kappa: f64, xi: f64, omega: f64, nu: f64) -> Result<f64> {
    Ok((classical_minimum(kappa, xi, omega)? + quantum_correction(kappa, xi, omega, nu)?).min(0.0))
}

/// Classical minimum of a doubly excited node, −(2κ²/ω)/(1−ξ̄).
pub fn classical_minimum(kappa: f64, xi: f64, omega: f64) -> Result<f64> {
    let s = stiffness("xi/xi_c", xi_bar(xi, omega)?)?;
    Ok(-(2.0 * kappa * kappa / omega) / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    #[test]
    fn bogoliubov_examples() {
        assert_eq!(bogoliubov_w(1.0, 0.0).w, 0.0);
        assert!(bogoliubov_w(1.0, 1e-300).w.abs() < 1e-299);
        let s = bogoliubov_w(1.0, 0.25);
        assert!(s.exists);
        assert_relative_eq!(s.w, 3.0 - 8.0f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(s.omega_tilde, SQRT_2, epsilon = 1e-14);
        assert!(!bogoliubov_w(1.0, -0.3).exists);
        assert!(!bogoliubov_w(1.0, -0.25).exists);
    }

    #[test]
    fn frequency_matches_level_spacing() {
        // Oracle: dense ωn + ξ(c+c†)² in a large Fock space.
        let m = 200;
        let mut c = DMatrix::zeros(m, m);
        for n in 1..m {
            c[(n - 1, n)] = (n as f64).sqrt();
        }
        let x = &c + c.transpose();
        let h = DMatrix::from_fn(m, m, |i, j| if i == j { i as f64 } else { 0.0 }) + &x * &x * 0.25;
        let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert_relative_eq!(e[1] - e[0], bogoliubov_w(1.0, 0.25).omega_tilde, epsilon = 1e-10);
        // Vacuum shift (ω̃ − ω)/2.
        assert_relative_eq!(e[0], 0.5 * (SQRT_2 - 1.0), epsilon = 1e-10);
    }

    #[test]
    fn critical_point_examples() {
        let c = critical_points(1.0, 0.1).unwrap();
        assert_eq!(c.xi_c, -0.25);
        assert_relative_eq!(c.kappa_c, -3.5355339059327373, epsilon = 1e-14);
        let far = critical_points(1.0, 1e12).unwrap().kappa_c;
        assert!(far < 0.0 && far > -1e-12);
        assert!(critical_points(1.0, 0.0).is_err());
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon2(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(epsilon2(0.5, 0.0, 1.0).unwrap(), -0.5, epsilon = 1e-15);
        assert_relative_eq!(
            epsilon2(0.5, 0.25, 1.0).unwrap(),
            -0.25 + FRAC_1_SQRT_2 - 0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(epsilon2(0.5, 0.25, 1.0).unwrap(), -0.04289, epsilon = 1e-5);
        assert_eq!(epsilon4(0.0, 0.0, 1.0, 0.1).unwrap(), 0.0);
        let kb: f64 = 0.2 * SQRT_2;
        assert_relative_eq!(
            epsilon4(-1.0, 0.0, 1.0, 0.1).unwrap(),
            -2.0 + 0.5 + (1.0 - kb).sqrt() - 1.5,
            epsilon = 1e-14
        );
        assert_relative_eq!(epsilon4(-1.0, 0.0, 1.0, 0.1).unwrap(), -2.15314, epsilon = 1e-5);
        let kc = critical_points(1.0, 0.1).unwrap().kappa_c;
        assert!(matches!(epsilon4(kc, 0.0, 1.0, 0.1), Err(Error::CriticalBoundary(_))));
        assert!(matches!(epsilon4(1.1 * kc, 0.0, 1.0, 0.1), Err(Error::Unstable(_))));
        assert!(matches!(epsilon2(0.0, -0.25, 1.0), Err(Error::CriticalBoundary(_))));
        assert!(matches!(epsilon2(0.0, -0.3, 1.0), Err(Error::Unstable(_))));
        assert_eq!(dumbbell_ground_energy(0.0, 0.2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn wigner_examples() {
        assert_relative_eq!(wigner(0.0, 0.0, 0.0).unwrap(), 2.0 / PI, epsilon = 1e-15);
        let (wp, wm) = wigner_widths(-1.0 / 3.0).unwrap();
        assert_relative_eq!(wp, 1.0, epsilon = 1e-15);
        assert_relative_eq!(wm, 4.0, epsilon = 1e-15);
        assert!(wigner(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn wigner_normalization_by_quadrature() {
        for w in [-0.9, -0.5, 0.0, 0.3, 0.8] {
            let (wp, wm) = wigner_widths(w).unwrap();
            let half = 8.0 / wp.min(wm).sqrt();
            let n = 800;
            let h = 2.0 * half / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let re = -half + (i as f64 + 0.5) * h;
                    let im = -half + (j as f64 + 0.5) * h;
                    total += wigner(w, re, im).unwrap();
                }
            }
            assert_relative_eq!(total * h * h, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn quantum_correction_examples() {
        assert_eq!(quantum_correction(0.0, 0.0, 1.0, 0.1).unwrap(), 0.0);
        let kc = critical_points(1.0, 0.1).unwrap().kappa_c;
        assert_relative_eq!(
            quantum_correction(-kc, 0.25, 1.0, 0.1).unwrap(),
            SQRT_2 - 1.0,
            epsilon = 1e-14
        );
    }

    proptest! {
        #[test]
        fn widths_preserve_area(w in -0.999f64..0.999) {
            let (wp, wm) = wigner_widths(w).unwrap();
            prop_assert!((wp * wm - 4.0).abs() < 1e-12);
        }

        #[test]
        fn transformed_frequency(omega in 0.1f64..10.0, t in -0.999f64..5.0) {
            let xi = t * omega / 4.0;
            let s = bogoliubov_w(omega, xi);
            prop_assert!(s.exists && s.w.abs() < 1.0);
            let expected = omega * (1.0 + 4.0 * xi / omega).sqrt();
            prop_assert!((s.omega_tilde - expected).abs() <= 1e-12 * expected.max(1e-3 * omega));
        }

        #[test]
        fn no_solution_beyond_criticality(omega in 0.1f64..10.0, t in 1.0f64..10.0) {
            prop_assert!(!bogoliubov_w(omega, -t * omega / 4.0).exists);
        }

        #[test]
        fn epsilon2_without_curvature(kappa in -5.0f64..5.0, omega in 0.1f64..10.0) {
            prop_assert_eq!(epsilon2(kappa, 0.0, omega).unwrap(), -2.0 * kappa * kappa / (omega * omega));
        }

        #[test]
        fn epsilon4_minus_epsilon2(kappa in -3.0f64..3.0, xb in -3.0f64..0.99, nu in 0.05f64..0.5) {
            let omega = 1.0;
            let xi = -xb / 4.0;
            let kb = kappa / critical_points(omega, nu).unwrap().kappa_c;
            prop_assume!(kb < 0.999);
            let diff = epsilon4(kappa, xi, omega, nu).unwrap() - epsilon2(kappa, xi, omega).unwrap();
            prop_assert!((diff - ((1.0 - kb).sqrt() - 1.0)).abs() < 1e-12);
        }

        #[test]
        fn perpendicular_squeezing_grows(nu in 0.05f64..0.5, a in 0.0f64..0.99, b in 0.0f64..0.99) {
            prop_assume!((a - b).abs() > 1e-6);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let kc = critical_points(1.0, nu).unwrap().kappa_c;
            let width = |frac: f64| {
                let s = bogoliubov_w(1.0, xi_eff(ModeKind::Perpendicular, frac * kc, 0.0, nu));
                wigner_widths(s.w).unwrap().1
            };
            prop_assert!(width(hi) > width(lo));
        }
    }
}
