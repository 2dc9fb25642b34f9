//! Physical parameters, interaction potentials and the vibronic coupling
//! constants derived from them.
//!
//! Units follow ħ = 1. Unless stated otherwise energies are measured in units
//! of the trap frequency ω and lengths in units of the oscillator length x0,
//! so the defaults are ω = 1 and x0 = 1.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Drive, trap and geometry scales of a tweezer array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Trap frequency ω.
    pub omega: f64,
    /// Rabi frequency Ω of the ground-Rydberg drive.
    pub rabi: f64,
    /// Laser detuning Δ.
    pub detuning: f64,
    /// Oscillator length x0 = 1/√(mω).
    pub x0: f64,
    /// Equilibrium nearest-neighbour distance.
    pub d: f64,
    /// x0 / d. Kept in sync by every constructor.
    pub nu: f64,
}

impl PhysicalParams {
    pub fn new(omega: f64, x0: f64, d: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::InvalidParameter(format!("x0 must be positive, got {x0}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("d must be positive, got {d}")));
        }
        Ok(Self {
            omega,
            rabi: 0.0,
            detuning: 0.0,
            x0,
            d,
            nu: x0 / d,
        })
    }

    /// Builds the parameters from the atomic mass instead of x0.
    pub fn from_mass(omega: f64, mass: f64, d: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if !(omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        Self::new(omega, 1.0 / (mass * omega).sqrt(), d)
    }

    /// Builds the parameters from the ratio ν = x0/d.
    pub fn from_nu(omega: f64, x0: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        let mut p = Self::new(omega, x0, x0 / nu)?;
        p.nu = nu;
        Ok(p)
    }

    pub fn with_rabi(mut self, rabi: f64) -> Self {
        self.rabi = rabi;
        self
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    /// Atomic mass implied by ω and x0.
    pub fn mass(&self) -> f64 {
        1.0 / (self.omega * self.x0 * self.x0)
    }

    /// Coefficient of the isotropic trap in the quadratic form, ω/(2 x0²).
    pub fn trap_curvature(&self) -> f64 {
        0.5 * self.omega / (self.x0 * self.x0)
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::from_nu(1.0, 1.0, 0.1).expect("valid defaults")
    }
}

/// One term C / r^p of a power-law interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawTerm {
    pub c: f64,
    pub p: u32,
}

impl PowerLawTerm {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let p = self.p as f64;
        let v = self.c * r.powi(-(self.p as i32));
        (v, -p * v / r, p * (p + 1.0) * v / (r * r))
    }
}

/// Rydberg-Rydberg interaction model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialModel {
    /// V(r) = Σ C_i / r^{p_i}. A single term is the usual van der Waals or
    /// dipolar tail; two terms of opposite sign give a Lennard-Jones shape.
    PowerLaw { terms: Vec<PowerLawTerm> },
    /// Couplings pinned directly, detached from any radial form. `v_d` is
    /// the interaction energy at the equilibrium distance and only sets the
    /// facilitation detuning.
    Explicit {
        kappa: f64,
        xi: f64,
        nu: f64,
        #[serde(default = "default_v_d")]
        v_d: f64,
    },
}

fn default_v_d() -> f64 {
    1.0
}

impl PotentialModel {
    pub fn power_law(c: f64, p: u32) -> Self {
        Self::PowerLaw {
            terms: vec![PowerLawTerm { c, p }],
        }
    }

    /// C12 / r^12 − C6 / r^6.
    pub fn lennard_jones(c12: f64, c6: f64) -> Self {
        Self::PowerLaw {
            terms: vec![PowerLawTerm { c: c12, p: 12 }, PowerLawTerm { c: -c6, p: 6 }],
        }
    }

    pub fn explicit(kappa: f64, xi: f64, nu: f64) -> Self {
        Self::Explicit {
            kappa,
            xi,
            nu,
            v_d: default_v_d(),
        }
    }

    /// V(r), V′(r) and V″(r).
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::NonPositiveDistance(r));
        }
        match self {
            Self::PowerLaw { terms } => Ok(terms.iter().fold((0.0, 0.0, 0.0), |acc, t| {
                let (v, v1, v2) = t.eval(r);
                (acc.0 + v, acc.1 + v1, acc.2 + v2)
            })),
            Self::Explicit { .. } => Err(Error::UnsupportedVariant(
                "V(r) can only be evaluated for power-law models".into(),
            )),
        }
    }

    /// Like [`eval`](Self::eval) but also accepts the explicit model, which is
    /// defined only at the nearest-neighbour distance `params.d`.
    pub fn radial(&self, params: &PhysicalParams, r: f64) -> Result<(f64, f64, f64)> {
        match self {
            Self::PowerLaw { .. } => self.eval(r),
            Self::Explicit { kappa, xi, v_d, .. } => {
                if !(r > 0.0) {
                    return Err(Error::NonPositiveDistance(r));
                }
                if (r - params.d).abs() > 1e-9 * params.d {
                    return Err(Error::UnsupportedVariant(format!(
                        "explicit couplings only describe pairs at distance d = {}, found r = {r}",
                        params.d
                    )));
                }
                let x0 = params.x0;
                Ok((*v_d, SQRT_2 * kappa / x0, 2.0 * xi / (x0 * x0)))
            }
        }
    }
}

/// Vibronic coupling constants at the equilibrium distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    /// κ = x0 V′(d) / √2.
    pub kappa: f64,
    /// ξ = x0² V″(d) / 2.
    pub xi: f64,
    pub nu: f64,
    /// V(d).
    pub v_d: f64,
}

/// Evaluates κ, ξ and V(d) for the given model and parameters.
pub fn derive_couplings(model: &PotentialModel, params: &PhysicalParams) -> Result<Couplings> {
    match model {
        PotentialModel::PowerLaw { .. } => {
            let (v, v1, v2) = model.eval(params.d)?;
            Ok(Couplings {
                kappa: params.x0 * v1 / SQRT_2,
                xi: params.x0 * params.x0 * v2 / 2.0,
                nu: params.nu,
                v_d: v,
            })
        }
        PotentialModel::Explicit { kappa, xi, nu, v_d } => {
            if (nu - params.nu).abs() > 1e-12 * nu.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "explicit nu = {nu} disagrees with x0/d = {}",
                    params.nu
                )));
            }
            Ok(Couplings {
                kappa: *kappa,
                xi: *xi,
                nu: *nu,
                v_d: *v_d,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn power_law_values() {
        let m = PotentialModel::power_law(1.0, 6);
        assert_eq!(m.eval(1.0).unwrap(), (1.0, -6.0, 42.0));
        let (v, v1, v2) = m.eval(2.0).unwrap();
        assert_relative_eq!(v, 1.0 / 64.0, max_relative = 1e-15);
        assert_relative_eq!(v1, -6.0 / 128.0, max_relative = 1e-15);
        assert_relative_eq!(v2, 42.0 / 256.0, max_relative = 1e-15);
        assert_eq!(
            PotentialModel::power_law(-1.0, 3).eval(1.0).unwrap(),
            (-1.0, 3.0, -12.0)
        );
    }

    #[test]
    fn eval_errors() {
        let m = PotentialModel::power_law(1.0, 6);
        assert_eq!(m.eval(0.0), Err(Error::NonPositiveDistance(0.0)));
        assert!(m.eval(-1.0).is_err());
        assert!(matches!(
            PotentialModel::explicit(-1.0, 0.0, 0.1).eval(1.0),
            Err(Error::UnsupportedVariant(_))
        ));
    }

    #[test]
    fn couplings_from_power_law() {
        let params = PhysicalParams::new(1.0, 0.1, 1.0).unwrap();
        let c = derive_couplings(&PotentialModel::power_law(1.0, 6), &params).unwrap();
        assert_relative_eq!(c.kappa, 0.1 * -6.0 / SQRT_2, max_relative = 1e-14);
        assert_relative_eq!(c.kappa, -0.424264068711928, max_relative = 1e-12);
        assert_relative_eq!(c.xi, 0.21, max_relative = 1e-14);
        assert_relative_eq!(c.nu, 0.1);
        assert_eq!(c.v_d, 1.0);

        // Cross-check against finite differences of V.
        let m = PotentialModel::power_law(1.0, 6);
        let h = 1e-5;
        let f = |r: f64| m.eval(r).unwrap().0;
        let v1 = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
        let v2 = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
        assert_relative_eq!(c.kappa, 0.1 * v1 / SQRT_2, max_relative = 1e-8);
        assert_relative_eq!(c.xi, 0.01 * v2 / 2.0, max_relative = 1e-5);
    }

    #[test]
    fn explicit_pass_through() {
        let params = PhysicalParams::from_nu(1.0, 1.0, 0.1).unwrap();
        let c = derive_couplings(&PotentialModel::explicit(-1.0, 0.0, 0.1), &params).unwrap();
        assert_eq!((c.kappa, c.xi, c.nu), (-1.0, 0.0, 0.1));
        let wrong = PhysicalParams::from_nu(1.0, 1.0, 0.2).unwrap();
        assert!(derive_couplings(&PotentialModel::explicit(-1.0, 0.0, 0.1), &wrong).is_err());
    }

    #[test]
    fn stationary_point_has_no_gradient_coupling() {
        // LJ minimum of r^-12 - 2 r^-6 sits at r = 1.
        let lj = PotentialModel::lennard_jones(1.0, 2.0);
        let params = PhysicalParams::new(1.0, 0.1, 1.0).unwrap();
        let c = derive_couplings(&lj, &params).unwrap();
        assert!(c.kappa.abs() < 1e-14);
        assert_relative_eq!(c.v_d, -1.0);
        assert!(c.xi > 0.0);
    }

    #[test]
    fn explicit_radial_form_only_at_d() {
        let params = PhysicalParams::from_nu(1.0, 1.0, 0.1).unwrap();
        let m = PotentialModel::explicit(-1.0, 0.3, 0.1);
        let (v, v1, v2) = m.radial(&params, params.d).unwrap();
        assert_eq!(v, 1.0);
        assert_relative_eq!(v1, -SQRT_2);
        assert_relative_eq!(v2, 0.6);
        assert!(m.radial(&params, 2.0 * params.d).is_err());
    }

    #[test]
    fn constructors_keep_nu() {
        let p = PhysicalParams::from_mass(2.0, 3.0, 5.0).unwrap();
        assert_relative_eq!(p.x0, 1.0 / 6f64.sqrt());
        assert_relative_eq!(p.nu, p.x0 / p.d);
        assert_relative_eq!(p.mass(), 3.0, max_relative = 1e-14);
        let q = PhysicalParams::from_nu(1.0, 0.3, 0.1).unwrap();
        assert_relative_eq!(q.d, 3.0, max_relative = 1e-14);
        let d = PhysicalParams::default();
        assert_eq!((d.omega, d.x0), (1.0, 1.0));
        assert!(PhysicalParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn analytic_derivatives_match_finite_differences(
            c in prop_oneof![-10.0..-0.1f64, 0.1..10.0f64],
            p in 1u32..13,
            r in 0.5..5.0f64,
        ) {
            let m = PotentialModel::power_law(c, p);
            let h = 1e-5 * r;
            let (_, v1, v2) = m.eval(r).unwrap();
            let f = |x: f64| m.eval(x).unwrap();
            let fd1 = (f(r + h).0 - f(r - h).0) / (2.0 * h);
            // Second derivative from central differences of V′ keeps
            // cancellation under control.
            let fd2 = (f(r + h).1 - f(r - h).1) / (2.0 * h);
            prop_assert!((v1 - fd1).abs() <= 1e-6 * v1.abs());
            prop_assert!((v2 - fd2).abs() <= 1e-6 * v2.abs());
        }

        #[test]
        fn nu_is_ratio(x0 in 0.01..10.0f64, d in 0.01..100.0f64) {
            let p = PhysicalParams::new(1.0, x0, d).unwrap();
            prop_assert_eq!(p.nu, x0 / d);
        }
    }
}
