//! Second-order expansion of the pair interaction around the equilibrium
//! positions, per-state quadratic vibrational Hamiltonians and their
//! reduction to the coupled collective modes.
//!
//! A vibrational Hamiltonian is stored in position form as
//!
//! ```text
//! E(x) = constant + linear · x + xᵀ Q x
//! ```
//!
//! over displacement coordinates `x` (length units). `Q` already contains the
//! isotropic trap ω/(2x0²)·𝟙. Quantisation maps each orthonormal coordinate to
//! `x = x0 (c + c†)/√2` with the normal-ordered trap `ω c†c`, so zero-point
//! constants of the bare trap are dropped.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::graph::{ElectronicConfig, Geometry, Preset, ResonantGraph};
use crate::params::{Couplings, PhysicalParams, PotentialModel};

/// Gram–Schmidt residual below which a generator is considered dependent.
const GS_DROP: f64 = 1e-10;

/// Gradient and Hessian pieces of V around r0 for one atom pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCoefficients {
    /// V′(r0) r̂ᵀ.
    pub g: Vector3<f64>,
    /// V″(r0) r̂ ⊗ r̂ᵀ.
    pub ha: Matrix3<f64>,
    /// V′(r0)/r0 (1 − r̂ ⊗ r̂ᵀ).
    pub hb: Matrix3<f64>,
}

impl ExpansionCoefficients {
    pub fn hessian(&self) -> Matrix3<f64> {
        self.ha + self.hb
    }
}

pub fn expansion_coeffs(
    pair: (usize, usize),
    geometry: &Geometry,
    model: &PotentialModel,
    params: &PhysicalParams,
) -> Result<ExpansionCoefficients> {
    let (k, l) = pair;
    if k == l {
        return Err(Error::InvalidParameter(format!(
            "pair ({k}, {l}) needs two distinct atoms"
        )));
    }
    if let PotentialModel::Explicit { .. } = model {
        if geometry.preset_kind().is_none() {
            return Err(Error::UnsupportedVariant(
                "explicit couplings require a preset geometry".into(),
            ));
        }
    }
    let r0 = geometry.distance(k, l);
    if !(r0 > 0.0) {
        return Err(Error::DegenerateGeometry(k, l));
    }
    let (_, v1, v2) = model.radial(params, r0)?;
    let unit = Vector3::from(geometry.separation(k, l)) / r0;
    let proj = unit * unit.transpose();
    Ok(ExpansionCoefficients {
        g: unit * v1,
        ha: proj * v2,
        hb: (Matrix3::identity() - proj) * (v1 / r0),
    })
}

/// Which Cartesian directions each atom may move along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionPolicy {
    /// x only.
    Axial,
    /// x and y.
    Planar,
    Full,
}

impl MotionPolicy {
    /// Default per preset: axial dumbbell, planar triangle, 3D otherwise.
    pub fn for_geometry(geometry: &Geometry) -> Self {
        match geometry.preset_kind() {
            Some(Preset::Dumbbell) => Self::Axial,
            Some(Preset::Triangle) => Self::Planar,
            _ => Self::Full,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Self::Axial => 1,
            Self::Planar => 2,
            Self::Full => 3,
        }
    }
}

/// `constant + linear·x + xᵀ quadratic x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub constant: f64,
    pub linear: DVector<f64>,
    pub quadratic: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn trap_only(dim: usize, trap: f64) -> Self {
        Self {
            constant: 0.0,
            linear: DVector::zeros(dim),
            quadratic: DMatrix::identity(dim, dim) * trap,
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        self.constant + self.linear.dot(x) + x.dot(&(&self.quadratic * x))
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear + (&self.quadratic * x) * 2.0
    }

    /// Non-trap part of the quadratic matrix.
    pub fn coupling_matrix(&self, trap: f64) -> DMatrix<f64> {
        &self.quadratic - DMatrix::identity(self.dim(), self.dim()) * trap
    }

    /// Whether the form is bounded below (Q positive definite).
    pub fn is_stable(&self) -> bool {
        self.dim() == 0 || self.quadratic.clone().cholesky().is_some()
    }

    /// Minimiser −Q⁻¹ l / 2, when the form is bounded below.
    pub fn stationary_point(&self) -> Option<DVector<f64>> {
        if self.dim() == 0 {
            return Some(DVector::zeros(0));
        }
        let chol = self.quadratic.clone().cholesky()?;
        Some(chol.solve(&self.linear) * -0.5)
    }

    /// The same function expressed in coordinates relative to `origin`.
    pub fn shifted(&self, origin: &DVector<f64>) -> Self {
        Self {
            constant: self.energy(origin),
            linear: self.gradient(origin),
            quadratic: self.quadratic.clone(),
        }
    }

    /// Rewrites the form in the coordinates `y = basisᵀ x`.
    pub fn project(&self, basis: &DMatrix<f64>, trap: f64) -> Self {
        let k = basis.ncols();
        let coupling = self.coupling_matrix(trap);
        Self {
            constant: self.constant,
            linear: basis.transpose() * &self.linear,
            quadratic: basis.transpose() * coupling * basis + DMatrix::identity(k, k) * trap,
        }
    }
}

/// Vibrational Hamiltonian of one electronic node.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVibronic {
    pub state: ElectronicConfig,
    pub form: QuadraticForm,
}

/// Sums the pair expansions over all excited pairs of `state`.
///
/// `constant` is the residual of the diagonal energy against
/// `manifold_energy`, zero for an exactly degenerate manifold.
pub fn assemble_state_hamiltonian(
    state: &ElectronicConfig,
    geometry: &Geometry,
    model: &PotentialModel,
    params: &PhysicalParams,
    policy: MotionPolicy,
    manifold_energy: f64,
) -> Result<QuadraticVibronic> {
    let dims = policy.dims();
    let n = geometry.len();
    if state.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.len(),
        });
    }
    let mut form = QuadraticForm::trap_only(n * dims, params.trap_curvature());
    form.constant = crate::graph::diagonal_energy(state, geometry, params.detuning, model, params)? - manifold_energy;
    for (k, l) in state.excited_pairs() {
        let coeffs = expansion_coeffs((k, l), geometry, model, params)?;
        let h = coeffs.hessian();
        for a in 0..dims {
            form.linear[k * dims + a] += coeffs.g[a];
            form.linear[l * dims + a] -= coeffs.g[a];
            for b in 0..dims {
                let half = 0.5 * h[(a, b)];
                form.quadratic[(k * dims + a, k * dims + b)] += half;
                form.quadratic[(l * dims + a, l * dims + b)] += half;
                form.quadratic[(k * dims + a, l * dims + b)] -= half;
                form.quadratic[(l * dims + a, k * dims + b)] -= half;
            }
        }
    }
    Ok(QuadraticVibronic {
        state: state.clone(),
        form,
    })
}

/// Assembles every node of `graph`. The node energies are measured from the
/// manifold energy, which requires `params.detuning` to be the detuning the
/// graph was built with.
pub fn assemble_manifold(
    graph: &ResonantGraph,
    geometry: &Geometry,
    model: &PotentialModel,
    params: &PhysicalParams,
    policy: MotionPolicy,
) -> Result<Vec<QuadraticVibronic>> {
    graph
        .nodes
        .par_iter()
        .map(|s| assemble_state_hamiltonian(s, geometry, model, params, policy, graph.manifold_energy))
        .collect()
}

/// Orthonormal collective displacement directions, stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    pub vectors: DMatrix<f64>,
}

impl ModeBasis {
    pub fn identity(coords: usize) -> Self {
        Self {
            vectors: DMatrix::identity(coords, coords),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn coords(&self) -> usize {
        self.vectors.nrows()
    }

    /// Displacement-space vector of the reduced coordinates `q`.
    pub fn embed(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.vectors * q
    }
}

/// Builds the coupled-mode basis and rewrites every form in it.
///
/// Generators are the linear vectors (by node), followed by the eigenvectors
/// of the non-trap quadratic part with non-zero eigenvalue (by node, then by
/// descending |eigenvalue|), orthonormalised in that order.
pub fn reduce_modes(forms: &[QuadraticVibronic], trap: f64) -> Result<(ModeBasis, Vec<QuadraticVibronic>)> {
    let first = forms
        .first()
        .ok_or_else(|| Error::InvalidParameter("no forms to reduce".into()))?;
    let coords = first.form.dim();
    if let Some(bad) = forms.iter().find(|f| f.form.dim() != coords) {
        return Err(Error::DimensionMismatch {
            expected: coords,
            got: bad.form.dim(),
        });
    }

    let scale = forms
        .iter()
        .map(|f| f.form.coupling_matrix(trap).amax())
        .fold(trap, f64::max);
    let mut generators: Vec<DVector<f64>> = Vec::new();
    for f in forms {
        if f.form.linear.norm() > 0.0 {
            generators.push(f.form.linear.clone());
        }
    }
    for f in forms {
        let eig = SymmetricEigen::new(f.form.coupling_matrix(trap));
        let mut idx: Vec<usize> = (0..coords)
            .filter(|&i| eig.eigenvalues[i].abs() > 1e-12 * scale)
            .collect();
        idx.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .partial_cmp(&eig.eigenvalues[a].abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        generators.extend(idx.into_iter().map(|i| eig.eigenvectors.column(i).into_owned()));
    }

    let mut basis: Vec<DVector<f64>> = Vec::new();
    for g in generators {
        let mut v = &g / g.norm();
        // Two passes of modified Gram–Schmidt.
        for _ in 0..2 {
            for b in &basis {
                let p = b.dot(&v);
                v -= b * p;
            }
        }
        let r = v.norm();
        if r >= GS_DROP {
            basis.push(v / r);
        }
    }

    let vectors = if basis.is_empty() {
        DMatrix::zeros(coords, 0)
    } else {
        DMatrix::from_columns(&basis)
    };
    let reduced = forms
        .iter()
        .map(|f| QuadraticVibronic {
            state: f.state.clone(),
            form: f.form.project(&vectors, trap),
        })
        .collect();
    Ok((ModeBasis { vectors }, reduced))
}

/// Electronic hopping matrix together with one vibrational form per
/// electronic state, all over the same orthonormal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct VibronicModel {
    pub labels: Vec<String>,
    /// Off-diagonal electronic couplings (energy units), e.g. Ω·A.
    pub hopping: DMatrix<f64>,
    pub forms: Vec<QuadraticForm>,
    pub omega: f64,
    pub x0: f64,
}

impl VibronicModel {
    pub fn from_graph(graph: &ResonantGraph, forms: &[QuadraticVibronic], params: &PhysicalParams) -> Self {
        Self {
            labels: graph.nodes.iter().map(|c| c.to_string()).collect(),
            hopping: &graph.adjacency * params.rabi,
            forms: forms.iter().map(|f| f.form.clone()).collect(),
            omega: params.omega,
            x0: params.x0,
        }
    }

    pub fn nodes(&self) -> usize {
        self.forms.len()
    }

    pub fn modes(&self) -> usize {
        self.forms.first().map_or(0, |f| f.dim())
    }

    pub fn trap(&self) -> f64 {
        0.5 * self.omega / (self.x0 * self.x0)
    }

    /// Restriction to a single electronic node.
    pub fn block(&self, node: usize) -> Self {
        Self {
            labels: vec![self.labels[node].clone()],
            hopping: DMatrix::zeros(1, 1),
            forms: vec![self.forms[node].clone()],
            omega: self.omega,
            x0: self.x0,
        }
    }
}

/// Two-state dumbbell model over {|+⟩, |↑↑⟩} with one relative mode:
/// off-diagonal √2Ω, diagonal ωb†b and ωb†b + √2κ(b+b†) + ξ(b+b†)².
pub fn dumbbell_hamiltonian(params: &PhysicalParams, couplings: &Couplings) -> VibronicModel {
    let x0 = params.x0;
    let trap = params.trap_curvature();
    let plus = QuadraticForm::trap_only(1, trap);
    let upup = QuadraticForm {
        constant: 0.0,
        linear: DVector::from_element(1, 2.0 * couplings.kappa / x0),
        quadratic: DMatrix::from_element(1, 1, trap + 2.0 * couplings.xi / (x0 * x0)),
    };
    let t = SQRT_2 * params.rabi;
    VibronicModel {
        labels: vec!["+".into(), "11".into()],
        hopping: DMatrix::from_row_slice(2, 2, &[0.0, t, t, 0.0]),
        forms: vec![plus, upup],
        omega: params.omega,
        x0,
    }
}

/// Everything needed to simulate one tweezer molecule.
#[derive(Debug, Clone)]
pub struct Molecule {
    pub geometry: Geometry,
    pub params: PhysicalParams,
    pub couplings: Couplings,
    pub graph: ResonantGraph,
    pub policy: MotionPolicy,
    /// Forms over all displacement coordinates.
    pub full_forms: Vec<QuadraticVibronic>,
    pub basis: ModeBasis,
    /// Forms over `basis`.
    pub forms: Vec<QuadraticVibronic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    #[default]
    Reduced,
    /// All displacement coordinates, including free ones.
    Full,
}

/// Builds the manifold containing `seed`, assembles and reduces it.
/// `params.detuning` is overwritten with the resolved detuning.
pub fn build_molecule(
    geometry: Geometry,
    model: &PotentialModel,
    params: PhysicalParams,
    detuning: crate::graph::DetuningRule,
    seed: &ElectronicConfig,
    policy: MotionPolicy,
    modes: ModeSelection,
) -> Result<Molecule> {
    let couplings = crate::params::derive_couplings(model, &params)?;
    let params = params.with_detuning(detuning.resolve(couplings.v_d));
    let graph = crate::graph::build_resonant_manifold(
        &geometry,
        params.detuning,
        model,
        &params,
        seed,
        crate::DEFAULT_RESONANCE_TOL,
    )?;
    let full_forms = assemble_manifold(&graph, &geometry, model, &params, policy)?;
    let trap = params.trap_curvature();
    let (basis, forms) = match modes {
        ModeSelection::Reduced => reduce_modes(&full_forms, trap)?,
        ModeSelection::Full => (ModeBasis::identity(geometry.len() * policy.dims()), full_forms.clone()),
    };
    Ok(Molecule {
        geometry,
        params,
        couplings,
        graph,
        policy,
        full_forms,
        basis,
        forms,
    })
}

impl Molecule {
    /// Preset molecule with its default motion policy and seed.
    pub fn preset(preset: Preset, model: &PotentialModel, params: PhysicalParams) -> Result<Self> {
        let geometry = Geometry::preset(preset, params.d);
        let seed: ElectronicConfig = match preset {
            Preset::Dumbbell => "01",
            Preset::Triangle => "001",
            Preset::Tetrahedron => "1000",
        }
        .parse()?;
        let policy = MotionPolicy::for_geometry(&geometry);
        build_molecule(
            geometry,
            model,
            params,
            crate::graph::DetuningRule::Facilitation(1.0),
            &seed,
            policy,
            ModeSelection::Reduced,
        )
    }

    pub fn model(&self) -> VibronicModel {
        VibronicModel::from_graph(&self.graph, &self.forms, &self.params)
    }

    pub fn with_rabi(mut self, rabi: f64) -> Self {
        self.params.rabi = rabi;
        self
    }

    /// Per-atom displacement vectors for reduced coordinates `q`.
    pub fn atom_displacements(&self, q: &DVector<f64>) -> Vec<Vector3<f64>> {
        let x = self.basis.embed(q);
        let dims = self.policy.dims();
        (0..self.geometry.len())
            .map(|k| {
                let mut v = Vector3::zeros();
                for a in 0..dims {
                    v[a] = x[k * dims + a];
                }
                v
            })
            .collect()
    }

    /// Debug dump of the reduced forms.
    pub fn forms_json(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .forms
            .iter()
            .map(|f| {
                let q = &f.form.quadratic;
                serde_json::json!({
                    "state": f.state.to_string(),
                    "constant": f.form.constant,
                    "linear": f.form.linear.iter().collect::<Vec<_>>(),
                    "hessian": (0..q.nrows())
                        .map(|i| q.row(i).iter().copied().collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "modes": self.basis.dim(), "nodes": nodes })
    }
}
