//! Born–Oppenheimer potential-energy surfaces.
//!
//! Atomic displacements are treated as classical parameters: at fixed
//! reduced coordinates `q` the electronic matrix `Ω·A + diag(E_s(q))` is
//! diagonalised and its lowest eigenvalue is the surface. Nuclear kinetic
//! energy is dropped.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ResonantGraph;
use crate::vibronic::{Molecule, QuadraticForm, QuadraticVibronic};

/// Minima closer than this (in units of x0) are the same basin.
pub const BASIN_TOL: f64 = 1e-4;
/// Minima within this energy (in units of ω) of the global one are degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Half-width of the start box in units of x0.
pub const START_BOX: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BoSurface {
    pub labels: Vec<String>,
    pub adjacency: DMatrix<f64>,
    /// Classical node energies over reduced coordinates.
    pub forms: Vec<QuadraticForm>,
    pub rabi: f64,
    pub omega: f64,
    pub x0: f64,
}

impl BoSurface {
    pub fn new(graph: &ResonantGraph, forms: &[QuadraticVibronic], rabi: f64, omega: f64, x0: f64) -> Self {
        Self {
            labels: graph.nodes.iter().map(|c| c.to_string()).collect(),
            adjacency: graph.adjacency.clone(),
            forms: forms.iter().map(|f| f.form.clone()).collect(),
            rabi,
            omega,
            x0,
        }
    }

    pub fn from_molecule(m: &Molecule) -> Self {
        Self::new(&m.graph, &m.forms, m.params.rabi, m.params.omega, m.params.x0)
    }

    pub fn with_rabi(&self, rabi: f64) -> Self {
        Self { rabi, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.forms.first().map_or(0, QuadraticForm::dim)
    }

    fn check(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: q.len(),
            });
        }
        Ok(())
    }

    /// Electronic matrix at `q`.
    pub fn electronic_matrix(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(q)?;
        let mut m = &self.adjacency * self.rabi;
        for (s, f) in self.forms.iter().enumerate() {
            m[(s, s)] += f.energy(q);
        }
        Ok(m)
    }

    /// Lowest eigenvalue and its electronic eigenvector.
    pub fn state(&self, q: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let eig = SymmetricEigen::new(self.electronic_matrix(q)?);
        let k = eig.eigenvalues.imin();
        Ok((eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
    }

    pub fn energy(&self, q: &DVector<f64>) -> Result<f64> {
        Ok(self.state(q)?.0)
    }

    /// Hellmann–Feynman gradient Σ_s |c_s|² ∇E_s(q).
    pub fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, c) = self.state(q)?;
        let mut g = DVector::zeros(self.dim());
        for (s, f) in self.forms.iter().enumerate() {
            g += f.gradient(q) * (c[s] * c[s]);
        }
        Ok(g)
    }

    /// Index of the electronic node with the largest weight at `q`.
    pub fn dominant_node(&self, q: &DVector<f64>) -> Result<usize> {
        let (_, c) = self.state(q)?;
        Ok(c.iter()
            .map(|v| v * v)
            .enumerate()
            .fold((0, -1.0), |a, (i, w)| if w > a.1 { (i, w) } else { a })
            .0)
    }
}

/// Lowest eigenvalue of `Ω·A + diag(E_s(q))`.
pub fn bo_energy(surface: &BoSurface, q: &DVector<f64>) -> Result<f64> {
    surface.energy(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoMinimum {
    pub q: Vec<f64>,
    pub energy: f64,
    /// Dominant electronic configuration at the minimum.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaReport {
    /// Distinct local minima, lowest first.
    pub minima: Vec<BoMinimum>,
    /// Number of minima degenerate with the global one.
    pub degeneracy: usize,
    pub global_energy: f64,
    /// Some start ran off to infinity: the surface is not bounded below.
    pub unbounded: bool,
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic start points: one point at two radii in every sign sector
/// of the coordinates, then Halton points filling the box.
pub fn start_points(dim: usize, count: usize, x0: f64) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(count);
    if dim == 0 {
        out.push(DVector::zeros(0));
        return out;
    }
    if dim < usize::BITS as usize - 1 {
        'sectors: for &r in &[1.0, 2.5] {
            for mask in 0..1usize << dim {
                if out.len() >= count {
                    break 'sectors;
                }
                out.push(DVector::from_fn(
                    dim,
                    |i, _| if mask >> i & 1 == 1 { -r * x0 } else { r * x0 },
                ));
            }
        }
    }
    let mut k = 1;
    while out.len() < count {
        out.push(DVector::from_fn(dim, |i, _| {
            (2.0 * radical_inverse(k, PRIMES[i % PRIMES.len()]) - 1.0) * START_BOX * x0
        }));
        k += 1;
    }
    out
}

/// Default number of starts: two per sign sector.
pub fn default_starts(dim: usize) -> usize {
    if dim >= 12 {
        8192
    } else {
        2 << dim
    }
}

enum Descent {
    Converged(DVector<f64>, f64),
    Unbounded,
}

/// Nelder–Mead with dimension-adapted coefficients.
fn nelder_mead<F: Fn(&DVector<f64>) -> f64>(f: &F, start: &DVector<f64>, step: f64, scale: f64) -> Descent {
    let n = start.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.clone(), f(start)));
    for i in 0..n {
        let mut p = start.clone();
        p[i] += step;
        let v = f(&p);
        simplex.push((p, v));
    }
    let runaway = |p: &DVector<f64>, v: f64| p.amax() > 1e4 * scale || v < -1e12;
    for _ in 0..200 * (n + 1) * (n + 1) {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if runaway(&simplex[0].0, best) {
            return Descent::Unbounded;
        }
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| (p - &simplex[0].0).amax())
            .fold(0.0, f64::max);
        if (worst - best).abs() <= 1e-15 * best.abs().max(1.0) && size < 1e-10 * scale {
            break;
        }
        let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, (p, _)| acc + p) / nf;
        let xr = &centroid + (&centroid - &simplex[n].0) * alpha;
        let fr = f(&xr);
        if fr < best {
            let xe = &centroid + (&xr - &centroid) * gamma;
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = &centroid + (&xr - &centroid) * rho;
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = &centroid + (&simplex[n].0 - &centroid) * rho;
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < fr.min(worst) {
                simplex[n] = (xc, fc);
            } else {
                let b = simplex[0].0.clone();
                for (p, v) in simplex.iter_mut().skip(1) {
                    *p = &b + (&*p - &b) * sigma;
                    *v = f(p);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (p, v) = simplex.swap_remove(0);
    Descent::Converged(p, v)
}

/// Newton refinement using the analytic gradient and a finite-difference
/// Hessian; steps that do not lower the energy are rejected.
fn polish(surface: &BoSurface, mut q: DVector<f64>, mut e: f64) -> (DVector<f64>, f64) {
    let n = q.len();
    let h = 1e-5 * surface.x0;
    for _ in 0..30 {
        let Ok(g) = surface.gradient(&q) else { break };
        if g.amax() < 1e-13 * surface.omega / surface.x0 {
            break;
        }
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut a = q.clone();
            let mut b = q.clone();
            a[i] += h;
            b[i] -= h;
            let (Ok(ga), Ok(gb)) = (surface.gradient(&a), surface.gradient(&b)) else {
                return (q, e);
            };
            hess.set_column(i, &((ga - gb) / (2.0 * h)));
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let Some(step) = hess.cholesky().map(|c| c.solve(&g)) else {
            break;
        };
        let trial = &q - step;
        match surface.energy(&trial) {
            Ok(et) if et <= e => {
                q = trial;
                e = et;
            }
            _ => break,
        }
    }
    (q, e)
}

fn is_local_minimum(surface: &BoSurface, q: &DVector<f64>, e: f64) -> bool {
    let h = 1e-3 * surface.x0;
    let slack = 1e-12 * e.abs().max(surface.omega);
    (0..q.len()).all(|i| {
        [h, -h].iter().all(|&d| {
            let mut p = q.clone();
            p[i] += d;
            surface.energy(&p).is_ok_and(|v| v >= e - slack)
        })
    })
}

/// Deterministic multistart search for the local minima of the surface.
pub fn minimize_bo(surface: &BoSurface, starts: usize) -> Result<MinimaReport> {
    let dim = surface.dim();
    let x0 = surface.x0;
    let f = |q: &DVector<f64>| surface.energy(q).unwrap_or(f64::INFINITY);
    let points = start_points(dim, starts.max(1), x0);
    let runs: Vec<Option<(DVector<f64>, f64)>> = points
        .par_iter()
        .map(|p| match nelder_mead(&f, p, 0.5 * x0, x0) {
            Descent::Unbounded => None,
            Descent::Converged(q, e) => Some(polish(surface, q, e)),
        })
        .collect();
    let unbounded = runs.iter().any(Option::is_none);
    let mut found: Vec<(DVector<f64>, f64)> = runs
        .into_iter()
        .flatten()
        .filter(|(q, e)| is_local_minimum(surface, q, *e))
        .collect();
    found.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then_with(|| {
            a.0.iter()
                .zip(b.0.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut minima: Vec<(DVector<f64>, f64)> = Vec::new();
    for (q, e) in found {
        if minima.iter().all(|(m, _)| (m - &q).amax() > BASIN_TOL * x0) {
            minima.push((q, e));
        }
    }
    let global_energy = minima.first().map_or(f64::NEG_INFINITY, |m| m.1);
    let degeneracy = minima
        .iter()
        .filter(|(_, e)| (e - global_energy).abs() <= DEGENERACY_TOL * surface.omega)
        .count();
    let minima = minima
        .into_iter()
        .map(|(q, energy)| {
            let label = surface
                .dominant_node(&q)
                .map(|s| surface.labels[s].clone())
                .unwrap_or_default();
            BoMinimum {
                q: q.iter().copied().collect(),
                energy,
                label,
            }
        })
        .collect();
    Ok(MinimaReport {
        minima,
        degeneracy,
        global_energy,
        unbounded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub omega: f64,
    /// Spacing of the grid the kink was located on.
    pub uncertainty: f64,
    /// Largest |second difference| on that grid.
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionScan {
    pub rabi: Vec<f64>,
    pub energy: Vec<f64>,
    pub degeneracy: Vec<usize>,
    pub kink: Option<Kink>,
}

/// Largest |f_{i+1} − 2f_i + f_{i−1}| on an interior point.
pub fn max_second_difference(values: &[f64]) -> Option<(usize, f64)> {
    (1..values.len().saturating_sub(1))
        .map(|i| (i, (values[i + 1] - 2.0 * values[i] + values[i - 1]).abs()))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, b)) if b >= v => acc,
            _ => Some((i, v)),
        })
}

fn global_minima(surface: &BoSurface, rabi: &[f64], starts: usize) -> Result<Vec<MinimaReport>> {
    rabi.par_iter()
        .map(|&r| minimize_bo(&surface.with_rabi(r), starts))
        .collect()
}

/// Global BO minimum on a uniform Rabi grid with the kink located at the
/// largest discrete second difference and refined once on a finer grid.
pub fn transition_scan(surface: &BoSurface, lo: f64, hi: f64, samples: usize, starts: usize) -> Result<TransitionScan> {
    if samples < 32 {
        return Err(Error::InvalidParameter(format!(
            "transition scan needs at least 32 samples, got {samples}"
        )));
    }
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty Rabi range [{lo}, {hi}]")));
    }
    let h = (hi - lo) / (samples - 1) as f64;
    let rabi: Vec<f64> = (0..samples).map(|i| lo + h * i as f64).collect();
    let reports = global_minima(surface, &rabi, starts)?;
    let energy: Vec<f64> = reports.iter().map(|r| r.global_energy).collect();
    let degeneracy = reports.iter().map(|r| r.degeneracy).collect();
    let kink = match max_second_difference(&energy) {
        Some((i, _)) => {
            let fine_n = 33;
            let (a, b) = (rabi[i - 1], rabi[i + 1]);
            let fh = (b - a) / (fine_n - 1) as f64;
            let fine: Vec<f64> = (0..fine_n).map(|k| a + fh * k as f64).collect();
            let fe: Vec<f64> = global_minima(surface, &fine, starts)?
                .iter()
                .map(|r| r.global_energy)
                .collect();
            max_second_difference(&fe).map(|(k, c)| Kink {
                omega: fine[k],
                uncertainty: fh,
                curvature: c,
            })
        }
        None => None,
    };
    Ok(TransitionScan {
        rabi,
        energy,
        degeneracy,
        kink,
    })
}

/// Local quadratic model `E ≈ constant + gradient·δq + δqᵀ·quadratic·δq`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFit {
    pub constant: f64,
    pub gradient: DVector<f64>,
    pub quadratic: DMatrix<f64>,
    pub radius: f64,
    pub rms_residual: f64,
}

impl QuadraticFit {
    /// Eigenvalues of the quadratic part, ascending, with eigenvectors as columns.
    pub fn principal(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.quadratic.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.quadratic.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        (values, vectors)
    }
}

/// Least-squares quadratic fit on the stencil `c ± r e_i`, `c ± r e_i ± r e_j`.
/// The radius is halved until every stencil point has the same dominant
/// electronic state as the centre.
pub fn bo_quadratic_check(surface: &BoSurface, center: &DVector<f64>) -> Result<QuadraticFit> {
    surface.check(center)?;
    let n = center.len();
    let home = surface.dominant_node(center)?;
    let mut radius = 0.05 * surface.x0;
    for _ in 0..40 {
        let mut offsets = vec![DVector::zeros(n)];
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut d = DVector::zeros(n);
                d[i] = s * radius;
                offsets.push(d);
            }
            for j in i + 1..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = DVector::zeros(n);
                    d[i] = si * radius;
                    d[j] = sj * radius;
                    offsets.push(d);
                }
            }
        }
        let crosses = offsets
            .iter()
            .map(|d| surface.dominant_node(&(center + d)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .any(|s| s != home);
        if crosses {
            radius *= 0.5;
            continue;
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let cols = 1 + n + pairs.len();
        let mut a = DMatrix::zeros(offsets.len(), cols);
        let mut b = DVector::zeros(offsets.len());
        for (r, d) in offsets.iter().enumerate() {
            // Work in units of the radius for conditioning.
            let u = d / radius;
            a[(r, 0)] = 1.0;
            for i in 0..n {
                a[(r, 1 + i)] = u[i];
            }
            for (k, &(i, j)) in pairs.iter().enumerate() {
                a[(r, 1 + n + k)] = u[i] * u[j];
            }
            b[r] = surface.energy(&(center + d))?;
        }
        let svd = a.clone().svd(true, true);
        let x = svd
            .solve(&b, 1e-14)
            .map_err(|e| Error::InvalidParameter(format!("quadratic fit failed: {e}")))?;
        let resid = &a * &x - &b;
        let mut quadratic = DMatrix::zeros(n, n);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let c = x[1 + n + k] / (radius * radius);
            if i == j {
                quadratic[(i, i)] = c;
            } else {
                quadratic[(i, j)] = 0.5 * c;
                quadratic[(j, i)] = 0.5 * c;
            }
        }
        return Ok(QuadraticFit {
            constant: x[0],
            gradient: DVector::from_fn(n, |i, _| x[1 + i] / radius),
            quadratic,
            radius,
            rms_residual: (resid.norm_squared() / offsets.len() as f64).sqrt(),
        });
    }
    Err(Error::InvalidParameter(
        "no crossing-free stencil around the centre".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Preset;
    use crate::params::{PhysicalParams, PotentialModel};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn triangle(kappa: f64, xi: f64, rabi: f64) -> BoSurface {
        let params = PhysicalParams::default().with_rabi(rabi);
        let m = Molecule::preset(Preset::Triangle, &PotentialModel::explicit(kappa, xi, 0.1), params).unwrap();
        BoSurface::from_molecule(&m)
    }

    #[test]
    fn origin_energies() {
        let s = triangle(-0.6, 0.0, 0.0);
        assert_eq!(s.dim(), 4);
        assert!(bo_energy(&s, &DVector::zeros(4)).unwrap().abs() < 1e-14);
        assert!(bo_energy(&s, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn dumbbell_origin() {
        let params = PhysicalParams::default().with_rabi(0.7);
        let m = Molecule::preset(Preset::Dumbbell, &PotentialModel::explicit(0.0, 0.0, 0.1), params).unwrap();
        let s = BoSurface::from_molecule(&m);
        assert_relative_eq!(
            bo_energy(&s, &DVector::zeros(s.dim())).unwrap(),
            -2f64.sqrt() * 0.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn three_degenerate_minima() {
        let (kappa, xi) = (-0.6, 0.05);
        let s = triangle(kappa, xi, 0.0);
        let r = minimize_bo(&s, default_starts(s.dim())).unwrap();
        assert!(!r.unbounded);
        assert_eq!(r.degeneracy, 3);
        let xb = -4.0 * xi;
        let expected = -(2.0 * kappa * kappa) / (1.0 - xb);
        assert_relative_eq!(r.global_energy, expected, epsilon = 1e-10);
        for m in &r.minima[..3] {
            assert_relative_eq!(m.energy, expected, epsilon = 1e-10);
            assert_eq!(m.label.chars().filter(|c| *c == '1').count(), 2);
        }
    }

    #[test]
    fn pure_graph_limit() {
        // κ = ξ = 0: single minimum at the origin, −λ_max(A)·Ω = −2Ω on the ring.
        let s = triangle(0.0, 0.0, 0.4);
        let r = minimize_bo(&s, 16).unwrap();
        assert_eq!(r.minima.len(), 1);
        assert!(r.minima[0].q.iter().all(|v| v.abs() < 1e-6));
        assert_relative_eq!(r.global_energy, -0.8, epsilon = 1e-12);
    }

    #[test]
    fn large_rabi_restores_symmetry() {
        let s = triangle(-0.3, 0.0, 5.0);
        let r = minimize_bo(&s, default_starts(s.dim())).unwrap();
        assert_eq!(r.degeneracy, 1);
    }

    #[test]
    fn unbounded_surface_is_flagged() {
        let s = triangle(-0.2, -0.4, 0.0);
        assert!(minimize_bo(&s, 8).unwrap().unbounded);
    }

    #[test]
    fn quadratic_fit_recovers_local_coefficients() {
        let (kappa, xi, nu) = (-0.6, 0.05, 0.1);
        let s = triangle(kappa, xi, 0.0);
        let r = minimize_bo(&s, default_starts(s.dim())).unwrap();
        let c = DVector::from_vec(r.minima[0].q.clone());
        let fit = bo_quadratic_check(&s, &c).unwrap();
        assert!(fit.gradient.amax() < 1e-8);
        let (vals, _) = fit.principal();
        let mut expected = [0.5 + 2.0 * xi, 0.5 + 2f64.sqrt() * nu * kappa, 0.5, 0.5];
        expected.sort_by(f64::total_cmp);
        for (v, e) in vals.iter().zip(expected) {
            assert_relative_eq!(*v, e, epsilon = 1e-8);
        }
    }

    #[test]
    fn scan_endpoint_and_kink() {
        let (kappa, xi) = (-0.6, 0.05);
        let s = triangle(kappa, xi, 0.0);
        let scan = transition_scan(&s, 0.0, 1.0, 32, 16).unwrap();
        assert_relative_eq!(
            scan.energy[0],
            -(2.0 * kappa * kappa) / (1.0 + 4.0 * xi),
            epsilon = 1e-10
        );
        let kink = scan.kink.unwrap();
        assert!(kink.omega > 0.0 && kink.omega < 1.0);
        assert!(transition_scan(&s, 0.0, 1.0, 8, 16).is_err());
    }

    #[test]
    fn start_points_cover_sectors() {
        let p = start_points(3, 16, 1.0);
        assert_eq!(p.len(), 16);
        let signs: std::collections::HashSet<Vec<bool>> =
            p[..8].iter().map(|v| v.iter().map(|x| *x > 0.0).collect()).collect();
        assert_eq!(signs.len(), 8);
        let more = start_points(2, 12, 1.0);
        assert!(more[8..].iter().all(|v| v.amax() <= START_BOX));
    }

    proptest! {
        #[test]
        fn hellmann_feynman(q in proptest::collection::vec(-2.0f64..2.0, 4), rabi in 0.05f64..1.0) {
            let s = triangle(-0.5, 0.05, rabi);
            let q = DVector::from_vec(q);
            let eig = SymmetricEigen::new(s.electronic_matrix(&q).unwrap());
            let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            prop_assume!(ev[1] - ev[0] > 1e-3);
            let g = s.gradient(&q).unwrap();
            let h = 1e-6;
            for i in 0..4 {
                let mut a = q.clone();
                let mut b = q.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (s.energy(&a).unwrap() - s.energy(&b).unwrap()) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0));
            }
        }

        #[test]
        fn concave_and_lipschitz_in_rabi(q in proptest::collection::vec(-2.0f64..2.0, 4), r in 0.0f64..2.0) {
            let q = DVector::from_vec(q);
            let s = triangle(-0.5, 0.05, 0.0);
            let h = 1e-3;
            let e = |x: f64| s.with_rabi(x).energy(&q).unwrap();
            let (a, b, c) = (e(r - h), e(r), e(r + h));
            prop_assert!(a + c - 2.0 * b <= 1e-9);
            // λ_max(A) = 2 for the six-node ring.
            prop_assert!((c - b).abs() <= 2.0 * h + 1e-12);
        }

        #[test]
        fn zero_rabi_is_min_over_nodes(q in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let s = triangle(-0.5, 0.05, 0.0);
            let q = DVector::from_vec(q);
            let m = s.forms.iter().map(|f| f.energy(&q)).fold(f64::INFINITY, f64::min);
            prop_assert!((s.energy(&q).unwrap() - m).abs() < 1e-12);
        }
    }
}
