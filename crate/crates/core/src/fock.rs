//! Vibronic Hamiltonian in a truncated product Fock basis.
//!
//! The basis is `|s⟩ ⊗ |n_1 … n_d⟩` with a uniform cutoff `M` per mode
//! (occupations `0..M`), ordered node-major with mode 0 most significant.
//! Diagonal blocks hold the vibrational Hamiltonian of each electronic node;
//! off-diagonal blocks hold the laser hopping times the phonon overlap.
//!
//! In the [`Frame::Displaced`] frame every bounded node uses the Fock states
//! of the oscillator centred on its classical minimum. The overlap between
//! two nodes is then a product of single-mode displacement operators, so
//! the truncated operator is still the exact Galerkin projection of the
//! Hamiltonian onto a nested family of subspaces and remains variational in
//! the cutoff.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use crate::eigen::{lowest_eigenpair, CsrMatrix, LinearOperator};
use crate::error::{Error, Result};
use crate::vibronic::{QuadraticForm, VibronicModel};

/// Phonon basis used for each electronic node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Fock states of the bare trap for every node.
    Standard,
    /// Fock states displaced to each node's classical minimum; unstable nodes
    /// stay undisplaced.
    #[default]
    Displaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockOptions {
    pub cutoff: usize,
    pub frame: Frame,
    /// Largest admissible basis dimension.
    pub max_dim: usize,
}

impl Default for FockOptions {
    fn default() -> Self {
        Self {
            cutoff: 8,
            frame: Frame::Displaced,
            max_dim: 4_000_000,
        }
    }
}

impl FockOptions {
    pub fn with_cutoff(cutoff: usize) -> Self {
        Self {
            cutoff,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
struct Coupling {
    target: usize,
    source: usize,
    amplitude: f64,
    /// Per-mode overlap matrix; `None` is the identity.
    factors: Vec<Option<DMatrix<f64>>>,
}

/// Sparse Hermitian vibronic Hamiltonian.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub labels: Vec<String>,
    pub modes: usize,
    pub cutoff: usize,
    pub omega: f64,
    pub x0: f64,
    blocks: Vec<CsrMatrix>,
    couplings: Vec<Coupling>,
    /// Frame origin of each node in reduced coordinates (length units).
    shifts: Vec<DVector<f64>>,
}

/// Basis size `nodes · cutoff^modes`, without overflow.
pub fn estimate_dim(nodes: usize, modes: usize, cutoff: usize) -> u128 {
    (nodes as u128).saturating_mul((cutoff as u128).saturating_pow(modes as u32))
}

/// ⟨m| exp(γ(a† − a)) |n⟩ for real γ, m, n < `cutoff`.
///
/// Evaluated as exp(iγ√2 X) in the eigenbasis of the truncated position
/// operator on a padded space large enough that the returned corner is exact
/// to machine precision.
pub fn displacement_matrix(gamma: f64, cutoff: usize) -> DMatrix<f64> {
    if gamma == 0.0 {
        return DMatrix::identity(cutoff, cutoff);
    }
    let pad = ((cutoff as f64).sqrt() + gamma.abs() + 4.0).powi(2).ceil() as usize + 8;
    let mut x = DMatrix::zeros(pad, pad);
    for n in 1..pad {
        let v = (n as f64 / 2.0).sqrt();
        x[(n - 1, n)] = v;
        x[(n, n - 1)] = v;
    }
    let eig = SymmetricEigen::new(x);
    let v = eig.eigenvectors.rows(0, cutoff);
    let theta = eig.eigenvalues.map(|l| SQRT_2 * gamma * l);
    let cos = DMatrix::from_fn(cutoff, pad, |m, k| v[(m, k)] * theta[k].cos()) * v.transpose();
    let sin = DMatrix::from_fn(cutoff, pad, |m, k| v[(m, k)] * theta[k].sin()) * v.transpose();
    DMatrix::from_fn(cutoff, cutoff, |m, n| {
        let diff = n as i64 - m as i64;
        if diff % 2 == 0 {
            let sign = if (diff / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * cos[(m, n)]
        } else {
            let sign = if ((diff + 1) / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * sin[(m, n)]
        }
    })
}

fn decode(mut index: usize, cutoff: usize, occ: &mut [usize]) {
    for slot in occ.iter_mut().rev() {
        *slot = index % cutoff;
        index /= cutoff;
    }
}

/// Block for `form` (already in its own frame): constant + Σ ω n_i +
/// Σ l_i x0/√2 (c_i + c_i†) + Σ Q′_ij x0²/2 (c_i + c_i†)(c_j + c_j†).
fn build_block(form: &QuadraticForm, trap: f64, omega: f64, x0: f64, cutoff: usize) -> CsrMatrix {
    let d = form.dim();
    let size = cutoff.pow(d as u32);
    let lin: Vec<f64> = form.linear.iter().map(|l| l * x0 / SQRT_2).collect();
    let q = form.coupling_matrix(trap) * (0.5 * x0 * x0);
    let strides: Vec<usize> = (0..d).map(|i| cutoff.pow((d - 1 - i) as u32)).collect();
    let sq = |n: usize| (n as f64).sqrt();

    let rows = (0..size)
        .into_par_iter()
        .map(|row| {
            let mut occ = vec![0usize; d];
            decode(row, cutoff, &mut occ);
            let mut entries: Vec<(u32, f64)> = Vec::with_capacity(1 + 4 * d + 2 * d * d);
            let mut diag = form.constant;
            for i in 0..d {
                diag += omega * occ[i] as f64 + q[(i, i)] * (2 * occ[i] + 1) as f64;
            }
            entries.push((row as u32, diag));
            for i in 0..d {
                let n = occ[i];
                let s = strides[i];
                if lin[i] != 0.0 {
                    if n + 1 < cutoff {
                        entries.push(((row + s) as u32, lin[i] * sq(n + 1)));
                    }
                    if n > 0 {
                        entries.push(((row - s) as u32, lin[i] * sq(n)));
                    }
                }
                let qii = q[(i, i)];
                if qii != 0.0 {
                    if n + 2 < cutoff {
                        entries.push(((row + 2 * s) as u32, qii * sq((n + 1) * (n + 2))));
                    }
                    if n >= 2 {
                        entries.push(((row - 2 * s) as u32, qii * sq(n * (n - 1))));
                    }
                }
                for j in i + 1..d {
                    let qij = 2.0 * q[(i, j)];
                    if qij == 0.0 {
                        continue;
                    }
                    let m = occ[j];
                    let t = strides[j];
                    let moves_i = [(n + 1 < cutoff, sq(n + 1), s as isize), (n > 0, sq(n), -(s as isize))];
                    let moves_j = [(m + 1 < cutoff, sq(m + 1), t as isize), (m > 0, sq(m), -(t as isize))];
                    for &(ok_i, fi, di) in &moves_i {
                        for &(ok_j, fj, dj) in &moves_j {
                            if ok_i && ok_j {
                                let col = (row as isize + di + dj) as u32;
                                entries.push((col, qij * fi * fj));
                            }
                        }
                    }
                }
            }
            entries
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// y ← (⊗_i D_i) x, modes ordered as in the basis.
fn apply_kron(factors: &[Option<DMatrix<f64>>], x: &[f64], cutoff: usize) -> Vec<f64> {
    let d = factors.len();
    let mut cur = x.to_vec();
    let mut out = vec![0.0; x.len()];
    for (i, f) in factors.iter().enumerate() {
        let Some(mat) = f else { continue };
        let stride = cutoff.pow((d - 1 - i) as u32);
        let block = stride * cutoff;
        let outer = x.len() / block;
        if stride == 1 {
            // Column a holds the occupations of the last mode in block a.
            let c = DMatrixView::from_slice(&cur, cutoff, outer);
            let mut o = DMatrixViewMut::from_slice(&mut out, cutoff, outer);
            o.gemm(1.0, mat, &c, 0.0);
        } else {
            let t = mat.transpose();
            for a in 0..outer {
                let range = a * block..(a + 1) * block;
                let c = DMatrixView::from_slice(&cur[range.clone()], stride, cutoff);
                let mut o = DMatrixViewMut::from_slice(&mut out[range], stride, cutoff);
                o.gemm(1.0, &c, &t, 0.0);
            }
        }
        std::mem::swap(&mut cur, &mut out);
    }
    cur
}

/// Assembles the vibronic Hamiltonian of `model` at the given cutoff.
pub fn build_fock_matrix(model: &VibronicModel, opts: &FockOptions) -> Result<FockOperator> {
    let nodes = model.nodes();
    let modes = model.modes();
    let cutoff = opts.cutoff;
    if cutoff < 2 {
        return Err(Error::InvalidParameter(format!(
            "cutoff must be at least 2, got {cutoff}"
        )));
    }
    if nodes == 0 {
        return Err(Error::InvalidParameter("model has no electronic states".into()));
    }
    if model.hopping.nrows() != nodes || model.hopping.ncols() != nodes {
        return Err(Error::DimensionMismatch {
            expected: nodes,
            got: model.hopping.nrows(),
        });
    }
    if let Some(f) = model.forms.iter().find(|f| f.dim() != modes) {
        return Err(Error::DimensionMismatch {
            expected: modes,
            got: f.dim(),
        });
    }
    let estimated = estimate_dim(nodes, modes, cutoff);
    if estimated > opts.max_dim as u128 {
        return Err(Error::ResourceExceeded {
            estimated,
            budget: opts.max_dim,
        });
    }

    let trap = model.trap();
    let shifts: Vec<DVector<f64>> = model
        .forms
        .iter()
        .map(|f| match opts.frame {
            Frame::Standard => DVector::zeros(modes),
            Frame::Displaced => f.stationary_point().unwrap_or_else(|| DVector::zeros(modes)),
        })
        .collect();
    let blocks: Vec<CsrMatrix> = model
        .forms
        .par_iter()
        .zip(&shifts)
        .enumerate()
        .map(|(s, (f, shift))| {
            let mut local = f.shifted(shift);
            local.constant += model.hopping[(s, s)];
            build_block(&local, trap, model.omega, model.x0, cutoff)
        })
        .collect();

    let mut couplings = Vec::new();
    for s in 0..nodes {
        for t in s + 1..nodes {
            let amp = model.hopping[(s, t)];
            let amp_back = model.hopping[(t, s)];
            if amp == 0.0 && amp_back == 0.0 {
                continue;
            }
            // ⟨m; β_s | n; β_t⟩ = ⟨m| D(β_t − β_s) |n⟩.
            let factors: Vec<Option<DMatrix<f64>>> = (0..modes)
                .map(|i| {
                    let gamma = (shifts[t][i] - shifts[s][i]) / (model.x0 * SQRT_2);
                    (gamma != 0.0).then(|| displacement_matrix(gamma, cutoff))
                })
                .collect();
            let back = factors.iter().map(|f| f.as_ref().map(|m| m.transpose())).collect();
            couplings.push(Coupling {
                target: s,
                source: t,
                amplitude: amp,
                factors,
            });
            couplings.push(Coupling {
                target: t,
                source: s,
                amplitude: amp_back,
                factors: back,
            });
        }
    }

    Ok(FockOperator {
        labels: model.labels.clone(),
        modes,
        cutoff,
        omega: model.omega,
        x0: model.x0,
        blocks,
        couplings,
        shifts,
    })
}

impl LinearOperator for FockOperator {
    fn dim(&self) -> usize {
        self.blocks.len() * self.block_dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let bd = self.block_dim();
        y.par_chunks_mut(bd).enumerate().for_each(|(s, ys)| {
            ys.iter_mut().for_each(|v| *v = 0.0);
            self.blocks[s].apply_add(&x[s * bd..(s + 1) * bd], ys);
            for c in self.couplings.iter().filter(|c| c.target == s) {
                let xs = &x[c.source * bd..(c.source + 1) * bd];
                if c.factors.iter().all(Option::is_none) {
                    ys.iter_mut().zip(xs).for_each(|(a, b)| *a += c.amplitude * b);
                } else {
                    let t = apply_kron(&c.factors, xs, self.cutoff);
                    ys.iter_mut().zip(&t).for_each(|(a, b)| *a += c.amplitude * b);
                }
            }
        });
    }
}

/// Expectation values of one reduced coordinate and its conjugate momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureMoments {
    pub mean_x: f64,
    pub var_x: f64,
    pub var_p: f64,
}

impl FockOperator {
    pub fn nodes(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    /// Stored non-zeros, counting each overlap block at its dense size.
    pub fn nnz(&self) -> usize {
        let overlap: usize = self
            .couplings
            .iter()
            .filter(|c| c.amplitude != 0.0)
            .map(|c| {
                c.factors
                    .iter()
                    .map(|f| {
                        f.as_ref()
                            .map_or(self.cutoff, |m| m.iter().filter(|v| **v != 0.0).count())
                    })
                    .product::<usize>()
            })
            .sum();
        self.blocks.iter().map(CsrMatrix::nnz).sum::<usize>() + overlap
    }

    /// Frame origin of node `s` in reduced coordinates.
    pub fn shift(&self, s: usize) -> &DVector<f64> {
        &self.shifts[s]
    }

    /// Whether no electronic hopping is present.
    pub fn is_block_diagonal(&self) -> bool {
        self.couplings.iter().all(|c| c.amplitude == 0.0)
    }

    pub fn block(&self, s: usize) -> &CsrMatrix {
        &self.blocks[s]
    }

    /// max |H − Hᵀ| over stored entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let blocks = self.blocks.iter().map(CsrMatrix::asymmetry).fold(0.0, f64::max);
        let mut couplings: f64 = 0.0;
        for pair in self.couplings.chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            couplings = couplings.max((a.amplitude - b.amplitude).abs());
            for (fa, fb) in a.factors.iter().zip(&b.factors) {
                if let (Some(ma), Some(mb)) = (fa, fb) {
                    couplings = couplings.max((ma - mb.transpose()).amax());
                }
            }
        }
        blocks.max(couplings)
    }

    /// Dense copy; intended for small operators and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    /// Coordinate-format dump, one `row col value` line per non-zero.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        let bd = self.block_dim();
        for (s, b) in self.blocks.iter().enumerate() {
            for r in 0..b.n {
                for (c, v) in b.row(r) {
                    writeln!(w, "{} {} {:e}", s * bd + r, s * bd + c, v)?;
                }
            }
        }
        for c in &self.couplings {
            if c.amplitude == 0.0 {
                continue;
            }
            let mut e = vec![0.0; bd];
            for col in 0..bd {
                e[col] = 1.0;
                let v = apply_kron(&c.factors, &e, self.cutoff);
                e[col] = 0.0;
                for (row, val) in v.iter().enumerate() {
                    if *val != 0.0 {
                        writeln!(
                            w,
                            "{} {} {:e}",
                            c.target * bd + row,
                            c.source * bd + col,
                            c.amplitude * val
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// ‖ψ_s‖² per electronic node.
    pub fn node_weights(&self, state: &[f64]) -> Vec<f64> {
        let bd = self.block_dim();
        state.chunks(bd).map(|c| c.iter().map(|v| v * v).sum()).collect()
    }

    /// Moments of reduced coordinate `mode` in the laboratory frame.
    pub fn quadrature_moments(&self, state: &[f64], mode: usize) -> Result<QuadratureMoments> {
        if mode >= self.modes {
            return Err(Error::ModeOutOfRange {
                index: mode,
                len: self.modes,
            });
        }
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.len(),
            });
        }
        let bd = self.block_dim();
        let m = self.cutoff;
        let stride = m.pow((self.modes - 1 - mode) as u32);
        let scale = self.x0 / SQRT_2;
        let (mut mean, mut second, mut p2) = (0.0, 0.0, 0.0);
        for (s, psi) in state.chunks(bd).enumerate() {
            let shift = self.shifts[s][mode];
            let (mut weight, mut xq, mut xq2, mut pq2) = (0.0, 0.0, 0.0, 0.0);
            for idx in 0..bd {
                let n = (idx / stride) % m;
                let a = psi[idx];
                if a == 0.0 {
                    continue;
                }
                weight += a * a;
                let number = (2 * n + 1) as f64 * a * a;
                xq2 += number;
                pq2 += number;
                if n + 1 < m {
                    xq += 2.0 * ((n + 1) as f64).sqrt() * a * psi[idx + stride];
                }
                if n + 2 < m {
                    let t = 2.0 * (((n + 1) * (n + 2)) as f64).sqrt() * a * psi[idx + 2 * stride];
                    xq2 += t;
                    pq2 -= t;
                }
            }
            // x = x0(c + c†)/√2 + shift, p = i(c† − c)/(√2 x0).
            mean += scale * xq + weight * shift;
            second += scale * scale * xq2 + 2.0 * shift * scale * xq + weight * shift * shift;
            p2 += pq2 / (2.0 * self.x0 * self.x0);
        }
        Ok(QuadratureMoments {
            mean_x: mean,
            var_x: second - mean * mean,
            var_p: p2,
        })
    }

    /// ⟨x_i⟩ for every reduced coordinate.
    pub fn mean_coordinates(&self, state: &[f64]) -> Result<DVector<f64>> {
        let means = (0..self.modes)
            .map(|i| self.quadrature_moments(state, i).map(|q| q.mean_x))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(means))
    }
}

/// Lowest eigenpair of a vibronic operator.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub matvecs: usize,
}

/// Default residual tolerance of the eigensolver.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

pub fn ground_state(op: &FockOperator, tol: f64) -> Result<GroundState> {
    let e = lowest_eigenpair(op, tol, None)?;
    Ok(GroundState {
        energy: e.value,
        vector: e.vector,
        matvecs: e.matvecs,
    })
}

/// Outcome of the cutoff-doubling protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: f64,
    pub cutoff: usize,
    pub converged: bool,
    pub energy_history: Vec<(usize, f64)>,
}

/// Cutoffs 4, 8, 16, … ending at `max_cutoff`.
pub fn cutoff_sequence(max_cutoff: usize) -> Vec<usize> {
    let mut seq = vec![4];
    while *seq.last().unwrap() < max_cutoff {
        seq.push((seq.last().unwrap() * 2).min(max_cutoff));
    }
    seq
}

/// Doubles the cutoff from 4 until two successive energies differ by less
/// than `e_tol`. Failing to converge is reported, not raised: it is how an
/// unbounded Hamiltonian shows up. An eigensolver or resource failure stops
/// the doubling with `converged = false`.
pub fn converge_cutoff<F>(mut energy_at: F, e_tol: f64, max_cutoff: usize) -> Result<SolveReport>
where
    F: FnMut(usize) -> Result<f64>,
{
    if max_cutoff < 4 {
        return Err(Error::InvalidParameter(format!(
            "max_cutoff must be at least 4, got {max_cutoff}"
        )));
    }
    let mut history: Vec<(usize, f64)> = Vec::new();
    for m in cutoff_sequence(max_cutoff) {
        let e = match energy_at(m) {
            Ok(e) => e,
            Err(Error::NotConverged { best_estimate, .. }) => {
                history.push((m, best_estimate));
                break;
            }
            Err(err @ Error::ResourceExceeded { .. }) if !history.is_empty() => {
                log::warn!("stopping cutoff doubling: {err}");
                break;
            }
            Err(err) => return Err(err),
        };
        history.push((m, e));
        if let [.., (_, a), (_, b)] = history[..] {
            if (b - a).abs() < e_tol {
                return Ok(SolveReport {
                    energy: b,
                    cutoff: m,
                    converged: true,
                    energy_history: history,
                });
            }
        }
    }
    let &(cutoff, energy) = history.last().expect("at least one cutoff evaluated");
    Ok(SolveReport {
        energy,
        cutoff,
        converged: false,
        energy_history: history,
    })
}

/// Ground energy of `model` at a fixed cutoff.
pub fn solve_model(model: &VibronicModel, opts: &FockOptions, tol: f64) -> Result<(FockOperator, GroundState)> {
    let op = build_fock_matrix(model, opts)?;
    let gs = ground_state(&op, tol)?;
    Ok((op, gs))
}

/// [`converge_cutoff`] over full Fock-space solves of `model`.
pub fn converge_model(
    model: &VibronicModel,
    frame: Frame,
    e_tol: f64,
    max_cutoff: usize,
    max_dim: usize,
) -> Result<SolveReport> {
    converge_cutoff(
        |cutoff| {
            let opts = FockOptions { cutoff, frame, max_dim };
            solve_model(model, &opts, DEFAULT_EIG_TOL).map(|(_, g)| g.energy)
        },
        e_tol,
        max_cutoff,
    )
}

/// Ground state of one independent normal mode of a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModeGround {
    /// Eigenvalue of the non-trap quadratic part.
    pub curvature: f64,
    pub energy: f64,
    pub moments: QuadratureMoments,
}

/// Ground state of a single electronic block without hopping.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledGround {
    pub energy: f64,
    /// ⟨x⟩ in the block's coordinates.
    pub mean: DVector<f64>,
    /// Normal-mode directions (columns) matching `modes`.
    pub directions: DMatrix<f64>,
    pub modes: Vec<NormalModeGround>,
}

/// Solves one electronic block exactly by rotating to the eigenbasis of its
/// quadratic part. The isotropic trap is invariant under the rotation, so
/// the block separates into independent single-mode problems, each solved
/// in a truncated Fock space of `cutoff` states.
pub fn decoupled_block(
    form: &QuadraticForm,
    omega: f64,
    x0: f64,
    cutoff: usize,
    frame: Frame,
) -> Result<DecoupledGround> {
    let trap = 0.5 * omega / (x0 * x0);
    let d = form.dim();
    let eig = SymmetricEigen::new(form.coupling_matrix(trap));
    let rotated_linear = eig.eigenvectors.transpose() * &form.linear;
    let mut energy = form.constant;
    let mut means = DVector::zeros(d);
    let mut modes = Vec::with_capacity(d);
    for i in 0..d {
        let curvature = eig.eigenvalues[i];
        let lin = rotated_linear[i];
        if curvature == 0.0 && lin == 0.0 {
            modes.push(NormalModeGround {
                curvature,
                energy: 0.0,
                moments: QuadratureMoments {
                    mean_x: 0.0,
                    var_x: 0.5 * x0 * x0,
                    var_p: 0.5 / (x0 * x0),
                },
            });
            continue;
        }
        let single = VibronicModel {
            labels: vec![format!("mode{i}")],
            hopping: DMatrix::zeros(1, 1),
            forms: vec![QuadraticForm {
                constant: 0.0,
                linear: DVector::from_element(1, lin),
                quadratic: DMatrix::from_element(1, 1, trap + curvature),
            }],
            omega,
            x0,
        };
        let opts = FockOptions {
            cutoff,
            frame,
            max_dim: usize::MAX,
        };
        let (op, gs) = solve_model(&single, &opts, DEFAULT_EIG_TOL)?;
        let moments = op.quadrature_moments(&gs.vector, 0)?;
        energy += gs.energy;
        means[i] = moments.mean_x;
        modes.push(NormalModeGround {
            curvature,
            energy: gs.energy,
            moments,
        });
    }
    Ok(DecoupledGround {
        energy,
        mean: &eig.eigenvectors * means,
        directions: eig.eigenvectors,
        modes,
    })
}

/// Ground energy at zero hopping as the minimum over independently solved
/// blocks. Returns the energy and the winning node.
pub fn decoupled_ground_energy(model: &VibronicModel, cutoff: usize, frame: Frame) -> Result<(f64, usize)> {
    let energies = model
        .forms
        .par_iter()
        .map(|f| decoupled_block(f, model.omega, model.x0, cutoff, frame).map(|g| g.energy))
        .collect::<Result<Vec<_>>>()?;
    let (idx, e) = energies
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
    Ok((e, idx))
}
