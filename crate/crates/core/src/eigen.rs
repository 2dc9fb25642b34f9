//! Sparse storage and an extremal eigensolver for real symmetric operators.
//!
//! Lanczos with full reorthogonalisation, restarted from the current Ritz
//! vector. Inner products are sequential so results do not depend on the
//! thread count; only the matrix-vector products run in parallel.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Below this dimension the operator is materialised and diagonalised densely.
pub const DENSE_LIMIT: usize = 600;

/// Krylov subspace size between restarts.
const KRYLOV_DIM: usize = 48;
/// Ritz vectors retained across a restart.
const KEEP_RITZ: usize = 12;

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// y = A x
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// From per-row `(column, value)` lists; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut last: Option<u32> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        let mut m = Self {
            n,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut indptr = vec![0];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr.push(indices.len());
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k] as usize, self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }

    /// max |A_rc − A_cr|.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, v)| (v - self.get(c, r)).abs()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// y += A x
    pub fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(256).enumerate().for_each(|(chunk, ys)| {
            let base = chunk * 256;
            for (i, yi) in ys.iter_mut().enumerate() {
                let r = base + i;
                let mut acc = 0.0;
                for k in self.indptr[r]..self.indptr[r + 1] {
                    acc += self.values[k] * x[self.indices[k] as usize];
                }
                *yi += acc;
            }
        });
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.apply_add(x, y);
    }
}

/// Lowest eigenpair of a symmetric operator.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub matvecs: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Deterministic start: the normalised all-ones vector with a small
/// hashed component so that no symmetry sector is missed.
pub fn default_start(dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim as u64)
        .map(|i| {
            // splitmix64
            let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            1.0 + 0.1 * ((z >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    normalize(&mut v);
    v
}

/// Matrix-vector product budget: 10·√dim + 500.
pub fn iteration_cap(dim: usize) -> usize {
    (10.0 * (dim as f64).sqrt()) as usize + 500
}

fn dense_lowest<A: LinearOperator + ?Sized>(op: &A) -> Eigenpair {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let k = eig.eigenvalues.imin();
    let mut vector: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    // Fix the sign for reproducibility.
    if vector.iter().sum::<f64>() < 0.0 {
        vector.iter_mut().for_each(|x| *x = -*x);
    }
    Eigenpair {
        value: eig.eigenvalues[k],
        vector,
        matvecs: n,
        residual: 0.0,
    }
}

/// Lowest eigenpair to residual `‖Ax − θx‖ ≤ tol·max(|θ|, 1)`.
pub fn lowest_eigenpair<A: LinearOperator + ?Sized>(op: &A, tol: f64, start: Option<&[f64]>) -> Result<Eigenpair> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty operator".into()));
    }
    if n <= DENSE_LIMIT {
        return Ok(dense_lowest(op));
    }
    let cap = iteration_cap(n);
    let m = KRYLOV_DIM.min(n);
    let mut x = match start {
        Some(s) if s.len() == n => s.to_vec(),
        Some(s) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: s.len(),
            })
        }
        None => default_start(n),
    };
    normalize(&mut x);

    let mut matvecs = 0;
    let mut best = (f64::INFINITY, f64::INFINITY);
    let mut basis: Vec<Vec<f64>> = vec![x];
    // Projected matrix; upper triangle filled as columns are generated.
    let mut h = DMatrix::<f64>::zeros(m, m);
    // Number of leading basis vectors whose image is already known.
    let mut locked = 0;
    let mut w = vec![0.0; n];

    loop {
        let mut beta = 0.0;
        let mut j = locked;
        while j < m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[(i, j)] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            beta = dot(&w, &w).sqrt();
            j += 1;
            let scale = h[(j - 1, j - 1)].abs().max(1.0);
            if j == m || matvecs >= cap || beta <= 1e-13 * scale {
                break;
            }
            basis.push(w.iter().map(|v| v / beta).collect());
        }
        let k = j;
        let proj = DMatrix::from_fn(k, k, |r, c| if r <= c { h[(r, c)] } else { h[(c, r)] });
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let lowest = order[0];
        let estimate = beta * eig.eigenvectors[(k - 1, lowest)].abs();

        let combine = |col: usize| -> Vec<f64> {
            let mut v = vec![0.0; n];
            for (i, b) in basis.iter().take(k).enumerate() {
                let c = eig.eigenvectors[(i, col)];
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi += c * bi);
            }
            v
        };

        let converged_estimate = estimate <= 0.5 * tol * eig.eigenvalues[lowest].abs().max(1.0);
        if converged_estimate || matvecs >= cap || beta <= 1e-13 {
            let mut x = combine(lowest);
            normalize(&mut x);
            op.apply(&x, &mut w);
            matvecs += 1;
            let theta = dot(&x, &w);
            let residual = w
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - theta * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if residual < best.1 {
                best = (theta, residual);
            }
            if residual <= tol * theta.abs().max(1.0) {
                if x.iter().sum::<f64>() < 0.0 {
                    x.iter_mut().for_each(|v| *v = -*v);
                }
                return Ok(Eigenpair {
                    value: theta,
                    vector: x,
                    matvecs,
                    residual,
                });
            }
            if matvecs >= cap || beta <= 1e-13 {
                return Err(Error::NotConverged {
                    iterations: matvecs,
                    best_estimate: best.0,
                    residual: best.1,
                });
            }
        }

        // Thick restart: keep the lowest Ritz vectors and the residual direction.
        let keep = KEEP_RITZ.min(k - 1).max(1);
        let residual_dir: Vec<f64> = w.iter().map(|v| v / beta).collect();
        let kept: Vec<Vec<f64>> = order[..keep].par_iter().map(|&c| combine(c)).collect();
        h.fill(0.0);
        for (i, &c) in order[..keep].iter().enumerate() {
            h[(i, i)] = eig.eigenvalues[c];
        }
        basis = kept;
        basis.push(residual_dir);
        locked = keep;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        CsrMatrix::from_rows(
            (0..n)
                .map(|i| {
                    let mut r = vec![(i as u32, 2.0)];
                    if i > 0 {
                        r.push((i as u32 - 1, -1.0));
                    }
                    if i + 1 < n {
                        r.push((i as u32 + 1, -1.0));
                    }
                    r
                })
                .collect(),
        )
    }

    #[test]
    fn csr_sums_duplicates_and_drops_zeros() {
        let m = CsrMatrix::from_rows(vec![vec![(1, 1.0), (0, 2.0), (1, 0.5)], vec![(0, 1.5), (1, 0.0)]]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.asymmetry(), 0.0);
        let mut y = vec![0.0; 2];
        m.apply(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.5, 1.5]);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let n = 900;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i as u32, ((i * 37) % 101) as f64 * 0.05)];
                for off in [1usize, 7, 31] {
                    let v = 0.1 / off as f64;
                    if i + off < n {
                        r.push(((i + off) as u32, v));
                    }
                    if i >= off {
                        r.push(((i - off) as u32, v));
                    }
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(rows);
        let lanczos = lowest_eigenpair(&a, 1e-11, None).unwrap();
        let dense = dense_lowest(&a);
        assert!((lanczos.value - dense.value).abs() < 1e-9);
        let overlap = dot(&lanczos.vector, &dense.vector).abs();
        assert!((overlap - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lanczos_diagonal_with_gap() {
        let n = 5000;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i as u32, i as f64 * 0.01 + if i == 1234 { -20.0 } else { 0.0 })];
                if i + 1 < n {
                    r.push((i as u32 + 1, 0.001));
                }
                if i > 0 {
                    r.push((i as u32 - 1, 0.001));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(rows);
        let e = lowest_eigenpair(&a, 1e-10, None).unwrap();
        assert!((e.value - (12.34 - 20.0)).abs() < 1e-5);
        let mut y = vec![0.0; n];
        a.apply(&e.vector, &mut y);
        let res: f64 = y
            .iter()
            .zip(&e.vector)
            .map(|(a, b)| (a - e.value * b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-8);
        assert!(e.matvecs <= iteration_cap(n));
    }

    #[test]
    fn dense_path_for_small_operators() {
        let a = laplacian(10);
        let e = lowest_eigenpair(&a, 1e-12, None).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 11.0).cos();
        assert!((e.value - exact).abs() < 1e-12);
    }

    #[test]
    fn start_vector_is_deterministic() {
        assert_eq!(default_start(100), default_start(100));
        let s = default_start(100);
        assert!((dot(&s, &s) - 1.0).abs() < 1e-14);
    }
}
