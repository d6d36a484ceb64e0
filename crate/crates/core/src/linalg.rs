//! Sparse symmetric positive definite systems on the interior unknowns of a
//! domain: assembly of the Dirichlet stiffness matrix, an envelope Cholesky
//! factorization and Jacobi-preconditioned conjugate gradients.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Domain;

/// Systems up to this size are factorized; larger ones use PCG.
pub const DIRECT_SOLVE_LIMIT: usize = 10_000;

/// Symmetric matrix in CSR form with both triangles stored and columns
/// sorted within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(j, _)| j == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// x·Ax
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Copy with `d` added to the diagonal. Every row already holds a
    /// diagonal entry for matrices produced by [`dirichlet_stiffness`].
    pub fn with_added_diagonal(&self, d: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for (i, di) in d.iter().enumerate().take(self.n) {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += di;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        a
    }
}

/// Stiffness matrix K of the Dirichlet problem on Ω°: K_xx = Σ_{y∼x} ω_xy,
/// K_xy = −ω_xy for interior neighbours, so that (Ku)_x = −μ(x)Δu(x) and
/// u·Ku = ∫_Ω |∇u|² dμ for fields vanishing off Ω°.
pub fn dirichlet_stiffness(dom: &Domain) -> CsrMatrix {
    let g = dom.graph();
    let n = dom.num_interior();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for &x in dom.interior() {
        let i = dom.unknown_index(x).expect("interior vertex has an index");
        let mut row: Vec<(usize, f64)> = vec![(i, g.weighted_degree(x))];
        for (y, w) in g.neighbors(x) {
            if let Some(j) = dom.unknown_index(y) {
                row.push((j, -w));
            }
        }
        row.sort_by_key(|&(j, _)| j);
        for (j, v) in row {
            cols.push(j);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    CsrMatrix {
        n,
        row_ptr,
        cols,
        vals,
    }
}

/// Diagonal μ-mass on the interior unknowns.
pub fn interior_mass(dom: &Domain) -> Vec<f64> {
    let g = dom.graph();
    dom.interior().iter().map(|&x| g.measure(x)).collect()
}

/// Reverse Cuthill–McKee ordering, started from a pseudo-peripheral vertex
/// of each connected component.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_last = |start: usize| -> (usize, usize) {
        let mut level = vec![usize::MAX; n];
        let mut q = VecDeque::from([start]);
        level[start] = 0;
        let mut last = start;
        while let Some(x) = q.pop_front() {
            last = x;
            for (y, _) in a.row(x) {
                if level[y] == usize::MAX {
                    level[y] = level[x] + 1;
                    q.push_back(y);
                }
            }
        }
        (last, level[last])
    };
    for s in 0..n {
        if visited[s] {
            continue;
        }
        let (mut start, mut ecc) = bfs_last(s);
        for _ in 0..4 {
            let (far, e) = bfs_last(start);
            if e <= ecc {
                break;
            }
            ecc = e;
            start = far;
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(x) = q.pop_front() {
            order.push(x);
            let mut next: Vec<usize> = a
                .row(x)
                .map(|(y, _)| y)
                .filter(|&y| !visited[y])
                .collect();
            next.sort_by_key(|&y| (degree[y], y));
            for y in next {
                visited[y] = true;
                q.push_back(y);
            }
        }
    }
    order.reverse();
    order
}

fn envelope_size(a: &CsrMatrix, perm: &[usize], inv: &[usize]) -> usize {
    (0..a.n)
        .map(|i| {
            let old = perm[i];
            let first = a.row(old).map(|(j, _)| inv[j]).min().unwrap_or(i).min(i);
            i - first
        })
        .sum()
}

/// Envelope (profile) Cholesky factorization A = LLᵀ under a symmetric
/// permutation chosen to shrink the envelope.
#[derive(Clone, Debug)]
pub struct Cholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let identity: Vec<usize> = (0..n).collect();
        let rcm = reverse_cuthill_mckee(a);
        let mut rcm_inv = vec![0; n];
        for (k, &p) in rcm.iter().enumerate() {
            rcm_inv[p] = k;
        }
        let perm = if envelope_size(a, &rcm, &rcm_inv) < envelope_size(a, &identity, &identity) {
            rcm
        } else {
            identity
        };
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }

        let mut first = vec![0; n];
        let mut start = vec![0; n + 1];
        for i in 0..n {
            first[i] = a.row(perm[i]).map(|(j, _)| inv[j]).min().unwrap_or(i).min(i);
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(perm[i]) {
                let j = inv[j];
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[start[i] + j - fi];
                for k in k0..j {
                    s -= data[start[i] + k - fi] * data[start[j] + k - fj];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::SolverBreakdown(format!(
                            "non-positive pivot {s:e} at row {i}"
                        )));
                    }
                    data[start[i] + i - fi] = s.sqrt();
                } else {
                    data[start[i] + j - fi] = s / data[start[j] + j - fj];
                }
            }
        }
        Ok(Cholesky {
            perm,
            first,
            start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

/// Conjugate gradients with Jacobi preconditioning, stopped when
/// ‖r‖₂ ≤ rtol·‖b‖₂.
pub fn pcg_jacobi(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.n;
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(p, q)| p * q).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut best = (dot(&r, &r).sqrt(), x.clone());
    for it in 0..max_iter {
        let rnorm = dot(&r, &r).sqrt();
        if rnorm < best.0 {
            best = (rnorm, x.clone());
        }
        if rnorm <= rtol * bnorm {
            return Ok((x, it));
        }
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverBreakdown(format!("p·Ap = {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // Stagnation at round-off level is accepted; anything worse is a failure.
    if best.0 <= 1e-10 * bnorm {
        Ok((best.1, max_iter))
    } else {
        Err(Error::SolverBreakdown(format!(
            "PCG stalled at relative residual {:e}",
            best.0 / bnorm
        )))
    }
}

/// Reusable solver for one SPD matrix.
#[derive(Clone, Debug)]
pub enum SpdSolver {
    Direct(Cholesky),
    Iterative(CsrMatrix),
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.dim() <= DIRECT_SOLVE_LIMIT {
            Ok(SpdSolver::Direct(Cholesky::factor(a)?))
        } else {
            Ok(SpdSolver::Iterative(a.clone()))
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Direct(c) => Ok(c.solve(b)),
            SpdSolver::Iterative(a) => {
                let max_iter = 10 * a.dim() + 100;
                pcg_jacobi(a, b, None, 1e-15, max_iter).map(|(x, _)| x)
            }
        }
    }
}
