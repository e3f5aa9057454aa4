//! Compressed sparse row matrices and preconditioned conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed in
    /// their input order after a stable sort by `(row, col)`, so the result
    /// depends only on the triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(col, value)` pairs of row `r`, by increasing column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(i) => self.values[span.start + i],
            Err(_) => 0.0,
        }
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// Submatrix on the given rows and columns; `col_map[c]` is the new
    /// index of column `c`, if kept.
    pub fn select(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> Self {
        let mut t = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(j) = col_map[c] {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(rows.len(), ncols, t)
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.triplets().map(|(r, c, v)| (v - self.get(c, r)).abs()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("conjugate gradients broke down at iteration {iteration}: matrix is not positive definite")]
    Breakdown { iteration: usize },
    #[error("system of size {rows}x{cols} does not match right-hand side of length {rhs}")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||b - Ax|| / ||b||`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess,
/// stopping when `||b - Ax|| <= tol ||b||`.
pub fn cg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome, SolveError> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(SolveError::DimensionMismatch { rows: a.nrows(), cols: a.ncols(), rhs: n });
    }
    let mut x = vec![0.0; n];
    let bnorm = sqrt(dot(b, b));
    if bnorm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, residual: 0.0 });
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(SolveError::Breakdown { iteration: 0 });
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut residual = 1.0;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolveError::Breakdown { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = sqrt(dot(&r, &r)) / bnorm;
        if residual <= tol {
            return Ok(CgOutcome { x, iterations: it, residual });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NotConverged { iterations: max_iter, residual })
}
