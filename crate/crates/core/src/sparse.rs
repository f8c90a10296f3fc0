//! Compressed sparse row matrices and the few dense vector kernels the
//! solvers need.

use rayon::prelude::*;

use crate::error::{Error, Result};

// Below this many rows a product runs on the calling thread.
const PAR_ROWS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// columns within a row come out sorted.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut trip: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        trip.sort_unstable_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Places square blocks along the diagonal.
    pub fn block_diagonal(blocks: &[CsrMatrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.nrows).sum();
        let m: usize = blocks.iter().map(|b| b.ncols).sum();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(blocks.iter().map(|b| b.nnz()).sum());
        let mut values = Vec::with_capacity(indices.capacity());
        indptr.push(0);
        let mut col_off = 0;
        for b in blocks {
            for i in 0..b.nrows {
                let (cols, vals) = b.row(i);
                indices.extend(cols.iter().map(|c| c + col_off));
                values.extend_from_slice(vals);
                indptr.push(indices.len());
            }
            col_off += b.ncols;
        }
        CsrMatrix {
            nrows: n,
            ncols: m,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.ncols, self.nrows, self.triplets().map(|(i, j, v)| (j, i, v)))
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let kernel = |(i, yi): (usize, &mut f64)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        };
        if self.nrows >= PAR_ROWS {
            y.par_iter_mut().enumerate().with_min_len(256).for_each(kernel);
        } else {
            y.iter_mut().enumerate().for_each(kernel);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Exact structural and numerical symmetry check up to `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        self.triplets()
            .all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol * (1.0 + v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] += v;
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

/// Graph Laplacian `L = D - S` of a symmetric non-negative weight matrix.
/// The diagonal of `S` is ignored.
pub fn laplacian(s: &CsrMatrix) -> Result<CsrMatrix> {
    if s.nrows() != s.ncols() {
        return Err(Error::contract("laplacian input is not square"));
    }
    if !s.is_symmetric(1e-12) {
        return Err(Error::contract("laplacian input is not symmetric"));
    }
    let mut trip = Vec::with_capacity(s.nnz() + s.nrows());
    for i in 0..s.nrows() {
        let (cols, vals) = s.row(i);
        let mut degree = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if v < 0.0 {
                return Err(Error::contract(format!("negative weight {v} at ({i}, {j})")));
            }
            if j != i && v != 0.0 {
                degree += v;
                trip.push((i, j, -v));
            }
        }
        if degree != 0.0 {
            trip.push((i, i, degree));
        }
    }
    Ok(CsrMatrix::from_triplets(s.nrows(), s.ncols(), trip))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}
