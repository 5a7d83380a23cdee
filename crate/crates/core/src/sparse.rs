//! Deterministic sparse assembly and a sparse Cholesky solver wrapper.
//!
//! Element contributions are evaluated in parallel but merged in a fixed
//! order, so assembled matrices are bit-identical for any thread count.

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::parallel;

/// One stiffness contribution: (row, col, value).
pub type Entry = (usize, usize, f64);

/// Assembles an `nrows` x `ncols` CSC matrix from per-element entry lists.
/// `elem` is evaluated in parallel; duplicate positions are summed in
/// element order.
pub fn assemble_csc(
    nrows: usize,
    ncols: usize,
    n_elems: usize,
    elem: impl Fn(usize) -> Vec<Entry> + Sync + Send,
) -> Result<SparseColMat<usize, f64>> {
    let per: Vec<Vec<Entry>> = parallel::map_indexed(n_elems, elem);
    let mut entries: Vec<Entry> = Vec::with_capacity(per.iter().map(Vec::len).sum());
    for list in per {
        entries.extend(list);
    }
    merge_entries(nrows, ncols, entries)
}

/// Sorts entries by (col, row) with a stable sort and sums duplicates
/// left to right, then builds the CSC matrix.
pub fn merge_entries(nrows: usize, ncols: usize, mut entries: Vec<Entry>) -> Result<SparseColMat<usize, f64>> {
    for &(r, c, _) in &entries {
        if r >= nrows || c >= ncols {
            return Err(Error::InvalidModel { reason: format!("matrix entry ({r},{c}) outside {nrows}x{ncols}") });
        }
    }
    parallel::sort_by_key(&mut entries, |&(r, c, _)| (c, r));
    let mut merged: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match merged.last_mut() {
            Some(last) if last.row == r && last.col == c => last.val += v,
            _ => merged.push(Triplet::new(r, c, v)),
        }
    }
    SparseColMat::try_new_from_triplets(nrows, ncols, &merged)
        .map_err(|e| Error::InvalidModel { reason: format!("sparse build failed: {e:?}") })
}

pub fn matvec(mat: &SparseColMat<usize, f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), mat.ncols());
    let col_ptr = mat.col_ptr();
    let row_idx = mat.row_idx();
    let val = mat.val();
    let mut y = vec![0.0; mat.nrows()];
    for j in 0..mat.ncols() {
        let xj = x[j];
        if xj != 0.0 {
            for k in col_ptr[j]..col_ptr[j + 1] {
                y[row_idx[k]] += val[k] * xj;
            }
        }
    }
    y
}

pub fn mean_diagonal(mat: &SparseColMat<usize, f64>) -> f64 {
    let n = mat.nrows().min(mat.ncols());
    if n == 0 {
        return 0.0;
    }
    let col_ptr = mat.col_ptr();
    let row_idx = mat.row_idx();
    let val = mat.val();
    let mut sum = 0.0;
    for j in 0..n {
        for k in col_ptr[j]..col_ptr[j + 1] {
            if row_idx[k] == j {
                sum += val[k];
            }
        }
    }
    sum / n as f64
}

/// Sparse Cholesky factorisation of a symmetric positive definite matrix.
pub struct SpdSolver {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdSolver {
    pub fn new(mat: &SparseColMat<usize, f64>) -> Result<Self> {
        let n = mat.nrows();
        if n != mat.ncols() {
            return Err(Error::InvalidModel { reason: "solver needs a square matrix".into() });
        }
        let llt = mat
            .sp_cholesky(faer::Side::Lower)
            .map_err(|_| Error::Singular { hint: "stiffness matrix is not positive definite".into() })?;
        Ok(SpdSolver { n, llt })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let b = faer::Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = faer::prelude::Solve::solve(&self.llt, &b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves for several right-hand sides given column-wise.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if rhs.is_empty() {
            return Vec::new();
        }
        let b = faer::Mat::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        let x = faer::prelude::Solve::solve(&self.llt, &b);
        (0..rhs.len()).map(|j| (0..self.n).map(|i| x[(i, j)]).collect()).collect()
    }
}
