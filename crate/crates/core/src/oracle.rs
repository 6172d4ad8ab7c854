//! Dense reference implementations for small grids. Everything here is
//! O(N^2) or worse and exists only to cross-check the fast paths.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::grid::GridSpec;
use crate::spectral::{apply_laplacian, green_kernel};

/// Dense Laplacian matrix, built column by column from the spectral apply.
pub fn dense_laplacian(grid: GridSpec) -> Result<DMatrix<f64>> {
    let n_total = grid.n_total();
    let mut m = DMatrix::zeros(n_total, n_total);
    let mut e = vec![0.0; n_total];
    for j in 0..n_total {
        e[j] = 1.0;
        let col = apply_laplacian(grid, &e)?;
        e[j] = 0.0;
        for i in 0..n_total {
            m[(i, j)] = col[i];
        }
    }
    Ok(m)
}

/// Dense Green's matrix from the translation-invariant kernel.
pub fn dense_green(grid: GridSpec, s: f64) -> Result<DMatrix<f64>> {
    let kernel = green_kernel(grid, s)?;
    let all: Vec<usize> = (0..grid.n_total()).collect();
    Ok(kernel.submatrix(&all, &all))
}

/// Solves (I + G diag(q)) u = G f directly. The oracle for the whole
/// preconditioned iteration.
pub fn dense_solve(grid: GridSpec, s: f64, q: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let n_total = grid.n_total();
    let g = dense_green(grid, s)?;
    let mut a = DMatrix::identity(n_total, n_total);
    for i in 0..n_total {
        for j in 0..n_total {
            a[(i, j)] += g[(i, j)] * q[j];
        }
    }
    let rhs = &g * DVector::from_column_slice(f);
    let u = a.lu().solve(&rhs).expect("dense oracle system is nonsingular");
    Ok(u.as_slice().to_vec())
}
