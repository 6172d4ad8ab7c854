//! Per-kind sparsifying stencils fitted against the Green's kernel, and the
//! row-supported sparse matrices Q, C and P = Q + Cq assembled from them.
//!
//! The stencil T for a set kind solves min_T || G(points, gc) - T G(beta, gc) ||_F
//! where gc is the complement of the neighborhood gamma. The Gram products are
//! formed from the full-torus autocorrelation of the kernel minus the dense
//! gamma-restricted part, so no complement columns are ever materialized:
//!   G(A, gc) G(B, gc)^T = Corr(A, B) - G(A, gamma) G(B, gamma)^T.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::partition::{Partition, SkeletonSet};
use crate::spectral::GreensKernel;

/// Eigenvalues of the Gram matrix below this times the largest are truncated
/// in the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Least-squares stencil for one set kind and orientation.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub normal_axes: u8,
    /// |points| x |beta| coefficient matrix.
    pub t: DMatrix<f64>,
    /// G(gamma, gamma) in (points, beta) order, shared by all translates.
    pub g_gamma: DMatrix<f64>,
    /// Relative Frobenius residual of the fit (diagnostic).
    pub ls_residual: f64,
}

/// Row-supported sparse matrix: every row of a set shares the column list
/// (points, beta) of its set, stored once per set.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub dim: usize,
    /// Column list per set id, in (points, beta) order.
    pub patterns: Vec<Vec<usize>>,
    /// Pattern id for each row.
    pub row_pattern: Vec<u32>,
    /// Values per row, aligned with the pattern columns.
    pub values: Vec<Vec<f64>>,
}

impl SparseMatrix {
    pub fn row_cols(&self, row: usize) -> &[usize] {
        &self.patterns[self.row_pattern[row] as usize]
    }

    pub fn row_values(&self, row: usize) -> &[f64] {
        &self.values[row]
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.row_cols(r)
                    .iter()
                    .zip(&self.values[r])
                    .map(|(&c, &x)| x * v[c])
                    .sum()
            })
            .collect()
    }

    /// Structural pattern equality with another matrix.
    pub fn same_pattern(&self, other: &SparseMatrix) -> bool {
        self.dim == other.dim
            && self.patterns == other.patterns
            && self.row_pattern == other.row_pattern
    }

    /// Writes (row, col, value) triples in row order.
    pub fn write_coo<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in 0..self.dim {
            for (&c, &v) in self.row_cols(r).iter().zip(&self.values[r]) {
                writeln!(w, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

/// Moore-Penrose pseudoinverse of a symmetric positive semidefinite matrix
/// through its eigendecomposition, truncating below `PINV_CUTOFF * lambda_max`.
fn sym_pinv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if !lambda_max.is_finite() || lambda_max <= 0.0 {
        return Err(Error::DegenerateGram);
    }
    let cutoff = PINV_CUTOFF * lambda_max;
    let inv = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let mut acc = 0.0;
        for k in 0..m.nrows() {
            let lam = eig.eigenvalues[k];
            if lam > cutoff {
                acc += eig.eigenvectors[(i, k)] * eig.eigenvectors[(j, k)] / lam;
            }
        }
        acc
    });
    Ok(inv)
}

/// Correlation submatrix Corr(A, B)(i, j) = c((a_i - b_j) mod n).
fn corr_submatrix(grid: GridSpec, corr: &[f64], rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let a = grid.coords_of(rows[i]);
        let b = grid.coords_of(cols[j]);
        let mut diff = [0usize; 3];
        for ax in 0..grid.d {
            diff[ax] = grid.wrap(a[ax] as isize - b[ax] as isize);
        }
        corr[grid.index_of(&diff)]
    })
}

pub fn compute_stencil(kernel: &GreensKernel, set: &SkeletonSet) -> Result<Stencil> {
    compute_stencil_with_corr(kernel, set, &kernel.autocorrelation())
}

pub fn compute_stencil_with_corr(
    kernel: &GreensKernel,
    set: &SkeletonSet,
    corr: &[f64],
) -> Result<Stencil> {
    let grid = kernel.grid;
    let points = &set.points;
    let beta = &set.beta;
    let ordered: Vec<usize> = points.iter().chain(beta.iter()).copied().collect();

    let g_pg = kernel.submatrix(points, &ordered);
    let g_bg = kernel.submatrix(beta, &ordered);

    // Gram blocks over the gamma complement.
    let b_mat = corr_submatrix(grid, corr, points, beta) - &g_pg * g_bg.transpose();
    let m_mat = corr_submatrix(grid, corr, beta, beta) - &g_bg * g_bg.transpose();
    let g_xx = corr_submatrix(grid, corr, points, points) - &g_pg * g_pg.transpose();

    let m_pinv = sym_pinv(&m_mat)?;
    let t = &b_mat * m_pinv;

    let fit_sq = g_xx.trace() - 2.0 * (&t * b_mat.transpose()).trace()
        + (&t * &m_mat * t.transpose()).trace();
    let denom = g_xx.trace().max(f64::MIN_POSITIVE);
    let ls_residual = (fit_sq.max(0.0) / denom).sqrt();

    let g_gamma = kernel.submatrix(&ordered, &ordered);

    Ok(Stencil { normal_axes: set.normal_axes, t, g_gamma, ls_residual })
}

/// Computes one stencil per kind+orientation class (4 in 2D, 8 in 3D),
/// indexed by the normal-axes bitmask.
pub fn compute_stencils(kernel: &GreensKernel, partition: &Partition) -> Result<Vec<Stencil>> {
    let corr = kernel.autocorrelation();
    let d = partition.grid.d;
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0u8..(1 << d) {
        let representative = partition
            .sets
            .iter()
            .find(|s| s.normal_axes == mask)
            .expect("every orientation class is populated");
        out.push(compute_stencil_with_corr(kernel, representative, &corr)?);
    }
    Ok(out)
}

fn pattern_of(set: &SkeletonSet) -> Vec<usize> {
    set.points.iter().chain(set.beta.iter()).copied().collect()
}

/// Assembles Q: per set, identity on its own points and -T on beta.
pub fn assemble_q(partition: &Partition, stencils: &[Stencil]) -> SparseMatrix {
    let dim = partition.grid.n_total();
    let mut patterns = Vec::with_capacity(partition.sets.len());
    let mut row_pattern = vec![0u32; dim];
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for (sid, set) in partition.sets.iter().enumerate() {
        patterns.push(pattern_of(set));
        let stencil = &stencils[set.normal_axes as usize];
        let np = set.points.len();
        let nb = set.beta.len();
        for (local, &row) in set.points.iter().enumerate() {
            row_pattern[row] = sid as u32;
            let mut vals = vec![0.0; np + nb];
            vals[local] = 1.0;
            for j in 0..nb {
                vals[np + j] = -stencil.t[(local, j)];
            }
            values[row] = vals;
        }
    }
    SparseMatrix { dim, patterns, row_pattern, values }
}

/// Assembles C: per set, [I -T] * G(gamma, gamma); same pattern as Q.
pub fn assemble_c(partition: &Partition, stencils: &[Stencil]) -> SparseMatrix {
    let dim = partition.grid.n_total();
    let mut patterns = Vec::with_capacity(partition.sets.len());
    let mut row_pattern = vec![0u32; dim];
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for (sid, set) in partition.sets.iter().enumerate() {
        patterns.push(pattern_of(set));
        let stencil = &stencils[set.normal_axes as usize];
        let np = set.points.len();
        let width = stencil.g_gamma.ncols();
        for (local, &row) in set.points.iter().enumerate() {
            row_pattern[row] = sid as u32;
            let mut vals = vec![0.0; width];
            for (j, v) in vals.iter_mut().enumerate() {
                let mut acc = stencil.g_gamma[(local, j)];
                for k in 0..set.beta.len() {
                    acc -= stencil.t[(local, k)] * stencil.g_gamma[(np + k, j)];
                }
                *v = acc;
            }
            values[row] = vals;
        }
    }
    SparseMatrix { dim, patterns, row_pattern, values }
}

/// P(j, i) = Q(j, i) + C(j, i) q(i); the pattern is unchanged.
pub fn assemble_p(q_mat: &SparseMatrix, c_mat: &SparseMatrix, q: &[f64]) -> SparseMatrix {
    assert!(q_mat.same_pattern(c_mat), "Q and C must share the pattern");
    assert_eq!(q.len(), q_mat.dim);
    let mut out = q_mat.clone();
    for r in 0..out.dim {
        let cols = &out.patterns[out.row_pattern[r] as usize];
        for (k, &c) in cols.iter().enumerate() {
            out.values[r][k] += c_mat.values[r][k] * q[c];
        }
    }
    out
}
