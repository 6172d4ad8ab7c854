//! Nested-dissection sparse LU of P with dense frontal kernels.
//!
//! The symbolic phase walks the elimination groups of the separator tree in
//! postorder over the symmetrized pattern P union P^T, forming one front per
//! group: the group's own indices plus every uneliminated connection, with
//! child contribution blocks absorbed by the earliest group that owns one of
//! their vertices. The numeric phase repeats the walk with values, using
//! partial pivoting confined to each group's own rows, and emits flat sparse
//! L and U factors for repeated solves.

use crate::error::{Error, Result};
use crate::partition::EliminationTree;
use crate::sparsifier::SparseMatrix;

const PIVOT_FLOOR: f64 = 1e-14;

/// Panel width for the blocked front elimination.
const PANEL: usize = 48;

#[derive(Debug, Clone)]
pub struct FrontPlan {
    /// Front columns: `npiv` own indices first (elimination order), then the
    /// boundary sorted by elimination position.
    pub cols: Vec<usize>,
    pub npiv: usize,
    /// Assembly-tree parent: the group absorbing this front's contribution.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SymbolicPlan {
    pub fronts: Vec<FrontPlan>,
    /// Group id per index.
    pub group_of: Vec<u32>,
    /// Elimination position per index.
    pub col_pos: Vec<usize>,
    /// Index at each elimination position.
    pub pos_col: Vec<usize>,
    /// Predicted factor entries (L + U, diagonal counted once).
    pub predicted_fill: usize,
    pub peak_front: usize,
}

pub fn symbolic_factor(pattern: &SparseMatrix, tree: &EliminationTree) -> SymbolicPlan {
    let n = pattern.dim;
    let m = tree.groups.len();

    let mut group_of = vec![u32::MAX; n];
    let mut col_pos = vec![0usize; n];
    let mut pos_col = vec![0usize; n];
    let mut pos = 0;
    for (gi, g) in tree.groups.iter().enumerate() {
        for &idx in &g.indices {
            group_of[idx] = gi as u32;
            col_pos[idx] = pos;
            pos_col[pos] = idx;
            pos += 1;
        }
    }
    assert_eq!(pos, n, "tree does not cover all indices");
    assert!(group_of.iter().all(|&g| g != u32::MAX));

    // Reverse adjacency for the transposed pattern.
    let mut rows_of_col: Vec<Vec<u32>> = vec![Vec::new(); n];
    for r in 0..n {
        for &c in pattern.row_cols(r) {
            rows_of_col[c].push(r as u32);
        }
    }

    let mut fronts: Vec<FrontPlan> = Vec::with_capacity(m);
    let mut pending: Vec<Vec<Vec<usize>>> = vec![Vec::new(); m];
    let mut marked = vec![false; n];
    let mut predicted_fill = 0usize;
    let mut peak_front = 0usize;

    for (gi, group) in tree.groups.iter().enumerate() {
        let mut front = group.indices.clone();
        for &v in &front {
            marked[v] = true;
        }
        let npiv = front.len();
        for i in 0..npiv {
            let v = front[i];
            for &c in pattern.row_cols(v) {
                if group_of[c] as usize > gi && !marked[c] {
                    marked[c] = true;
                    front.push(c);
                }
            }
            for &r in &rows_of_col[v] {
                let r = r as usize;
                if group_of[r] as usize > gi && !marked[r] {
                    marked[r] = true;
                    front.push(r);
                }
            }
        }
        for contrib in pending[gi].drain(..) {
            for v in contrib {
                if group_of[v] as usize > gi && !marked[v] {
                    marked[v] = true;
                    front.push(v);
                }
            }
        }
        front[npiv..].sort_unstable_by_key(|&v| col_pos[v]);
        for &v in &front {
            marked[v] = false;
        }

        let f = front.len();
        peak_front = peak_front.max(f);
        predicted_fill += npiv * (2 * f - npiv); // k U-rows + k L-columns, diagonal once
        let boundary: Vec<usize> = front[npiv..].to_vec();
        let parent = boundary
            .iter()
            .map(|&v| group_of[v] as usize)
            .min();
        if let Some(p) = parent {
            pending[p].push(boundary);
        }
        fronts.push(FrontPlan { cols: front, npiv, parent });
    }

    SymbolicPlan { fronts, group_of, col_pos, pos_col, predicted_fill, peak_front }
}

/// Sparse LU factors in elimination order, plus the pivot-row permutation.
#[derive(Debug)]
pub struct Factorization {
    pub n: usize,
    /// Original row chosen as pivot at each elimination step.
    pub pivot_row: Vec<usize>,
    /// Column index (original) eliminated at each step.
    pub pos_col: Vec<usize>,
    /// L entries per step: (original row id, multiplier), rows below the pivot.
    l_rows: Vec<Vec<(u32, f64)>>,
    /// U entries per step: (elimination position > step, value).
    u_cols: Vec<Vec<(u32, f64)>>,
    u_diag: Vec<f64>,
    pub factor_nnz: usize,
    pub peak_front: usize,
}

struct Contribution {
    ids: Vec<usize>,
    block: Vec<f64>,
}

pub fn numeric_factor(p_mat: &SparseMatrix, plan: &SymbolicPlan) -> Result<Factorization> {
    let n = p_mat.dim;
    assert_eq!(plan.group_of.len(), n);

    // Column-wise view of P for assembling rows owned by later groups.
    let mut col_entries: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for r in 0..n {
        for (&c, &v) in p_mat.row_cols(r).iter().zip(p_mat.row_values(r)) {
            col_entries[c].push((r as u32, v));
        }
    }

    let mut pivot_row = vec![0usize; n];
    let mut l_rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut u_cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    let mut u_diag = vec![0.0; n];
    let mut factor_nnz = 0usize;

    let mut pending: Vec<Vec<Contribution>> = (0..plan.fronts.len()).map(|_| Vec::new()).collect();
    let mut local_of = vec![usize::MAX; n];

    for (gi, fp) in plan.fronts.iter().enumerate() {
        let f = fp.cols.len();
        let k = fp.npiv;
        for (li, &c) in fp.cols.iter().enumerate() {
            local_of[c] = li;
        }
        let mut front = vec![0.0f64; f * f];

        // Original entries whose first-eliminated endpoint is this group.
        for li in 0..k {
            let r = fp.cols[li];
            for (&c, &v) in p_mat.row_cols(r).iter().zip(p_mat.row_values(r)) {
                if plan.group_of[c] as usize >= gi {
                    front[li * f + local_of[c]] += v;
                }
            }
        }
        for li in 0..k {
            let c = fp.cols[li];
            for &(r, v) in &col_entries[c] {
                if plan.group_of[r as usize] as usize > gi {
                    front[local_of[r as usize] * f + li] += v;
                }
            }
        }
        for contrib in pending[gi].drain(..) {
            let locs: Vec<usize> = contrib.ids.iter().map(|&id| local_of[id]).collect();
            let cf = contrib.ids.len();
            for (ri, &lr) in locs.iter().enumerate() {
                debug_assert!(lr != usize::MAX);
                let row = &contrib.block[ri * cf..(ri + 1) * cf];
                for (ci, &lc) in locs.iter().enumerate() {
                    front[lr * f + lc] += row[ci];
                }
            }
        }

        let front_max = front.iter().fold(0.0f64, |m, &x| m.max(x.abs()));

        // Row ids track pivoting inside the group's own rows. Elimination is
        // blocked: scalar panel factorizations feed rank-NB trailing updates
        // done as dense matrix products, which keeps large fronts fast.
        let mut row_ids: Vec<usize> = fp.cols.clone();
        let mut j = 0;
        while j < k {
            let jb = PANEL.min(k - j);
            let je = j + jb;
            // Panel: columns j..je over all remaining rows, pivoting
            // restricted to the group's own rows; ties keep the smallest
            // row index.
            for t in j..je {
                let mut best = t;
                let mut best_val = front[t * f + t].abs();
                for r in (t + 1)..k {
                    let v = front[r * f + t].abs();
                    if v > best_val {
                        best = r;
                        best_val = v;
                    }
                }
                if best_val < PIVOT_FLOOR * front_max.max(f64::MIN_POSITIVE) {
                    return Err(Error::SingularMatrix { front: gi });
                }
                if best != t {
                    row_ids.swap(t, best);
                    for c in 0..f {
                        front.swap(t * f + c, best * f + c);
                    }
                }
                let piv = front[t * f + t];
                for r in (t + 1)..f {
                    let m = front[r * f + t] / piv;
                    if m != 0.0 {
                        front[r * f + t] = m;
                        let (pivot_slice, rest) = front.split_at_mut((t + 1) * f);
                        let prow = &pivot_slice[t * f..];
                        let rrow = &mut rest[(r - t - 1) * f..(r - t) * f];
                        for c in (t + 1)..je {
                            rrow[c] -= m * prow[c];
                        }
                    }
                }
            }
            if je < f {
                // Finish the U rows of the panel: apply the unit-lower panel
                // block to columns right of it.
                for t in (j + 1)..je {
                    for u in j..t {
                        let m = front[t * f + u];
                        if m != 0.0 {
                            let (upper, lower) = front.split_at_mut(t * f);
                            let urow = &upper[u * f..(u + 1) * f];
                            let trow = &mut lower[..f];
                            for c in je..f {
                                trow[c] -= m * urow[c];
                            }
                        }
                    }
                }
                // Trailing Schur update: A22 -= L21 * U12 for this panel.
                let trail = f - je;
                let mut l21 = Vec::with_capacity(trail * jb);
                for r in je..f {
                    l21.extend_from_slice(&front[r * f + j..r * f + je]);
                }
                let mut u12 = Vec::with_capacity(jb * trail);
                for r in j..je {
                    u12.extend_from_slice(&front[r * f + je..r * f + f]);
                }
                unsafe {
                    matrixmultiply::dgemm(
                        trail,
                        jb,
                        trail,
                        -1.0,
                        l21.as_ptr(),
                        jb as isize,
                        1,
                        u12.as_ptr(),
                        trail as isize,
                        1,
                        1.0,
                        front.as_mut_ptr().add(je * f + je),
                        f as isize,
                        1,
                    );
                }
            }
            j = je;
        }

        // Record the factors for this group's steps.
        let base = plan.col_pos[fp.cols[0]];
        for t in 0..k {
            let step = base + t;
            debug_assert_eq!(plan.pos_col[step], fp.cols[t]);
            pivot_row[step] = row_ids[t];
            u_diag[step] = front[t * f + t];
            let mut urow = Vec::new();
            for c in (t + 1)..f {
                let v = front[t * f + c];
                if v != 0.0 {
                    urow.push((plan.col_pos[fp.cols[c]] as u32, v));
                }
            }
            let mut lrow = Vec::new();
            for r in (t + 1)..f {
                let v = front[r * f + t];
                if v != 0.0 {
                    lrow.push((row_ids[r] as u32, v));
                }
            }
            factor_nnz += 1 + urow.len() + lrow.len();
            u_cols[step] = urow;
            l_rows[step] = lrow;
        }

        if let Some(parent) = fp.parent {
            let ids: Vec<usize> = fp.cols[k..].to_vec();
            let bf = f - k;
            let mut block = vec![0.0f64; bf * bf];
            for r in 0..bf {
                for c in 0..bf {
                    block[r * bf + c] = front[(k + r) * f + (k + c)];
                }
            }
            pending[parent].push(Contribution { ids, block });
        } else {
            debug_assert_eq!(k, f, "root front must be fully eliminated");
        }

        for &c in &fp.cols {
            local_of[c] = usize::MAX;
        }
    }

    Ok(Factorization {
        n,
        pivot_row,
        pos_col: plan.pos_col.clone(),
        l_rows,
        u_cols,
        u_diag,
        factor_nnz,
        peak_front: plan.peak_front,
    })
}

impl Factorization {
    /// Solves P x = y and polishes the result with one step of iterative
    /// refinement against the assembled matrix, which keeps the backward
    /// error near round-off even with large fill.
    pub fn solve_refined(&self, p: &SparseMatrix, y: &[f64]) -> Vec<f64> {
        let mut x = self.solve(y);
        let px = p.matvec(&x);
        let r: Vec<f64> = y.iter().zip(&px).map(|(a, b)| a - b).collect();
        let dx = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        x
    }

    /// Solves P x = y by forward and backward substitution on the factors.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        let mut work = y.to_vec();
        let mut z = vec![0.0; self.n];
        for s in 0..self.n {
            let val = work[self.pivot_row[s]];
            z[s] = val;
            if val != 0.0 {
                for &(r, m) in &self.l_rows[s] {
                    work[r as usize] -= m * val;
                }
            }
        }
        for s in (0..self.n).rev() {
            let mut acc = z[s];
            for &(c, v) in &self.u_cols[s] {
                acc -= v * z[c as usize];
            }
            z[s] = acc / self.u_diag[s];
        }
        let mut x = vec![0.0; self.n];
        for s in 0..self.n {
            x[self.pos_col[s]] = z[s];
        }
        x
    }
}
