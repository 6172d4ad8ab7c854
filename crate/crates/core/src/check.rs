//! Self-check suite: runs the dense oracles against the fast paths on a
//! small grid and reports per-check status. Wired to the `check` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::GridSpec;
use crate::krylov::GmresOptions;
use crate::oracle::{dense_green, dense_solve};
use crate::partition::build_partition;
use crate::precond::solve_problem;
use crate::problem::{gaussian_field, SplitProblem};
use crate::sparsifier::{assemble_c, assemble_q, compute_stencils};
use crate::spectral::{
    apply_green, apply_laplacian, green_kernel, green_symbol, FOUR_PI_SQ, TWO_PI,
};

#[derive(Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckOutcome { name, passed, detail }
    }
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

/// Runs the oracle suite on `grid`. Intended for small grids (n <= 16):
/// several checks build dense N x N matrices.
pub fn run_check(grid: GridSpec, seed: u64) -> Result<Vec<CheckOutcome>> {
    let n_total = grid.n_total();
    // An indefinite shift between the |k|^2 = 1 and |k|^2 = 2 eigenvalues,
    // present on every admissible grid.
    let s = 1.5 * FOUR_PI_SQ;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // G inverts L - s.
    {
        let v: Vec<f64> = (0..n_total).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lv = apply_laplacian(grid, &v)?;
        let shifted: Vec<f64> = lv.iter().zip(&v).map(|(l, x)| l - s * x).collect();
        let back = apply_green(grid, s, &shifted)?;
        let err = v
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        out.push(CheckOutcome::new(
            "green-inverts-shifted-laplacian",
            err < 1e-9,
            format!("max error {err:.3e}"),
        ));
    }

    // Plane waves are eigenvectors of L with eigenvalue 4 pi^2 |k|^2.
    {
        let h = 1.0 / grid.n as f64;
        let wave: Vec<f64> = (0..n_total)
            .map(|i| (TWO_PI * grid.coords_of(i)[0] as f64 * h).cos())
            .collect();
        let lw = apply_laplacian(grid, &wave)?;
        let err = lw
            .iter()
            .zip(&wave)
            .map(|(l, w)| (l - FOUR_PI_SQ * w).abs())
            .fold(0.0f64, f64::max);
        out.push(CheckOutcome::new(
            "plane-wave-eigenvalue",
            err < 1e-9 * FOUR_PI_SQ,
            format!("max error {err:.3e}"),
        ));
    }

    // The materialized kernel matches columns of G applied to unit vectors,
    // and the dense matrix is symmetric.
    {
        let g = dense_green(grid, s)?;
        let mut e = vec![0.0; n_total];
        let mut col_err = 0.0f64;
        for j in [0, n_total / 2, n_total - 1] {
            e[j] = 1.0;
            let col = apply_green(grid, s, &e)?;
            e[j] = 0.0;
            for i in 0..n_total {
                col_err = col_err.max((g[(i, j)] - col[i]).abs());
            }
        }
        let sym_err = (g.clone() - g.transpose()).amax();
        out.push(CheckOutcome::new(
            "dense-green-matches-kernel",
            col_err < 1e-10 && sym_err < 1e-10,
            format!("column error {col_err:.3e}, asymmetry {sym_err:.3e}"),
        ));
    }

    // Partition covers the grid exactly once.
    {
        let part = build_partition(grid)?;
        let total: usize = part.sets.iter().map(|s| s.points.len()).sum();
        let owners_ok = part.owner.len() == n_total;
        out.push(CheckOutcome::new(
            "partition-covers-grid",
            total == n_total && owners_ok,
            format!("{} sets, {} points", part.sets.len(), total),
        ));
    }

    // C equals QG on the sparsity pattern.
    {
        let part = build_partition(grid)?;
        let kernel = green_kernel(grid, s)?;
        let stencils = compute_stencils(&kernel, &part)?;
        let q_mat = assemble_q(&part, &stencils);
        let c_mat = assemble_c(&part, &stencils);
        let g = dense_green(grid, s)?;
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for r in 0..n_total {
            for (&c, &cv) in c_mat.row_cols(r).iter().zip(c_mat.row_values(r)) {
                let mut qg = 0.0;
                for (&k, &qv) in q_mat.row_cols(r).iter().zip(q_mat.row_values(r)) {
                    qg += qv * g[(k, c)];
                }
                err = err.max((cv - qg).abs());
                scale = scale.max(cv.abs());
            }
        }
        out.push(CheckOutcome::new(
            "c-equals-qg-on-pattern",
            err < 1e-10 * scale.max(1.0),
            format!("max deviation {err:.3e}"),
        ));
    }

    // Full pipeline against the dense direct solve.
    {
        let center = [0.5, 0.5, 0.5];
        let q = gaussian_field(grid, &[center], 0.8 * s.abs(), 0.15);
        let mut f = vec![0.0; n_total];
        f[grid.center()] = 1.0;
        let problem = SplitProblem { grid, s, q: q.clone(), f: f.clone(), label: "check".into() };
        let opts = GmresOptions { tol: 1e-10, max_iter: 200 };
        match (solve_problem(&problem, opts), dense_solve(grid, s, &q, &f)) {
            (Ok(sol), Ok(oracle)) => {
                let norm = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
                let diff = sol
                    .u
                    .iter()
                    .zip(&oracle)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let rel = diff / norm.max(f64::MIN_POSITIVE);
                out.push(CheckOutcome::new(
                    "pipeline-matches-dense-solve",
                    rel < 1e-7,
                    format!("relative difference {rel:.3e}, n_p = {}", sol.report.iterations),
                ));
            }
            (a, b) => {
                out.push(CheckOutcome::new(
                    "pipeline-matches-dense-solve",
                    false,
                    format!("pipeline: {:?}, oracle: {:?}", a.err(), b.err()),
                ));
            }
        }
    }

    // Negative test: an exactly resonant shift must be rejected.
    {
        let resonant = green_symbol(grid, FOUR_PI_SQ);
        out.push(CheckOutcome::new(
            "resonant-shift-rejected",
            resonant.is_err(),
            match resonant {
                Err(e) => format!("rejected as expected: {e}"),
                Ok(_) => "accepted a resonant shift".into(),
            },
        ));
    }

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_reference_grid() {
        let grid = GridSpec::new(2, 12, 3).unwrap();
        let outcomes = run_check(grid, 0).unwrap();
        for o in &outcomes {
            assert!(o.passed, "{} failed: {}", o.name, o.detail);
        }
        assert_eq!(outcomes.len(), 7);
    }

    #[test]
    fn suite_passes_on_1d_smoke_grid() {
        let grid = GridSpec::new(1, 8, 2).unwrap();
        let outcomes = run_check(grid, 0).unwrap();
        for o in &outcomes {
            assert!(o.passed, "{} failed: {}", o.name, o.detail);
        }
    }
}
