//! Top-level run modes behind the CLI: single solves and benchmark sweeps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{Equation, RunConfig};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::krylov::GmresOptions;
use crate::precond::{solve_with, Preconditioner};
use crate::problem::build_problem;
use crate::report::{write_field_file, write_table_file, FieldKind, ResultRow};

fn median5_apply_seconds(pc: &Preconditioner) -> f64 {
    let n = pc.grid.n_total();
    let v: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin()).collect();
    let mut samples: Vec<f64> = (0..5)
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(pc.apply(&v));
            t0.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[2]
}

fn row_identifier(cfg: &RunConfig) -> f64 {
    let media = cfg.media.as_ref().expect("resolved config");
    match cfg.equation {
        Equation::Helmholtz => media.omega_over_2pi.expect("resolved config"),
        Equation::Schrodinger => media.energy,
    }
}

fn solve_one(cfg: &RunConfig, grid: GridSpec) -> Result<(ResultRow, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let media = cfg.media.as_ref().expect("resolved config");
    let problem = build_problem(grid, media)?;

    let t0 = Instant::now();
    let pc = Preconditioner::build(grid, problem.s, &problem.q)?;
    let t_s = t0.elapsed().as_secs_f64();
    let t_a = median5_apply_seconds(&pc);

    let opts = GmresOptions { tol: cfg.tol, max_iter: cfg.max_iter };
    let t0 = Instant::now();
    let (u, report) = solve_with(&pc, &problem, opts)?;
    let t_p = t0.elapsed().as_secs_f64();

    let row = ResultRow {
        freq: row_identifier(cfg),
        n_total: grid.n_total(),
        b: grid.b,
        t_s,
        t_a,
        n_p: report.iterations,
        t_p,
        true_residual: report.true_residual,
        max_ls_residual: pc.stats.max_ls_residual,
        p_nnz: pc.stats.p_nnz,
        factor_nnz: pc.stats.factor_nnz,
        peak_front: pc.stats.peak_front,
        seed: media.seed,
        status: "ok".into(),
    };
    Ok((row, u, problem.q, problem.f))
}

fn failed_row(cfg: &RunConfig, grid: GridSpec, err: &Error) -> ResultRow {
    ResultRow {
        freq: row_identifier(cfg),
        n_total: grid.n_total(),
        b: grid.b,
        t_s: 0.0,
        t_a: 0.0,
        n_p: 0,
        t_p: 0.0,
        true_residual: f64::NAN,
        max_ls_residual: f64::NAN,
        p_nnz: 0,
        factor_nnz: 0,
        peak_front: 0,
        seed: cfg.media.as_ref().map(|m| m.seed).unwrap_or(0),
        status: format!("failed: {err}").replace(',', ";"),
    }
}

fn dump_path(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    base.with_file_name(format!("{stem}_{suffix}.wpf"))
}

/// Runs a single solve. Writes a one-row table to `out` if given, plus field
/// dumps of the solution, medium term, and right-hand side on request.
pub fn run_solve(cfg: &RunConfig, out: Option<&Path>, dump_fields: bool) -> Result<ResultRow> {
    let grid = cfg.grid();
    let (row, u, q, f) = solve_one(cfg, grid)?;
    if let Some(path) = out {
        write_table_file(path, &cfg.to_toml(), std::slice::from_ref(&row))?;
        if dump_fields {
            write_field_file(&dump_path(path, "u"), grid, FieldKind::Solution, &u)?;
            write_field_file(&dump_path(path, "q"), grid, FieldKind::Medium, &q)?;
            write_field_file(&dump_path(path, "f"), grid, FieldKind::Rhs, &f)?;
        }
    }
    Ok(row)
}

/// Runs one row per (n, b) in the sweep list. For Helmholtz the wave number
/// tracks the grid as omega/2pi = n/3 (three points per wavelength). Row
/// failures are recorded in the status column and the sweep continues.
pub fn run_sweep(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<ResultRow>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep mode requires a [sweep] section".into()))?
        .clone();
    let mut rows = Vec::new();
    for &(n, b) in &sweep.sizes {
        let mut row_cfg = cfg.clone();
        row_cfg.n = n;
        row_cfg.b = Some(b);
        if row_cfg.equation == Equation::Helmholtz {
            if let Some(media) = row_cfg.media.as_mut() {
                media.omega_over_2pi = Some(n as f64 / 3.0);
            }
        }
        let grid = row_cfg.grid();
        let row = match solve_one(&row_cfg, grid) {
            Ok((row, _, _, _)) => row,
            Err(err) => failed_row(&row_cfg, grid, &err),
        };
        rows.push(row);
    }
    if let Some(path) = out {
        write_table_file(path, &cfg.to_toml(), &rows)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn helmholtz_cfg(n: usize, b: usize) -> RunConfig {
        let mut cfg: RunConfig = toml::from_str(&format!(
            "equation = \"helmholtz\"\nd = 2\nn = {n}\nb = {b}\n"
        ))
        .unwrap();
        cfg.resolve().unwrap();
        cfg
    }

    #[test]
    fn solve_produces_sane_row() {
        let cfg = helmholtz_cfg(24, 3);
        let row = run_solve(&cfg, None, false).unwrap();
        assert_eq!(row.n_total, 576);
        assert_eq!(row.b, 3);
        assert!(row.n_p >= 1);
        assert!(row.t_s > 0.0 && row.t_a > 0.0 && row.t_p > 0.0);
        assert_eq!(row.status, "ok");
        assert!((row.freq - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_reruns_deterministically() {
        let mut cfg = helmholtz_cfg(24, 3);
        cfg.sweep = Some(crate::config::SweepConfig {
            sizes: vec![(12, 3), (24, 3)],
            parallel: false,
        });
        let rows1 = run_sweep(&cfg, None).unwrap();
        let rows2 = run_sweep(&cfg, None).unwrap();
        assert_eq!(rows1.len(), 2);
        let np1: Vec<usize> = rows1.iter().map(|r| r.n_p).collect();
        let np2: Vec<usize> = rows2.iter().map(|r| r.n_p).collect();
        assert_eq!(np1, np2);
        assert!((rows1[0].freq - 4.0).abs() < 1e-12);
        assert!((rows1[1].freq - 8.0).abs() < 1e-12);
    }

    #[test]
    fn empty_sweep_is_empty_table() {
        let mut cfg = helmholtz_cfg(24, 3);
        cfg.sweep = Some(crate::config::SweepConfig { sizes: vec![], parallel: false });
        let rows = run_sweep(&cfg, None).unwrap();
        assert!(rows.is_empty());
    }
}
