//! Left-preconditioned GMRES with full orthogonalization.
//!
//! Restarts are deliberately absent: the preconditioned iteration counts we
//! care about are small, so a full Krylov basis with modified Gram-Schmidt
//! (plus one conditional reorthogonalization pass) is cheaper than tuning a
//! restart length, and the convergence history stays monotone.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Drop below this fraction of the pre-orthogonalization norm triggers a
/// second Gram-Schmidt pass.
const REORTH_THRESHOLD: f64 = 1e-3;
/// Basis vector norm below this is a happy breakdown: the Krylov space is
/// exhausted and the current iterate is exact in it.
const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub iterations: usize,
    /// Preconditioned relative residual after each iteration, starting with
    /// the initial 1.0.
    pub residual_history: Vec<f64>,
    /// Unpreconditioned relative residual of the returned iterate.
    pub true_residual: f64,
    pub t_apply: Duration,
    pub t_total: Duration,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { tol: 1e-6, max_iter: 200 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves A x = b with left preconditioning M^{-1}: GMRES runs on
/// M^{-1} A x = M^{-1} b. `apply_a` and `apply_m` map a vector to a new one.
///
/// On convergence returns the iterate and a report. On stagnation past
/// `max_iter` returns `MaxIterExceeded` carrying the best iterate so the
/// caller can still inspect or dump it.
pub fn gmres<A, M>(
    apply_a: A,
    apply_m: M,
    b: &[f64],
    opts: GmresOptions,
) -> Result<(Vec<f64>, IterationReport)>
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let t_start = Instant::now();
    let mut t_apply = Duration::ZERO;

    let t0 = Instant::now();
    let r0 = apply_m(b);
    t_apply += t0.elapsed();
    let beta = norm(&r0);
    let mut history = vec![1.0];

    if beta == 0.0 {
        let report = IterationReport {
            iterations: 0,
            residual_history: history,
            true_residual: 0.0,
            t_apply,
            t_total: t_start.elapsed(),
            converged: true,
        };
        return Ok((vec![0.0; n], report));
    }

    let max_iter = opts.max_iter.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter + 1);
    basis.push(r0.iter().map(|x| x / beta).collect());
    // Hessenberg columns after Givens rotations, plus the rotation pairs and
    // the rotated rhs g.
    let mut h_cols: Vec<Vec<f64>> = Vec::with_capacity(max_iter);
    let mut givens: Vec<(f64, f64)> = Vec::with_capacity(max_iter);
    let mut g = vec![beta];
    let mut converged = false;
    let mut iterations = 0;

    for j in 0..max_iter {
        let t0 = Instant::now();
        let aw = apply_a(&basis[j]);
        let mut w = apply_m(&aw);
        t_apply += t0.elapsed();

        let norm_before = norm(&w);
        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            h[i] = hij;
            axpy(-hij, v, &mut w);
        }
        if norm(&w) < REORTH_THRESHOLD * norm_before {
            for (i, v) in basis.iter().enumerate() {
                let corr = dot(&w, v);
                h[i] += corr;
                axpy(-corr, v, &mut w);
            }
        }
        let wnorm = norm(&w);
        h[j + 1] = wnorm;

        for (i, &(c, s)) in givens.iter().enumerate() {
            let t = c * h[i] + s * h[i + 1];
            h[i + 1] = -s * h[i] + c * h[i + 1];
            h[i] = t;
        }
        let (c, s) = {
            let denom = (h[j] * h[j] + h[j + 1] * h[j + 1]).sqrt();
            if denom == 0.0 { (1.0, 0.0) } else { (h[j] / denom, h[j + 1] / denom) }
        };
        givens.push((c, s));
        h[j] = c * h[j] + s * h[j + 1];
        h[j + 1] = 0.0;
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);
        h_cols.push(h);

        iterations = j + 1;
        let rel = g[j + 1].abs() / beta;
        history.push(rel);

        let breakdown = wnorm < BREAKDOWN_TOL * beta.max(1.0);
        if rel <= opts.tol || breakdown {
            converged = true;
            break;
        }
        if j + 1 < max_iter {
            basis.push(w.iter().map(|x| x / wnorm).collect());
        }
    }

    // Back substitution on the triangularized Hessenberg system.
    let m = iterations;
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for k in (i + 1)..m {
            acc -= h_cols[k][i] * y[k];
        }
        y[i] = acc / h_cols[i][i];
    }
    let mut x = vec![0.0; n];
    for (k, yk) in y.iter().enumerate() {
        axpy(*yk, &basis[k], &mut x);
    }

    let ax = apply_a(&x);
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let true_residual =
        norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;

    let report = IterationReport {
        iterations,
        residual_history: history,
        true_residual,
        t_apply,
        t_total: t_start.elapsed(),
        converged,
    };
    if converged {
        Ok((x, report))
    } else {
        Err(Error::MaxIterExceeded {
            iterations,
            residual: *report.residual_history.last().unwrap(),
            best: x,
            report: Box::new(report),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_apply(a: &nalgebra::DMatrix<f64>) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
        move |v| {
            let x = nalgebra::DVector::from_column_slice(v);
            (a * x).as_slice().to_vec()
        }
    }

    #[test]
    fn identity_converges_immediately() {
        let b = vec![1.0, -2.0, 3.0];
        let (x, rep) = gmres(|v| v.to_vec(), |v| v.to_vec(), &b, GmresOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let b = vec![0.0; 4];
        let (x, rep) = gmres(|v| v.to_vec(), |v| v.to_vec(), &b, GmresOptions::default()).unwrap();
        assert_eq!(x, vec![0.0; 4]);
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
    }

    #[test]
    fn random_dense_system_matches_lu() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        for i in 0..n {
            a[(i, i)] += 4.0; // diagonally dominant enough to be well posed
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let opts = GmresOptions { tol: 1e-12, max_iter: 60 };
        let (x, rep) = gmres(dense_apply(&a), |v| v.to_vec(), &b, opts).unwrap();
        assert!(rep.converged);
        let oracle = a
            .clone()
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-8);
        }
        assert!(rep.true_residual < 1e-10);
    }

    #[test]
    fn residual_history_is_monotone_nonincreasing() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        for i in 0..n {
            a[(i, i)] += 2.0;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let opts = GmresOptions { tol: 1e-10, max_iter: 40 };
        let (_, rep) = gmres(dense_apply(&a), |v| v.to_vec(), &b, opts).unwrap();
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-14);
        }
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let n = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        for i in 0..n {
            a[(i, i)] += 5.0;
        }
        let inv = a.clone().try_inverse().unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, rep) =
            gmres(dense_apply(&a), dense_apply(&inv), &b, GmresOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        let oracle = a
            .clone()
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn max_iter_exceeded_carries_best_iterate() {
        // A rotation-like matrix that GMRES cannot crack in 2 of 6 dims.
        let n = 6;
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, (i + 1) % n)] = 1.0; // circular shift: needs n iterations
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let opts = GmresOptions { tol: 1e-12, max_iter: 3 };
        match gmres(dense_apply(&a), |v| v.to_vec(), &b, opts) {
            Err(Error::MaxIterExceeded { iterations, residual, best, report }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
                assert_eq!(best.len(), n);
                assert!(!report.converged);
                assert_eq!(report.residual_history.len(), 4);
            }
            other => panic!("expected MaxIterExceeded, got {other:?}"),
        }
    }

    #[test]
    fn happy_breakdown_on_low_degree_rhs() {
        // b is an eigenvector: Krylov space is one dimensional.
        let a = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            2.0, 2.0, 2.0, 2.0,
        ]));
        let b = vec![1.0, 1.0, 1.0, 1.0];
        let (x, rep) = gmres(dense_apply(&a), |v| v.to_vec(), &b, GmresOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        for xi in &x {
            assert!((xi - 0.5).abs() < 1e-12);
        }
    }
}
