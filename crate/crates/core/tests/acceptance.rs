//! End-to-end acceptance gate. Criteria run sequentially in one test so the
//! timing measurements are not perturbed by sibling tests, and every
//! criterion prints its own PASS/FAIL line (run with --nocapture to watch).


use sparsol::grid::GridSpec;
use sparsol::krylov::GmresOptions;
use sparsol::oracle::{dense_green, dense_solve};
use sparsol::partition::build_partition;
use sparsol::precond::{solve_problem_unpreconditioned, solve_with, Preconditioner};
use sparsol::problem::{build_problem, MediaKind, MediaSpec, SplitProblem};
use sparsol::sparsifier::{assemble_c, assemble_q, compute_stencil, compute_stencils};
use sparsol::spectral::{green_kernel, spectral_gap, FOUR_PI_SQ};
use sparsol::Error;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Gate { failures: Vec::new() }
    }

    fn record(&mut self, criterion: &str, passed: bool, detail: String) {
        println!(
            "ACCEPTANCE {criterion}: {} — {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        if !passed {
            self.failures.push(format!("{criterion}: {detail}"));
        }
    }
}

/// A shift of the form (m + 1/2) * 4pi^2 near `target` whose spectral gap
/// comfortably clears the adjustment floor, so constant-coefficient builds
/// keep q identically zero.
fn clear_shift(grid: GridSpec, target: f64) -> f64 {
    let base = (target / FOUR_PI_SQ).round() as i64;
    for step in 0..200 {
        for sign in [1i64, -1] {
            let m = base + sign * step;
            if m < 1 {
                continue;
            }
            let cand = (m as f64 + 0.5) * FOUR_PI_SQ;
            if spectral_gap(grid, cand) >= 2e-3 * cand.abs().max(1.0) {
                return cand;
            }
        }
    }
    panic!("no clear shift near {target}");
}

fn constant_media_problem(grid: GridSpec, helmholtz: bool) -> SplitProblem {
    let target = if helmholtz {
        // A wave number in the indefinite regime, n/6 points per wavelength.
        let om = grid.n as f64 / 6.0;
        (std::f64::consts::TAU * om).powi(2)
    } else {
        2.5 * (grid.n * grid.n) as f64
    };
    let s = clear_shift(grid, target);
    let mut media = if helmholtz {
        MediaSpec::new(MediaKind::HelmholtzGaussian).with_omega(s.sqrt() / std::f64::consts::TAU)
    } else {
        let mut m = MediaSpec::new(MediaKind::SchrodingerRandom);
        m.energy = s / (grid.n * grid.n) as f64;
        m
    };
    media.amplitude = Some(0.0);
    build_problem(grid, &media).expect("constant-media build")
}

/// Builds the preconditioner, runs the iteration, and checks the sparse LU
/// backward error on 10 random right-hand sides (criterion 7 piggybacks on
/// every configuration exercised by criteria 1-5).
fn run_config(
    problem: &SplitProblem,
    opts: GmresOptions,
) -> Result<(usize, f64, f64, f64), Error> {
    let pc = Preconditioner::build(problem.grid, problem.s, &problem.q)?;
    let (_, report) = solve_with(&pc, problem, opts)?;

    let n = problem.grid.n_total();
    let mut rng_state = 0x9e3779b97f4a7c15u64;
    let mut backward = 0.0f64;
    for _ in 0..10 {
        let y: Vec<f64> = (0..n)
            .map(|_| {
                // xorshift keeps the fixture dependency-free and seeded
                rng_state ^= rng_state << 13;
                rng_state ^= rng_state >> 7;
                rng_state ^= rng_state << 17;
                (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let x = pc.factorization.solve_refined(&pc.p_mat, &y);
        let px = pc.p_mat.matvec(&x);
        let num = y
            .iter()
            .zip(&px)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        backward = backward.max(num / den);
    }
    Ok((report.iterations, report.true_residual, backward, pc.stats.max_ls_residual))
}

fn criterion_1(gate: &mut Gate, worst_backward: &mut f64) {
    let mut detail = Vec::new();
    let mut ok = true;
    let configs: Vec<(usize, usize, usize)> =
        vec![(2, 48, 3), (2, 96, 6), (3, 12, 3)];
    for helmholtz in [true, false] {
        for &(d, n, b) in &configs {
            let grid = GridSpec::new(d, n, b).unwrap();
            let problem = constant_media_problem(grid, helmholtz);
            assert!(problem.q.iter().all(|&x| x.abs() < 1e-8 * problem.s.abs()));
            match run_config(&problem, GmresOptions::default()) {
                Ok((n_p, resid, backward, _)) => {
                    *worst_backward = worst_backward.max(backward);
                    let this_ok = n_p == 1 && resid <= 1e-9;
                    ok &= this_ok;
                    detail.push(format!(
                        "{} d={d} n={n}: n_p={n_p} resid={resid:.1e}",
                        if helmholtz { "helmholtz" } else { "schrodinger" }
                    ));
                }
                Err(e) => {
                    ok = false;
                    detail.push(format!("d={d} n={n}: {e}"));
                }
            }
        }
    }
    gate.record("1 exactness at q=0", ok, detail.join("; "));
}

fn criterion_2(gate: &mut Gate) {
    let mut detail = Vec::new();
    let mut ok = true;
    for (d, n, b) in [(2usize, 12usize, 3usize), (3, 6, 2)] {
        let grid = GridSpec::new(d, n, b).unwrap();
        let n_total = grid.n_total();
        let s = 1.5 * FOUR_PI_SQ;

        // (a) kernel-extracted G vs the dense DFT construction.
        let kernel = green_kernel(grid, s).unwrap();
        let all: Vec<usize> = (0..n_total).collect();
        let g_kernel = kernel.submatrix(&all, &all);
        let g_dense = dense_green(grid, s).unwrap();
        let a_err = (&g_kernel - &g_dense).amax();
        ok &= a_err < 1e-12 * g_dense.amax();

        // (b) C = QG on the pattern.
        let part = build_partition(grid).unwrap();
        let stencils = compute_stencils(&kernel, &part).unwrap();
        let q_mat = assemble_q(&part, &stencils);
        let c_mat = assemble_c(&part, &stencils);
        let mut b_err = 0.0f64;
        let mut b_scale = 0.0f64;
        for r in 0..n_total {
            for (&c, &cv) in c_mat.row_cols(r).iter().zip(c_mat.row_values(r)) {
                let mut qg = 0.0;
                for (&k, &qv) in q_mat.row_cols(r).iter().zip(q_mat.row_values(r)) {
                    qg += qv * g_dense[(k, c)];
                }
                b_err = b_err.max((cv - qg).abs());
                b_scale = b_scale.max(cv.abs());
            }
        }
        ok &= b_err < 1e-12 * b_scale.max(1.0);

        // (c) end-to-end vs dense direct solve.
        let bump = sparsol::problem::gaussian_field(grid, &[[0.5, 0.5, 0.5]], 0.4, 0.15);
        let q: Vec<f64> = bump.iter().map(|x| (x - 0.2) * s.abs()).collect();
        let mut f = vec![0.0; n_total];
        f[grid.center()] = 1.0;
        let problem = SplitProblem { grid, s, q: q.clone(), f: f.clone(), label: "acc2".into() };
        let opts = GmresOptions { tol: 1e-9, max_iter: 200 };
        let sol = sparsol::solve_problem(&problem, opts).unwrap();
        let oracle = dense_solve(grid, s, &q, &f).unwrap();
        let norm = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = sol
            .u
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let c_err = diff / norm;
        ok &= c_err < 1e-5;
        detail.push(format!(
            "d={d}: G {a_err:.1e}, QG-pattern {b_err:.1e}, solve {c_err:.1e}"
        ));
    }
    gate.record("2 dense-oracle equivalence", ok, detail.join("; "));
}

fn helmholtz_default(d: usize, n: usize, b: usize, omega_over_2pi: f64) -> SplitProblem {
    let grid = GridSpec::new(d, n, b).unwrap();
    let media = MediaSpec::new(MediaKind::HelmholtzGaussian).with_omega(omega_over_2pi);
    build_problem(grid, &media).unwrap()
}

fn criterion_3(gate: &mut Gate, worst_backward: &mut f64) {
    let cases = [(16.0, 48usize, 3usize, 7usize), (32.0, 96, 6, 8), (64.0, 192, 6, 11)];
    let mut detail = Vec::new();
    let mut ok = true;
    let mut prev = 0usize;
    for (om, n, b, reference) in cases {
        let problem = helmholtz_default(2, n, b, om);
        match run_config(&problem, GmresOptions::default()) {
            Ok((n_p, _, backward, _)) => {
                *worst_backward = worst_backward.max(backward);
                ok &= n_p <= 2 * reference && n_p >= prev;
                detail.push(format!("({om}, {n}^2, {b}): n_p={n_p} (reference {reference}, bound {})", 2 * reference));
                prev = n_p;
            }
            Err(e) => {
                ok = false;
                detail.push(format!("({om}, {n}^2, {b}): {e}"));
            }
        }
    }
    gate.record("3 2D Helmholtz iteration counts", ok, detail.join("; "));
}

fn criterion_4(gate: &mut Gate, worst_backward: &mut f64) {
    let cases = [(48usize, 3usize, 7usize), (96, 6, 9), (192, 6, 21)];
    let mut detail = Vec::new();
    let mut ok = true;
    for (n, b, reference) in cases {
        let grid = GridSpec::new(2, n, b).unwrap();
        let media = MediaSpec::new(MediaKind::SchrodingerRandom);
        let problem = build_problem(grid, &media).unwrap();
        match run_config(&problem, GmresOptions::default()) {
            Ok((n_p, _, backward, _)) => {
                *worst_backward = worst_backward.max(backward);
                ok &= n_p <= 2 * reference;
                detail.push(format!("({n}^2, {b}): n_p={n_p} (reference {reference}, bound {})", 2 * reference));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("({n}^2, {b}): {e}"));
            }
        }
    }
    gate.record("4 2D Schrodinger iteration counts", ok, detail.join("; "));
}

fn criterion_5(gate: &mut Gate, worst_backward: &mut f64) {
    let cases = [(4.0, 12usize, 3usize, 5usize), (8.0, 24, 6, 7)];
    let mut detail = Vec::new();
    let mut ok = true;
    for (om, n, b, reference) in cases {
        let problem = helmholtz_default(3, n, b, om);
        match run_config(&problem, GmresOptions::default()) {
            Ok((n_p, _, backward, _)) => {
                *worst_backward = worst_backward.max(backward);
                ok &= n_p <= 2 * reference;
                detail.push(format!("({om}, {n}^3, {b}): n_p={n_p} (reference {reference}, bound {})", 2 * reference));
            }
            Err(e) => {
                ok = false;
                detail.push(format!("({om}, {n}^3, {b}): {e}"));
            }
        }
    }
    gate.record("5 3D iteration counts", ok, detail.join("; "));
}

fn criterion_6(gate: &mut Gate) {
    // "Reach 1e-6" is judged on the reported true residual of the
    // pseudospectral system; the unpreconditioned iteration may drive the
    // integral-form residual below tolerance without actually solving the
    // system to 1e-6.
    let problem = helmholtz_default(2, 48, 3, 16.0);
    let result = solve_problem_unpreconditioned(&problem, GmresOptions::default());
    let (ok, detail) = match result {
        Err(Error::MaxIterExceeded { iterations, report, .. }) => (
            true,
            format!(
                "stalled after {iterations} iterations, true residual {:.2e}",
                report.true_residual
            ),
        ),
        Ok(sol) => (
            sol.report.true_residual > 1e-6,
            format!(
                "integral form converged in {} iterations but true residual is {:.2e}",
                sol.report.iterations, sol.report.true_residual
            ),
        ),
        Err(e) => (false, format!("unexpected error: {e}")),
    };
    let prec = sparsol::solve_problem(&problem, GmresOptions::default());
    let (prec_ok, prec_detail) = match prec {
        Ok(sol) => (
            sol.report.true_residual <= 1e-6,
            format!(
                "; preconditioned reaches {:.2e} in {} iterations",
                sol.report.true_residual, sol.report.iterations
            ),
        ),
        Err(e) => (false, format!("; preconditioned run failed: {e}")),
    };
    gate.record("6 preconditioner necessity", ok && prec_ok, detail + &prec_detail);
}

fn criterion_7(gate: &mut Gate, worst_backward: f64) {
    gate.record(
        "7 sparse LU backward error",
        worst_backward <= 1e-10,
        format!("worst over all criteria-1..5 factorizations: {worst_backward:.2e}"),
    );
}

fn criterion_8(gate: &mut Gate) {
    // The complexity trend holds the leaf width fixed at b = 6 so the
    // measurement sees pure size scaling rather than the b = 3 -> 6 pattern
    // change of the iteration-count pairings. Timing rounds are interleaved
    // across the three sizes and each size keeps its minimum, so a slow
    // scheduler window cannot bias one size against the others.
    let problems: Vec<_> = [(16.0, 48usize, 6usize), (32.0, 96, 6), (64.0, 192, 6)]
        .into_iter()
        .map(|(om, n, b)| helmholtz_default(2, n, b, om))
        .collect();
    // Warm caches and the allocator outside the timed region.
    std::hint::black_box(
        Preconditioner::build(problems[0].grid, problems[0].s, &problems[0].q).unwrap(),
    );
    // This box has a single shared CPU, so wall clocks charge other
    // processes' time slices to whichever build happens to be long enough
    // to straddle them. Thread CPU time counts only the work actually done
    // by the build, which is the quantity the complexity trend is about.
    let mut times = vec![f64::INFINITY; problems.len()];
    for _round in 0..8 {
        for (i, problem) in problems.iter().enumerate() {
            let t0 = cpu_time::ThreadTime::now();
            let pc = Preconditioner::build(problem.grid, problem.s, &problem.q).unwrap();
            times[i] = times[i].min(t0.elapsed().as_secs_f64());
            std::hint::black_box(&pc);
        }
    }
    let f1 = times[1] / times[0];
    let f2 = times[2] / times[1];
    let ok = f1 <= 8.0 && f2 <= 8.0;
    gate.record(
        "8 setup-time doubling factor",
        ok,
        format!(
            "T_s = {:.3}s / {:.3}s / {:.3}s (thread CPU time), factors {:.2} and {:.2} (bound 8)",
            times[0], times[1], times[2], f1, f2
        ),
    );
}

fn criterion_9(gate: &mut Gate) {
    let mut ok = true;
    let mut detail = Vec::new();
    for (d, n, b, expect) in [(2usize, 12usize, 3usize, 4usize), (3, 6, 2, 8)] {
        let grid = GridSpec::new(d, n, b).unwrap();
        let part = build_partition(grid).unwrap();
        let kernel = green_kernel(grid, 1.5 * FOUR_PI_SQ).unwrap();
        let stencils = compute_stencils(&kernel, &part).unwrap();
        ok &= stencils.len() == expect;

        // Translates of equal kind/orientation reproduce the stored stencil.
        let mut worst = 0.0f64;
        for set in &part.sets {
            let st = stencils
                .iter()
                .find(|s| s.normal_axes == set.normal_axes)
                .unwrap();
            let direct = compute_stencil(&kernel, set).unwrap();
            worst = worst.max((&direct.t - &st.t).amax());
        }
        ok &= worst < 1e-12;
        detail.push(format!("d={d}: {} stencils (expect {expect}), translate dev {worst:.1e}", stencils.len()));
    }
    gate.record("9 stencil invariances", ok, detail.join("; "));
}

#[test]
fn acceptance_criteria() {
    let mut gate = Gate::new();
    let mut worst_backward = 0.0f64;
    criterion_1(&mut gate, &mut worst_backward);
    criterion_2(&mut gate);
    criterion_3(&mut gate, &mut worst_backward);
    criterion_4(&mut gate, &mut worst_backward);
    criterion_5(&mut gate, &mut worst_backward);
    criterion_6(&mut gate);
    criterion_7(&mut gate, worst_backward);
    criterion_8(&mut gate);
    criterion_9(&mut gate);
    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
