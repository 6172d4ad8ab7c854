//! Fourier-side machinery: the discrete Laplacian symbol, the shifted
//! Green's operator applied via FFT, and its materialization as a
//! translation-invariant kernel over the grid.
//!
//! All public vectors are real; complex arithmetic stays inside the
//! transform calls. Both transform directions use the unitary 1/n^{d/2}
//! convention, so a symbol application is `F^{-1}(sym .* F v)` with a
//! combined 1/N scale on the unnormalized FFTs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftEngine;
use crate::grid::GridSpec;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
pub const FOUR_PI_SQ: f64 = TWO_PI * TWO_PI;

/// Relative spectral-gap floor required of the shift; see `adjust_shift`.
pub const GAP_FLOOR: f64 = 1e-3;

const IMAG_TOL: f64 = 1e-10;

/// A real, even multiplier over the Fourier grid K, stored in FFT slot order.
#[derive(Debug, Clone)]
pub struct FourierSymbol {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

fn k_norm_sq(grid: GridSpec, idx: usize) -> f64 {
    let c = grid.coords_of(idx);
    let mut acc = 0.0;
    for a in 0..grid.d {
        let k = grid.freq(c[a]) as f64;
        acc += k * k;
    }
    acc
}

/// Symbol of the pseudospectral Laplacian: 4 pi^2 |k|^2.
pub fn laplacian_symbol(grid: GridSpec) -> FourierSymbol {
    let values = (0..grid.n_total())
        .map(|i| FOUR_PI_SQ * k_norm_sq(grid, i))
        .collect();
    FourierSymbol { grid, values }
}

/// Smallest distance between the shift and the Laplacian symbol.
pub fn spectral_gap(grid: GridSpec, s: f64) -> f64 {
    (0..grid.n_total())
        .map(|i| (FOUR_PI_SQ * k_norm_sq(grid, i) - s).abs())
        .fold(f64::INFINITY, f64::min)
}

fn gap_threshold(s: f64) -> f64 {
    GAP_FLOOR * s.abs().max(1.0)
}

/// Symbol of the shifted Green's operator: 1 / (4 pi^2 |k|^2 - s).
///
/// Fails with `ShiftResonant` when the shift sits closer to the Laplacian
/// spectrum than the gap floor allows; run `adjust_shift` first.
pub fn green_symbol(grid: GridSpec, s: f64) -> Result<FourierSymbol> {
    let gap = spectral_gap(grid, s);
    if gap < gap_threshold(s) {
        return Err(Error::ShiftResonant { shift: s, gap });
    }
    let values = (0..grid.n_total())
        .map(|i| 1.0 / (FOUR_PI_SQ * k_norm_sq(grid, i) - s))
        .collect();
    Ok(FourierSymbol { grid, values })
}

/// Applies `F^{-1} diag(symbol) F` to a real field, discarding the
/// round-off imaginary residue after checking it is negligible.
pub fn apply_symbol_with(engine: &FftEngine, symbol: &FourierSymbol, v: &[f64]) -> Result<Vec<f64>> {
    let grid = symbol.grid;
    let total = grid.n_total();
    if v.len() != total {
        return Err(Error::LengthMismatch { expected: total, got: v.len() });
    }
    let mut data: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    engine.forward(&mut data);
    let scale = 1.0 / total as f64;
    for (x, &sym) in data.iter_mut().zip(&symbol.values) {
        *x *= sym * scale;
    }
    engine.inverse(&mut data);
    let re_norm: f64 = data.iter().map(|x| x.re * x.re).sum::<f64>().sqrt();
    let im_norm: f64 = data.iter().map(|x| x.im * x.im).sum::<f64>().sqrt();
    assert!(
        im_norm <= IMAG_TOL * re_norm.max(f64::MIN_POSITIVE),
        "imaginary residue {im_norm:.3e} exceeds {IMAG_TOL:.0e} of {re_norm:.3e}"
    );
    Ok(data.into_iter().map(|x| x.re).collect())
}

pub fn apply_laplacian(grid: GridSpec, v: &[f64]) -> Result<Vec<f64>> {
    let engine = FftEngine::new(grid);
    apply_symbol_with(&engine, &laplacian_symbol(grid), v)
}

pub fn apply_green(grid: GridSpec, s: f64, v: &[f64]) -> Result<Vec<f64>> {
    let engine = FftEngine::new(grid);
    apply_symbol_with(&engine, &green_symbol(grid, s)?, v)
}

/// The Green's operator materialized through its convolution kernel:
/// `g = G delta_0`, so `G(i,j) = g((i-j) mod n)` componentwise.
#[derive(Debug, Clone)]
pub struct GreensKernel {
    pub grid: GridSpec,
    pub s: f64,
    pub g: Vec<f64>,
}

pub fn green_kernel(grid: GridSpec, s: f64) -> Result<GreensKernel> {
    let mut delta = vec![0.0; grid.n_total()];
    delta[0] = 1.0;
    let g = apply_green(grid, s, &delta)?;
    Ok(GreensKernel { grid, s, g })
}

impl GreensKernel {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let grid = self.grid;
        let ci = grid.coords_of(i);
        let cj = grid.coords_of(j);
        let mut diff = [0usize; 3];
        for a in 0..grid.d {
            diff[a] = grid.wrap(ci[a] as isize - cj[a] as isize);
        }
        self.g[grid.index_of(&diff)]
    }

    /// Dense submatrix G(rows, cols) read from the kernel vector.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.entry(rows[r], cols[c]))
    }

    /// Circular autocorrelation `c(r) = sum_t g(t) g(t - r)`, one FFT.
    ///
    /// Gives the full-torus Gram products of kernel rows:
    /// `sum_t G(a,t) G(b,t) = c(a - b)`.
    pub fn autocorrelation(&self) -> Vec<f64> {
        let grid = self.grid;
        let engine = FftEngine::new(grid);
        let total = grid.n_total();
        let mut data: Vec<Complex64> = self.g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        engine.forward(&mut data);
        let scale = 1.0 / total as f64;
        for x in data.iter_mut() {
            *x = Complex64::new(x.norm_sqr() * scale, 0.0);
        }
        engine.inverse(&mut data);
        data.into_iter().map(|x| x.re).collect()
    }
}

/// Moves the shift off the Laplacian spectrum, compensating exactly
/// through the inhomogeneity so that `L - s' + q'` equals `L - s + q`.
///
/// The perturbation multiplies `s` by `1 + eta`, growing `eta` linearly in
/// steps of the gap floor until the relative gap is met. Linear growth keeps
/// the sample spacing below the width of admissible spectral gaps, so the
/// search stops at the nearest one instead of overshooting past the bulk of
/// the spectrum; it still terminates because `s` eventually leaves the
/// spectrum altogether. A zero or near-zero shift is nudged to `s - eta`
/// instead, since scaling cannot move it.
pub fn adjust_shift(grid: GridSpec, s: f64, q: &[f64]) -> (f64, Vec<f64>) {
    if spectral_gap(grid, s) >= gap_threshold(s) {
        return (s, q.to_vec());
    }
    let mut k = 1u64;
    let s_new = loop {
        let eta = k as f64 * GAP_FLOOR;
        // Multiplicative steps scale with |s|; a shift too small for that to
        // move anywhere (including exactly zero) is nudged downward instead.
        let cand = if s.abs() >= GAP_FLOOR { s * (1.0 + eta) } else { s - eta };
        if spectral_gap(grid, cand) >= gap_threshold(cand) {
            break cand;
        }
        k += 1;
    };
    let delta = s_new - s;
    (s_new, q.iter().map(|&x| x + delta).collect())
}
