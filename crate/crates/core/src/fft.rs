//! Multi-dimensional FFT on the torus grid, wrapping one-dimensional plans
//! along each axis. Transforms are unnormalized here; callers apply the
//! unitary 1/n^{d/2} convention (or the combined 1/N for a round trip).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::GridSpec;

pub struct FftEngine {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftEngine {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft(grid.n, FftDirection::Forward);
        let inverse = planner.plan_fft(grid.n, FftDirection::Inverse);
        FftEngine { grid, forward, inverse }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Unnormalized forward DFT along every axis, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        let fft = self.forward.clone();
        for axis in 0..self.grid.d {
            self.transform_axis(data, axis, fft.as_ref());
        }
    }

    /// Unnormalized inverse DFT along every axis, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        let fft = self.inverse.clone();
        for axis in 0..self.grid.d {
            self.transform_axis(data, axis, fft.as_ref());
        }
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, fft: &dyn Fft<f64>) {
        let n = self.grid.n;
        debug_assert_eq!(data.len(), self.grid.n_total());
        let stride = self.grid.strides()[axis];
        let outer = data.len() / (n * stride);
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            for i in 0..stride {
                let base = o * n * stride + i;
                for t in 0..n {
                    line[t] = data[base + t * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for t in 0..n {
                    data[base + t * stride] = line[t];
                }
            }
        }
    }
}
