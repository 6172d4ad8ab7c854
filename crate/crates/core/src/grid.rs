//! Torus grid descriptor and index arithmetic.
//!
//! The grid covers the unit torus `[0,1)^d` with `n` points per dimension.
//! Linear indices are row-major with axis 0 slowest, so linear order equals
//! lexicographic order of the coordinate tuples.

use crate::error::{Error, Result};

/// Maximum spatial dimension handled by the fixed-size coordinate arrays.
pub const MAX_DIM: usize = 3;

pub type Coord = [usize; MAX_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    /// Spatial dimension (1, 2 or 3).
    pub d: usize,
    /// Points per dimension; must be even.
    pub n: usize,
    /// Leaf-box width in grid units.
    pub b: usize,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, b: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in 1..=3")));
        }
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} must be positive and even")));
        }
        if b < 2 {
            return Err(Error::InvalidGrid(format!("leaf width b = {b} must be >= 2")));
        }
        if n % b != 0 {
            return Err(Error::IndivisibleGrid { n, b });
        }
        if n / b < 2 {
            return Err(Error::InvalidGrid(format!(
                "grid must contain at least two leaf boxes per dimension (n = {n}, b = {b})"
            )));
        }
        Ok(GridSpec { d, n, b })
    }

    /// Total number of unknowns N = n^d.
    pub fn n_total(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Step size h = 1/n.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Row-major strides; axis 0 is slowest.
    pub fn strides(&self) -> Coord {
        let mut s = [0usize; MAX_DIM];
        let mut acc = 1;
        for a in (0..self.d).rev() {
            s[a] = acc;
            acc *= self.n;
        }
        s
    }

    pub fn index_of(&self, c: &Coord) -> usize {
        let mut idx = 0;
        for a in 0..self.d {
            debug_assert!(c[a] < self.n);
            idx = idx * self.n + c[a];
        }
        idx
    }

    pub fn coords_of(&self, mut idx: usize) -> Coord {
        let mut c = [0usize; MAX_DIM];
        for a in (0..self.d).rev() {
            c[a] = idx % self.n;
            idx /= self.n;
        }
        c
    }

    /// Wraps a signed coordinate onto the torus.
    pub fn wrap(&self, x: isize) -> usize {
        x.rem_euclid(self.n as isize) as usize
    }

    /// Linear index of `idx` shifted by `delta` with torus wrap.
    pub fn offset(&self, idx: usize, delta: &[isize; MAX_DIM]) -> usize {
        let c = self.coords_of(idx);
        let mut out = [0usize; MAX_DIM];
        for a in 0..self.d {
            out[a] = self.wrap(c[a] as isize + delta[a]);
        }
        self.index_of(&out)
    }

    /// Fourier index for storage slot `t` along one axis: K = [-n/2, n/2).
    pub fn freq(&self, t: usize) -> i64 {
        let n = self.n as i64;
        let t = t as i64;
        if t < n / 2 {
            t
        } else {
            t - n
        }
    }

    /// Linear index of the center node (n/2, ..., n/2).
    pub fn center(&self) -> usize {
        let mut c = [0usize; MAX_DIM];
        for a in 0..self.d {
            c[a] = self.n / 2;
        }
        self.index_of(&c)
    }
}
