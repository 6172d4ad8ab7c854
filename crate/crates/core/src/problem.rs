//! Builds the split systems (s, q, f) for the Helmholtz and Schrodinger
//! test families, including reproducible random media.
//!
//! Media fields are sums of periodic Gaussians. The random generator is
//! ChaCha8 seeded from the 64-bit `seed` in `MediaSpec`; identical specs
//! produce bit-identical fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral::adjust_shift;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    /// Velocity 1 + one Gaussian at the domain center.
    HelmholtzGaussian,
    /// Velocity 1 + `count` randomly placed Gaussians.
    HelmholtzRandomGaussians,
    /// Potential made of randomly placed Gaussians.
    SchrodingerRandom,
    /// Potential on a regular lattice of Gaussians, one vacant at the center.
    SchrodingerLatticeVacancy,
}

impl MediaKind {
    pub fn is_helmholtz(self) -> bool {
        matches!(self, MediaKind::HelmholtzGaussian | MediaKind::HelmholtzRandomGaussians)
    }
}

/// Parameters of a test medium. `sigma` is in domain units for Helmholtz
/// media and in units of the step size h for Schrodinger media; omitted
/// fields take the per-family defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MediaSpec {
    pub kind: MediaKind,
    #[serde(default)]
    pub omega_over_2pi: Option<f64>,
    #[serde(default = "default_energy")]
    pub energy: f64,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_energy() -> f64 {
    2.5
}

fn default_seed() -> u64 {
    42
}

impl MediaSpec {
    pub fn new(kind: MediaKind) -> Self {
        MediaSpec {
            kind,
            omega_over_2pi: None,
            energy: default_energy(),
            amplitude: None,
            sigma: None,
            count: None,
            seed: default_seed(),
        }
    }

    pub fn with_omega(mut self, omega_over_2pi: f64) -> Self {
        self.omega_over_2pi = Some(omega_over_2pi);
        self
    }

    fn amplitude(&self) -> f64 {
        self.amplitude.unwrap_or(if self.kind.is_helmholtz() { 0.25 } else { 1.0 })
    }

    /// Gaussian width in domain units.
    fn sigma_domain(&self, grid: GridSpec) -> f64 {
        match self.kind {
            MediaKind::HelmholtzGaussian | MediaKind::HelmholtzRandomGaussians => {
                self.sigma.unwrap_or(0.1)
            }
            _ => self.sigma.unwrap_or(1.5) * grid.h(),
        }
    }
}

/// The discretized system (L - s + q) u = f.
#[derive(Debug, Clone)]
pub struct SplitProblem {
    pub grid: GridSpec,
    pub s: f64,
    pub q: Vec<f64>,
    pub f: Vec<f64>,
    pub label: String,
}

/// Sum of periodic Gaussians: amplitude * sum_c exp(-|x - c|^2_torus / (2 sigma^2)).
/// Centers are in domain units; the distance per axis is the torus distance.
pub fn gaussian_field(grid: GridSpec, centers: &[[f64; 3]], amplitude: f64, sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let h = grid.h();
    let total = grid.n_total();
    let mut field = vec![0.0; total];
    for (idx, value) in field.iter_mut().enumerate() {
        let c = grid.coords_of(idx);
        let mut acc = 0.0;
        for center in centers {
            let mut dist_sq = 0.0;
            for a in 0..grid.d {
                let mut dx = (c[a] as f64 * h - center[a]).abs();
                if dx > 0.5 {
                    dx = 1.0 - dx;
                }
                dist_sq += dx * dx;
            }
            acc += (-dist_sq / (2.0 * sigma * sigma)).exp();
        }
        *value = amplitude * acc;
    }
    field
}

fn domain_center(grid: GridSpec) -> [f64; 3] {
    let mut c = [0.0; 3];
    for a in 0..grid.d {
        c[a] = 0.5;
    }
    c
}

fn delta_at_center(grid: GridSpec) -> Vec<f64> {
    let mut f = vec![0.0; grid.n_total()];
    f[grid.center()] = 1.0;
    f
}

/// Velocity field c(x) for a Helmholtz medium.
pub fn helmholtz_velocity(grid: GridSpec, media: &MediaSpec) -> Result<Vec<f64>> {
    let centers = match media.kind {
        MediaKind::HelmholtzGaussian => vec![domain_center(grid)],
        MediaKind::HelmholtzRandomGaussians => {
            let count = media.count.unwrap_or(3);
            let mut rng = ChaCha8Rng::seed_from_u64(media.seed);
            let mut centers = Vec::with_capacity(count);
            for _ in 0..count {
                let mut c = [0.0; 3];
                for a in 0..grid.d {
                    c[a] = rng.gen_range(0.2..0.8);
                }
                if grid.d == 3 {
                    // Centers sit on the middle slice in 3D.
                    c[2] = 0.5;
                }
                centers.push(c);
            }
            centers
        }
        _ => {
            return Err(Error::InvalidMedia(format!(
                "{:?} is not a Helmholtz medium",
                media.kind
            )))
        }
    };
    let bump = gaussian_field(grid, &centers, media.amplitude(), media.sigma_domain(grid));
    Ok(bump.into_iter().map(|x| 1.0 + x).collect())
}

/// Lattice sites spaced `spacing` grid points apart, optionally with the
/// site nearest the domain center removed.
pub fn lattice_centers(grid: GridSpec, spacing: usize, vacancy: bool) -> Result<Vec<[f64; 3]>> {
    if grid.n % spacing != 0 {
        return Err(Error::InvalidMedia(format!(
            "lattice spacing {spacing} does not divide n = {}",
            grid.n
        )));
    }
    let sites = grid.n / spacing;
    let h = grid.h();
    let vacant = (0.5 * sites as f64).round() as usize % sites;
    let mut centers = Vec::new();
    let mut m = [0usize; 3];
    loop {
        let skip = vacancy && (0..grid.d).all(|a| m[a] == vacant);
        if !skip {
            let mut c = [0.0; 3];
            for a in 0..grid.d {
                c[a] = (m[a] * spacing) as f64 * h;
            }
            centers.push(c);
        }
        // odometer over [0, sites)^d
        let mut a = 0;
        loop {
            if a == grid.d {
                return Ok(centers);
            }
            m[a] += 1;
            if m[a] < sites {
                break;
            }
            m[a] = 0;
            a += 1;
        }
    }
}

/// Potential field V(x) for a Schrodinger medium.
pub fn schrodinger_potential(grid: GridSpec, media: &MediaSpec) -> Result<Vec<f64>> {
    let centers = match media.kind {
        MediaKind::SchrodingerRandom => {
            let default_count =
                (grid.n_total() + 8usize.pow(grid.d as u32) - 1) / 8usize.pow(grid.d as u32);
            let count = media.count.unwrap_or(default_count);
            let mut rng = ChaCha8Rng::seed_from_u64(media.seed);
            let mut centers = Vec::with_capacity(count);
            for _ in 0..count {
                let mut c = [0.0; 3];
                for a in 0..grid.d {
                    c[a] = rng.gen_range(0.0..1.0);
                }
                centers.push(c);
            }
            centers
        }
        MediaKind::SchrodingerLatticeVacancy => lattice_centers(grid, 8, true)?,
        _ => {
            return Err(Error::InvalidMedia(format!(
                "{:?} is not a Schrodinger medium",
                media.kind
            )))
        }
    };
    Ok(gaussian_field(grid, &centers, media.amplitude(), media.sigma_domain(grid)))
}

/// Helmholtz split: s = mean(omega^2 / c^2), q = -omega^2/c^2 + s,
/// delta source at the center, shift adjusted off the spectrum.
pub fn build_helmholtz(grid: GridSpec, media: &MediaSpec) -> Result<SplitProblem> {
    let omega_over_2pi = media
        .omega_over_2pi
        .ok_or_else(|| Error::InvalidMedia("omega_over_2pi is required for Helmholtz".into()))?;
    let omega = crate::spectral::TWO_PI * omega_over_2pi;
    let c = helmholtz_velocity(grid, media)?;
    if c.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidMedia("velocity field is not positive".into()));
    }
    let coeff: Vec<f64> = c.iter().map(|&ci| omega * omega / (ci * ci)).collect();
    let s = coeff.iter().sum::<f64>() / coeff.len() as f64;
    let q: Vec<f64> = coeff.iter().map(|&w| -w + s).collect();
    let (s, q) = adjust_shift(grid, s, &q);
    Ok(SplitProblem {
        grid,
        s,
        q,
        f: delta_at_center(grid),
        label: format!(
            "{:?} d={} n={} omega/2pi={} seed={}",
            media.kind, grid.d, grid.n, omega_over_2pi, media.seed
        ),
    })
}

/// Schrodinger split with l = n: s = mean(-l^2 V + l^2 E),
/// q = l^2 V - l^2 E + s, delta source at the center, shift adjusted.
pub fn build_schrodinger(grid: GridSpec, media: &MediaSpec) -> Result<SplitProblem> {
    let v = schrodinger_potential(grid, media)?;
    let l_sq = (grid.n * grid.n) as f64;
    let coeff: Vec<f64> = v.iter().map(|&vi| l_sq * vi - l_sq * media.energy).collect();
    let s = -coeff.iter().sum::<f64>() / coeff.len() as f64;
    let q: Vec<f64> = coeff.iter().map(|&w| w + s).collect();
    let (s, q) = adjust_shift(grid, s, &q);
    Ok(SplitProblem {
        grid,
        s,
        q,
        f: delta_at_center(grid),
        label: format!(
            "{:?} d={} n={} E={} seed={}",
            media.kind, grid.d, grid.n, media.energy, media.seed
        ),
    })
}

/// Builds a problem of either family from one spec.
pub fn build_problem(grid: GridSpec, media: &MediaSpec) -> Result<SplitProblem> {
    if media.kind.is_helmholtz() {
        build_helmholtz(grid, media)
    } else {
        build_schrodinger(grid, media)
    }
}
