//! Run configuration: a TOML document with a flat top level and a nested
//! media section. See README for the full schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::problem::{MediaKind, MediaSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Helmholtz,
    Schrodinger,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// (n, b) pairs, ascending in n.
    pub sizes: Vec<(usize, usize)>,
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub table: Option<String>,
    pub fields: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub equation: Equation,
    pub d: usize,
    pub n: usize,
    /// Defaults to the largest divisor of n not exceeding sqrt(n).
    pub b: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub media: Option<MediaSpec>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    200
}

/// Largest divisor of n not exceeding sqrt(n), but at least 2.
pub fn default_block(n: usize) -> usize {
    let mut best = 2;
    let mut b = 2;
    while b * b <= n {
        if n % b == 0 {
            best = b;
        }
        b += 1;
    }
    best
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Fills defaults and validates; after this every field is concrete.
    pub fn resolve(&mut self) -> Result<()> {
        if self.b.is_none() {
            self.b = Some(default_block(self.n));
        }
        let b = self.b.unwrap();
        GridSpec::new(self.d, self.n, b)
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("tol must be in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        let media = self.media.get_or_insert_with(|| match self.equation {
            Equation::Helmholtz => MediaSpec::new(MediaKind::HelmholtzGaussian),
            Equation::Schrodinger => MediaSpec::new(MediaKind::SchrodingerRandom),
        });
        let media_is_helmholtz = media.kind.is_helmholtz();
        let want_helmholtz = self.equation == Equation::Helmholtz;
        if media_is_helmholtz != want_helmholtz {
            return Err(Error::Config(format!(
                "media kind {:?} does not match equation {:?}",
                media.kind, self.equation
            )));
        }
        if want_helmholtz && media.omega_over_2pi.is_none() {
            // Three points per wavelength by default.
            media.omega_over_2pi = Some(self.n as f64 / 3.0);
        }
        if let Some(sweep) = &self.sweep {
            let mut prev = 0;
            for &(n, b) in &sweep.sizes {
                GridSpec::new(self.d, n, b)
                    .map_err(|e| Error::Config(format!("sweep size ({n}, {b}): {e}")))?;
                if n < prev {
                    return Err(Error::Config("sweep sizes must be ascending in n".into()));
                }
                prev = n;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.d, self.n, self.b.expect("resolved")).expect("validated")
    }

    /// Resolved config as TOML, for embedding into output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_block_examples() {
        assert_eq!(default_block(48), 6);
        assert_eq!(default_block(12), 3);
        assert_eq!(default_block(96), 8);
        assert_eq!(default_block(6), 2);
        assert_eq!(default_block(4), 2);
    }

    #[test]
    fn minimal_config_resolves() {
        let mut cfg: RunConfig = toml::from_str(
            r#"
equation = "helmholtz"
d = 2
n = 48
"#,
        )
        .unwrap();
        cfg.resolve().unwrap();
        assert_eq!(cfg.b, Some(6));
        assert_eq!(cfg.tol, 1e-6);
        assert_eq!(cfg.max_iter, 200);
        let media = cfg.media.as_ref().unwrap();
        assert_eq!(media.omega_over_2pi, Some(16.0));
        assert_eq!(media.seed, 42);
    }

    #[test]
    fn bad_tol_rejected() {
        let mut cfg: RunConfig = toml::from_str(
            r#"
equation = "helmholtz"
d = 2
n = 48
b = 3
tol = 1.5
"#,
        )
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn mismatched_media_rejected() {
        let mut cfg: RunConfig = toml::from_str(
            r#"
equation = "schrodinger"
d = 2
n = 48
b = 3

[media]
kind = "helmholtz_gaussian"
"#,
        )
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn indivisible_b_rejected() {
        let mut cfg: RunConfig = toml::from_str(
            r#"
equation = "helmholtz"
d = 2
n = 48
b = 5
"#,
        )
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let mut cfg: RunConfig = toml::from_str(
            r#"
equation = "schrodinger"
d = 2
n = 48
b = 3
"#,
        )
        .unwrap();
        cfg.resolve().unwrap();
        let text = cfg.to_toml();
        let mut reparsed: RunConfig = toml::from_str(&text).unwrap();
        reparsed.resolve().unwrap();
        assert_eq!(reparsed.b, cfg.b);
        assert_eq!(reparsed.media.as_ref().unwrap().seed, cfg.media.as_ref().unwrap().seed);
    }
}
