use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every module.
///
/// `zero` is relative to the spectral norm of `A_0`; `sym` is relative to the
/// largest coefficient entry; `rank` is relative to the largest singular value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub sym: f64,
    pub rank: f64,
    pub resid: f64,
    pub pair: f64,
    pub cluster: f64,
    pub zero: f64,
    pub zero_r: f64,
    pub slope: f64,
    pub matching: f64,
    pub cond_max: f64,
    pub overlap: f64,
    pub kernel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym: 1e-10,
            rank: 1e-10,
            resid: 1e-8,
            pair: 1e-7,
            cluster: 1e-7,
            zero: 1e-8,
            zero_r: 1e-10,
            slope: 1e-6,
            matching: 1e-6,
            cond_max: 1e10,
            overlap: 0.5,
            kernel: 1e-5,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 12] = [
        "sym", "rank", "resid", "pair", "cluster", "zero", "zero_r", "slope", "matching",
        "cond_max", "overlap", "kernel",
    ];

    /// Overrides one knob by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::OutOfRange { what: format!("tolerance {key}"), value });
        }
        let slot = match key {
            "sym" => &mut self.sym,
            "rank" => &mut self.rank,
            "resid" => &mut self.resid,
            "pair" => &mut self.pair,
            "cluster" => &mut self.cluster,
            "zero" => &mut self.zero,
            "zero_r" => &mut self.zero_r,
            "slope" => &mut self.slope,
            "matching" => &mut self.matching,
            "cond_max" => &mut self.cond_max,
            "overlap" => &mut self.overlap,
            "kernel" => &mut self.kernel,
            _ => return Err(Error::InvalidInput { detail: format!("unknown tolerance `{key}`") }),
        };
        *slot = value;
        Ok(())
    }

    /// Applies overrides from environment variables named `{prefix}{KEY}` (upper case).
    pub fn from_env(prefix: &str) -> Result<Self> {
        let mut tol = Self::default();
        for key in Self::KEYS {
            let name = format!("{prefix}{}", key.to_uppercase());
            if let Ok(raw) = std::env::var(&name) {
                let value: f64 = raw.trim().parse().map_err(|_| Error::InvalidInput {
                    detail: format!("{name}={raw} is not a number"),
                })?;
                tol.set(key, value)?;
            }
        }
        Ok(tol)
    }
}
