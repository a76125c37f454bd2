//! Traveling waves in diatomic (mass-dimer) FPUT lattices at small mass ratio.
//!
//! The lattice alternates unit masses with light masses of ratio `mu`, coupled by
//! springs with force `F(r) = -r - r^2`. In the heavy/light stretch variables the
//! traveling-wave profile splits into a solitary core, a high-frequency periodic
//! tail and an exponentially localized remainder. This crate computes every piece:
//!
//! - [`spectral`]: grids, transforms, parity handling and weighted norms
//! - [`lattice`]: the advance-delay operators and the traveling-wave residual
//! - [`solitary`]: the monatomic solitary wave and its refined correction
//! - [`dispersion`]: the linear dispersion branches and the critical frequency
//! - [`periodic`]: small-amplitude periodic traveling waves
//! - [`jost`]: Jost solutions, the adjoint kernel, the solvability functional and
//!   the mass-ratio admissibility scan
//! - [`nanopteron`]: the fixed-point assembly of core + tail + remainder
//! - [`dynamics`]: direct velocity-Verlet integration of the lattice
//! - [`verification`]: the executable acceptance checks

pub mod dispersion;
pub mod dynamics;
pub mod io;
pub mod jost;
pub mod lattice;
pub mod nanopteron;
pub mod periodic;
pub mod solitary;
pub mod spectral;
pub mod verification;

use thiserror::Error;

/// Errors shared by every solver in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parameter outside admissible domain: {0}")]
    Domain(String),
    #[error("solver failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("grid cannot resolve the requested scales: {0}")]
    Resolution(String),
    #[error("mass ratio outside the admissible set: {0}")]
    NotAdmissible(String),
    #[error("stiff integration failure: {0}")]
    Stiffness(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// The lattice speed of sound; traveling waves require `|c|` above it.
pub const SPEED_OF_SOUND: f64 = std::f64::consts::SQRT_2;

/// Wave speed and mass ratio, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModelParams {
    pub c: f64,
    pub mu: f64,
}

impl ModelParams {
    pub fn new(c: f64, mu: f64) -> Result<Self> {
        if !c.is_finite() || c.abs() <= SPEED_OF_SOUND {
            return Err(Error::Domain(format!(
                "wave speed |c| = {} must exceed the speed of sound sqrt(2)",
                c.abs()
            )));
        }
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Domain(format!("mass ratio mu = {mu} must lie in (0,1)")));
        }
        Ok(Self { c, mu })
    }

    /// Parameters at the formal `mu = 0` (monatomic) limit; used by operator
    /// limits and tests, never by solvers that divide by `mu`.
    pub fn massless(c: f64) -> Result<Self> {
        if !c.is_finite() || c.abs() <= SPEED_OF_SOUND {
            return Err(Error::Domain(format!(
                "wave speed |c| = {} must exceed the speed of sound sqrt(2)",
                c.abs()
            )));
        }
        Ok(Self { c, mu: 0.0 })
    }

    pub fn c_squared(&self) -> f64 {
        self.c * self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_reject_sonic_and_bad_mass_ratio() {
        assert!(ModelParams::new(SPEED_OF_SOUND, 0.1).is_err());
        assert!(ModelParams::new(1.45, 0.0).is_err());
        assert!(ModelParams::new(1.45, 1.0).is_err());
        assert!(ModelParams::new(1.45, 0.01).is_ok());
        assert!(ModelParams::new(-1.45, 0.01).is_ok());
    }
}
