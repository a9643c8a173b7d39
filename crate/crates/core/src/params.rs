//! Medium parameters and the dimensionless form of the light-matter equations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Equations of motion in the units used throughout the crate.
pub const NONDIMENSIONAL_SYSTEM: &str = "\
Comoving-frame equations (tau = gamma*(t - z/c), zeta = z/L, omega = Omega/gamma, delta = Delta/gamma):

    d/dzeta E(zeta, tau) = i sqrt(d) P(zeta, tau)
    d/dtau  P(zeta, tau) = -(1 + i delta) P + i sqrt(d) E + i omega(tau) S
    d/dtau  S(zeta, tau) = i conj(omega(tau)) P

d = g^2 N L / (gamma c) is the optical depth. E is rescaled by sqrt(c / (L gamma)) so that
int |E(zeta, tau)|^2 dtau counts photons as a fraction of one mode, and the stored fraction
of a spin wave is int_0^1 |S(zeta)|^2 dzeta. The propagation delay L/c is absorbed by the
comoving frame. With omega = 0 the spin wave is frozen and P decays at rate 1.";

/// Returns the canonical dimensionless system solved by every module.
pub fn nondimensionalize_doc() -> &'static str {
    NONDIMENSIONAL_SYSTEM
}

/// Optical depth and detuning (in units of the optical-coherence decay rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    d: f64,
    delta: f64,
}

impl MediumParams {
    pub fn new(d: f64, delta: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid("d", format!("optical depth must be positive and finite, got {d}")));
        }
        if !delta.is_finite() {
            return Err(invalid("delta", format!("detuning must be finite, got {delta}")));
        }
        Ok(Self { d, delta })
    }

    pub fn resonant(d: f64) -> Result<Self> {
        Self::new(d, 0.0)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// 1 + i delta, the complex decay rate of P.
    pub fn complex_decay(&self) -> Complex64 {
        Complex64::new(1.0, self.delta)
    }
}
