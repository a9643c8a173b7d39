//! Sampled field modes, control fields, spin waves and efficiency bookkeeping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};

/// Reversal in time combined with complex conjugation, `f(tau) -> conj(f(T - tau))`.
pub trait TimeReverse {
    fn time_reversed(&self) -> Self;
}

fn check_samples(name: &'static str, expected: usize, samples: &[Complex64]) -> Result<()> {
    if samples.len() != expected {
        return Err(invalid(
            name,
            format!("expected {expected} samples, got {}", samples.len()),
        ));
    }
    if samples.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(invalid(name, "samples must be finite"));
    }
    Ok(())
}

fn interpolate(grid: &TimeGrid, samples: &[Complex64], tau: f64) -> Complex64 {
    match grid.locate(tau) {
        Some((k, f)) => samples[k] * (1.0 - f) + samples[k + 1] * f,
        None => Complex64::new(0.0, 0.0),
    }
}

fn reversed_conj(samples: &[Complex64]) -> Vec<Complex64> {
    samples.iter().rev().map(|c| c.conj()).collect()
}

/// Envelope of a propagating light mode sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMode {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl FieldMode {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        check_samples("samples", grid.len(), &samples)?;
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.times().map(f).collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Photon number carried by the mode, trapezoid rule for `int |E|^2 dtau`.
    pub fn norm2(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.samples)
            .map(|(w, s)| w * s.norm_sqr())
            .sum()
    }

    /// `int conj(self) * other dtau` on a shared grid.
    pub fn inner(&self, other: &FieldMode) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("field modes on different time grids".into()));
        }
        Ok(self
            .grid
            .trapezoid_weights()
            .iter()
            .zip(self.samples.iter().zip(&other.samples))
            .map(|(w, (a, b))| a.conj() * b * *w)
            .sum())
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|s| s * a).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm2();
        if !(n2 > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// Linear interpolation between samples; zero outside the grid.
    pub fn value_at(&self, tau: f64) -> Complex64 {
        interpolate(&self.grid, &self.samples, tau)
    }

    /// Cumulative photon number `int_{tau0}^{tau_k} |E|^2`, one value per sample.
    pub fn cumulative_norm2(&self) -> Vec<f64> {
        let h = self.grid.dtau();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.samples.len());
        out.push(0.0);
        for p in self.samples.windows(2) {
            acc += 0.5 * h * (p[0].norm_sqr() + p[1].norm_sqr());
            out.push(acc);
        }
        out
    }
}

impl TimeReverse for FieldMode {
    fn time_reversed(&self) -> Self {
        Self {
            grid: self.grid,
            samples: reversed_conj(&self.samples),
        }
    }
}

/// Control Rabi frequency `omega = Omega / gamma` on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl ControlField {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        check_samples("control", grid.len(), &samples)?;
        Ok(Self { grid, samples })
    }

    pub fn constant(grid: TimeGrid, omega: Complex64) -> Self {
        Self {
            grid,
            samples: vec![omega; grid.len()],
        }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.times().map(f).collect();
        Self::new(grid, samples)
    }

    /// Piecewise-linear control through `(tau, omega)` knots, held at the end values.
    pub fn piecewise_linear(grid: TimeGrid, knots: &[(f64, Complex64)]) -> Result<Self> {
        if knots.is_empty() {
            return Err(invalid("control", "need at least one knot"));
        }
        if knots.windows(2).any(|p| p[1].0 <= p[0].0) {
            return Err(invalid("control", "knot times must be strictly increasing"));
        }
        Self::from_fn(grid, |t| {
            if t <= knots[0].0 {
                return knots[0].1;
            }
            for p in knots.windows(2) {
                if t <= p[1].0 {
                    let f = (t - p[0].0) / (p[1].0 - p[0].0);
                    return p[0].1 * (1.0 - f) + p[1].1 * f;
                }
            }
            knots[knots.len() - 1].1
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn value_at(&self, tau: f64) -> Complex64 {
        interpolate(&self.grid, &self.samples, tau)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `int_0^T |omega|^2 dtau` by the trapezoid rule.
    pub fn total_h(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.samples)
            .map(|(w, s)| w * s.norm_sqr())
            .sum()
    }

    /// Pulse area `int omega dtau`.
    pub fn area(&self) -> Complex64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.samples)
            .map(|(w, s)| s * *w)
            .sum()
    }
}

impl TimeReverse for ControlField {
    fn time_reversed(&self) -> Self {
        Self {
            grid: self.grid,
            samples: reversed_conj(&self.samples),
        }
    }
}

/// Collective ground-state coherence `S(zeta)` sampled on a spatial quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinWave {
    grid: SpaceGrid,
    samples: Vec<Complex64>,
}

impl SpinWave {
    pub fn new(grid: SpaceGrid, samples: Vec<Complex64>) -> Result<Self> {
        check_samples("spin wave", grid.len(), &samples)?;
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: SpaceGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.nodes().iter().map(|&z| f(z)).collect();
        Self::new(grid, samples)
    }

    pub fn from_real(grid: SpaceGrid, values: &[f64]) -> Result<Self> {
        let samples = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::new(grid, samples)
    }

    pub fn constant(grid: SpaceGrid, value: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            samples: vec![Complex64::new(value, 0.0); n],
        }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Stored excitation `int_0^1 |S|^2 dzeta`.
    pub fn norm2(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.samples)
            .map(|(w, s)| w * s.norm_sqr())
            .sum()
    }

    pub fn inner(&self, other: &SpinWave) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("spin waves on different grids".into()));
        }
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(self.samples.iter().zip(&other.samples))
            .map(|(w, (a, b))| a.conj() * b * *w)
            .sum())
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|s| s * a).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm2();
        if !(n2 > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|s| s.conj()).collect(),
        }
    }

    /// `S(zeta) -> S(1 - zeta)`; the coordinate change between the storage and
    /// backward-retrieval frames.
    pub fn flip(&self) -> Result<Self> {
        if !self.grid.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        Ok(Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().rev().copied().collect(),
        })
    }

    /// L2 distance on a shared grid.
    pub fn distance(&self, other: &SpinWave) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("spin waves on different grids".into()));
        }
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(self.samples.iter().zip(&other.samples))
            .map(|(w, (a, b))| w * (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// L2 distance after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &SpinWave) -> Result<f64> {
        let overlap = self.inner(other)?;
        let n2 = self.norm2() + other.norm2() - 2.0 * overlap.norm();
        Ok(n2.max(0.0).sqrt())
    }

    /// Resample onto another grid (barycentric from Gauss-Legendre sources,
    /// linear otherwise).
    pub fn resample(&self, target: &SpaceGrid) -> Self {
        if *target == self.grid {
            return self.clone();
        }
        let m = self.grid.interpolation_matrix(target);
        let n = self.grid.len();
        let samples = (0..target.len())
            .map(|i| {
                m[i * n..(i + 1) * n]
                    .iter()
                    .zip(&self.samples)
                    .map(|(c, s)| s * *c)
                    .sum()
            })
            .collect();
        Self {
            grid: target.clone(),
            samples,
        }
    }
}

/// Photon-number fractions of a storage and/or retrieval run.
///
/// For a storage run `eta_storage + leak_fraction + decay_fraction +
/// residual_fraction = 1`; for retrieval the output replaces the stored part.
/// `residual_fraction` counts excitation still in the atoms when the run ends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBreakdown {
    pub eta_storage: f64,
    pub eta_retrieval: f64,
    pub eta_total: f64,
    pub leak_fraction: f64,
    pub decay_fraction: f64,
    pub residual_fraction: f64,
}

impl EfficiencyBreakdown {
    pub fn storage_sum(&self) -> f64 {
        self.eta_storage + self.leak_fraction + self.decay_fraction + self.residual_fraction
    }

    pub fn retrieval_sum(&self) -> f64 {
        self.eta_retrieval + self.decay_fraction + self.residual_fraction
    }
}
