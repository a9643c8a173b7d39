//! Retrieval-efficiency kernel and the optimal spin wave.
//!
//! For a spin wave `S(zeta)` expressed in the frame of the retrieval control
//! (control enters at `zeta = 0`, signal leaves at `zeta = 1`), the retrieved
//! photon fraction is
//!
//! ```text
//! eta_r = int int k_d(zeta, zeta') S(zeta) conj(S(zeta')) dzeta dzeta'
//! k_d(zeta, zeta') = d/2 exp(-d (1 - (zeta + zeta')/2)) I0(d sqrt((1 - zeta)(1 - zeta')))
//! ```
//!
//! independently of the control shape and the detuning. The best spin wave is
//! the dominant eigenvector of this positive symmetric operator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::SpaceGrid;
use crate::mode::SpinWave;
use crate::special::i0_scaled;

/// Default Gauss-Legendre node count for the eigenproblem.
pub const DEFAULT_NODES: usize = 200;

/// `k_d(zeta, zeta')`; stable for any optical depth.
pub fn kernel_eval(d: f64, zeta: f64, zeta_p: f64) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!("optical depth must be positive, got {d}")));
    }
    for (name, z) in [("zeta", zeta), ("zeta'", zeta_p)] {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("{name} = {z} outside [0, 1]")));
        }
    }
    Ok(kernel_unchecked(d, zeta, zeta_p))
}

fn kernel_unchecked(d: f64, zeta: f64, zeta_p: f64) -> f64 {
    // fixed argument order keeps the result bitwise symmetric
    let (zeta, zeta_p) = if zeta <= zeta_p { (zeta, zeta_p) } else { (zeta_p, zeta) };
    let a = (1.0 - zeta).sqrt();
    let b = (1.0 - zeta_p).sqrt();
    // -d(1 - (z + z')/2) + d a b = -(d/2)(a - b)^2
    0.5 * d * (-0.5 * d * (a - b) * (a - b)).exp() * i0_scaled(d * a * b)
}

/// Nystrom discretization `K_ij = w_j k_d(zeta_i, zeta_j)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelOperator {
    d: f64,
    grid: SpaceGrid,
    matrix: Vec<f64>,
}

impl KernelOperator {
    pub fn new(d: f64, grid: SpaceGrid) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid("d", format!("optical depth must be positive, got {d}")));
        }
        let n = grid.len();
        let nodes = grid.nodes();
        let w = grid.weights();
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel_unchecked(d, nodes[i], nodes[j]);
                matrix[i * n + j] = k * w[j];
                matrix[j * n + i] = k * w[i];
            }
        }
        Ok(Self { d, grid, matrix })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    /// Row-major matrix `K_ij = w_j k_d(zeta_i, zeta_j)`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    fn apply_samples(&self, s: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        (0..n)
            .map(|i| {
                self.matrix[i * n..(i + 1) * n]
                    .iter()
                    .zip(s)
                    .map(|(k, v)| v * *k)
                    .sum()
            })
            .collect()
    }

    /// `(K S)(zeta) = int k_d(zeta, zeta') S(zeta') dzeta'`.
    pub fn apply(&self, s: &SpinWave) -> Result<SpinWave> {
        self.check_grid(s)?;
        SpinWave::new(self.grid.clone(), self.apply_samples(s.samples()))
    }

    /// Retrieval efficiency of `s`, the quadratic form `<S, K S>`.
    pub fn efficiency(&self, s: &SpinWave) -> Result<f64> {
        self.check_grid(s)?;
        let ks = self.apply_samples(s.samples());
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(s.samples().iter().zip(&ks))
            .map(|(w, (a, b))| w * (a.conj() * b).re)
            .sum())
    }

    fn check_grid(&self, s: &SpinWave) -> Result<()> {
        if s.grid() != &self.grid {
            return Err(Error::GridMismatch(
                "spin wave and kernel use different grids".into(),
            ));
        }
        Ok(())
    }

    /// Dominant eigenpair by power iteration from `S = 1`.
    pub fn dominant_mode(&self, tol: f64, max_iter: usize) -> Result<OptimalSpinWave> {
        if !(tol > 0.0) {
            return Err(invalid("tol", "tolerance must be positive"));
        }
        let w = self.grid.weights();
        let n = self.grid.len();
        let norm = |v: &[f64]| -> f64 {
            v.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
        };
        let mut s = vec![1.0; n];
        let mut eta = 0.0;
        for it in 1..=max_iter {
            let ks: Vec<f64> = (0..n)
                .map(|i| {
                    self.matrix[i * n..(i + 1) * n]
                        .iter()
                        .zip(&s)
                        .map(|(k, v)| k * v)
                        .sum()
                })
                .collect();
            // Rayleigh quotient with |s|_w = 1.
            let new_eta: f64 = s.iter().zip(&ks).zip(w).map(|((a, b), w)| w * a * b).sum();
            let scale = norm(&ks);
            let next: Vec<f64> = ks.iter().map(|v| v / scale).collect();
            let change = next
                .iter()
                .zip(&s)
                .zip(w)
                .map(|((a, b), w)| w * (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let converged = (new_eta - eta).abs() < tol && change < tol.sqrt();
            s = next;
            eta = new_eta;
            if converged {
                return Ok(OptimalSpinWave {
                    wave: SpinWave::from_real(self.grid.clone(), &s)?,
                    eta,
                    iterations: it,
                });
            }
        }
        Err(Error::NotConverged {
            iterations: max_iter,
            eta,
            last: Box::new(SpinWave::from_real(self.grid.clone(), &s)?),
        })
    }
}

/// Unit-norm dominant eigenvector `S~_d` and its eigenvalue `eta_r^max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalSpinWave {
    pub wave: SpinWave,
    pub eta: f64,
    pub iterations: usize,
}

/// `eta_r` of `s` (in its retrieval frame) at optical depth `d`.
pub fn retrieval_efficiency(s: &SpinWave, d: f64) -> Result<f64> {
    KernelOperator::new(d, s.grid().clone())?.efficiency(s)
}

/// Optimal spin wave for retrieval at optical depth `d`.
pub fn optimal_spin_wave(
    d: f64,
    grid: SpaceGrid,
    tol: f64,
    max_iter: usize,
) -> Result<OptimalSpinWave> {
    KernelOperator::new(d, grid)?.dominant_mode(tol, max_iter)
}

/// `optimal_spin_wave` on the default grid with tolerance `1e-10`.
pub fn optimal_spin_wave_default(d: f64) -> Result<OptimalSpinWave> {
    optimal_spin_wave(d, SpaceGrid::gauss_legendre(DEFAULT_NODES)?, 1e-10, 100_000)
}
