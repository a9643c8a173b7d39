//! Fast (pi-pulse) retrieval and storage.
//!
//! A resonant control much stronger than `d` swaps the optical polarization and
//! the spin wave in a time too short for anything else to happen. With the
//! rotation generated by a real `omega`, area `int omega dtau = pi/2` gives the
//! full swap `P -> i S`, `S -> i P`. After the swap the polarization radiates
//! freely and the output is
//!
//! ```text
//! E_out(tau) = -sqrt(d) int_0^1 e^{-tau} J0(2 sqrt(d zeta tau)) s(1 - zeta) dzeta
//! ```
//!
//! for a spin wave `s` in the retrieval frame.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::kernel::{KernelOperator, DEFAULT_NODES};
use crate::mode::{FieldMode, SpinWave, TimeReverse};
use crate::simulator::EnsembleState;
use crate::special::j0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Closed-form fast output of `s` (retrieval frame) on `grid`; time is
/// measured from `grid.tau0()`.
pub fn retrieve_fast(s: &SpinWave, d: f64, grid: TimeGrid) -> Result<FieldMode> {
    fast_output(s, d, grid, grid.tau0())
}

fn fast_output(s: &SpinWave, d: f64, grid: TimeGrid, origin: f64) -> Result<FieldMode> {
    if !(d.is_finite() && d > 0.0) {
        return Err(invalid("d", format!("optical depth must be positive, got {d}")));
    }
    let mirrored = s.flip()?;
    let coeff: Vec<Complex64> = s
        .grid()
        .weights()
        .iter()
        .zip(mirrored.samples())
        .map(|(w, v)| v * *w)
        .collect();
    let root_d = d.sqrt();
    let samples = grid
        .times()
        .map(|t| {
            let tau = t - origin;
            let sum: Complex64 = s
                .grid()
                .nodes()
                .iter()
                .zip(&coeff)
                .map(|(z, c)| c * j0(2.0 * (d * z * tau).sqrt()))
                .sum();
            -root_d * (-tau).exp() * sum
        })
        .collect();
    FieldMode::new(grid, samples)
}

/// Output time grid long enough to capture the whole fast output. The window
/// doubles until its last 1% adds less than `1e-4` to the norm and the tail
/// beyond it, bounded by `|E(T)|^2 / 2` since the output decays at least as
/// `e^{-tau}`, is below `1e-5`.
pub fn fast_output_grid(s: &SpinWave, d: f64) -> Result<TimeGrid> {
    let scale = d.max(1.0);
    let dtau = 1.0 / (50.0 * scale);
    let mut duration = 20.0 / scale;
    loop {
        let n = (duration / dtau).round() as usize + 1;
        let tail_start = 0.99 * duration;
        let tail = TimeGrid::spanning(tail_start, duration - tail_start, (n / 100).max(2))?;
        let window = fast_output(s, d, tail, 0.0)?;
        let edge = window.samples().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        if (window.norm2() < 1e-4 && 0.5 * edge < 1e-5) || duration > 200.0 {
            return TimeGrid::spanning(0.0, duration, n);
        }
        duration *= 2.0;
    }
}

/// Ideal instantaneous swap `P -> i S`, `S -> i P`; the field is untouched.
pub fn pi_pulse(state: &EnsembleState) -> EnsembleState {
    EnsembleState {
        grid: state.grid.clone(),
        e: state.e.clone(),
        p: state.s.iter().map(|v| I * v).collect(),
        s: state.p.iter().map(|v| I * v).collect(),
        tau: state.tau,
    }
}

/// Optimal input for fast storage, normalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FastInput {
    pub mode: FieldMode,
    /// Norm of the retrieved output before normalization, `eta_r^max(d)` up to
    /// the part outside `grid`.
    pub pre_norm2: f64,
    pub eta_r_max: f64,
}

/// Time reverse of the fast output retrieved from the optimal spin wave.
pub fn optimal_fast_input(d: f64, grid: TimeGrid) -> Result<FastInput> {
    let space = SpaceGrid::gauss_legendre(DEFAULT_NODES)?;
    let optimal = KernelOperator::new(d, space)?.dominant_mode(1e-10, 100_000)?;
    let out = retrieve_fast(&optimal.wave, d, grid)?;
    let pre_norm2 = out.norm2();
    Ok(FastInput {
        mode: out.normalized()?.time_reversed(),
        pre_norm2,
        eta_r_max: optimal.eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(p: Vec<Complex64>, s: Vec<Complex64>) -> EnsembleState {
        let grid = SpaceGrid::gauss_legendre(p.len()).unwrap();
        EnsembleState { e: vec![Complex64::new(0.0, 0.0); p.len()], grid, p, s, tau: 0.0 }
    }

    #[test]
    fn pi_pulse_moves_spin_wave_to_polarization() {
        let s0: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let st = state(vec![Complex64::new(0.0, 0.0); 8], s0.clone());
        let out = pi_pulse(&st);
        for (p, s) in out.p.iter().zip(&s0) {
            assert_eq!(*p, I * s);
        }
        assert!(out.s.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn pi_pulse_twice_is_a_sign_flip() {
        let p0: Vec<Complex64> = (0..6).map(|k| Complex64::new(0.1 * k as f64, -0.2)).collect();
        let s0: Vec<Complex64> = (0..6).map(|k| Complex64::new(1.0, k as f64)).collect();
        let st = state(p0.clone(), s0.clone());
        let twice = pi_pulse(&pi_pulse(&st));
        for j in 0..6 {
            assert_eq!(twice.p[j], -p0[j]);
            assert_eq!(twice.s[j], -s0[j]);
        }
        assert_relative_eq!(twice.excitation(), st.excitation(), max_relative = 1e-15);
    }

    #[test]
    fn output_starts_at_minus_root_d_times_area() {
        let g = SpaceGrid::gauss_legendre(20).unwrap();
        let s = SpinWave::from_fn(g.clone(), |z| Complex64::new(1.0 + z, 0.0)).unwrap();
        let d = 7.0;
        let out = retrieve_fast(&s, d, TimeGrid::spanning(0.0, 1.0, 3).unwrap()).unwrap();
        // int_0^1 s(1 - zeta) = int_0^1 (2 - zeta) = 1.5
        assert_relative_eq!(out.samples()[0].re, -d.sqrt() * 1.5, max_relative = 1e-13);
    }
}
