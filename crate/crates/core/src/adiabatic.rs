//! Adiabatic retrieval in closed form, control shaping, and optimal storage
//! controls obtained by time reversal.
//!
//! With `P` adiabatically eliminated, a spin wave `s` (retrieval frame) is read
//! out by a control `omega(tau)` as
//!
//! ```text
//! E_out(tau) = omega(tau) F(h(tau)),    h(tau) = int_0^tau |omega|^2
//! F(h) = -sqrt(d)/(1 + i delta) int_0^1 exp(-(d zeta + h)/(1 + i delta))
//!            I0(2 sqrt(d zeta h)/(1 + i delta)) s(1 - zeta) dzeta
//! ```
//!
//! so `|E_out|^2 dtau = |F(h)|^2 dh`. Shaping a control for a target output
//! amounts to inverting the monotone map `h -> G(h) = int_0^h |F|^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::kernel::{self, KernelOperator, OptimalSpinWave};
use crate::mode::{ControlField, FieldMode, SpinWave, TimeReverse};
use crate::params::MediumParams;
use crate::special::exp_i0;

/// Outputs shorter than this (in units of `1/(gamma d)`) are flagged as non-adiabatic.
pub const ADIABATIC_MIN_TD: f64 = 10.0;

/// `h(tau) = int_0^tau |omega|^2`, cumulative trapezoid on the control grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFunction {
    grid: TimeGrid,
    h: Vec<f64>,
}

impl DecayFunction {
    pub fn from_control(ctrl: &ControlField) -> Self {
        let dt = ctrl.grid().dtau();
        let mut h = Vec::with_capacity(ctrl.grid().len());
        let mut acc = 0.0;
        h.push(0.0);
        for p in ctrl.samples().windows(2) {
            acc += 0.5 * dt * (p[0].norm_sqr() + p[1].norm_sqr());
            h.push(acc);
        }
        Self { grid: *ctrl.grid(), h }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn total(&self) -> f64 {
        *self.h.last().unwrap_or(&0.0)
    }
}

/// Evaluator for the retrieval amplitude `F(h)` of one spin wave.
#[derive(Debug, Clone)]
pub struct RetrievalAmplitude {
    prefactor: Complex64,
    inv: Complex64,
    depth_nodes: Vec<f64>,
    coeff: Vec<Complex64>,
}

impl RetrievalAmplitude {
    /// `s` is in the retrieval frame and must live on a symmetric grid.
    pub fn new(s: &SpinWave, params: &MediumParams) -> Result<Self> {
        if !s.grid().is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        let d = params.d();
        let inv = 1.0 / params.complex_decay();
        let mirrored = s.flip()?;
        let coeff = s
            .grid()
            .weights()
            .iter()
            .zip(mirrored.samples())
            .map(|(w, v)| v * *w)
            .collect();
        Ok(Self {
            prefactor: -d.sqrt() * inv,
            inv,
            depth_nodes: s.grid().nodes().iter().map(|z| d * z).collect(),
            coeff,
        })
    }

    pub fn at(&self, h: f64) -> Complex64 {
        let h = h.max(0.0);
        let sum: Complex64 = self
            .depth_nodes
            .iter()
            .zip(&self.coeff)
            .map(|(&dz, c)| {
                let a = -(dz + h) * self.inv;
                let z = 2.0 * (dz * h).sqrt() * self.inv;
                c * exp_i0(a, z)
            })
            .sum();
        self.prefactor * sum
    }
}

/// Output of [`retrieve_adiabatic`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdiabaticRetrieval {
    pub output: FieldMode,
    pub decay: DecayFunction,
    /// `false` when the output window is too short for adiabatic elimination.
    pub adiabatic: bool,
}

fn adiabatic_window(grid: &TimeGrid, d: f64) -> bool {
    grid.duration() * d >= ADIABATIC_MIN_TD
}

/// Closed-form adiabatic retrieval of `s` (retrieval frame) by `ctrl`.
pub fn retrieve_adiabatic(
    s: &SpinWave,
    ctrl: &ControlField,
    params: &MediumParams,
) -> Result<AdiabaticRetrieval> {
    let amp = RetrievalAmplitude::new(s, params)?;
    let decay = DecayFunction::from_control(ctrl);
    let samples = ctrl
        .samples()
        .iter()
        .zip(decay.values())
        .map(|(w, &h)| w * amp.at(h))
        .collect();
    Ok(AdiabaticRetrieval {
        output: FieldMode::new(*ctrl.grid(), samples)?,
        decay,
        adiabatic: adiabatic_window(ctrl.grid(), params.d()),
    })
}

/// Discretized linear map from retrieval-frame spin waves to output samples,
/// `E_k = sum_j w_j R_kj s_j`, together with its adjoint (closed-form storage).
#[derive(Debug, Clone)]
pub struct RetrievalMap {
    time: TimeGrid,
    space: SpaceGrid,
    rows: Vec<Complex64>,
}

impl RetrievalMap {
    pub fn new(space: &SpaceGrid, ctrl: &ControlField, params: &MediumParams) -> Result<Self> {
        if !space.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        let d = params.d();
        let inv = 1.0 / params.complex_decay();
        let pre = -d.sqrt() * inv;
        let decay = DecayFunction::from_control(ctrl);
        let n = space.len();
        let mut rows = Vec::with_capacity(ctrl.grid().len() * n);
        for (omega, &h) in ctrl.samples().iter().zip(decay.values()) {
            for &z in space.nodes() {
                let dz = d * (1.0 - z);
                let a = -(dz + h) * inv;
                let arg = 2.0 * (dz * h).sqrt() * inv;
                rows.push(pre * omega * exp_i0(a, arg));
            }
        }
        Ok(Self {
            time: *ctrl.grid(),
            space: space.clone(),
            rows,
        })
    }

    pub fn retrieve(&self, s: &SpinWave) -> Result<FieldMode> {
        if s.grid() != &self.space {
            return Err(Error::GridMismatch("spin wave grid differs from map grid".into()));
        }
        let n = self.space.len();
        let w = self.space.weights();
        let out = self
            .rows
            .chunks(n)
            .map(|row| {
                row.iter()
                    .zip(s.samples())
                    .zip(w)
                    .map(|((r, v), w)| r * v * *w)
                    .sum()
            })
            .collect();
        FieldMode::new(self.time, out)
    }

    /// Spin wave (retrieval frame of the reversed process) written by storing
    /// `input` with the time-reversed control.
    pub fn store_reversed(&self, input: &FieldMode) -> Result<SpinWave> {
        if input.grid() != &self.time {
            return Err(Error::GridMismatch("input grid differs from control grid".into()));
        }
        let n = self.space.len();
        let wt = self.time.trapezoid_weights();
        let mut s = vec![Complex64::new(0.0, 0.0); n];
        // b = time reverse of input; s_j = sum_k wt_k R_kj conj(b_k)
        let b = input.time_reversed();
        for ((row, bk), w) in self.rows.chunks(n).zip(b.samples()).zip(&wt) {
            let c = bk.conj() * *w;
            for (sj, r) in s.iter_mut().zip(row) {
                *sj += r * c;
            }
        }
        SpinWave::new(self.space.clone(), s)
    }
}

/// Closed-form adiabatic storage of `input` by `storage_ctrl`, returned in the
/// storage frame on `grid`.
pub fn store_adiabatic(
    input: &FieldMode,
    storage_ctrl: &ControlField,
    params: &MediumParams,
    grid: &SpaceGrid,
) -> Result<SpinWave> {
    let map = RetrievalMap::new(grid, &storage_ctrl.time_reversed(), params)?;
    map.store_reversed(input)?.flip()
}

/// Largest `h` needed before the retrieval integrand is exhausted:
/// `(sqrt(h) - sqrt(d))^2 >= 20 (1 + delta^2)`.
pub fn auto_h_max(params: &MediumParams) -> f64 {
    let d = params.d();
    let spread = (20.0 * (1.0 + params.delta() * params.delta())).sqrt();
    (d.sqrt() + spread).powi(2).max(50.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingOptions {
    /// Cap on `h`; `None` picks [`auto_h_max`].
    pub h_max: Option<f64>,
    /// Table spacing in `u = sqrt(h)`.
    pub du: f64,
}

impl Default for ShapingOptions {
    fn default() -> Self {
        Self { h_max: None, du: 0.02 }
    }
}

/// Output of [`shape_retrieval_control`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapedControl {
    pub control: ControlField,
    pub decay: DecayFunction,
    /// Retrieval efficiency of the spin wave (kernel value).
    pub eta_r: f64,
    /// Fraction of `eta_r` lost because `h` was capped at `h_max`.
    pub truncation_loss: f64,
    pub h_max: f64,
    pub adiabatic: bool,
}

/// `G(u^2) = int_0^{u^2} |F(h)|^2 dh` tabulated on a uniform grid in `u = sqrt(h)`.
struct CumulativeTable {
    du: f64,
    g: Vec<f64>,
    slope: Vec<f64>,
}

impl CumulativeTable {
    fn build(amp: &RetrievalAmplitude, h_max: f64, du: f64) -> Self {
        let u_max = h_max.sqrt();
        let n = ((u_max / du).ceil() as usize).max(4);
        let du = u_max / n as f64;
        let density = |u: f64| 2.0 * u * amp.at(u * u).norm_sqr();
        let slope: Vec<f64> = (0..=n).map(|k| density(k as f64 * du)).collect();
        let mut g = Vec::with_capacity(n + 1);
        g.push(0.0);
        let mut acc = 0.0;
        for k in 0..n {
            let mid = density((k as f64 + 0.5) * du);
            acc += du / 6.0 * (slope[k] + 4.0 * mid + slope[k + 1]);
            g.push(acc);
        }
        Self { du, g, slope }
    }

    fn total(&self) -> f64 {
        *self.g.last().unwrap()
    }

    /// Solve `G(u) = target` starting the search at interval `start`; returns
    /// `(u, interval)`.
    fn invert(&self, target: f64, start: usize) -> (f64, usize) {
        let n = self.g.len() - 1;
        let mut k = start.min(n - 1);
        while k + 1 < n && self.g[k + 1] < target {
            k += 1;
        }
        let (g0, g1) = (self.g[k], self.g[k + 1]);
        let (m0, m1) = (self.slope[k] * self.du, self.slope[k + 1] * self.du);
        // cubic Hermite in t in [0, 1]
        let hermite = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * g0
                + (t3 - 2.0 * t2 + t) * m0
                + (-2.0 * t3 + 3.0 * t2) * g1
                + (t3 - t2) * m1
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if hermite(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ((k as f64 + 0.5 * (lo + hi)) * self.du, k)
    }
}

/// Control that retrieves `s` (retrieval frame) into `sqrt(eta_r) * target`.
pub fn shape_retrieval_control(
    s: &SpinWave,
    target: &FieldMode,
    params: &MediumParams,
    opts: &ShapingOptions,
) -> Result<ShapedControl> {
    let eta = kernel::retrieval_efficiency(s, params.d())?;
    if !(eta > 1e-300) {
        return Err(Error::ZeroEfficiency);
    }
    shape_with_efficiency(s, eta, target, params, opts)
}

fn shape_with_efficiency(
    s: &SpinWave,
    eta: f64,
    target: &FieldMode,
    params: &MediumParams,
    opts: &ShapingOptions,
) -> Result<ShapedControl> {
    if !(opts.du > 0.0) {
        return Err(invalid("du", "table spacing must be positive"));
    }
    let h_max = opts.h_max.unwrap_or_else(|| auto_h_max(params));
    if !(h_max > 0.0) {
        return Err(invalid("h_max", "cap on h must be positive"));
    }
    let target = target.normalized()?;
    let amp = RetrievalAmplitude::new(s, params)?;
    let table = CumulativeTable::build(&amp, h_max, opts.du);
    let g_total = table.total();
    let max_density = table
        .slope
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let u = k as f64 * table.du;
            if u > 0.0 { v / (2.0 * u) } else { amp.at(0.0).norm_sqr() }
        })
        .fold(0.0, f64::max);

    let grid = *target.grid();
    let cumulative = target.cumulative_norm2();
    let n = grid.len();
    let mut h = vec![0.0; n];
    let mut amps = vec![Complex64::new(0.0, 0.0); n];
    let mut interval = 0;
    for k in 0..n {
        let want = eta * cumulative[k];
        let hk = if want >= g_total {
            h_max
        } else if want <= 0.0 {
            0.0
        } else {
            let (u, next) = table.invert(want, interval);
            interval = next;
            u * u
        };
        // keep h nondecreasing against round-off in the inversion
        h[k] = if k > 0 { hk.max(h[k - 1]) } else { hk };
        amps[k] = amp.at(h[k]);
    }

    let dt = grid.dtau();
    let fd = |k: usize| -> f64 {
        let rate = if k == 0 {
            (h[1] - h[0]) / dt
        } else if k == n - 1 {
            (h[n - 1] - h[n - 2]) / dt
        } else {
            (h[k + 1] - h[k - 1]) / (2.0 * dt)
        };
        rate.max(0.0)
    };
    let root_eta = eta.sqrt();
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let tk = target.samples()[k];
        let f2 = amps[k].norm_sqr();
        let rate = if f2 > 1e-14 * max_density {
            eta * tk.norm_sqr() / f2
        } else {
            fd(k)
        };
        if tk.norm() > 0.0 && f2 > 0.0 {
            phase = (tk * root_eta / amps[k]).arg();
        }
        samples.push(Complex64::from_polar(rate.sqrt(), phase));
    }
    let control = ControlField::new(grid, samples)?;
    let decay = DecayFunction::from_control(&control);
    Ok(ShapedControl {
        control,
        decay,
        eta_r: eta,
        truncation_loss: ((eta - g_total) / eta).max(0.0),
        h_max,
        adiabatic: adiabatic_window(&grid, params.d()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageOptions {
    pub kernel_nodes: usize,
    pub kernel_tol: f64,
    pub kernel_max_iter: usize,
    pub shaping: ShapingOptions,
}

impl Default for StorageOptions {
    fn default() -> Self {
        Self {
            kernel_nodes: kernel::DEFAULT_NODES,
            kernel_tol: 1e-10,
            kernel_max_iter: 100_000,
            shaping: ShapingOptions::default(),
        }
    }
}

/// Optimal adiabatic storage control for `input`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalStorage {
    /// Storage control, the time reverse of `retrieval.control`.
    pub control: ControlField,
    /// Equal to `eta_r^max(d)`.
    pub predicted_eta_s: f64,
    /// Optimal spin wave in the backward-retrieval frame; the stored wave is its flip.
    pub optimal: OptimalSpinWave,
    /// Retrieval control mapping the optimal spin wave onto the reversed input.
    pub retrieval: ShapedControl,
}

pub fn optimal_storage_control(
    input: &FieldMode,
    params: &MediumParams,
    opts: &StorageOptions,
) -> Result<OptimalStorage> {
    let grid = SpaceGrid::gauss_legendre(opts.kernel_nodes)?;
    let optimal = KernelOperator::new(params.d(), grid)?
        .dominant_mode(opts.kernel_tol, opts.kernel_max_iter)?;
    optimal_storage_control_for(input, params, optimal, &opts.shaping)
}

/// As [`optimal_storage_control`] with a precomputed optimal spin wave.
pub fn optimal_storage_control_for(
    input: &FieldMode,
    params: &MediumParams,
    optimal: OptimalSpinWave,
    shaping: &ShapingOptions,
) -> Result<OptimalStorage> {
    let target = input.normalized()?.time_reversed();
    let retrieval = shape_with_efficiency(&optimal.wave, optimal.eta, &target, params, shaping)?;
    Ok(OptimalStorage {
        control: retrieval.control.time_reversed(),
        predicted_eta_s: optimal.eta,
        optimal,
        retrieval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid_t(duration: f64, n: usize) -> TimeGrid {
        TimeGrid::spanning(0.0, duration, n).unwrap()
    }

    #[test]
    fn zero_control_gives_zero_output() {
        let s = SpinWave::constant(SpaceGrid::gauss_legendre(32).unwrap(), 1.0);
        let p = MediumParams::resonant(5.0).unwrap();
        let out = retrieve_adiabatic(&s, &ControlField::zeros(grid_t(10.0, 101)), &p).unwrap();
        assert!(out.output.samples().iter().all(|v| v.norm() == 0.0));
        assert_eq!(out.decay.total(), 0.0);
    }

    #[test]
    fn decay_function_is_nondecreasing_from_zero() {
        let ctrl = ControlField::from_fn(grid_t(5.0, 51), |t| Complex64::new(t.sin(), 0.3)).unwrap();
        let h = DecayFunction::from_control(&ctrl);
        assert_eq!(h.values()[0], 0.0);
        assert!(h.values().windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn short_window_is_flagged_non_adiabatic() {
        let s = SpinWave::constant(SpaceGrid::gauss_legendre(16).unwrap(), 1.0);
        let p = MediumParams::resonant(2.0).unwrap();
        let ctrl = ControlField::constant(grid_t(1.0, 11), Complex64::new(1.0, 0.0));
        assert!(!retrieve_adiabatic(&s, &ctrl, &p).unwrap().adiabatic);
        let ctrl = ControlField::constant(grid_t(10.0, 11), Complex64::new(1.0, 0.0));
        assert!(retrieve_adiabatic(&s, &ctrl, &p).unwrap().adiabatic);
    }

    #[test]
    fn map_matches_direct_retrieval() {
        let g = SpaceGrid::gauss_legendre(24).unwrap();
        let s = SpinWave::from_fn(g.clone(), |z| Complex64::new(z, 0.5 - z)).unwrap();
        let p = MediumParams::new(4.0, 3.0).unwrap();
        let ctrl = ControlField::from_fn(grid_t(8.0, 81), |t| Complex64::new(1.0 + 0.2 * t, 0.1)).unwrap();
        let direct = retrieve_adiabatic(&s, &ctrl, &p).unwrap().output;
        let via_map = RetrievalMap::new(&g, &ctrl, &p).unwrap().retrieve(&s).unwrap();
        for (a, b) in direct.samples().iter().zip(via_map.samples()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_spin_wave_cannot_be_shaped() {
        let s = SpinWave::constant(SpaceGrid::gauss_legendre(16).unwrap(), 0.0);
        let p = MediumParams::resonant(2.0).unwrap();
        let target = FieldMode::from_fn(grid_t(10.0, 101), |t| Complex64::new((t * 0.3).sin(), 0.0)).unwrap();
        assert!(matches!(
            shape_retrieval_control(&s, &target, &p, &ShapingOptions::default()),
            Err(Error::ZeroEfficiency)
        ));
    }

    #[test]
    fn auto_cap_grows_with_depth_and_detuning() {
        let a = auto_h_max(&MediumParams::resonant(10.0).unwrap());
        let b = auto_h_max(&MediumParams::resonant(100.0).unwrap());
        let c = auto_h_max(&MediumParams::new(10.0, 50.0).unwrap());
        assert!(a < b && a < c);
        assert!(b > 100.0);
    }
}
