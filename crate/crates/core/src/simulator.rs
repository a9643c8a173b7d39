//! Direct integration of the full equations of motion
//!
//! ```text
//! dE/dzeta = i sqrt(d) P
//! dP/dtau  = -(1 + i delta) P + i sqrt(d) E + i omega S
//! dS/dtau  = i conj(omega) P
//! ```
//!
//! in the comoving frame. `P` and `S` live on Gauss-Legendre nodes; the field
//! is the instantaneous functional `E(zeta) = E(0) + i sqrt(d) int_0^zeta P`,
//! computed with the spectral integration matrix. On these nodes the spatial
//! semi-discretization keeps the photon balance
//!
//! ```text
//! d/dtau int (|P|^2 + |S|^2) = -2 int |P|^2 - |E(1)|^2 + |E(0)|^2
//! ```
//!
//! exactly, so the audit defect measures only the time-stepping error. Time
//! stepping is classical RK4 with the input and control interpolated linearly
//! between their samples; substeps never straddle a sample.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::mode::{ControlField, EfficiencyBreakdown, FieldMode, SpinWave};
use crate::params::MediumParams;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const MIN_NODES: usize = 64;

/// Node count that resolves the optimal spin waves at optical depth `d`.
pub fn auto_n_zeta(d: f64) -> usize {
    let n = (40.0 + 6.0 * d.sqrt()).ceil() as usize;
    let n = n.max(MIN_NODES);
    n + n % 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Spatial nodes; `None` picks [`auto_n_zeta`].
    pub n_zeta: Option<usize>,
    /// RK4 step is `step_scale / rate`.
    pub step_scale: f64,
    /// Contribution of the optical depth to the rate, `rate += depth_rate * d`.
    pub depth_rate: f64,
    /// Target relative defect of the photon balance.
    pub audit_tol: f64,
    /// Maximum number of step halvings while the defect is above `audit_tol`.
    pub max_refinements: usize,
    /// After storage, let the remaining optical polarization radiate with the
    /// control off so it is booked as leak or decay instead of residual.
    pub flush: bool,
    /// Substep multiplier of the first attempt.
    pub initial_refinement: usize,
    /// Drop the optical-coherence decay term; for conservation checks only.
    #[doc(hidden)]
    pub lossless: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_zeta: None,
            step_scale: 0.5,
            depth_rate: 0.05,
            audit_tol: 1e-4,
            max_refinements: 6,
            flush: true,
            initial_refinement: 1,
            lossless: false,
        }
    }
}

/// Field, optical polarization and spin wave on the simulator's spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub grid: SpaceGrid,
    pub e: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub tau: f64,
}

impl EnsembleState {
    pub fn excitation(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(self.p.iter().zip(&self.s))
            .map(|(w, (p, s))| w * (p.norm_sqr() + s.norm_sqr()))
            .sum()
    }

    pub fn spin_wave(&self) -> Result<SpinWave> {
        SpinWave::new(self.grid.clone(), self.s.clone())
    }

    pub fn polarization(&self) -> Result<SpinWave> {
        SpinWave::new(self.grid.clone(), self.p.clone())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rk4_steps: usize,
    /// Step-count multiplier that met the audit tolerance.
    pub refinement: usize,
    pub flush_duration: f64,
    /// Largest excess of atomic excitation over everything fed in, relative.
    pub max_excess: f64,
}

/// Photon balance of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Initial excitation plus photons fed in at the entrance.
    pub supplied: f64,
    pub stored: f64,
    pub polarization: f64,
    pub transmitted: f64,
    pub decayed: f64,
    /// `|supplied - everything else| / supplied`.
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub final_state: EnsembleState,
    /// `E(1, tau)` on the drive grid.
    pub output_mode: FieldMode,
    pub breakdown: EfficiencyBreakdown,
    pub audit: AuditReport,
    pub diagnostics: Diagnostics,
}

/// Photon balance of a finished run.
pub fn energy_audit(result: &SimulationResult) -> AuditReport {
    result.audit
}

/// Input and control samples, linearly interpolated.
struct Drive<'a> {
    grid: TimeGrid,
    input: Option<&'a [Complex64]>,
    control: Option<&'a [Complex64]>,
}

impl Drive<'_> {
    fn at(samples: Option<&[Complex64]>, k: usize, f: f64) -> Complex64 {
        match samples {
            Some(v) => v[k] * (1.0 - f) + v[k + 1] * f,
            None => ZERO,
        }
    }

    fn peak_control(&self, k: usize) -> f64 {
        match self.control {
            Some(v) => v[k].norm().max(v[k + 1].norm()),
            None => 0.0,
        }
    }
}

struct Run {
    p: Vec<Complex64>,
    s: Vec<Complex64>,
    fed: f64,
    transmitted: f64,
    decayed: f64,
    output: Vec<Complex64>,
    steps: usize,
    max_excess: f64,
}

/// Reusable integrator for a fixed spatial grid.
#[derive(Debug, Clone)]
pub struct Simulator {
    grid: SpaceGrid,
    q: Vec<f64>,
    config: SimConfig,
}

impl Simulator {
    pub fn new(n_zeta: usize, config: SimConfig) -> Result<Self> {
        if n_zeta < MIN_NODES {
            return Err(invalid("n_zeta", format!("need at least {MIN_NODES} nodes, got {n_zeta}")));
        }
        if !(config.step_scale > 0.0 && config.step_scale <= 2.0) {
            return Err(invalid("step_scale", "must lie in (0, 2]"));
        }
        if !(config.depth_rate >= 0.0) || !(config.audit_tol > 0.0) {
            return Err(invalid("audit_tol", "rates and tolerances must be positive"));
        }
        if config.initial_refinement == 0 {
            return Err(invalid("initial_refinement", "must be at least 1"));
        }
        let grid = SpaceGrid::gauss_legendre(n_zeta)?;
        let q = grid.integration_matrix()?;
        Ok(Self { grid, q, config })
    }

    /// Simulator with the configured or automatic node count for `params`.
    pub fn for_params(params: &MediumParams, config: SimConfig) -> Result<Self> {
        Self::new(config.n_zeta.unwrap_or_else(|| auto_n_zeta(params.d())), config)
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn sum_weighted(&self, v: &[Complex64]) -> Complex64 {
        self.grid.weights().iter().zip(v).map(|(w, x)| x * *w).sum()
    }

    fn norm2(&self, v: &[Complex64]) -> f64 {
        self.grid.weights().iter().zip(v).map(|(w, x)| w * x.norm_sqr()).sum()
    }

    /// `E(zeta_i)` for entrance field `e0`.
    fn field(&self, p: &[Complex64], e0: Complex64, root_d: f64) -> Vec<Complex64> {
        let n = p.len();
        self.q
            .chunks(n)
            .map(|row| {
                let acc: Complex64 = row.iter().zip(p).map(|(q, x)| x * *q).sum();
                e0 + I * root_d * acc
            })
            .collect()
    }

    /// Time derivatives of `(P, S)` and of the three photon counters.
    #[allow(clippy::too_many_arguments)]
    fn rhs(
        &self,
        p: &[Complex64],
        s: &[Complex64],
        e0: Complex64,
        omega: Complex64,
        decay: Complex64,
        root_d: f64,
        dp: &mut [Complex64],
        ds: &mut [Complex64],
    ) -> [f64; 3] {
        let e = self.field(p, e0, root_d);
        let coupling = I * root_d;
        let om = I * omega;
        let om_c = I * omega.conj();
        for j in 0..p.len() {
            dp[j] = -decay * p[j] + coupling * e[j] + om * s[j];
            ds[j] = om_c * p[j];
        }
        let out = e0 + coupling * self.sum_weighted(p);
        [e0.norm_sqr(), out.norm_sqr(), 2.0 * decay.re * self.norm2(p)]
    }

    fn integrate(
        &self,
        p0: Vec<Complex64>,
        s0: Vec<Complex64>,
        drive: &Drive,
        params: &MediumParams,
        multiplier: usize,
    ) -> Result<Run> {
        let n = self.grid.len();
        let root_d = params.d().sqrt();
        let decay = if self.config.lossless {
            Complex64::new(0.0, params.delta())
        } else {
            params.complex_decay()
        };
        let base_rate = decay.norm() + self.config.depth_rate * params.d();
        let n0 = self.norm2(&p0) + self.norm2(&s0);
        let dt = drive.grid.dtau();

        let mut p = p0;
        let mut s = s0;
        let mut acc = [0.0f64; 3];
        let mut output = Vec::with_capacity(drive.grid.len());
        let (mut k1p, mut k1s) = (vec![ZERO; n], vec![ZERO; n]);
        let (mut k2p, mut k2s) = (vec![ZERO; n], vec![ZERO; n]);
        let (mut k3p, mut k3s) = (vec![ZERO; n], vec![ZERO; n]);
        let (mut k4p, mut k4s) = (vec![ZERO; n], vec![ZERO; n]);
        let (mut tp, mut ts) = (vec![ZERO; n], vec![ZERO; n]);
        let mut steps = 0;
        let mut max_excess: f64 = 0.0;

        let first_input = drive.input.map_or(ZERO, |v| v[0]);
        output.push(first_input + I * root_d * self.sum_weighted(&p));

        for k in 0..drive.grid.len().saturating_sub(1) {
            let rate = base_rate + drive.peak_control(k);
            let m = ((dt * rate / self.config.step_scale).ceil() as usize).max(1) * multiplier;
            let h = dt / m as f64;
            for sub in 0..m {
                let f0 = sub as f64 / m as f64;
                let fm = (sub as f64 + 0.5) / m as f64;
                let f1 = (sub + 1) as f64 / m as f64;
                let at = |f: f64| (Drive::at(drive.input, k, f), Drive::at(drive.control, k, f));
                let (e_a, w_a) = at(f0);
                let (e_b, w_b) = at(fm);
                let (e_c, w_c) = at(f1);

                let a1 = self.rhs(&p, &s, e_a, w_a, decay, root_d, &mut k1p, &mut k1s);
                for j in 0..n {
                    tp[j] = p[j] + k1p[j] * (0.5 * h);
                    ts[j] = s[j] + k1s[j] * (0.5 * h);
                }
                let a2 = self.rhs(&tp, &ts, e_b, w_b, decay, root_d, &mut k2p, &mut k2s);
                for j in 0..n {
                    tp[j] = p[j] + k2p[j] * (0.5 * h);
                    ts[j] = s[j] + k2s[j] * (0.5 * h);
                }
                let a3 = self.rhs(&tp, &ts, e_b, w_b, decay, root_d, &mut k3p, &mut k3s);
                for j in 0..n {
                    tp[j] = p[j] + k3p[j] * h;
                    ts[j] = s[j] + k3s[j] * h;
                }
                let a4 = self.rhs(&tp, &ts, e_c, w_c, decay, root_d, &mut k4p, &mut k4s);
                let sixth = h / 6.0;
                for j in 0..n {
                    p[j] += (k1p[j] + (k2p[j] + k3p[j]) * 2.0 + k4p[j]) * sixth;
                    s[j] += (k1s[j] + (k2s[j] + k3s[j]) * 2.0 + k4s[j]) * sixth;
                }
                for c in 0..3 {
                    acc[c] += sixth * (a1[c] + 2.0 * (a2[c] + a3[c]) + a4[c]);
                }
            }
            steps += m;

            let e_end = drive.input.map_or(ZERO, |v| v[k + 1]);
            output.push(e_end + I * root_d * self.sum_weighted(&p));
            let excitation = self.norm2(&p) + self.norm2(&s);
            let supplied = n0 + acc[0];
            let excess = (excitation - supplied) / supplied.max(1e-300);
            if !excitation.is_finite() || excitation > supplied + 1e-6 {
                return Err(Error::Unstable {
                    tau: drive.grid.tau(k + 1),
                    detail: format!(
                        "atomic excitation {excitation:.6e} exceeds supplied photons {supplied:.6e}"
                    ),
                });
            }
            max_excess = max_excess.max(excess);
        }
        Ok(Run {
            p,
            s,
            fed: acc[0],
            transmitted: acc[1],
            decayed: acc[2],
            output,
            steps,
            max_excess,
        })
    }

    /// Radiate the remaining polarization with the control off.
    fn flush(&self, run: &mut Run, params: &MediumParams, tau: f64, multiplier: usize) -> Result<f64> {
        const CHUNK: f64 = 1.0;
        const MAX: f64 = 60.0;
        let grid = TimeGrid::new(tau, CHUNK / 8.0, 9)?;
        let drive = Drive { grid, input: None, control: None };
        let mut elapsed = 0.0;
        while elapsed < MAX && self.norm2(&run.p) > 1e-14 * (run.fed + self.norm2(&run.s)).max(1e-300) {
            let next = self.integrate(
                std::mem::take(&mut run.p),
                std::mem::take(&mut run.s),
                &drive,
                params,
                multiplier,
            )?;
            run.p = next.p;
            run.s = next.s;
            run.transmitted += next.transmitted;
            run.decayed += next.decayed;
            run.steps += next.steps;
            elapsed += CHUNK;
        }
        Ok(elapsed)
    }

    /// Run with automatic step refinement until the photon balance closes.
    fn refine<F>(&self, mut attempt: F) -> Result<(Run, AuditReport, Diagnostics)>
    where
        F: FnMut(usize) -> Result<(Run, f64, f64)>,
    {
        let mut multiplier = self.config.initial_refinement;
        let mut last_err = None;
        let mut best = None;
        for _ in 0..=self.config.max_refinements {
            match attempt(multiplier) {
                Ok((run, initial, flushed)) => {
                    let audit = self.audit(&run, initial);
                    let diag = Diagnostics {
                        rk4_steps: run.steps,
                        refinement: multiplier,
                        flush_duration: flushed,
                        max_excess: run.max_excess,
                    };
                    if audit.defect < self.config.audit_tol {
                        return Ok((run, audit, diag));
                    }
                    best = Some((run, audit, diag));
                }
                Err(e @ Error::Unstable { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
            multiplier *= 2;
        }
        match (best, last_err) {
            (Some(b), _) => Ok(b),
            (None, Some(e)) => Err(e),
            (None, None) => unreachable!("at least one attempt runs"),
        }
    }

    fn audit(&self, run: &Run, initial: f64) -> AuditReport {
        let supplied = initial + run.fed;
        let stored = self.norm2(&run.s);
        let polarization = self.norm2(&run.p);
        let balance = stored + polarization + run.transmitted + run.decayed;
        let defect = if supplied > 0.0 {
            (supplied - balance).abs() / supplied
        } else {
            balance
        };
        AuditReport {
            supplied,
            stored,
            polarization,
            transmitted: run.transmitted,
            decayed: run.decayed,
            defect,
        }
    }

    fn state(&self, run: &Run, params: &MediumParams, e0: Complex64, tau: f64) -> EnsembleState {
        EnsembleState {
            grid: self.grid.clone(),
            e: self.field(&run.p, e0, params.d().sqrt()),
            p: run.p.clone(),
            s: run.s.clone(),
            tau,
        }
    }

    /// Store `input` with `ctrl` starting from an empty medium.
    pub fn storage(
        &self,
        input: &FieldMode,
        ctrl: &ControlField,
        params: &MediumParams,
    ) -> Result<SimulationResult> {
        if input.grid() != ctrl.grid() {
            return Err(Error::GridMismatch("input and control must share a time grid".into()));
        }
        let n = self.grid.len();
        let drive = Drive {
            grid: *input.grid(),
            input: Some(input.samples()),
            control: Some(ctrl.samples()),
        };
        let end = input.grid().end();
        let (run, audit, diag) = self.refine(|m| {
            let mut run = self.integrate(vec![ZERO; n], vec![ZERO; n], &drive, params, m)?;
            let flushed = if self.config.flush { self.flush(&mut run, params, end, m)? } else { 0.0 };
            Ok((run, 0.0, flushed))
        })?;
        let fed = audit.supplied.max(1e-300);
        let breakdown = EfficiencyBreakdown {
            eta_storage: audit.stored / fed,
            eta_retrieval: 0.0,
            eta_total: audit.stored / fed,
            leak_fraction: audit.transmitted / fed,
            decay_fraction: audit.decayed / fed,
            residual_fraction: audit.polarization / fed,
        };
        let final_state = self.state(&run, params, ZERO, end + diag.flush_duration);
        Ok(SimulationResult {
            final_state,
            output_mode: FieldMode::new(*input.grid(), run.output)?,
            breakdown,
            audit,
            diagnostics: diag,
        })
    }

    /// Retrieve the stored spin wave `s` (storage frame) with `ctrl`.
    pub fn retrieval(
        &self,
        s: &SpinWave,
        ctrl: &ControlField,
        params: &MediumParams,
        direction: Direction,
    ) -> Result<SimulationResult> {
        let start = self.initial_spin_wave(s, direction)?;
        let drive = Drive { grid: *ctrl.grid(), input: None, control: Some(ctrl.samples()) };
        self.evolve_from(vec![ZERO; self.grid.len()], start, &drive, params)
    }

    /// Retrieve `s` (storage frame) by an ideal pi-pulse at `grid.tau0()` followed
    /// by free evolution.
    pub fn fast_retrieval(
        &self,
        s: &SpinWave,
        params: &MediumParams,
        grid: TimeGrid,
        direction: Direction,
    ) -> Result<SimulationResult> {
        let start = self.initial_spin_wave(s, direction)?;
        let p: Vec<Complex64> = start.iter().map(|v| I * v).collect();
        let drive = Drive { grid, input: None, control: None };
        self.evolve_from(p, vec![ZERO; self.grid.len()], &drive, params)
    }

    fn initial_spin_wave(&self, s: &SpinWave, direction: Direction) -> Result<Vec<Complex64>> {
        let s = match direction {
            Direction::Forward => s.clone(),
            Direction::Backward => s.flip()?,
        };
        Ok(s.resample(&self.grid).into_samples())
    }

    fn evolve_from(
        &self,
        p0: Vec<Complex64>,
        s0: Vec<Complex64>,
        drive: &Drive,
        params: &MediumParams,
    ) -> Result<SimulationResult> {
        let initial = self.norm2(&p0) + self.norm2(&s0);
        let (run, audit, diag) = self.refine(|m| {
            let run = self.integrate(p0.clone(), s0.clone(), drive, params, m)?;
            Ok((run, initial, 0.0))
        })?;
        let init = initial.max(1e-300);
        let breakdown = EfficiencyBreakdown {
            eta_storage: 0.0,
            eta_retrieval: audit.transmitted / init,
            eta_total: audit.transmitted / init,
            leak_fraction: 0.0,
            decay_fraction: audit.decayed / init,
            residual_fraction: (audit.stored + audit.polarization) / init,
        };
        Ok(SimulationResult {
            final_state: self.state(&run, params, ZERO, drive.grid.end()),
            output_mode: FieldMode::new(drive.grid, run.output)?,
            breakdown,
            audit,
            diagnostics: diag,
        })
    }

    /// Fast storage: the input enters with the control off, then an ideal
    /// pi-pulse at the end of the input window maps `P` onto `S`.
    pub fn fast_storage(&self, input: &FieldMode, params: &MediumParams) -> Result<SimulationResult> {
        if params.delta() != 0.0 {
            return Err(Error::DetunedFastStorage(params.delta()));
        }
        let n = self.grid.len();
        let drive = Drive { grid: *input.grid(), input: Some(input.samples()), control: None };
        let (run, audit, diag) = self.refine(|m| {
            let run = self.integrate(vec![ZERO; n], vec![ZERO; n], &drive, params, m)?;
            Ok((run, 0.0, 0.0))
        })?;
        let end = input.grid().end();
        let state = crate::fast::pi_pulse(&self.state(&run, params, ZERO, end));
        let fed = audit.supplied.max(1e-300);
        let stored = self.norm2(&state.s);
        let residual = self.norm2(&state.p);
        let breakdown = EfficiencyBreakdown {
            eta_storage: stored / fed,
            eta_retrieval: 0.0,
            eta_total: stored / fed,
            leak_fraction: audit.transmitted / fed,
            decay_fraction: audit.decayed / fed,
            residual_fraction: residual / fed,
        };
        let audit = AuditReport { stored, polarization: residual, ..audit };
        Ok(SimulationResult {
            final_state: state,
            output_mode: FieldMode::new(*input.grid(), run.output)?,
            breakdown,
            audit,
            diagnostics: diag,
        })
    }

    /// Finite resonant pulse with constant real `omega` and area `pi/2`, no
    /// input light. Converges to [`crate::fast::pi_pulse`] as `omega` grows.
    pub fn finite_pi_pulse(
        &self,
        state: &EnsembleState,
        params: &MediumParams,
        omega: f64,
    ) -> Result<EnsembleState> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid("omega", "pulse amplitude must be positive"));
        }
        if state.grid != self.grid {
            return Err(Error::GridMismatch("state is on a different spatial grid".into()));
        }
        let duration = std::f64::consts::FRAC_PI_2 / omega;
        let grid = TimeGrid::spanning(state.tau, duration, 2)?;
        let ctrl = [Complex64::new(omega, 0.0); 2];
        let drive = Drive { grid, input: None, control: Some(&ctrl) };
        let (run, _, _) = self.refine(|m| {
            let run = self.integrate(state.p.clone(), state.s.clone(), &drive, params, 4 * m)?;
            Ok((run, self.norm2(&state.p) + self.norm2(&state.s), 0.0))
        })?;
        Ok(self.state(&run, params, ZERO, state.tau + duration))
    }
}

/// Storage with default settings on `n_zeta` Gauss-Legendre nodes.
pub fn simulate_storage(
    input: &FieldMode,
    ctrl: &ControlField,
    params: &MediumParams,
    n_zeta: usize,
) -> Result<SimulationResult> {
    Simulator::new(n_zeta, SimConfig::default())?.storage(input, ctrl, params)
}

/// Retrieval of a stored spin wave (storage frame) with default settings.
pub fn simulate_retrieval(
    s: &SpinWave,
    ctrl: &ControlField,
    params: &MediumParams,
    direction: Direction,
) -> Result<SimulationResult> {
    Simulator::for_params(params, SimConfig::default())?.retrieval(s, ctrl, params, direction)
}

/// Fast storage with default settings.
pub fn simulate_fast_storage(input: &FieldMode, params: &MediumParams) -> Result<SimulationResult> {
    if params.delta() != 0.0 {
        return Err(Error::DetunedFastStorage(params.delta()));
    }
    Simulator::for_params(params, SimConfig::default())?.fast_storage(input, params)
}
