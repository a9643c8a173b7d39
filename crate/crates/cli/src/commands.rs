//! Subcommand implementations. Each writes its files under `cfg.out` and
//! returns the JSON summary it also wrote.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use photon_memory::adiabatic::{auto_h_max, optimal_storage_control, ShapingOptions, StorageOptions};
use photon_memory::kernel::{optimal_spin_wave, OptimalSpinWave};
use photon_memory::optimizer::{
    completing_control, eta_back_max, iterate_retrieval, optimize_storage_retrieval,
    storage_then_optimal_backward, FinalMode, IterationOptions, StorageRetrievalOptions,
};
use photon_memory::simulator::{Direction, SimulationResult, Simulator};
use photon_memory::{ControlField, FieldMode, MediumParams, SpaceGrid, SpinWave, TimeGrid};

use crate::config::{EngineKind, InitKind, RunConfig, SimMode, WaveKind};
use crate::error::{CliError, Context};
use crate::output::{d_tag, ensure_dir, num, summary, write_csv, write_json};
use crate::reference::{reference_input, CENTER_FRACTION, WIDTH_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    OptimalSpinwave,
    ShapeControls,
    Curves,
    Simulate,
    Iterate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::OptimalSpinwave => "optimal-spinwave",
            Self::ShapeControls => "shape-controls",
            Self::Curves => "curves",
            Self::Simulate => "simulate",
            Self::Iterate => "iterate",
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Value, CliError> {
    cfg.validate()?;
    ensure_dir(&cfg.out)?;
    let results = match command {
        Command::OptimalSpinwave => cmd_optimal_spinwave(cfg)?,
        Command::ShapeControls => cmd_shape_controls(cfg)?,
        Command::Curves => cmd_curves(cfg)?,
        Command::Simulate => cmd_simulate(cfg)?,
        Command::Iterate => cmd_iterate(cfg)?,
    };
    let value = summary(command.name(), params_json(cfg), results, grids_json(cfg), tolerances_json(cfg));
    write_json(&cfg.out, &format!("{}.json", command.name().replace('-', "_")), &value)?;
    Ok(value)
}

fn params_json(cfg: &RunConfig) -> Value {
    json!({
        "d": cfg.d,
        "delta": cfg.delta,
        "engine": match cfg.engine { EngineKind::Simulator => "simulator", EngineKind::ClosedForm => "closed-form" },
        "reference_input": {
            "shape": "gaussian lowered to vanish at the endpoints, unit norm",
            "center_fraction": CENTER_FRACTION,
            "width_fraction": WIDTH_FRACTION,
            "duration_times_d": cfg.input_td,
            "duration": cfg.input_duration.map(num),
        },
    })
}

fn grids_json(cfg: &RunConfig) -> Value {
    json!({
        "kernel_nodes": cfg.kernel_nodes,
        "input_samples": cfg.input_samples,
        "n_zeta": cfg.n_zeta,
        "shaping_du": cfg.shaping_du,
        "h_max": cfg.h_max.map(num),
    })
}

fn tolerances_json(cfg: &RunConfig) -> Value {
    json!({
        "tol": cfg.tol,
        "eta_tol": cfg.eta_tol,
        "max_iter": cfg.max_iter,
        "kernel_tol": cfg.kernel_tol,
        "audit_tol": cfg.audit_tol,
        "step_scale": cfg.step_scale,
    })
}

fn params_for(d: f64, cfg: &RunConfig) -> Result<MediumParams, CliError> {
    MediumParams::new(d, cfg.delta).context(format!("d = {d}"))
}

fn optimal_mode(d: f64, cfg: &RunConfig) -> Result<OptimalSpinWave, CliError> {
    let grid = SpaceGrid::gauss_legendre(cfg.kernel_nodes).context("kernel grid")?;
    optimal_spin_wave(d, grid, cfg.kernel_tol, 1_000_000).context(format!("optimal spin wave at d = {d}"))
}

fn shaping(cfg: &RunConfig) -> ShapingOptions {
    ShapingOptions { h_max: cfg.h_max, du: cfg.shaping_du }
}

fn iteration(cfg: &RunConfig) -> IterationOptions {
    IterationOptions { tol: cfg.tol, eta_tol: cfg.eta_tol, max_iter: cfg.max_iter, engine: cfg.engine() }
}

/// Run `f` for every depth on a pool of `cfg.jobs` threads, keeping input order.
fn for_each_depth<T: Send>(
    cfg: &RunConfig,
    depths: &[f64],
    f: impl Fn(f64) -> T + Sync + Send,
) -> Result<Vec<T>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config { key: "jobs".into(), message: e.to_string() })?;
    Ok(pool.install(|| depths.par_iter().map(|d| f(*d)).collect()))
}

fn spin_rows(s: &SpinWave) -> Vec<Vec<f64>> {
    s.grid().nodes().iter().zip(s.samples()).map(|(z, v)| vec![*z, v.re, v.im]).collect()
}

fn field_rows(f: &FieldMode) -> Vec<Vec<f64>> {
    f.grid()
        .times()
        .zip(f.samples())
        .map(|(t, v)| vec![t, v.re, v.im])
        .collect()
}

fn control_rows(c: &ControlField, t_scale: f64, w_scale: f64) -> Vec<Vec<f64>> {
    c.grid()
        .times()
        .zip(c.samples())
        .map(|(t, v)| vec![t * t_scale, w_scale * v.re, w_scale * v.im])
        .collect()
}

/// Optimal spin wave per depth, written in the storage frame `S~_d(1 - zeta)`.
pub fn cmd_optimal_spinwave(cfg: &RunConfig) -> Result<Value, CliError> {
    let modes = for_each_depth(cfg, &cfg.d, |d| optimal_mode(d, cfg))?;
    let mut results = Vec::new();
    for (d, mode) in cfg.d.iter().zip(modes) {
        let mode = mode?;
        let stored = mode.wave.flip().context("mirror optimal wave")?;
        let rows: Vec<Vec<f64>> = stored.grid().nodes().iter().zip(stored.samples()).map(|(z, v)| vec![*z, v.re]).collect();
        let file = write_csv(&cfg.out, &format!("spinwave_d{}.csv", d_tag(*d)), &["zeta", "S"], &rows)?;
        results.push(json!({
            "d": d,
            "eta_r_max": mode.eta,
            "iterations": mode.iterations,
            "file": file.file_name().map(|f| f.to_string_lossy().into_owned()),
        }));
    }
    Ok(Value::Array(results))
}

/// Optimal storage controls for the reference input.
pub fn cmd_shape_controls(cfg: &RunConfig) -> Result<Value, CliError> {
    let outcomes = for_each_depth(cfg, &cfg.d, |d| -> Result<Value, CliError> {
        let params = params_for(d, cfg)?;
        let duration = cfg.input_duration_for(d);
        let input = reference_input(duration, cfg.input_samples).context("reference input")?;
        let opts = StorageOptions {
            kernel_nodes: cfg.kernel_nodes,
            kernel_tol: cfg.kernel_tol,
            shaping: shaping(cfg),
            ..StorageOptions::default()
        };
        let st = optimal_storage_control(&input, &params, &opts).context(format!("storage control at d = {d}"))?;
        let header = ["tau", "re_omega", "im_omega"];
        write_csv(&cfg.out, &format!("control_d{}.csv", d_tag(d)), &header, &control_rows(&st.control, 1.0, 1.0))?;
        // display units: time in units of T, control in units of sqrt(d / T)
        let fig = control_rows(&st.control, 1.0 / duration, (duration / d).sqrt());
        write_csv(&cfg.out, &format!("control_d{}_display.csv", d_tag(d)), &["t_over_T", "re_omega", "im_omega"], &fig)?;
        Ok(json!({
            "d": d,
            "duration": duration,
            "predicted_eta_s": st.predicted_eta_s,
            "eta_r_max": st.optimal.eta,
            "truncation_loss": st.retrieval.truncation_loss,
            "h_max": st.retrieval.h_max,
            "adiabatic": st.retrieval.adiabatic,
        }))
    })?;
    Ok(Value::Array(outcomes.into_iter().collect::<Result<_, _>>()?))
}

/// One point of the efficiency curves; failures are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub d: f64,
    pub eta_back: f64,
    pub eta_forw: f64,
    pub eta_square: f64,
}

/// Storage of the reference input with a constant control of power
/// `v_g T = L`, that is `omega = sqrt(d / T)`, then the best backward retrieval.
pub fn eta_square(d: f64, cfg: &RunConfig) -> Result<f64, CliError> {
    let params = params_for(d, cfg)?;
    let duration = cfg.input_duration_for(d);
    let input = reference_input(duration, cfg.input_samples).context("reference input")?;
    let ctrl = ControlField::constant(*input.grid(), Complex64::new((d / duration).sqrt(), 0.0));
    let sim = Simulator::for_params(&params, cfg.sim_config()).context("simulator")?;
    let r = sim.storage(&input, &ctrl, &params).context(format!("square-pulse storage at d = {d}"))?;
    storage_then_optimal_backward(&r.final_state.spin_wave().context("stored wave")?, &params)
        .context("backward retrieval of the stored wave")
}

/// Best storage followed by forward retrieval, for the reference input.
pub fn eta_forward(d: f64, cfg: &RunConfig) -> Result<f64, CliError> {
    let params = params_for(d, cfg)?;
    let input = reference_input(cfg.input_duration_for(d), cfg.input_samples).context("reference input")?;
    let opts = StorageRetrievalOptions {
        iteration: iteration(cfg),
        kernel_nodes: cfg.kernel_nodes,
        shaping: shaping(cfg),
        forward_h: None,
    };
    let r = optimize_storage_retrieval(&params, &input, Direction::Forward, &opts)
        .context(format!("forward optimization at d = {d}"))?;
    Ok(r.eta_total)
}

pub fn curve_point(d: f64, cfg: &RunConfig) -> (CurvePoint, Vec<String>) {
    let mut warnings = Vec::new();
    let mut get = |what: &str, r: Result<f64, CliError>| match r {
        Ok(x) => x,
        Err(e) => {
            warnings.push(format!("d = {d}: {what} failed: {e}"));
            f64::NAN
        }
    };
    let eta_back = get("eta_back", eta_back_max(d).context("kernel eigenproblem"));
    let eta_forw = get("eta_forw", eta_forward(d, cfg));
    let eta_square = get("eta_square", eta_square(d, cfg));
    (CurvePoint { d, eta_back, eta_forw, eta_square }, warnings)
}

/// Efficiency curves over a logarithmic sweep of d.
pub fn cmd_curves(cfg: &RunConfig) -> Result<Value, CliError> {
    let depths = cfg.curve_depths();
    let points = for_each_depth(cfg, &depths, |d| curve_point(d, cfg))?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (p, w) in &points {
        for msg in w {
            eprintln!("warning: {msg}");
        }
        warnings.extend(w.iter().cloned());
        rows.push(vec![p.d, p.eta_back, p.eta_forw, p.eta_square]);
    }
    write_csv(&cfg.out, "curves.csv", &["d", "eta_back", "eta_forw", "eta_square"], &rows)?;
    let pts: Vec<Value> = points
        .iter()
        .map(|(p, _)| json!({"d": p.d, "eta_back": num(p.eta_back), "eta_forw": num(p.eta_forw), "eta_square": num(p.eta_square)}))
        .collect();
    Ok(json!({ "points": pts, "warnings": warnings }))
}

fn control_on(grid: TimeGrid, cfg: &RunConfig, fallback: Complex64) -> Result<ControlField, CliError> {
    if cfg.control.is_empty() {
        return Ok(ControlField::constant(grid, fallback));
    }
    let knots: Vec<(f64, Complex64)> = cfg.control.iter().map(|(t, re, im)| (*t, Complex64::new(*re, *im))).collect();
    ControlField::piecewise_linear(grid, &knots).context("control knots")
}

fn run_json(r: &SimulationResult) -> Value {
    json!({
        "breakdown": r.breakdown,
        "audit": r.audit,
        "diagnostics": r.diagnostics,
    })
}

/// Direct simulation of storage or retrieval with a configurable control.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Value, CliError> {
    let mut results = Vec::new();
    for &d in &cfg.d {
        let params = params_for(d, cfg)?;
        let sim = Simulator::for_params(&params, cfg.sim_config()).context("simulator")?;
        let tag = d_tag(d);
        let r = match cfg.sim_mode {
            SimMode::Storage => {
                let duration = cfg.input_duration_for(d);
                let input = reference_input(duration, cfg.input_samples).context("reference input")?;
                let ctrl = control_on(*input.grid(), cfg, Complex64::new((d / duration).sqrt(), 0.0))?;
                let r = sim.storage(&input, &ctrl, &params).context(format!("storage at d = {d}"))?;
                let stored = r.final_state.spin_wave().context("stored wave")?;
                write_csv(&cfg.out, &format!("stored_d{tag}.csv"), &["zeta", "re_S", "im_S"], &spin_rows(&stored))?;
                r
            }
            SimMode::Retrieval => {
                let wave = match cfg.wave {
                    WaveKind::Optimal => optimal_mode(d, cfg)?.wave.flip().context("mirror optimal wave")?,
                    WaveKind::Flat => SpinWave::constant(sim.grid().clone(), 1.0).normalized().context("flat wave")?,
                };
                let duration = cfg.input_duration.unwrap_or(1.2 * auto_h_max(&params));
                let grid = TimeGrid::spanning(0.0, duration, cfg.input_samples).context("time grid")?;
                let ctrl = control_on(grid, cfg, Complex64::new(1.0, 0.0))?;
                sim.retrieval(&wave.resample(sim.grid()), &ctrl, &params, cfg.direction)
                    .context(format!("retrieval at d = {d}"))?
            }
        };
        write_csv(&cfg.out, &format!("output_d{tag}.csv"), &["tau", "re_E", "im_E"], &field_rows(&r.output_mode))?;
        let mut v = run_json(&r);
        v["d"] = json!(d);
        results.push(v);
    }
    Ok(Value::Array(results))
}

/// Starting spin wave for `iterate`, in the retrieval frame.
pub fn initial_wave(cfg: &RunConfig, grid: SpaceGrid) -> Result<SpinWave, CliError> {
    let s = match cfg.init {
        InitKind::Flat => SpinWave::constant(grid, 1.0),
        InitKind::Linear => SpinWave::from_fn(grid, |z| Complex64::new(1.0 + z, 0.0)).context("init")?,
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let coeffs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            SpinWave::from_fn(grid, |z| {
                let v: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * z).cos() / (k + 1) as f64)
                    .sum();
                Complex64::new(2.5 + v, 0.0)
            })
            .context("init")?
        }
    };
    s.normalized().context("init")
}

/// Retrieval optimization by time reversal, compared with the kernel optimum.
pub fn cmd_iterate(cfg: &RunConfig) -> Result<Value, CliError> {
    let outcomes = for_each_depth(cfg, &cfg.d, |d| -> Result<Value, CliError> {
        let params = params_for(d, cfg)?;
        let best = optimal_mode(d, cfg)?;
        let h = 1.2 * auto_h_max(&params);
        let grid = TimeGrid::spanning(0.0, cfg.input_duration.unwrap_or(h), cfg.input_samples).context("time grid")?;
        let ctrl = completing_control(grid, h);
        let init = initial_wave(cfg, best.wave.grid().clone())?;
        let trace = iterate_retrieval(&params, &ctrl, &init, &iteration(cfg)).context(format!("iteration at d = {d}"))?;
        let FinalMode::Spin(mode) = &trace.final_mode else {
            unreachable!("retrieval iteration ends on a spin wave")
        };
        let mode = mode.resample(best.wave.grid());
        let tag = d_tag(d);
        let rows: Vec<Vec<f64>> = trace
            .efficiencies
            .iter()
            .zip(&trace.reverse_efficiencies)
            .enumerate()
            .map(|(k, (a, b))| vec![(k + 1) as f64, *a, *b])
            .collect();
        write_csv(&cfg.out, &format!("trace_d{tag}.csv"), &["iteration", "eta", "eta_reverse"], &rows)?;
        write_csv(&cfg.out, &format!("mode_d{tag}.csv"), &["zeta", "re_S", "im_S"], &spin_rows(&mode))?;
        Ok(json!({
            "d": d,
            "converged": trace.converged,
            "iterations": trace.iterations,
            "eta": trace.final_efficiency(),
            "eta_r_max": best.eta,
            "mode_distance": mode.distance_up_to_phase(&best.wave).context("mode distance")?,
            "worst_decrease": trace.worst_decrease(),
        }))
    })?;
    Ok(Value::Array(outcomes.into_iter().collect::<Result<_, _>>()?))
}
