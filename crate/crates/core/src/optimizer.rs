//! Time-reversal iterations.
//!
//! Retrieving a spin wave, time reversing the output and storing it with the
//! time-reversed control applies the retrieval map followed by its adjoint, so
//! repeating the round trip is a power iteration that climbs to the best mode.
//! The same holds for any composite map such as storage followed by retrieval:
//! iterating over input modes with the reversed controls converges to the best
//! input for that map, and every half step can only raise the efficiency.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{
    auto_h_max, optimal_storage_control_for, shape_retrieval_control, RetrievalMap,
    ShapingOptions,
};
use crate::error::{invalid, Error, Result};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::kernel::{KernelOperator, DEFAULT_NODES};
use crate::mode::{ControlField, FieldMode, SpinWave, TimeReverse};
use crate::params::MediumParams;
use crate::simulator::{Direction, SimConfig, Simulator};

/// How each retrieval and storage step is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    /// Adiabatic closed forms.
    ClosedForm,
    /// Full integration of the equations of motion.
    Simulator(SimConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationOptions {
    /// Convergence threshold on the L2 change of the normalized mode.
    pub tol: f64,
    /// Convergence threshold on the efficiency change across one half step.
    pub eta_tol: f64,
    pub max_iter: usize,
    pub engine: Engine,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self { tol: 1e-3, eta_tol: 1e-7, max_iter: 500, engine: Engine::ClosedForm }
    }
}

impl IterationOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if !(self.eta_tol > 0.0) {
            return Err(invalid("eta_tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FinalMode {
    Spin(SpinWave),
    Field(FieldMode),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Efficiency of the forward map at each iteration, before renormalization.
    pub efficiencies: Vec<f64>,
    /// Efficiency of the time-reversed map in between.
    pub reverse_efficiencies: Vec<f64>,
    pub final_mode: FinalMode,
    pub iterations: usize,
    pub converged: bool,
}

impl IterationTrace {
    /// Efficiencies in the order they were produced, alternating forward and
    /// reversed maps.
    pub fn interleaved(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.efficiencies.len());
        for (k, e) in self.efficiencies.iter().enumerate() {
            out.push(*e);
            if let Some(r) = self.reverse_efficiencies.get(k) {
                out.push(*r);
            }
        }
        out
    }

    /// Largest drop between consecutive entries of [`Self::interleaved`].
    pub fn worst_decrease(&self) -> f64 {
        self.interleaved()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    pub fn final_efficiency(&self) -> f64 {
        *self.efficiencies.last().unwrap_or(&0.0)
    }
}

/// Distance between two normalized field modes after removing a global phase.
fn field_distance(a: &FieldMode, b: &FieldMode) -> Result<f64> {
    let overlap = a.inner(b)?.norm();
    Ok((a.norm2() + b.norm2() - 2.0 * overlap).max(0.0).sqrt())
}

enum RetrievalEngine {
    Closed(RetrievalMap),
    Simulated(Simulator),
}

impl RetrievalEngine {
    fn new(engine: Engine, grid: &SpaceGrid, ctrl: &ControlField, params: &MediumParams) -> Result<Self> {
        Ok(match engine {
            Engine::ClosedForm => Self::Closed(RetrievalMap::new(grid, ctrl, params)?),
            Engine::Simulator(cfg) => Self::Simulated(Simulator::for_params(params, cfg)?),
        })
    }

    fn grid(&self, fallback: &SpaceGrid) -> SpaceGrid {
        match self {
            Self::Closed(_) => fallback.clone(),
            Self::Simulated(sim) => sim.grid().clone(),
        }
    }

    /// Retrieve `s` (retrieval frame).
    fn retrieve(&self, s: &SpinWave, ctrl: &ControlField, params: &MediumParams) -> Result<FieldMode> {
        match self {
            Self::Closed(map) => map.retrieve(s),
            Self::Simulated(sim) => Ok(sim.retrieval(s, ctrl, params, Direction::Forward)?.output_mode),
        }
    }

    /// Store the time reverse of `output` with the time-reversed control and
    /// return the result in the retrieval frame of the next round.
    fn store_back(&self, output: &FieldMode, ctrl: &ControlField, params: &MediumParams) -> Result<SpinWave> {
        let input = output.time_reversed();
        match self {
            Self::Closed(map) => map.store_reversed(&input),
            Self::Simulated(sim) => sim
                .storage(&input, &ctrl.time_reversed(), params)?
                .final_state
                .spin_wave()?
                .flip(),
        }
    }
}

/// Optimize the spin wave for retrieval with `ctrl` by repeated retrieval and
/// time-reversed storage. `init` is in the retrieval frame.
pub fn iterate_retrieval(
    params: &MediumParams,
    ctrl: &ControlField,
    init: &SpinWave,
    opts: &IterationOptions,
) -> Result<IterationTrace> {
    opts.validate()?;
    let engine = RetrievalEngine::new(opts.engine, init.grid(), ctrl, params)?;
    let grid = engine.grid(init.grid());
    let mut s = init.resample(&grid).normalized()?;
    let mut trace = IterationTrace {
        efficiencies: Vec::new(),
        reverse_efficiencies: Vec::new(),
        final_mode: FinalMode::Spin(s.clone()),
        iterations: 0,
        converged: false,
    };
    for it in 1..=opts.max_iter {
        let out = engine.retrieve(&s, ctrl, params)?;
        let eta = out.norm2();
        if !(eta > 0.0) {
            return Err(Error::ZeroEfficiency);
        }
        let back = engine.store_back(&out.scaled(Complex64::new(1.0 / eta.sqrt(), 0.0)), ctrl, params)?;
        let eta_back = back.norm2();
        let next = back.normalized()?;
        let change = next.distance_up_to_phase(&s)?;
        trace.efficiencies.push(eta);
        trace.reverse_efficiencies.push(eta_back);
        trace.iterations = it;
        s = next;
        if change < opts.tol && (eta_back - eta).abs() < opts.eta_tol {
            trace.converged = true;
            break;
        }
    }
    trace.final_mode = FinalMode::Spin(s);
    Ok(trace)
}

/// Storage followed by retrieval, evaluated with a fixed pair of controls.
struct Composite {
    engine: CompositeEngine,
    storage: ControlField,
    retrieval: ControlField,
    direction: Direction,
}

enum CompositeEngine {
    /// Maps for the retrieval control and for the reversed storage control.
    Closed { retrieve: RetrievalMap, store: RetrievalMap },
    Simulated(Simulator),
}

struct CompositeRun {
    output: FieldMode,
    eta_storage: f64,
    stored: SpinWave,
}

impl Composite {
    fn new(
        engine: Engine,
        storage: ControlField,
        retrieval: ControlField,
        direction: Direction,
        params: &MediumParams,
        space: &SpaceGrid,
    ) -> Result<Self> {
        if storage.grid() != retrieval.grid() {
            return Err(Error::GridMismatch("storage and retrieval controls must share a time grid".into()));
        }
        let engine = match engine {
            Engine::ClosedForm => CompositeEngine::Closed {
                retrieve: RetrievalMap::new(space, &retrieval, params)?,
                store: RetrievalMap::new(space, &storage.time_reversed(), params)?,
            },
            Engine::Simulator(cfg) => CompositeEngine::Simulated(Simulator::for_params(params, cfg)?),
        };
        Ok(Self { engine, storage, retrieval, direction })
    }

    /// Run on `input`; `reversed` swaps in the time-reversed controls in
    /// reverse order.
    fn run(&self, input: &FieldMode, reversed: bool, params: &MediumParams) -> Result<CompositeRun> {
        let fed = input.norm2();
        match &self.engine {
            CompositeEngine::Closed { retrieve, store } => {
                let (writer, reader) = if reversed { (retrieve, store) } else { (store, retrieve) };
                // retrieval frame of the storage map's own reverse process
                let mirrored = writer.store_reversed(input)?;
                let stored = mirrored.flip()?;
                let frame = match self.direction {
                    Direction::Backward => mirrored,
                    Direction::Forward => stored.clone(),
                };
                Ok(CompositeRun {
                    output: reader.retrieve(&frame)?,
                    eta_storage: stored.norm2() / fed,
                    stored,
                })
            }
            CompositeEngine::Simulated(sim) => {
                let (ws, wr) = if reversed {
                    (self.retrieval.time_reversed(), self.storage.time_reversed())
                } else {
                    (self.storage.clone(), self.retrieval.clone())
                };
                let st = sim.storage(input, &ws, params)?;
                let stored = st.final_state.spin_wave()?;
                let out = sim.retrieval(&stored, &wr, params, self.direction)?;
                Ok(CompositeRun {
                    output: out.output_mode,
                    eta_storage: st.breakdown.eta_storage,
                    stored,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageRetrievalOptions {
    pub iteration: IterationOptions,
    pub kernel_nodes: usize,
    pub shaping: ShapingOptions,
    /// Control area `h` reached by the constant controls used for forward
    /// retrieval; `None` uses 1.2 times [`auto_h_max`].
    pub forward_h: Option<f64>,
}

impl Default for StorageRetrievalOptions {
    fn default() -> Self {
        Self {
            iteration: IterationOptions::default(),
            kernel_nodes: DEFAULT_NODES,
            shaping: ShapingOptions::default(),
            forward_h: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StorageRetrievalResult {
    pub storage_control: ControlField,
    pub retrieval_control: ControlField,
    /// Best input mode for these controls (the given input for backward retrieval).
    pub input: FieldMode,
    /// Stored spin wave in the storage frame.
    pub stored: SpinWave,
    pub eta_storage: f64,
    pub eta_total: f64,
    pub trace: IterationTrace,
}

/// Optimize storage of `input` followed by retrieval in `direction`.
///
/// Backward: the shaped controls store the input into the optimal spin wave,
/// which is also the best wave to retrieve backward, so no iteration is needed;
/// the composite efficiency is evaluated once with `opts.iteration.engine`.
/// Forward: constant completing controls and iteration over input modes, which
/// reaches the optimum for any completing pair.
pub fn optimize_storage_retrieval(
    params: &MediumParams,
    input: &FieldMode,
    direction: Direction,
    opts: &StorageRetrievalOptions,
) -> Result<StorageRetrievalResult> {
    opts.iteration.validate()?;
    let input = input.normalized()?;
    let space = SpaceGrid::gauss_legendre(opts.kernel_nodes)?;
    match direction {
        Direction::Backward => backward(params, &input, &space, opts),
        Direction::Forward => forward(params, &input, &space, opts),
    }
}

fn backward(
    params: &MediumParams,
    input: &FieldMode,
    space: &SpaceGrid,
    opts: &StorageRetrievalOptions,
) -> Result<StorageRetrievalResult> {
    let optimal = KernelOperator::new(params.d(), space.clone())?.dominant_mode(1e-12, 100_000)?;
    let storage = optimal_storage_control_for(input, params, optimal.clone(), &opts.shaping)?;
    let retrieval = shape_retrieval_control(&optimal.wave, input, params, &opts.shaping)?;
    let composite = Composite::new(
        opts.iteration.engine,
        storage.control.clone(),
        retrieval.control.clone(),
        Direction::Backward,
        params,
        space,
    )?;
    let run = composite.run(input, false, params)?;
    let eta_total = run.output.norm2();
    Ok(StorageRetrievalResult {
        storage_control: storage.control,
        retrieval_control: retrieval.control,
        input: input.clone(),
        stored: run.stored,
        eta_storage: run.eta_storage,
        eta_total,
        trace: IterationTrace {
            efficiencies: vec![eta_total],
            reverse_efficiencies: Vec::new(),
            final_mode: FinalMode::Field(input.clone()),
            iterations: 1,
            converged: true,
        },
    })
}

/// Constant control on `grid` reaching area `h`.
pub fn completing_control(grid: TimeGrid, h: f64) -> ControlField {
    let omega = (h / grid.duration()).sqrt();
    ControlField::constant(grid, Complex64::new(omega, 0.0))
}

fn forward(
    params: &MediumParams,
    input: &FieldMode,
    space: &SpaceGrid,
    opts: &StorageRetrievalOptions,
) -> Result<StorageRetrievalResult> {
    let h = opts.forward_h.unwrap_or_else(|| 1.2 * auto_h_max(params));
    let ctrl = completing_control(*input.grid(), h);
    let composite = Composite::new(
        opts.iteration.engine,
        ctrl.clone(),
        ctrl.clone(),
        Direction::Forward,
        params,
        space,
    )?;
    let it = &opts.iteration;
    let mut e = input.clone();
    let mut trace = IterationTrace {
        efficiencies: Vec::new(),
        reverse_efficiencies: Vec::new(),
        final_mode: FinalMode::Field(e.clone()),
        iterations: 0,
        converged: false,
    };
    let mut last = None;
    for k in 1..=it.max_iter {
        let run = composite.run(&e, false, params)?;
        let eta = run.output.norm2();
        if !(eta > 0.0) {
            return Err(Error::ZeroEfficiency);
        }
        let reversed_input = run.output.scaled(Complex64::new(1.0 / eta.sqrt(), 0.0)).time_reversed();
        let back = composite.run(&reversed_input, true, params)?;
        let eta_back = back.output.norm2();
        let next = back.output.normalized()?.time_reversed();
        let change = field_distance(&next, &e)?;
        trace.efficiencies.push(eta);
        trace.reverse_efficiencies.push(eta_back);
        trace.iterations = k;
        last = Some((e.clone(), run));
        e = next;
        if change < it.tol && (eta_back - eta).abs() < it.eta_tol {
            trace.converged = true;
            break;
        }
    }
    let (best_input, run) = last.expect("at least one iteration runs");
    trace.final_mode = FinalMode::Field(best_input.clone());
    Ok(StorageRetrievalResult {
        storage_control: ctrl.clone(),
        retrieval_control: ctrl,
        input: best_input,
        stored: run.stored,
        eta_storage: run.eta_storage,
        eta_total: trace.final_efficiency(),
        trace,
    })
}

/// Best storage-plus-backward-retrieval efficiency, `(eta_r^max)^2`.
pub fn eta_back_max(d: f64) -> Result<f64> {
    let eta = crate::kernel::optimal_spin_wave_default(d)?.eta;
    Ok(eta * eta)
}

/// Storage with `ctrl` followed by the best possible backward retrieval: the
/// kernel efficiency of the stored wave, mirrored into the retrieval frame.
pub fn storage_then_optimal_backward(stored: &SpinWave, params: &MediumParams) -> Result<f64> {
    crate::kernel::retrieval_efficiency(&stored.flip()?, params.d())
}
