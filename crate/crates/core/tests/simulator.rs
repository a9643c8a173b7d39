use num_complex::Complex64;
use photon_memory::adiabatic::{auto_h_max, retrieve_adiabatic};
use photon_memory::fast::retrieve_fast;
use photon_memory::kernel::{optimal_spin_wave_default, retrieval_efficiency};
use photon_memory::simulator::{
    energy_audit, simulate_fast_storage, simulate_retrieval, simulate_storage, Direction,
    SimConfig, Simulator,
};
use photon_memory::{ControlField, Error, FieldMode, MediumParams, SpaceGrid, SpinWave, TimeGrid};

fn pulse(duration: f64, n: usize) -> FieldMode {
    let g = TimeGrid::spanning(0.0, duration, n).unwrap();
    FieldMode::from_fn(g, |t| {
        let x = t / duration;
        Complex64::new((std::f64::consts::PI * x).sin().powi(2), 0.0)
    })
    .unwrap()
    .normalized()
    .unwrap()
}

/// Control rising smoothly from zero to `peak` over `ramp`, then constant.
fn ramped(grid: TimeGrid, peak: f64, ramp: f64) -> ControlField {
    ControlField::from_fn(grid, |t| {
        let x = (t / ramp).min(1.0);
        Complex64::new(peak * (0.5 * std::f64::consts::PI * x).sin().powi(2), 0.0)
    })
    .unwrap()
}

fn l2(a: &FieldMode, b: &FieldMode) -> f64 {
    let diff: Vec<Complex64> = a.samples().iter().zip(b.samples()).map(|(x, y)| x - y).collect();
    FieldMode::new(*a.grid(), diff).unwrap().norm2().sqrt()
}

#[test]
fn without_control_nothing_is_stored_and_photons_balance() {
    let p = MediumParams::resonant(10.0).unwrap();
    let input = pulse(5.0, 501);
    let r = simulate_storage(&input, &ControlField::zeros(*input.grid()), &p, 64).unwrap();
    assert_eq!(r.breakdown.eta_storage, 0.0);
    assert!(r.breakdown.decay_fraction > 0.5);
    assert!(r.breakdown.leak_fraction > 0.0);
    assert!((r.breakdown.storage_sum() - 1.0).abs() < 1e-4);
    assert!(energy_audit(&r).defect < 1e-4);
}

#[test]
fn thin_medium_is_transparent() {
    let p = MediumParams::resonant(1e-4).unwrap();
    let input = pulse(5.0, 501);
    let ctrl = ControlField::constant(*input.grid(), Complex64::new(1.0, 0.0));
    let r = simulate_storage(&input, &ctrl, &p, 64).unwrap();
    assert!(r.breakdown.leak_fraction > 0.999, "{:?}", r.breakdown);
}

#[test]
fn dynamics_are_linear() {
    let p = MediumParams::new(8.0, 3.0).unwrap();
    let input = pulse(4.0, 401);
    let ctrl = ControlField::from_fn(*input.grid(), |t| Complex64::new(1.0 + 0.3 * t, 0.2)).unwrap();
    let sim = Simulator::new(64, SimConfig::default()).unwrap();
    let a = sim.storage(&input, &ctrl, &p).unwrap();
    let b = sim.storage(&input.scaled(Complex64::new(2.0, 0.0)), &ctrl, &p).unwrap();
    for (x, y) in a.final_state.s.iter().zip(&b.final_state.s) {
        assert!((2.0 * x - y).norm() <= 1e-12 * (1.0 + y.norm()));
    }
    assert!((a.breakdown.eta_storage - b.breakdown.eta_storage).abs() < 1e-12);
}

#[test]
fn rk4_defect_shrinks_at_fourth_order() {
    let p = MediumParams::resonant(10.0).unwrap();
    let input = pulse(3.0, 31);
    let ctrl = ControlField::constant(*input.grid(), Complex64::new(2.0, 0.0));
    let defect = |refinement: usize| {
        let cfg = SimConfig {
            step_scale: 2.0,
            audit_tol: 1.0,
            flush: false,
            initial_refinement: refinement,
            ..SimConfig::default()
        };
        Simulator::new(64, cfg).unwrap().storage(&input, &ctrl, &p).unwrap().audit.defect
    };
    let (a, b) = (defect(2), defect(4));
    let order = (a / b).log2();
    assert!((order - 4.0).abs() < 0.5, "defects {a:e} {b:e}, order {order}");
}

#[test]
fn lossless_medium_conserves_excitation_plus_light() {
    let p = MediumParams::new(6.0, 2.0).unwrap();
    let input = pulse(4.0, 401);
    let ctrl = ControlField::constant(*input.grid(), Complex64::new(1.5, 0.0));
    let cfg = SimConfig { lossless: true, flush: false, step_scale: 0.1, ..SimConfig::default() };
    let r = Simulator::new(64, cfg).unwrap().storage(&input, &ctrl, &p).unwrap();
    assert_eq!(r.audit.decayed, 0.0);
    let balance = r.audit.stored + r.audit.polarization + r.audit.transmitted;
    assert!((balance - r.audit.supplied).abs() < 1e-7, "{balance} vs {}", r.audit.supplied);
}

#[test]
fn retrieval_efficiency_is_control_and_detuning_independent() {
    let d = 10.0;
    let g = SpaceGrid::gauss_legendre(64).unwrap();
    let s = SpinWave::from_fn(g, |z| Complex64::new(1.0 + z * z, 0.3 * z)).unwrap().normalized().unwrap();
    let want = retrieval_efficiency(&s.flip().unwrap(), d).unwrap();
    for (omega, delta) in [(1.0, 0.0), (3.0, 0.0), (1.0, 20.0), (3.0, 20.0)] {
        let p = MediumParams::new(d, delta).unwrap();
        let duration = 1.2 * auto_h_max(&p) / (omega * omega);
        let grid = TimeGrid::spanning(0.0, duration, 4001).unwrap();
        let ctrl = ControlField::constant(grid, Complex64::new(omega, 0.0));
        let r = simulate_retrieval(&s, &ctrl, &p, Direction::Backward).unwrap();
        let eta = r.breakdown.eta_retrieval;
        assert!((eta - want).abs() < 1e-3, "omega {omega} delta {delta}: {eta} vs {want}");
        assert!((r.breakdown.retrieval_sum() - 1.0).abs() < 1e-4);
    }
}

#[test]
fn zero_spin_wave_gives_no_output() {
    let p = MediumParams::resonant(5.0).unwrap();
    let s = SpinWave::constant(SpaceGrid::gauss_legendre(64).unwrap(), 0.0);
    let ctrl = ControlField::constant(TimeGrid::spanning(0.0, 10.0, 101).unwrap(), Complex64::new(1.0, 0.0));
    let r = simulate_retrieval(&s, &ctrl, &p, Direction::Forward).unwrap();
    assert!(r.output_mode.samples().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn backward_retrieval_of_the_optimal_wave_reaches_the_bound() {
    let d = 10.0;
    let p = MediumParams::resonant(d).unwrap();
    let opt = optimal_spin_wave_default(d).unwrap();
    let stored = opt.wave.flip().unwrap();
    let grid = TimeGrid::spanning(0.0, 80.0, 2001).unwrap();
    let ctrl = ControlField::constant(grid, Complex64::new(1.0, 0.0));
    let r = simulate_retrieval(&stored, &ctrl, &p, Direction::Backward).unwrap();
    assert!((r.breakdown.eta_retrieval - opt.eta).abs() < 1e-3);
    // forward retrieval of the same wave is worse
    let f = simulate_retrieval(&stored, &ctrl, &p, Direction::Forward).unwrap();
    assert!(f.breakdown.eta_retrieval < r.breakdown.eta_retrieval - 0.05);
}

#[test]
fn adiabatic_closed_form_matches_simulation() {
    let d = 10.0;
    let p = MediumParams::resonant(d).unwrap();
    let opt = optimal_spin_wave_default(d).unwrap();
    let grid = TimeGrid::spanning(0.0, 300.0, 6001).unwrap();
    let ctrl = ramped(grid, 0.5, 60.0);
    let closed = retrieve_adiabatic(&opt.wave, &ctrl, &p).unwrap().output;
    let sim = simulate_retrieval(&opt.wave.flip().unwrap(), &ctrl, &p, Direction::Backward).unwrap();
    let err = l2(&closed, &sim.output_mode);
    assert!(err < 1e-2, "L2 {err}");
}

#[test]
fn fast_closed_form_matches_simulated_pi_pulse_retrieval() {
    let d = 10.0;
    let p = MediumParams::resonant(d).unwrap();
    let g = SpaceGrid::gauss_legendre(64).unwrap();
    let stored = SpinWave::from_fn(g, |z| Complex64::new((1.0 - z).powi(2) + 0.2, 0.1 * z)).unwrap();
    let grid = TimeGrid::spanning(0.0, 4.0, 2001).unwrap();
    let closed = retrieve_fast(&stored.flip().unwrap(), d, grid).unwrap();
    let sim = Simulator::new(64, SimConfig::default()).unwrap();
    let r = sim.fast_retrieval(&stored, &p, grid, Direction::Backward).unwrap();
    let err = l2(&closed, &r.output_mode);
    assert!(err < 1e-3, "L2 {err}");
}

#[test]
fn efficiencies_are_grid_converged() {
    let p = MediumParams::resonant(10.0).unwrap();
    let run = |n_t: usize, n_zeta: usize| {
        let input = pulse(10.0, n_t);
        let ctrl = ramped(*input.grid(), 1.0, 5.0);
        simulate_storage(&input, &ctrl, &p, n_zeta).unwrap().breakdown
    };
    let a = run(501, 64);
    let b = run(1001, 128);
    assert!((a.eta_storage - b.eta_storage).abs() < 1e-4);
    assert!((a.leak_fraction - b.leak_fraction).abs() < 1e-4);
}

#[test]
fn fast_storage_rejects_detuning_and_stores_nothing_from_nothing() {
    let input = pulse(1.0, 101);
    assert!(matches!(
        simulate_fast_storage(&input, &MediumParams::new(10.0, 1.0).unwrap()),
        Err(Error::DetunedFastStorage(_))
    ));
    let zero = FieldMode::zeros(*input.grid());
    let r = simulate_fast_storage(&zero, &MediumParams::resonant(10.0).unwrap()).unwrap();
    assert!(r.final_state.s.iter().all(|v| v.norm() == 0.0));
}
