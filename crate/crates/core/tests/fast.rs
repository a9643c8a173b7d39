use num_complex::Complex64;
use photon_memory::fast::{fast_output_grid, optimal_fast_input, pi_pulse, retrieve_fast};
use photon_memory::kernel::{optimal_spin_wave_default, retrieval_efficiency};
use photon_memory::simulator::{SimConfig, Simulator};
use photon_memory::{FieldMode, MediumParams, SpaceGrid, SpinWave, TimeGrid};

fn waves() -> Vec<SpinWave> {
    let g = SpaceGrid::gauss_legendre(100).unwrap();
    vec![
        SpinWave::from_fn(g.clone(), |z| Complex64::new(1.0 + z, 0.0)).unwrap(),
        SpinWave::from_fn(g.clone(), |z| Complex64::new((3.0 * z).cos(), 0.5 * z * z)).unwrap(),
        SpinWave::from_fn(g, |z| Complex64::from_polar((-4.0 * (z - 0.7).powi(2)).exp(), 2.0 * z)).unwrap(),
    ]
}

#[test]
fn output_norm_matches_kernel_efficiency() {
    for d in [3.0, 30.0] {
        for s in waves() {
            let want = retrieval_efficiency(&s, d).unwrap();
            let grid = fast_output_grid(&s, d).unwrap();
            let got = retrieve_fast(&s, d, grid).unwrap().norm2();
            assert!((got - want).abs() < 1e-3, "d {d}: {got} vs {want}");
        }
    }
}

fn time_for_fraction(out: &FieldMode, fraction: f64) -> f64 {
    let cum = out.cumulative_norm2();
    let total = *cum.last().unwrap();
    let k = cum.iter().position(|c| *c >= fraction * total).unwrap();
    out.grid().tau(k)
}

#[test]
fn output_duration_scales_inversely_with_depth() {
    let mut points = Vec::new();
    for d in [10.0, 30.0, 100.0] {
        let opt = optimal_spin_wave_default(d).unwrap();
        let grid = fast_output_grid(&opt.wave, d).unwrap();
        let out = retrieve_fast(&opt.wave, d, grid).unwrap();
        points.push((d.ln(), time_for_fraction(&out, 0.9).ln()));
    }
    // least-squares slope of log t90 against log d
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 1.0).abs() < 0.2, "slope {slope}");
}

#[test]
fn optimal_fast_input_is_stored_at_the_bound() {
    let d = 30.0;
    let opt = optimal_spin_wave_default(d).unwrap();
    let grid = fast_output_grid(&opt.wave, d).unwrap();
    let best = optimal_fast_input(d, grid).unwrap();
    assert!((best.mode.norm2() - 1.0).abs() < 1e-12);
    assert!((best.pre_norm2 - best.eta_r_max).abs() < 1e-3);

    let p = MediumParams::resonant(d).unwrap();
    let sim = Simulator::for_params(&p, SimConfig::default()).unwrap();
    let stored = sim.fast_storage(&best.mode, &p).unwrap();
    let eta = stored.breakdown.eta_storage;
    assert!((eta - opt.eta).abs() < 1e-2, "{eta} vs {}", opt.eta);
    assert!(stored.audit.defect < 1e-4);

    // perturbed inputs of the same duration store less
    let perturbations: [fn(f64) -> Complex64; 3] = [
        |x| Complex64::new(1.0 + 0.3 * x, 0.0),
        |x| Complex64::from_polar(1.0, 2.0 * x),
        |x| Complex64::new(1.0 - 0.5 * (6.0 * x).sin(), 0.0),
    ];
    let duration = grid.duration();
    for f in perturbations {
        let samples = best
            .mode
            .samples()
            .iter()
            .zip(grid.times())
            .map(|(v, t)| v * f(t / duration))
            .collect();
        let other = FieldMode::new(grid, samples).unwrap().normalized().unwrap();
        let worse = sim.fast_storage(&other, &p).unwrap().breakdown.eta_storage;
        assert!(worse < eta, "{worse} >= {eta}");
    }

    // a long, unmatched input stores much less
    let long = TimeGrid::spanning(0.0, 100.0 / d * 50.0, 4001).unwrap();
    let slow = FieldMode::from_fn(long, |t| {
        Complex64::new((std::f64::consts::PI * t / long.duration()).sin(), 0.0)
    })
    .unwrap()
    .normalized()
    .unwrap();
    let poor = sim.fast_storage(&slow, &p).unwrap().breakdown.eta_storage;
    assert!(poor < 0.5 * eta, "{poor}");
}

#[test]
fn finite_pulse_converges_to_the_ideal_swap() {
    let d = 10.0;
    let p = MediumParams::resonant(d).unwrap();
    let sim = Simulator::new(64, SimConfig::default()).unwrap();
    // a state with both polarization and spin wave present
    let opt = optimal_spin_wave_default(d).unwrap();
    let s = opt.wave.flip().unwrap().resample(sim.grid());
    let input = FieldMode::from_fn(TimeGrid::spanning(0.0, 0.5, 101).unwrap(), |t| {
        Complex64::new((std::f64::consts::PI * t / 0.5).sin(), 0.0)
    })
    .unwrap();
    let mut state = sim.fast_storage(&input.normalized().unwrap(), &p).unwrap().final_state;
    state.p = s.samples().iter().map(|v| v * 0.3).collect();
    let norm = state.excitation().sqrt();

    let error = |omega: f64| {
        let finite = sim.finite_pi_pulse(&state, &p, omega).unwrap();
        let ideal = pi_pulse(&state);
        let w = sim.grid().weights();
        let mut e = 0.0;
        for j in 0..w.len() {
            e += w[j] * ((finite.p[j] - ideal.p[j]).norm_sqr() + (finite.s[j] - ideal.s[j]).norm_sqr());
        }
        e.sqrt() / norm
    };
    let coarse = error(10.0 * d);
    let fine = error(1e3 * d);
    assert!(fine < 1e-3, "error {fine}");
    assert!(fine < coarse / 50.0, "{coarse} -> {fine}");
}

#[test]
fn ideal_swap_preserves_excitation() {
    let d = 5.0;
    let sim = Simulator::new(64, SimConfig::default()).unwrap();
    let p = MediumParams::resonant(d).unwrap();
    let input = FieldMode::from_fn(TimeGrid::spanning(0.0, 1.0, 101).unwrap(), |t| Complex64::new(t * (1.0 - t), 0.0))
        .unwrap();
    let r = sim.fast_storage(&input.normalized().unwrap(), &p).unwrap();
    let swapped = pi_pulse(&r.final_state);
    assert!((swapped.excitation() - r.final_state.excitation()).abs() < 1e-15);
}
