use num_complex::Complex64;
use photon_memory::adiabatic::{
    auto_h_max, optimal_storage_control, retrieve_adiabatic, shape_retrieval_control,
    store_adiabatic, ShapingOptions, StorageOptions,
};
use photon_memory::kernel::{optimal_spin_wave, retrieval_efficiency};
use photon_memory::{ControlField, FieldMode, MediumParams, SpaceGrid, SpinWave, TimeGrid, TimeReverse};

fn gaussian(grid: TimeGrid, t0: f64, sigma: f64) -> FieldMode {
    FieldMode::from_fn(grid, |t| Complex64::new((-(t - t0).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0))
        .unwrap()
        .normalized()
        .unwrap()
}

#[test]
fn output_norm_is_control_independent() {
    let grid = SpaceGrid::gauss_legendre(80).unwrap();
    let s = SpinWave::from_fn(grid, |z| Complex64::new(1.0 + z, 0.5 * z * z)).unwrap();
    let d = 10.0;
    let eta = retrieval_efficiency(&s, d).unwrap();
    for delta in [0.0, 10.0, 50.0] {
        let p = MediumParams::new(d, delta).unwrap();
        let h_end = auto_h_max(&p) * 1.2;
        let n = if delta > 20.0 { 30_001 } else { 6001 };
        let tg = TimeGrid::spanning(0.0, 60.0, n).unwrap();
        // ramped control so h grows nonuniformly
        let scale = (h_end / 60.0).sqrt();
        let ctrl = ControlField::from_fn(tg, |t| {
            Complex64::new(scale * (0.5 + t / 60.0) * (1.0 / 1.0833f64).sqrt(), 0.0)
        })
        .unwrap();
        let out = retrieve_adiabatic(&s, &ctrl, &p).unwrap();
        let got = out.output.norm2();
        assert!((got - eta).abs() < 1e-3, "delta {delta}: {got} vs {eta}");
    }
}

#[test]
fn shaping_reproduces_constant_control() {
    let grid = SpaceGrid::gauss_legendre(100).unwrap();
    let p = MediumParams::resonant(10.0).unwrap();
    let s = optimal_spin_wave(10.0, grid, 1e-12, 10_000).unwrap().wave;
    let tg = TimeGrid::spanning(0.0, 100.0, 10_001).unwrap();
    let omega0 = 1.0;
    let ctrl = ControlField::constant(tg, Complex64::new(omega0, 0.0));
    let out = retrieve_adiabatic(&s, &ctrl, &p).unwrap().output;
    let shaped = shape_retrieval_control(&s, &out, &p, &ShapingOptions::default()).unwrap();
    let peak = out.samples().iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let mut checked = 0;
    for (w, e) in shaped.control.samples().iter().zip(out.samples()) {
        if e.norm_sqr() > 1e-6 * peak {
            assert!((w.norm() - omega0).abs() < 1e-4, "|omega| = {}", w.norm());
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn shaped_output_matches_target_and_norm() {
    let grid = SpaceGrid::gauss_legendre(120).unwrap();
    for (d, delta) in [(10.0, 0.0), (5.0, 10.0)] {
        let p = MediumParams::new(d, delta).unwrap();
        let opt = optimal_spin_wave(d, grid.clone(), 1e-12, 10_000).unwrap();
        let tg = TimeGrid::spanning(0.0, 10.0, 4001).unwrap();
        let target = gaussian(tg, 5.0, 1.5);
        let shaped = shape_retrieval_control(&opt.wave, &target, &p, &ShapingOptions::default()).unwrap();
        let out = retrieve_adiabatic(&opt.wave, &shaped.control, &p).unwrap().output;
        let want = opt.eta * (1.0 - shaped.truncation_loss);
        assert!((out.norm2() - want).abs() < 1e-4, "d {d}: {} vs {want}", out.norm2());
        let overlap = out.inner(&target).unwrap().norm_sqr() / out.norm2();
        assert!(overlap > 1.0 - 1e-4, "overlap {overlap}");
    }
}

#[test]
fn optimal_storage_writes_the_flipped_optimal_mode() {
    let d = 10.0;
    let p = MediumParams::resonant(d).unwrap();
    let tg = TimeGrid::spanning(0.0, 10.0, 4001).unwrap();
    let input = gaussian(tg, 5.0, 1.5);
    let opts = StorageOptions { kernel_nodes: 120, ..Default::default() };
    let st = optimal_storage_control(&input, &p, &opts).unwrap();
    let stored = store_adiabatic(&input, &st.control, &p, st.optimal.wave.grid()).unwrap();
    assert!((stored.norm2() - st.predicted_eta_s).abs() < 1e-4, "{}", stored.norm2());
    let want = st.optimal.wave.flip().unwrap().scaled(Complex64::new(st.predicted_eta_s.sqrt(), 0.0));
    assert!(stored.distance_up_to_phase(&want).unwrap() < 1e-3);
    // retrieval control is the reverse of the storage control
    let back = st.control.time_reversed();
    assert_eq!(back.samples(), st.retrieval.control.samples());
}

#[test]
fn storage_efficiency_never_exceeds_retrieval_bound() {
    let d = 3.0;
    let p = MediumParams::new(d, 2.0).unwrap();
    let grid = SpaceGrid::gauss_legendre(80).unwrap();
    let bound = optimal_spin_wave(d, grid.clone(), 1e-12, 10_000).unwrap().eta;
    let tg = TimeGrid::spanning(0.0, 20.0, 2001).unwrap();
    let input = gaussian(tg, 10.0, 2.0);
    for amp in [0.3, 1.0, 3.0] {
        let ctrl = ControlField::constant(tg, Complex64::new(amp, 0.0));
        let s = store_adiabatic(&input, &ctrl, &p, &grid).unwrap();
        assert!(s.norm2() <= bound + 1e-6, "{} > {bound}", s.norm2());
    }
}
