use nalgebra::DMatrix;
use num_complex::Complex64;
use photon_memory::kernel::{kernel_eval, optimal_spin_wave, optimal_spin_wave_default, KernelOperator};
use photon_memory::{SpaceGrid, SpinWave};
use proptest::prelude::*;

/// (d, eta_r^max) from a dense symmetric eigensolve at 400 Gauss nodes (scipy).
const GOLDEN: [(f64, f64); 9] = [
    (0.5, 0.199_349_560_760_421_68),
    (1.0, 0.330_477_800_696_509_9),
    (2.0, 0.491_540_094_004_341_95),
    (5.0, 0.696_807_271_088_969_4),
    (10.0, 0.814_214_476_409_372_3),
    (30.0, 0.924_331_177_840_283_4),
    (100.0, 0.974_514_238_190_060_1),
    (300.0, 0.991_019_296_993_660_8),
    (1000.0, 0.997_215_975_453_637_3),
];

/// Largest eigenvalue of the symmetrized Nystrom matrix `W^1/2 k W^1/2`.
fn dense_eigenvalue(d: f64, n: usize) -> f64 {
    let g = SpaceGrid::gauss_legendre(n).unwrap();
    let (z, w) = (g.nodes(), g.weights());
    let m = DMatrix::from_fn(n, n, |i, j| {
        (w[i] * w[j]).sqrt() * kernel_eval(d, z[i], z[j]).unwrap()
    });
    m.symmetric_eigenvalues().max()
}

#[test]
fn eigenvalue_ladder_matches_goldens_and_is_monotone() {
    let mut previous = 0.0;
    for (d, want) in GOLDEN {
        let m = optimal_spin_wave_default(d).unwrap();
        assert!((m.eta - want).abs() < 1e-8, "d = {d}: {} vs {want}", m.eta);
        assert!(m.eta > previous && m.eta < 1.0);
        previous = m.eta;
    }
    assert!(previous > 0.99);
}

#[test]
fn power_iteration_agrees_with_dense_eigensolve() {
    for d in [1.0, 10.0, 100.0] {
        let dense = dense_eigenvalue(d, 300);
        let m = optimal_spin_wave_default(d).unwrap();
        assert!((m.eta - dense).abs() < 1e-8, "d = {d}: {} vs {dense}", m.eta);
    }
}

#[test]
fn flat_wave_matches_brute_force_double_integral() {
    // midpoint rule on a 4000 x 4000 uniform grid
    let reference = 0.750_903_983_732_663;
    let g = SpaceGrid::gauss_legendre(200).unwrap();
    let s = SpinWave::constant(g.clone(), 1.0);
    let eta = KernelOperator::new(10.0, g).unwrap().efficiency(&s).unwrap();
    assert!((eta - reference).abs() < 1e-6, "{eta}");

    let n = 1000;
    let h = 1.0 / n as f64;
    let mut brute = 0.0;
    for i in 0..n {
        for j in 0..n {
            brute += kernel_eval(10.0, (i as f64 + 0.5) * h, (j as f64 + 0.5) * h).unwrap();
        }
    }
    brute *= h * h;
    assert!((eta - brute).abs() < 1e-5, "{eta} vs {brute}");
}

#[test]
fn kernel_matrix_is_symmetric() {
    let g = SpaceGrid::gauss_legendre(120).unwrap();
    let k = KernelOperator::new(37.0, g.clone()).unwrap();
    let (m, w, n) = (k.matrix(), g.weights(), g.len());
    for i in 0..n {
        for j in 0..n {
            let a = m[i * n + j] / w[j];
            let b = m[j * n + i] / w[i];
            assert!((a - b).abs() < 1e-12);
            assert!(a > 0.0);
        }
    }
}

#[test]
fn eigenvalue_is_grid_converged() {
    let coarse = optimal_spin_wave_default(100.0).unwrap().eta;
    let fine = optimal_spin_wave(100.0, SpaceGrid::gauss_legendre(400).unwrap(), 1e-12, 100_000)
        .unwrap()
        .eta;
    assert!((coarse - fine).abs() < 1e-8);
}

#[test]
fn optimal_mode_is_smooth_and_concentrated_near_the_exit() {
    // In the retrieval frame the wave grows toward the exit at zeta = 1, more so
    // for larger depth.
    let mut previous_ratio = 0.0;
    for d in [1.0, 10.0, 100.0] {
        let m = optimal_spin_wave_default(d).unwrap();
        let s = m.wave.samples();
        assert!(s.windows(2).all(|p| p[1].re >= p[0].re - 1e-12), "d = {d} not monotone");
        let ratio = s[s.len() - 1].re / s[0].re;
        assert!(ratio > previous_ratio);
        previous_ratio = ratio;
    }
}

fn smooth_wave(coeffs: &[f64], phases: &[f64]) -> SpinWave {
    let g = SpaceGrid::gauss_legendre(64).unwrap();
    SpinWave::from_fn(g, |z| {
        coeffs
            .iter()
            .zip(phases)
            .enumerate()
            .map(|(k, (c, p))| Complex64::from_polar(*c, *p) * z.powi(k as i32))
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn efficiency_never_exceeds_the_eigenvalue(
        coeffs in prop::collection::vec(-2.0f64..2.0, 4),
        phases in prop::collection::vec(0.0f64..6.3, 4),
        d in 0.5f64..50.0,
    ) {
        let s = smooth_wave(&coeffs, &phases);
        prop_assume!(s.norm2() > 1e-6);
        let s = s.normalized().unwrap();
        let k = KernelOperator::new(d, s.grid().clone()).unwrap();
        let eta = k.efficiency(&s).unwrap();
        let best = k.dominant_mode(1e-12, 100_000).unwrap().eta;
        prop_assert!(eta >= -1e-12);
        prop_assert!(eta <= best + 1e-9);
    }

    #[test]
    fn efficiency_is_quadratic(
        coeffs in prop::collection::vec(-2.0f64..2.0, 3),
        phases in prop::collection::vec(0.0f64..6.3, 3),
        re in -3.0f64..3.0,
        im in -3.0f64..3.0,
    ) {
        let s = smooth_wave(&coeffs, &phases);
        let k = KernelOperator::new(4.0, s.grid().clone()).unwrap();
        let a = Complex64::new(re, im);
        let lhs = k.efficiency(&s.scaled(a)).unwrap();
        let rhs = a.norm_sqr() * k.efficiency(&s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn kernel_is_symmetric_everywhere(d in 0.01f64..2000.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        prop_assert_eq!(kernel_eval(d, a, b).unwrap(), kernel_eval(d, b, a).unwrap());
        prop_assert!(kernel_eval(d, a, b).unwrap().is_finite());
    }
}
