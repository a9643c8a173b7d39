//! Reference input mode used by the figure commands.

use num_complex::Complex64;
use photon_memory::{FieldMode, TimeGrid};

/// Centre of the reference Gaussian as a fraction of the duration.
pub const CENTER_FRACTION: f64 = 0.5;
/// Standard deviation of the reference Gaussian as a fraction of the duration.
pub const WIDTH_FRACTION: f64 = 0.15;

/// Gaussian centred at `T/2` with standard deviation `0.15 T`, lowered so it
/// vanishes at `0` and `T`, and normalized to unit norm on `grid`.
///
/// `grid` must span `[0, T]`. Samples are bitwise symmetric about `T/2`.
pub fn make_reference_input(duration: f64, grid: TimeGrid) -> photon_memory::Result<FieldMode> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(photon_memory::Error::InvalidParameter {
            name: "duration",
            reason: format!("must be positive, got {duration}"),
        });
    }
    let n = grid.len();
    let m = (n - 1) as f64;
    // y in [-1, 1] from integer arithmetic, so y_k = -y_{n-1-k} exactly
    let sigma = 2.0 * WIDTH_FRACTION;
    let g = |y: f64| (-(y * y) / (2.0 * sigma * sigma)).exp();
    let edge = g(1.0);
    let samples = (0..n)
        .map(|k| {
            let y = (2 * k as i64 - (n as i64 - 1)) as f64 / m;
            Complex64::new(g(y) - edge, 0.0)
        })
        .collect();
    FieldMode::new(grid, samples)?.normalized()
}

/// Reference input on `[0, duration]` with `n` samples.
pub fn reference_input(duration: f64, n: usize) -> photon_memory::Result<FieldMode> {
    make_reference_input(duration, TimeGrid::spanning(0.0, duration, n)?)
}
