//! Time and space discretizations.
//!
//! Time is sampled uniformly so that time reversal is an exact reversal of
//! samples. Space (zeta = z/L in [0, 1]) defaults to Gauss-Legendre nodes,
//! which integrate the smooth retrieval kernel spectrally and admit a stable
//! barycentric interpolant.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniform time grid `tau_k = tau0 + k * dtau`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    tau0: f64,
    dtau: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(tau0: f64, dtau: f64, n: usize) -> Result<Self> {
        if !tau0.is_finite() {
            return Err(invalid("tau0", "start time must be finite"));
        }
        if !(dtau.is_finite() && dtau > 0.0) {
            return Err(invalid("dtau", format!("time step must be positive, got {dtau}")));
        }
        if n < 2 {
            return Err(invalid("n", format!("a time grid needs at least 2 samples, got {n}")));
        }
        Ok(Self { tau0, dtau, n })
    }

    /// `n` samples covering `[tau0, tau0 + duration]` inclusive.
    pub fn spanning(tau0: f64, duration: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", format!("a time grid needs at least 2 samples, got {n}")));
        }
        Self::new(tau0, duration / (n - 1) as f64, n)
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.tau0 + k as f64 * self.dtau
    }

    pub fn end(&self) -> f64 {
        self.tau(self.n - 1)
    }

    pub fn duration(&self) -> f64 {
        (self.n - 1) as f64 * self.dtau
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.tau(k))
    }

    /// Trapezoid weights; with them a quadrature of sampled data is invariant
    /// under sample reversal.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.dtau; self.n];
        w[0] = 0.5 * self.dtau;
        w[self.n - 1] = 0.5 * self.dtau;
        w
    }

    /// Interval index and fractional position of `tau`, or `None` outside the grid.
    pub fn locate(&self, tau: f64) -> Option<(usize, f64)> {
        let x = (tau - self.tau0) / self.dtau;
        let last = (self.n - 1) as f64;
        if !(x >= -1e-12 && x <= last + 1e-9) {
            return None;
        }
        let x = x.clamp(0.0, last);
        let k = (x.floor() as usize).min(self.n - 2);
        Some((k, x - k as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    GaussLegendre,
    Uniform,
    Custom,
}

/// Quadrature nodes and weights on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
}

impl SpaceGrid {
    /// Gauss-Legendre rule with `n` nodes mapped to `[0, 1]`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n_zeta", "need at least one node"));
        }
        let (x, w) = gauss_legendre_unit(n);
        let nodes = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights = w.iter().map(|w| 0.5 * w).collect();
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::GaussLegendre,
        })
    }

    /// Midpoint rule: nodes `(j + 1/2)/n`, equal weights.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n_zeta", "need at least one node"));
        }
        let h = 1.0 / n as f64;
        Ok(Self {
            nodes: (0..n).map(|j| (j as f64 + 0.5) * h).collect(),
            weights: vec![h; n],
            kind: GridKind::Uniform,
        })
    }

    /// Arbitrary quadrature; validated against the grid invariants.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(invalid("nodes", "nodes and weights must be nonempty and of equal length"));
        }
        if nodes.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("nodes", "nodes must be strictly increasing"));
        }
        if nodes[0] < 0.0 || nodes[nodes.len() - 1] > 1.0 {
            return Err(invalid("nodes", "nodes must lie in [0, 1]"));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("weights", "weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("weights", format!("weights must sum to 1, got {total}")));
        }
        Ok(Self {
            nodes,
            weights,
            kind: GridKind::Custom,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|j| {
            (self.nodes[j] + self.nodes[n - 1 - j] - 1.0).abs() < 1e-12
                && (self.weights[j] - self.weights[n - 1 - j]).abs() < 1e-12
        })
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Row-major `target.len() x self.len()` matrix mapping samples on this grid
    /// to samples on `target`. Gauss-Legendre sources use the barycentric
    /// polynomial interpolant; other sources interpolate linearly.
    pub fn interpolation_matrix(&self, target: &SpaceGrid) -> Vec<f64> {
        let n = self.len();
        let m = target.len();
        let mut out = vec![0.0; m * n];
        match self.kind {
            GridKind::GaussLegendre => {
                let bw = self.barycentric_weights();
                for (i, &x) in target.nodes.iter().enumerate() {
                    let row = &mut out[i * n..(i + 1) * n];
                    if let Some(j) = self.nodes.iter().position(|&xj| (x - xj).abs() < 1e-14) {
                        row[j] = 1.0;
                        continue;
                    }
                    let mut denom = 0.0;
                    for j in 0..n {
                        let t = bw[j] / (x - self.nodes[j]);
                        row[j] = t;
                        denom += t;
                    }
                    row.iter_mut().for_each(|v| *v /= denom);
                }
            }
            _ => {
                for (i, &x) in target.nodes.iter().enumerate() {
                    let row = &mut out[i * n..(i + 1) * n];
                    if n == 1 || x <= self.nodes[0] {
                        row[0] = 1.0;
                    } else if x >= self.nodes[n - 1] {
                        row[n - 1] = 1.0;
                    } else {
                        let j = self.nodes.partition_point(|&xj| xj <= x) - 1;
                        let f = (x - self.nodes[j]) / (self.nodes[j + 1] - self.nodes[j]);
                        row[j] = 1.0 - f;
                        row[j + 1] = f;
                    }
                }
            }
        }
        out
    }

    /// Barycentric weights of the Legendre interpolant, `(-1)^j sqrt((1 - x_j^2) w_j)`
    /// in the `[-1, 1]` variable (any common scale cancels).
    fn barycentric_weights(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(j, (&z, &w))| {
                let x = 2.0 * z - 1.0;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * ((1.0 - x * x) * 2.0 * w).sqrt()
            })
            .collect()
    }

    /// Matrix `Q` with `(Q f)_i = int_0^{zeta_i} f(x) dx` for the polynomial
    /// interpolant of `f` through the nodes. Row-major, Gauss-Legendre grids only.
    pub fn integration_matrix(&self) -> Result<Vec<f64>> {
        if self.kind != GridKind::GaussLegendre {
            return Err(Error::GridMismatch(
                "spectral integration needs a Gauss-Legendre grid".into(),
            ));
        }
        let n = self.len();
        let t: Vec<f64> = self.nodes.iter().map(|z| 2.0 * z - 1.0).collect();
        // legendre[k][i] = P_k(t_i), k = 0..=n
        let mut legendre = vec![vec![0.0; n]; n + 1];
        for i in 0..n {
            let mut p0 = 1.0;
            let mut p1 = t[i];
            legendre[0][i] = p0;
            if n >= 1 {
                legendre[1][i] = p1;
            }
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * t[i] * p1 - k as f64 * p0) / (k + 1) as f64;
                legendre[k + 1][i] = p2;
                p0 = p1;
                p1 = p2;
            }
        }
        let mut q = vec![0.0; n * n];
        for k in 0..n {
            let scale = (2 * k + 1) as f64;
            for i in 0..n {
                // int_0^{zeta_i} P_k(2x - 1) dx
                let antideriv = if k == 0 {
                    0.5 * (t[i] + 1.0)
                } else {
                    0.5 * (legendre[k + 1][i] - legendre[k - 1][i]) / scale
                };
                let row = &mut q[i * n..(i + 1) * n];
                for j in 0..n {
                    row[j] += antideriv * scale * self.weights[j] * legendre[k][j];
                }
            }
        }
        Ok(q)
    }
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
