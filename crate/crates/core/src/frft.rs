//! Domain types and FrFT primitives.
//!
//! Conventions used throughout the crate:
//!
//! - `sinc(x) = sin(πx) / (πx)`, `sinc(0) = 1`.
//! - The chirp `ξ_θ(t) = exp(j·(cot θ / 2)·t²)`; up-chirping multiplies by
//!   `ξ_θ`, down-chirping by its conjugate.
//! - The kernel shape `ψ_M` is stored in normalized time `x = t / T`:
//!   `ψ_M(x) = Σ_m p_m sinc(x - m)`.
//! - The normalization constant `C_θ` is dropped in convolution and synthesis;
//!   only [`kernel_eval`] includes it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BRANCH_EPS: f64 = 1e-12;

/// `sin(πx) / (πx)` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let px = PI * x;
    // Integer arguments are exact zeros; sin(π·k) in floating point is not.
    if x.fract() == 0.0 {
        return 0.0;
    }
    px.sin() / px
}

/// Derivative of [`sinc`] with respect to its argument.
pub fn sinc_derivative(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Taylor: -(π²/3)x + (π⁴/30)x³
        let p2 = PI * PI;
        return -p2 / 3.0 * x + p2 * p2 / 30.0 * x * x * x;
    }
    let px = PI * x;
    if x.fract() == 0.0 {
        // cos(πk)/k
        let sign = if (x as i64) % 2 == 0 { 1.0 } else { -1.0 };
        return sign / x;
    }
    (px.cos() - px.sin() / px) / x
}

/// FrFT order θ (radians), restricted to the chirp branch θ ≠ nπ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FrftOrder {
    theta: f64,
    cot: f64,
    csc: f64,
}

impl FrftOrder {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "theta must be finite, got {theta}"
            )));
        }
        let (s, c) = theta.sin_cos();
        if s.abs() < BRANCH_EPS {
            return Err(Error::UnsupportedBranch { theta });
        }
        // Snap cot to zero at θ = π/2 (+ nπ) so the Fourier case is exact.
        let cot = if c.abs() < 1e-15 { 0.0 } else { c / s };
        Ok(Self {
            theta,
            cot,
            csc: 1.0 / s,
        })
    }

    /// The ordinary Fourier case, θ = π/2.
    pub fn fourier() -> Self {
        Self {
            theta: PI / 2.0,
            cot: 0.0,
            csc: 1.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn cot(&self) -> f64 {
        self.cot
    }

    pub fn csc(&self) -> f64 {
        self.csc
    }

    /// `C_θ = sqrt((1 - j cot θ) / 2π)`, principal branch.
    pub fn normalization(&self) -> Complex64 {
        (Complex64::new(1.0, -self.cot) / (2.0 * PI)).sqrt()
    }
}

impl TryFrom<f64> for FrftOrder {
    type Error = Error;

    fn try_from(theta: f64) -> Result<Self> {
        Self::new(theta)
    }
}

impl From<FrftOrder> for f64 {
    fn from(order: FrftOrder) -> f64 {
        order.theta
    }
}

/// One Dirac of the sparse stream: amplitude `c` at time `t` (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub amplitude: Complex64,
    pub location: f64,
}

impl Spike {
    pub fn new(amplitude: impl Into<Complex64>, location: f64) -> Self {
        Self {
            amplitude: amplitude.into(),
            location,
        }
    }
}

/// `s_K(t) = Σ_k c_k δ(t - t_k)` with strictly increasing `t_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    spikes: Vec<Spike>,
}

impl SparseSignal {
    /// Validates and sorts the spikes by location.
    pub fn new(mut spikes: Vec<Spike>) -> Result<Self> {
        if spikes.is_empty() {
            return Err(Error::InvalidArgument(
                "sparse signal needs at least one spike".into(),
            ));
        }
        for s in &spikes {
            if !s.location.is_finite() || !s.amplitude.re.is_finite() || !s.amplitude.im.is_finite()
            {
                return Err(Error::InvalidArgument(
                    "spike parameters must be finite".into(),
                ));
            }
            if s.amplitude.norm() == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "spike at t = {} has zero amplitude",
                    s.location
                )));
            }
        }
        spikes.sort_by(|a, b| a.location.total_cmp(&b.location));
        if let Some(w) = spikes.windows(2).find(|w| w[0].location == w[1].location) {
            return Err(Error::InvalidArgument(format!(
                "duplicate spike location t = {}",
                w[0].location
            )));
        }
        Ok(Self { spikes })
    }

    /// Builds from parallel amplitude/location lists.
    pub fn from_parts(amplitudes: &[Complex64], locations: &[f64]) -> Result<Self> {
        if amplitudes.len() != locations.len() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes but {} locations",
                amplitudes.len(),
                locations.len()
            )));
        }
        Self::new(
            amplitudes
                .iter()
                .zip(locations)
                .map(|(&c, &t)| Spike::new(c, t))
                .collect(),
        )
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s.location).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.spikes.iter().map(|s| s.amplitude).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            spikes: self
                .spikes
                .iter()
                .map(|s| Spike::new(s.amplitude * factor, s.location))
                .collect(),
        }
    }
}

/// Sampling kernel `ψ_M(t) = Σ_{m<M} p_m sinc(t/T - m)`; the physical filter
/// is its down-chirped version `φ_M = ξ_θ^{-1} ψ_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    weights: Vec<f64>,
    period: f64,
}

impl Kernel {
    pub fn new(weights: Vec<f64>, period: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument(
                "kernel needs at least one weight".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "kernel weights must be finite".into(),
            ));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidArgument("kernel weights are all zero".into()));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample period must be > 0, got {period}"
            )));
        }
        Ok(Self { weights, period })
    }

    /// Single-tap sinc kernel (`M = 1`, `p_0 = 1`).
    pub fn sinc(period: f64) -> Result<Self> {
        Self::new(vec![1.0], period)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Tap count `M`.
    pub fn taps(&self) -> usize {
        self.weights.len()
    }

    /// Sample period `T` in seconds.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// `ψ_M` at normalized time `x = t / T`.
    pub fn psi(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(m, &p)| p * sinc(x - m as f64))
            .sum()
    }

    /// `dψ_M/dx` at normalized time `x`.
    pub fn psi_derivative(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(m, &p)| p * sinc_derivative(x - m as f64))
            .sum()
    }

    /// `ψ_M` at physical time `t` (seconds).
    pub fn psi_at(&self, t: f64) -> f64 {
        self.psi(t / self.period)
    }
}

/// Uniform complex samples `y[n] = y(nT)`, `n = 0..N-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    values: Vec<Complex64>,
    period: f64,
    theta: FrftOrder,
}

impl SampleSet {
    pub fn new(values: Vec<Complex64>, period: f64, theta: FrftOrder) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "sample set must hold at least one sample".into(),
            ));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample period must be > 0, got {period}"
            )));
        }
        Ok(Self {
            values,
            period,
            theta,
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn theta(&self) -> FrftOrder {
        self.theta
    }

    /// Sample instants `nT`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|n| n as f64 * self.period)
            .collect()
    }

    /// Same metadata, new values. Length must not change.
    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            period: self.period,
            theta: self.theta,
        }
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }
}

/// `ξ_θ(t) = exp(j·(cot θ / 2)·t²)`.
pub fn chirp_factor(theta: FrftOrder, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * theta.cot() * t * t)
}

fn check_aligned(values: &[Complex64], times: &[f64]) -> Result<()> {
    if values.len() != times.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values but {} time instants",
            values.len(),
            times.len()
        )));
    }
    Ok(())
}

/// Multiplies each value by `ξ_θ(t)`.
pub fn chirp_up(values: &[Complex64], theta: FrftOrder, times: &[f64]) -> Result<Vec<Complex64>> {
    check_aligned(values, times)?;
    Ok(values
        .iter()
        .zip(times)
        .map(|(&v, &t)| v * chirp_factor(theta, t))
        .collect())
}

/// Multiplies each value by `ξ_θ^{-1}(t) = conj(ξ_θ(t))`.
pub fn chirp_down(values: &[Complex64], theta: FrftOrder, times: &[f64]) -> Result<Vec<Complex64>> {
    check_aligned(values, times)?;
    Ok(values
        .iter()
        .zip(times)
        .map(|(&v, &t)| v * chirp_factor(theta, t).conj())
        .collect())
}

/// Generic-branch FrFT kernel
/// `κ_θ(t, ω) = C_θ exp(-j((t² + ω²)/2·cot θ - ωt·csc θ))`.
///
/// Unlike the rest of the crate this includes `C_θ`. The Dirac branches
/// θ = nπ are rejected when the [`FrftOrder`] is built.
pub fn kernel_eval(theta: FrftOrder, t: f64, omega: f64) -> Complex64 {
    let phase = -(0.5 * (t * t + omega * omega) * theta.cot() - omega * t * theta.csc());
    theta.normalization() * Complex64::from_polar(1.0, phase)
}

/// A function sampled on `start + i·step`, `i = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    pub start: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl GridSignal {
    pub fn new(start: f64, step: f64, values: Vec<Complex64>) -> Self {
        Self {
            start,
            step,
            values,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

/// Fractional convolution `h = ξ_θ^{-1}·((ξ_θ f) * (ξ_θ g))` on a uniform grid,
/// `C_θ` omitted.
///
/// The integral is a Riemann sum scaled by the grid step. The output lives on
/// `f.start + g.start + k·step`, `k = 0..len(f)+len(g)-1`.
pub fn frac_convolve_on_grid(
    f: &GridSignal,
    g: &GridSignal,
    theta: FrftOrder,
) -> Result<GridSignal> {
    if f.values.is_empty() || g.values.is_empty() {
        return Err(Error::InvalidArgument(
            "convolution operands must be non-empty".into(),
        ));
    }
    if !(f.step > 0.0) || (f.step - g.step).abs() > 1e-12 * f.step.abs().max(g.step.abs()) {
        return Err(Error::InvalidArgument(format!(
            "grid steps must be equal and positive, got {} and {}",
            f.step, g.step
        )));
    }
    let step = f.step;
    let fu = chirp_up(&f.values, theta, &f.times())?;
    let gu = chirp_up(&g.values, theta, &g.times())?;

    let len = fu.len() + gu.len() - 1;
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    for (i, &a) in fu.iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &b) in gu.iter().enumerate() {
            acc[i + j] += a * b;
        }
    }
    let out = GridSignal::new(
        f.start + g.start,
        step,
        acc.into_iter().map(|v| v * step).collect(),
    );
    let values = chirp_down(&out.values, theta, &out.times())?;
    Ok(GridSignal { values, ..out })
}

/// FrFT-bandlimited interpolation
/// `f(t) = ξ_θ^{-1}(t) Σ_n f(nT) ξ_θ(nT) sinc(t/T - n)`.
///
/// The series is truncated to the available samples; accuracy away from the
/// window centre is limited by the missing tail.
pub fn frft_interpolate(samples: &SampleSet, t: f64) -> Complex64 {
    let theta = samples.theta();
    let period = samples.period();
    let x = t / period;
    let sum: Complex64 = samples
        .values()
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let tn = n as f64 * period;
            v * chirp_factor(theta, tn) * sinc(x - n as f64)
        })
        .sum();
    sum * chirp_factor(theta, t).conj()
}
