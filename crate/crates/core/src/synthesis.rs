//! Measurement synthesis: closed-form filtered spikes, uniform sampling,
//! complex Gaussian noise and an ADC quantizer.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frft::{chirp_factor, FrftOrder, Kernel, SampleSet, SparseSignal};

/// Low-pass filtered spike stream at time `t`:
///
/// `y(t) = ξ_θ^{-1}(t) Σ_k c_k ξ_θ(t_k) Σ_m p_m sinc((t - t_k)/T - m)`
///
/// Evaluated in closed form; `C_θ` is omitted.
pub fn synthesize_measurement(
    signal: &SparseSignal,
    kernel: &Kernel,
    theta: FrftOrder,
    t: f64,
) -> Complex64 {
    let period = kernel.period();
    let sum: Complex64 = signal
        .spikes()
        .iter()
        .map(|s| {
            s.amplitude * chirp_factor(theta, s.location) * kernel.psi((t - s.location) / period)
        })
        .sum();
    sum * chirp_factor(theta, t).conj()
}

/// `y[n] = y(nT)` for `n = 0..count`, with `T` taken from the kernel.
pub fn sample_uniform(
    signal: &SparseSignal,
    kernel: &Kernel,
    theta: FrftOrder,
    count: usize,
) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let period = kernel.period();
    let values = (0..count)
        .map(|n| synthesize_measurement(signal, kernel, theta, n as f64 * period))
        .collect();
    SampleSet::new(values, period, theta)
}

/// Circular complex Gaussian noise `CN(0, σ²)`.
///
/// Draws are keyed by `(seed, stream, n)`: the ChaCha key comes from `seed`,
/// the stream id selects an independent keystream (one per Monte Carlo
/// trial), and sample `n` always consumes the same keystream words. Results
/// therefore do not depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl NoiseModel {
    pub fn new(sigma2: f64, seed: u64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be >= 0, got {sigma2}"
            )));
        }
        Ok(Self {
            sigma2,
            seed,
            stream: 0,
        })
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Noise draws `ε[0..count]`.
    pub fn draw(&self, count: usize) -> Vec<Complex64> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        let scale = (self.sigma2 / 2.0).sqrt();
        (0..count)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(scale * re, scale * im)
            })
            .collect()
    }
}

/// `z[n] = y[n] + ε[n]`.
pub fn add_noise(samples: &SampleSet, noise: &NoiseModel) -> SampleSet {
    if noise.sigma2 == 0.0 {
        return samples.clone();
    }
    let eps = noise.draw(samples.len());
    samples.with_values(
        samples
            .values()
            .iter()
            .zip(eps)
            .map(|(y, e)| y + e)
            .collect(),
    )
}

/// Uniform mid-tread quantizer applied separately to I and Q.
///
/// `2^bits` levels `k·Δ`, `k = -2^(bits-1) ..= 2^(bits-1) - 1`, with
/// `Δ = 2·full_scale / (2^bits - 1)`. Zero is a level and every input in
/// `[-full_scale, full_scale]` is within `Δ/2` of a level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerModel {
    pub bits: u32,
    pub full_scale: f64,
}

impl Default for QuantizerModel {
    fn default() -> Self {
        Self {
            bits: 8,
            full_scale: 1.0,
        }
    }
}

impl QuantizerModel {
    pub fn new(bits: u32, full_scale: f64) -> Result<Self> {
        if !(1..=32).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "quantizer bits must be in 1..=32, got {bits}"
            )));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "full scale must be > 0, got {full_scale}"
            )));
        }
        Ok(Self { bits, full_scale })
    }

    /// Full scale set to `headroom` times the largest |Re| or |Im| in `samples`.
    pub fn fitted(bits: u32, samples: &SampleSet, headroom: f64) -> Result<Self> {
        let peak = peak_channel_amplitude(samples.values());
        if peak == 0.0 {
            return Err(Error::InvalidArgument(
                "cannot fit a quantizer to an all-zero signal".into(),
            ));
        }
        Self::new(bits, headroom * peak)
    }

    pub fn step(&self) -> f64 {
        2.0 * self.full_scale / ((1u64 << self.bits) as f64 - 1.0)
    }

    fn code_range(&self) -> (f64, f64) {
        let half = (1u64 << (self.bits - 1)) as f64;
        (-half, half - 1.0)
    }

    /// Quantizes one real channel; the flag reports clipping.
    pub fn quantize_channel(&self, x: f64) -> (f64, bool) {
        let step = self.step();
        let (lo, hi) = self.code_range();
        let code = (x / step).round().clamp(lo, hi);
        (code * step, x.abs() > self.full_scale)
    }
}

pub fn peak_channel_amplitude(values: &[Complex64]) -> f64 {
    values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.re.abs()).max(v.im.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub samples: SampleSet,
    /// Number of real channel values (I or Q) outside `[-full_scale, full_scale]`.
    pub clipped: usize,
}

pub fn quantize(samples: &SampleSet, q: &QuantizerModel) -> Quantized {
    let mut clipped = 0;
    let values = samples
        .values()
        .iter()
        .map(|v| {
            let (re, cr) = q.quantize_channel(v.re);
            let (im, ci) = q.quantize_channel(v.im);
            clipped += cr as usize + ci as usize;
            Complex64::new(re, im)
        })
        .collect();
    Quantized {
        samples: samples.with_values(values),
        clipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frft::{frac_convolve_on_grid, sinc, GridSignal, Spike};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn single(c: f64, t: f64) -> SparseSignal {
        SparseSignal::new(vec![Spike::new(c, t)]).unwrap()
    }

    #[test]
    fn single_sinc_spike_values() {
        let k = Kernel::sinc(0.5).unwrap();
        let th = FrftOrder::new(FRAC_PI_2).unwrap();
        let s = single(1.0, 0.0);
        assert_eq!(
            synthesize_measurement(&s, &k, th, 0.0),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(synthesize_measurement(&s, &k, th, 0.5).norm(), 0.0);
    }

    #[test]
    fn sampling_matches_pointwise_synthesis() {
        let k = Kernel::new(vec![1.0, -0.4, 0.2], 0.062).unwrap();
        let th = FrftOrder::new(0.7).unwrap();
        let s = SparseSignal::from_parts(
            &[Complex64::new(0.7, 0.1), Complex64::new(-1.2, 0.0)],
            &[0.31, 0.55],
        )
        .unwrap();
        let set = sample_uniform(&s, &k, th, 20).unwrap();
        assert_eq!(set.len(), 20);
        for (n, v) in set.values().iter().enumerate() {
            assert_eq!(*v, synthesize_measurement(&s, &k, th, n as f64 * 0.062));
        }
        let one = sample_uniform(&s, &k, th, 1).unwrap();
        assert_eq!(one.values()[0], synthesize_measurement(&s, &k, th, 0.0));
        assert!(sample_uniform(&s, &k, th, 0).is_err());
    }

    #[test]
    fn closed_form_agrees_with_grid_convolution() {
        // One spike on a 256-point grid convolved with φ_M = ξ^{-1} ψ_M.
        let th = FrftOrder::new(FRAC_PI_4).unwrap();
        let period = 0.1;
        let k = Kernel::new(vec![1.0, 0.5], period).unwrap();
        let step = period / 8.0;
        let t0 = 40.0 * step;
        let amp = Complex64::new(0.8, -0.3);

        let f = GridSignal::new(t0, step, vec![amp / step]);
        let g_start = -128.0 * step;
        let g_times: Vec<f64> = (0..256).map(|i| g_start + i as f64 * step).collect();
        let g_vals = g_times
            .iter()
            .map(|&t| chirp_factor(th, t).conj() * k.psi_at(t))
            .collect();
        let h = frac_convolve_on_grid(&f, &GridSignal::new(g_start, step, g_vals), th).unwrap();

        let sig = SparseSignal::new(vec![Spike::new(amp, t0)]).unwrap();
        let worst = h
            .times()
            .iter()
            .zip(&h.values)
            .map(|(&t, v)| (synthesize_measurement(&sig, &k, th, t) - v).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "max deviation {worst}");
    }

    #[test]
    fn linear_in_amplitudes() {
        let k = Kernel::new(vec![0.3, 1.0], 0.2).unwrap();
        let th = FrftOrder::new(1.2).unwrap();
        let s = SparseSignal::from_parts(
            &[Complex64::new(1.0, 0.5), Complex64::new(-0.2, 0.9)],
            &[0.13, 0.71],
        )
        .unwrap();
        let d = s.scaled(2.0);
        for i in 0..50 {
            let t = -0.5 + i as f64 * 0.037;
            let a = synthesize_measurement(&s, &k, th, t);
            let b = synthesize_measurement(&d, &k, th, t);
            assert!((b - 2.0 * a).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn chirp_structure_term_by_term() {
        let k = Kernel::new(vec![1.0, -0.7, 0.25], 0.3).unwrap();
        let th = FrftOrder::new(0.4).unwrap();
        let s = SparseSignal::from_parts(
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.2, -0.6),
                Complex64::new(-0.9, 0.1),
            ],
            &[0.05, 0.9, 1.37],
        )
        .unwrap();
        for i in 0..40 {
            let t = i as f64 * 0.071;
            let lhs = synthesize_measurement(&s, &k, th, t) * chirp_factor(th, t);
            let mut rhs = Complex64::new(0.0, 0.0);
            for sp in s.spikes() {
                let phase = Complex64::from_polar(1.0, th.cot() / 2.0 * sp.location * sp.location);
                let mut psi = 0.0;
                for (m, p) in k.weights().iter().enumerate() {
                    psi += p * sinc((t - sp.location) / 0.3 - m as f64);
                }
                rhs += sp.amplitude * phase * psi;
            }
            assert!((lhs - rhs).norm() <= 1e-12);
        }
    }

    #[test]
    fn fourier_case_is_classical_fri() {
        let k = Kernel::new(vec![1.0, 0.4], 0.25).unwrap();
        let s = SparseSignal::from_parts(
            &[Complex64::new(1.5, 0.0), Complex64::new(-0.5, 0.2)],
            &[0.3, 0.8],
        )
        .unwrap();
        for i in 0..30 {
            let t = i as f64 * 0.05;
            let y = synthesize_measurement(&s, &k, FrftOrder::fourier(), t);
            let classical: Complex64 = s
                .spikes()
                .iter()
                .map(|sp| sp.amplitude * k.psi_at(t - sp.location))
                .sum();
            assert!((y - classical).norm() <= 1e-12);
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let set =
            SampleSet::new(vec![Complex64::new(1.0, 2.0); 5], 0.1, FrftOrder::fourier()).unwrap();
        assert_eq!(add_noise(&set, &NoiseModel::new(0.0, 9).unwrap()), set);
        assert!(NoiseModel::new(-1.0, 0).is_err());
    }

    #[test]
    fn noise_is_deterministic_per_stream() {
        let set = SampleSet::new(
            vec![Complex64::new(0.0, 0.0); 64],
            0.1,
            FrftOrder::fourier(),
        )
        .unwrap();
        let nm = NoiseModel::new(0.5, 1234).unwrap();
        assert_eq!(add_noise(&set, &nm), add_noise(&set, &nm));
        assert_ne!(add_noise(&set, &nm), add_noise(&set, &nm.with_stream(1)));
        // Prefix stability: sample n is the same whatever N is.
        let short = nm.draw(10);
        assert_eq!(&nm.draw(64)[..10], &short[..]);
    }

    #[test]
    fn noise_variance_law_of_large_numbers() {
        let nm = NoiseModel::new(1.0, 42).unwrap();
        let eps = nm.draw(1_000_000);
        let mean_power = eps.iter().map(|e| e.norm_sqr()).sum::<f64>() / eps.len() as f64;
        assert!(
            (mean_power - 1.0).abs() < 0.01,
            "mean |eps|^2 = {mean_power}"
        );
        let re_var = eps.iter().map(|e| e.re * e.re).sum::<f64>() / eps.len() as f64;
        assert!((re_var - 0.5).abs() < 0.01);
    }

    #[test]
    fn quantizer_zero_and_levels() {
        let q = QuantizerModel::new(8, 1.0).unwrap();
        assert_eq!(q.quantize_channel(0.0), (0.0, false));
        let step = q.step();
        for k in [-128i32, -77, -1, 1, 5, 127] {
            let level = k as f64 * step;
            assert_eq!(q.quantize_channel(level).0, level);
        }
    }

    #[test]
    fn quantizer_worst_case_error_scan() {
        let q = QuantizerModel::new(8, 1.0).unwrap();
        let bound = 1.0 / 255.0;
        let scan = 200_001;
        let mut worst = 0.0f64;
        for i in 0..scan {
            let x = -1.0 + 2.0 * i as f64 / (scan - 1) as f64;
            let (y, clipped) = q.quantize_channel(x);
            assert!(!clipped);
            worst = worst.max((y - x).abs());
        }
        assert!(worst <= bound * (1.0 + 1e-12), "worst {worst} vs {bound}");
    }

    #[test]
    fn quantizer_counts_clipping() {
        let q = QuantizerModel::new(4, 1.0).unwrap();
        let set = SampleSet::new(
            vec![
                Complex64::new(2.0, 0.1),
                Complex64::new(-0.3, -5.0),
                Complex64::new(0.2, 0.2),
            ],
            1.0,
            FrftOrder::fourier(),
        )
        .unwrap();
        let out = quantize(&set, &q);
        assert_eq!(out.clipped, 2);
        let top = 7.0 * q.step();
        assert_eq!(out.samples.values()[0].re, top);
        assert_eq!(out.samples.values()[1].im, -8.0 * q.step());
    }

    #[test]
    fn fitted_quantizer_uses_headroom() {
        let set =
            SampleSet::new(vec![Complex64::new(0.5, -0.8)], 1.0, FrftOrder::fourier()).unwrap();
        let q = QuantizerModel::fitted(8, &set, 1.25).unwrap();
        assert!((q.full_scale - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn quantizer_error_bounded(x in -1.0f64..1.0, bits in 1u32..12) {
            let q = QuantizerModel::new(bits, 1.0).unwrap();
            let (y, _) = q.quantize_channel(x);
            prop_assert!((y - x).abs() <= q.step() / 2.0 * (1.0 + 1e-12));
        }
    }
}
