#![allow(dead_code)]

use std::f64::consts::PI;

use frsparse::frft::{sinc, FrftOrder, Kernel, SparseSignal, Spike};
use frsparse::Complex64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub struct Instance {
    pub signal: SparseSignal,
    pub kernel: Kernel,
    pub theta: FrftOrder,
    pub samples: usize,
}

impl Instance {
    pub fn normalized_locations(&self) -> Vec<f64> {
        self.signal
            .locations()
            .iter()
            .map(|t| t / self.kernel.period())
            .collect()
    }
}

/// Normalized locations in `(0.1, hi - 0.1)`, pairwise separated by
/// `separation` and at least `margin` from the integer grid.
pub fn draw_locations<R: Rng>(
    rng: &mut R,
    count: usize,
    hi: f64,
    separation: f64,
    margin: f64,
) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..count)
            .map(|_| rng.random_range(0.1..hi - 0.1))
            .collect();
        x.sort_by(f64::total_cmp);
        let sep = x.windows(2).all(|w| w[1] - w[0] >= separation);
        let grid = x.iter().all(|v| (v - v.round()).abs() >= margin);
        if sep && grid {
            return x;
        }
    }
}

pub fn random_amplitude<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(rng.random_range(0.5..1.5), rng.random_range(-PI..PI))
}

pub fn random_weights<R: Rng>(rng: &mut R, taps: usize) -> Vec<f64> {
    (0..taps)
        .map(|_| {
            let mag = rng.random_range(0.5..1.5);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

pub fn random_theta<R: Rng>(rng: &mut R) -> FrftOrder {
    loop {
        if let Ok(t) = FrftOrder::new(rng.random_range(0.2..PI - 0.2)) {
            return t;
        }
    }
}

/// Random instance at `samples` with locations inside `(0, samples - KM)`.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    spikes: usize,
    taps: usize,
    samples: usize,
) -> Instance {
    let period = rng.random_range(0.01..1.0);
    let hi = (samples - spikes * taps) as f64;
    let x = draw_locations(rng, spikes, hi, 0.2, 0.05);
    let signal = SparseSignal::new(
        x.iter()
            .map(|&v| Spike::new(random_amplitude(rng), v * period))
            .collect(),
    )
    .unwrap();
    Instance {
        signal,
        kernel: Kernel::new(random_weights(rng, taps), period).unwrap(),
        theta: random_theta(rng),
        samples,
    }
}

/// Roots of a monic polynomial (ascending coefficients) by Durand–Kerner.
pub fn durand_kerner(monic: &[f64]) -> Vec<Complex64> {
    let deg = monic.len() - 1;
    let eval = |z: Complex64| {
        monic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };
    let radius = 1.0 + monic[..deg].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|i| seed.powu(i as u32) * radius.min(10.0))
        .collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

/// Classical Fourier-domain (θ = π/2, single sinc tap) annihilation via
/// rational interpolation: with `w[n] = π(-1)^(n+1) y[n] = Σ b_k / (n - x_k)`,
/// solve `Q(n) w[n] = R(n)` for monic `Q` (degree K) and `R` (degree K-1),
/// root `Q`, and read amplitudes off the residues `b_k = R(x_k) / Q'(x_k)`,
/// `c_k = b_k / sin(π x_k)`.
///
/// Returns `(normalized locations, amplitudes)` sorted by location.
pub fn classical_fri(values: &[Complex64], spikes: usize) -> (Vec<f64>, Vec<Complex64>) {
    let n = values.len();
    let w: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(i, &y)| y * PI * if i % 2 == 0 { -1.0 } else { 1.0 })
        .collect();
    let a = DMatrix::from_fn(n, 2 * spikes, |row, col| {
        let x = row as f64;
        if col < spikes {
            w[row] * x.powi(col as i32)
        } else {
            Complex64::new(-x.powi((col - spikes) as i32), 0.0)
        }
    });
    let b = DVector::from_fn(n, |row, _| -w[row] * (row as f64).powi(spikes as i32));
    let sol = a.clone().svd(true, true).solve(&b, 1e-300).unwrap();
    let mut q: Vec<f64> = (0..spikes).map(|j| sol[j].re).collect();
    q.push(1.0);
    let r: Vec<Complex64> = (0..spikes).map(|j| sol[spikes + j]).collect();

    let mut x: Vec<f64> = durand_kerner(&q).iter().map(|z| z.re).collect();
    x.sort_by(f64::total_cmp);
    let amps = x
        .iter()
        .map(|&xk| {
            let rv = r
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * xk + c);
            let dq: f64 = q
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c * xk.powi(j as i32 - 1))
                .sum();
            rv / dq / (PI * xk).sin()
        })
        .collect();
    (x, amps)
}

/// Samples of `Σ c_k sinc(n - x_k)` (θ = π/2, M = 1, T = 1 units).
pub fn fourier_samples(x: &[f64], c: &[Complex64], n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            x.iter()
                .zip(c)
                .map(|(&xk, &ck)| ck * sinc(i as f64 - xk))
                .sum()
        })
        .collect()
}
