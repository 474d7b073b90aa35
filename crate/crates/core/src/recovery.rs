//! Time-domain annihilation recovery.
//!
//! Pipeline: de-chirp and de-alternate the samples into `y∘[n]`, build the
//! finite-difference annihilation matrix `D`, take its null vector as the
//! coefficients of `Q(z) = Π_k Π_m (z - m - t̄_k)`, root `Q`, collapse the
//! `M` shifted copies of each location, then solve a linear least-squares
//! problem for the amplitudes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frft::{chirp_factor, Kernel, SampleSet, Spike};

/// Gap tolerance when chaining the `M` shifted roots of one spike.
pub const CHAIN_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnihilationConfig {
    /// Number of spikes `K`.
    pub spikes: usize,
    /// Kernel tap count `M`.
    pub taps: usize,
    /// Relative singular-value threshold for the rank-deficiency check.
    pub rank_tol: f64,
    /// Largest accepted `|Im|` of a root of `Q`.
    pub imag_tol: f64,
    /// Minimum distance of `t̄_k` from the integer grid before a location is flagged.
    pub integer_guard: f64,
}

impl AnnihilationConfig {
    pub fn new(spikes: usize, taps: usize) -> Self {
        Self {
            spikes,
            taps,
            rank_tol: 1e-8,
            imag_tol: 1e-3,
            integer_guard: 1e-6,
        }
    }

    /// Degree `KM` of the annihilating polynomial.
    pub fn degree(&self) -> usize {
        self.spikes * self.taps
    }

    /// Minimum sample count `2KM`.
    pub fn min_samples(&self) -> usize {
        2 * self.degree()
    }

    fn validate(&self) -> Result<()> {
        if self.spikes == 0 || self.taps == 0 {
            return Err(Error::InvalidArgument(
                "K and M must both be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    /// Estimated spikes, sorted by location.
    pub spikes: Vec<Spike>,
    /// Monic coefficients of `Q`, ascending powers (`q[KM] = 1`).
    pub q: Vec<f64>,
    pub roots: Vec<Complex64>,
    /// `‖A ĉ - ξ·y‖`.
    pub residual_norm: f64,
    /// Singular values of the column-scaled `D`, descending.
    pub singular_values: Vec<f64>,
    /// `‖Im q‖ / ‖q‖` before projection to real coefficients.
    pub q_imag_residue: f64,
    /// `σ_min / σ_max` of `D` exceeded `rank_tol`.
    pub ill_posed: bool,
    /// `t̄_k` lies within `integer_guard` of an integer.
    pub near_integer: Vec<bool>,
}

impl RecoveryResult {
    pub fn locations(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s.location).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.spikes.iter().map(|s| s.amplitude).collect()
    }
}

/// `y∘[n] = π·y[n]·ξ_θ(nT) / (-1)^(n+1)`.
pub fn build_ycirc(samples: &SampleSet) -> Vec<Complex64> {
    let theta = samples.theta();
    let period = samples.period();
    samples
        .values()
        .iter()
        .enumerate()
        .map(|(n, &y)| {
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            y * chirp_factor(theta, n as f64 * period) * (PI * sign)
        })
        .collect()
}

fn binomial_row(order: usize) -> Vec<f64> {
    let mut row = vec![1.0f64; order + 1];
    for j in 1..order {
        row[j] = row[j - 1] * (order - j + 1) as f64 / j as f64;
    }
    row
}

/// `Δ^L f[n] = Σ_j (-1)^(L-j) C(L, j) f[n+j]`, output length `len - L`.
pub fn finite_diff(seq: &[Complex64], order: usize) -> Result<Vec<Complex64>> {
    if seq.len() < order + 1 {
        return Err(Error::InvalidArgument(format!(
            "order-{order} difference needs at least {} values, got {}",
            order + 1,
            seq.len()
        )));
    }
    let weights: Vec<f64> = binomial_row(order)
        .into_iter()
        .enumerate()
        .map(|(j, b)| if (order - j).is_multiple_of(2) { b } else { -b })
        .collect();
    Ok((0..seq.len() - order)
        .map(|n| {
            weights
                .iter()
                .enumerate()
                .map(|(j, &w)| seq[n + j] * w)
                .sum()
        })
        .collect())
}

/// Column-scaled annihilation matrix.
#[derive(Debug, Clone)]
pub struct AnnihilationMatrix {
    /// `D[:, k] / scale[k]`.
    pub scaled: DMatrix<Complex64>,
    /// Per-column max-abs of the unscaled `D`.
    pub column_scales: Vec<f64>,
}

impl AnnihilationMatrix {
    pub fn rows(&self) -> usize {
        self.scaled.nrows()
    }

    pub fn cols(&self) -> usize {
        self.scaled.ncols()
    }

    /// `D` before column scaling.
    pub fn unscaled(&self) -> DMatrix<Complex64> {
        let mut d = self.scaled.clone();
        for (k, &s) in self.column_scales.iter().enumerate() {
            d.column_mut(k).scale_mut(s);
        }
        d
    }
}

/// `[D]_{n,k} = Δ^{KM}(n^k y∘[n])`, `(N - KM) × (KM + 1)`.
pub fn build_annihilation_matrix(
    ycirc: &[Complex64],
    spikes: usize,
    taps: usize,
) -> Result<AnnihilationMatrix> {
    let degree = spikes * taps;
    if degree == 0 {
        return Err(Error::InvalidArgument(
            "K and M must both be at least 1".into(),
        ));
    }
    if ycirc.len() < degree + 1 {
        return Err(Error::InsufficientSamples {
            got: ycirc.len(),
            required: degree + 1,
        });
    }
    let rows = ycirc.len() - degree;
    let mut scaled = DMatrix::<Complex64>::zeros(rows, degree + 1);
    let mut column_scales = Vec::with_capacity(degree + 1);
    for k in 0..=degree {
        let moment: Vec<Complex64> = ycirc
            .iter()
            .enumerate()
            .map(|(n, &v)| v * (n as f64).powi(k as i32))
            .collect();
        let col = finite_diff(&moment, degree)?;
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let scale = if peak > 0.0 { peak } else { 1.0 };
        for (r, v) in col.into_iter().enumerate() {
            scaled[(r, k)] = v / scale;
        }
        column_scales.push(scale);
    }
    Ok(AnnihilationMatrix {
        scaled,
        column_scales,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullVector {
    /// Monic real coefficients, ascending.
    pub q: Vec<f64>,
    pub imag_residue: f64,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub ill_posed: bool,
}

/// Null vector of `D`: right singular vector of the smallest singular value
/// of the column-scaled matrix, unscaled, made monic and projected to reals.
pub fn nullspace_q(d: &AnnihilationMatrix, rank_tol: f64) -> Result<NullVector> {
    let cols = d.cols();
    let degree = cols - 1;
    if d.rows() < degree {
        return Err(Error::InsufficientSamples {
            got: d.rows() + degree,
            required: 2 * degree,
        });
    }
    // Thin SVD only returns min(rows, cols) right vectors; pad to square so
    // the null direction is always present.
    let work = if d.rows() < cols {
        let mut padded = DMatrix::<Complex64>::zeros(cols, cols);
        padded.rows_mut(0, d.rows()).copy_from(&d.scaled);
        padded
    } else {
        d.scaled.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smallest = *order.last().expect("non-empty spectrum");

    // Rows of V^H are conjugated right singular vectors.
    let raw: Vec<Complex64> = (0..cols)
        .map(|k| v_t[(smallest, k)].conj() / d.column_scales[k])
        .collect();
    let lead = raw[degree];
    let raw_norm = raw.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if lead.norm() <= 1e-14 * raw_norm {
        return Err(Error::DegenerateConfiguration(
            "null vector has a vanishing leading coefficient".into(),
        ));
    }
    let monic: Vec<Complex64> = raw.iter().map(|v| v / lead).collect();
    let norm = monic.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let imag = monic.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();

    let sigma_max = singular_values[0];
    let sigma_min = *singular_values.last().unwrap();
    let ill_posed = sigma_max > 0.0 && sigma_min / sigma_max > rank_tol;

    Ok(NullVector {
        q: monic.iter().map(|v| v.re).collect(),
        imag_residue: imag / norm,
        singular_values,
        ill_posed,
    })
}

/// Roots of the polynomial with ascending coefficients `q` (leading
/// coefficient non-zero) as eigenvalues of the companion matrix, each
/// refined by a few Newton steps.
pub fn polynomial_roots(q: &[f64]) -> Vec<Complex64> {
    let degree = q.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = q[degree];
    if degree == 1 {
        return vec![Complex64::new(-q[0] / lead, 0.0)];
    }
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -q[i] / lead;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .map(|&z| polish_root(q, z))
        .collect()
}

fn polish_root(q: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &c in q.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let next = z - step;
        if !next.re.is_finite() || !next.im.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
            break;
        }
        z = next;
    }
    z
}

/// Normalized locations `t̄_k` (sorted) from the roots of `Q`.
///
/// For `M > 1` the roots form chains `t̄_k, t̄_k + 1, ..., t̄_k + M - 1`;
/// each chain is collected greedily from its smallest member and reduced
/// to `mean(root_i - i)`.
pub fn collapse_roots(
    roots: &[Complex64],
    spikes: usize,
    taps: usize,
    imag_tol: f64,
) -> Result<Vec<f64>> {
    if roots.len() != spikes * taps {
        return Err(Error::DegenerateConfiguration(format!(
            "expected {} roots, got {}",
            spikes * taps,
            roots.len()
        )));
    }
    if let Some(&bad) = roots.iter().find(|r| !(r.im.abs() <= imag_tol)) {
        return Err(Error::NoisyRoots {
            root: bad,
            tol: imag_tol,
        });
    }
    let mut real: Vec<f64> = roots.iter().map(|r| r.re).collect();
    real.sort_by(f64::total_cmp);
    if taps == 1 {
        return Ok(real);
    }

    let mut used = vec![false; real.len()];
    let mut out = Vec::with_capacity(spikes);
    for _ in 0..spikes {
        let start = used
            .iter()
            .position(|u| !u)
            .expect("roots remain while spikes remain");
        used[start] = true;
        let mut prev = real[start];
        let mut acc = prev;
        for i in 1..taps {
            let target = prev + 1.0;
            let next = (0..real.len())
                .filter(|&j| !used[j] && (real[j] - target).abs() <= CHAIN_TOL)
                .min_by(|&a, &b| {
                    (real[a] - target)
                        .abs()
                        .total_cmp(&(real[b] - target).abs())
                })
                .ok_or_else(|| {
                    Error::DegenerateConfiguration(format!(
                        "no root near {target:.6} to continue the chain starting at {:.6}",
                        real[start]
                    ))
                })?;
            used[next] = true;
            prev = real[next];
            acc += prev - i as f64;
        }
        out.push(acc / taps as f64);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Spike locations `t̂_k = T·t̄_k` (seconds, sorted) from monic `q`.
pub fn roots_to_locations(
    q: &[f64],
    spikes: usize,
    taps: usize,
    period: f64,
    imag_tol: f64,
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let roots = polynomial_roots(q);
    let normalized = collapse_roots(&roots, spikes, taps, imag_tol)?;
    Ok((normalized.into_iter().map(|x| x * period).collect(), roots))
}

fn amplitude_system(
    samples: &SampleSet,
    locations: &[f64],
    kernel: &Kernel,
) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let theta = samples.theta();
    let period = samples.period();
    let n = samples.len();
    let a = DMatrix::from_fn(n, locations.len(), |row, k| {
        let t = locations[k];
        chirp_factor(theta, t) * kernel.psi(row as f64 - t / period)
    });
    let b = DVector::from_iterator(
        n,
        samples
            .values()
            .iter()
            .enumerate()
            .map(|(row, &y)| y * chirp_factor(theta, row as f64 * period)),
    );
    (a, b)
}

/// Least-squares amplitudes for known locations:
/// `A_{n,k} = ξ_θ(t̂_k) ψ_M(n - t̂_k/T)`, right-hand side `ξ_θ(nT) y[n]`.
pub fn estimate_amplitudes(
    samples: &SampleSet,
    locations: &[f64],
    kernel: &Kernel,
) -> Result<Vec<Complex64>> {
    if locations.is_empty() {
        return Err(Error::InvalidArgument("no locations given".into()));
    }
    if locations.len() > samples.len() {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            required: locations.len(),
        });
    }
    let (a, b) = amplitude_system(samples, locations, kernel);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::DegenerateConfiguration(format!(
            "amplitude system is rank deficient (condition {:.3e})",
            smax / smin
        )));
    }
    let c = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;
    Ok(c.iter().copied().collect())
}

/// Full recovery from `N >= 2KM` samples.
pub fn recover(
    samples: &SampleSet,
    kernel: &Kernel,
    config: &AnnihilationConfig,
) -> Result<RecoveryResult> {
    config.validate()?;
    if kernel.taps() != config.taps {
        return Err(Error::InvalidArgument(format!(
            "kernel has {} taps but config says M = {}",
            kernel.taps(),
            config.taps
        )));
    }
    if (kernel.period() - samples.period()).abs() > 1e-12 * kernel.period() {
        return Err(Error::InvalidArgument(format!(
            "kernel period {} differs from sample period {}",
            kernel.period(),
            samples.period()
        )));
    }
    if samples.len() < config.min_samples() {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            required: config.min_samples(),
        });
    }

    let ycirc = build_ycirc(samples);
    let d = build_annihilation_matrix(&ycirc, config.spikes, config.taps)?;
    let null = nullspace_q(&d, config.rank_tol)?;
    let (locations, roots) = roots_to_locations(
        &null.q,
        config.spikes,
        config.taps,
        samples.period(),
        config.imag_tol,
    )?;
    if locations.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateConfiguration(
            "duplicate location estimates".into(),
        ));
    }
    let amplitudes = estimate_amplitudes(samples, &locations, kernel)?;

    let (a, b) = amplitude_system(samples, &locations, kernel);
    let residual_norm = (&a * DVector::from_vec(amplitudes.clone()) - b).norm();
    let near_integer = locations
        .iter()
        .map(|t| {
            let x = t / samples.period();
            (x - x.round()).abs() < config.integer_guard
        })
        .collect();

    Ok(RecoveryResult {
        spikes: amplitudes
            .into_iter()
            .zip(&locations)
            .map(|(c, &t)| Spike::new(c, t))
            .collect(),
        q: null.q,
        roots,
        residual_norm,
        singular_values: null.singular_values,
        q_imag_residue: null.imag_residue,
        ill_posed: null.ill_posed,
        near_integer,
    })
}

/// Ascending coefficients of `Π_k Π_m (z - m - t̄_k)`.
pub fn annihilator_from_locations(normalized: &[f64], taps: usize) -> Vec<f64> {
    let mut q = vec![1.0];
    for &x in normalized {
        for m in 0..taps {
            let root = x + m as f64;
            let mut next = vec![0.0; q.len() + 1];
            for (i, &c) in q.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= root * c;
            }
            q = next;
        }
    }
    q
}
