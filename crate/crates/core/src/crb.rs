//! Fisher information and Cramér–Rao bounds.
//!
//! Parameters are ordered `Θ = [t_0 .. t_{K-1} | c_0 .. c_{K-1}]` and the
//! noise is `CN(0, σ²)`, giving `J = G^H G / σ²` with `G[n, i] = ∂z[n]/∂Θ_i`.
//! Amplitudes are treated as real parameters.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frft::{sinc, sinc_derivative, FrftOrder, Kernel, SparseSignal};

fn model_phase(theta: FrftOrder, n: usize, period: f64, t_k: f64) -> Complex64 {
    let tn = n as f64 * period;
    Complex64::from_polar(1.0, -0.5 * theta.cot() * (tn * tn - t_k * t_k))
}

/// `∂z[n]/∂c_k = ψ(n - t_k/T)·exp(-j(cot θ/2)((nT)² - t_k²))`.
pub fn dz_dc(
    k: usize,
    n: usize,
    signal: &SparseSignal,
    kernel: &Kernel,
    theta: FrftOrder,
) -> Complex64 {
    let t_k = signal.spikes()[k].location;
    let period = kernel.period();
    model_phase(theta, n, period, t_k) * kernel.psi(n as f64 - t_k / period)
}

/// `∂z[n]/∂t_k = c_k·(-ψ'(u)/T + j·t_k·cot θ·ψ(u))·exp(...)`, `u = n - t_k/T`.
///
/// This is the product form; it stays finite where `ψ(u) = 0`.
pub fn dz_dt(
    k: usize,
    n: usize,
    signal: &SparseSignal,
    kernel: &Kernel,
    theta: FrftOrder,
) -> Complex64 {
    let spike = signal.spikes()[k];
    let t_k = spike.location;
    let period = kernel.period();
    let u = n as f64 - t_k / period;
    let inner = Complex64::new(
        -kernel.psi_derivative(u) / period,
        t_k * theta.cot() * kernel.psi(u),
    );
    spike.amplitude * inner * model_phase(theta, n, period, t_k)
}

/// Hermitian `2K × 2K` Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FimMatrix {
    entries: DMatrix<Complex64>,
    sigma2: f64,
}

impl FimMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn hermitian_defect(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).norm()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn determinant(&self) -> Complex64 {
        self.entries.determinant()
    }

    /// `J^{-1}` packaged as a bound report.
    pub fn crb(&self) -> Result<CrbReport> {
        let inv = self.entries.clone().try_inverse().ok_or_else(|| {
            Error::DegenerateConfiguration("Fisher information matrix is singular".into())
        })?;
        Ok(CrbReport::from_covariance(inv, None))
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be > 0, got {sigma2}"
        )));
    }
    Ok(())
}

/// Jacobian `G` (`N × 2K`) of the noiseless samples.
pub fn jacobian(
    signal: &SparseSignal,
    kernel: &Kernel,
    theta: FrftOrder,
    samples: usize,
) -> DMatrix<Complex64> {
    let k = signal.len();
    DMatrix::from_fn(samples, 2 * k, |n, col| {
        if col < k {
            dz_dt(col, n, signal, kernel, theta)
        } else {
            dz_dc(col - k, n, signal, kernel, theta)
        }
    })
}

/// `J = G^H G / σ²` over `n = 0..samples`.
pub fn fim_numeric(
    signal: &SparseSignal,
    kernel: &Kernel,
    theta: FrftOrder,
    samples: usize,
    sigma2: f64,
) -> Result<FimMatrix> {
    check_sigma2(sigma2)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let g = jacobian(signal, kernel, theta, samples);
    let entries = (g.adjoint() * &g).unscale(sigma2);
    Ok(FimMatrix { entries, sigma2 })
}

/// Basis functions entering the lattice sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiKind {
    Sinc,
    SincDerivative,
}

impl PsiKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            PsiKind::Sinc => sinc(x),
            PsiKind::SincDerivative => sinc_derivative(x),
        }
    }
}

/// Symmetric truncation of `Φ_{ψ1,ψ2}(x) = Σ_n ψ1(n - x) ψ2(n - x)` over
/// `n ∈ [⌈x⌉ - N, ⌊x⌋ + N]`.
pub fn phi_sum(psi1: PsiKind, psi2: PsiKind, x: f64, half_width: usize) -> f64 {
    let lo = x.ceil() as i64 - half_width as i64;
    let hi = x.floor() as i64 + half_width as i64;
    // Sum the small tail terms first.
    let mut terms: Vec<f64> = (lo..=hi)
        .map(|n| {
            let u = n as f64 - x;
            psi1.eval(u) * psi2.eval(u)
        })
        .collect();
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    terms.iter().sum()
}

/// `Φ^N_{ψ1,ψ2}(x) = Σ_{n=0}^{N-1} ψ1(n - x) ψ2(n - x)` for an arbitrary kernel
/// shape, with `ψ1, ψ2 ∈ {ψ_M, ψ_M'}` chosen by the flags.
pub fn phi_sum_window(
    kernel: &Kernel,
    first_derivative: (bool, bool),
    x: f64,
    samples: usize,
) -> f64 {
    let eval = |d: bool, u: f64| {
        if d {
            kernel.psi_derivative(u)
        } else {
            kernel.psi(u)
        }
    };
    (0..samples)
        .map(|n| {
            let u = n as f64 - x;
            eval(first_derivative.0, u) * eval(first_derivative.1, u)
        })
        .sum()
}

/// Closed forms of `S(m) = Σ_{n∈ℤ} (x̄ - n)^{-m}` for `m = 2, 3, 4`.
pub fn s_sum_closed(m: u32, xbar: f64) -> Result<f64> {
    if (xbar - xbar.round()).abs() < 1e-9 {
        return Err(Error::Pole(format!(
            "S({m}) has a pole at integer x = {xbar}"
        )));
    }
    let (s, c) = (PI * xbar).sin_cos();
    let csc2 = 1.0 / (s * s);
    match m {
        2 => Ok(PI * PI * csc2),
        3 => Ok(PI.powi(3) * (c / s) * csc2),
        4 => Ok(PI.powi(4) / 3.0 * ((2.0 * PI * xbar).cos() + 2.0) * csc2 * csc2),
        _ => Err(Error::InvalidArgument(format!(
            "S(m) closed form only for m in 2..=4, got {m}"
        ))),
    }
}

fn k1_matrix(j1: f64, j2: Complex64, j3: Complex64, j4: f64, sigma2: f64) -> FimMatrix {
    let entries = DMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(j1, 0.0), j2, j3, Complex64::new(j4, 0.0)],
    );
    FimMatrix {
        entries: entries.unscale(sigma2),
        sigma2,
    }
}

/// Single-spike FIM for `ψ = sinc` as `N → ∞`:
/// `J = [[c²(cot²θ·t² + π²/(3T²)), -j c cotθ t], [j c cotθ t, 1]] / σ²`.
pub fn fim_analytic_k1(
    c0: f64,
    t0: f64,
    period: f64,
    theta: FrftOrder,
    sigma2: f64,
) -> Result<FimMatrix> {
    check_sigma2(sigma2)?;
    let cot = theta.cot();
    let j1 = c0 * c0 * (cot * cot * t0 * t0 + PI * PI / (3.0 * period * period));
    let off = c0 * cot * t0;
    Ok(k1_matrix(
        j1,
        Complex64::new(0.0, -off),
        Complex64::new(0.0, off),
        1.0,
        sigma2,
    ))
}

/// Single-spike FIM from the finite window sums `Φ^N` (any kernel shape).
pub fn fim_k1_from_sums(
    c0: f64,
    t0: f64,
    kernel: &Kernel,
    theta: FrftOrder,
    samples: usize,
    sigma2: f64,
) -> Result<FimMatrix> {
    check_sigma2(sigma2)?;
    let period = kernel.period();
    let x = t0 / period;
    let cot = theta.cot();
    let pp = phi_sum_window(kernel, (false, false), x, samples);
    let dd = phi_sum_window(kernel, (true, true), x, samples);
    let pd = phi_sum_window(kernel, (false, true), x, samples);
    let j1 = c0 * c0 / (period * period) * (period * period * cot * cot * t0 * t0 * pp + dd);
    let tc = period * cot * t0 * pp;
    let j2 = -(c0 / period) * Complex64::new(pd, tc);
    let j3 = (c0 / period) * Complex64::new(-pd, tc);
    Ok(k1_matrix(j1, j2, j3, pp, sigma2))
}

/// Covariance lower bound `J^{-1}` with its diagonal split into location and
/// amplitude variances.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbReport {
    pub covariance: DMatrix<Complex64>,
    pub var_t: Vec<f64>,
    pub var_c: Vec<f64>,
    /// `c_0² / σ²`, single-spike reports only.
    pub psnr: Option<f64>,
}

impl CrbReport {
    fn from_covariance(covariance: DMatrix<Complex64>, psnr: Option<f64>) -> Self {
        let k = covariance.nrows() / 2;
        let diag = |i: usize| covariance[(i, i)].re;
        Self {
            var_t: (0..k).map(diag).collect(),
            var_c: (k..2 * k).map(diag).collect(),
            covariance,
            psnr,
        }
    }
}

/// Closed-form single-spike bound via the adjugate:
/// `cov = σ²/det(σ²J)·[[J4, -J2], [-J3, J1]]`, so
/// `var(t_0) ≥ 3T²/(π² PSNR)` and
/// `var(c_0) ≥ 3c_0²T²/(π² PSNR)·((t_0 cot θ)² + π²/(3T²))`.
pub fn crb_analytic_k1(
    c0: f64,
    t0: f64,
    period: f64,
    theta: FrftOrder,
    sigma2: f64,
) -> Result<CrbReport> {
    let fim = fim_analytic_k1(c0, t0, period, theta, sigma2)?;
    if c0 == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "zero amplitude makes the location unidentifiable".into(),
        ));
    }
    let scaled = fim.entries.scale(sigma2);
    let (j1, j2, j3, j4) = (
        scaled[(0, 0)],
        scaled[(0, 1)],
        scaled[(1, 0)],
        scaled[(1, 1)],
    );
    let det = PI * PI * c0 * c0 / (3.0 * period * period);
    let covariance = DMatrix::from_row_slice(2, 2, &[j4, -j2, -j3, j1]).scale(sigma2 / det);
    Ok(CrbReport::from_covariance(
        covariance,
        Some(c0 * c0 / sigma2),
    ))
}

/// Numeric bound `J^{-1}` for any K and kernel at finite `N`.
pub fn crb_numeric(
    signal: &SparseSignal,
    kernel: &Kernel,
    theta: FrftOrder,
    samples: usize,
    sigma2: f64,
) -> Result<CrbReport> {
    let mut report = fim_numeric(signal, kernel, theta, samples, sigma2)?.crb()?;
    if signal.len() == 1 {
        report.psnr = Some(signal.spikes()[0].amplitude.norm_sqr() / sigma2);
    }
    Ok(report)
}

/// `σ² = peak² / 10^(PSNR_dB / 10)`.
pub fn sigma2_from_psnr_db(peak_amplitude: f64, psnr_db: f64) -> f64 {
    peak_amplitude * peak_amplitude / 10f64.powf(psnr_db / 10.0)
}
