//! Sparse sampling in the fractional Fourier (FrFT) domain.
//!
//! A K-sparse spike stream is observed through an FrFT-bandlimited kernel
//! (a chirp-modulated combination of shifted sincs) and sampled uniformly.
//! This crate provides:
//!
//! - [`frft`]: chirp modulation, fractional convolution, kernel evaluation
//!   and bandlimited interpolation.
//! - [`synthesis`]: closed-form measurements, uniform sampling, complex
//!   Gaussian noise and an ADC quantizer.
//! - [`recovery`]: time-domain annihilation recovery of spike locations and
//!   amplitudes from `N >= 2KM` samples.
//! - [`crb`]: Fisher information and Cramér–Rao bounds, numeric for any K and
//!   closed form for a single sinc-filtered spike.
//! - [`harness`]: experiment configuration, Monte Carlo runner, capture
//!   ingestion and report export used by the `frsparse` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod crb;
pub mod error;
pub mod frft;
pub mod harness;
pub mod recovery;
pub mod synthesis;

pub use error::{Error, Result};
pub use frft::{FrftOrder, Kernel, SampleSet, SparseSignal, Spike};

pub use num_complex::Complex64;
