//! TOML experiment configuration.
//!
//! ```toml
//! theta = 0.7853981633974483   # radians
//! samples = 16                 # N
//!
//! [signal]
//! amplitudes = [0.748, 0.891]
//! locations = [0.50, 0.83]     # seconds
//!
//! [kernel]
//! weights = [1.0]
//! period = 0.062               # seconds
//!
//! [noise]
//! psnr_db = [20.0, 30.0, 40.0]
//!
//! [run]
//! trials = 200
//! seed = 2024
//!
//! [quantizer]                  # optional
//! bits = 8
//! headroom = 1.25              # full_scale = headroom × peak channel amplitude
//! ```
//!
//! `[signal.random]` may replace the fixed amplitudes/locations to draw a new
//! spike set per trial.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frft::{FrftOrder, Kernel, SampleSet, SparseSignal, Spike};
use crate::recovery::AnnihilationConfig;
use crate::synthesis::QuantizerModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta: f64,
    pub samples: usize,
    pub signal: SignalSpec,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub quantizer: Option<QuantizerSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    /// Imaginary parts of the amplitudes; zeros when absent.
    #[serde(default)]
    pub amplitudes_imag: Vec<f64>,
    #[serde(default)]
    pub locations: Vec<f64>,
    #[serde(default)]
    pub random: Option<RandomSignalSpec>,
}

/// Per-trial random spike draws. Locations are uniform in `location_range`
/// (seconds), redrawn until pairwise separation and distance from the
/// sampling grid (both in units of `T`) are respected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSignalSpec {
    pub spikes: usize,
    pub amplitude_range: [f64; 2],
    pub location_range: [f64; 2],
    #[serde(default = "default_separation")]
    pub min_separation: f64,
    #[serde(default = "default_grid_margin")]
    pub grid_margin: f64,
}

fn default_separation() -> f64 {
    0.2
}

fn default_grid_margin() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub weights: Vec<f64>,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default = "default_psnr")]
    pub psnr_db: Vec<f64>,
}

fn default_psnr() -> Vec<f64> {
    vec![f64::INFINITY]
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            psnr_db: default_psnr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub workers: usize,
}

fn default_trials() -> usize {
    100
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSpec {
    #[serde(default = "default_bits")]
    pub bits: u32,
    /// Fixed full scale; when absent it is `headroom` × peak channel amplitude
    /// of the noiseless samples.
    #[serde(default)]
    pub full_scale: Option<f64>,
    #[serde(default = "default_headroom")]
    pub headroom: f64,
}

fn default_bits() -> u32 {
    8
}

fn default_headroom() -> f64 {
    1.25
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn order(&self) -> Result<FrftOrder> {
        FrftOrder::new(self.theta)
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        Kernel::new(self.kernel.weights.clone(), self.kernel.period)
    }

    pub fn spike_count(&self) -> usize {
        match &self.signal.random {
            Some(r) => r.spikes,
            None => self.signal.locations.len(),
        }
    }

    pub fn annihilation(&self) -> AnnihilationConfig {
        AnnihilationConfig::new(self.spike_count(), self.kernel.weights.len())
    }

    pub fn is_random(&self) -> bool {
        self.signal.random.is_some()
    }

    /// The configured spike set; `None` in random mode.
    pub fn fixed_signal(&self) -> Result<Option<SparseSignal>> {
        if self.is_random() {
            return Ok(None);
        }
        let imag = &self.signal.amplitudes_imag;
        let amps: Vec<Complex64> = self
            .signal
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &re)| Complex64::new(re, imag.get(i).copied().unwrap_or(0.0)))
            .collect();
        SparseSignal::from_parts(&amps, &self.signal.locations).map(Some)
    }

    /// Draws a spike set for random mode.
    pub fn draw_signal<R: Rng>(&self, rng: &mut R) -> Result<SparseSignal> {
        let spec = self
            .signal
            .random
            .as_ref()
            .ok_or_else(|| Error::Config("no [signal.random] section".into()))?;
        let period = self.kernel.period;
        let [lo, hi] = spec.location_range;
        let [amin, amax] = spec.amplitude_range;
        for _ in 0..10_000 {
            let mut locs: Vec<f64> = (0..spec.spikes).map(|_| rng.random_range(lo..hi)).collect();
            locs.sort_by(f64::total_cmp);
            let separated = locs
                .windows(2)
                .all(|w| (w[1] - w[0]) / period >= spec.min_separation);
            let off_grid = locs.iter().all(|t| {
                let x = t / period;
                (x - x.round()).abs() >= spec.grid_margin
            });
            if separated && off_grid {
                let spikes = locs
                    .into_iter()
                    .map(|t| Spike::new(rng.random_range(amin..=amax), t))
                    .collect();
                return SparseSignal::new(spikes);
            }
        }
        Err(Error::Config(
            "could not draw a spike set satisfying the separation constraints".into(),
        ))
    }

    pub fn quantizer_for(&self, clean: &SampleSet) -> Result<Option<QuantizerModel>> {
        match &self.quantizer {
            None => Ok(None),
            Some(q) => match q.full_scale {
                Some(fs) => QuantizerModel::new(q.bits, fs).map(Some),
                None => QuantizerModel::fitted(q.bits, clean, q.headroom).map(Some),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.order()
            .map_err(|e| Error::Config(format!("theta: {e}")))?;
        self.build_kernel()
            .map_err(|e| Error::Config(format!("kernel: {e}")))?;
        let s = &self.signal;
        match &s.random {
            Some(r) => {
                if !s.amplitudes.is_empty() || !s.locations.is_empty() {
                    return Err(Error::Config(
                        "give either fixed amplitudes/locations or [signal.random], not both"
                            .into(),
                    ));
                }
                if r.spikes == 0 {
                    return Err(Error::Config(
                        "signal.random.spikes must be at least 1".into(),
                    ));
                }
                if !(r.location_range[0] < r.location_range[1]) {
                    return Err(Error::Config(
                        "signal.random.location_range must be increasing".into(),
                    ));
                }
                if !(r.amplitude_range[0] <= r.amplitude_range[1] && r.amplitude_range[0] > 0.0) {
                    return Err(Error::Config(
                        "signal.random.amplitude_range must be positive and non-decreasing".into(),
                    ));
                }
            }
            None => {
                if s.locations.is_empty() {
                    return Err(Error::Config("signal needs at least one location".into()));
                }
                if s.amplitudes.len() != s.locations.len() {
                    return Err(Error::Config(format!(
                        "signal has {} amplitudes but {} locations",
                        s.amplitudes.len(),
                        s.locations.len()
                    )));
                }
                if s.amplitudes_imag.len() > s.amplitudes.len() {
                    return Err(Error::Config("more imaginary parts than amplitudes".into()));
                }
                self.fixed_signal()
                    .map_err(|e| Error::Config(format!("signal: {e}")))?;
            }
        }
        let ann = self.annihilation();
        if self.samples < ann.min_samples() {
            return Err(Error::Config(format!(
                "samples = {} is below the recovery minimum 2KM = 2·{}·{} = {}; raise `samples` or reduce K/M",
                self.samples,
                ann.spikes,
                ann.taps,
                ann.min_samples()
            )));
        }
        if self.noise.psnr_db.is_empty() || self.noise.psnr_db.iter().any(|p| p.is_nan()) {
            return Err(Error::Config(
                "noise.psnr_db must list at least one value".into(),
            ));
        }
        if self.run.trials == 0 {
            return Err(Error::Config("run.trials must be at least 1".into()));
        }
        if let Some(q) = &self.quantizer {
            if !(1..=32).contains(&q.bits) {
                return Err(Error::Config(format!(
                    "quantizer.bits must be in 1..=32, got {}",
                    q.bits
                )));
            }
            if !(q.headroom > 0.0) || q.full_scale.is_some_and(|fs| !(fs > 0.0)) {
                return Err(Error::Config(
                    "quantizer full scale and headroom must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Noise variance for a PSNR point: `σ² = max_k |c_k|² / 10^(dB/10)`.
/// Infinite PSNR means noiseless.
pub fn sigma2_for(signal: &SparseSignal, psnr_db: f64) -> f64 {
    if psnr_db == f64::INFINITY {
        return 0.0;
    }
    let peak = signal
        .spikes()
        .iter()
        .fold(0.0f64, |m, s| m.max(s.amplitude.norm()));
    crate::crb::sigma2_from_psnr_db(peak, psnr_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HARDWARE: &str = r#"
theta = 0.7853981633974483
samples = 16

[signal]
amplitudes = [0.748, 0.891]
locations = [0.50, 0.83]

[kernel]
weights = [1.0]
period = 0.062

[noise]
psnr_db = [40.0]

[run]
trials = 10
seed = 7

[quantizer]
bits = 8
"#;

    #[test]
    fn parses_hardware_config() {
        let cfg = ExperimentConfig::from_toml_str(HARDWARE).unwrap();
        assert_eq!(cfg.spike_count(), 2);
        assert_eq!(cfg.annihilation().min_samples(), 4);
        let q = cfg.quantizer.as_ref().unwrap();
        assert_eq!((q.bits, q.headroom, q.full_scale), (8, 1.25, None));
        let sig = cfg.fixed_signal().unwrap().unwrap();
        assert_eq!(sig.locations(), vec![0.5, 0.83]);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_undersampling_with_actionable_message() {
        let text = HARDWARE.replace("samples = 16", "samples = 3");
        let err = ExperimentConfig::from_toml_str(&text)
            .unwrap_err()
            .to_string();
        assert!(err.contains("2KM"), "{err}");
        assert!(err.contains("samples"), "{err}");
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(
            ExperimentConfig::from_toml_str(&HARDWARE.replace("0.7853981633974483", "0.0"))
                .is_err()
        );
        assert!(
            ExperimentConfig::from_toml_str(&HARDWARE.replace("[0.50, 0.83]", "[0.5]")).is_err()
        );
        assert!(
            ExperimentConfig::from_toml_str(&HARDWARE.replace("trials = 10", "trials = 0"))
                .is_err()
        );
        assert!(ExperimentConfig::from_toml_str(
            &HARDWARE.replace("seed = 7", "seed = 7\nbogus = 1")
        )
        .is_err());
        assert!(ExperimentConfig::from_toml_str(
            &HARDWARE.replace("period = 0.062", "period = -1.0")
        )
        .is_err());
    }

    #[test]
    fn random_mode_draws_valid_signals() {
        let text = r#"
theta = 1.0
samples = 8
[signal.random]
spikes = 2
amplitude_range = [0.5, 1.5]
location_range = [0.1, 0.4]
[kernel]
weights = [1.0, 0.5]
period = 0.1
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(cfg.is_random());
        assert_eq!(cfg.annihilation().degree(), 4);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        for _ in 0..50 {
            let s = cfg.draw_signal(&mut rng).unwrap();
            let t = s.locations();
            assert!((t[1] - t[0]) / 0.1 >= 0.2);
            assert!(t
                .iter()
                .all(|x| ((x / 0.1) - (x / 0.1).round()).abs() >= 0.05));
        }
    }

    #[test]
    fn psnr_uses_peak_amplitude() {
        let sig = SparseSignal::from_parts(
            &[Complex64::new(0.5, 0.0), Complex64::new(-2.0, 0.0)],
            &[0.0, 1.0],
        )
        .unwrap();
        assert!((sigma2_for(&sig, 10.0) - 0.4).abs() < 1e-15);
        assert_eq!(sigma2_for(&sig, f64::INFINITY), 0.0);
    }
}
