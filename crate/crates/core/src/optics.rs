//! Analog front-end model.
//!
//! A gain-switched laser emits pulses whose optical phase is fresh and random
//! on every pulse; interfering them with an independent CW laser on a balanced
//! detector maps the phase onto a differential voltage. Here a seeded PRNG
//! stands in for the quantum phase: this module is a simulation of the
//! front-end, not an entropy source, and everything downstream treats it as
//! such.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::{Error, Result};

/// Samples per generator stream. Chunking fixes the RNG stream layout so the
/// output is identical regardless of how many threads generate it.
const CHUNK: u64 = 1 << 16;

/// Physical constants of the interference signal plus the pulse clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceParams {
    /// Balanced-detector efficiency, in (0, 1].
    pub eta_d: f64,
    /// Pulsed-laser field amplitude (arbitrary units).
    pub e1: f64,
    /// CW-laser field amplitude (arbitrary units).
    pub e2: f64,
    /// CW reference phase, radians.
    pub phi2: f64,
    /// Pulse period in seconds.
    pub period_t: f64,
    /// Repetition rate in Hz, 1/period_t.
    pub rate_r: f64,
}

impl InterferenceParams {
    pub fn new(eta_d: f64, e1: f64, e2: f64, phi2: f64, rate_r: f64) -> Result<Self> {
        if !(eta_d > 0.0 && eta_d <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_d must be in (0, 1], got {eta_d}"
            )));
        }
        if !(e1 > 0.0) || !(e2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "field amplitudes must be positive, got e1={e1}, e2={e2}"
            )));
        }
        if !(rate_r > 0.0) || !rate_r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rate_r must be positive and finite, got {rate_r}"
            )));
        }
        let p = Self {
            eta_d,
            e1,
            e2,
            phi2,
            period_t: 1.0 / rate_r,
            rate_r,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let prod = self.rate_r * self.period_t;
        if (prod - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "rate_r * period_t = {prod} differs from 1 beyond 1e-12"
            )));
        }
        Ok(())
    }

    /// Peak differential voltage `4 eta_d e1 e2`; the noiseless signal spans
    /// +/- this value and dividing by it normalizes the signal to [-1, 1].
    pub fn peak_voltage(&self) -> f64 {
        4.0 * self.eta_d * self.e1 * self.e2
    }
}

/// Gaussian classical-noise descriptor. `sigma_frac` is the standard
/// deviation expressed as a fraction of the full signal range
/// `range_hi - range_lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_frac: f64,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl NoiseModel {
    pub fn new(sigma_frac: f64, range_lo: f64, range_hi: f64) -> Result<Self> {
        if !(sigma_frac >= 0.0) || !sigma_frac.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma_frac must be >= 0, got {sigma_frac}"
            )));
        }
        if !(range_lo < range_hi) {
            return Err(Error::InvalidParameter(format!(
                "range_lo {range_lo} must be below range_hi {range_hi}"
            )));
        }
        Ok(Self {
            sigma_frac,
            range_lo,
            range_hi,
        })
    }

    /// Noiseless channel over the default normalized range [-1, 1].
    pub fn noiseless() -> Self {
        Self {
            sigma_frac: 0.0,
            range_lo: -1.0,
            range_hi: 1.0,
        }
    }

    /// Noise standard deviation in signal units.
    pub fn sigma_abs(&self) -> f64 {
        self.sigma_frac * (self.range_hi - self.range_lo)
    }
}

/// One normalized pulse-center voltage sample, taken at time `t = index * T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSample {
    pub index: u64,
    pub value: f64,
}

/// Draws a phase uniform on [0, 2*pi), advancing the generator.
#[inline]
pub fn sample_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// Differential voltage of the balanced detector for pulse phase `phi1`:
/// `4 eta_d e1 e2 sin(phi1 - phi2)`.
#[inline]
pub fn interference_voltage(params: &InterferenceParams, phi1: f64) -> f64 {
    params.peak_voltage() * (phi1 - params.phi2).sin()
}

/// Arcsine density `1 / (pi sqrt(1 - x^2))` of the normalized interference
/// signal under a uniform phase.
pub fn arcsine_pdf(x: f64) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(Error::Domain {
            value: x,
            lo: -1.0,
            hi: 1.0,
        });
    }
    Ok(1.0 / (PI * (1.0 - x * x).sqrt()))
}

/// Arcsine CDF `1/2 + asin(x)/pi`, clamped outside [-1, 1].
pub fn arcsine_cdf(x: f64) -> f64 {
    0.5 + x.clamp(-1.0, 1.0).asin() / PI
}

/// Adds one Gaussian classical-noise draw to the sample value. A zero-sigma
/// model returns the sample unchanged without consuming generator state.
pub fn add_classical_noise<R: Rng + ?Sized>(
    sample: PulseSample,
    noise: &NoiseModel,
    rng: &mut R,
) -> PulseSample {
    if noise.sigma_frac == 0.0 {
        return sample;
    }
    let normal = Normal::new(0.0, noise.sigma_abs()).expect("validated sigma");
    PulseSample {
        index: sample.index,
        value: sample.value + normal.sample(rng),
    }
}

/// Generates `count` normalized pulse-center samples: fresh uniform phase per
/// pulse through the interference equation, divided by the peak voltage, then
/// noise-perturbed. Deterministic in `seed` and independent of thread count.
pub fn generate_pulse_train(
    count: u64,
    params: &InterferenceParams,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<PulseSample>> {
    params.validate()?;
    let mut out = vec![
        PulseSample {
            index: 0,
            value: 0.0
        };
        count as usize
    ];
    generate_pulse_train_into(0, &mut out, params, noise, seed);
    Ok(out)
}

/// Fills `out` with samples whose indices start at `first_index`. The RNG
/// stream for a sample depends only on (`seed`, its absolute index), so a
/// long train may be produced across several calls with chunk-aligned
/// boundaries and still be bit-identical to a single call.
pub fn generate_pulse_train_into(
    first_index: u64,
    out: &mut [PulseSample],
    params: &InterferenceParams,
    noise: &NoiseModel,
    seed: u64,
) {
    debug_assert!(first_index % CHUNK == 0, "chunk-aligned starts only");
    let normal = if noise.sigma_frac > 0.0 {
        Some(Normal::new(0.0, noise.sigma_abs()).expect("validated sigma"))
    } else {
        None
    };
    out.par_chunks_mut(CHUNK as usize)
        .enumerate()
        .for_each(|(chunk, slice)| {
            let base = first_index + chunk as u64 * CHUNK;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(first_index / CHUNK + chunk as u64);
            for (i, s) in slice.iter_mut().enumerate() {
                let phi1 = sample_phase(&mut rng);
                let mut value = (phi1 - params.phi2).sin();
                if let Some(n) = &normal {
                    value += n.sample(&mut rng);
                }
                *s = PulseSample {
                    index: base + i as u64,
                    value,
                };
            }
        });
}

/// Chunk size used by [`generate_pulse_train_into`] for stream alignment.
pub const GENERATOR_CHUNK: u64 = CHUNK;
