//! Small-scale fading: Rician coefficient samplers and amplitude moments.
//!
//! A coefficient is `h = sqrt(K/(1+K)) h_los + sqrt(1/(1+K)) h_nlos` with
//! `h_nlos ~ CN(0, 1)` and unit second moment overall. The LOS term is fixed
//! to `h_los = 1` for every element; any other fixed phase would be absorbed
//! by the RIS phase shift.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::rng::SeededStream;
use crate::special::laguerre_half;

/// Wraps an angle into `[-π, π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    if (-PI..PI).contains(&phase) {
        return phase;
    }
    let w = (phase + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// A channel coefficient `h = amplitude · e^{-j·phase}`.
///
/// `phase` is the channel's phase delay (the `θ` in `α e^{-jθ}`), so the RIS
/// phase that cancels a cascade `h_sr · h_rd` is simply `θ_sr + θ_rd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexCoefficient {
    pub amplitude: f64,
    pub phase: f64,
}

impl ComplexCoefficient {
    pub fn new(amplitude: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(invalid("amplitude", format!("must be finite and >= 0, got {amplitude}")));
        }
        if !phase.is_finite() {
            return Err(invalid("phase", "must be finite"));
        }
        Ok(Self {
            amplitude,
            phase: wrap_phase(phase),
        })
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self {
            amplitude: z.norm(),
            phase: wrap_phase(-z.arg()),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, -self.phase)
    }
}

/// Rician small-scale fading with unit second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianSpec {
    k_factor: f64,
    los: f64,
    sigma: f64,
}

impl RicianSpec {
    pub const SECOND_MOMENT: f64 = 1.0;

    pub fn new(k_factor: f64) -> Result<Self> {
        if !(k_factor >= 0.0 && k_factor.is_finite()) {
            return Err(invalid("k_factor", format!("must be finite and >= 0, got {k_factor}")));
        }
        Ok(Self::build(k_factor))
    }

    fn build(k_factor: f64) -> Self {
        Self {
            k_factor,
            los: (k_factor / (1.0 + k_factor)).sqrt(),
            sigma: (0.5 / (1.0 + k_factor)).sqrt(),
        }
    }

    pub fn from_db(k_db: f64) -> Result<Self> {
        Self::new(10f64.powf(k_db / 10.0))
    }

    pub fn rayleigh() -> Self {
        Self::build(0.0)
    }

    pub fn k_factor(&self) -> f64 {
        self.k_factor
    }

    /// One coefficient as a complex number.
    #[inline]
    pub fn sample_complex<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(self.los + self.sigma * re, self.sigma * im)
    }

    /// Amplitude only; same draws as [`Self::sample_complex`].
    #[inline]
    pub fn sample_amplitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z = self.sample_complex(rng);
        (z.re * z.re + z.im * z.im).sqrt()
    }
}

impl Distribution<ComplexCoefficient> for RicianSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexCoefficient {
        ComplexCoefficient::from_complex(self.sample_complex(rng))
    }
}

/// `count` coefficients from the given stream.
pub fn sample_rician(
    spec: &RicianSpec,
    stream: SeededStream,
    count: usize,
) -> Result<Vec<ComplexCoefficient>> {
    if count == 0 {
        return Err(invalid("count", "must be >= 1"));
    }
    let mut rng = stream.rng();
    Ok((0..count).map(|_| spec.sample(&mut rng)).collect())
}

/// Which argument feeds `L_{1/2}` in the amplitude mean.
///
/// `StandardRician` uses `-K`, the textbook Rician mean
/// `sqrt(π / (4(K+1))) L_{1/2}(-K)`. `PaperLiteral` uses `-K²/(K+1)`, a form
/// that appears in some published moment expressions. Only the standard form
/// matches sampled moments (see the `laguerre_policy` integration test), so
/// it is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum LaguerrePolicy {
    #[default]
    StandardRician,
    PaperLiteral,
}

impl LaguerrePolicy {
    pub fn argument(self, k_factor: f64) -> f64 {
        match self {
            LaguerrePolicy::StandardRician => -k_factor,
            LaguerrePolicy::PaperLiteral => -k_factor * k_factor / (k_factor + 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of a single coefficient amplitude under `policy`.
///
/// The variance is always `1 - mean²` (unit second moment).
pub fn rician_amplitude_moments_with(
    spec: &RicianSpec,
    policy: LaguerrePolicy,
) -> Result<AmplitudeMoments> {
    let k = spec.k_factor();
    let l = laguerre_half(policy.argument(k))?;
    let mean = (PI / (4.0 * (k + 1.0))).sqrt() * l;
    Ok(AmplitudeMoments {
        mean,
        variance: RicianSpec::SECOND_MOMENT - mean * mean,
    })
}

pub fn rician_amplitude_moments(spec: &RicianSpec) -> Result<AmplitudeMoments> {
    rician_amplitude_moments_with(spec, LaguerrePolicy::default())
}
