//! Non-ideal RIS phase control: limited phase range with a reflection
//! magnitude penalty, finite phase resolution and von Mises estimation error.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::fading::wrap_phase;
use crate::rng::SeededStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseImpairment {
    Ideal,
    /// Achievable phases `[min_deg, max_deg]` plus a panel-wide reflection
    /// magnitude in dB. The magnitude applies whether or not a target is in
    /// range.
    RangeLimited {
        min_deg: f64,
        max_deg: f64,
        gamma_mag_db: f64,
    },
    /// `2^bits` levels, uniformly spaced from -π.
    Quantized { bits: u32 },
    /// Additive zero-mean von Mises error with concentration `kappa`.
    VonMisesError { kappa: f64 },
}

impl PhaseImpairment {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseImpairment::Ideal => Ok(()),
            PhaseImpairment::RangeLimited {
                min_deg,
                max_deg,
                gamma_mag_db,
            } => {
                if !(min_deg >= -180.0 && max_deg <= 180.0 && min_deg < max_deg) {
                    return Err(invalid(
                        "phase_range",
                        format!("need -180 <= min < max <= 180, got [{min_deg}, {max_deg}]"),
                    ));
                }
                if !(gamma_mag_db.is_finite() && gamma_mag_db <= 0.0) {
                    return Err(invalid(
                        "gamma_mag_db",
                        format!("must be finite and <= 0, got {gamma_mag_db}"),
                    ));
                }
                Ok(())
            }
            PhaseImpairment::Quantized { bits } => {
                if !(1..=16).contains(&bits) {
                    return Err(invalid("bits", format!("must be in 1..=16, got {bits}")));
                }
                Ok(())
            }
            PhaseImpairment::VonMisesError { kappa } => VonMises::new(kappa).map(|_| ()),
        }
    }
}

/// Ordered list of impairments, applied first to last.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhasePolicy {
    steps: Vec<PhaseImpairment>,
}

impl PhasePolicy {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn new(steps: Vec<PhaseImpairment>) -> Result<Self> {
        for s in &steps {
            s.validate()?;
        }
        Ok(Self {
            steps: steps
                .into_iter()
                .filter(|s| *s != PhaseImpairment::Ideal)
                .collect(),
        })
    }

    pub fn then(mut self, step: PhaseImpairment) -> Result<Self> {
        step.validate()?;
        if step != PhaseImpairment::Ideal {
            self.steps.push(step);
        }
        Ok(self)
    }

    pub fn steps(&self) -> &[PhaseImpairment] {
        &self.steps
    }

    pub fn is_ideal(&self) -> bool {
        self.steps.is_empty()
    }

    /// Product of the linear reflection magnitudes of every range-limited step.
    pub fn gamma_mag(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                PhaseImpairment::RangeLimited { gamma_mag_db, .. } => {
                    10f64.powf(gamma_mag_db / 20.0)
                }
                _ => 1.0,
            })
            .product()
    }

    /// True when applying the policy consumes random numbers.
    pub fn is_random(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, PhaseImpairment::VonMisesError { .. }))
    }

    /// Rewrites `phases` in place and returns the linear reflection magnitude.
    pub fn apply_in_place<R: Rng + ?Sized>(&self, phases: &mut [f64], rng: &mut R) -> f64 {
        for step in &self.steps {
            match *step {
                PhaseImpairment::Ideal => {}
                PhaseImpairment::RangeLimited { min_deg, max_deg, .. } => {
                    let (lo, hi) = (min_deg.to_radians(), max_deg.to_radians());
                    for p in phases.iter_mut() {
                        *p = clamp_to_arc(*p, lo, hi);
                    }
                }
                PhaseImpairment::Quantized { bits } => {
                    for p in phases.iter_mut() {
                        *p = quantize_phase(*p, bits);
                    }
                }
                PhaseImpairment::VonMisesError { kappa } => {
                    let vm = VonMises { kappa };
                    for p in phases.iter_mut() {
                        *p = wrap_phase(*p + vm.sample(rng));
                    }
                }
            }
        }
        self.gamma_mag()
    }
}

/// Applies `policy` to `targets`, returning the realized phases and the
/// linear reflection magnitude.
pub fn apply_policy(
    policy: &PhasePolicy,
    targets: &[f64],
    stream: SeededStream,
) -> Result<(Vec<f64>, f64)> {
    if let Some(bad) = targets.iter().find(|p| !p.is_finite()) {
        return Err(invalid("target_phases", format!("non-finite phase {bad}")));
    }
    let mut phases: Vec<f64> = targets.iter().map(|&p| wrap_phase(p)).collect();
    let mut rng = stream.rng();
    let mag = policy.apply_in_place(&mut phases, &mut rng);
    Ok((phases, mag))
}

/// Circular distance between two angles, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Maps `phase` onto the arc `[lo, hi]`; outside the arc it goes to whichever
/// endpoint is nearer on the circle (ties to `hi`).
pub fn clamp_to_arc(phase: f64, lo: f64, hi: f64) -> f64 {
    let p = wrap_phase(phase);
    if p >= lo && p <= hi {
        return p;
    }
    if circular_distance(p, lo) < circular_distance(p, hi) {
        lo
    } else {
        hi
    }
}

pub fn quantize_phase(phase: f64, bits: u32) -> f64 {
    let levels = 1u64 << bits;
    let step = TAU / levels as f64;
    let k = ((wrap_phase(phase) + PI) / step).round() as u64 % levels;
    -PI + k as f64 * step
}

/// Zero-mean von Mises distribution on `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMises {
    kappa: f64,
}

impl VonMises {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(invalid("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Distribution<f64> for VonMises {
    // Best & Fisher (1979) rejection sampler.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let kappa = self.kappa;
        if kappa < 1e-8 {
            return PI * (2.0 * rng.random::<f64>() - 1.0);
        }
        if kappa > 1e6 {
            let sd = 1.0 / kappa.sqrt();
            let z: f64 = rng.sample(StandardNormal);
            return wrap_phase(sd * z);
        }
        let s = if kappa < 1e-5 {
            1.0 / kappa + kappa
        } else {
            let r = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
            let rho = (r - (2.0 * r).sqrt()) / (2.0 * kappa);
            (1.0 + rho * rho) / (2.0 * rho)
        };
        loop {
            let u: f64 = rng.random();
            let z = (PI * u).cos();
            let w = (1.0 + s * z) / (s + z);
            let y = kappa * (s - w);
            let v: f64 = rng.random();
            if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
                let angle = w.clamp(-1.0, 1.0).acos();
                let sign: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
                return wrap_phase(sign * angle);
            }
        }
    }
}

pub fn sample_von_mises(kappa: f64, stream: SeededStream, count: usize) -> Result<Vec<f64>> {
    let vm = VonMises::new(kappa)?;
    if count == 0 {
        return Err(invalid("count", "must be >= 1"));
    }
    let mut rng = stream.rng();
    Ok((0..count).map(|_| vm.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_ratio_i1_i0;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn ideal_is_identity() {
        let targets = [0.1, -3.0, 2.9, -PI];
        let (out, mag) = apply_policy(&PhasePolicy::ideal(), &targets, SeededStream::new(1, 0)).unwrap();
        assert_eq!(out, targets.to_vec());
        assert_eq!(mag, 1.0);
    }

    #[test]
    fn clamp_picks_nearer_endpoint() {
        let (lo, hi) = (deg(-150.0), deg(140.0));
        assert!((clamp_to_arc(deg(170.0), lo, hi) - hi).abs() < 1e-12);
        assert!((clamp_to_arc(deg(-160.0), lo, hi) - lo).abs() < 1e-12);
        assert!((clamp_to_arc(deg(146.0), lo, hi) - hi).abs() < 1e-12);
        assert!((clamp_to_arc(deg(-176.0), lo, hi) - lo).abs() < 1e-12);
        assert!((clamp_to_arc(deg(30.0), lo, hi) - deg(30.0)).abs() < 1e-12);
    }

    #[test]
    fn range_limited_policy_applies_magnitude_everywhere() {
        let policy = PhasePolicy::new(vec![PhaseImpairment::RangeLimited {
            min_deg: -150.0,
            max_deg: 140.0,
            gamma_mag_db: -1.0,
        }])
        .unwrap();
        let (out, mag) = apply_policy(&policy, &[deg(170.0), 0.5], SeededStream::new(1, 0)).unwrap();
        assert!((out[0] - deg(140.0)).abs() < 1e-12);
        assert_eq!(out[1], 0.5);
        assert!((mag - 10f64.powf(-0.05)).abs() < 1e-15);
    }

    #[test]
    fn invalid_policies_rejected() {
        let bad = [
            PhaseImpairment::RangeLimited { min_deg: 10.0, max_deg: -10.0, gamma_mag_db: 0.0 },
            PhaseImpairment::RangeLimited { min_deg: -190.0, max_deg: 10.0, gamma_mag_db: 0.0 },
            PhaseImpairment::Quantized { bits: 0 },
            PhaseImpairment::VonMisesError { kappa: -1.0 },
            PhaseImpairment::VonMisesError { kappa: f64::NAN },
        ];
        for b in bad {
            assert!(PhasePolicy::new(vec![b]).is_err(), "{b:?}");
        }
    }

    #[test]
    fn quantization_hits_levels() {
        assert_eq!(quantize_phase(0.1, 1), 0.0);
        assert_eq!(quantize_phase(3.0, 1), -PI);
        assert!((quantize_phase(PI / 2.0 - 0.2, 2) - PI / 2.0).abs() < 1e-12);
        for i in 0..1000 {
            let p = -PI + TAU * i as f64 / 1000.0;
            let q = quantize_phase(p, 3);
            assert!(circular_distance(p, q) <= PI / 8.0 + 1e-12);
        }
    }

    #[test]
    fn concentrated_error_stays_close() {
        let policy = PhasePolicy::new(vec![PhaseImpairment::VonMisesError { kappa: 1e6 }]).unwrap();
        let targets: Vec<f64> = (0..1000).map(|i| -3.0 + 0.006 * i as f64).collect();
        let (out, _) = apply_policy(&policy, &targets, SeededStream::new(3, 0)).unwrap();
        for (t, o) in targets.iter().zip(&out) {
            assert!(circular_distance(*t, *o) < 1e-2);
        }
    }

    #[test]
    fn uniform_limit_passes_ks() {
        let mut xs = sample_von_mises(0.0, SeededStream::new(11, 0), 100_000).unwrap();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = (x + PI) / TAU;
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic.
        assert!(d < 1.628 / n.sqrt(), "D = {d}");
    }

    #[test]
    fn resultant_length_matches_bessel_ratio() {
        let xs = sample_von_mises(5.0, SeededStream::new(12, 0), 1_000_000).unwrap();
        let n = xs.len() as f64;
        let c = xs.iter().map(|x| x.cos()).sum::<f64>() / n;
        let s = xs.iter().map(|x| x.sin()).sum::<f64>() / n;
        let r = c.hypot(s);
        let expected = bessel_ratio_i1_i0(5.0);
        assert!((r / expected - 1.0).abs() < 0.01, "{r} vs {expected}");
        assert!(s.abs() < 5e-3);
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_von_mises(2.0, SeededStream::new(5, 9), 1000).unwrap();
        let b = sample_von_mises(2.0, SeededStream::new(5, 9), 1000).unwrap();
        assert_eq!(a, b);
        assert!(sample_von_mises(-0.1, SeededStream::new(5, 9), 10).is_err());
    }
}
