//! Large-scale attenuation laws and path-loss-exponent regression.
//!
//! Losses are stored as positive attenuation in dB. Anything that combines
//! paths does so in the linear domain.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Distance validity of the empirical urban-micro laws, in meters.
pub const UMI_DISTANCE_RANGE_M: (f64, f64) = (10.0, 2000.0);
pub const UMI_3GPP_BAND_GHZ: (f64, f64) = (2.0, 6.0);
pub const UMI_STREET_CANYON_BAND_GHZ: (f64, f64) = (6.0, 100.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathLaw {
    /// Far-field plate-scattering (radar range) law for one RIS.
    RadarRangeRis,
    Umi3gppLos,
    Umi3gppNlos,
    UmiStreetCanyonLos,
    UmiStreetCanyonNlos,
    LogDistance,
}

impl PathLaw {
    pub fn name(self) -> &'static str {
        match self {
            PathLaw::RadarRangeRis => "radar-range",
            PathLaw::Umi3gppLos => "umi-3gpp-los",
            PathLaw::Umi3gppNlos => "umi-3gpp-nlos",
            PathLaw::UmiStreetCanyonLos => "umi-street-canyon-los",
            PathLaw::UmiStreetCanyonNlos => "umi-street-canyon-nlos",
            PathLaw::LogDistance => "log-distance",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            PathLaw::RadarRangeRis,
            PathLaw::Umi3gppLos,
            PathLaw::Umi3gppNlos,
            PathLaw::UmiStreetCanyonLos,
            PathLaw::UmiStreetCanyonNlos,
            PathLaw::LogDistance,
        ]
        .into_iter()
        .find(|l| l.name() == name)
    }

    /// Valid carrier band in GHz, if the law has one.
    pub fn band_ghz(self) -> Option<(f64, f64)> {
        match self {
            PathLaw::Umi3gppLos | PathLaw::Umi3gppNlos => Some(UMI_3GPP_BAND_GHZ),
            PathLaw::UmiStreetCanyonLos | PathLaw::UmiStreetCanyonNlos => {
                Some(UMI_STREET_CANYON_BAND_GHZ)
            }
            PathLaw::RadarRangeRis | PathLaw::LogDistance => None,
        }
    }

    pub fn is_umi(self) -> bool {
        self.band_ghz().is_some()
    }

    /// `(slope per decade, intercept, carrier coefficient)` of the UMi lines.
    fn umi_coefficients(self) -> Option<(f64, f64, f64)> {
        match self {
            PathLaw::Umi3gppLos => Some((22.0, 28.0, 20.0)),
            PathLaw::Umi3gppNlos => Some((36.7, 22.7, 26.0)),
            PathLaw::UmiStreetCanyonLos => Some((21.0, 32.4, 20.0)),
            PathLaw::UmiStreetCanyonNlos => Some((31.7, 32.4, 20.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisGains {
    pub incident: f64,
    pub reflect: f64,
}

impl Default for RisGains {
    fn default() -> Self {
        Self {
            incident: 1.0,
            reflect: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDistanceReference {
    pub d0_m: f64,
    pub pl0_db: f64,
    pub exponent: f64,
}

impl Default for LogDistanceReference {
    fn default() -> Self {
        Self {
            d0_m: 10.0,
            pl0_db: 0.0,
            exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossSpec {
    pub law: PathLaw,
    pub carrier_ghz: f64,
    /// Only used by [`PathLaw::RadarRangeRis`].
    pub ris_gains: RisGains,
    /// RIS efficiency in `(0, 1]`; only used by [`PathLaw::RadarRangeRis`].
    pub efficiency: f64,
    /// Only used by [`PathLaw::LogDistance`].
    pub reference: LogDistanceReference,
}

impl PathLossSpec {
    pub fn radar_range(carrier_ghz: f64, gain_incident: f64, gain_reflect: f64) -> Result<Self> {
        let spec = Self {
            law: PathLaw::RadarRangeRis,
            carrier_ghz,
            ris_gains: RisGains {
                incident: gain_incident,
                reflect: gain_reflect,
            },
            efficiency: 1.0,
            reference: LogDistanceReference::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn umi(law: PathLaw, carrier_ghz: f64) -> Result<Self> {
        if !law.is_umi() {
            return Err(invalid("law", format!("{} is not an urban-micro law", law.name())));
        }
        let spec = Self {
            law,
            carrier_ghz,
            ris_gains: RisGains::default(),
            efficiency: 1.0,
            reference: LogDistanceReference::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn log_distance(d0_m: f64, pl0_db: f64, exponent: f64) -> Result<Self> {
        let spec = Self {
            law: PathLaw::LogDistance,
            carrier_ghz: 1.0,
            ris_gains: RisGains::default(),
            efficiency: 1.0,
            reference: LogDistanceReference {
                d0_m,
                pl0_db,
                exponent,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Result<Self> {
        self.efficiency = efficiency;
        self.validate()?;
        Ok(self)
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_ghz > 0.0 && self.carrier_ghz.is_finite()) {
            return Err(invalid("carrier_ghz", format!("must be > 0, got {}", self.carrier_ghz)));
        }
        if let Some((lo, hi)) = self.law.band_ghz() {
            if self.carrier_ghz < lo || self.carrier_ghz > hi {
                return Err(Error::CarrierOutOfBand {
                    law: self.law.name(),
                    carrier_ghz: self.carrier_ghz,
                    min_ghz: lo,
                    max_ghz: hi,
                });
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid("efficiency", format!("must be in (0, 1], got {}", self.efficiency)));
        }
        let g = self.ris_gains;
        if !(g.incident > 0.0 && g.reflect > 0.0 && g.incident.is_finite() && g.reflect.is_finite()) {
            return Err(invalid("ris_gains", "gains must be finite and > 0"));
        }
        if self.law == PathLaw::LogDistance {
            let r = self.reference;
            if !(r.d0_m > 0.0 && r.pl0_db.is_finite() && r.exponent.is_finite()) {
                return Err(invalid("reference", "needs d0 > 0 and finite pl0, exponent"));
            }
        }
        Ok(())
    }

    /// Loss of a single-distance law (everything except the radar-range law).
    pub fn loss(&self, d_m: f64) -> Result<PathLossValue> {
        match self.law {
            PathLaw::RadarRangeRis => Err(invalid(
                "law",
                "radar-range loss needs two distances; use radar_range_ris_loss",
            )),
            PathLaw::LogDistance => log_distance_loss(self, d_m),
            _ => umi_loss(self, d_m),
        }
    }
}

/// An attenuation. `loss_db` is positive for a lossy path.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PathLossValue {
    loss_db: f64,
}

impl PathLossValue {
    pub const LOSSLESS: PathLossValue = PathLossValue { loss_db: 0.0 };

    pub fn from_db(loss_db: f64) -> Result<Self> {
        if !loss_db.is_finite() {
            return Err(invalid("loss_db", format!("must be finite, got {loss_db}")));
        }
        Ok(Self { loss_db })
    }

    pub fn from_linear(loss_linear: f64) -> Result<Self> {
        if !(loss_linear > 0.0 && loss_linear.is_finite()) {
            return Err(invalid("loss_linear", format!("must be finite and > 0, got {loss_linear}")));
        }
        Ok(Self {
            loss_db: 10.0 * loss_linear.log10(),
        })
    }

    pub fn loss_db(&self) -> f64 {
        self.loss_db
    }

    pub fn loss_linear(&self) -> f64 {
        10f64.powf(self.loss_db / 10.0)
    }

    /// Linear power gain, `1 / loss_linear`.
    pub fn gain(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }

    /// Linear amplitude gain, `sqrt(gain)`.
    pub fn amplitude_gain(&self) -> f64 {
        10f64.powf(-self.loss_db / 20.0)
    }

    /// Losses in series multiply.
    pub fn cascade(self, other: PathLossValue) -> PathLossValue {
        PathLossValue {
            loss_db: self.loss_db + other.loss_db,
        }
    }

    /// Applies an extra gain (e.g. `20 log10 N` of coherent combining).
    pub fn minus_db(self, db: f64) -> PathLossValue {
        PathLossValue {
            loss_db: self.loss_db - db,
        }
    }
}

fn check_distance(name: &'static str, d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(name, format!("distance must be finite and > 0, got {d}")));
    }
    Ok(())
}

/// Far-field plate-scattering loss of one RIS element path,
/// `[ (λ/4π)^4 G_i G_r ε / (d_sr² d_rd²) ]^{-1}`.
pub fn radar_range_ris_loss(spec: &PathLossSpec, d_sr: f64, d_rd: f64) -> Result<PathLossValue> {
    if spec.law != PathLaw::RadarRangeRis {
        return Err(invalid("law", format!("expected radar-range, got {}", spec.law.name())));
    }
    spec.validate()?;
    check_distance("d_sr", d_sr)?;
    check_distance("d_rd", d_rd)?;
    let k = spec.wavelength_m() / (4.0 * PI);
    // Assemble in dB so tiny gains never underflow.
    let gain_db = 40.0 * k.log10()
        + 10.0 * (spec.ris_gains.incident * spec.ris_gains.reflect * spec.efficiency).log10()
        - 20.0 * (d_sr * d_rd).log10();
    PathLossValue::from_db(-gain_db)
}

/// Radar-range law extended to a path bouncing off two surfaces in series
/// (source → RIS 1 → RIS 2 → destination). Each extra hop contributes another
/// `(λ/4π)² G_i G_r ε / d²` factor.
pub fn radar_range_double_loss(
    spec: &PathLossSpec,
    d_sr1: f64,
    d_r1r2: f64,
    d_r2d: f64,
) -> Result<PathLossValue> {
    let first = radar_range_ris_loss(spec, d_sr1, d_r1r2)?;
    check_distance("d_r2d", d_r2d)?;
    let k = spec.wavelength_m() / (4.0 * PI);
    let hop_gain_db = 20.0 * k.log10()
        + 10.0 * (spec.ris_gains.incident * spec.ris_gains.reflect * spec.efficiency).log10()
        - 20.0 * d_r2d.log10();
    Ok(first.cascade(PathLossValue::from_db(-hop_gain_db)?))
}

/// Urban-micro empirical laws (3GPP below 6 GHz, street canyon above).
pub fn umi_loss(spec: &PathLossSpec, d: f64) -> Result<PathLossValue> {
    let (slope, intercept, fc_coeff) = spec
        .law
        .umi_coefficients()
        .ok_or_else(|| invalid("law", format!("{} is not an urban-micro law", spec.law.name())))?;
    spec.validate()?;
    check_distance("d", d)?;
    let (lo, hi) = UMI_DISTANCE_RANGE_M;
    if d < lo || d > hi {
        return Err(Error::DistanceOutOfRange {
            law: spec.law.name(),
            distance_m: d,
            min_m: lo,
            max_m: hi,
        });
    }
    PathLossValue::from_db(slope * d.log10() + intercept + fc_coeff * spec.carrier_ghz.log10())
}

pub fn log_distance_loss(spec: &PathLossSpec, d: f64) -> Result<PathLossValue> {
    if spec.law != PathLaw::LogDistance {
        return Err(invalid("law", format!("expected log-distance, got {}", spec.law.name())));
    }
    spec.validate()?;
    check_distance("d", d)?;
    let r = spec.reference;
    PathLossValue::from_db(r.pl0_db + 10.0 * r.exponent * (d / r.d0_m).log10())
}

/// Loss of phase-aligned paths combined coherently:
/// `( Σ_i loss_i^{-1/2} )^{-2}`.
///
/// With one entry per RIS element this is the total RIS path loss; `N`
/// identical elements give `loss / N²`.
pub fn ris_total_loss(element_losses: &[PathLossValue]) -> Result<PathLossValue> {
    if element_losses.is_empty() {
        return Err(Error::Empty("element losses"));
    }
    // Factor out the smallest loss before summing amplitudes.
    let best = element_losses
        .iter()
        .map(|l| l.loss_db)
        .fold(f64::INFINITY, f64::min);
    let sum: f64 = element_losses
        .iter()
        .map(|l| 10f64.powf(-(l.loss_db - best) / 20.0))
        .sum();
    PathLossValue::from_db(best - 20.0 * sum.log10())
}

/// `p_t G_T |Γ| G_R / (PL(d_sr) PL(d_rd))`, in watts.
pub fn received_power_through_element(
    p_t: f64,
    gains: (f64, f64),
    gamma_mag: f64,
    pl_sr: PathLossValue,
    pl_rd: PathLossValue,
) -> Result<f64> {
    for (name, v) in [
        ("p_t", p_t),
        ("g_t", gains.0),
        ("g_r", gains.1),
        ("gamma_mag", gamma_mag),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, format!("must be finite and > 0, got {v}")));
        }
    }
    Ok(p_t * gains.0 * gamma_mag * gains.1 * pl_sr.cascade(pl_rd).gain())
}

/// Power of a coherent sum of per-element contributions
/// `| Σ sqrt(p_i) e^{j φ_i} |²`.
pub fn coherent_received_power(contributions: &[(f64, f64)]) -> f64 {
    contributions
        .iter()
        .map(|&(p, phase)| Complex64::from_polar(p.sqrt(), phase))
        .sum::<Complex64>()
        .norm_sqr()
}

/// Result of a log-distance fit `loss = pl0 + 10 n log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PleFit {
    pub exponent: f64,
    pub pl0_db: f64,
}

fn ple_abscissae(samples: &[(f64, f64)], d0: f64) -> Result<Vec<f64>> {
    if !(d0 > 0.0 && d0.is_finite()) {
        return Err(invalid("d0", format!("must be > 0, got {d0}")));
    }
    samples
        .iter()
        .map(|&(d, loss)| {
            if !(d > 0.0 && d.is_finite() && loss.is_finite()) {
                return Err(Error::DegenerateFit(format!("bad sample ({d}, {loss})")));
            }
            Ok(10.0 * (d / d0).log10())
        })
        .collect()
}

/// Ordinary least squares for both exponent and intercept.
pub fn fit_ple(samples: &[(f64, f64)], d0: f64) -> Result<PleFit> {
    if samples.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let xs = ple_abscissae(samples, d0)?;
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, &(_, y)) in xs.iter().zip(samples) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    if sxx <= f64::EPSILON * n * (1.0 + x_mean * x_mean) {
        return Err(Error::DegenerateFit("all samples share one distance".into()));
    }
    let exponent = sxy / sxx;
    Ok(PleFit {
        exponent,
        pl0_db: y_mean - exponent * x_mean,
    })
}

/// Least squares for the exponent with the intercept pinned at `pl0_db`,
/// i.e. the curve is forced through the loss observed at the reference
/// distance.
pub fn fit_ple_anchored(samples: &[(f64, f64)], d0: f64, pl0_db: f64) -> Result<PleFit> {
    if samples.is_empty() {
        return Err(Error::DegenerateFit("no samples".into()));
    }
    if !pl0_db.is_finite() {
        return Err(invalid("pl0_db", "must be finite"));
    }
    let xs = ple_abscissae(samples, d0)?;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, &(_, y)) in xs.iter().zip(samples) {
        sxx += x * x;
        sxy += x * (y - pl0_db);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("every sample sits at the reference distance".into()));
    }
    Ok(PleFit {
        exponent: sxy / sxx,
        pl0_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    #[test]
    fn radar_range_is_symmetric_in_distances() {
        let spec = PathLossSpec::radar_range(2.4, 3.0, 3.0).unwrap();
        let a = radar_range_ris_loss(&spec, 25.0, 75.0).unwrap();
        let b = radar_range_ris_loss(&spec, 75.0, 25.0).unwrap();
        assert!((a.loss_db() - b.loss_db()).abs() < 1e-12);
    }

    #[test]
    fn radar_range_doubling_distance_adds_6db() {
        let spec = PathLossSpec::radar_range(2.4, 3.0, 3.0).unwrap();
        let a = radar_range_ris_loss(&spec, 25.0, 75.0).unwrap();
        let b = radar_range_ris_loss(&spec, 50.0, 75.0).unwrap();
        assert!((b.loss_db() - a.loss_db() - 6.020_599_913_279_624).abs() < 1e-9);
    }

    #[test]
    fn radar_range_hand_evaluation() {
        // Direct linear evaluation of the radar-range expression.
        let g = 10f64.powf(0.5);
        let spec = PathLossSpec::radar_range(2.4, g, g).unwrap();
        let lambda = SPEED_OF_LIGHT / 2.4e9;
        let gain = (lambda / (4.0 * PI)).powi(4) * g * g / (25.0f64.powi(2) * 75.0f64.powi(2));
        let got = radar_range_ris_loss(&spec, 25.0, 75.0).unwrap();
        assert!((got.loss_linear() * gain - 1.0).abs() < 1e-12);
        assert!((got.loss_db() - 135.564_041_55).abs() < 1e-6, "{}", got.loss_db());
    }

    #[test]
    fn radar_range_rejects_bad_inputs() {
        let spec = PathLossSpec::radar_range(2.4, 1.0, 1.0).unwrap();
        assert!(radar_range_ris_loss(&spec, 0.0, 1.0).is_err());
        assert!(radar_range_ris_loss(&spec, 1.0, -1.0).is_err());
        assert!(PathLossSpec::radar_range(2.4, 0.0, 1.0).is_err());
        assert!(spec.with_efficiency(1.5).is_err());
        assert!(spec.with_efficiency(0.0).is_err());
    }

    #[test]
    fn double_reflection_adds_one_hop() {
        let spec = PathLossSpec::radar_range(2.4, 1.0, 1.0).unwrap();
        let single = radar_range_ris_loss(&spec, 20.0, 200.0).unwrap();
        let double = radar_range_double_loss(&spec, 20.0, 200.0, 20.0).unwrap();
        let lambda = spec.wavelength_m();
        let hop = db((4.0 * PI * 20.0 / lambda).powi(2));
        assert!((double.loss_db() - single.loss_db() - hop).abs() < 1e-9);
    }

    #[test]
    fn umi_hand_evaluations() {
        let los = PathLossSpec::umi(PathLaw::Umi3gppLos, 2.4).unwrap();
        let nlos = PathLossSpec::umi(PathLaw::Umi3gppNlos, 2.4).unwrap();
        assert!((umi_loss(&los, 100.0).unwrap().loss_db() - 79.604_225_5).abs() < 1e-6);
        assert!((umi_loss(&nlos, 100.0).unwrap().loss_db() - 105.985_492_28).abs() < 1e-6);
    }

    #[test]
    fn street_canyon_los_nlos_gap() {
        let los = PathLossSpec::umi(PathLaw::UmiStreetCanyonLos, 28.0).unwrap();
        let nlos = PathLossSpec::umi(PathLaw::UmiStreetCanyonNlos, 28.0).unwrap();
        for &d in &[10.0, 37.0, 250.0, 1999.0] {
            let gap = umi_loss(&los, d).unwrap().loss_db() - umi_loss(&nlos, d).unwrap().loss_db();
            assert!((gap + 10.7 * d.log10()).abs() < 1e-9);
        }
    }

    #[test]
    fn umi_enforces_band_and_range() {
        match PathLossSpec::umi(PathLaw::UmiStreetCanyonLos, 2.4) {
            Err(Error::CarrierOutOfBand { min_ghz, max_ghz, .. }) => {
                assert_eq!((min_ghz, max_ghz), (6.0, 100.0))
            }
            other => panic!("{other:?}"),
        }
        assert!(PathLossSpec::umi(PathLaw::Umi3gppLos, 28.0).is_err());
        let spec = PathLossSpec::umi(PathLaw::Umi3gppLos, 2.4).unwrap();
        assert!(matches!(umi_loss(&spec, 5.0), Err(Error::DistanceOutOfRange { .. })));
        assert!(matches!(umi_loss(&spec, 2500.0), Err(Error::DistanceOutOfRange { .. })));
    }

    #[test]
    fn every_law_increases_with_distance() {
        let specs = [
            PathLossSpec::umi(PathLaw::Umi3gppLos, 3.5).unwrap(),
            PathLossSpec::umi(PathLaw::Umi3gppNlos, 3.5).unwrap(),
            PathLossSpec::umi(PathLaw::UmiStreetCanyonLos, 28.0).unwrap(),
            PathLossSpec::umi(PathLaw::UmiStreetCanyonNlos, 28.0).unwrap(),
            PathLossSpec::log_distance(10.0, 40.0, 2.7).unwrap(),
        ];
        let rr = PathLossSpec::radar_range(28.0, 3.0, 3.0).unwrap();
        let mut prev = vec![f64::NEG_INFINITY; specs.len() + 1];
        for i in 0..200 {
            let d = 10.0 + 9.9 * i as f64;
            for (j, spec) in specs.iter().enumerate() {
                let l = spec.loss(d).unwrap().loss_db();
                assert!(l > prev[j] && l >= 0.0);
                prev[j] = l;
            }
            let l = radar_range_ris_loss(&rr, d, 30.0).unwrap().loss_db();
            assert!(l > prev[specs.len()]);
            prev[specs.len()] = l;
        }
    }

    #[test]
    fn total_loss_of_identical_elements() {
        let l = PathLossValue::from_db(120.0).unwrap();
        assert_eq!(ris_total_loss(&[l]).unwrap().loss_db(), 120.0);
        for n in [2usize, 64, 1024] {
            let total = ris_total_loss(&vec![l; n]).unwrap();
            assert!((total.loss_db() - (120.0 - 20.0 * (n as f64).log10())).abs() < 1e-9);
            assert!((total.loss_linear() - l.loss_linear() / (n * n) as f64).abs() / total.loss_linear() < 1e-9);
        }
        assert!(ris_total_loss(&[]).is_err());
    }

    #[test]
    fn element_power_identities() {
        let zero = PathLossValue::LOSSLESS;
        assert_eq!(received_power_through_element(2.0, (1.0, 1.0), 1.0, zero, zero).unwrap(), 2.0);
        let pl = PathLossValue::from_db(60.0).unwrap();
        let full = received_power_through_element(1.0, (1.0, 1.0), 1.0, pl, pl).unwrap();
        let half = received_power_through_element(1.0, (1.0, 1.0), 0.5, pl, pl).unwrap();
        assert!((half / full - 0.5).abs() < 1e-12);
        assert!(received_power_through_element(0.0, (1.0, 1.0), 1.0, pl, pl).is_err());
    }

    #[test]
    fn aligned_elements_add_coherently() {
        let pl = PathLossValue::from_db(50.0).unwrap();
        let single = received_power_through_element(1.0, (1.0, 1.0), 1.0, pl, pl).unwrap();
        for n in [1usize, 8, 64] {
            let phase = 0.3;
            let total = coherent_received_power(&vec![(single, phase); n]);
            assert!((total / (single * (n * n) as f64) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_recovers_exact_model() {
        let samples: Vec<_> = (0..100)
            .map(|i| {
                let d = 10f64.powf(1.0 + 1.4 * i as f64 / 99.0);
                (d, 40.0 + 20.0 * (d / 10.0).log10())
            })
            .collect();
        let fit = fit_ple(&samples, 10.0).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-9);
        assert!((fit.pl0_db - 40.0).abs() < 1e-9);
        let anchored = fit_ple_anchored(&samples, 10.0, 40.0).unwrap();
        assert!((anchored.exponent - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_degenerate_samples() {
        assert!(fit_ple(&[(10.0, 50.0)], 10.0).is_err());
        assert!(fit_ple(&[(20.0, 50.0), (20.0, 51.0), (20.0, 52.0)], 10.0).is_err());
        assert!(fit_ple(&[(0.0, 50.0), (20.0, 51.0)], 10.0).is_err());
        assert!(fit_ple(&[(10.0, 50.0), (20.0, 51.0)], 0.0).is_err());
        assert!(fit_ple_anchored(&[(10.0, 50.0)], 10.0, 50.0).is_err());
    }
}
