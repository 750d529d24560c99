//! Closed-form and quadrature performance figures built on a Gaussian (CLT)
//! model of the composite amplitude `A`.
//!
//! With `A ~ N(μ, σ²)` and `γ = ρA²`, `ρ = p_t/N₀`, the ratio `γ/(ρσ²)` is
//! non-central chi-square with one degree of freedom and non-centrality
//! `μ²/σ²`. Its MGF gives
//!
//! `M(s) = E[e^{sγ}] = exp(sρμ² / (1 - 2sρσ²)) / sqrt(1 - 2sρσ²)`.
//!
//! For one RIS, `μ = N√P m²` and `σ² = NP(1 - m⁴)` where `m` is the mean of
//! one Rician amplitude and `P` the linear path gain; substituting these
//! reproduces the long single-RIS expression term by term. The dual and
//! double-reflected models only change `(μ, σ²)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::fading::{rician_amplitude_moments_with, LaguerrePolicy, RicianSpec};
use crate::link::Topology;
use crate::pathloss::PathLossValue;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltAmplitudeModel {
    pub mean: f64,
    pub variance: f64,
    pub topology: Topology,
}

impl CltAmplitudeModel {
    pub fn new(mean: f64, variance: f64, topology: Topology) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(invalid("mean", format!("must be finite and >= 0, got {mean}")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(invalid("variance", format!("must be finite and > 0, got {variance}")));
        }
        Ok(Self {
            mean,
            variance,
            topology,
        })
    }

    /// `E[A²]`.
    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean + self.variance
    }
}

fn per_amplitude_mean(rician: &RicianSpec, policy: LaguerrePolicy) -> Result<f64> {
    Ok(rician_amplitude_moments_with(rician, policy)?.mean)
}

/// Single RIS with `n` elements, each cascade a product of two independent
/// Rician amplitudes.
pub fn clt_moments_single(n: usize, pl: PathLossValue, rician: &RicianSpec) -> Result<CltAmplitudeModel> {
    clt_moments_single_with(n, pl, rician, LaguerrePolicy::default())
}

pub fn clt_moments_single_with(
    n: usize,
    pl: PathLossValue,
    rician: &RicianSpec,
    policy: LaguerrePolicy,
) -> Result<CltAmplitudeModel> {
    if n == 0 {
        return Err(invalid("n", "a RIS needs at least one element"));
    }
    let m = per_amplitude_mean(rician, policy)?;
    let (nf, p) = (n as f64, pl.gain());
    CltAmplitudeModel::new(
        nf * p.sqrt() * m * m,
        nf * p * (1.0 - m.powi(4)),
        Topology::SingleRis,
    )
}

/// Any number of simultaneously reflecting RISs, given as `(elements, loss)`.
/// Entries with zero elements are skipped.
pub fn clt_moments_simultaneous(
    surfaces: &[(usize, PathLossValue)],
    rician: &RicianSpec,
    policy: LaguerrePolicy,
) -> Result<CltAmplitudeModel> {
    let active: Vec<_> = surfaces.iter().filter(|(n, _)| *n > 0).collect();
    if active.is_empty() {
        return Err(invalid("surfaces", "need at least one RIS with elements"));
    }
    let m = per_amplitude_mean(rician, policy)?;
    let amp: f64 = active.iter().map(|(n, pl)| *n as f64 * pl.gain().sqrt()).sum();
    let pow: f64 = active.iter().map(|(n, pl)| *n as f64 * pl.gain()).sum();
    let topology = if active.len() == 1 {
        Topology::SingleRis
    } else {
        Topology::DualSimultaneous
    };
    CltAmplitudeModel::new(amp * m * m, pow * (1.0 - m.powi(4)), topology)
}

/// Two simultaneous RISs. `n2 = 0` collapses to [`clt_moments_single`].
pub fn clt_moments_dual(
    n1: usize,
    n2: usize,
    pl1: PathLossValue,
    pl2: PathLossValue,
    rician: &RicianSpec,
) -> Result<CltAmplitudeModel> {
    if n1 == 0 {
        return Err(invalid("n1", "the first RIS needs at least one element"));
    }
    clt_moments_simultaneous(&[(n1, pl1), (n2, pl2)], rician, LaguerrePolicy::default())
}

/// Double reflection: `A = √P Σ_ij β_ij`, a sum of `N²` single Rician
/// amplitudes.
pub fn clt_moments_double(n: usize, pl: PathLossValue, rician: &RicianSpec) -> Result<CltAmplitudeModel> {
    clt_moments_double_with(n, pl, rician, LaguerrePolicy::default())
}

pub fn clt_moments_double_with(
    n: usize,
    pl: PathLossValue,
    rician: &RicianSpec,
    policy: LaguerrePolicy,
) -> Result<CltAmplitudeModel> {
    if n < 2 {
        return Err(invalid("n", format!("double reflection needs n >= 2, got {n}")));
    }
    let m = per_amplitude_mean(rician, policy)?;
    let (n2, p) = ((n * n) as f64, pl.gain());
    CltAmplitudeModel::new(n2 * p.sqrt() * m, n2 * p * (1.0 - m * m), Topology::DoubleReflected)
}

/// MGF of `γ = ρA²` at `s`.
pub fn mgf(model: &CltAmplitudeModel, s: f64, p_t_over_n0: f64) -> Result<f64> {
    if !(p_t_over_n0 >= 0.0 && p_t_over_n0.is_finite()) {
        return Err(invalid("p_t_over_n0", format!("must be finite and >= 0, got {p_t_over_n0}")));
    }
    if !s.is_finite() {
        return Err(Error::NumericDomain(format!("MGF argument {s} is not finite")));
    }
    let rho = p_t_over_n0;
    let denom = 1.0 - 2.0 * s * model.variance * rho;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::NumericDomain(format!(
            "MGF undefined at s = {s}: 1 - 2 s VAR ρ = {denom}"
        )));
    }
    Ok((s * model.mean * model.mean * rho / denom).exp() / denom.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SepRequest {
    pub order: u32,
    pub snr_budget_db: Vec<f64>,
    pub model: CltAmplitudeModel,
}

impl SepRequest {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || !self.order.is_power_of_two() {
            return Err(invalid("order", format!("M must be a power of two >= 2, got {}", self.order)));
        }
        if self.snr_budget_db.iter().any(|x| !x.is_finite()) {
            return Err(invalid("snr_budget_db", "grid must be finite"));
        }
        if self.snr_budget_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("snr_budget_db", "grid must be strictly increasing"));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

const GL_POINTS: usize = 64;
const SEP_REL_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 40;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

fn gl<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut total = 0.0;
    for &(x, w) in gauss_legendre() {
        total += w * f(mid + half * x)?;
    }
    Ok(total * half)
}

fn adaptive<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    abs_tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (left, right) = (gl(f, a, m)?, gl(f, m, b)?);
    let refined = left + right;
    let change = (refined - whole).abs();
    if change <= abs_tol {
        return Ok(refined);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature {
            lower: a,
            upper: b,
            estimate: refined,
            relative_change: change / refined.abs().max(f64::MIN_POSITIVE),
        });
    }
    Ok(adaptive(f, a, m, left, 0.5 * abs_tol, depth + 1)?
        + adaptive(f, m, b, right, 0.5 * abs_tol, depth + 1)?)
}

/// 64-point Gauss–Legendre, bisecting any panel whose estimate moves by
/// more than its share of `rel_tol` when split in two.
pub fn integrate<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let whole = gl(&f, a, b)?;
    let m = 0.5 * (a + b);
    let refined = gl(&f, a, m)? + gl(&f, m, b)?;
    let scale = refined.abs().max(whole.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    adaptive(&f, a, b, whole, rel_tol * scale, 0)
}

/// Average M-PSK symbol error probability at a single `ρ = p_t/N₀`.
///
/// `P_e = (1/π) ∫₀^{(M-1)π/M} M(-sin²(π/M) / sin²η) dη`.
pub fn sep_mpsk_at(model: &CltAmplitudeModel, order: u32, p_t_over_n0: f64) -> Result<f64> {
    if order < 2 || !order.is_power_of_two() {
        return Err(invalid("order", format!("M must be a power of two >= 2, got {order}")));
    }
    let m = order as f64;
    let g = (PI / m).sin().powi(2);
    let upper = (m - 1.0) * PI / m;
    let integrand = |eta: f64| {
        let s2 = eta.sin().powi(2);
        if s2 == 0.0 {
            return Ok(0.0);
        }
        mgf(model, -g / s2, p_t_over_n0)
    };
    Ok(integrate(integrand, 0.0, upper, SEP_REL_TOL)? / PI)
}

/// SEP over the request's `p_t/N₀` grid, as `(snr_db, sep)` pairs.
pub fn sep_mpsk(req: &SepRequest) -> Result<Vec<(f64, f64)>> {
    req.validate()?;
    req.snr_budget_db
        .iter()
        .map(|&db| Ok((db, sep_mpsk_at(&req.model, req.order, db_to_linear(db))?)))
        .collect()
}

/// BPSK bound from evaluating the integrand at its maximum `η = π/2`:
/// `P_e ≤ ½ M(-1)`. The topology enters only through the model's moments.
pub fn sep_upper_bound(model: &CltAmplitudeModel, p_t_over_n0: f64) -> Result<f64> {
    Ok(0.5 * mgf(model, -1.0, p_t_over_n0)?)
}

/// `p_t/N₀` in dB at which the BPSK SEP of `model` equals `target`.
pub fn required_snr_db(model: &CltAmplitudeModel, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 0.5) {
        return Err(invalid("target", format!("must be in (0, 0.5), got {target}")));
    }
    let sep = |db: f64| sep_mpsk_at(model, 2, db_to_linear(db));
    let (mut lo, mut hi) = (-100.0, 0.0);
    while sep(hi)? > target {
        lo = hi;
        hi += 20.0;
        if hi > 400.0 {
            return Err(Error::NumericDomain(format!("SEP never reaches {target}")));
        }
    }
    while sep(lo)? < target {
        hi = lo;
        lo -= 50.0;
        if lo < -400.0 {
            return Err(Error::NumericDomain(format!("SEP stays below {target}")));
        }
    }
    // Bisect in log-SEP.
    let lt = target.ln();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sep(mid)?.ln() > lt {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// BPSK over a non-fading link, `Q(sqrt(2γ)) = erfc(sqrt(γ)) / 2`.
pub fn awgn_bpsk_ber(snr_linear: f64) -> f64 {
    0.5 * erfc(snr_linear.max(0.0).sqrt())
}

/// `log₂(1 + γ)` in bit/s/Hz.
pub fn achievable_rate(snr_linear: f64) -> Result<f64> {
    if !(snr_linear >= 0.0) || snr_linear.is_infinite() {
        return Err(invalid("snr", format!("must be finite and >= 0, got {snr_linear}")));
    }
    Ok(snr_linear.ln_1p() / std::f64::consts::LN_2)
}
