//! Monte Carlo BER and ergodic-rate engine.
//!
//! Work is cut into fixed-size chunks. Chunk `c` of grid point `g` always
//! draws from `SeededStream::new(seed, g).child(c)`, chunks are evaluated in
//! waves whose sizes do not depend on the worker count, and results are
//! folded strictly in chunk order. The output is therefore identical for any
//! number of workers.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::analysis::db_to_linear;
use crate::error::{invalid, Error, Result};
use crate::fading::{wrap_phase, RicianSpec};
use crate::link::{argmax_first, RisPanel, ScenarioGeometry, Topology};
use crate::pathloss::{
    radar_range_double_loss, radar_range_ris_loss, PathLaw, PathLossSpec, PathLossValue,
};
use crate::rng::{SeededStream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModulationFamily {
    Psk,
    Qam,
}

/// Unit-energy Gray-labelled constellation. `points[label]` is the symbol
/// carrying the bits of `label`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationScheme {
    family: ModulationFamily,
    order: u32,
    points: Vec<Complex64>,
}

fn gray(k: u32) -> u32 {
    k ^ (k >> 1)
}

impl ModulationScheme {
    pub fn new(family: ModulationFamily, order: u32) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(invalid("order", format!("M must be a power of two >= 2, got {order}")));
        }
        let mut points = vec![Complex64::new(0.0, 0.0); order as usize];
        match family {
            ModulationFamily::Psk if order == 2 => {
                points = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
            }
            ModulationFamily::Psk => {
                for k in 0..order {
                    let angle = 2.0 * PI * k as f64 / order as f64;
                    points[gray(k) as usize] = Complex64::from_polar(1.0, angle);
                }
            }
            ModulationFamily::Qam => {
                let bits = order.trailing_zeros();
                if bits % 2 != 0 {
                    return Err(invalid(
                        "order",
                        format!("only square QAM is supported, got M = {order}"),
                    ));
                }
                let side = 1u32 << (bits / 2);
                let half = bits / 2;
                // Average energy of a square M-QAM grid with odd-integer levels.
                let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
                for i in 0..side {
                    for q in 0..side {
                        let label = (gray(i) << half) | gray(q);
                        let level = |k: u32| (2.0 * k as f64 - (side as f64 - 1.0)) / scale;
                        points[label as usize] = Complex64::new(level(i), level(q));
                    }
                }
            }
        }
        Ok(Self {
            family,
            order,
            points,
        })
    }

    pub fn bpsk() -> Self {
        Self::new(ModulationFamily::Psk, 2).expect("BPSK is valid")
    }

    pub fn family(&self) -> ModulationFamily {
        self.family
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn name(&self) -> String {
        match (self.family, self.order) {
            (ModulationFamily::Psk, 2) => "bpsk".into(),
            (ModulationFamily::Psk, 4) => "qpsk".into(),
            (ModulationFamily::Psk, m) => format!("{m}psk"),
            (ModulationFamily::Qam, m) => format!("{m}qam"),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        let parse = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| invalid("modulation", format!("unknown modulation '{name}'")))
        };
        match lower.as_str() {
            "bpsk" => Self::new(ModulationFamily::Psk, 2),
            "qpsk" => Self::new(ModulationFamily::Psk, 4),
            s if s.ends_with("psk") => Self::new(ModulationFamily::Psk, parse(&s[..s.len() - 3])?),
            s if s.ends_with("qam") => Self::new(ModulationFamily::Qam, parse(&s[..s.len() - 3])?),
            _ => Err(invalid("modulation", format!("unknown modulation '{name}'"))),
        }
    }

    pub fn symbol(&self, label: u32) -> Complex64 {
        self.points[label as usize]
    }

    /// Minimum-distance decision, returning the label.
    pub fn decide(&self, z: Complex64) -> u32 {
        match self.family {
            ModulationFamily::Psk => {
                if self.order == 2 {
                    return u32::from(z.re < 0.0);
                }
                let m = self.order as f64;
                let k = (z.arg().rem_euclid(2.0 * PI) * m / (2.0 * PI)).round() as u32 % self.order;
                gray(k)
            }
            ModulationFamily::Qam => {
                let bits = self.bits_per_symbol();
                let side = 1u32 << (bits / 2);
                let scale = (2.0 * (self.order as f64 - 1.0) / 3.0).sqrt();
                let slice = |v: f64| {
                    let k = ((v * scale + (side as f64 - 1.0)) / 2.0).round();
                    k.clamp(0.0, (side - 1) as f64) as u32
                };
                (gray(slice(z.re)) << (bits / 2)) | gray(slice(z.im))
            }
        }
    }
}

/// Maps bits (one per byte, 0 or 1, MSB first within a symbol) to symbols.
pub fn modulate(scheme: &ModulationScheme, bits: &[u8]) -> Result<Vec<Complex64>> {
    let b = scheme.bits_per_symbol() as usize;
    if bits.len() % b != 0 {
        return Err(invalid(
            "bits",
            format!("length {} is not a multiple of {b}", bits.len()),
        ));
    }
    if bits.iter().any(|&x| x > 1) {
        return Err(invalid("bits", "entries must be 0 or 1"));
    }
    Ok(bits
        .chunks(b)
        .map(|c| scheme.symbol(c.iter().fold(0u32, |acc, &x| (acc << 1) | x as u32)))
        .collect())
}

pub fn demodulate(scheme: &ModulationScheme, received: &[Complex64]) -> Vec<u8> {
    let b = scheme.bits_per_symbol();
    let mut out = Vec::with_capacity(received.len() * b as usize);
    for &z in received {
        let label = scheme.decide(z);
        for i in (0..b).rev() {
            out.push(((label >> i) & 1) as u8);
        }
    }
    out
}

/// A channel with its large-scale losses already resolved.
///
/// Every RIS hop is Rician with the shared `rician` spec. `draw` returns the
/// composite amplitude `|g|` so that the received SNR is `|g|² p_t / N₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    /// Unit gain, no fading.
    Awgn,
    /// Point-to-point link; `fading: None` is a non-fading LOS link.
    Direct {
        pl: PathLossValue,
        fading: Option<RicianSpec>,
    },
    SingleRis {
        panel: RisPanel,
        pl: PathLossValue,
        rician: RicianSpec,
    },
    /// All surfaces reflect at once, each co-phased.
    Simultaneous {
        surfaces: Vec<(RisPanel, PathLossValue)>,
        rician: RicianSpec,
    },
    /// RIS1 → RIS2 matrix is Rician, outer hops unit LOS, ideal alignment.
    DoubleReflected {
        panels: (RisPanel, RisPanel),
        pl: PathLossValue,
        rician: RicianSpec,
    },
    /// Best single RIS per realization.
    SelectionIndoor {
        candidates: Vec<(RisPanel, PathLossValue)>,
        rician: RicianSpec,
    },
    /// Best double-reflected pair per realization; `pl_grid[k][l]` is the loss
    /// through source-side RIS `k` and destination-side RIS `l`.
    SelectionOutdoor {
        elements: usize,
        pl_grid: Vec<Vec<PathLossValue>>,
        rician: RicianSpec,
    },
}

/// Loss of one element path `S → RIS → D` under `spec`.
///
/// The radar-range law is used as is; any single-distance law is applied to
/// each hop and the two losses multiply.
pub fn ris_path_loss(spec: &PathLossSpec, d_sr: f64, d_rd: f64) -> Result<PathLossValue> {
    match spec.law {
        PathLaw::RadarRangeRis => radar_range_ris_loss(spec, d_sr, d_rd),
        _ => Ok(spec.loss(d_sr)?.cascade(spec.loss(d_rd)?)),
    }
}

/// Loss of one element-pair path `S → RIS1 → RIS2 → D`.
pub fn double_path_loss(spec: &PathLossSpec, d1: f64, d2: f64, d3: f64) -> Result<PathLossValue> {
    match spec.law {
        PathLaw::RadarRangeRis => radar_range_double_loss(spec, d1, d2, d3),
        _ => Ok(spec.loss(d1)?.cascade(spec.loss(d2)?).cascade(spec.loss(d3)?)),
    }
}

impl ChannelModel {
    /// Resolves distances and losses of a geometry into a channel.
    ///
    /// `panels` lists the RISs in id order (`R1, R2, ...`, then `Q1, Q2, ...`
    /// for two-sided topologies). `direct_fading` only matters for
    /// [`Topology::DirectOnly`].
    pub fn from_geometry(
        geometry: &ScenarioGeometry,
        panels: &[RisPanel],
        pathloss: &PathLossSpec,
        rician: RicianSpec,
        direct_fading: Option<RicianSpec>,
    ) -> Result<Self> {
        geometry.validate()?;
        pathloss.validate()?;
        let near = geometry.ris_count();
        let far = geometry.far_ris_count();
        let needed = match geometry.topology {
            Topology::DirectOnly => 0,
            _ => near + far,
        };
        if panels.len() != needed {
            return Err(Error::Plan(format!(
                "{} geometry has {needed} RIS but {} panels were given",
                geometry.topology.name(),
                panels.len()
            )));
        }
        let one_sided = |k: usize| -> Result<(RisPanel, PathLossValue)> {
            let pl = ris_path_loss(pathloss, geometry.d_sr(k)?, geometry.d_rd(k)?)?;
            Ok((panels[k].clone(), pl))
        };
        let pair = |k: usize, l: usize| {
            double_path_loss(pathloss, geometry.d_sr(k)?, geometry.d_r1r2(k, l)?, geometry.d_rd(l)?)
        };
        let model = match geometry.topology {
            Topology::DirectOnly => {
                if pathloss.law == PathLaw::RadarRangeRis {
                    return Err(Error::Plan(
                        "a direct link needs a single-distance path-loss law".into(),
                    ));
                }
                ChannelModel::Direct {
                    pl: pathloss.loss(geometry.d_sd()?)?,
                    fading: direct_fading,
                }
            }
            Topology::SingleRis => {
                if near != 1 {
                    return Err(Error::Plan(format!("single-ris needs exactly one RIS, found {near}")));
                }
                let (panel, pl) = one_sided(0)?;
                ChannelModel::SingleRis { panel, pl, rician }
            }
            Topology::DualSimultaneous => ChannelModel::Simultaneous {
                surfaces: (0..near).map(one_sided).collect::<Result<_>>()?,
                rician,
            },
            Topology::SelectionIndoor => ChannelModel::SelectionIndoor {
                candidates: (0..near).map(one_sided).collect::<Result<_>>()?,
                rician,
            },
            Topology::DoubleReflected => {
                if near != 1 || far != 1 {
                    return Err(Error::Plan(format!(
                        "double-reflected needs one RIS per side, found {near} and {far}"
                    )));
                }
                ChannelModel::DoubleReflected {
                    panels: (panels[0].clone(), panels[1].clone()),
                    pl: pair(0, 0)?,
                    rician,
                }
            }
            Topology::SelectionOutdoor => {
                let elements = panels[0].element_count();
                if panels.iter().any(|p| p.element_count() != elements) {
                    return Err(Error::Plan(
                        "outdoor selection assumes equal element counts".into(),
                    ));
                }
                if panels.iter().any(|p| !p.phase_policy.is_ideal() || p.gamma_mag_db != 0.0) {
                    return Err(Error::Plan(
                        "outdoor selection supports ideal panels only".into(),
                    ));
                }
                let pl_grid = (0..near)
                    .map(|k| (0..far).map(|l| pair(k, l)).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?;
                ChannelModel::SelectionOutdoor {
                    elements,
                    pl_grid,
                    rician,
                }
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Default)]
struct Scratch {
    cascade: Vec<Complex64>,
    phases: Vec<f64>,
}

fn ideal_single<R: Rng + ?Sized>(n: usize, rician: &RicianSpec, rng: &mut R) -> f64 {
    let mut sum = 0.0;
    for _ in 0..n {
        let a = rician.sample_amplitude(rng);
        let b = rician.sample_amplitude(rng);
        sum += a * b;
    }
    sum
}

fn single_amplitude<R: Rng + ?Sized>(
    panel: &RisPanel,
    pl: PathLossValue,
    rician: &RicianSpec,
    rng: &mut R,
    scratch: &mut Scratch,
) -> f64 {
    let n = panel.element_count();
    let scale = pl.amplitude_gain() * panel.gamma_mag();
    let policy = &panel.phase_policy;
    if policy.is_ideal() {
        return scale * ideal_single(n, rician, rng);
    }
    // Same channel draws as the ideal path, then the policy acts on the
    // co-phasing targets.
    scratch.cascade.clear();
    scratch.phases.clear();
    for _ in 0..n {
        let c = rician.sample_complex(rng) * rician.sample_complex(rng);
        scratch.cascade.push(c);
        scratch.phases.push(wrap_phase(-c.arg()));
    }
    let mag = policy.apply_in_place(&mut scratch.phases, rng);
    let sum: Complex64 = scratch
        .cascade
        .iter()
        .zip(&scratch.phases)
        .map(|(c, &phi)| c * Complex64::from_polar(1.0, phi))
        .sum();
    scale * mag * sum.norm()
}

fn double_amplitude<R: Rng + ?Sized>(n: usize, rician: &RicianSpec, rng: &mut R) -> f64 {
    (0..n * n).map(|_| rician.sample_amplitude(rng)).sum()
}

impl ChannelModel {
    pub fn topology(&self) -> Topology {
        match self {
            ChannelModel::Awgn | ChannelModel::Direct { .. } => Topology::DirectOnly,
            ChannelModel::SingleRis { .. } => Topology::SingleRis,
            ChannelModel::Simultaneous { .. } => Topology::DualSimultaneous,
            ChannelModel::DoubleReflected { .. } => Topology::DoubleReflected,
            ChannelModel::SelectionIndoor { .. } => Topology::SelectionIndoor,
            ChannelModel::SelectionOutdoor { .. } => Topology::SelectionOutdoor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelModel::Simultaneous { surfaces, .. } if surfaces.is_empty() => {
                Err(Error::Empty("simultaneous surfaces"))
            }
            ChannelModel::SelectionIndoor { candidates, .. } if candidates.is_empty() => {
                Err(Error::Empty("selection candidates"))
            }
            ChannelModel::SelectionOutdoor {
                elements, pl_grid, ..
            } => {
                let cols = pl_grid.first().map_or(0, Vec::len);
                if cols == 0 {
                    return Err(Error::Empty("selection grid"));
                }
                if pl_grid.iter().any(|r| r.len() != cols) {
                    return Err(invalid("pl_grid", "rows differ in length"));
                }
                if *elements == 0 {
                    return Err(invalid("elements", "must be >= 1"));
                }
                Ok(())
            }
            ChannelModel::DoubleReflected { panels, .. }
                if panels.0.element_count() != panels.1.element_count() =>
            {
                Err(Error::LengthMismatch {
                    expected: panels.0.element_count(),
                    found: panels.1.element_count(),
                })
            }
            _ => Ok(()),
        }
    }

    /// Number of alternative paths a selection model chooses between
    /// (zero for other models).
    pub fn candidate_count(&self) -> usize {
        match self {
            ChannelModel::SelectionIndoor { candidates, .. } => candidates.len(),
            ChannelModel::SelectionOutdoor { pl_grid, .. } => pl_grid.iter().map(Vec::len).sum(),
            _ => 0,
        }
    }

    /// Draws one realization. Selection models also write every candidate's
    /// amplitude into `candidates` (row-major for the outdoor grid).
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Scratch, candidates: &mut Vec<f64>) -> f64 {
        candidates.clear();
        match self {
            ChannelModel::Awgn => 1.0,
            ChannelModel::Direct { pl, fading } => {
                let h = fading.map_or(1.0, |f| f.sample_amplitude(rng));
                h * pl.amplitude_gain()
            }
            ChannelModel::SingleRis { panel, pl, rician } => {
                single_amplitude(panel, *pl, rician, rng, scratch)
            }
            ChannelModel::Simultaneous { surfaces, rician } => surfaces
                .iter()
                .map(|(panel, pl)| single_amplitude(panel, *pl, rician, rng, scratch))
                .sum(),
            ChannelModel::DoubleReflected { panels, pl, rician } => {
                let scale = pl.amplitude_gain() * panels.0.gamma_mag() * panels.1.gamma_mag();
                scale * double_amplitude(panels.0.element_count(), rician, rng)
            }
            ChannelModel::SelectionIndoor {
                candidates: cands,
                rician,
            } => {
                for (panel, pl) in cands {
                    candidates.push(single_amplitude(panel, *pl, rician, rng, scratch));
                }
                let k = argmax_first(candidates.iter().copied()).unwrap_or(0);
                candidates[k]
            }
            ChannelModel::SelectionOutdoor {
                elements,
                pl_grid,
                rician,
            } => {
                for row in pl_grid {
                    for pl in row {
                        candidates.push(pl.amplitude_gain() * double_amplitude(*elements, rician, rng));
                    }
                }
                let k = argmax_first(candidates.iter().copied()).unwrap_or(0);
                candidates[k]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub channel: ChannelModel,
    pub modulation: ModulationScheme,
    /// `p_t / N₀` grid in dB.
    pub snr_grid_db: Vec<f64>,
    pub min_errors: u64,
    pub max_trials: u64,
    pub seed: u64,
}

impl TrialPlan {
    pub const DEFAULT_MIN_ERRORS: u64 = 200;
    pub const DEFAULT_MAX_TRIALS: u64 = 100_000_000;

    pub fn new(channel: ChannelModel, modulation: ModulationScheme, snr_grid_db: Vec<f64>, seed: u64) -> Self {
        Self {
            channel,
            modulation,
            snr_grid_db,
            min_errors: Self::DEFAULT_MIN_ERRORS,
            max_trials: Self::DEFAULT_MAX_TRIALS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.min_errors < 50 {
            return Err(invalid("min_errors", format!("must be >= 50, got {}", self.min_errors)));
        }
        if self.max_trials == 0 {
            return Err(invalid("max_trials", "must be >= 1"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Empty("snr grid"));
        }
        if self.snr_grid_db.iter().any(|x| !x.is_finite())
            || self.snr_grid_db.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(invalid("snr_grid_db", "grid must be finite and strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerEstimate {
    pub snr_db: f64,
    /// Symbols sent.
    pub trials: u64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95 %.
pub fn wilson_interval(errors: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = errors as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

/// Symbols per BER chunk.
pub const BER_CHUNK: u64 = 2048;
const MAX_WAVE: u64 = 32;

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Plan(format!("cannot start worker pool: {e}")))
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkCount {
    trials: u64,
    errors: u64,
}

fn ber_chunk(plan: &TrialPlan, rho: f64, stream: SeededStream, trials: u64) -> ChunkCount {
    let mut rng: StreamRng = stream.rng();
    let mut scratch = Scratch::default();
    let mut cands = Vec::new();
    let scheme = &plan.modulation;
    let mask = scheme.order() - 1;
    let sqrt_rho = rho.sqrt();
    let noise_sd = std::f64::consts::FRAC_1_SQRT_2;
    let mut errors = 0u64;
    for _ in 0..trials {
        let g = plan.channel.draw(&mut rng, &mut scratch, &mut cands);
        let label = rng.random::<u32>() & mask;
        let x = scheme.symbol(label);
        let nr: f64 = StandardNormal.sample(&mut rng);
        let ni: f64 = StandardNormal.sample(&mut rng);
        let amp = sqrt_rho * g;
        let y = x * amp + Complex64::new(noise_sd * nr, noise_sd * ni);
        let z = if amp > 0.0 { y / amp } else { y };
        errors += u64::from((scheme.decide(z) ^ label).count_ones());
    }
    ChunkCount { trials, errors }
}

fn ber_point(plan: &TrialPlan, index: usize, snr_db: f64, pool: &rayon::ThreadPool) -> BerEstimate {
    let rho = db_to_linear(snr_db);
    let base = SeededStream::new(plan.seed, index as u64);
    let bits_per_symbol = u64::from(plan.modulation.bits_per_symbol());
    let mut total = ChunkCount::default();
    let mut next_chunk = 0u64;
    let mut wave = 1u64;
    'outer: while total.errors < plan.min_errors && total.trials < plan.max_trials {
        let mut sizes = Vec::with_capacity(wave as usize);
        let mut planned = total.trials;
        while (sizes.len() as u64) < wave && planned < plan.max_trials {
            let size = BER_CHUNK.min(plan.max_trials - planned);
            sizes.push((next_chunk + sizes.len() as u64, size));
            planned += size;
        }
        next_chunk += sizes.len() as u64;
        let results: Vec<ChunkCount> = pool.install(|| {
            sizes
                .par_iter()
                .map(|&(c, size)| ber_chunk(plan, rho, base.child(c), size))
                .collect()
        });
        for r in results {
            total.trials += r.trials;
            total.errors += r.errors;
            if total.errors >= plan.min_errors {
                break 'outer;
            }
        }
        wave = (wave * 2).min(MAX_WAVE);
    }
    let bits = total.trials * bits_per_symbol;
    let ber = total.errors as f64 / bits as f64;
    let (lo, hi) = wilson_interval(total.errors, bits);
    BerEstimate {
        snr_db,
        trials: total.trials,
        bits,
        errors: total.errors,
        ber,
        ci95_low: lo,
        ci95_high: hi,
    }
}

pub fn run_ber(plan: &TrialPlan) -> Result<Vec<BerEstimate>> {
    run_ber_with_workers(plan, default_workers())
}

pub fn run_ber_with_workers(plan: &TrialPlan, workers: usize) -> Result<Vec<BerEstimate>> {
    plan.validate()?;
    let pool = pool(workers)?;
    Ok(plan
        .snr_grid_db
        .iter()
        .enumerate()
        .map(|(i, &db)| ber_point(plan, i, db, &pool))
        .collect())
}

/// One point of a rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub parameter: f64,
    pub mean_rate: f64,
    pub mean_snr: f64,
    /// Rates of each fixed candidate path on the same realizations
    /// (selection models only).
    pub per_candidate_rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePlan {
    /// `(swept parameter value, channel at that value)`.
    pub points: Vec<(f64, ChannelModel)>,
    pub p_t_w: f64,
    pub n0_w: f64,
    pub realizations: u64,
    pub seed: u64,
}

impl RatePlan {
    pub const DEFAULT_REALIZATIONS: u64 = 10_000;

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Empty("rate sweep"));
        }
        for (_, ch) in &self.points {
            ch.validate()?;
        }
        if !(self.p_t_w > 0.0 && self.n0_w > 0.0) {
            return Err(invalid("power", "p_t and N0 must be > 0"));
        }
        if self.realizations == 0 {
            return Err(invalid("realizations", "must be >= 1"));
        }
        Ok(())
    }
}

/// Realizations per rate chunk.
pub const RATE_CHUNK: u64 = 256;

#[derive(Debug, Clone, Default)]
struct RateSums {
    rate: f64,
    snr: f64,
    per_candidate: Vec<f64>,
}

fn rate_chunk(channel: &ChannelModel, rho: f64, stream: SeededStream, count: u64) -> RateSums {
    let mut rng = stream.rng();
    let mut scratch = Scratch::default();
    let mut cands = Vec::new();
    let mut sums = RateSums {
        per_candidate: vec![0.0; channel.candidate_count()],
        ..RateSums::default()
    };
    for _ in 0..count {
        let g = channel.draw(&mut rng, &mut scratch, &mut cands);
        let snr = g * g * rho;
        sums.rate += snr.ln_1p() / LN_2;
        sums.snr += snr;
        for (acc, c) in sums.per_candidate.iter_mut().zip(&cands) {
            *acc += (c * c * rho).ln_1p() / LN_2;
        }
    }
    sums
}

pub fn run_rate(plan: &RatePlan) -> Result<Vec<RatePoint>> {
    run_rate_with_workers(plan, default_workers())
}

pub fn run_rate_with_workers(plan: &RatePlan, workers: usize) -> Result<Vec<RatePoint>> {
    plan.validate()?;
    let pool = pool(workers)?;
    let rho = plan.p_t_w / plan.n0_w;
    let chunks = plan.realizations.div_ceil(RATE_CHUNK);
    let mut out = Vec::with_capacity(plan.points.len());
    for (i, (param, channel)) in plan.points.iter().enumerate() {
        let base = SeededStream::new(plan.seed, i as u64);
        let parts: Vec<RateSums> = pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let size = RATE_CHUNK.min(plan.realizations - c * RATE_CHUNK);
                    rate_chunk(channel, rho, base.child(c), size)
                })
                .collect()
        });
        let mut total = RateSums {
            per_candidate: vec![0.0; channel.candidate_count()],
            ..RateSums::default()
        };
        for p in parts {
            total.rate += p.rate;
            total.snr += p.snr;
            for (a, b) in total.per_candidate.iter_mut().zip(&p.per_candidate) {
                *a += b;
            }
        }
        let n = plan.realizations as f64;
        out.push(RatePoint {
            parameter: *param,
            mean_rate: total.rate / n,
            mean_snr: total.snr / n,
            per_candidate_rate: total.per_candidate.iter().map(|r| r / n).collect(),
        });
    }
    Ok(out)
}

/// Interpolates the `p_t/N₀` (dB) at which a BER curve crosses `target`,
/// linearly in `log10(BER)`. Points with zero errors are ignored.
pub fn crossing_snr_db(curve: &[BerEstimate], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|e| e.errors > 0)
        .map(|e| (e.snr_db, e.ber.log10()))
        .collect();
    let t = target.log10();
    pts.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 >= t && y1 <= t && y0 != y1).then(|| x0 + (t - y0) * (x1 - x0) / (y1 - y0))
    })
}
