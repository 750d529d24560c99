//! Instantaneous SNR of RIS-assisted links.
//!
//! A cascade through element `i` is `h_sr[i] · e^{jφ_i} · h_rd[i]`, which with
//! `h = α e^{-jθ}` is `α_i β_i e^{j(φ_i - θ_i - ϕ_i)}`. Received SNR is
//! `|Σ cascade|² · p_t / (PL · N₀)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{check_len, invalid, Error, Result};
use crate::fading::{wrap_phase, ComplexCoefficient};
use crate::impairments::PhasePolicy;
use crate::pathloss::PathLossValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    SingleRis,
    DualSimultaneous,
    DoubleReflected,
    SelectionIndoor,
    SelectionOutdoor,
    DirectOnly,
}

impl Topology {
    pub const ALL: [Topology; 6] = [
        Topology::SingleRis,
        Topology::DualSimultaneous,
        Topology::DoubleReflected,
        Topology::SelectionIndoor,
        Topology::SelectionOutdoor,
        Topology::DirectOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::SingleRis => "single-ris",
            Topology::DualSimultaneous => "dual-simultaneous",
            Topology::DoubleReflected => "double-reflected",
            Topology::SelectionIndoor => "selection-indoor",
            Topology::SelectionOutdoor => "selection-outdoor",
            Topology::DirectOnly => "direct-only",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Topologies whose RISs split into a source-side and a destination-side
    /// group with a RIS-to-RIS hop in between.
    pub fn is_two_sided(self) -> bool {
        matches!(self, Topology::DoubleReflected | Topology::SelectionOutdoor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn planar(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Distances given directly rather than through coordinates.
///
/// For two-sided topologies `d_sr[k]` runs from the source to source-side RIS
/// `k`, `d_r1r2[k][l]` from source-side RIS `k` to destination-side RIS `l`,
/// and `d_rd[l]` from destination-side RIS `l` to the destination.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExplicitDistances {
    pub d_sd: Option<f64>,
    pub d_sr: Vec<f64>,
    pub d_rd: Vec<f64>,
    pub d_r1r2: Vec<Vec<f64>>,
    pub d_v: Option<f64>,
    pub d_h: Option<f64>,
}

/// Node positions and/or distances. Coordinates win over explicit distances.
///
/// Node ids: `S` and `D` for the terminals, `R1`, `R2`, ... for the RISs of
/// one-sided topologies and for the source-side group of two-sided ones, and
/// `Q1`, `Q2`, ... for the destination-side group.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    pub topology: Topology,
    pub positions: BTreeMap<String, Point3>,
    pub distances: ExplicitDistances,
}

pub fn ris_id(index: usize) -> String {
    format!("R{}", index + 1)
}

pub fn far_ris_id(index: usize) -> String {
    format!("Q{}", index + 1)
}

impl ScenarioGeometry {
    pub fn new(topology: Topology) -> Self {
        Self {
            topology,
            positions: BTreeMap::new(),
            distances: ExplicitDistances::default(),
        }
    }

    pub fn with_position(mut self, id: &str, p: Point3) -> Self {
        self.positions.insert(id.to_string(), p);
        self
    }

    fn between(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.positions.get(a)?.distance(self.positions.get(b)?))
    }

    fn checked(name: &'static str, d: Option<f64>) -> Result<f64> {
        match d {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            Some(v) => Err(invalid(name, format!("distance must be > 0, got {v}"))),
            None => Err(invalid(name, "distance not given by coordinates or explicitly")),
        }
    }

    pub fn d_sd(&self) -> Result<f64> {
        Self::checked("d_sd", self.between("S", "D").or(self.distances.d_sd))
    }

    /// Source to (source-side) RIS `k`.
    pub fn d_sr(&self, k: usize) -> Result<f64> {
        Self::checked(
            "d_sr",
            self.between("S", &ris_id(k))
                .or_else(|| self.distances.d_sr.get(k).copied()),
        )
    }

    /// Last RIS `k` to the destination.
    pub fn d_rd(&self, k: usize) -> Result<f64> {
        let id = if self.topology.is_two_sided() {
            far_ris_id(k)
        } else {
            ris_id(k)
        };
        Self::checked(
            "d_rd",
            self.between(&id, "D")
                .or_else(|| self.distances.d_rd.get(k).copied()),
        )
    }

    pub fn d_r1r2(&self, k: usize, l: usize) -> Result<f64> {
        Self::checked(
            "d_r1r2",
            self.between(&ris_id(k), &far_ris_id(l))
                .or_else(|| self.distances.d_r1r2.get(k).and_then(|r| r.get(l)).copied()),
        )
    }

    fn count_prefixed(&self, prefix: char) -> usize {
        self.positions
            .keys()
            .filter(|id| id.starts_with(prefix) && id[1..].parse::<usize>().is_ok())
            .count()
    }

    /// Number of (source-side) RISs.
    pub fn ris_count(&self) -> usize {
        self.count_prefixed('R').max(self.distances.d_sr.len())
    }

    /// Number of destination-side RISs (two-sided topologies only).
    pub fn far_ris_count(&self) -> usize {
        if !self.topology.is_two_sided() {
            return 0;
        }
        self.count_prefixed('Q').max(self.distances.d_rd.len())
    }

    /// Checks that every distance the topology needs exists and is positive.
    pub fn validate(&self) -> Result<()> {
        match self.topology {
            Topology::DirectOnly => {
                self.d_sd()?;
            }
            Topology::SingleRis | Topology::DualSimultaneous | Topology::SelectionIndoor => {
                let n = self.ris_count();
                let need = match self.topology {
                    Topology::SingleRis => 1,
                    Topology::DualSimultaneous => 2,
                    _ => 1,
                };
                if n < need {
                    return Err(invalid(
                        "geometry",
                        format!("{} needs {need} RIS, found {n}", self.topology.name()),
                    ));
                }
                for k in 0..n {
                    self.d_sr(k)?;
                    self.d_rd(k)?;
                }
            }
            Topology::DoubleReflected | Topology::SelectionOutdoor => {
                let (n1, n2) = (self.ris_count(), self.far_ris_count());
                if n1 == 0 || n2 == 0 {
                    return Err(invalid(
                        "geometry",
                        format!("{} needs RISs on both sides", self.topology.name()),
                    ));
                }
                for k in 0..n1 {
                    self.d_sr(k)?;
                    for l in 0..n2 {
                        self.d_r1r2(k, l)?;
                    }
                }
                for l in 0..n2 {
                    self.d_rd(l)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisPanel {
    element_count: usize,
    pub phase_policy: PhasePolicy,
    pub gamma_mag_db: f64,
}

impl RisPanel {
    pub fn new(element_count: usize) -> Result<Self> {
        if element_count == 0 {
            return Err(invalid("element_count", "must be >= 1"));
        }
        Ok(Self {
            element_count,
            phase_policy: PhasePolicy::ideal(),
            gamma_mag_db: 0.0,
        })
    }

    pub fn with_policy(mut self, policy: PhasePolicy) -> Self {
        self.phase_policy = policy;
        self
    }

    pub fn with_gamma_mag_db(mut self, db: f64) -> Result<Self> {
        if !(db.is_finite() && db <= 0.0) {
            return Err(invalid("gamma_mag_db", format!("must be finite and <= 0, got {db}")));
        }
        self.gamma_mag_db = db;
        Ok(self)
    }

    pub fn element_count(&self) -> usize {
        self.element_count
    }

    /// Panel reflection magnitude (linear amplitude), excluding any
    /// magnitude the phase policy adds.
    pub fn gamma_mag(&self) -> f64 {
        10f64.powf(self.gamma_mag_db / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRealization {
    /// Per-element coefficients of each hop, in path order.
    pub hops: Vec<Vec<ComplexCoefficient>>,
    pub composite_amplitude: f64,
    pub snr_linear: f64,
}

fn check_powers(p_t: f64, n0: f64) -> Result<()> {
    if !(p_t > 0.0 && p_t.is_finite()) {
        return Err(invalid("p_t", format!("must be finite and > 0, got {p_t}")));
    }
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(invalid("n0", format!("must be finite and > 0, got {n0}")));
    }
    Ok(())
}

/// `Σ α_i β_i e^{j(φ_i - θ_i - ϕ_i)}` without path loss.
pub fn cascade_sum(
    h_sr: &[ComplexCoefficient],
    h_rd: &[ComplexCoefficient],
    phases: &[f64],
) -> Complex64 {
    h_sr.iter()
        .zip(h_rd)
        .zip(phases)
        .map(|((a, b), &phi)| {
            Complex64::from_polar(a.amplitude * b.amplitude, phi - a.phase - b.phase)
        })
        .sum()
}

pub fn snr_single_ris(
    panel: &RisPanel,
    h_sr: &[ComplexCoefficient],
    h_rd: &[ComplexCoefficient],
    pl: PathLossValue,
    p_t: f64,
    n0: f64,
    phases: &[f64],
) -> Result<LinkRealization> {
    check_powers(p_t, n0)?;
    check_len(panel.element_count, h_sr.len())?;
    check_len(panel.element_count, h_rd.len())?;
    check_len(panel.element_count, phases.len())?;
    let amplitude = cascade_sum(h_sr, h_rd, phases).norm() * pl.amplitude_gain() * panel.gamma_mag();
    Ok(LinkRealization {
        hops: vec![h_sr.to_vec(), h_rd.to_vec()],
        composite_amplitude: amplitude,
        snr_linear: amplitude * amplitude * p_t / n0,
    })
}

/// Phases that co-phase every cascade: `φ_i = θ_i + ϕ_i`.
pub fn align_phases_single(h_sr: &[ComplexCoefficient], h_rd: &[ComplexCoefficient]) -> Vec<f64> {
    h_sr.iter()
        .zip(h_rd)
        .map(|(a, b)| wrap_phase(a.phase + b.phase))
        .collect()
}

/// Single RIS with phases aligned and then passed through the panel policy.
pub fn snr_single_ris_with_policy<R: Rng + ?Sized>(
    panel: &RisPanel,
    h_sr: &[ComplexCoefficient],
    h_rd: &[ComplexCoefficient],
    pl: PathLossValue,
    p_t: f64,
    n0: f64,
    rng: &mut R,
) -> Result<LinkRealization> {
    check_len(h_sr.len(), h_rd.len())?;
    let mut phases = align_phases_single(h_sr, h_rd);
    let mag = panel.phase_policy.apply_in_place(&mut phases, rng);
    let mut out = snr_single_ris(panel, h_sr, h_rd, pl, p_t, n0, &phases)?;
    out.composite_amplitude *= mag;
    out.snr_linear *= mag * mag;
    Ok(out)
}

/// One RIS taking part in a simultaneous transmission.
#[derive(Debug, Clone, Copy)]
pub struct RisBranch<'a> {
    pub panel: &'a RisPanel,
    pub h_sr: &'a [ComplexCoefficient],
    pub h_rd: &'a [ComplexCoefficient],
    pub pl: PathLossValue,
}

/// Aligned amplitude of one branch: `√(1/PL) |Γ| Σ α_i β_i`.
fn aligned_branch_amplitude(b: &RisBranch<'_>) -> Result<f64> {
    check_len(b.panel.element_count, b.h_sr.len())?;
    check_len(b.panel.element_count, b.h_rd.len())?;
    let sum: f64 = b
        .h_sr
        .iter()
        .zip(b.h_rd)
        .map(|(a, c)| a.amplitude * c.amplitude)
        .sum();
    Ok(sum * b.pl.amplitude_gain() * b.panel.gamma_mag())
}

/// Any number of RISs reflecting at once, each aligned so that all paths add
/// in phase at the destination.
pub fn snr_simultaneous(branches: &[RisBranch<'_>], p_t: f64, n0: f64) -> Result<LinkRealization> {
    check_powers(p_t, n0)?;
    if branches.is_empty() {
        return Err(Error::Empty("RIS branches"));
    }
    let mut amplitude = 0.0;
    let mut hops = Vec::with_capacity(2 * branches.len());
    for b in branches {
        amplitude += aligned_branch_amplitude(b)?;
        hops.push(b.h_sr.to_vec());
        hops.push(b.h_rd.to_vec());
    }
    Ok(LinkRealization {
        hops,
        composite_amplitude: amplitude,
        snr_linear: amplitude * amplitude * p_t / n0,
    })
}

/// Two simultaneous RISs; `second = None` means the second surface is absent
/// (zero elements).
pub fn snr_dual_simultaneous(
    first: RisBranch<'_>,
    second: Option<RisBranch<'_>>,
    p_t: f64,
    n0: f64,
) -> Result<LinkRealization> {
    match second {
        Some(s) => snr_simultaneous(&[first, s], p_t, n0),
        None => snr_simultaneous(&[first], p_t, n0),
    }
}

/// Square matrix of RIS1-element to RIS2-element coefficients, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    n: usize,
    data: Vec<ComplexCoefficient>,
}

impl CoefficientMatrix {
    pub fn new(n: usize, data: Vec<ComplexCoefficient>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("coefficient matrix"));
        }
        if data.len() != n * n {
            return Err(invalid(
                "h_matrix",
                format!("expected {n}x{n} = {} entries, found {}", n * n, data.len()),
            ));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<ComplexCoefficient>>) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(invalid(
                "h_matrix",
                format!("not square: {n} rows but a row of length {}", r.len()),
            ));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> ComplexCoefficient {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[ComplexCoefficient] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DoubleReflectionMode {
    /// Every product path co-phased, as if `φ⁽¹⁾_i + φ⁽²⁾_j = ϕ_ij` were
    /// achievable for all `(i, j)`.
    IdealAligned,
    /// Realizable per-surface phases.
    PerSidePhases { first: Vec<f64>, second: Vec<f64> },
}

/// `Σ_i Σ_j e^{jφ⁽¹⁾_i} β_ij e^{-jϕ_ij} e^{jφ⁽²⁾_j}`.
pub fn double_cascade_sum(h: &CoefficientMatrix, first: &[f64], second: &[f64]) -> Complex64 {
    let n = h.n;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let c = h.get(i, j);
            total += Complex64::from_polar(c.amplitude, first[i] + second[j] - c.phase);
        }
    }
    total
}

/// Source → RIS1 → RIS2 → destination with unit-amplitude LOS outer hops.
pub fn snr_double_reflected(
    panels: (&RisPanel, &RisPanel),
    h: &CoefficientMatrix,
    pl: PathLossValue,
    p_t: f64,
    n0: f64,
    mode: &DoubleReflectionMode,
) -> Result<LinkRealization> {
    check_powers(p_t, n0)?;
    check_len(panels.0.element_count, h.n)?;
    check_len(panels.1.element_count, h.n)?;
    let raw = match mode {
        DoubleReflectionMode::IdealAligned => h.data.iter().map(|c| c.amplitude).sum::<f64>(),
        DoubleReflectionMode::PerSidePhases { first, second } => {
            check_len(h.n, first.len())?;
            check_len(h.n, second.len())?;
            double_cascade_sum(h, first, second).norm()
        }
    };
    let amplitude = raw * pl.amplitude_gain() * panels.0.gamma_mag() * panels.1.gamma_mag();
    Ok(LinkRealization {
        hops: vec![h.data.clone()],
        composite_amplitude: amplitude,
        snr_linear: amplitude * amplitude * p_t / n0,
    })
}

/// Alternating coordinate ascent over the two per-surface phase vectors.
///
/// Each half-step sets one side's phases to co-phase the partial sums seen
/// through the other side, which can only increase `|Σ|`. Stops once the
/// relative gain in `|Σ|²` drops below `tol`.
pub fn optimize_double_phases(
    h: &CoefficientMatrix,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = h.n;
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut best = double_cascade_sum(h, &first, &second).norm_sqr();
    for _ in 0..max_iter {
        for i in 0..n {
            let c: Complex64 = (0..n)
                .map(|j| Complex64::from_polar(h.get(i, j).amplitude, second[j] - h.get(i, j).phase))
                .sum();
            first[i] = wrap_phase(-c.arg());
        }
        for j in 0..n {
            let c: Complex64 = (0..n)
                .map(|i| Complex64::from_polar(h.get(i, j).amplitude, first[i] - h.get(i, j).phase))
                .sum();
            second[j] = wrap_phase(-c.arg());
        }
        let now = double_cascade_sum(h, &first, &second).norm_sqr();
        let gain = (now - best) / best.max(f64::MIN_POSITIVE);
        best = now;
        if gain < tol {
            break;
        }
    }
    (first, second)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_ris_indoor(candidates: &[LinkRealization]) -> Result<(usize, &LinkRealization)> {
    let k = argmax_first(candidates.iter().map(|c| c.snr_linear))
        .ok_or(Error::Empty("selection candidates"))?;
    Ok((k, &candidates[k]))
}

/// Best `(k, l)` pair; ties go to the lexicographically smallest pair.
pub fn select_ris_outdoor(
    grid: &[Vec<LinkRealization>],
) -> Result<((usize, usize), &LinkRealization)> {
    let cols = grid.first().map_or(0, Vec::len);
    if cols == 0 {
        return Err(Error::Empty("selection grid"));
    }
    if let Some(r) = grid.iter().find(|r| r.len() != cols) {
        return Err(Error::LengthMismatch {
            expected: cols,
            found: r.len(),
        });
    }
    let idx = argmax_first(grid.iter().flatten().map(|c| c.snr_linear))
        .ok_or(Error::Empty("selection grid"))?;
    let (k, l) = (idx / cols, idx % cols);
    Ok(((k, l), &grid[k][l]))
}

pub fn snr_direct(link: ComplexCoefficient, pl: PathLossValue, p_t: f64, n0: f64) -> Result<f64> {
    check_powers(p_t, n0)?;
    Ok(link.amplitude * link.amplitude * pl.gain() * p_t / n0)
}
