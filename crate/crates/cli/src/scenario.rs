//! Scenario files: a sectioned `key = value` text format.
//!
//! ```text
//! # single RIS, BER sweep
//! [geometry]
//! topology = single-ris
//! d_sr = 25 m
//! d_rd = 75 m
//!
//! [ris]
//! elements = 64
//!
//! [channel]
//! k_factor = 10 db
//!
//! [pathloss]
//! law = radar-range
//! carrier = 2.4 ghz
//! gain_incident = 5 db
//! gain_reflect = 5 db
//!
//! [experiment]
//! kind = ber
//! snr_start = 95 db
//! snr_stop = 115 db
//! ```
//!
//! Physical quantities need a unit suffix (`m`, `ghz`, `dbm`, `w`, `db`,
//! `deg`). `[ris]` repeats once per surface, in id order (`R1, R2, ...`
//! then `Q1, Q2, ...`). Parsing collects every diagnostic before failing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use linksim_core::analysis::{
    clt_moments_double, clt_moments_simultaneous, clt_moments_single, db_to_linear,
};
use linksim_core::impairments::{PhaseImpairment, PhasePolicy};
use linksim_core::link::{ExplicitDistances, Point3, RisPanel, ScenarioGeometry, Topology};
use linksim_core::montecarlo::{ChannelModel, ModulationFamily, ModulationScheme, RatePlan, TrialPlan};
use linksim_core::pathloss::{PathLaw, PathLossSpec, PathLossValue};
use linksim_core::{CltAmplitudeModel, Error, LaguerrePolicy, RicianSpec};

use crate::table::digest_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Semantic,
}

/// One problem in a scenario file. `line == 0` refers to the file as a whole.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Semantic => "error",
        };
        if self.line == 0 {
            write!(f, "{kind}: {}", self.message)
        } else {
            write!(f, "{}:{}: {kind}: {}", self.line, self.column, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioErrors(pub Vec<Diagnostic>);

impl fmt::Display for ScenarioErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ScenarioErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    M,
    Ghz,
    Dbm,
    W,
    Db,
    Deg,
}

impl Unit {
    const ALL: [Unit; 6] = [Unit::M, Unit::Ghz, Unit::Dbm, Unit::W, Unit::Db, Unit::Deg];

    pub fn suffix(self) -> &'static str {
        match self {
            Unit::M => "m",
            Unit::Ghz => "ghz",
            Unit::Dbm => "dbm",
            Unit::W => "w",
            Unit::Db => "db",
            Unit::Deg => "deg",
        }
    }

    fn parse(s: &str) -> Option<Unit> {
        let lower = s.to_ascii_lowercase();
        Unit::ALL.into_iter().find(|u| u.suffix() == lower)
    }
}

/// A number with the unit it was written in; `unit: None` is a bare ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Option<Unit>,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Quantity {
            value,
            unit: Some(unit),
        }
    }

    /// Power in watts (`w` or `dbm`).
    pub fn watts(&self) -> f64 {
        match self.unit {
            Some(Unit::Dbm) => db_to_linear(self.value) * 1e-3,
            _ => self.value,
        }
    }

    /// Linear ratio (`db` or bare).
    pub fn ratio(&self) -> f64 {
        match self.unit {
            Some(Unit::Db) => db_to_linear(self.value),
            _ => self.value,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Some(u) => write!(f, "{} {}", self.value, u.suffix()),
            None => write!(f, "{}", self.value),
        }
    }
}

macro_rules! named_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const NAMES: &'static [&'static str] = &[$($text),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            pub fn from_name(s: &str) -> Option<Self> {
                match s { $($text => Some($name::$variant),)+ _ => None }
            }
        }
    };
}

named_enum!(ExperimentKind { Ber => "ber", Rate => "rate", Sep => "sep" });
named_enum!(DirectFading { None => "none", Rayleigh => "rayleigh", Rician => "rician" });
named_enum!(Axis { X => "x", Y => "y", Z => "z" });

#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySection {
    pub topology: Topology,
    /// Node coordinates in metres keyed by lower-case id (`s`, `d`, `r1`, `q1`).
    pub nodes: BTreeMap<String, [f64; 3]>,
    pub d_sd: Option<f64>,
    pub d_sr: Vec<f64>,
    pub d_rd: Vec<f64>,
    pub d_r1r2: Vec<Vec<f64>>,
    pub d_v: Option<f64>,
    pub d_h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisSection {
    pub elements: usize,
    pub gamma_mag_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelSection {
    pub k_factor: Option<Quantity>,
    pub direct_fading: Option<DirectFading>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathLossSection {
    pub law: PathLaw,
    pub carrier_ghz: Option<f64>,
    pub gain_incident_db: Option<f64>,
    pub gain_reflect_db: Option<f64>,
    pub efficiency: Option<f64>,
    pub d0_m: Option<f64>,
    pub pl0_db: Option<f64>,
    pub exponent: Option<f64>,
}

/// Phase impairments shared by every surface, applied in the order range
/// limit, quantization, von Mises error.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImpairmentSection {
    pub phase_min_deg: Option<f64>,
    pub phase_max_deg: Option<f64>,
    pub reflection_db: Option<f64>,
    pub quantization_bits: Option<u32>,
    pub von_mises_kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub modulation: Option<String>,
    pub snr_start_db: Option<f64>,
    pub snr_stop_db: Option<f64>,
    pub snr_step_db: Option<f64>,
    pub min_errors: Option<u64>,
    pub max_trials: Option<u64>,
    pub p_t: Option<Quantity>,
    pub n0: Option<Quantity>,
    pub realizations: Option<u64>,
    pub seed: Option<u64>,
    pub sweep_node: Option<String>,
    pub sweep_axis: Option<Axis>,
    pub sweep_start_m: Option<f64>,
    pub sweep_stop_m: Option<f64>,
    pub sweep_step_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: GeometrySection,
    pub ris: Vec<RisSection>,
    pub channel: Option<ChannelSection>,
    pub pathloss: PathLossSection,
    pub impairments: Option<ImpairmentSection>,
    pub experiment: ExperimentSection,
}

const SECTIONS: [&str; 6] = ["geometry", "ris", "channel", "pathloss", "impairments", "experiment"];

struct RawEntry {
    key: String,
    value: String,
    line: usize,
    key_col: usize,
    value_col: usize,
}

struct RawSection {
    name: String,
    line: usize,
    entries: Vec<RawEntry>,
}

fn column_of(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

fn lex(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<RawSection> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.find('#').map_or(raw, |p| &raw[..p]);
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let start = content.len() - content.trim_start().len();
        let col = column_of(raw, start);
        let syntax = |column: usize, message: String| Diagnostic {
            line: line_no,
            column,
            kind: DiagnosticKind::Syntax,
            message,
        };
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                diags.push(syntax(col, format!("unterminated section header `{trimmed}`")));
                continue;
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                diags.push(syntax(
                    col,
                    format!("unknown section [{name}]; expected one of {}", bracketed(&SECTIONS)),
                ));
            } else if name != "ris" && sections.iter().any(|s| s.name == name) {
                diags.push(syntax(col, format!("duplicate section [{name}]")));
            }
            sections.push(RawSection {
                name: name.to_owned(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = content.find('=') else {
            diags.push(syntax(col, format!("expected `key = value`, found `{trimmed}`")));
            continue;
        };
        let key = content[..eq].trim();
        let value_part = &content[eq + 1..];
        let value = value_part.trim();
        let value_start = eq + 1 + (value_part.len() - value_part.trim_start().len());
        if key.is_empty() {
            diags.push(syntax(col, "missing key before `=`".into()));
            continue;
        }
        if value.is_empty() {
            diags.push(syntax(column_of(raw, eq) + 1, format!("missing value for `{key}`")));
            continue;
        }
        let Some(section) = sections.last_mut() else {
            diags.push(syntax(col, format!("`{key}` appears before any [section]")));
            continue;
        };
        section.entries.push(RawEntry {
            key: key.to_owned(),
            value: value.to_owned(),
            line: line_no,
            key_col: col,
            value_col: column_of(raw, value_start),
        });
    }
    sections
}

fn bracketed(names: &[&str]) -> String {
    names.iter().map(|n| format!("[{n}]")).collect::<Vec<_>>().join(", ")
}

fn quoted(names: &[&str]) -> String {
    names.iter().map(|n| format!("`{n}`")).collect::<Vec<_>>().join(", ")
}

/// Error from a value parser: byte offset into the value and a message.
type ValueError = (usize, String);

fn parse_number(text: &str, offset: usize) -> Result<f64, ValueError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err((offset, format!("expected a number, found `{text}`"))),
    }
}

/// Splits a trailing alphabetic unit off `text`.
fn split_unit(text: &str) -> (&str, Option<&str>) {
    let t = text.trim_end();
    let letters = t.chars().rev().take_while(|c| c.is_ascii_alphabetic()).count();
    if letters == 0 || letters == t.len() {
        return (t, None);
    }
    let (num, unit) = t.split_at(t.len() - letters);
    (num.trim_end(), Some(unit))
}

fn unit_offset(text: &str, num: &str, unit: Option<&str>) -> usize {
    unit.map_or(num.len(), |u| text.trim_end().len() - u.len())
}

fn check_unit(unit: Option<&str>, allowed: &[Unit], bare_ok: bool, offset: usize) -> Result<Option<Unit>, ValueError> {
    let expected = || {
        let mut names: Vec<&str> = allowed.iter().map(|u| u.suffix()).collect();
        if bare_ok {
            names.push("<none>");
        }
        quoted(&names)
    };
    match unit {
        None if bare_ok => Ok(None),
        None => Err((offset, format!("missing unit suffix; expected {}", expected()))),
        Some(u) => match Unit::parse(u) {
            Some(parsed) if allowed.contains(&parsed) => Ok(Some(parsed)),
            Some(_) => Err((offset, format!("unit mismatch: found `{u}`, expected {}", expected()))),
            None => Err((offset, format!("unknown unit `{u}`; expected {}", expected()))),
        },
    }
}

fn parse_quantity(text: &str, offset: usize, allowed: &[Unit], bare_ok: bool) -> Result<Quantity, ValueError> {
    let (num, unit) = split_unit(text);
    let value = parse_number(num, offset)?;
    let unit = check_unit(unit, allowed, bare_ok, offset + unit_offset(text, num, unit))?;
    Ok(Quantity { value, unit })
}

fn parse_in(text: &str, offset: usize, unit: Unit) -> Result<f64, ValueError> {
    Ok(parse_quantity(text, offset, &[unit], false)?.value)
}

/// Comma-separated list of values in `unit`, with each item's offset.
fn parse_list(text: &str, offset: usize, unit: Unit) -> Result<Vec<f64>, ValueError> {
    let mut out = Vec::new();
    let mut pos = 0;
    for item in text.split(',') {
        let lead = item.len() - item.trim_start().len();
        out.push(parse_in(item.trim(), offset + pos + lead, unit)?);
        pos += item.len() + 1;
    }
    Ok(out)
}

fn parse_matrix(text: &str, offset: usize, unit: Unit) -> Result<Vec<Vec<f64>>, ValueError> {
    let mut out = Vec::new();
    let mut pos = 0;
    for row in text.split(';') {
        let lead = row.len() - row.trim_start().len();
        out.push(parse_list(row.trim(), offset + pos + lead, unit)?);
        pos += row.len() + 1;
    }
    Ok(out)
}

fn parse_point(text: &str, offset: usize) -> Result<[f64; 3], ValueError> {
    let (nums, unit) = split_unit(text);
    check_unit(unit, &[Unit::M], false, offset + unit_offset(text, nums, unit))?;
    let mut coords = Vec::new();
    let mut pos = 0;
    for tok in nums.split_whitespace() {
        let at = nums[pos..].find(tok).map_or(pos, |p| pos + p);
        coords.push(parse_number(tok, offset + at)?);
        pos = at + tok.len();
    }
    match coords.as_slice() {
        [x, y] => Ok([*x, *y, 0.0]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err((offset, format!("expected `x y [z] m`, found `{text}`"))),
    }
}

fn parse_uint<T: std::str::FromStr>(text: &str, offset: usize) -> Result<T, ValueError> {
    text.parse::<T>()
        .map_err(|_| (offset, format!("expected a non-negative integer, found `{text}`")))
}

fn parse_name<T>(text: &str, offset: usize, names: &[&str], f: impl Fn(&str) -> Option<T>) -> Result<T, ValueError> {
    f(text).ok_or_else(|| (offset, format!("unknown value `{text}`; expected one of {}", quoted(names))))
}

fn is_node_key(key: &str) -> bool {
    match key {
        "s" | "d" => true,
        _ => {
            let (head, tail) = key.split_at(1);
            (head == "r" || head == "q")
                && !tail.is_empty()
                && !tail.starts_with('0')
                && tail.bytes().all(|b| b.is_ascii_digit())
        }
    }
}

/// Canonical node order: `s`, `d`, then `r1..`, then `q1..`.
fn node_order(key: &str) -> (u8, usize) {
    match key {
        "s" => (0, 0),
        "d" => (1, 0),
        _ => (
            if key.starts_with('r') { 2 } else { 3 },
            key[1..].parse().unwrap_or(usize::MAX),
        ),
    }
}

/// Per-section reading state: remembers seen keys and pushes diagnostics.
struct Reader<'a> {
    section: &'a RawSection,
    diags: &'a mut Vec<Diagnostic>,
    seen: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a RawSection, diags: &'a mut Vec<Diagnostic>) -> Self {
        Reader {
            section,
            diags,
            seen: BTreeSet::new(),
        }
    }

    fn entries(&self) -> &'a [RawEntry] {
        &self.section.entries
    }

    /// Returns false (after reporting) for repeated keys.
    fn first_time(&mut self, e: &RawEntry) -> bool {
        if self.seen.insert(e.key.clone()) {
            return true;
        }
        self.diags.push(Diagnostic {
            line: e.line,
            column: e.key_col,
            kind: DiagnosticKind::Syntax,
            message: format!("duplicate key `{}` in [{}]", e.key, self.section.name),
        });
        false
    }

    fn value<T>(&mut self, e: &RawEntry, r: Result<T, ValueError>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err((offset, message)) => {
                let column = e.value_col + e.value[..offset.min(e.value.len())].chars().count();
                self.diags.push(Diagnostic {
                    line: e.line,
                    column,
                    kind: DiagnosticKind::Syntax,
                    message: format!("`{}`: {message}", e.key),
                });
                None
            }
        }
    }

    fn unknown(&mut self, e: &RawEntry, allowed: &[&str]) {
        self.diags.push(Diagnostic {
            line: e.line,
            column: e.key_col,
            kind: DiagnosticKind::Syntax,
            message: format!(
                "unknown key `{}` in [{}]; expected one of {}",
                e.key,
                self.section.name,
                quoted(allowed)
            ),
        });
    }

    fn semantic(&mut self, e: Option<&RawEntry>, message: String) {
        let (line, column) = e.map_or((self.section.line, 1), |e| (e.line, e.value_col));
        self.diags.push(Diagnostic {
            line,
            column,
            kind: DiagnosticKind::Semantic,
            message,
        });
    }

    fn require<T>(&mut self, v: Option<T>, key: &str, present: bool) -> Option<T> {
        if v.is_none() && !present {
            self.diags.push(Diagnostic {
                line: self.section.line,
                column: 1,
                kind: DiagnosticKind::Semantic,
                message: format!("missing required key `{key}` in [{}]", self.section.name),
            });
        }
        v
    }

    fn find(&self, key: &str) -> Option<&'a RawEntry> {
        self.section.entries.iter().find(|e| e.key == key)
    }
}

const GEOMETRY_KEYS: [&str; 11] = [
    "topology", "s", "d", "r<k>", "q<k>", "d_sd", "d_sr", "d_rd", "d_r1r2", "d_v", "d_h",
];

fn read_geometry(r: &mut Reader<'_>) -> Option<GeometrySection> {
    let mut topology = None;
    let mut g = GeometrySection {
        topology: Topology::SingleRis,
        nodes: BTreeMap::new(),
        d_sd: None,
        d_sr: Vec::new(),
        d_rd: Vec::new(),
        d_r1r2: Vec::new(),
        d_v: None,
        d_h: None,
    };
    for e in r.entries() {
        if !r.first_time(e) {
            continue;
        }
        let v = e.value.as_str();
        match e.key.as_str() {
            "topology" => {
                let names: Vec<&str> = Topology::ALL.iter().map(|t| t.name()).collect();
                topology = r.value(e, parse_name(v, 0, &names, Topology::from_name));
            }
            "d_sd" => g.d_sd = r.value(e, parse_in(v, 0, Unit::M)),
            "d_v" => g.d_v = r.value(e, parse_in(v, 0, Unit::M)),
            "d_h" => g.d_h = r.value(e, parse_in(v, 0, Unit::M)),
            "d_sr" => g.d_sr = r.value(e, parse_list(v, 0, Unit::M)).unwrap_or_default(),
            "d_rd" => g.d_rd = r.value(e, parse_list(v, 0, Unit::M)).unwrap_or_default(),
            "d_r1r2" => g.d_r1r2 = r.value(e, parse_matrix(v, 0, Unit::M)).unwrap_or_default(),
            k if is_node_key(k) => {
                if let Some(p) = r.value(e, parse_point(v, 0)) {
                    g.nodes.insert(k.to_owned(), p);
                }
            }
            _ => r.unknown(e, &GEOMETRY_KEYS),
        }
    }
    let present = r.find("topology").is_some();
    g.topology = r.require(topology, "topology", present)?;
    Some(g)
}

const RIS_KEYS: [&str; 2] = ["elements", "gamma_mag"];

fn read_ris(r: &mut Reader<'_>) -> Option<RisSection> {
    let mut elements = None;
    let mut gamma_mag_db = None;
    for e in r.entries() {
        if !r.first_time(e) {
            continue;
        }
        match e.key.as_str() {
            "elements" => {
                elements = r.value(e, parse_uint::<usize>(&e.value, 0));
                if elements == Some(0) {
                    r.semantic(Some(e), "`elements` must be >= 1".into());
                }
            }
            "gamma_mag" => {
                gamma_mag_db = r.value(e, parse_in(&e.value, 0, Unit::Db));
                if gamma_mag_db.is_some_and(|g| g > 0.0) {
                    r.semantic(Some(e), "`gamma_mag` must be <= 0 db for a passive surface".into());
                }
            }
            _ => r.unknown(e, &RIS_KEYS),
        }
    }
    let present = r.find("elements").is_some();
    Some(RisSection {
        elements: r.require(elements, "elements", present)?,
        gamma_mag_db,
    })
}

const CHANNEL_KEYS: [&str; 2] = ["k_factor", "direct_fading"];

fn read_channel(r: &mut Reader<'_>) -> ChannelSection {
    let mut c = ChannelSection::default();
    for e in r.entries() {
        if !r.first_time(e) {
            continue;
        }
        match e.key.as_str() {
            "k_factor" => {
                c.k_factor = r.value(e, parse_quantity(&e.value, 0, &[Unit::Db], true));
                if c.k_factor.is_some_and(|k| k.unit.is_none() && k.value < 0.0) {
                    r.semantic(Some(e), "a linear `k_factor` must be >= 0".into());
                }
            }
            "direct_fading" => {
                c.direct_fading = r.value(e, parse_name(&e.value, 0, DirectFading::NAMES, DirectFading::from_name))
            }
            _ => r.unknown(e, &CHANNEL_KEYS),
        }
    }
    c
}

const PATHLOSS_KEYS: [&str; 8] = [
    "law", "carrier", "gain_incident", "gain_reflect", "efficiency", "d0", "pl0", "exponent",
];

fn law_names() -> Vec<&'static str> {
    [
        PathLaw::RadarRangeRis,
        PathLaw::Umi3gppLos,
        PathLaw::Umi3gppNlos,
        PathLaw::UmiStreetCanyonLos,
        PathLaw::UmiStreetCanyonNlos,
        PathLaw::LogDistance,
    ]
    .iter()
    .map(|l| l.name())
    .collect()
}

fn read_pathloss(r: &mut Reader<'_>) -> Option<PathLossSection> {
    let mut law = None;
    let mut p = PathLossSection {
        law: PathLaw::RadarRangeRis,
        carrier_ghz: None,
        gain_incident_db: None,
        gain_reflect_db: None,
        efficiency: None,
        d0_m: None,
        pl0_db: None,
        exponent: None,
    };
    for e in r.entries() {
        if !r.first_time(e) {
            continue;
        }
        let v = e.value.as_str();
        match e.key.as_str() {
            "law" => law = r.value(e, parse_name(v, 0, &law_names(), PathLaw::from_name)),
            "carrier" => p.carrier_ghz = r.value(e, parse_in(v, 0, Unit::Ghz)),
            "gain_incident" => p.gain_incident_db = r.value(e, parse_in(v, 0, Unit::Db)),
            "gain_reflect" => p.gain_reflect_db = r.value(e, parse_in(v, 0, Unit::Db)),
            "efficiency" => p.efficiency = r.value(e, parse_number(v, 0)),
            "d0" => p.d0_m = r.value(e, parse_in(v, 0, Unit::M)),
            "pl0" => p.pl0_db = r.value(e, parse_in(v, 0, Unit::Db)),
            "exponent" => p.exponent = r.value(e, parse_number(v, 0)),
            _ => r.unknown(e, &PATHLOSS_KEYS),
        }
    }
    let present = r.find("law").is_some();
    p.law = r.require(law, "law", present)?;
    if p.law == PathLaw::LogDistance {
        for (key, v) in [("d0", p.d0_m), ("pl0", p.pl0_db), ("exponent", p.exponent)] {
            let present = r.find(key).is_some();
            r.require(v, key, present);
        }
    } else {
        let present = r.find("carrier").is_some();
        r.require(p.carrier_ghz, "carrier", present);
    }
    if let (Some((lo, hi)), Some(f)) = (p.law.band_ghz(), p.carrier_ghz) {
        if !(lo..=hi).contains(&f) {
            let e = r.find("carrier");
            r.semantic(
                e,
                format!(
                    "carrier {f} GHz is outside the {lo}–{hi} GHz band of the `{}` law",
                    p.law.name()
                ),
            );
        }
    }
    if p.efficiency.is_some_and(|x| !(x > 0.0 && x <= 1.0)) {
        let e = r.find("efficiency");
        r.semantic(e, "`efficiency` must be in (0, 1]".into());
    }
    Some(p)
}

const IMPAIRMENT_KEYS: [&str; 5] = [
    "phase_min", "phase_max", "reflection", "quantization_bits", "von_mises_kappa",
];

fn read_impairments(r: &mut Reader<'_>) -> ImpairmentSection {
    let mut s = ImpairmentSection::default();
    for e in r.entries() {
        if !r.first_time(e) {
            continue;
        }
        let v = e.value.as_str();
        match e.key.as_str() {
            "phase_min" => s.phase_min_deg = r.value(e, parse_in(v, 0, Unit::Deg)),
            "phase_max" => s.phase_max_deg = r.value(e, parse_in(v, 0, Unit::Deg)),
            "reflection" => s.reflection_db = r.value(e, parse_in(v, 0, Unit::Db)),
            "quantization_bits" => s.quantization_bits = r.value(e, parse_uint::<u32>(v, 0)),
            "von_mises_kappa" => s.von_mises_kappa = r.value(e, parse_number(v, 0)),
            _ => r.unknown(e, &IMPAIRMENT_KEYS),
        }
    }
    if s.phase_min_deg.is_some() != s.phase_max_deg.is_some() {
        r.semantic(None, "`phase_min` and `phase_max` must be given together".into());
    }
    if let Err(e) = s.policy() {
        r.semantic(None, e.to_string());
    }
    s
}

const EXPERIMENT_KEYS: [&str; 16] = [
    "kind", "modulation", "snr_start", "snr_stop", "snr_step", "min_errors", "max_trials", "p_t",
    "n0", "realizations", "seed", "sweep_node", "sweep_axis", "sweep_start", "sweep_stop",
    "sweep_step",
];

fn read_experiment(r: &mut Reader<'_>) -> Option<ExperimentSection> {
    let mut kind = None;
    let mut x = ExperimentSection {
        kind: ExperimentKind::Ber,
        modulation: None,
        snr_start_db: None,
        snr_stop_db: None,
        snr_step_db: None,
        min_errors: None,
        max_trials: None,
        p_t: None,
        n0: None,
        realizations: None,
        seed: None,
        sweep_node: None,
        sweep_axis: None,
        sweep_start_m: None,
        sweep_stop_m: None,
        sweep_step_m: None,
    };
    let power = [Unit::W, Unit::Dbm];
    for e in r.entries() {
        if !r.first_time(e) {
            continue;
        }
        let v = e.value.as_str();
        match e.key.as_str() {
            "kind" => kind = r.value(e, parse_name(v, 0, ExperimentKind::NAMES, ExperimentKind::from_name)),
            "modulation" => {
                if let Err(err) = ModulationScheme::from_name(v) {
                    r.semantic(Some(e), err.to_string());
                } else {
                    x.modulation = Some(v.to_owned());
                }
            }
            "snr_start" => x.snr_start_db = r.value(e, parse_in(v, 0, Unit::Db)),
            "snr_stop" => x.snr_stop_db = r.value(e, parse_in(v, 0, Unit::Db)),
            "snr_step" => x.snr_step_db = r.value(e, parse_in(v, 0, Unit::Db)),
            "min_errors" => x.min_errors = r.value(e, parse_uint(v, 0)),
            "max_trials" => x.max_trials = r.value(e, parse_uint(v, 0)),
            "p_t" => x.p_t = r.value(e, parse_quantity(v, 0, &power, false)),
            "n0" => x.n0 = r.value(e, parse_quantity(v, 0, &power, false)),
            "realizations" => x.realizations = r.value(e, parse_uint(v, 0)),
            "seed" => x.seed = r.value(e, parse_uint(v, 0)),
            "sweep_node" => {
                if is_node_key(v) {
                    x.sweep_node = Some(v.to_owned());
                } else {
                    r.semantic(Some(e), format!("`{v}` is not a node id (s, d, r<k>, q<k>)"));
                }
            }
            "sweep_axis" => x.sweep_axis = r.value(e, parse_name(v, 0, Axis::NAMES, Axis::from_name)),
            "sweep_start" => x.sweep_start_m = r.value(e, parse_in(v, 0, Unit::M)),
            "sweep_stop" => x.sweep_stop_m = r.value(e, parse_in(v, 0, Unit::M)),
            "sweep_step" => x.sweep_step_m = r.value(e, parse_in(v, 0, Unit::M)),
            _ => r.unknown(e, &EXPERIMENT_KEYS),
        }
    }
    let present = r.find("kind").is_some();
    x.kind = r.require(kind, "kind", present)?;
    let need = |r: &mut Reader<'_>, key: &str, has: bool| {
        let present = r.find(key).is_some();
        r.require(has.then_some(()), key, present);
    };
    match x.kind {
        ExperimentKind::Ber | ExperimentKind::Sep => {
            need(r, "snr_start", x.snr_start_db.is_some());
            need(r, "snr_stop", x.snr_stop_db.is_some());
            if r.find("sweep_node").is_some() {
                r.semantic(None, "position sweeps are only supported for `kind = rate`".into());
            }
        }
        ExperimentKind::Rate => {
            need(r, "p_t", x.p_t.is_some());
            need(r, "n0", x.n0.is_some());
        }
    }
    if let (Some(a), Some(b)) = (x.snr_start_db, x.snr_stop_db) {
        if a > b {
            r.semantic(r.find("snr_stop"), "`snr_stop` must not be below `snr_start`".into());
        }
    }
    if x.snr_step_db.is_some_and(|s| s <= 0.0) {
        r.semantic(r.find("snr_step"), "`snr_step` must be > 0".into());
    }
    for key in ["p_t", "n0"] {
        let q = if key == "p_t" { x.p_t } else { x.n0 };
        if q.is_some_and(|q| q.unit == Some(Unit::W) && q.value <= 0.0) {
            r.semantic(r.find(key), format!("`{key}` must be > 0 w"));
        }
    }
    let sweep_keys = [
        x.sweep_node.is_some(),
        x.sweep_axis.is_some(),
        x.sweep_start_m.is_some(),
        x.sweep_stop_m.is_some(),
        x.sweep_step_m.is_some(),
    ];
    if sweep_keys.iter().any(|&b| b) && !sweep_keys.iter().all(|&b| b) {
        r.semantic(
            None,
            "a sweep needs all of `sweep_node`, `sweep_axis`, `sweep_start`, `sweep_stop`, `sweep_step`".into(),
        );
    }
    if x.sweep_step_m.is_some_and(|s| s <= 0.0) {
        r.semantic(r.find("sweep_step"), "`sweep_step` must be > 0".into());
    }
    Some(x)
}

/// Parses and validates a scenario, reporting every problem found.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioErrors> {
    let mut diags = Vec::new();
    let sections = lex(text, &mut diags);
    let mut geometry = None;
    let mut ris = Vec::new();
    let mut channel = None;
    let mut pathloss = None;
    let mut impairments = None;
    let mut experiment = None;
    let mut ris_ok = true;
    for s in &sections {
        let mut r = Reader::new(s, &mut diags);
        match s.name.as_str() {
            "geometry" if geometry.is_none() => geometry = Some(read_geometry(&mut r)),
            "ris" => match read_ris(&mut r) {
                Some(x) => ris.push(x),
                None => ris_ok = false,
            },
            "channel" if channel.is_none() => channel = Some(read_channel(&mut r)),
            "pathloss" if pathloss.is_none() => pathloss = Some(read_pathloss(&mut r)),
            "impairments" if impairments.is_none() => impairments = Some(read_impairments(&mut r)),
            "experiment" if experiment.is_none() => experiment = Some(read_experiment(&mut r)),
            _ => {}
        }
    }
    for (name, present) in [
        ("geometry", geometry.is_some()),
        ("pathloss", pathloss.is_some()),
        ("experiment", experiment.is_some()),
    ] {
        if !present {
            diags.push(Diagnostic {
                line: 0,
                column: 0,
                kind: DiagnosticKind::Semantic,
                message: format!("missing section [{name}]"),
            });
        }
    }
    let scenario = match (geometry.flatten(), pathloss.flatten(), experiment.flatten()) {
        (Some(geometry), Some(pathloss), Some(experiment)) if ris_ok => Some(Scenario {
            geometry,
            ris,
            channel,
            pathloss,
            impairments,
            experiment,
        }),
        _ => None,
    };
    if let Some(s) = scenario.as_ref().filter(|_| diags.is_empty()) {
        diags.extend(s.check());
    }
    match scenario {
        Some(s) if diags.is_empty() => Ok(s),
        _ => {
            if diags.is_empty() {
                diags.push(Diagnostic {
                    line: 0,
                    column: 0,
                    kind: DiagnosticKind::Semantic,
                    message: "incomplete scenario".into(),
                });
            }
            Err(ScenarioErrors(diags))
        }
    }
}

fn whole_file(message: String) -> Diagnostic {
    Diagnostic {
        line: 0,
        column: 0,
        kind: DiagnosticKind::Semantic,
        message,
    }
}

impl ImpairmentSection {
    pub fn policy(&self) -> Result<PhasePolicy, Error> {
        let mut steps = Vec::new();
        if self.phase_min_deg.is_some() || self.phase_max_deg.is_some() || self.reflection_db.is_some() {
            steps.push(PhaseImpairment::RangeLimited {
                min_deg: self.phase_min_deg.unwrap_or(-180.0),
                max_deg: self.phase_max_deg.unwrap_or(180.0),
                gamma_mag_db: self.reflection_db.unwrap_or(0.0),
            });
        }
        if let Some(bits) = self.quantization_bits {
            steps.push(PhaseImpairment::Quantized { bits });
        }
        if let Some(kappa) = self.von_mises_kappa {
            steps.push(PhaseImpairment::VonMisesError { kappa });
        }
        PhasePolicy::new(steps)
    }
}

impl Scenario {
    /// Cross-section checks, run once every section parsed.
    fn check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let topology = self.geometry.topology;
        if topology == Topology::DirectOnly {
            if !self.ris.is_empty() {
                out.push(whole_file("direct-only scenarios take no [ris] sections".into()));
            }
        } else if self.ris.is_empty() {
            out.push(whole_file(format!("topology `{}` needs at least one [ris] section", topology.name())));
        }
        let rician_needed = topology != Topology::DirectOnly || self.direct_fading() == DirectFading::Rician;
        if rician_needed && self.channel.as_ref().and_then(|c| c.k_factor).is_none() {
            out.push(whole_file("missing required key `k_factor` in [channel]".into()));
        }
        if self.experiment.kind == ExperimentKind::Sep {
            if !matches!(
                topology,
                Topology::SingleRis | Topology::DualSimultaneous | Topology::DoubleReflected
            ) {
                out.push(whole_file(format!(
                    "`kind = sep` supports single-ris, dual-simultaneous and double-reflected, not `{}`",
                    topology.name()
                )));
            }
            if self.impairments.is_some() {
                out.push(whole_file("`kind = sep` assumes ideal phases; remove [impairments]".into()));
            }
            if let Ok(m) = self.modulation() {
                if m.family() != ModulationFamily::Psk {
                    out.push(whole_file("`kind = sep` supports PSK only".into()));
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        let built = match self.experiment.kind {
            ExperimentKind::Ber => self.trial_plan(0).map(|_| ()),
            ExperimentKind::Rate => self.rate_plan(0).map(|_| ()),
            ExperimentKind::Sep => self.clt_model().map(|_| ()),
        };
        if let Err(e) = built {
            out.push(whole_file(e.to_string()));
        }
        out
    }

    fn direct_fading(&self) -> DirectFading {
        self.channel
            .as_ref()
            .and_then(|c| c.direct_fading)
            .unwrap_or(DirectFading::None)
    }

    pub fn rician(&self) -> Result<RicianSpec, Error> {
        match self.channel.as_ref().and_then(|c| c.k_factor) {
            Some(k) => RicianSpec::new(k.ratio()),
            None => Ok(RicianSpec::rayleigh()),
        }
    }

    pub fn modulation(&self) -> Result<ModulationScheme, Error> {
        match &self.experiment.modulation {
            Some(name) => ModulationScheme::from_name(name),
            None => Ok(ModulationScheme::bpsk()),
        }
    }

    pub fn path_loss_spec(&self) -> Result<PathLossSpec, Error> {
        let p = &self.pathloss;
        let spec = match p.law {
            PathLaw::RadarRangeRis => PathLossSpec::radar_range(
                p.carrier_ghz.unwrap_or(f64::NAN),
                db_to_linear(p.gain_incident_db.unwrap_or(0.0)),
                db_to_linear(p.gain_reflect_db.unwrap_or(0.0)),
            )?,
            PathLaw::LogDistance => PathLossSpec::log_distance(
                p.d0_m.unwrap_or(f64::NAN),
                p.pl0_db.unwrap_or(f64::NAN),
                p.exponent.unwrap_or(f64::NAN),
            )?,
            law => PathLossSpec::umi(law, p.carrier_ghz.unwrap_or(f64::NAN))?,
        };
        match p.efficiency {
            Some(eff) => spec.with_efficiency(eff),
            None => Ok(spec),
        }
    }

    pub fn panels(&self) -> Result<Vec<RisPanel>, Error> {
        let policy = match &self.impairments {
            Some(s) => s.policy()?,
            None => PhasePolicy::ideal(),
        };
        self.ris
            .iter()
            .map(|r| {
                RisPanel::new(r.elements)?
                    .with_policy(policy.clone())
                    .with_gamma_mag_db(r.gamma_mag_db.unwrap_or(0.0))
            })
            .collect()
    }

    /// Geometry with the swept node coordinate set to `sweep`, if given.
    pub fn geometry_at(&self, sweep: Option<f64>) -> Result<ScenarioGeometry, Error> {
        let g = &self.geometry;
        let mut nodes = g.nodes.clone();
        if let (Some(value), Some(node), Some(axis)) =
            (sweep, &self.experiment.sweep_node, self.experiment.sweep_axis)
        {
            let p = nodes.get_mut(node).ok_or_else(|| Error::InvalidParameter {
                name: "sweep_node",
                reason: format!("node `{node}` has no coordinates in [geometry]"),
            })?;
            p[axis as usize] = value;
        }
        let mut out = ScenarioGeometry::new(g.topology);
        for (id, p) in &nodes {
            out = out.with_position(&id.to_ascii_uppercase(), Point3::new(p[0], p[1], p[2]));
        }
        let mut distances = ExplicitDistances {
            d_sd: g.d_sd,
            d_sr: g.d_sr.clone(),
            d_rd: g.d_rd.clone(),
            d_r1r2: g.d_r1r2.clone(),
            d_v: g.d_v,
            d_h: g.d_h,
        };
        // Ground distance, height and offset give the two hops of a single RIS.
        if let (Some(d_sd), Some(d_v), Some(d_h)) = (g.d_sd, g.d_v, g.d_h) {
            if distances.d_sr.is_empty() && distances.d_rd.is_empty() && !nodes.contains_key("r1") {
                distances.d_sr = vec![d_h.hypot(d_v)];
                distances.d_rd = vec![(d_sd - d_h).hypot(d_v)];
            }
        }
        out.distances = distances;
        Ok(out)
    }

    pub fn channel_at(&self, sweep: Option<f64>) -> Result<ChannelModel, Error> {
        let geometry = self.geometry_at(sweep)?;
        let rician = self.rician()?;
        let direct = match self.direct_fading() {
            DirectFading::None => None,
            DirectFading::Rayleigh => Some(RicianSpec::rayleigh()),
            DirectFading::Rician => Some(rician),
        };
        ChannelModel::from_geometry(&geometry, &self.panels()?, &self.path_loss_spec()?, rician, direct)
    }

    pub fn channel(&self) -> Result<ChannelModel, Error> {
        self.channel_at(None)
    }

    pub fn snr_grid_db(&self) -> Vec<f64> {
        let x = &self.experiment;
        let (Some(start), Some(stop)) = (x.snr_start_db, x.snr_stop_db) else {
            return Vec::new();
        };
        let step = x.snr_step_db.unwrap_or(1.0);
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    }

    pub fn sweep_values(&self) -> Option<Vec<f64>> {
        let x = &self.experiment;
        let (start, stop, step) = (x.sweep_start_m?, x.sweep_stop_m?, x.sweep_step_m?);
        let n = ((stop - start) / step + 1e-9).floor().max(0.0) as usize;
        Some((0..=n).map(|i| start + i as f64 * step).collect())
    }

    pub fn trial_plan(&self, seed: u64) -> Result<TrialPlan, Error> {
        let mut plan = TrialPlan::new(self.channel()?, self.modulation()?, self.snr_grid_db(), seed);
        if let Some(m) = self.experiment.min_errors {
            plan.min_errors = m;
        }
        if let Some(m) = self.experiment.max_trials {
            plan.max_trials = m;
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn rate_plan(&self, seed: u64) -> Result<RatePlan, Error> {
        let points = match self.sweep_values() {
            Some(values) => values
                .into_iter()
                .map(|v| Ok((v, self.channel_at(Some(v))?)))
                .collect::<Result<Vec<_>, Error>>()?,
            None => vec![(0.0, self.channel()?)],
        };
        let x = &self.experiment;
        let plan = RatePlan {
            points,
            p_t_w: x.p_t.map_or(f64::NAN, |q| q.watts()),
            n0_w: x.n0.map_or(f64::NAN, |q| q.watts()),
            realizations: x.realizations.unwrap_or(RatePlan::DEFAULT_REALIZATIONS),
            seed,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Gaussian amplitude model of the ideal link, for analytic SEP.
    pub fn clt_model(&self) -> Result<CltAmplitudeModel, Error> {
        let with_gamma = |pl: PathLossValue, panel: &RisPanel| pl.minus_db(panel.gamma_mag_db);
        match self.channel()? {
            ChannelModel::SingleRis { panel, pl, rician } => {
                clt_moments_single(panel.element_count(), with_gamma(pl, &panel), &rician)
            }
            ChannelModel::Simultaneous { surfaces, rician } => {
                let s: Vec<_> = surfaces
                    .iter()
                    .map(|(panel, pl)| (panel.element_count(), with_gamma(*pl, panel)))
                    .collect();
                clt_moments_simultaneous(&s, &rician, LaguerrePolicy::default())
            }
            ChannelModel::DoubleReflected { panels, pl, rician } => {
                let pl = with_gamma(with_gamma(pl, &panels.0), &panels.1);
                clt_moments_double(panels.0.element_count(), pl, &rician)
            }
            other => Err(Error::Plan(format!(
                "no analytic model for `{}`",
                other.topology().name()
            ))),
        }
    }

    /// Canonical text form; parsing it yields an equal scenario.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let kv = |out: &mut String, key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        let with_unit = |v: f64, u: Unit| format!("{v} {}", u.suffix());
        let list = |vs: &[f64]| vs.iter().map(|v| with_unit(*v, Unit::M)).collect::<Vec<_>>().join(", ");

        let g = &self.geometry;
        out.push_str("[geometry]\n");
        kv(&mut out, "topology", g.topology.name().into());
        let mut nodes: Vec<_> = g.nodes.iter().collect();
        nodes.sort_by_key(|(k, _)| node_order(k));
        for (k, p) in nodes {
            kv(&mut out, k, format!("{} {} {} m", p[0], p[1], p[2]));
        }
        if let Some(v) = g.d_sd {
            kv(&mut out, "d_sd", with_unit(v, Unit::M));
        }
        if !g.d_sr.is_empty() {
            kv(&mut out, "d_sr", list(&g.d_sr));
        }
        if !g.d_rd.is_empty() {
            kv(&mut out, "d_rd", list(&g.d_rd));
        }
        if !g.d_r1r2.is_empty() {
            let rows: Vec<String> = g.d_r1r2.iter().map(|r| list(r)).collect();
            kv(&mut out, "d_r1r2", rows.join("; "));
        }
        if let Some(v) = g.d_v {
            kv(&mut out, "d_v", with_unit(v, Unit::M));
        }
        if let Some(v) = g.d_h {
            kv(&mut out, "d_h", with_unit(v, Unit::M));
        }

        for r in &self.ris {
            out.push_str("\n[ris]\n");
            kv(&mut out, "elements", r.elements.to_string());
            if let Some(v) = r.gamma_mag_db {
                kv(&mut out, "gamma_mag", with_unit(v, Unit::Db));
            }
        }

        if let Some(c) = &self.channel {
            out.push_str("\n[channel]\n");
            if let Some(k) = c.k_factor {
                kv(&mut out, "k_factor", k.to_string());
            }
            if let Some(f) = c.direct_fading {
                kv(&mut out, "direct_fading", f.name().into());
            }
        }

        let p = &self.pathloss;
        out.push_str("\n[pathloss]\n");
        kv(&mut out, "law", p.law.name().into());
        let opt = |out: &mut String, key: &str, v: Option<f64>, u: Option<Unit>| {
            if let Some(v) = v {
                kv(out, key, u.map_or(v.to_string(), |u| with_unit(v, u)));
            }
        };
        opt(&mut out, "carrier", p.carrier_ghz, Some(Unit::Ghz));
        opt(&mut out, "gain_incident", p.gain_incident_db, Some(Unit::Db));
        opt(&mut out, "gain_reflect", p.gain_reflect_db, Some(Unit::Db));
        opt(&mut out, "efficiency", p.efficiency, None);
        opt(&mut out, "d0", p.d0_m, Some(Unit::M));
        opt(&mut out, "pl0", p.pl0_db, Some(Unit::Db));
        opt(&mut out, "exponent", p.exponent, None);

        if let Some(s) = &self.impairments {
            out.push_str("\n[impairments]\n");
            opt(&mut out, "phase_min", s.phase_min_deg, Some(Unit::Deg));
            opt(&mut out, "phase_max", s.phase_max_deg, Some(Unit::Deg));
            opt(&mut out, "reflection", s.reflection_db, Some(Unit::Db));
            if let Some(b) = s.quantization_bits {
                kv(&mut out, "quantization_bits", b.to_string());
            }
            opt(&mut out, "von_mises_kappa", s.von_mises_kappa, None);
        }

        let x = &self.experiment;
        out.push_str("\n[experiment]\n");
        kv(&mut out, "kind", x.kind.name().into());
        if let Some(m) = &x.modulation {
            kv(&mut out, "modulation", m.clone());
        }
        opt(&mut out, "snr_start", x.snr_start_db, Some(Unit::Db));
        opt(&mut out, "snr_stop", x.snr_stop_db, Some(Unit::Db));
        opt(&mut out, "snr_step", x.snr_step_db, Some(Unit::Db));
        for (key, v) in [
            ("min_errors", x.min_errors),
            ("max_trials", x.max_trials),
        ] {
            if let Some(v) = v {
                kv(&mut out, key, v.to_string());
            }
        }
        if let Some(q) = x.p_t {
            kv(&mut out, "p_t", q.to_string());
        }
        if let Some(q) = x.n0 {
            kv(&mut out, "n0", q.to_string());
        }
        for (key, v) in [("realizations", x.realizations), ("seed", x.seed)] {
            if let Some(v) = v {
                kv(&mut out, key, v.to_string());
            }
        }
        if let Some(n) = &x.sweep_node {
            kv(&mut out, "sweep_node", n.clone());
        }
        if let Some(a) = x.sweep_axis {
            kv(&mut out, "sweep_axis", a.name().into());
        }
        opt(&mut out, "sweep_start", x.sweep_start_m, Some(Unit::M));
        opt(&mut out, "sweep_stop", x.sweep_stop_m, Some(Unit::M));
        opt(&mut out, "sweep_step", x.sweep_step_m, Some(Unit::M));
        out
    }

    /// Digest of the canonical form: comments, spacing and key order do not
    /// matter, any field value does.
    pub fn hash(&self) -> String {
        digest_hex(&self.serialize())
    }
}
