//! Built-in experiments, one per reproduced figure or table.
//!
//! Every preset is a pure function of the seed: worker count and wall clock
//! never reach the numbers. Each curve becomes one [`ResultTable`].

use std::fmt;

use linksim_core::analysis::{
    awgn_bpsk_ber, clt_moments_double, clt_moments_dual, clt_moments_single, db_to_linear,
    linear_to_db, required_snr_db, sep_mpsk_at, sep_upper_bound,
};
use linksim_core::impairments::{PhaseImpairment, PhasePolicy};
use linksim_core::link::{Point3, RisPanel, ScenarioGeometry, Topology};
use linksim_core::montecarlo::{
    ris_path_loss, run_ber_with_workers, run_rate_with_workers, BerEstimate, ChannelModel,
    ModulationScheme, RatePlan, TrialPlan,
};
use linksim_core::pathloss::{fit_ple_anchored, ris_total_loss, PathLaw, PathLossSpec, PathLossValue, PleFit};
use linksim_core::special::bessel_ratio_i1_i0;
use linksim_core::{CltAmplitudeModel, Error, RicianSpec};
use serde_json::{json, Value as Json};

use crate::table::{digest_hex, Cell, ResultTable, RunOutput};

pub struct PresetInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const PRESETS: [PresetInfo; 13] = [
    PresetInfo { name: "fig2a", summary: "achievable rate vs RIS offset, 3GPP UMi at 2.4 GHz" },
    PresetInfo { name: "fig2b", summary: "achievable rate vs RIS offset, UMi street canyon at 28 GHz" },
    PresetInfo { name: "fig3", summary: "path loss of the RIS path vs direct LOS/NLOS" },
    PresetInfo { name: "fig4", summary: "total path loss with the RIS at 0.2 d_SD plus the NLOS link" },
    PresetInfo { name: "fig5", summary: "exact and bounded SEP for multi-RIS layouts, indoor and outdoor" },
    PresetInfo { name: "table1", summary: "path loss exponents of RIS channels" },
    PresetInfo { name: "table2", summary: "path loss exponents and gains of RIS-assisted channels" },
    PresetInfo { name: "fig7", summary: "single-RIS BPSK BER, Monte Carlo vs CLT analysis" },
    PresetInfo { name: "fig8", summary: "rate of two simultaneous RISs vs one, indoor 30 GHz" },
    PresetInfo { name: "fig9a", summary: "indoor RIS selection vs fixed RIS, 28 GHz" },
    PresetInfo { name: "fig9b", summary: "outdoor RIS-pair selection vs fixed pair, 2.4 GHz" },
    PresetInfo { name: "fig10a", summary: "BER with a limited phase range and lossy reflection" },
    PresetInfo { name: "fig10b", summary: "BER and mean SNR under von Mises phase errors" },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetError {
    Unknown(String),
    Core(Error),
}

impl fmt::Display for PresetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetError::Unknown(name) => {
                write!(f, "unknown preset `{name}` (see `ris-linksim list-presets`)")
            }
            PresetError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PresetError {}

impl From<Error> for PresetError {
    fn from(e: Error) -> Self {
        PresetError::Core(e)
    }
}

type Result<T> = std::result::Result<T, Error>;

pub fn run_preset(name: &str, cfg: RunConfig) -> std::result::Result<RunOutput, PresetError> {
    let (parameters, tables) = match name {
        "fig2a" => fig2(&UMI_BANDS[0], "fig2a", cfg)?,
        "fig2b" => fig2(&UMI_BANDS[1], "fig2b", cfg)?,
        "fig3" => fig3()?,
        "fig4" => fig4()?,
        "fig5" => fig5()?,
        "table1" => table1()?,
        "table2" => table2()?,
        "fig7" => fig7(cfg)?,
        "fig8" => fig8(cfg)?,
        "fig9a" => fig9a(cfg)?,
        "fig9b" => fig9b(cfg)?,
        "fig10a" => fig10a(cfg)?,
        "fig10b" => fig10b(cfg)?,
        other => return Err(PresetError::Unknown(other.to_owned())),
    };
    let canonical = json!({ "preset": name, "parameters": parameters }).to_string();
    Ok(RunOutput {
        name: name.to_owned(),
        seed: cfg.seed,
        scenario_hash: digest_hex(&canonical),
        parameters,
        tables,
    })
}

const P_T_W: f64 = 5.0;
const N0_DBM: f64 = -95.0;
const K_DB: f64 = 10.0;
const ELEMENT_GAIN_DB: f64 = 5.0;
const D_V_M: f64 = 10.0;
const PLE_D0_M: f64 = 10.0;
const PLE_GRID_POINTS: usize = 100;
const PLE_GRID_M: (f64, f64) = (10.0, 250.0);
const UMI_COUNTS: [usize; 3] = [64, 256, 1024];
const MIDWAY: f64 = 0.5;
const NEAR_SOURCE: f64 = 0.2;
const RATE_REALIZATIONS: u64 = 10_000;
const BER_TOP: f64 = 0.45;
const BER_FLOOR: f64 = 1e-6;
const BER_MAX_TRIALS: u64 = 1_000_000;
const SEP_FLOOR: f64 = 1e-12;

fn dbm_to_w(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

fn n0_w() -> f64 {
    dbm_to_w(N0_DBM)
}

fn k_factor() -> Result<RicianSpec> {
    RicianSpec::from_db(K_DB)
}

fn element_gain() -> f64 {
    db_to_linear(ELEMENT_GAIN_DB)
}

fn radar(carrier_ghz: f64) -> Result<PathLossSpec> {
    PathLossSpec::radar_range(carrier_ghz, element_gain(), element_gain())
}

/// `start, start + step, ...` up to `stop` inclusive.
fn sweep(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

fn ple_grid() -> Vec<f64> {
    let (lo, hi) = PLE_GRID_M;
    let last = (PLE_GRID_POINTS - 1) as f64;
    (0..PLE_GRID_POINTS).map(|i| lo + (hi - lo) * i as f64 / last).collect()
}

#[derive(Debug, Clone, Copy)]
struct UmiBand {
    tag: &'static str,
    carrier_ghz: f64,
    los: PathLaw,
    nlos: PathLaw,
}

const UMI_BANDS: [UmiBand; 2] = [
    UmiBand {
        tag: "a",
        carrier_ghz: 2.4,
        los: PathLaw::Umi3gppLos,
        nlos: PathLaw::Umi3gppNlos,
    },
    UmiBand {
        tag: "b",
        carrier_ghz: 28.0,
        los: PathLaw::UmiStreetCanyonLos,
        nlos: PathLaw::UmiStreetCanyonNlos,
    },
];

impl UmiBand {
    fn los(&self) -> Result<PathLossSpec> {
        PathLossSpec::umi(self.los, self.carrier_ghz)
    }

    fn nlos(&self) -> Result<PathLossSpec> {
        PathLossSpec::umi(self.nlos, self.carrier_ghz)
    }

    fn describe(&self) -> Json {
        json!({ "carrier_ghz": self.carrier_ghz, "los_law": self.los.name(), "nlos_law": self.nlos.name() })
    }
}

/// One element path with the RIS `d_V` above the S–D line at `fraction·d_SD`.
fn ris_element_loss(los: &PathLossSpec, d_sd: f64, fraction: f64) -> Result<PathLossValue> {
    let d_sr = (fraction * d_sd).hypot(D_V_M);
    let d_rd = ((1.0 - fraction) * d_sd).hypot(D_V_M);
    ris_path_loss(los, d_sr, d_rd)
}

fn ris_only_loss(los: &PathLossSpec, d_sd: f64, fraction: f64, n: usize) -> Result<PathLossValue> {
    ris_total_loss(&vec![ris_element_loss(los, d_sd, fraction)?; n])
}

/// RIS path and the NLOS direct link added coherently.
fn assisted_loss(band: &UmiBand, d_sd: f64, fraction: f64, n: usize) -> Result<PathLossValue> {
    let mut paths = vec![ris_element_loss(&band.los()?, d_sd, fraction)?; n];
    paths.push(band.nlos()?.loss(d_sd)?);
    ris_total_loss(&paths)
}

type Curve = Vec<(f64, f64)>;

fn loss_curve(f: impl Fn(f64) -> Result<PathLossValue>) -> Result<Curve> {
    ple_grid()
        .into_iter()
        .map(|d| Ok((d, f(d)?.loss_db())))
        .collect()
}

/// Exponent with the intercept pinned at the curve's own loss at `d0`.
fn anchored_fit(curve: &Curve) -> Result<PleFit> {
    debug_assert_eq!(curve[0].0, PLE_D0_M);
    fit_ple_anchored(curve, PLE_D0_M, curve[0].1)
}

fn loss_table(name: String, curve: &Curve) -> ResultTable {
    let mut t = ResultTable::new(name, &["d_sd_m", "path_loss_db"]);
    for &(d, l) in curve {
        t.push(vec![d.into(), l.into()]);
    }
    t
}

fn ple_parameters() -> Json {
    json!({
        "d_sd_grid_m": { "start": PLE_GRID_M.0, "stop": PLE_GRID_M.1, "points": PLE_GRID_POINTS, "spacing": "linear" },
        "d_v_m": D_V_M,
        "d0_m": PLE_D0_M,
        "fit": "least squares with intercept pinned at the loss at d0",
        "bands": UMI_BANDS.iter().map(UmiBand::describe).collect::<Vec<_>>(),
    })
}

fn table1() -> Result<(Json, Vec<ResultTable>)> {
    let mut t = ResultTable::new("table1", &["frequency_ghz", "configuration", "ple", "pl0_db"]);
    let n = UMI_COUNTS[0];
    for band in &UMI_BANDS {
        let (los, nlos) = (band.los()?, band.nlos()?);
        let curves = [
            ("nlos", loss_curve(|d| nlos.loss(d))?),
            ("los", loss_curve(|d| los.loss(d))?),
            ("ris_midway", loss_curve(|d| ris_only_loss(&los, d, MIDWAY, n))?),
            ("ris_near_source", loss_curve(|d| ris_only_loss(&los, d, NEAR_SOURCE, n))?),
        ];
        for (label, curve) in &curves {
            let fit = anchored_fit(curve)?;
            t.push(vec![band.carrier_ghz.into(), (*label).into(), fit.exponent.into(), fit.pl0_db.into()]);
        }
    }
    let mut params = ple_parameters();
    params["ris_elements"] = json!(n);
    params["ris_fractions"] = json!({ "ris_midway": MIDWAY, "ris_near_source": NEAR_SOURCE });
    Ok((params, vec![t]))
}

/// Largest reduction of the NLOS loss over the grid.
fn max_gain_db(nlos: &Curve, assisted: &Curve) -> f64 {
    nlos.iter()
        .zip(assisted)
        .map(|(a, b)| a.1 - b.1)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn table2() -> Result<(Json, Vec<ResultTable>)> {
    let mut t = ResultTable::new(
        "table2",
        &["frequency_ghz", "elements", "delta_pl_db", "ple", "pl0_db"],
    );
    for band in &UMI_BANDS {
        let nlos_spec = band.nlos()?;
        let nlos = loss_curve(|d| nlos_spec.loss(d))?;
        for &n in &UMI_COUNTS {
            let assisted = loss_curve(|d| assisted_loss(band, d, NEAR_SOURCE, n))?;
            let fit = anchored_fit(&assisted)?;
            t.push(vec![
                band.carrier_ghz.into(),
                (n as u64).into(),
                max_gain_db(&nlos, &assisted).into(),
                fit.exponent.into(),
                fit.pl0_db.into(),
            ]);
        }
    }
    let mut params = ple_parameters();
    params["ris_fraction"] = json!(NEAR_SOURCE);
    params["ris_elements"] = json!(UMI_COUNTS);
    params["delta_pl"] = json!("maximum over the grid of NLOS loss minus assisted loss");
    Ok((params, vec![t]))
}

fn fig3() -> Result<(Json, Vec<ResultTable>)> {
    let mut tables = Vec::new();
    for band in &UMI_BANDS {
        let (los, nlos) = (band.los()?, band.nlos()?);
        let p = format!("fig3{}", band.tag);
        tables.push(loss_table(format!("{p}_nlos"), &loss_curve(|d| nlos.loss(d))?));
        tables.push(loss_table(format!("{p}_los"), &loss_curve(|d| los.loss(d))?));
        for (label, fraction) in [("mid", MIDWAY), ("near", NEAR_SOURCE)] {
            for &n in &UMI_COUNTS {
                let curve = loss_curve(|d| ris_only_loss(&los, d, fraction, n))?;
                tables.push(loss_table(format!("{p}_ris_{label}_n{n}"), &curve));
            }
        }
    }
    let mut params = ple_parameters();
    params["ris_elements"] = json!(UMI_COUNTS);
    params["ris_fractions"] = json!({ "mid": MIDWAY, "near": NEAR_SOURCE });
    Ok((params, tables))
}

fn fig4() -> Result<(Json, Vec<ResultTable>)> {
    let mut tables = Vec::new();
    for band in &UMI_BANDS {
        let (los, nlos) = (band.los()?, band.nlos()?);
        let p = format!("fig4{}", band.tag);
        tables.push(loss_table(format!("{p}_nlos"), &loss_curve(|d| nlos.loss(d))?));
        tables.push(loss_table(format!("{p}_los"), &loss_curve(|d| los.loss(d))?));
        for &n in &UMI_COUNTS {
            let curve = loss_curve(|d| assisted_loss(band, d, NEAR_SOURCE, n))?;
            tables.push(loss_table(format!("{p}_assisted_n{n}"), &curve));
        }
    }
    let mut params = ple_parameters();
    params["ris_elements"] = json!(UMI_COUNTS);
    params["ris_fraction"] = json!(NEAR_SOURCE);
    Ok((params, tables))
}

fn rate_table(name: String, x_column: &str, xs: &[f64], rates: &[f64], snrs: Option<&[f64]>) -> ResultTable {
    let mut cols = vec![x_column, "rate_bps_hz"];
    if snrs.is_some() {
        cols.push("mean_snr_db");
    }
    let mut t = ResultTable::new(name, &cols);
    for (i, (&x, &r)) in xs.iter().zip(rates).enumerate() {
        let mut row: Vec<Cell> = vec![x.into(), r.into()];
        if let Some(s) = snrs {
            row.push(linear_to_db(s[i]).into());
        }
        t.push(row);
    }
    t
}

fn rate_plan(points: Vec<(f64, ChannelModel)>, realizations: u64, seed: u64) -> RatePlan {
    RatePlan {
        points,
        p_t_w: P_T_W,
        n0_w: n0_w(),
        realizations,
        seed,
    }
}

fn budget_parameters() -> Json {
    json!({ "p_t_w": P_T_W, "n0_dbm": N0_DBM, "rician_k_db": K_DB })
}

fn fig2(band: &UmiBand, name: &str, cfg: RunConfig) -> Result<(Json, Vec<ResultTable>)> {
    let (los, nlos) = (band.los()?, band.nlos()?);
    let rician = k_factor()?;
    let d_h = sweep(5.0, 100.0, 5.0);
    let d_sd = |h: f64| 4.0 * h;
    let mut tables = Vec::new();
    let mut run = |label: String, channel: &dyn Fn(f64) -> Result<ChannelModel>| -> Result<()> {
        let points = d_h.iter().map(|&h| Ok((h, channel(h)?))).collect::<Result<_>>()?;
        let out = run_rate_with_workers(&rate_plan(points, RATE_REALIZATIONS, cfg.seed), cfg.workers)?;
        let rates: Vec<f64> = out.iter().map(|p| p.mean_rate).collect();
        let snrs: Vec<f64> = out.iter().map(|p| p.mean_snr).collect();
        let mut t = ResultTable::new(format!("{name}_{label}"), &["d_h_m", "d_sd_m", "rate_bps_hz", "mean_snr_db"]);
        for (i, &h) in d_h.iter().enumerate() {
            t.push(vec![h.into(), d_sd(h).into(), rates[i].into(), linear_to_db(snrs[i]).into()]);
        }
        tables.push(t);
        Ok(())
    };
    run("direct_nlos".into(), &|h| {
        Ok(ChannelModel::Direct {
            pl: nlos.loss(d_sd(h))?,
            fading: Some(RicianSpec::rayleigh()),
        })
    })?;
    run("direct_los".into(), &|h| {
        Ok(ChannelModel::Direct {
            pl: los.loss(d_sd(h))?,
            fading: Some(rician),
        })
    })?;
    for &n in &UMI_COUNTS {
        run(format!("ris_n{n}"), &|h| {
            let pl = ris_path_loss(&los, h.hypot(D_V_M), (d_sd(h) - h).hypot(D_V_M))?;
            Ok(ChannelModel::SingleRis {
                panel: RisPanel::new(n)?,
                pl,
                rician,
            })
        })?;
    }
    let params = json!({
        "band": band.describe(),
        "d_h_m": { "start": 5.0, "stop": 100.0, "step": 5.0 },
        "d_sd": "4 d_h (tracks the sweep)",
        "d_v_m": D_V_M,
        "ris_elements": UMI_COUNTS,
        "direct_nlos_fading": "rayleigh",
        "direct_los_fading": "rician",
        "budget": budget_parameters(),
        "realizations": RATE_REALIZATIONS,
        "seed": cfg.seed,
    });
    Ok((params, tables))
}

fn sep_table(name: String, points: &[(f64, f64)]) -> ResultTable {
    let mut t = ResultTable::new(name, &["snr_db", "sep"]);
    for &(db, p) in points {
        t.push(vec![db.into(), p.into()]);
    }
    t
}

/// Evaluates `f` along `grid`, stopping after the first value below the floor.
fn until_floor(grid: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for &db in grid {
        let v = f(db_to_linear(db))?;
        out.push((db, v));
        if v < SEP_FLOOR {
            break;
        }
    }
    Ok(out)
}

fn sep_pair(prefix: &str, model: &CltAmplitudeModel, grid: &[f64]) -> Result<[ResultTable; 2]> {
    let exact = until_floor(grid, |rho| sep_mpsk_at(model, 2, rho))?;
    let bound = until_floor(grid, |rho| sep_upper_bound(model, rho))?;
    Ok([
        sep_table(format!("{prefix}_exact"), &exact),
        sep_table(format!("{prefix}_bound"), &bound),
    ])
}

const FIG5_COUNTS: [usize; 3] = [64, 256, 1024];
const FIG5_GRID_DB: (f64, f64, f64) = (80.0, 180.0, 1.0);

fn fig5() -> Result<(Json, Vec<ResultTable>)> {
    let rician = k_factor()?;
    let grid = sweep(FIG5_GRID_DB.0, FIG5_GRID_DB.1, FIG5_GRID_DB.2);
    let mut tables = Vec::new();
    let reference = |spec: PathLossSpec, d: f64| -> Result<Vec<(f64, f64)>> {
        let gain = spec.loss(d)?.gain();
        until_floor(&grid, |rho| Ok(awgn_bpsk_ber(rho * gain)))
    };

    let indoor = radar(30.0)?;
    let indoor_los = PathLossSpec::umi(PathLaw::UmiStreetCanyonLos, 30.0)?;
    tables.push(sep_table("fig5a_los_reference".into(), &reference(indoor_los, 50.0)?));
    let single = ris_path_loss(&indoor, 20.0, 40.0)?;
    let dual = (ris_path_loss(&indoor, 10.0, 40.0)?, ris_path_loss(&indoor, 15.0, 35.0)?);
    for &n in &FIG5_COUNTS {
        let m = clt_moments_single(n, single, &rician)?;
        tables.extend(sep_pair(&format!("fig5a_single_n{n}"), &m, &grid)?);
        let m = clt_moments_dual(n, n, dual.0, dual.1, &rician)?;
        tables.extend(sep_pair(&format!("fig5a_dual_n{n}"), &m, &grid)?);
    }

    let outdoor = radar(2.4)?;
    let outdoor_los = PathLossSpec::umi(PathLaw::Umi3gppLos, 2.4)?;
    tables.push(sep_table("fig5b_los_reference".into(), &reference(outdoor_los, 245.0)?));
    let single = ris_path_loss(&outdoor, 75.0, 165.0)?;
    let double = linksim_core::montecarlo::double_path_loss(&outdoor, 20.0, 200.0, 20.0)?;
    for &n in &FIG5_COUNTS {
        let m = clt_moments_single(n, single, &rician)?;
        tables.extend(sep_pair(&format!("fig5b_single_n{n}"), &m, &grid)?);
        let m = clt_moments_double(n, double, &rician)?;
        tables.extend(sep_pair(&format!("fig5b_double_n{n}"), &m, &grid)?);
    }

    let params = json!({
        "modulation": "bpsk",
        "snr_db": { "start": FIG5_GRID_DB.0, "stop": FIG5_GRID_DB.1, "step": FIG5_GRID_DB.2 },
        "sep_floor": SEP_FLOOR,
        "rician_k_db": K_DB,
        "element_gain_dbi": ELEMENT_GAIN_DB,
        "ris_elements": FIG5_COUNTS,
        "indoor": {
            "carrier_ghz": 30.0,
            "reference": { "law": PathLaw::UmiStreetCanyonLos.name(), "d_sd_m": 50.0, "fading": "none" },
            "single": { "d_sr_m": 20.0, "d_rd_m": 40.0 },
            "dual": { "d_sr_m": [10.0, 15.0], "d_rd_m": [40.0, 35.0] },
        },
        "outdoor": {
            "carrier_ghz": 2.4,
            "reference": { "law": PathLaw::Umi3gppLos.name(), "d_sd_m": 245.0, "fading": "none" },
            "single": { "d_sr_m": 75.0, "d_rd_m": 165.0 },
            "double": { "d_sr1_m": 20.0, "d_r1r2_m": 200.0, "d_r2d_m": 20.0 },
        },
    });
    Ok((params, tables))
}

pub const BER_COLUMNS: [&str; 7] = ["snr_db", "trials", "bits", "errors", "ber", "ci95_low", "ci95_high"];

fn ber_table(name: String, curve: &[BerEstimate]) -> ResultTable {
    let mut t = ResultTable::new(name, &BER_COLUMNS);
    for e in curve {
        t.push(vec![
            e.snr_db.into(),
            e.trials.into(),
            e.bits.into(),
            e.errors.into(),
            e.ber.into(),
            e.ci95_low.into(),
            e.ci95_high.into(),
        ]);
    }
    t
}

/// Whole-dB window of `p_t/N₀` over which the analytic BER falls from
/// [`BER_TOP`] to [`BER_FLOOR`].
fn ber_window(model: &CltAmplitudeModel) -> Result<(f64, f64)> {
    Ok((
        required_snr_db(model, BER_TOP)?.floor(),
        required_snr_db(model, BER_FLOOR)?.ceil(),
    ))
}

fn ber_plan(channel: ChannelModel, grid: Vec<f64>, seed: u64) -> TrialPlan {
    let mut plan = TrialPlan::new(channel, ModulationScheme::bpsk(), grid, seed);
    plan.max_trials = BER_MAX_TRIALS;
    plan
}

fn ber_parameters() -> Json {
    json!({
        "modulation": "bpsk",
        "snr_step_db": 1.0,
        "snr_window": { "from_analytic_ber": BER_TOP, "to_analytic_ber": BER_FLOOR },
        "min_errors": TrialPlan::DEFAULT_MIN_ERRORS,
        "max_trials": BER_MAX_TRIALS,
    })
}

pub const FIG7_COUNTS: [usize; 3] = [64, 128, 256];
pub const FIG7_LINK_M: (f64, f64) = (25.0, 75.0);
const FIG7_CARRIER_GHZ: f64 = 2.4;

/// Loss of one element path in the single-RIS BER experiments.
pub fn fig7_path_loss() -> Result<PathLossValue> {
    ris_path_loss(&radar(FIG7_CARRIER_GHZ)?, FIG7_LINK_M.0, FIG7_LINK_M.1)
}

fn fig7(cfg: RunConfig) -> Result<(Json, Vec<ResultTable>)> {
    let rician = k_factor()?;
    let pl = fig7_path_loss()?;
    let mut tables = Vec::new();
    let mut windows = Vec::new();
    for &n in &FIG7_COUNTS {
        let model = clt_moments_single(n, pl, &rician)?;
        let (lo, hi) = ber_window(&model)?;
        windows.push(json!({ "elements": n, "start_db": lo, "stop_db": hi }));
        let grid = sweep(lo, hi, 1.0);
        let channel = ChannelModel::SingleRis {
            panel: RisPanel::new(n)?,
            pl,
            rician,
        };
        let mc = run_ber_with_workers(&ber_plan(channel, grid.clone(), cfg.seed), cfg.workers)?;
        tables.push(ber_table(format!("fig7_mc_n{n}"), &mc));
        let analytic = grid
            .iter()
            .map(|&db| Ok((db, sep_mpsk_at(&model, 2, db_to_linear(db))?)))
            .collect::<Result<Vec<_>>>()?;
        let mut t = ResultTable::new(format!("fig7_analytic_n{n}"), &["snr_db", "ber"]);
        for (db, p) in analytic {
            t.push(vec![db.into(), p.into()]);
        }
        tables.push(t);
    }
    let mut params = ber_parameters();
    params["carrier_ghz"] = json!(FIG7_CARRIER_GHZ);
    params["d_sr_m"] = json!(FIG7_LINK_M.0);
    params["d_rd_m"] = json!(FIG7_LINK_M.1);
    params["element_gain_dbi"] = json!(ELEMENT_GAIN_DB);
    params["rician_k_db"] = json!(K_DB);
    params["path_loss_db"] = json!(pl.loss_db());
    params["ris_elements"] = json!(FIG7_COUNTS);
    params["snr_windows"] = json!(windows);
    params["seed"] = json!(cfg.seed);
    Ok((params, tables))
}

fn indoor_geometry(topology: Topology, ris: &[Point3], d_x: f64) -> ScenarioGeometry {
    let mut g = ScenarioGeometry::new(topology)
        .with_position("S", Point3::new(5.0, 5.0, 0.0))
        .with_position("D", Point3::new(d_x, 40.0, 0.0));
    for (k, p) in ris.iter().enumerate() {
        g = g.with_position(&format!("R{}", k + 1), *p);
    }
    g
}

fn panels(n: usize, count: usize) -> Result<Vec<RisPanel>> {
    (0..count).map(|_| RisPanel::new(n)).collect()
}

const FIG8_COUNTS: [usize; 2] = [64, 256];
const FIG8_RIS: [Point3; 2] = [Point3::new(20.0, 0.0, 10.0), Point3::new(0.0, 25.0, 10.0)];

fn fig8(cfg: RunConfig) -> Result<(Json, Vec<ResultTable>)> {
    let spec = radar(30.0)?;
    let rician = k_factor()?;
    let d_x = sweep(0.0, 50.0, 2.5);
    let mut tables = Vec::new();
    for &n in &FIG8_COUNTS {
        for (label, topology, ris) in [
            ("dual", Topology::DualSimultaneous, &FIG8_RIS[..]),
            ("single", Topology::SingleRis, &FIG8_RIS[..1]),
        ] {
            let points = d_x
                .iter()
                .map(|&x| {
                    let g = indoor_geometry(topology, ris, x);
                    Ok((x, ChannelModel::from_geometry(&g, &panels(n, ris.len())?, &spec, rician, None)?))
                })
                .collect::<Result<_>>()?;
            let out = run_rate_with_workers(&rate_plan(points, RATE_REALIZATIONS, cfg.seed), cfg.workers)?;
            let rates: Vec<f64> = out.iter().map(|p| p.mean_rate).collect();
            let snrs: Vec<f64> = out.iter().map(|p| p.mean_snr).collect();
            tables.push(rate_table(format!("fig8_{label}_n{n}"), "d_x_m", &d_x, &rates, Some(&snrs)));
        }
    }
    let params = json!({
        "carrier_ghz": 30.0,
        "law": PathLaw::RadarRangeRis.name(),
        "element_gain_dbi": ELEMENT_GAIN_DB,
        "source": [5.0, 5.0, 0.0],
        "user": "(d_x, 40, 0)",
        "d_x_m": { "start": 0.0, "stop": 50.0, "step": 2.5 },
        "ris": FIG8_RIS.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>(),
        "ris_elements": FIG8_COUNTS,
        "single": "first RIS only",
        "budget": budget_parameters(),
        "realizations": RATE_REALIZATIONS,
        "seed": cfg.seed,
    });
    Ok((params, tables))
}

pub const FIG9A_COUNTS: [usize; 2] = [64, 128];
const FIG9A_RIS: [Point3; 3] = [
    Point3::new(0.0, 35.0, 10.0),
    Point3::new(20.0, 0.0, 10.0),
    Point3::new(0.0, 15.0, 10.0),
];

/// Writes the selected-path table followed by one table per fixed path.
fn selection_tables(
    prefix: &str,
    labels: &[String],
    d_x: &[f64],
    plan: &RatePlan,
    workers: usize,
) -> Result<Vec<ResultTable>> {
    let out = run_rate_with_workers(plan, workers)?;
    let mut tables = Vec::new();
    let rates: Vec<f64> = out.iter().map(|p| p.mean_rate).collect();
    tables.push(rate_table(format!("{prefix}_selection"), "d_x_m", d_x, &rates, None));
    for (k, label) in labels.iter().enumerate() {
        let fixed: Vec<f64> = out.iter().map(|p| p.per_candidate_rate[k]).collect();
        tables.push(rate_table(format!("{prefix}_fixed_{label}"), "d_x_m", d_x, &fixed, None));
    }
    Ok(tables)
}

fn fig9a(cfg: RunConfig) -> Result<(Json, Vec<ResultTable>)> {
    let spec = radar(28.0)?;
    let rician = k_factor()?;
    let d_x = sweep(0.0, 50.0, 2.5);
    let labels: Vec<String> = (1..=FIG9A_RIS.len()).map(|k| format!("r{k}")).collect();
    let mut tables = Vec::new();
    for &n in &FIG9A_COUNTS {
        let points = d_x
            .iter()
            .map(|&x| {
                let g = indoor_geometry(Topology::SelectionIndoor, &FIG9A_RIS, x);
                Ok((x, ChannelModel::from_geometry(&g, &panels(n, FIG9A_RIS.len())?, &spec, rician, None)?))
            })
            .collect::<Result<_>>()?;
        let plan = rate_plan(points, RATE_REALIZATIONS, cfg.seed);
        let labelled: Vec<String> = labels.iter().map(|l| format!("{l}_n{n}")).collect();
        let mut t = selection_tables("fig9a", &labelled, &d_x, &plan, cfg.workers)?;
        t[0].name = format!("fig9a_selection_n{n}");
        tables.extend(t);
    }
    let params = json!({
        "carrier_ghz": 28.0,
        "law": PathLaw::RadarRangeRis.name(),
        "element_gain_dbi": ELEMENT_GAIN_DB,
        "source": [5.0, 5.0, 0.0],
        "user": "(d_x, 40, 0)",
        "d_x_m": { "start": 0.0, "stop": 50.0, "step": 2.5 },
        "ris": FIG9A_RIS.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>(),
        "ris_elements": FIG9A_COUNTS,
        "budget": budget_parameters(),
        "realizations": RATE_REALIZATIONS,
        "seed": cfg.seed,
    });
    Ok((params, tables))
}

pub const FIG9B_COUNTS: [usize; 2] = [16, 32];
const FIG9B_NEAR: [Point3; 2] = [Point3::planar(0.0, 15.0), Point3::planar(20.0, 10.0)];
const FIG9B_FAR: [Point3; 2] = [Point3::planar(5.0, 215.0), Point3::planar(25.0, 220.0)];

fn fig9b(cfg: RunConfig) -> Result<(Json, Vec<ResultTable>)> {
    let spec = radar(2.4)?;
    let rician = k_factor()?;
    let d_x = sweep(-10.0, 40.0, 2.5);
    let mut labels = Vec::new();
    for k in 1..=FIG9B_NEAR.len() {
        for l in 1..=FIG9B_FAR.len() {
            labels.push(format!("r{k}q{l}"));
        }
    }
    let mut tables = Vec::new();
    for &n in &FIG9B_COUNTS {
        let points = d_x
            .iter()
            .map(|&x| {
                let mut g = ScenarioGeometry::new(Topology::SelectionOutdoor)
                    .with_position("S", Point3::planar(0.0, 0.0))
                    .with_position("D", Point3::planar(x, 230.0));
                for (k, p) in FIG9B_NEAR.iter().enumerate() {
                    g = g.with_position(&format!("R{}", k + 1), *p);
                }
                for (l, p) in FIG9B_FAR.iter().enumerate() {
                    g = g.with_position(&format!("Q{}", l + 1), *p);
                }
                let count = FIG9B_NEAR.len() + FIG9B_FAR.len();
                Ok((x, ChannelModel::from_geometry(&g, &panels(n, count)?, &spec, rician, None)?))
            })
            .collect::<Result<_>>()?;
        let plan = rate_plan(points, RATE_REALIZATIONS, cfg.seed);
        let labelled: Vec<String> = labels.iter().map(|l| format!("{l}_n{n}")).collect();
        let mut t = selection_tables("fig9b", &labelled, &d_x, &plan, cfg.workers)?;
        t[0].name = format!("fig9b_selection_n{n}");
        tables.extend(t);
    }
    let params = json!({
        "carrier_ghz": 2.4,
        "law": PathLaw::RadarRangeRis.name(),
        "element_gain_dbi": ELEMENT_GAIN_DB,
        "source": [0.0, 0.0],
        "user": "(d_x, 230)",
        "d_x_m": { "start": -10.0, "stop": 40.0, "step": 2.5 },
        "source_side_ris": FIG9B_NEAR.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        "destination_side_ris": FIG9B_FAR.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        "ris_elements": FIG9B_COUNTS,
        "budget": budget_parameters(),
        "realizations": RATE_REALIZATIONS,
        "seed": cfg.seed,
    });
    Ok((params, tables))
}

pub const FIG10A_COUNTS: [usize; 2] = [64, 128];
pub const FIG10A_RANGE_DEG: (f64, f64) = (-150.0, 140.0);
pub const FIG10A_GAMMA_DB: f64 = -1.0;
const FIG10A_MARGIN_DB: f64 = 3.0;

pub fn fig10a_policy() -> Result<PhasePolicy> {
    PhasePolicy::new(vec![PhaseImpairment::RangeLimited {
        min_deg: FIG10A_RANGE_DEG.0,
        max_deg: FIG10A_RANGE_DEG.1,
        gamma_mag_db: FIG10A_GAMMA_DB,
    }])
}

fn fig10a(cfg: RunConfig) -> Result<(Json, Vec<ResultTable>)> {
    let rician = k_factor()?;
    let pl = fig7_path_loss()?;
    let mut tables = Vec::new();
    let mut windows = Vec::new();
    for &n in &FIG10A_COUNTS {
        let (lo, hi) = ber_window(&clt_moments_single(n, pl, &rician)?)?;
        let hi = hi + FIG10A_MARGIN_DB;
        windows.push(json!({ "elements": n, "start_db": lo, "stop_db": hi }));
        let grid = sweep(lo, hi, 1.0);
        for (label, policy) in [("ideal", PhasePolicy::ideal()), ("limited", fig10a_policy()?)] {
            let channel = ChannelModel::SingleRis {
                panel: RisPanel::new(n)?.with_policy(policy),
                pl,
                rician,
            };
            let mc = run_ber_with_workers(&ber_plan(channel, grid.clone(), cfg.seed), cfg.workers)?;
            tables.push(ber_table(format!("fig10a_{label}_n{n}"), &mc));
        }
    }
    let mut params = ber_parameters();
    params["carrier_ghz"] = json!(FIG7_CARRIER_GHZ);
    params["d_sr_m"] = json!(FIG7_LINK_M.0);
    params["d_rd_m"] = json!(FIG7_LINK_M.1);
    params["element_gain_dbi"] = json!(ELEMENT_GAIN_DB);
    params["rician_k_db"] = json!(K_DB);
    params["ris_elements"] = json!(FIG10A_COUNTS);
    params["phase_range_deg"] = json!([FIG10A_RANGE_DEG.0, FIG10A_RANGE_DEG.1]);
    params["reflection_db"] = json!(FIG10A_GAMMA_DB);
    params["snr_windows"] = json!(windows);
    params["extra_high_snr_db"] = json!(FIG10A_MARGIN_DB);
    params["seed"] = json!(cfg.seed);
    Ok((params, tables))
}

pub const FIG10B_KAPPAS: [f64; 4] = [1.0, 5.0, 20.0, 100.0];
const FIG10B_ELEMENTS: usize = 64;
const FIG10B_SNR_REALIZATIONS: u64 = 100_000;

fn von_mises_panel(kappa: Option<f64>) -> Result<RisPanel> {
    let panel = RisPanel::new(FIG10B_ELEMENTS)?;
    Ok(match kappa {
        None => panel,
        Some(kappa) => panel.with_policy(PhasePolicy::new(vec![PhaseImpairment::VonMisesError { kappa }])?),
    })
}

fn fig10b(cfg: RunConfig) -> Result<(Json, Vec<ResultTable>)> {
    let rician = k_factor()?;
    let pl = fig7_path_loss()?;
    let (lo, hi) = ber_window(&clt_moments_single(FIG10B_ELEMENTS, pl, &rician)?)?;
    let mut tables = Vec::new();
    let mut windows = Vec::new();
    let cases: Vec<(String, Option<f64>)> = std::iter::once(("ideal".to_owned(), None))
        .chain(FIG10B_KAPPAS.iter().map(|&k| (format!("kappa{k}"), Some(k))))
        .collect();
    for (label, kappa) in &cases {
        // The mean coherent gain drops by I1(κ)/I0(κ); shift the window to match.
        let shift = kappa.map_or(0.0, |k| (-20.0 * bessel_ratio_i1_i0(k).log10()).ceil());
        let grid = sweep(lo, hi + shift, 1.0);
        windows.push(json!({ "curve": label, "start_db": lo, "stop_db": hi + shift }));
        let channel = ChannelModel::SingleRis {
            panel: von_mises_panel(*kappa)?,
            pl,
            rician,
        };
        let mc = run_ber_with_workers(&ber_plan(channel, grid, cfg.seed), cfg.workers)?;
        tables.push(ber_table(format!("fig10b_{label}_n{FIG10B_ELEMENTS}"), &mc));
    }
    let points = cases
        .iter()
        .map(|(_, kappa)| {
            Ok((
                kappa.unwrap_or(f64::INFINITY),
                ChannelModel::SingleRis {
                    panel: von_mises_panel(*kappa)?,
                    pl,
                    rician,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let out = run_rate_with_workers(&rate_plan(points, FIG10B_SNR_REALIZATIONS, cfg.seed), cfg.workers)?;
    let mut t = ResultTable::new("fig10b_mean_snr", &["kappa", "mean_snr_db", "rate_bps_hz"]);
    for p in &out {
        t.push(vec![p.parameter.into(), linear_to_db(p.mean_snr).into(), p.mean_rate.into()]);
    }
    tables.push(t);

    let mut params = ber_parameters();
    params["carrier_ghz"] = json!(FIG7_CARRIER_GHZ);
    params["d_sr_m"] = json!(FIG7_LINK_M.0);
    params["d_rd_m"] = json!(FIG7_LINK_M.1);
    params["element_gain_dbi"] = json!(ELEMENT_GAIN_DB);
    params["rician_k_db"] = json!(K_DB);
    params["ris_elements"] = json!(FIG10B_ELEMENTS);
    params["kappas"] = json!(FIG10B_KAPPAS);
    params["snr_windows"] = json!(windows);
    params["mean_snr"] = json!({ "budget": budget_parameters(), "realizations": FIG10B_SNR_REALIZATIONS });
    params["seed"] = json!(cfg.seed);
    Ok((params, tables))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_hits_both_ends() {
        assert_eq!(sweep(5.0, 100.0, 5.0).len(), 20);
        assert_eq!(*sweep(-10.0, 40.0, 2.5).last().unwrap(), 40.0);
    }

    #[test]
    fn ple_grid_starts_at_the_reference_distance() {
        let g = ple_grid();
        assert_eq!(g[0], PLE_D0_M);
        assert_eq!(g.len(), PLE_GRID_POINTS);
        assert!((g[PLE_GRID_POINTS - 1] - PLE_GRID_M.1).abs() < 1e-12);
    }

    #[test]
    fn pure_umi_curves_fit_their_own_slope() {
        for band in &UMI_BANDS {
            let los = band.los().unwrap();
            let fit = anchored_fit(&loss_curve(|d| los.loss(d)).unwrap()).unwrap();
            let slope = if band.carrier_ghz < 6.0 { 2.2 } else { 2.1 };
            assert!((fit.exponent - slope).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_preset_is_reported() {
        let err = run_preset("fig6", RunConfig { seed: 1, workers: 1 }).unwrap_err();
        assert_eq!(err, PresetError::Unknown("fig6".into()));
    }

    #[test]
    fn noise_floor_in_watts() {
        assert!((n0_w() - 10f64.powf(-12.5)).abs() < 1e-27);
    }
}
