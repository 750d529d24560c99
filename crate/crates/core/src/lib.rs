//! Link-level simulation of wireless links assisted by reconfigurable
//! intelligent surfaces (RIS).
//!
//! The crate covers Rician fading, large-scale path loss, instantaneous SNR
//! for single, simultaneous, double-reflected and selection topologies,
//! CLT-based error-probability analysis, phase impairments, and a
//! deterministic parallel Monte Carlo engine.

pub mod analysis;
pub mod error;
pub mod fading;
pub mod impairments;
pub mod link;
pub mod montecarlo;
pub mod pathloss;
pub mod rng;
pub mod special;

pub use analysis::{
    achievable_rate, awgn_bpsk_ber, clt_moments_double, clt_moments_dual, clt_moments_single,
    mgf, sep_mpsk, sep_upper_bound, CltAmplitudeModel, SepRequest,
};
pub use error::{Error, Result};
pub use fading::{
    rician_amplitude_moments, sample_rician, ComplexCoefficient, LaguerrePolicy, RicianSpec,
};
pub use impairments::{apply_policy, sample_von_mises, PhaseImpairment, PhasePolicy};
pub use link::{
    LinkRealization, Point3, RisPanel, ScenarioGeometry, Topology,
};
pub use montecarlo::{
    run_ber, run_rate, BerEstimate, ChannelModel, ModulationScheme, RatePlan, RatePoint, TrialPlan,
};
pub use pathloss::{PathLaw, PathLossSpec, PathLossValue};
pub use rng::SeededStream;
pub use special::laguerre_half;
