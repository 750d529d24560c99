//! Scenario files, figure presets and the `ris-linksim` command line.

pub mod app;
pub mod presets;
pub mod scenario;
pub mod table;

pub use app::cli_main;
pub use presets::{run_preset, PresetError, RunConfig, PRESETS};
pub use scenario::{parse_scenario, Diagnostic, Scenario, ScenarioErrors};
pub use table::{Manifest, ResultTable, RunOutput};
