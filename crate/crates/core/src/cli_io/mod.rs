//! Configuration files, command dispatch and result serialization.
//!
//! A config is a TOML document:
//!
//! ```toml
//! system = "string"
//! command = "spectrum"
//! occupations = [0, 1]
//!
//! [string]
//! sigma_points = 8
//! x0_final = 2.0
//!
//! [output]
//! format = "csv"
//! ```
//!
//! Defaults: `sigma_points = 64`, `tau_steps = 200`, `hbar = c = 1`, `gamma = 1`,
//! unit lapses, zero point off, JSON output.

mod config;
mod emit;
mod run;

pub use config::{
    config_to_toml, load_config, parse_config, parse_config_with, parse_occupations, resolve_config_path,
    sweep_parameters, Command, Format, OutputSection, Overrides, ParticleSection, Profile, QueuedRun, RunConfig,
    StringSection, SweepSection, System, CONFIG_DIR_ENV, DEFAULT_SIGMA_POINTS, DEFAULT_TAU_STEPS, TOLERANCE_KEYS,
};
pub use emit::{emit, emit_error, format_float, to_json_string, write_output};
pub use run::{run, run_single, ErrorObject, RunOutput, RunRecord, FORMAT_VERSION};
