//! Configuration files, CSV output and run manifests.

mod config;
mod output;

pub use config::{parse_config, parse_config_str, resolve_scenario};
pub use output::{
    file_stem, format_value, point_dir, read_table, write_run, write_sweep, write_timeseries,
    RunManifest,
};
