//! Library side of the `npi` command: file outputs, presets, sweeps.

pub mod csv_out;
pub mod presets;
pub mod run;
pub mod svg;
pub mod sweep;

pub use run::{reproduce, run_file, CliError, Figure, Overrides, RunManifest, RunOutput};
pub use sweep::{run_sweep, SweepRow};
