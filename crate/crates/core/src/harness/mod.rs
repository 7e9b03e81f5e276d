//! Experiment configuration, seeded sweeps and result files.

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;
pub mod sweep;

pub use config::{cell_env, parse_config, parse_values, AlgorithmSpec, EnvConfig, EnvFamily, ExperimentConfig, SweepParam};
pub use output::{read_csv, write_csv, write_meta, write_summary, CSV_HEADER};
pub use presets::{preset, PRESETS};
pub use plot::{render_plot, render_svg};
pub use sweep::{environment_opt, loglog_slope, run_algorithm, run_sweep, Row, Summary, SweepResult};
