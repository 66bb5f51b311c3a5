//! Configuration-driven driver: JSON config in, JSON report and field
//! files out.

mod config;
mod export;
mod run;

pub use config::{GmresSettings, GridConfig, IncidentConfig, Mode, OutputConfig, PotentialConfig, ProblemConfig, RunConfig};
pub use export::{export_field, read_field, FieldFile, FieldPoints, FIELD_MAGIC};
pub use run::{
    loglog_slope, run, scaling_sweep, solve_gmres, DirectSolver, OrderConvergence, ProbeValue, ProxyRow, QuadReport,
    RunReport, SpectrumReport, SweepReport, SweepSlopes,
};
