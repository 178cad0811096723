//! Configuration-driven scenario runs and their artifacts.

mod config;
mod export;
mod plot;
mod scenario;

pub use config::{
    Builder, ConvSection, DistSection, Format, FunctionalsSection, Grid, LldSection, RunConfig, RunSection, Scenario,
    SpikeEps,
};
pub use export::{export, schema, ReportDoc, Table};
pub use plot::{svg_lines, Series};
pub use scenario::{dist_build, reexport, run_scenario, OpRecord, RunOutcome, RunStatus};
