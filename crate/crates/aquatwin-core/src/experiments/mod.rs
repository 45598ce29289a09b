//! End-to-end experiment drivers: each builds its scenario, runs the engine,
//! and reduces the trace to the comparison rows the study reports.

pub mod power_control;

pub use power_control::{run_one as run_power_control, PcOutcome};
