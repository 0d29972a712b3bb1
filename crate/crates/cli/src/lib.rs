//! Configuration, run orchestration and persistence for the `landau` binary.
//!
//! Every command writes into a fresh directory under the output root
//! (`run-NNN` for simulations, `audit-NNN` for audits); existing directories
//! are never touched.

pub mod audit;
pub mod config;
pub mod output;
pub mod report;
pub mod simulate;

pub use audit::{cmd_audit, AuditSelector};
pub use config::{ConfigError, RunConfig};
pub use report::{cmd_report, ReportParams};
pub use simulate::{cmd_simulate, SimulateOutcome};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "LANDAU_THREADS";

/// Exit code of a simulation stopped by an unstable step.
pub const EXIT_UNSTABLE: u8 = 3;
/// Exit code of an audit run with at least one failed assertion.
pub const EXIT_AUDIT_FAILED: u8 = 4;
