//! `landau report`: criterion quantities of a stored snapshot.

use std::path::Path;

use anyhow::{Context, Result};
use landau_core::diagnostics::{criterion_report, CriterionReport};
use landau_core::io::read_snapshot;
use landau_core::ModelParams;

/// Model parameters for the report. `gamma` defaults to the one recorded in
/// the snapshot header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportParams {
    pub gamma: Option<f64>,
    pub delta: f64,
    pub s: f64,
    pub rho: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams {
            gamma: None,
            delta: 0.5,
            s: 1.0,
            rho: 1.0,
        }
    }
}

pub fn cmd_report(snapshot: &Path, params: &ReportParams) -> Result<CriterionReport> {
    let snap = read_snapshot(snapshot)?;
    if snap.header.channel != "f" {
        log::warn!(
            "{} holds channel `{}`, not a distribution",
            snapshot.display(),
            snap.header.channel
        );
    }
    let gamma = params.gamma.unwrap_or(snap.header.gamma);
    let model = ModelParams::new(gamma, params.delta)?;
    let f = snap
        .into_state()
        .with_context(|| format!("{} is not a valid distribution", snapshot.display()))?;
    Ok(criterion_report(&f, &model, params.s, params.rho)?)
}
