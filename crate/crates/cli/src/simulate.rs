//! `landau simulate`: integrate, write snapshots, a trajectory CSV and a
//! manifest into a fresh run directory.

use std::cell::RefCell;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use landau_core::coefficients::build_kernels;
use landau_core::diagnostics::{blowup_detector, DEFAULT_GROWTH_THRESHOLD};
use landau_core::io::{write_sidecar, write_snapshot};
use landau_core::solver::{integrate, FailureMarker, TrajectoryRow};
use landau_core::DistributionState;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{create_run_dir, generated_stamp, tool_info, write_json};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutcome {
    pub run_dir: PathBuf,
    pub steps: usize,
    pub snapshots: Vec<String>,
    pub failure: Option<FailureMarker>,
}

impl SimulateOutcome {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

struct Recorder {
    dir: PathBuf,
    gamma: f64,
    seed: u64,
    snapshot_every: usize,
    observed: usize,
    csv: csv::Writer<File>,
    snapshots: Vec<String>,
    error: Option<anyhow::Error>,
}

impl Recorder {
    fn snapshot(&mut self, state: &DistributionState, step: usize, name: String) -> Result<()> {
        let path = self.dir.join(&name);
        write_snapshot(&path, state, self.gamma).with_context(|| format!("writing {}", path.display()))?;
        write_sidecar(
            &path,
            &json!({
                "tool": tool_info(),
                "seed": self.seed,
                "step": step,
                "time": state.time(),
                "gamma": self.gamma,
                "channel": "f",
            }),
        )?;
        self.snapshots.push(name);
        Ok(())
    }

    fn record(&mut self, state: &DistributionState, row: &TrajectoryRow) -> Result<()> {
        self.csv.write_record(row.csv_record())?;
        let due = self.observed == 0 || (self.snapshot_every > 0 && self.observed % self.snapshot_every == 0);
        if due {
            self.snapshot(state, row.step, format!("snap-{:06}.snap", row.step))?;
        }
        self.observed += 1;
        Ok(())
    }
}

/// Runs the configured integration under `out_root`. Returns an outcome
/// whose `failure` is set when an unstable step stopped the run; everything
/// written up to that point is kept.
pub fn cmd_simulate(config: &RunConfig, out_root: &Path) -> Result<SimulateOutcome> {
    let started = Instant::now();
    let params = config.params()?;
    let solver = config.solver_config()?;
    let grid = config.grid()?;
    let f0 = config.initial_state().context("building the initial state")?;
    let run_dir = create_run_dir(out_root, "run")?;
    log::info!("writing run to {}", run_dir.display());

    let mut csv = csv::Writer::from_path(run_dir.join(TRAJECTORY_FILE))?;
    csv.write_record(TrajectoryRow::CSV_HEADER)?;
    let recorder = RefCell::new(Recorder {
        dir: run_dir.clone(),
        gamma: params.gamma(),
        seed: config.seed,
        snapshot_every: config.diagnostics.snapshot_every,
        observed: 0,
        csv,
        snapshots: Vec::new(),
        error: None,
    });

    let tables = build_kernels(&grid, &params);
    let mut observer = |state: &DistributionState, row: &TrajectoryRow| {
        let mut r = recorder.borrow_mut();
        if r.error.is_none() {
            if let Err(e) = r.record(state, row) {
                r.error = Some(e);
            }
        }
    };
    let log = integrate(&f0, &solver, &tables, &mut [&mut observer])?;
    let mut rec = recorder.into_inner();
    if let Some(e) = rec.error.take() {
        return Err(e);
    }
    rec.csv.flush()?;
    rec.snapshot(&log.final_state, log.steps, "final.snap".to_string())?;

    let blowup = blowup_detector(&log, config.diagnostics.blowup_window, DEFAULT_GROWTH_THRESHOLD);
    let status = if log.completed() { "completed" } else { "unstable" };
    let manifest = json!({
        "tool": tool_info(),
        "config": config,
        "seed": config.seed,
        "status": status,
        "failure": log.failure,
        "steps": log.steps,
        "rejections": log.rejections,
        "rows": log.rows.len(),
        "final_time": log.final_state.time(),
        "trajectory": { "file": TRAJECTORY_FILE, "columns": TrajectoryRow::CSV_HEADER },
        "snapshots": rec.snapshots,
        "blowup": blowup,
        "generated": generated_stamp(started),
    });
    write_json(&run_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(SimulateOutcome {
        run_dir,
        steps: log.steps,
        snapshots: rec.snapshots,
        failure: log.failure,
    })
}
