//! Explicit time integration of `df/dt = Q(f, f)`.
//!
//! Coefficients are recomputed from the current state at every stage. The
//! step size is `dt = cfl h^2 / lambda_max`, with `lambda_max` the largest
//! eigenvalue of `abar` over the active nodes, capped by the time remaining
//! and an optional `dt_max`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{compute_coefficients, KernelTables, ModelParams};
use crate::collision::{entropy_production_from, is_active, q_divergence, CollisionOutput};
use crate::diagnostics::{criterion_report, CriterionReport};
use crate::error::{LandauError, Result};
use crate::grid::DistributionState;
use crate::linalg::{norm, Vec3};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositivityPolicy {
    /// Negative values are set to zero; the removed mass is logged.
    ClipToZero,
    /// The step is retried at half the step size, up to [`MAX_REJECTIONS`] times.
    RejectStep,
}

pub const MAX_REJECTIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub cfl: f64,
    pub t_end: f64,
    pub dt_max: Option<f64>,
    pub scheme: Scheme,
    pub positivity: PositivityPolicy,
    /// Log a row every this many steps (the final state is always logged).
    pub observe_every: usize,
    /// Moment order of the criterion report.
    pub s: f64,
    /// Radius of the lower-bound ball of the criterion report.
    pub rho: f64,
    /// A step whose sup-norm change exceeds this fraction of `sup f` is
    /// treated as unstable.
    pub max_relative_change: f64,
    /// Exponent `theta` of the informational ratio `sup f / E0^theta`.
    pub theta: f64,
}

impl SolverConfig {
    /// Defaults: `cfl = 0.25`, Heun, clip-to-zero, every step observed.
    pub fn new(params: ModelParams, t_end: f64) -> Result<Self> {
        let cfg = SolverConfig {
            params,
            cfl: 0.25,
            t_end,
            dt_max: None,
            scheme: Scheme::Heun,
            positivity: PositivityPolicy::ClipToZero,
            observe_every: 1,
            s: 1.0,
            rho: 1.0,
            max_relative_change: 0.5,
            theta: -19.0 * params.gamma() / params.delta(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(LandauError::invalid("solver.cfl", format!("must be positive, got {}", self.cfl)));
        }
        if self.cfl > 1.0 {
            log::warn!("solver.cfl = {} exceeds 1; the explicit scheme is expected to be unstable", self.cfl);
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(LandauError::invalid("solver.T", format!("must be >= 0, got {}", self.t_end)));
        }
        if let Some(d) = self.dt_max {
            if !(d > 0.0) {
                return Err(LandauError::invalid("solver.dt_max", format!("must be positive, got {d}")));
            }
        }
        if self.observe_every == 0 {
            return Err(LandauError::invalid("diagnostics.every", "must be at least 1"));
        }
        if !(self.s > 0.0 && self.s < 2.0) {
            return Err(LandauError::invalid("model.s", format!("must lie in (0, 2), got {}", self.s)));
        }
        if !(self.rho > 0.0) {
            return Err(LandauError::invalid("barrier.rho", "must be positive"));
        }
        if !(self.max_relative_change > 0.0) {
            return Err(LandauError::invalid("solver.max_relative_change", "must be positive"));
        }
        Ok(())
    }
}

/// Result of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: DistributionState,
    pub dt: f64,
    /// Mass change of the update before positivity handling.
    pub preclip_mass_change: f64,
    /// Mass removed by clipping (nonnegative).
    pub clipped_mass: f64,
    pub rejections: usize,
}

/// `Q(f, f)` in divergence form, plus the stable step size for `f`.
fn rate(f: &DistributionState, tables: &KernelTables, params: &ModelParams) -> Result<(CollisionOutput, f64)> {
    let coeffs = compute_coefficients(f, tables, params)?;
    let grid = *f.grid();
    let lambda = coeffs.max_eigenvalue_where(|k| is_active(&grid, k));
    let q = q_divergence(f, f, &coeffs)?;
    Ok((q, lambda))
}

fn stable_dt(config: &SolverConfig, h: f64, lambda: f64, remaining: f64) -> f64 {
    let mut dt = if lambda > 0.0 && lambda.is_finite() {
        config.cfl * h * h / lambda
    } else {
        f64::INFINITY
    };
    if let Some(cap) = config.dt_max {
        dt = dt.min(cap);
    }
    dt.min(remaining)
}

enum Trial {
    Accepted(Vec<f64>),
    Rejected(String),
}

fn trial(
    f: &DistributionState,
    q0: &CollisionOutput,
    dt: f64,
    config: &SolverConfig,
    tables: &KernelTables,
) -> Result<Trial> {
    let fv = f.values();
    let euler: Vec<f64> = par::map_range(fv.len(), |k| fv[k] + dt * q0.values[k]);
    let next = match config.scheme {
        Scheme::ExplicitEuler => euler,
        Scheme::Heun => {
            let stage = DistributionState::new_unchecked(*f.grid(), euler, f.time() + dt);
            if stage.values().iter().any(|v| !v.is_finite()) {
                return Ok(Trial::Rejected("non-finite predictor".into()));
            }
            let (q1, _) = rate(&stage, tables, &config.params)?;
            par::map_range(fv.len(), |k| fv[k] + 0.5 * dt * (q0.values[k] + q1.values[k]))
        }
    };
    if next.iter().any(|v| !v.is_finite()) {
        return Ok(Trial::Rejected("non-finite values in the update".into()));
    }
    let sup = par::max_range(fv.len(), |k| fv[k].abs());
    let change = par::max_range(fv.len(), |k| (next[k] - fv[k]).abs());
    if change > config.max_relative_change * sup {
        return Ok(Trial::Rejected(format!(
            "sup-norm change {change:e} exceeds {} x sup f = {:e}",
            config.max_relative_change,
            config.max_relative_change * sup
        )));
    }
    if config.positivity == PositivityPolicy::RejectStep && next.iter().any(|v| *v < 0.0) {
        return Ok(Trial::Rejected("negative values".into()));
    }
    Ok(Trial::Accepted(next))
}

/// One step of size determined by the current coefficients.
pub fn step(f: &DistributionState, config: &SolverConfig, tables: &KernelTables) -> Result<StepOutcome> {
    let (q0, lambda) = rate(f, tables, &config.params)?;
    step_with_rate(f, &q0, lambda, config, tables)
}

fn step_with_rate(
    f: &DistributionState,
    q0: &CollisionOutput,
    lambda: f64,
    config: &SolverConfig,
    tables: &KernelTables,
) -> Result<StepOutcome> {
    let h = f.grid().spacing();
    let remaining = (config.t_end - f.time()).max(0.0);
    let mut dt = stable_dt(config, h, lambda, remaining);
    if !(dt > 0.0) {
        return Ok(StepOutcome {
            state: f.clone(),
            dt: 0.0,
            preclip_mass_change: 0.0,
            clipped_mass: 0.0,
            rejections: 0,
        });
    }
    let vol = f.grid().cell_volume();
    let mut rejections = 0;
    loop {
        match trial(f, q0, dt, config, tables)? {
            Trial::Accepted(mut next) => {
                let before = f.mass();
                let pre = par::sum_range(next.len(), |k| next[k]) * vol;
                let mut clipped = 0.0;
                if config.positivity == PositivityPolicy::ClipToZero {
                    for v in next.iter_mut() {
                        if *v < 0.0 {
                            clipped -= *v;
                            *v = 0.0;
                        }
                    }
                }
                let time = if dt == remaining { config.t_end } else { f.time() + dt };
                return Ok(StepOutcome {
                    state: DistributionState::new_unchecked(*f.grid(), next, time),
                    dt,
                    preclip_mass_change: pre - before,
                    clipped_mass: clipped * vol,
                    rejections,
                });
            }
            Trial::Rejected(reason) => {
                if config.positivity == PositivityPolicy::RejectStep && rejections < MAX_REJECTIONS {
                    rejections += 1;
                    log::debug!("step rejected at dt = {dt:e} ({reason}); retrying at dt / 2");
                    dt *= 0.5;
                } else {
                    return Err(LandauError::UnstableStep { dt, reason });
                }
            }
        }
    }
}

/// One observation of the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub time: f64,
    /// Size of the step that produced this row (0 for the initial row).
    pub dt: f64,
    pub report: CriterionReport,
    pub entropy: f64,
    pub entropy_production: f64,
    pub min_f: f64,
    pub momentum: Vec3,
    pub directional_moments: Vec3,
    /// Accumulated pre-clip mass change, relative to the initial mass.
    pub mass_drift: f64,
    /// `|P(t) - P(0)| / sqrt(M0 E0)`.
    pub momentum_drift: f64,
    /// `(E(t) - E(0)) / E(0)`.
    pub energy_drift: f64,
    /// Accumulated clipped mass, relative to the initial mass.
    pub clipped_mass: f64,
    /// `sup f / E0^theta`.
    pub sup_over_energy_power: f64,
}

impl TrajectoryRow {
    pub const CSV_HEADER: [&'static str; 24] = [
        "step", "time", "dt", "M0", "S0", "E0", "P0", "sup_f", "inf_ball", "entropy",
        "entropy_production", "min_f", "px", "py", "pz", "exx", "eyy", "ezz", "mass_drift",
        "momentum_drift", "energy_drift", "clipped_mass", "sup_over_energy_power", "s",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        let r = &self.report;
        let f = |x: f64| format!("{x:.17e}");
        vec![
            self.step.to_string(),
            f(self.time),
            f(self.dt),
            f(r.m0),
            f(r.s0),
            f(r.e0),
            f(r.p0),
            f(r.sup_f),
            f(r.inf_ball),
            f(self.entropy),
            f(self.entropy_production),
            f(self.min_f),
            f(self.momentum[0]),
            f(self.momentum[1]),
            f(self.momentum[2]),
            f(self.directional_moments[0]),
            f(self.directional_moments[1]),
            f(self.directional_moments[2]),
            f(self.mass_drift),
            f(self.momentum_drift),
            f(self.energy_drift),
            f(self.clipped_mass),
            f(self.sup_over_energy_power),
            f(r.s),
        ]
    }
}

/// Why an integration stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureMarker {
    pub time: f64,
    pub step: usize,
    pub dt: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<TrajectoryRow>,
    pub failure: Option<FailureMarker>,
    pub final_state: DistributionState,
    pub steps: usize,
    pub rejections: usize,
}

impl TrajectoryLog {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// Criterion reports of every row.
    pub fn reports(&self) -> Vec<CriterionReport> {
        self.rows.iter().map(|r| r.report).collect()
    }
}

/// Called with each logged state. Observers cannot modify the state.
pub trait Observer {
    fn observe(&mut self, state: &DistributionState, row: &TrajectoryRow);
}

impl<F: FnMut(&DistributionState, &TrajectoryRow)> Observer for F {
    fn observe(&mut self, state: &DistributionState, row: &TrajectoryRow) {
        self(state, row)
    }
}

struct Baseline {
    mass: f64,
    momentum: Vec3,
    energy: f64,
}

struct Accumulated {
    preclip: f64,
    clipped: f64,
}

fn make_row(
    f: &DistributionState,
    q: &CollisionOutput,
    step: usize,
    dt: f64,
    config: &SolverConfig,
    base: &Baseline,
    acc: &Accumulated,
) -> Result<TrajectoryRow> {
    let report = criterion_report(f, &config.params, config.s, config.rho)?;
    let momentum = f.momentum();
    let dp = [
        momentum[0] - base.momentum[0],
        momentum[1] - base.momentum[1],
        momentum[2] - base.momentum[2],
    ];
    let rel = |x: f64, scale: f64| if scale > 0.0 { x / scale } else { x };
    let me = (base.mass * base.energy).sqrt();
    Ok(TrajectoryRow {
        step,
        time: f.time(),
        dt,
        entropy: f.entropy(),
        entropy_production: entropy_production_from(f, q),
        min_f: f.min_value(),
        momentum,
        directional_moments: f.directional_second_moments(),
        mass_drift: rel(acc.preclip, base.mass),
        momentum_drift: rel(norm(dp), me),
        energy_drift: rel(report.e0 - base.energy, base.energy),
        clipped_mass: rel(acc.clipped, base.mass),
        sup_over_energy_power: if report.e0 > 0.0 {
            report.sup_f / report.e0.powf(config.theta)
        } else {
            0.0
        },
        report,
    })
}

/// Integrates to `config.t_end`. On an unstable step the log so far is
/// returned with a [`FailureMarker`]; other errors propagate.
pub fn integrate(
    f0: &DistributionState,
    config: &SolverConfig,
    tables: &KernelTables,
    observers: &mut [&mut dyn Observer],
) -> Result<TrajectoryLog> {
    config.validate()?;
    tables.grid().ensure_same(f0.grid())?;
    let base = Baseline {
        mass: f0.mass(),
        momentum: f0.momentum(),
        energy: f0.energy(),
    };
    let mut acc = Accumulated {
        preclip: 0.0,
        clipped: 0.0,
    };
    let mut f = f0.clone();
    let (mut q, mut lambda) = rate(&f, tables, &config.params)?;
    let mut rows = Vec::new();
    let mut emit = |f: &DistributionState, row: TrajectoryRow, rows: &mut Vec<TrajectoryRow>| {
        for o in observers.iter_mut() {
            o.observe(f, &row);
        }
        rows.push(row);
    };
    emit(&f, make_row(&f, &q, 0, 0.0, config, &base, &acc)?, &mut rows);
    let mut steps = 0;
    let mut rejections = 0;
    let mut failure = None;
    while f.time() < config.t_end {
        let out = match step_with_rate(&f, &q, lambda, config, tables) {
            Ok(o) => o,
            Err(LandauError::UnstableStep { dt, reason }) => {
                log::warn!("integration stopped at t = {}: {reason}", f.time());
                failure = Some(FailureMarker {
                    time: f.time(),
                    step: steps,
                    dt,
                    reason,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        if out.dt <= 0.0 {
            break;
        }
        steps += 1;
        rejections += out.rejections;
        acc.preclip += out.preclip_mass_change;
        acc.clipped += out.clipped_mass;
        f = out.state;
        let next = rate(&f, tables, &config.params)?;
        q = next.0;
        lambda = next.1;
        if steps % config.observe_every == 0 || f.time() >= config.t_end {
            emit(&f, make_row(&f, &q, steps, out.dt, config, &base, &acc)?, &mut rows);
        }
    }
    if failure.is_some() && rows.last().map(|r| r.step) != Some(steps) {
        emit(&f, make_row(&f, &q, steps, 0.0, config, &base, &acc)?, &mut rows);
    }
    Ok(TrajectoryLog {
        rows,
        failure,
        final_state: f,
        steps,
        rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::build_kernels;
    use crate::grid::{make_maxwellian, VelocityGrid};

    fn setup(gamma: f64) -> (VelocityGrid, ModelParams, KernelTables) {
        let g = VelocityGrid::new(16, 6.0).unwrap();
        let p = ModelParams::new(gamma, 0.5).unwrap();
        let t = build_kernels(&g, &p);
        (g, p, t)
    }

    #[test]
    fn zero_state_stays_zero() {
        let (g, p, t) = setup(-2.0);
        let cfg = SolverConfig::new(p, 0.1).unwrap();
        let out = step(&DistributionState::zeros(g), &cfg, &t).unwrap();
        assert!(out.state.values().iter().all(|v| *v == 0.0));
        assert_eq!(out.state.time(), 0.1);
    }

    #[test]
    fn zero_horizon_logs_single_row() {
        let (g, p, t) = setup(-3.0);
        let f = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
        let cfg = SolverConfig::new(p, 0.0).unwrap();
        let log = integrate(&f, &cfg, &t, &mut []).unwrap();
        assert_eq!(log.rows.len(), 1);
        assert_eq!(log.final_state, f);
    }

    #[test]
    fn step_conserves_mass_before_clipping() {
        let (g, p, t) = setup(-3.0);
        let f = make_maxwellian(g, 1.0, [0.3, 0.0, 0.0], 0.6).unwrap();
        let mut cfg = SolverConfig::new(p, 0.2).unwrap();
        cfg.dt_max = Some(0.05);
        let out = step(&f, &cfg, &t).unwrap();
        assert!(out.preclip_mass_change.abs() <= 1e-14, "{}", out.preclip_mass_change);
        assert!(out.state.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn observers_see_every_row_and_times_increase() {
        let (g, p, t) = setup(-2.0);
        let f = make_maxwellian(g, 1.0, [0.0; 3], 0.8).unwrap();
        let mut cfg = SolverConfig::new(p, 0.05).unwrap();
        cfg.dt_max = Some(0.01);
        let mut seen = Vec::new();
        let mut obs = |s: &DistributionState, _: &TrajectoryRow| seen.push(s.time());
        let log = integrate(&f, &cfg, &t, &mut [&mut obs]).unwrap();
        assert_eq!(seen.len(), log.rows.len());
        assert!(log.rows.windows(2).all(|w| w[1].time > w[0].time));
        assert_eq!(log.rows.last().unwrap().time, 0.05);
    }
}
