//! Hölder chain bounding the energy by an `s`-moment under a Gaussian
//! envelope `f <= K exp(-mu |v|^2)`:
//!
//! ```text
//! int |v|^2 f <= K^(1/q) (int |v|^s f)^(1/q') (int exp(-mu |v|^2) |v|^m)^(1/q)
//! q = (2/s)(2 theta + s + 3),   q' = q / (q - 1),   m = 2q - s(q - 1)
//! ```
//!
//! with `theta = -19 gamma / delta` by default. The exponent choice makes
//! `theta/q + (s + 3)/(2q) = s/4`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use super::barrier::BarrierEnvelope;
use super::finding::{AuditFinding, Verdict};
use crate::error::{LandauError, Result};
use crate::grid::{moment, DistributionState};
use crate::linalg::dot;
use crate::par;

pub const CHAIN_TOLERANCE: f64 = 1e-6;
pub const IDENTITY_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationExponents {
    pub s: f64,
    pub theta: f64,
    pub q: f64,
    pub q_conj: f64,
    /// Power of `|v|` in the Gaussian-weight integral.
    pub m: f64,
}

pub fn interpolation_exponent(s: f64, theta: f64) -> Result<InterpolationExponents> {
    if !(s > 0.0 && s < 2.0) {
        return Err(LandauError::invalid("s", format!("must lie in (0, 2), got {s}")));
    }
    let q = (2.0 / s) * (2.0 * theta + s + 3.0);
    if !(q > 1.0 && q.is_finite()) {
        return Err(LandauError::invalid(
            "theta",
            format!("gives Hölder exponent q = {q}; need q > 1"),
        ));
    }
    Ok(InterpolationExponents {
        s,
        theta,
        q,
        q_conj: q / (q - 1.0),
        m: 2.0 * q - s * (q - 1.0),
    })
}

/// `|theta/q + (s + 3)/(2q) - s/4|`.
pub fn exponent_identity_residual(e: &InterpolationExponents) -> f64 {
    (e.theta / e.q + (e.s + 3.0) / (2.0 * e.q) - e.s / 4.0).abs()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Checks the chain for `f` and envelope `env`. The weight integral is the
/// grid quadrature plus the analytic tail beyond radius `L`,
/// `2 pi mu^(-(m+3)/2) Gamma((m+3)/2, mu L^2)`, which bounds the region
/// outside the box. Everything runs in log space.
pub fn energy_interpolation_check(
    f: &DistributionState,
    s: f64,
    theta: f64,
    env: &BarrierEnvelope,
) -> Result<AuditFinding> {
    let e = interpolation_exponent(s, theta)?;
    let g = *f.grid();
    let fv = f.values();
    let excess = par::max_range(g.len(), |k| fv[k] - env.value(g.node(k)));
    let identity = exponent_identity_residual(&e);
    let lhs = moment(f, 2.0)?;
    let s0 = moment(f, s)?;
    let vol_ln = g.cell_volume().ln();
    let mu = env.mu;
    let log_terms = par::map_range(g.len(), |k| {
        let v = g.node(k);
        let r2 = dot(v, v);
        0.5 * e.m * r2.ln() - mu * r2 + vol_ln
    });
    let ln_grid = log_sum_exp(&log_terms);
    let a = 0.5 * (e.m + 3.0);
    let x = mu * g.half_width().powi(2);
    let ur = gamma_ur(a, x);
    let ln_tail = if ur > 0.0 {
        (2.0 * std::f64::consts::PI).ln() - a * mu.ln() + ur.ln() + ln_gamma(a)
    } else {
        f64::NEG_INFINITY
    };
    let ln_weight = log_sum_exp(&[ln_grid, ln_tail]);
    let ln_rhs = if s0 > 0.0 {
        env.ln_k / e.q + s0.ln() / e.q_conj + ln_weight / e.q
    } else {
        f64::NEG_INFINITY
    };
    let rhs = ln_rhs.exp();
    let holds = lhs <= rhs * (1.0 + CHAIN_TOLERANCE);
    let finding = AuditFinding::new("energy-interpolation")
        .measure("s", s)
        .measure("theta", theta)
        .measure("q", e.q)
        .measure("q_conj", e.q_conj)
        .measure("weight_power", e.m)
        .measure("identity_residual", identity)
        .measure("lhs", lhs)
        .measure("rhs", rhs)
        .measure("ln_rhs", ln_rhs)
        .measure("ln_weight_grid", ln_grid)
        .measure("ln_weight_tail", ln_tail)
        .measure("margin", rhs - lhs)
        .measure("envelope_excess", excess)
        .tolerance("chain_relative", CHAIN_TOLERANCE)
        .tolerance("identity", IDENTITY_TOLERANCE);
    if excess > 0.0 {
        return Ok(finding
            .note("f exceeds the envelope somewhere; the chain's hypothesis does not hold")
            .with_verdict(Verdict::HypothesisUnmet));
    }
    Ok(finding.check(holds && identity <= IDENTITY_TOLERANCE))
}
