//! Gaussian barrier `h(v) = K exp(-mu |v|^2)`.
//!
//! ```text
//! K  = 2 max(C0, C1 sup_t sup_v f)
//! mu = min(mu'/2, c0 / E0, 1 / (33 log(K / c0)))
//! ```
//!
//! `K` is carried in log form because the default `C1 = exp(2 M0 / c1)` is
//! astronomically large when the fitted ellipticity constant is small.

use serde::{Deserialize, Serialize};

use super::criterion::CriterionReport;
use super::finding::AuditFinding;
use crate::coefficients::CoefficientFields;
use crate::error::{LandauError, Result};
use crate::grid::DistributionState;
use crate::linalg::{dot, Sym3, Vec3};
use crate::par;

/// Gaussian bounds of the initial data: `f0 <= C0 exp(-mu' |v|^2)` and
/// `f0 >= ell` on `B_rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierInputs {
    pub c_initial: f64,
    pub mu_prime: f64,
    pub ell: f64,
    pub rho: f64,
}

/// The non-explicit constants `c0`, `c1`, `C1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub c0: f64,
    pub c1: f64,
    pub ln_big_c1: f64,
}

impl StructuralConstants {
    /// Defaults tied to the fitted ellipticity constant: `c1 = c_a`,
    /// `c0 = c_a / 10`, `C1 = exp(2 M0 / c1)`.
    pub fn from_ellipticity(c_a_hat: f64, m0: f64) -> Result<Self> {
        if !(c_a_hat > 0.0 && c_a_hat.is_finite()) {
            return Err(LandauError::Configuration(format!(
                "fitted ellipticity constant must be positive to derive c0, c1, C1; got {c_a_hat}"
            )));
        }
        Ok(StructuralConstants {
            c0: 0.1 * c_a_hat,
            c1: c_a_hat,
            ln_big_c1: 2.0 * m0 / c_a_hat,
        })
    }

    pub fn explicit(c0: f64, big_c1: f64) -> Result<Self> {
        if !(c0 > 0.0) || !(big_c1 > 0.0) {
            return Err(LandauError::Configuration(format!(
                "c0 = {c0} and C1 = {big_c1} must both be positive"
            )));
        }
        Ok(StructuralConstants {
            c0,
            c1: f64::NAN,
            ln_big_c1: big_c1.ln(),
        })
    }

    pub fn big_c1(&self) -> f64 {
        self.ln_big_c1.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuBranch {
    /// `mu' / 2`.
    InitialData,
    /// `c0 / E0`.
    Energy,
    /// `1 / (33 log(K / c0))`.
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierEnvelope {
    pub ln_k: f64,
    pub mu: f64,
    pub branches: [f64; 3],
    pub active: MuBranch,
    pub inputs: BarrierInputs,
    pub constants: StructuralConstants,
    pub m0: f64,
    pub e0: f64,
    pub sup_f: f64,
}

impl BarrierEnvelope {
    pub fn k(&self) -> f64 {
        self.ln_k.exp()
    }

    /// `K exp(-mu |v|^2)`.
    pub fn value(&self, v: Vec3) -> f64 {
        (self.ln_k - self.mu * dot(v, v)).exp()
    }

    /// Same envelope with `K` multiplied by `factor`.
    pub fn with_scaled_k(&self, factor: f64) -> Self {
        BarrierEnvelope {
            ln_k: self.ln_k + factor.ln(),
            ..*self
        }
    }
}

/// Envelope from a trajectory history (or a single report). `sup f`, `E0` and
/// `M0` are maxima over the history.
pub fn barrier_params(
    history: &[CriterionReport],
    inputs: &BarrierInputs,
    constants: &StructuralConstants,
) -> Result<BarrierEnvelope> {
    if history.is_empty() {
        return Err(LandauError::Configuration(
            "barrier parameters need at least one criterion report".into(),
        ));
    }
    if !(inputs.c_initial > 0.0) {
        return Err(LandauError::invalid("barrier.C0", "must be positive"));
    }
    if !(inputs.mu_prime > 0.0) {
        return Err(LandauError::invalid("barrier.mu_prime", "must be positive"));
    }
    if !(constants.c0 > 0.0) {
        return Err(LandauError::invalid("barrier.c0", "must be positive"));
    }
    let sup_f = history.iter().map(|r| r.sup_f).fold(0.0, f64::max);
    let e0 = history.iter().map(|r| r.e0).fold(0.0, f64::max);
    let m0 = history.iter().map(|r| r.m0).fold(0.0, f64::max);
    let ln_c0_init = inputs.c_initial.ln();
    let ln_sup = if sup_f > 0.0 {
        constants.ln_big_c1 + sup_f.ln()
    } else {
        f64::NEG_INFINITY
    };
    let ln_k = std::f64::consts::LN_2 + ln_c0_init.max(ln_sup);
    let ln_ratio = ln_k - constants.c0.ln();
    if !(ln_ratio > 0.0) {
        return Err(LandauError::Configuration(format!(
            "K = {:e} does not exceed c0 = {:e}; the logarithmic branch of mu is undefined \
             (C0 = {}, C1 = {:e}, sup f = {})",
            ln_k.exp(),
            constants.c0,
            inputs.c_initial,
            constants.big_c1(),
            sup_f
        )));
    }
    let branches = [
        0.5 * inputs.mu_prime,
        if e0 > 0.0 { constants.c0 / e0 } else { f64::INFINITY },
        1.0 / (33.0 * ln_ratio),
    ];
    let (mut active, mut mu) = (MuBranch::InitialData, branches[0]);
    if branches[1] < mu {
        active = MuBranch::Energy;
        mu = branches[1];
    }
    if branches[2] < mu {
        active = MuBranch::Logarithmic;
        mu = branches[2];
    }
    Ok(BarrierEnvelope {
        ln_k,
        mu,
        branches,
        active,
        inputs: *inputs,
        constants: *constants,
        m0,
        e0,
        sup_f,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub min_margin: f64,
    /// Nodes whose margin is within `1e-12` (relative) of the minimum.
    pub witnesses: Vec<usize>,
    pub pass: bool,
}

/// `min_k (K exp(-mu |v_k|^2) - f_k)`.
pub fn barrier_margin(f: &DistributionState, env: &BarrierEnvelope) -> MarginReport {
    let g = *f.grid();
    let fv = f.values();
    let margins = par::map_range(g.len(), |k| env.value(g.node(k)) - fv[k]);
    let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * min_margin.abs().max(f64::MIN_POSITIVE);
    let witnesses = margins
        .iter()
        .enumerate()
        .filter(|(_, m)| **m - min_margin <= tol)
        .map(|(k, _)| k)
        .collect();
    MarginReport {
        min_margin,
        witnesses,
        pass: min_margin >= 0.0,
    }
}

/// `(tr[Pi(v - z) v v^T], |v|^2 |z|^2 sin^2(theta_{z,v}) / |v - z|^2)`.
pub fn trace_identity(v: Vec3, z: Vec3) -> (f64, f64) {
    let d = [v[0] - z[0], v[1] - z[1], v[2] - z[2]];
    let lhs = Sym3::projector(d).contract(&Sym3::outer(v));
    let vv = dot(v, v);
    let zz = dot(z, z);
    let cos2 = if vv > 0.0 && zz > 0.0 {
        dot(v, z).powi(2) / (vv * zz)
    } else {
        1.0
    };
    let rhs = vv * zz * (1.0 - cos2) / dot(d, d);
    (lhs, rhs)
}

/// Evaluates `tr(abar D^2 h) + cbar h` at node `v0` with the analytic
/// `D^2 h = 2 mu h (2 mu v v^T - I)`. Informational.
pub fn crossing_sign_audit(
    f: &DistributionState,
    coeffs: &CoefficientFields,
    env: &BarrierEnvelope,
    v0: usize,
) -> Result<AuditFinding> {
    let g = *f.grid();
    coeffs.grid.ensure_same(&g)?;
    let n = g.points_per_axis();
    if v0 >= g.len() || g.ijk(v0).iter().any(|&c| c == 0 || c + 1 == n) {
        return Err(LandauError::invalid("v0", format!("node {v0} is not an interior node")));
    }
    let v = g.node(v0);
    let h = env.value(v);
    let d2h = Sym3::outer(v)
        .scale(2.0 * env.mu)
        .sub(&Sym3::IDENTITY)
        .scale(2.0 * env.mu * h);
    let trace_term = coeffs.abar[v0].contract(&d2h);
    let zeroth = coeffs.cbar[v0] * h;
    let total = trace_term + zeroth;
    Ok(AuditFinding::new("crossing-sign")
        .measure("node", v0)
        .measure("v", v)
        .measure("h", h)
        .measure("f", f.values()[v0])
        .measure("trace_term", trace_term)
        .measure("zeroth_order_term", zeroth)
        .measure("total", total)
        .measure("sign", total.signum())
        .note("negativity is only claimed at genuine crossing points under all hypotheses"))
}
