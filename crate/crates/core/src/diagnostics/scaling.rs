//! Scaling `f_r(v) = r^(alpha + 3 + gamma) f(v0 + r v)` of the homogeneous
//! equation and the covariance of coefficients and operator under it.
//!
//! The coefficients transform with factors `r^(alpha-2)`, `r^(alpha-1)`,
//! `r^alpha` for `abar`, `bbar`, `cbar` and the operator with
//! `r^(2 alpha + 3 + gamma)`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{compute_coefficients, KernelTables, ModelParams};
use crate::collision::{q_divergence, CollisionOutput};
use crate::error::{LandauError, Result};
use crate::grid::{DistributionState, VelocityGrid};
use crate::linalg::Vec3;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingTransform {
    pub r: f64,
    pub alpha: f64,
    /// Velocity center; time and space centers drop out of the homogeneous problem.
    pub v0: Vec3,
}

impl ScalingTransform {
    pub fn new(r: f64, alpha: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(LandauError::invalid("r", format!("must be positive, got {r}")));
        }
        if !alpha.is_finite() {
            return Err(LandauError::invalid("alpha", "must be finite"));
        }
        Ok(ScalingTransform { r, alpha, v0: [0.0; 3] })
    }

    /// The kinetic scaling `alpha = 2`.
    pub fn kinetic(r: f64) -> Result<Self> {
        Self::new(r, 2.0)
    }

    /// `alpha + 3 + gamma`.
    pub fn mass_exponent(&self, gamma: f64) -> f64 {
        self.alpha + 3.0 + gamma
    }

    /// `(abar, bbar, cbar, Q)` factors.
    pub fn factors(&self, gamma: f64) -> [f64; 4] {
        let r = self.r;
        [
            r.powf(self.alpha - 2.0),
            r.powf(self.alpha - 1.0),
            r.powf(self.alpha),
            r.powf(2.0 * self.alpha + 3.0 + gamma),
        ]
    }
}

/// Trilinear interpolation of nodal values; points beyond the outer nodes
/// see zero ghost values.
fn trilinear(grid: &VelocityGrid, values: &[f64], v: Vec3) -> (f64, bool) {
    let n = grid.points_per_axis() as i64;
    let h = grid.spacing();
    let l = grid.half_width();
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    let mut outside = false;
    for a in 0..3 {
        let x = (v[a] + l) / h - 0.5;
        let i = x.floor();
        base[a] = i as i64;
        frac[a] = x - i;
        if base[a] < 0 || base[a] + 1 > n - 1 {
            outside = true;
        }
    }
    let at = |i: i64, j: i64, k: i64| -> f64 {
        if i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n {
            0.0
        } else {
            values[grid.index(i as usize, j as usize, k as usize)]
        }
    };
    let mut acc = 0.0;
    for dz in 0..2 {
        for dy in 0..2 {
            for dx in 0..2 {
                let w = (if dx == 1 { frac[0] } else { 1.0 - frac[0] })
                    * (if dy == 1 { frac[1] } else { 1.0 - frac[1] })
                    * (if dz == 1 { frac[2] } else { 1.0 - frac[2] });
                if w != 0.0 {
                    acc += w * at(base[0] + dx, base[1] + dy, base[2] + dz);
                }
            }
        }
    }
    (acc, outside)
}

/// `g(v) = r^(alpha + 3 + gamma) f(v0 + r v)` on the same grid by trilinear
/// interpolation. For `r > 1` the source domain is exceeded and zero-filled.
pub fn rescale(f: &DistributionState, tr: &ScalingTransform, gamma: f64) -> Result<DistributionState> {
    let g = *f.grid();
    let amp = tr.r.powf(tr.mass_exponent(gamma));
    let sampled = par::map_range(g.len(), |k| {
        let v = g.node(k);
        let src = [tr.v0[0] + tr.r * v[0], tr.v0[1] + tr.r * v[1], tr.v0[2] + tr.r * v[2]];
        let (val, outside) = trilinear(&g, f.values(), src);
        (amp * val.max(0.0), outside)
    });
    let filled = sampled.iter().filter(|s| s.1).count();
    if filled > 0 {
        log::debug!("rescale: {filled} nodes sampled beyond the source nodes (zero-filled)");
    }
    DistributionState::new(g, sampled.into_iter().map(|s| s.0).collect(), f.time())
}

/// The grid `[-L/r, L/r]^3` with the same `N`. Its node `k` is the image of
/// node `k` of `grid` under `v -> v / r`.
pub fn scaled_grid(grid: &VelocityGrid, r: f64) -> Result<VelocityGrid> {
    VelocityGrid::new(grid.points_per_axis(), grid.half_width() / r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingResidual {
    pub r: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub factors: [f64; 4],
    pub rho_a: f64,
    pub rho_b: f64,
    pub rho_c: f64,
    pub rho_q: f64,
    pub max: f64,
}

fn rel_max<F>(len: usize, diff: F, scale: f64) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let d = par::max_range(len, diff).max(0.0);
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// Relative residuals of the coefficient and operator scalings.
///
/// `f_r` lives on [`scaled_grid`]: its value at node `k` is
/// `r^(alpha + 3 + gamma) f_k`, so no interpolation enters and the residual
/// measures the discretization's covariance alone. `tables_scaled` must be
/// built on that grid.
pub fn scaling_covariance_residual(
    f: &DistributionState,
    tr: &ScalingTransform,
    params: &ModelParams,
    tables: &KernelTables,
    tables_scaled: &KernelTables,
) -> Result<ScalingResidual> {
    let grid = *f.grid();
    let target = scaled_grid(&grid, tr.r)?;
    tables_scaled.grid().ensure_same(&target)?;
    if tr.v0 != [0.0; 3] {
        return Err(LandauError::invalid("v0", "covariance check requires a centered transform"));
    }
    let gamma = params.gamma();
    let amp = tr.r.powf(tr.mass_exponent(gamma));
    let fr = DistributionState::new(target, f.values().iter().map(|x| amp * x).collect(), f.time())?;
    let cf = compute_coefficients(f, tables, params)?;
    let cr = compute_coefficients(&fr, tables_scaled, params)?;
    let qf = q_divergence(f, f, &cf)?;
    let qr = q_divergence(&fr, &fr, &cr)?;
    let [fa, fb, fc, fq] = tr.factors(gamma);
    let len = grid.len();
    let rho_a = rel_max(
        len,
        |k| cr.abar[k].sub(&cf.abar[k].scale(fa)).norm(),
        cf.abar.iter().map(|a| a.norm()).fold(0.0, f64::max) * fa,
    );
    let rho_b = rel_max(
        len,
        |k| {
            let d = [
                cr.bbar[k][0] - fb * cf.bbar[k][0],
                cr.bbar[k][1] - fb * cf.bbar[k][1],
                cr.bbar[k][2] - fb * cf.bbar[k][2],
            ];
            crate::linalg::norm(d)
        },
        cf.sup_bbar() * fb,
    );
    let rho_c = rel_max(len, |k| (cr.cbar[k] - fc * cf.cbar[k]).abs(), cf.sup_cbar() * fc);
    let rho_q = operator_residual(&qr, &qf, fq);
    Ok(ScalingResidual {
        r: tr.r,
        alpha: tr.alpha,
        gamma,
        factors: [fa, fb, fc, fq],
        rho_a,
        rho_b,
        rho_c,
        rho_q,
        max: rho_a.max(rho_b).max(rho_c).max(rho_q),
    })
}

fn operator_residual(qr: &CollisionOutput, qf: &CollisionOutput, factor: f64) -> f64 {
    rel_max(
        qr.values.len(),
        |k| (qr.values[k] - factor * qf.values[k]).abs(),
        qf.max_abs() * factor,
    )
}
