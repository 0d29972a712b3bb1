//! Convolution coefficients `abar`, `bbar`, `cbar` of the collision operator.
//!
//! With `Pi(w) = I - w w^T / |w|^2`,
//!
//! ```text
//! abar = a_gamma int |w|^(gamma+2) Pi(w) f(v - w) dw
//! bbar = b_gamma int |w|^gamma w f(v - w) dw
//! cbar = c_gamma int |w|^gamma f(v - w) dw     (gamma > -3)
//! cbar = f                                      (gamma = -3)
//! ```
//!
//! The constants are tied together by `b_gamma = 2 a_gamma` and
//! `c_gamma = 2 a_gamma (gamma + 3)`, which is what makes the divergence,
//! nondivergence and bilinear forms of the operator agree. For Coulomb the
//! default amplitude `a_{-3} = 1 / (8 pi)` makes `div bbar = f` exactly.

mod bounds;
mod ellipticity;
mod kernels;

use serde::{Deserialize, Serialize};

pub use bounds::{
    bound_exponents, coeff_bound_ratios, coeff_bounds_family_audit, verify_coeff_bounds,
    BoundExponents, CoeffBoundRatios, FamilyConfig,
};
pub use ellipticity::{ellipticity_spectrum, EllipticityReport};
pub use kernels::{build_kernels, KernelTables, CHANNELS, CHANNEL_LABELS, NEAR_SHELL};

use crate::error::{LandauError, Result};
use crate::grid::{DistributionState, VelocityGrid};
use crate::linalg::{Sym3, Vec3};
use crate::par;

/// Coulomb amplitude for which `c̄ = f` is consistent with `div b̄`.
pub const COULOMB_AMPLITUDE: f64 = 1.0 / (8.0 * std::f64::consts::PI);

/// Interaction exponent `gamma`, kernel amplitude and integrability slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    gamma: f64,
    a_gamma: f64,
    delta: f64,
}

impl ModelParams {
    /// Default amplitude: `1/(8 pi)` for Coulomb, `1` otherwise.
    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        let a = if gamma == -3.0 { COULOMB_AMPLITUDE } else { 1.0 };
        ModelParams::with_amplitude(gamma, a, delta)
    }

    pub fn with_amplitude(gamma: f64, a_gamma: f64, delta: f64) -> Result<Self> {
        if !(-3.0..=1.0).contains(&gamma) {
            return Err(LandauError::invalid(
                "model.gamma",
                format!("must lie in [-3, 1], got {gamma}"),
            ));
        }
        if !(a_gamma > 0.0 && a_gamma.is_finite()) {
            return Err(LandauError::invalid(
                "model.a_gamma",
                format!("must be positive, got {a_gamma}"),
            ));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(LandauError::invalid(
                "model.delta",
                format!("must be positive, got {delta}"),
            ));
        }
        if gamma == -3.0 && (a_gamma - COULOMB_AMPLITUDE).abs() > 1e-15 {
            log::warn!(
                "a_gamma = {a_gamma} with gamma = -3: cbar = f no longer equals div bbar = 8 pi a_gamma f"
            );
        }
        Ok(ModelParams {
            gamma,
            a_gamma,
            delta,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a_gamma(&self) -> f64 {
        self.a_gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_coulomb(&self) -> bool {
        self.gamma == -3.0
    }

    pub fn b_gamma(&self) -> f64 {
        2.0 * self.a_gamma
    }

    /// `None` for Coulomb, where `cbar = f`.
    pub fn c_gamma(&self) -> Option<f64> {
        if self.is_coulomb() {
            None
        } else {
            Some(2.0 * self.a_gamma * (self.gamma + 3.0))
        }
    }

    /// Critical exponent `p = 3 / (5 + gamma)`.
    pub fn p(&self) -> f64 {
        3.0 / (5.0 + self.gamma)
    }

    /// `p + delta`, the exponent of the monitored Lebesgue norm.
    pub fn p_plus_delta(&self) -> f64 {
        self.p() + self.delta
    }
}

/// Per-node `abar`, `bbar`, `cbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFields {
    pub grid: VelocityGrid,
    pub time: f64,
    pub abar: Vec<Sym3>,
    pub bbar: Vec<Vec3>,
    pub cbar: Vec<f64>,
}

impl CoefficientFields {
    pub fn zeros(grid: VelocityGrid) -> Self {
        CoefficientFields {
            grid,
            time: 0.0,
            abar: vec![Sym3::ZERO; grid.len()],
            bbar: vec![[0.0; 3]; grid.len()],
            cbar: vec![0.0; grid.len()],
        }
    }

    fn from_channels(
        grid: VelocityGrid,
        time: f64,
        ch: [Vec<f64>; CHANNELS],
        cbar: Vec<f64>,
    ) -> Self {
        let abar = (0..grid.len())
            .map(|k| Sym3([ch[0][k], ch[1][k], ch[2][k], ch[3][k], ch[4][k], ch[5][k]]))
            .collect();
        let bbar = (0..grid.len())
            .map(|k| [ch[6][k], ch[7][k], ch[8][k]])
            .collect();
        CoefficientFields {
            grid,
            time,
            abar,
            bbar,
            cbar,
        }
    }

    /// Channel `c` in [`CHANNEL_LABELS`] order, as a flat nodal array.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        match c {
            0..=5 => self.abar.iter().map(|a| a.0[c]).collect(),
            6..=8 => self.bbar.iter().map(|b| b[c - 6]).collect(),
            _ => self.cbar.clone(),
        }
    }

    /// `sup_v |abar(v)|` in the spectral norm.
    pub fn sup_abar(&self) -> f64 {
        par::max_range(self.abar.len(), |k| {
            let ev = self.abar[k].eigenvalues();
            ev[0].abs().max(ev[2].abs())
        })
        .max(0.0)
    }

    pub fn sup_bbar(&self) -> f64 {
        par::max_range(self.bbar.len(), |k| crate::linalg::norm(self.bbar[k])).max(0.0)
    }

    pub fn sup_cbar(&self) -> f64 {
        par::max_range(self.cbar.len(), |k| self.cbar[k].abs()).max(0.0)
    }

    /// Largest eigenvalue of `abar` over the given node predicate.
    pub fn max_eigenvalue_where<P>(&self, keep: P) -> f64
    where
        P: Fn(usize) -> bool + Sync + Send,
    {
        par::max_range(self.abar.len(), |k| {
            if keep(k) {
                self.abar[k].max_eigenvalue()
            } else {
                f64::NEG_INFINITY
            }
        })
    }
}

fn check_tables(f: &DistributionState, tables: &KernelTables, params: &ModelParams) -> Result<()> {
    tables.grid().ensure_same(f.grid())?;
    if tables.params() != params {
        return Err(LandauError::GridMismatch(format!(
            "kernel tables were built for {:?}, coefficients requested for {:?}",
            tables.params(),
            params
        )));
    }
    Ok(())
}

/// Coefficients by zero-padded FFT convolution on the doubled grid.
pub fn compute_coefficients(
    f: &DistributionState,
    tables: &KernelTables,
    params: &ModelParams,
) -> Result<CoefficientFields> {
    check_tables(f, tables, params)?;
    let ch = tables.convolve(f.values());
    let cbar = cbar_from(f, params, &ch[9]);
    Ok(CoefficientFields::from_channels(*f.grid(), f.time(), ch, cbar))
}

/// Same coefficients by direct `O(N^6)` summation of the kernel tables.
pub fn compute_coefficients_direct(
    f: &DistributionState,
    tables: &KernelTables,
    params: &ModelParams,
) -> Result<CoefficientFields> {
    check_tables(f, tables, params)?;
    let ch = tables.convolve_direct(f.values());
    let cbar = cbar_from(f, params, &ch[9]);
    Ok(CoefficientFields::from_channels(*f.grid(), f.time(), ch, cbar))
}

fn cbar_from(f: &DistributionState, params: &ModelParams, conv: &[f64]) -> Vec<f64> {
    if params.is_coulomb() {
        f.values().to_vec()
    } else {
        conv.to_vec()
    }
}

/// Result of [`divergence_identity_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResidual {
    /// `max |sum_j d_j abar_ij + bbar_i|` over interior nodes.
    pub r1: f64,
    /// `r1 / max |bbar|`.
    pub r1_relative: f64,
    /// `max |div bbar - cbar|`.
    pub r2_minus: f64,
    /// `max |div bbar + cbar|`.
    pub r2_plus: f64,
    /// Residual of the convention that fits better.
    pub r2: f64,
    /// `+1.0` if `div bbar = +cbar` fits better, `-1.0` for `div bbar = -cbar`.
    pub r2_sign: f64,
    /// `r2 / max |cbar|`.
    pub r2_relative: f64,
}

/// Residuals of `sum_j d_j abar_ij = -bbar_i` and of `div bbar = +/- cbar`
/// with centered differences at interior nodes.
pub fn divergence_identity_residual(fields: &CoefficientFields) -> DivergenceResidual {
    let g = fields.grid;
    let n = g.points_per_axis();
    let h = g.spacing();
    let interior = |k: usize| {
        let [i, j, l] = g.ijk(k);
        [i, j, l].iter().all(|&x| x >= 1 && x + 1 < n)
    };
    let per_node = par::map_range(g.len(), |k| {
        if !interior(k) {
            return (0.0, 0.0, 0.0);
        }
        let mut r1: f64 = 0.0;
        let mut div_b = 0.0;
        for i in 0..3 {
            let mut dsum = 0.0;
            for j in 0..3 {
                let s = g.stride(j);
                dsum += (fields.abar[k + s].get(i, j) - fields.abar[k - s].get(i, j)) / (2.0 * h);
            }
            r1 = r1.max((dsum + fields.bbar[k][i]).abs());
            let s = g.stride(i);
            div_b += (fields.bbar[k + s][i] - fields.bbar[k - s][i]) / (2.0 * h);
        }
        let c = fields.cbar[k];
        (r1, (div_b - c).abs(), (div_b + c).abs())
    });
    let r1 = per_node.iter().map(|x| x.0).fold(0.0, f64::max);
    let r2_minus = per_node.iter().map(|x| x.1).fold(0.0, f64::max);
    let r2_plus = per_node.iter().map(|x| x.2).fold(0.0, f64::max);
    let (r2, r2_sign) = if r2_minus <= r2_plus {
        (r2_minus, 1.0)
    } else {
        (r2_plus, -1.0)
    };
    let bmax = fields.sup_bbar();
    let cmax = fields.sup_cbar();
    DivergenceResidual {
        r1,
        r1_relative: if bmax > 0.0 { r1 / bmax } else { 0.0 },
        r2_minus,
        r2_plus,
        r2,
        r2_sign,
        r2_relative: if cmax > 0.0 { r2 / cmax } else { 0.0 },
    }
}
