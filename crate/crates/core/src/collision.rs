//! The collision operator `Q(f, g)` in three forms.
//!
//! * bilinear: `div int a(v - w) [f(w) grad g(v) - g(v) grad f(w)] dw`,
//!   evaluated by direct summation (reference, `O(N^6)`);
//! * divergence: `div(abar grad g + bbar g)`, a conservative face-flux scheme;
//! * nondivergence: `tr(abar D^2 g) + cbar g`.
//!
//! All outputs vanish on the outer two-cell shell of the grid. Interior
//! ("active") nodes have every index in `2..=N-3`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{compute_coefficients, CoefficientFields, KernelTables, ModelParams};
use crate::error::{LandauError, Result};
use crate::grid::{DistributionState, VelocityGrid};
use crate::linalg::Sym3;
use crate::par;

/// Floor applied to `f` before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionForm {
    Bilinear,
    Divergence,
    Nondivergence,
}

impl CollisionForm {
    pub fn label(&self) -> &'static str {
        match self {
            CollisionForm::Bilinear => "bilinear",
            CollisionForm::Divergence => "divergence",
            CollisionForm::Nondivergence => "nondivergence",
        }
    }
}

/// How the divergence form treats faces between the active region and the
/// outer shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxBoundary {
    /// Zero flux through the shell: the discrete mass is conserved exactly.
    Closed,
    /// The shell faces carry their computed flux. Consistent up to the
    /// shell, at the price of a boundary mass flux.
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionOutput {
    pub grid: VelocityGrid,
    pub form: CollisionForm,
    pub values: Vec<f64>,
}

impl CollisionOutput {
    /// `sum_k Q_k h^3`.
    pub fn total(&self) -> f64 {
        par::sum_range(self.values.len(), |k| self.values[k]) * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        par::max_range(self.values.len(), |k| self.values[k].abs()).max(0.0)
    }

    /// `max_k |self_k - other_k|`.
    pub fn max_diff(&self, other: &CollisionOutput) -> f64 {
        par::max_range(self.values.len(), |k| (self.values[k] - other.values[k]).abs()).max(0.0)
    }

    /// `alpha Q`, used for bilinearity checks.
    pub fn scaled(&self, alpha: f64) -> CollisionOutput {
        CollisionOutput {
            grid: self.grid,
            form: self.form,
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }
}

/// True if every index of `idx` is in `2..=N-3`.
#[inline]
pub fn is_active(grid: &VelocityGrid, idx: usize) -> bool {
    let n = grid.points_per_axis();
    grid.ijk(idx).iter().all(|&c| c >= 2 && c + 3 <= n)
}

fn check_pair(f: &DistributionState, g: &DistributionState) -> Result<()> {
    f.grid().ensure_same(g.grid())
}

fn check_fields(g: &DistributionState, coeffs: &CoefficientFields) -> Result<()> {
    coeffs.grid.ensure_same(g.grid())?;
    if coeffs.abar.len() != g.values().len() {
        return Err(LandauError::GridMismatch(
            "coefficient field length differs from the state".into(),
        ));
    }
    Ok(())
}

/// Centered first difference of `u` at `k` along `axis`.
#[inline]
fn d1(u: &[f64], k: usize, s: usize, h: f64) -> f64 {
    (u[k + s] - u[k - s]) / (2.0 * h)
}

/// Divergence form `div(abar grad g + bbar g)` with zero flux through the
/// outer shell. This is the solver's canonical form.
pub fn q_divergence(
    f: &DistributionState,
    g: &DistributionState,
    coeffs: &CoefficientFields,
) -> Result<CollisionOutput> {
    q_divergence_with(f, g, coeffs, FluxBoundary::Closed)
}

/// Divergence form with an explicit shell treatment.
///
/// Face `k + e_a / 2` carries
/// `F = sum_b mean(abar)_ab G_b + mean(bbar_a g)`, where `G_a` is the normal
/// difference across the face and the transverse `G_b` average the centered
/// differences at the two adjacent nodes. `Q_k = sum_a (F_{k+} - F_{k-}) / h`,
/// so interior faces cancel in `sum_k Q_k`.
pub fn q_divergence_with(
    f: &DistributionState,
    g: &DistributionState,
    coeffs: &CoefficientFields,
    boundary: FluxBoundary,
) -> Result<CollisionOutput> {
    check_pair(f, g)?;
    check_fields(g, coeffs)?;
    let grid = *g.grid();
    let h = grid.spacing();
    let u = g.values();
    let strides = [grid.stride(0), grid.stride(1), grid.stride(2)];
    // flux through the face between `lo` and `lo + e_a`
    let face = |a: usize, lo: usize| -> f64 {
        let hi = lo + strides[a];
        if boundary == FluxBoundary::Closed && !(is_active(&grid, lo) && is_active(&grid, hi)) {
            return 0.0;
        }
        let am = coeffs.abar[lo].add(&coeffs.abar[hi]).scale(0.5);
        let mut flux = 0.0;
        for b in 0..3 {
            let grad_b = if b == a {
                (u[hi] - u[lo]) / h
            } else {
                let s = strides[b];
                0.5 * (d1(u, lo, s, h) + d1(u, hi, s, h))
            };
            flux += am.get(a, b) * grad_b;
        }
        flux + 0.5 * (coeffs.bbar[lo][a] * u[lo] + coeffs.bbar[hi][a] * u[hi])
    };
    let values = par::map_range(grid.len(), |k| {
        if !is_active(&grid, k) {
            return 0.0;
        }
        let mut q = 0.0;
        for a in 0..3 {
            q += face(a, k) - face(a, k - strides[a]);
        }
        q / h
    });
    Ok(CollisionOutput {
        grid,
        form: CollisionForm::Divergence,
        values,
    })
}

/// Hessian of `u` at `k` by centered differences; mixed terms use the
/// four-point cross stencil.
fn hessian(u: &[f64], k: usize, strides: [usize; 3], h: f64) -> Sym3 {
    let h2 = h * h;
    let mut out = [0.0; 6];
    for a in 0..3 {
        let sa = strides[a];
        for b in a..3 {
            let v = if a == b {
                (u[k + sa] - 2.0 * u[k] + u[k - sa]) / h2
            } else {
                let sb = strides[b];
                (u[k + sa + sb] - u[k + sa - sb] - u[k - sa + sb] + u[k - sa - sb]) / (4.0 * h2)
            };
            out[crate::linalg::sym_index(a, b)] = v;
        }
    }
    Sym3(out)
}

/// Nondivergence form `tr(abar D^2 g) + cbar g`.
pub fn q_nondivergence(
    f: &DistributionState,
    g: &DistributionState,
    coeffs: &CoefficientFields,
) -> Result<CollisionOutput> {
    check_pair(f, g)?;
    check_fields(g, coeffs)?;
    let grid = *g.grid();
    let h = grid.spacing();
    let u = g.values();
    let strides = [grid.stride(0), grid.stride(1), grid.stride(2)];
    let values = par::map_range(grid.len(), |k| {
        if !is_active(&grid, k) {
            return 0.0;
        }
        coeffs.abar[k].contract(&hessian(u, k, strides, h)) + coeffs.cbar[k] * u[k]
    });
    Ok(CollisionOutput {
        grid,
        form: CollisionForm::Nondivergence,
        values,
    })
}

/// Bilinear form by direct summation.
///
/// The bracket field `F = abar^f grad g - g (K_a * grad f)` is built on nodes
/// with indices in `1..=N-2`, with `grad` the centered difference (zero
/// padding outside the box for `f`), and its divergence is taken by centered
/// differences. Cost is `O(N^6)`; intended for `N <= 16`.
pub fn q_bilinear(
    f: &DistributionState,
    g: &DistributionState,
    tables: &KernelTables,
) -> Result<CollisionOutput> {
    check_pair(f, g)?;
    tables.grid().ensure_same(f.grid())?;
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let vol = grid.cell_volume();
    let fv = f.values();
    let gv = g.values();
    let strides = [grid.stride(0), grid.stride(1), grid.stride(2)];
    let padded_grad = |k: usize| -> [f64; 3] {
        let ijk = grid.ijk(k);
        let mut out = [0.0; 3];
        for a in 0..3 {
            let s = strides[a];
            let up = if ijk[a] + 1 < n { fv[k + s] } else { 0.0 };
            let dn = if ijk[a] > 0 { fv[k - s] } else { 0.0 };
            out[a] = (up - dn) / (2.0 * h);
        }
        out
    };
    let grad_f: Vec<[f64; 3]> = par::map_range(grid.len(), padded_grad);
    let inner = |k: usize| grid.ijk(k).iter().all(|&c| c >= 1 && c + 2 <= n);
    let bracket: Vec<[f64; 3]> = par::map_range(grid.len(), |k| {
        if !inner(k) {
            return [0.0; 3];
        }
        let [i, j, l] = grid.ijk(k);
        // abar^f and K_a * grad f at node k
        let mut abar = [0.0; 6];
        let mut drift = [0.0; 3];
        for kk in 0..n {
            for jj in 0..n {
                for ii in 0..n {
                    let w = grid.index(ii, jj, kk);
                    let fw = fv[w];
                    let gf = grad_f[w];
                    if fw == 0.0 && gf == [0.0; 3] {
                        continue;
                    }
                    let t = tables.entry([
                        i as i64 - ii as i64,
                        j as i64 - jj as i64,
                        l as i64 - kk as i64,
                    ]);
                    for c in 0..6 {
                        abar[c] += t[c] * fw;
                    }
                    for (a, d) in drift.iter_mut().enumerate() {
                        for b in 0..3 {
                            *d += t[crate::linalg::sym_index(a, b)] * gf[b];
                        }
                    }
                }
            }
        }
        let abar = Sym3(abar).scale(vol);
        let grad_g = [
            d1(gv, k, strides[0], h),
            d1(gv, k, strides[1], h),
            d1(gv, k, strides[2], h),
        ];
        let diff = abar.mul_vec(grad_g);
        [
            diff[0] - gv[k] * drift[0] * vol,
            diff[1] - gv[k] * drift[1] * vol,
            diff[2] - gv[k] * drift[2] * vol,
        ]
    });
    let values = par::map_range(grid.len(), |k| {
        if !is_active(&grid, k) {
            return 0.0;
        }
        let mut q = 0.0;
        for a in 0..3 {
            let s = strides[a];
            q += (bracket[k + s][a] - bracket[k - s][a]) / (2.0 * h);
        }
        q
    });
    Ok(CollisionOutput {
        grid,
        form: CollisionForm::Bilinear,
        values,
    })
}

/// `D(f) = -int Q(f, f) log f dv` with the divergence form.
pub fn entropy_production(f: &DistributionState, tables: &KernelTables) -> Result<f64> {
    let params: ModelParams = *tables.params();
    let coeffs = compute_coefficients(f, tables, &params)?;
    let q = q_divergence(f, f, &coeffs)?;
    Ok(entropy_production_from(f, &q))
}

/// `-sum_k Q_k log max(f_k, LOG_FLOOR) h^3` for an already evaluated `Q`.
pub fn entropy_production_from(f: &DistributionState, q: &CollisionOutput) -> f64 {
    let fv = f.values();
    -par::sum_range(fv.len(), |k| {
        let qk = q.values[k];
        if qk == 0.0 {
            0.0
        } else {
            qk * fv[k].max(LOG_FLOOR).ln()
        }
    }) * f.grid().cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::build_kernels;
    use crate::grid::{make_maxwellian, GaussianComponent};
    use crate::linalg::dot;

    fn setup(n: usize, l: f64, gamma: f64) -> (VelocityGrid, ModelParams, KernelTables) {
        let g = VelocityGrid::new(n, l).unwrap();
        let p = ModelParams::new(gamma, 0.5).unwrap();
        let t = build_kernels(&g, &p);
        (g, p, t)
    }

    #[test]
    fn zero_inputs_give_zero() {
        let (g, p, t) = setup(8, 4.0, -2.0);
        let z = DistributionState::zeros(g);
        let m = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
        let cz = compute_coefficients(&z, &t, &p).unwrap();
        assert_eq!(q_divergence(&z, &m, &cz).unwrap().max_abs(), 0.0);
        assert_eq!(q_nondivergence(&z, &m, &cz).unwrap().max_abs(), 0.0);
        assert_eq!(q_bilinear(&z, &m, &t).unwrap().max_abs(), 0.0);
        assert_eq!(q_bilinear(&m, &z, &t).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn closed_divergence_form_conserves_mass() {
        let (g, p, t) = setup(16, 5.0, -3.0);
        let f = DistributionState::mixture(
            g,
            &[
                GaussianComponent::isotropic(0.6, [0.8, 0.0, 0.0], 0.5),
                GaussianComponent { mass: 0.4, mean: [-0.7, 0.3, 0.0], temperature: [0.8, 0.4, 0.6] },
            ],
        )
        .unwrap();
        let c = compute_coefficients(&f, &t, &p).unwrap();
        let q = q_divergence(&f, &f, &c).unwrap();
        assert!(q.total().abs() <= 1e-15 * q.max_abs().max(1.0), "{}", q.total());
    }

    #[test]
    fn coulomb_zeroth_order_term_is_f_squared() {
        let (g, p, t) = setup(8, 4.0, -3.0);
        let f = make_maxwellian(g, 1.0, [0.1, 0.0, 0.0], 0.8).unwrap();
        let c = compute_coefficients(&f, &t, &p).unwrap();
        // with abar zeroed only the zeroth-order term survives
        let mut c0 = c.clone();
        c0.abar.iter_mut().for_each(|a| *a = Sym3::ZERO);
        let q = q_nondivergence(&f, &f, &c0).unwrap();
        for k in 0..g.len() {
            if is_active(&g, k) {
                assert_eq!(q.values[k], f.values()[k] * f.values()[k]);
            }
        }
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        let (g, p, t) = setup(8, 4.0, -2.0);
        let f = make_maxwellian(g, 1.0, [0.0; 3], 0.5).unwrap();
        let mut c = compute_coefficients(&f, &t, &p).unwrap();
        c.cbar.iter_mut().for_each(|x| *x = 0.0);
        let hess = Sym3([2.0, 0.5, -0.25, 1.0, 0.75, -3.0]);
        let quad = DistributionState::new_unchecked(
            g,
            (0..g.len())
                .map(|k| {
                    let v = g.node(k);
                    0.5 * dot(v, hess.mul_vec(v)) + v[0] - 2.0 * v[2] + 7.0
                })
                .collect(),
            0.0,
        );
        let q = q_nondivergence(&f, &quad, &c).unwrap();
        for k in 0..g.len() {
            if is_active(&g, k) {
                let want = c.abar[k].contract(&hess);
                assert!((q.values[k] - want).abs() <= 1e-12 * want.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn forms_are_bilinear() {
        let (g, p, t) = setup(8, 4.0, -2.5);
        let f = make_maxwellian(g, 1.0, [0.3, 0.0, -0.2], 0.7).unwrap();
        let h = make_maxwellian(g, 0.5, [-0.4, 0.2, 0.0], 1.1).unwrap();
        let (alpha, beta) = (2.5, 0.3);
        let f2 = f.scaled(alpha);
        let h2 = h.scaled(beta);
        let c = compute_coefficients(&f, &t, &p).unwrap();
        let c2 = compute_coefficients(&f2, &t, &p).unwrap();
        let pairs = [
            (q_divergence(&f, &h, &c).unwrap(), q_divergence(&f2, &h2, &c2).unwrap()),
            (q_nondivergence(&f, &h, &c).unwrap(), q_nondivergence(&f2, &h2, &c2).unwrap()),
            (q_bilinear(&f, &h, &t).unwrap(), q_bilinear(&f2, &h2, &t).unwrap()),
        ];
        for (base, scaled) in pairs {
            let want = base.scaled(alpha * beta);
            assert!(scaled.max_diff(&want) <= 1e-12 * want.max_abs());
        }
    }
}
