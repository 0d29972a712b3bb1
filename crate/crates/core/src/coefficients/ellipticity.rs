use serde::{Deserialize, Serialize};

use super::{CoefficientFields, ModelParams};
use crate::diagnostics::finding::{AuditFinding, Verdict};
use crate::grid::{inf_on_ball, DistributionState};
use crate::linalg::norm;
use crate::par;

/// Eigenvalue tolerance below which `abar` counts as PSD.
const PSD_TOLERANCE: f64 = 1e-10;

/// Minimal values of `e . (abar e)` at every node, over all unit `e` and
/// over unit `e` orthogonal to `v`, with the fitted lower constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub lambda_all: Vec<f64>,
    pub lambda_perp: Vec<f64>,
    /// `min_v lambda_all(v) / (1 + |v|)^gamma`.
    pub c_a_gamma: f64,
    /// `min_v lambda_perp(v) / (1 + |v|)^(gamma + 2)`.
    pub c_a_gamma2: f64,
    pub findings: Vec<AuditFinding>,
}

impl EllipticityReport {
    pub fn ratio_perp_all(&self, node: usize) -> f64 {
        self.lambda_perp[node] / self.lambda_all[node]
    }

    pub fn hypothesis_met(&self) -> bool {
        !self
            .findings
            .iter()
            .any(|f| f.verdict == Verdict::HypothesisUnmet)
    }
}

/// Ellipticity spectrum of `abar`. The lower-bound hypothesis `f >= ell` on
/// `B_rho(0)` is checked on the grid and only flagged when it fails.
pub fn ellipticity_spectrum(
    fields: &CoefficientFields,
    f: &DistributionState,
    params: &ModelParams,
    ell: f64,
    rho: f64,
) -> EllipticityReport {
    let g = fields.grid;
    let h = g.spacing();
    let gamma = params.gamma();
    let spectra = par::map_range(g.len(), |k| {
        let a = &fields.abar[k];
        let all = a.min_eigenvalue();
        let v = g.node(k);
        let perp = if norm(v) > h {
            a.min_eigenvalue_perp(v)
        } else {
            all
        };
        (all, perp)
    });
    let lambda_all: Vec<f64> = spectra.iter().map(|s| s.0).collect();
    let lambda_perp: Vec<f64> = spectra.iter().map(|s| s.1).collect();
    let mut c_all = f64::INFINITY;
    let mut c_perp = f64::INFINITY;
    let mut worst_psd = (f64::INFINITY, 0usize);
    for k in 0..g.len() {
        let r = 1.0 + norm(g.node(k));
        c_all = c_all.min(lambda_all[k] / r.powf(gamma));
        c_perp = c_perp.min(lambda_perp[k] / r.powf(gamma + 2.0));
        let scale = fields.abar[k].max_eigenvalue().abs().max(f64::MIN_POSITIVE);
        let rel = lambda_all[k] / scale;
        if rel < worst_psd.0 {
            worst_psd = (rel, k);
        }
    }

    let mut findings = Vec::new();
    let hyp = match inf_on_ball(f, rho) {
        Ok(inf) if inf >= ell => AuditFinding::new("ellipticity-hypothesis")
            .measure("inf_on_ball", inf)
            .with_verdict(Verdict::Pass),
        Ok(inf) => AuditFinding::new("ellipticity-hypothesis")
            .measure("inf_on_ball", inf)
            .with_verdict(Verdict::HypothesisUnmet)
            .note(format!("f >= {ell} on B_{rho}(0) does not hold on the grid")),
        Err(e) => AuditFinding::new("ellipticity-hypothesis")
            .with_verdict(Verdict::HypothesisUnmet)
            .note(e.to_string()),
    };
    findings.push(hyp.tolerance("ell", ell).tolerance("rho", rho));

    let psd_ok = worst_psd.0 >= -PSD_TOLERANCE || g.is_empty();
    let mut psd = AuditFinding::new("abar-positive-semidefinite")
        .measure("min_relative_eigenvalue", worst_psd.0)
        .tolerance("relative_eigenvalue", -PSD_TOLERANCE)
        .check(psd_ok);
    if !psd_ok {
        psd = psd.witness(g.node(worst_psd.1));
    }
    findings.push(psd);

    let perp_ok = lambda_perp
        .iter()
        .zip(&lambda_all)
        .all(|(p, a)| *p >= *a - 1e-12 * a.abs().max(1e-300));
    findings.push(
        AuditFinding::new("lambda-perp-dominates")
            .check(perp_ok)
            .note("the perpendicular restriction can only raise the minimum"),
    );

    EllipticityReport {
        lambda_all,
        lambda_perp,
        c_a_gamma: c_all,
        c_a_gamma2: c_perp,
        findings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_kernels, compute_coefficients};
    use crate::grid::{make_maxwellian, VelocityGrid};
    use crate::linalg::dot;

    #[test]
    fn isotropic_state_at_origin_has_equal_minima() {
        let g = VelocityGrid::new(16, 6.0).unwrap();
        let p = ModelParams::new(-2.0, 0.5).unwrap();
        let t = build_kernels(&g, &p);
        let f = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
        let c = compute_coefficients(&f, &t, &p).unwrap();
        let rep = ellipticity_spectrum(&c, &f, &p, 1e-3, 1.0);
        // the nodes nearest the origin have |v| = sqrt(3) h / 2 < h
        let k = g.nearest_node([0.0; 3]);
        assert!((rep.lambda_perp[k] - rep.lambda_all[k]).abs() <= 1e-8);
        assert!(rep.hypothesis_met());
    }

    #[test]
    fn unmet_lower_bound_is_flagged_not_an_error() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let p = ModelParams::new(-2.0, 0.5).unwrap();
        let t = build_kernels(&g, &p);
        let f = DistributionState::from_fn(g, |v| if dot(v, v) < 9.0 && v[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        let c = compute_coefficients(&f, &t, &p).unwrap();
        let rep = ellipticity_spectrum(&c, &f, &p, 1.0, 2.0);
        assert!(!rep.hypothesis_met());
    }
}
