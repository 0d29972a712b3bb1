use serde::{Deserialize, Serialize};

use crate::coefficients::ModelParams;
use crate::error::{LandauError, Result};
use crate::grid::{inf_on_ball, lp_norm, moment, DistributionState};

/// The tuple `(M0, S0(s), E0, P0(p + delta), sup f, inf_{B_rho/2} f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub time: f64,
    pub gamma: f64,
    pub s: f64,
    pub delta: f64,
    /// `3 / (5 + gamma)`.
    pub p: f64,
    pub m0: f64,
    pub s0: f64,
    pub e0: f64,
    /// `||f||_{p + delta}`.
    pub p0: f64,
    pub sup_f: f64,
    pub rho: f64,
    /// `min f` over nodes in `B_{rho/2}(0)`.
    pub inf_ball: f64,
}

pub fn criterion_report(
    f: &DistributionState,
    params: &ModelParams,
    s: f64,
    rho: f64,
) -> Result<CriterionReport> {
    if !(s > 0.0 && s < 2.0) {
        return Err(LandauError::invalid(
            "s",
            format!("moment order must lie in (0, 2), got {s}"),
        ));
    }
    let p = params.p();
    Ok(CriterionReport {
        time: f.time(),
        gamma: params.gamma(),
        s,
        delta: params.delta(),
        p,
        m0: moment(f, 0.0)?,
        s0: moment(f, s)?,
        e0: moment(f, 2.0)?,
        p0: lp_norm(f, params.p_plus_delta())?,
        sup_f: lp_norm(f, f64::INFINITY)?,
        rho,
        inf_ball: inf_on_ball(f, 0.5 * rho)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_maxwellian, VelocityGrid};

    #[test]
    fn maxwellian_first_moment() {
        // the |v| weight is not smooth at 0: the midpoint error is O(h^4)
        let g = VelocityGrid::new(96, 8.0).unwrap();
        let f = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
        let r = criterion_report(&f, &ModelParams::new(-3.0, 0.1).unwrap(), 1.0, 1.0).unwrap();
        let want = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((r.s0 - want).abs() < 1e-5, "{}", r.s0);
        assert_eq!(r.p, 1.5);
        assert!((r.m0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_state_reports_zeros() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let r = criterion_report(&DistributionState::zeros(g), &ModelParams::new(-2.0, 0.1).unwrap(), 1.0, 2.0)
            .unwrap();
        assert_eq!([r.m0, r.s0, r.e0, r.p0, r.sup_f, r.inf_ball], [0.0; 6]);
    }

    #[test]
    fn rejects_moment_order_outside_range() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let p = ModelParams::new(-2.0, 0.1).unwrap();
        assert!(criterion_report(&DistributionState::zeros(g), &p, 2.0, 1.0).is_err());
        assert!(criterion_report(&DistributionState::zeros(g), &p, 0.0, 1.0).is_err());
    }
}
