//! The elementary bound `s exp(-mu s^2) <= exp(-1/(4 mu)) / (2 mu)`.
//!
//! It holds with equality at `s = 1/(2 mu)` and for every `s >= 1/(2 mu)`
//! when `mu <= 1/2`. Without the side condition it fails near the maximizer
//! `s = 1/sqrt(2 mu)` whenever `mu != 1/2`.

use serde::{Deserialize, Serialize};

use super::finding::{AuditFinding, Verdict};

/// Relative tolerance of the restricted assertion.
pub const CALC_TOLERANCE: f64 = 1e-12;

/// `(s exp(-mu s^2), exp(-1/(4 mu)) / (2 mu))`.
pub fn calc_sides(mu: f64, s: f64) -> (f64, f64) {
    (s * (-mu * s * s).exp(), (-0.25 / mu).exp() / (2.0 * mu))
}

/// Where the unrestricted inequality fails for one `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnrestrictedRegion {
    pub mu: f64,
    /// `1 / sqrt(2 mu)`.
    pub maximizer: f64,
    pub lhs_at_maximizer: f64,
    pub rhs: f64,
    /// `sqrt(2 mu) exp(1/(4 mu) - 1/2)`.
    pub max_ratio: f64,
    /// Open interval of `s` where `lhs > rhs`; empty when `max_ratio <= 1`.
    pub failing_interval: Option<(f64, f64)>,
}

/// Failure region of the unrestricted inequality. The other root of
/// `lhs = rhs` besides `1/(2 mu)` is found by bisection.
pub fn calc_unrestricted_region(mu: f64) -> UnrestrictedRegion {
    let maximizer = 1.0 / (2.0 * mu).sqrt();
    let (lhs_at_maximizer, rhs) = calc_sides(mu, maximizer);
    let max_ratio = (2.0 * mu).sqrt() * (0.25 / mu - 0.5).exp();
    let equality = 0.5 / mu;
    let failing_interval = if max_ratio > 1.0 + 1e-15 {
        let excess = |s: f64| calc_sides(mu, s).0 - rhs;
        // the other root lies on the far side of the maximizer from 1/(2 mu)
        let (mut lo, mut hi) = if equality > maximizer {
            (0.0, maximizer)
        } else {
            let mut hi = 2.0 * maximizer;
            while excess(hi) > 0.0 {
                hi *= 2.0;
            }
            (maximizer, hi)
        };
        let rising = equality > maximizer;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (excess(mid) > 0.0) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        Some(if root < equality { (root, equality) } else { (equality, root) })
    } else {
        None
    };
    UnrestrictedRegion {
        mu,
        maximizer,
        lhs_at_maximizer,
        rhs,
        max_ratio,
        failing_interval,
    }
}

/// Asserts the restricted inequality on every sampled `s >= 1/(2 mu)` and
/// equality at `s = 1/(2 mu)`, for every sampled `mu in (0, 1/2]`. Samples
/// with `mu > 1/2` or `s < 1/(2 mu)` are skipped by the assertion; the
/// unrestricted failure region is reported for every `mu`.
pub fn calc_inequality_audit(mus: &[f64], s_samples: &[f64]) -> AuditFinding {
    let mut checked = 0usize;
    let mut worst_equality: f64 = 0.0;
    let mut violation: Option<(f64, f64, f64, f64)> = None;
    let mut regions = Vec::new();
    for &mu in mus {
        if !(mu > 0.0) {
            continue;
        }
        regions.push(calc_unrestricted_region(mu));
        if mu > 0.5 {
            continue;
        }
        let equality = 0.5 / mu;
        let (l, r) = calc_sides(mu, equality);
        worst_equality = worst_equality.max((l - r).abs() / r);
        for &s in s_samples {
            if s < equality {
                continue;
            }
            checked += 1;
            let (l, r) = calc_sides(mu, s);
            if l > r * (1.0 + CALC_TOLERANCE) && violation.is_none() {
                violation = Some((mu, s, l, r));
            }
        }
    }
    let ok = violation.is_none() && worst_equality <= CALC_TOLERANCE;
    let failing: Vec<&UnrestrictedRegion> =
        regions.iter().filter(|r| r.failing_interval.is_some()).collect();
    let mut finding = AuditFinding::new("calc-inequality")
        .measure("restricted_samples", checked)
        .measure("equality_relative_error", worst_equality)
        .measure("unrestricted_regions", &regions)
        .measure("unrestricted_failures", failing.len())
        .tolerance("relative", CALC_TOLERANCE)
        .note("asserted only for s >= 1/(2 mu) and mu <= 1/2; the printed inequality omits this side condition")
        .check(ok);
    if let Some(w) = violation {
        finding = finding.witness(w).with_verdict(Verdict::Fail);
    }
    finding
}
