//! Explicit constants of the iteration: `sigma = 42/19`,
//! `q_i = (sigma/2)^i = (21/19)^i`,
//! `sum 1/(2 q_i) = 19/4` and `sum (2i + 5/2)/q_i = 893/4`.

use super::finding::AuditFinding;

pub const SIGMA: f64 = 42.0 / 19.0;
pub const MOSER_RATIO: f64 = 21.0 / 19.0;
pub const MOSER_LIMITS: (f64, f64) = (19.0 / 4.0, 893.0 / 4.0);
pub const MOSER_TOLERANCE: f64 = 1e-10;
/// Term count at which the limits are asserted.
pub const MOSER_TERMS: usize = 10_000;

/// Neumaier-compensated accumulator.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Partial sums after `n` terms.
pub fn moser_partial_sums(n: usize) -> (f64, f64) {
    let ln_q = MOSER_RATIO.ln();
    let mut s1 = Compensated::default();
    let mut s2 = Compensated::default();
    for i in 1..=n {
        let inv_q = (-(i as f64) * ln_q).exp();
        s1.add(0.5 * inv_q);
        s2.add((2.0 * i as f64 + 2.5) * inv_q);
    }
    (s1.value(), s2.value())
}

pub fn moser_constants_audit(n: usize) -> AuditFinding {
    let (l1, l2) = MOSER_LIMITS;
    let (s1, s2) = moser_partial_sums(n);
    // q_i^2 <= 16^(i+1)  <=>  2 i ln(21/19) <= (i + 1) ln 16
    let ln_q = MOSER_RATIO.ln();
    let ln16 = 16f64.ln();
    let worst_growth = (1..=n)
        .map(|i| 2.0 * i as f64 * ln_q - (i as f64 + 1.0) * ln16)
        .fold(f64::NEG_INFINITY, f64::max);
    let below = s1 <= l1 + 1e-12 && s2 <= l2 + 1e-12;
    let converged = n < MOSER_TERMS
        || ((s1 - l1).abs() <= MOSER_TOLERANCE && (s2 - l2).abs() <= MOSER_TOLERANCE);
    AuditFinding::new("moser-constants")
        .measure("sigma", SIGMA)
        .measure("q_ratio", MOSER_RATIO)
        .measure("terms", n)
        .measure("sum_inverse", s1)
        .measure("sum_weighted", s2)
        .measure("limit_inverse", l1)
        .measure("limit_weighted", l2)
        .measure("error_inverse", (s1 - l1).abs())
        .measure("error_weighted", (s2 - l2).abs())
        .measure("max_log_q2_over_16_pow", worst_growth)
        .tolerance("sum", MOSER_TOLERANCE)
        .note(format!("limits asserted once n >= {MOSER_TERMS}"))
        .check(below && converged && worst_growth <= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_term() {
        let (a, b) = moser_partial_sums(1);
        assert!((a - 19.0 / 42.0).abs() < 1e-15);
        assert!((b - 4.5 * 19.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn limits_at_ten_thousand_terms() {
        let f = moser_constants_audit(10_000);
        assert!(f.is_pass(), "{f:?}");
        assert!(f.value("error_weighted").unwrap() < 1e-10);
    }
}
