use super::finding::AuditFinding;
use crate::solver::TrajectoryLog;

/// Default e-folding rate (per unit time) above which a column is flagged.
pub const DEFAULT_GROWTH_THRESHOLD: f64 = 1.0;

/// Least-squares slope of `ln y` against `t`; `None` if a value is not positive.
fn log_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    if y.iter().any(|v| !(*v > 0.0)) || t.len() < 2 {
        return None;
    }
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let lm = y.iter().map(|v| v.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (ti, yi) in t.iter().zip(y) {
        num += (ti - tm) * (yi.ln() - lm);
        den += (ti - tm) * (ti - tm);
    }
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

/// Growth monitor over named columns sampled at `times`. Informational.
pub fn blowup_from_series(
    times: &[f64],
    columns: &[(&str, Vec<f64>)],
    window: usize,
    threshold: f64,
) -> AuditFinding {
    let len = times.len();
    let w = window.clamp(2, len.max(2));
    let start = len.saturating_sub(w);
    let mut rates = serde_json::Map::new();
    let mut flagged = Vec::new();
    for (name, col) in columns {
        let rate = log_slope(&times[start..], &col[start..len.min(col.len())]);
        if let Some(r) = rate {
            if r > threshold {
                flagged.push(name.to_string());
            }
        }
        rates.insert(
            name.to_string(),
            rate.map_or(serde_json::Value::Null, |r| serde_json::json!(r)),
        );
    }
    let mut finding = AuditFinding::new("blowup-detector")
        .measure("window", w)
        .measure("growth_rates", rates)
        .measure("flagged", &flagged)
        .tolerance("growth_threshold", threshold)
        .note("heuristic monitor over the trailing window");
    if len < window {
        finding = finding.note(format!("log holds {len} rows, fewer than the window {window}"));
    }
    finding
}

/// Fits growth rates of `M0`, `S0(s)` and `P0` over the trailing `window` rows.
pub fn blowup_detector(log: &TrajectoryLog, window: usize, threshold: f64) -> AuditFinding {
    let times: Vec<f64> = log.rows.iter().map(|r| r.time).collect();
    let col = |f: fn(&crate::solver::TrajectoryRow) -> f64| log.rows.iter().map(f).collect::<Vec<_>>();
    blowup_from_series(
        &times,
        &[
            ("M0", col(|r| r.report.m0)),
            ("S0", col(|r| r.report.s0)),
            ("P0", col(|r| r.report.p0)),
        ],
        window,
        threshold,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flagged(f: &AuditFinding) -> Vec<String> {
        serde_json::from_value(f.measured["flagged"].clone()).unwrap()
    }

    #[test]
    fn constant_columns_not_flagged() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let f = blowup_from_series(&t, &[("M0", vec![1.0; 10]), ("P0", vec![0.3; 10])], 5, 1.0);
        assert!(flagged(&f).is_empty());
    }

    #[test]
    fn doubling_column_flagged() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let p0: Vec<f64> = (0..10).map(|i| 2f64.powi(i)).collect();
        let f = blowup_from_series(&t, &[("M0", vec![1.0; 10]), ("P0", p0)], 5, 1.0);
        assert_eq!(flagged(&f), vec!["P0".to_string()]);
    }
}
