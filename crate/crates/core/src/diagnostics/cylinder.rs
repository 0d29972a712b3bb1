use crate::error::{LandauError, Result};
use crate::grid::{Cylinder, DistributionState};
use crate::par;

/// Slack when matching snapshot times against the cylinder's time interval.
const TIME_SLACK: f64 = 1e-12;

/// Space-time `L^p` norm of a homogeneous history over a kinetic cylinder.
///
/// The velocity integral runs over nodes in `B_r(v0)`; the time integral is
/// the trapezoid rule on the snapshot times, with the integrand linearly
/// interpolated at the interval ends. Homogeneous data are constant in `x`,
/// so the spatial extent contributes the measure `(2 r^3)^3` of the cube
/// circumscribing the transported ball. `p = inf` takes the maximum over
/// snapshots inside the interval.
pub fn cylinder_norms(history: &[DistributionState], cyl: &Cylinder, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(LandauError::invalid("p", format!("must be >= 1, got {p}")));
    }
    let (t_lo, t_hi) = cyl.time_interval();
    let mut snaps: Vec<&DistributionState> = history.iter().collect();
    snaps.sort_by(|a, b| a.time().total_cmp(&b.time()));
    let covered = (
        snaps.first().map_or(f64::NAN, |s| s.time()),
        snaps.last().map_or(f64::NAN, |s| s.time()),
    );
    if snaps.is_empty() || covered.0 > t_lo + TIME_SLACK || covered.1 < t_hi - TIME_SLACK {
        return Err(LandauError::Coverage {
            covered_start: covered.0,
            covered_end: covered.1,
            needed_start: t_lo,
            needed_end: t_hi,
        });
    }
    for w in snaps.windows(2) {
        w[0].grid().ensure_same(w[1].grid())?;
    }
    let ball_integral = |f: &DistributionState| -> f64 {
        let g = f.grid();
        let v = f.values();
        if p.is_infinite() {
            par::max_range(g.len(), |k| {
                if cyl.contains_velocity(g.node(k)) {
                    v[k].abs()
                } else {
                    0.0
                }
            })
        } else {
            par::sum_range(g.len(), |k| {
                if cyl.contains_velocity(g.node(k)) {
                    v[k].abs().powf(p)
                } else {
                    0.0
                }
            }) * g.cell_volume()
        }
    };
    let samples: Vec<(f64, f64)> = snaps.iter().map(|s| (s.time(), ball_integral(s))).collect();
    if p.is_infinite() {
        let m = samples
            .iter()
            .filter(|(t, _)| *t > t_lo - TIME_SLACK && *t <= t_hi + TIME_SLACK)
            .map(|s| s.1)
            .fold(0.0, f64::max);
        return Ok(m);
    }
    let mut integral = 0.0;
    for w in samples.windows(2) {
        let (ta, ya) = w[0];
        let (tb, yb) = w[1];
        let a = ta.max(t_lo);
        let b = tb.min(t_hi);
        if b <= a || tb <= ta {
            continue;
        }
        let lerp = |t: f64| ya + (yb - ya) * (t - ta) / (tb - ta);
        integral += 0.5 * (b - a) * (lerp(a) + lerp(b));
    }
    let space = (2.0 * cyl.space_radius()).powi(3);
    Ok((space * integral).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lp_norm, make_maxwellian, VelocityGrid};

    fn history(f: &DistributionState, times: &[f64]) -> Vec<DistributionState> {
        times.iter().map(|&t| f.clone().with_time(t)).collect()
    }

    #[test]
    fn constant_history_is_a_product_measure() {
        let g = VelocityGrid::new(32, 8.0).unwrap();
        let f = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
        let r = 7.5;
        let cyl = Cylinder::new(r * r, [0.0; 3], [0.0; 3], r).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * r * r / 10.0).collect();
        let got = cylinder_norms(&history(&f, &times), &cyl, 2.0).unwrap();
        // the ball of radius 7.5 holds all but a Gaussian-small tail
        let want = (r * r).sqrt() * (2.0 * r.powi(3)).powf(1.5) * lp_norm(&f, 2.0).unwrap();
        assert!((got - want).abs() / want < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn zero_history_and_missing_coverage() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let z = DistributionState::zeros(g);
        let cyl = Cylinder::new(1.0, [0.0; 3], [0.0; 3], 1.0).unwrap();
        assert_eq!(cylinder_norms(&history(&z, &[0.0, 0.5, 1.0]), &cyl, 2.0).unwrap(), 0.0);
        assert!(matches!(
            cylinder_norms(&history(&z, &[0.5, 1.0]), &cyl, 2.0),
            Err(LandauError::Coverage { .. })
        ));
    }
}
