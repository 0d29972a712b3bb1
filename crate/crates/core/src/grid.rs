//! Velocity grid, distribution snapshots and quadrature primitives.

use serde::{Deserialize, Serialize};

use crate::error::{LandauError, Result};
use crate::linalg::{dot, Vec3};
use crate::par;

/// Default half-width of the velocity box, in thermal radii.
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;

/// Cell-centered uniform grid on `[-L, L]^3` with `N` nodes per axis.
///
/// Node `k` along an axis sits at `-L + (k + 1/2) h`, `h = 2L / N`. With `N`
/// even no node coincides with the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    n: usize,
    half_width: f64,
}

impl VelocityGrid {
    pub fn new(points_per_axis: usize, half_width: f64) -> Result<Self> {
        if points_per_axis == 0 || points_per_axis % 2 != 0 {
            return Err(LandauError::invalid(
                "grid.N",
                format!("must be an even positive integer, got {points_per_axis}"),
            ));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(LandauError::invalid(
                "grid.L",
                format!("must be positive and finite, got {half_width}"),
            ));
        }
        Ok(VelocityGrid {
            n: points_per_axis,
            half_width,
        })
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Midpoint quadrature weight `h^3`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    /// Total number of nodes, `N^3`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate of node `k` along one axis. Exactly antisymmetric:
    /// `coord(N - 1 - k) == -coord(k)`.
    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        (2.0 * k as f64 + 1.0 - self.n as f64) * (self.half_width / self.n as f64)
    }

    /// Flat index, x fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n;
        let j = (idx / self.n) % self.n;
        let k = idx / (self.n * self.n);
        [i, j, k]
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.ijk(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Stride of a unit step along `axis` in flat indexing.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.n,
            _ => self.n * self.n,
        }
    }

    /// Index of the node closest to `v` (clamped to the grid).
    pub fn nearest_node(&self, v: Vec3) -> usize {
        let h = self.spacing();
        let pick = |x: f64| {
            let t = ((x + self.half_width) / h - 0.5).round();
            t.clamp(0.0, (self.n - 1) as f64) as usize
        };
        self.index(pick(v[0]), pick(v[1]), pick(v[2]))
    }

    pub fn ensure_same(&self, other: &VelocityGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LandauError::GridMismatch(format!(
                "N = {}, L = {} versus N = {}, L = {}",
                self.n, self.half_width, other.n, other.half_width
            )))
        }
    }
}

/// Nonnegative phase-space density sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionState {
    pub(crate) grid: VelocityGrid,
    pub(crate) values: Vec<f64>,
    pub(crate) time: f64,
}

/// One Gaussian term `mass (2 pi T_i)^{-1/2} ...` with per-axis temperatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mass: f64,
    pub mean: Vec3,
    pub temperature: Vec3,
}

impl GaussianComponent {
    pub fn isotropic(mass: f64, mean: Vec3, temperature: f64) -> Self {
        GaussianComponent {
            mass,
            mean,
            temperature: [temperature; 3],
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(LandauError::invalid(
                "mass",
                format!("must be positive, got {}", self.mass),
            ));
        }
        if self.temperature.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(LandauError::invalid(
                "temperature",
                format!("must be positive, got {:?}", self.temperature),
            ));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(LandauError::invalid("mean", "must be finite"));
        }
        Ok(())
    }

    pub fn density(&self, v: Vec3) -> f64 {
        let mut expo = 0.0;
        let mut norm = self.mass;
        for a in 0..3 {
            let d = v[a] - self.mean[a];
            expo += d * d / (2.0 * self.temperature[a]);
            norm /= (2.0 * std::f64::consts::PI * self.temperature[a]).sqrt();
        }
        norm * (-expo).exp()
    }
}

impl DistributionState {
    /// Validating constructor: values must be finite and nonnegative.
    pub fn new(grid: VelocityGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LandauError::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some((k, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(LandauError::invalid(
                "values",
                format!("node {k} holds {v}; densities must be finite and nonnegative"),
            ));
        }
        Ok(DistributionState { grid, values, time })
    }

    /// Skips the sign check. Used for intermediate stages and signed test data.
    pub fn new_unchecked(grid: VelocityGrid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        DistributionState { grid, values, time }
    }

    pub fn zeros(grid: VelocityGrid) -> Self {
        DistributionState {
            grid,
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    /// Samples `density` at every node.
    pub fn from_fn<F>(grid: VelocityGrid, density: F) -> Result<Self>
    where
        F: Fn(Vec3) -> f64 + Sync + Send,
    {
        let values = par::map_range(grid.len(), |idx| density(grid.node(idx)));
        DistributionState::new(grid, values, 0.0)
    }

    pub fn mixture(grid: VelocityGrid, components: &[GaussianComponent]) -> Result<Self> {
        for c in components {
            c.validate()?;
        }
        DistributionState::from_fn(grid, |v| components.iter().map(|c| c.density(v)).sum())
    }

    #[inline]
    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `alpha * f` for `alpha >= 0`.
    pub fn scaled(&self, alpha: f64) -> Self {
        DistributionState {
            grid: self.grid,
            values: self.values.iter().map(|v| v * alpha).collect(),
            time: self.time,
        }
    }

    /// Quadrature of `weight(v) f(v)`.
    pub fn integrate<W>(&self, weight: W) -> f64
    where
        W: Fn(Vec3) -> f64 + Sync + Send,
    {
        let g = self.grid;
        par::sum_range(g.len(), |k| weight(g.node(k)) * self.values[k]) * g.cell_volume()
    }

    pub fn mass(&self) -> f64 {
        par::sum_range(self.values.len(), |k| self.values[k]) * self.grid.cell_volume()
    }

    pub fn momentum(&self) -> Vec3 {
        [
            self.integrate(|v| v[0]),
            self.integrate(|v| v[1]),
            self.integrate(|v| v[2]),
        ]
    }

    /// `int |v|^2 f`.
    pub fn energy(&self) -> f64 {
        self.integrate(|v| dot(v, v))
    }

    /// Directional second moments `int v_a^2 f`.
    pub fn directional_second_moments(&self) -> Vec3 {
        [
            self.integrate(|v| v[0] * v[0]),
            self.integrate(|v| v[1] * v[1]),
            self.integrate(|v| v[2] * v[2]),
        ]
    }

    /// `int f log f` with `0 log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        par::sum_range(self.values.len(), |k| {
            let f = self.values[k];
            if f > 0.0 {
                f * f.ln()
            } else {
                0.0
            }
        }) * self.grid.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        par::min_range(self.values.len(), |k| self.values[k])
    }
}

/// Seeded random Gaussian mixture with `1..=max_components` terms, means in
/// `[-mean_spread, mean_spread]^3`, per-axis temperatures in
/// `temperature_range` and total mass `total_mass`.
pub fn random_mixture<R: rand::Rng>(
    rng: &mut R,
    max_components: usize,
    mean_spread: f64,
    temperature_range: (f64, f64),
    total_mass: f64,
) -> Vec<GaussianComponent> {
    let count = rng.random_range(1..=max_components.max(1));
    let weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.2..1.0)).collect();
    let wsum: f64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| {
            let mut mean = [0.0; 3];
            let mut temperature = [0.0; 3];
            for a in 0..3 {
                mean[a] = if mean_spread > 0.0 {
                    rng.random_range(-mean_spread..mean_spread)
                } else {
                    0.0
                };
                temperature[a] = rng.random_range(temperature_range.0..=temperature_range.1);
            }
            GaussianComponent {
                mass: total_mass * w / wsum,
                mean,
                temperature,
            }
        })
        .collect()
}

/// Sampled Maxwellian `mass (2 pi T)^{-3/2} exp(-|v - mean|^2 / (2T))`.
pub fn make_maxwellian(
    grid: VelocityGrid,
    mass: f64,
    mean: Vec3,
    temperature: f64,
) -> Result<DistributionState> {
    DistributionState::mixture(
        grid,
        &[GaussianComponent::isotropic(mass, mean, temperature)],
    )
}

/// Midpoint quadrature of `|v|^s f`.
pub fn moment(f: &DistributionState, s: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(LandauError::invalid(
            "s",
            format!("moment order must be >= 0, got {s}"),
        ));
    }
    if s == 0.0 {
        return Ok(f.mass());
    }
    Ok(f.integrate(|v| dot(v, v).powf(0.5 * s)))
}

/// Discrete `L^p` norm; `p = f64::INFINITY` gives the maximum.
pub fn lp_norm(f: &DistributionState, p: f64) -> Result<f64> {
    lp_norm_values(f.grid(), f.values(), p)
}

pub(crate) fn lp_norm_values(grid: &VelocityGrid, values: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(LandauError::invalid(
            "p",
            format!("Lebesgue exponent must be >= 1 or infinite, got {p}"),
        ));
    }
    if p.is_infinite() {
        return Ok(par::max_range(values.len(), |k| values[k].abs()).max(0.0));
    }
    let sum = par::sum_range(values.len(), |k| values[k].abs().powf(p));
    Ok((sum * grid.cell_volume()).powf(1.0 / p))
}

/// Minimum of `f` over nodes with `|v| <= radius`.
pub fn inf_on_ball(f: &DistributionState, radius: f64) -> Result<f64> {
    let g = f.grid();
    if !(radius > 0.0) {
        return Err(LandauError::invalid(
            "rho",
            format!("ball radius must be positive, got {radius}"),
        ));
    }
    if radius > g.half_width() {
        return Err(LandauError::DomainTruncation {
            radius,
            half_width: g.half_width(),
        });
    }
    let r2 = radius * radius;
    let m = par::min_range(g.len(), |k| {
        let v = g.node(k);
        if dot(v, v) <= r2 {
            f.values[k]
        } else {
            f64::INFINITY
        }
    });
    // a ball smaller than the half-cell contains no node
    Ok(if m.is_finite() { m } else { 0.0 })
}

/// Kinetic cylinder `(t0 - r^2, t0] x {|x - x0 - t v0| < r^3} x B_r(v0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub t0: f64,
    pub x0: Vec3,
    pub v0: Vec3,
    radius: f64,
}

impl Cylinder {
    pub fn new(t0: f64, x0: Vec3, v0: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LandauError::invalid(
                "r",
                format!("cylinder radius must be positive, got {radius}"),
            ));
        }
        Ok(Cylinder { t0, x0, v0, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `(t0 - r^2, t0]`.
    pub fn time_interval(&self) -> (f64, f64) {
        (self.t0 - self.radius * self.radius, self.t0)
    }

    /// Radius of the transported spatial ball, `r^3`.
    pub fn space_radius(&self) -> f64 {
        self.radius.powi(3)
    }

    pub fn velocity_radius(&self) -> f64 {
        self.radius
    }

    pub fn contains_velocity(&self, v: Vec3) -> bool {
        let d = [v[0] - self.v0[0], v[1] - self.v0[1], v[2] - self.v0[2]];
        dot(d, d) < self.radius * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn std_grid() -> VelocityGrid {
        VelocityGrid::new(32, 8.0).unwrap()
    }

    #[test]
    fn grid_rejects_odd_or_nonpositive() {
        assert!(VelocityGrid::new(31, 8.0).is_err());
        assert!(VelocityGrid::new(0, 8.0).is_err());
        assert!(VelocityGrid::new(16, -1.0).is_err());
        assert!(VelocityGrid::new(16, f64::NAN).is_err());
    }

    #[test]
    fn nodes_strictly_inside_and_symmetric() {
        for n in [8, 16, 32, 48] {
            let g = VelocityGrid::new(n, 8.0).unwrap();
            let h = g.spacing();
            assert!((n as f64 * h - 16.0).abs() <= 16.0 * f64::EPSILON);
            for k in 0..n {
                let c = g.coord(k);
                assert!(c.abs() < 8.0);
                assert_eq!(g.coord(n - 1 - k), -c);
                assert!(c != 0.0);
            }
        }
        let g = std_grid();
        assert_eq!(g.len() as f64 * g.cell_volume(), 16.0f64.powi(3));
    }

    #[test]
    fn maxwellian_mass_and_energy() {
        let f = make_maxwellian(std_grid(), 1.0, [0.0; 3], 1.0).unwrap();
        assert!((moment(&f, 0.0).unwrap() - 1.0).abs() < 1e-6);
        assert!((moment(&f, 2.0).unwrap() - 3.0).abs() < 1e-5);
    }

    #[test]
    fn maxwellian_rejects_bad_parameters() {
        let g = std_grid();
        assert!(matches!(
            make_maxwellian(g, -1.0, [0.0; 3], 1.0),
            Err(LandauError::InvalidParameter { name: "mass", .. })
        ));
        assert!(make_maxwellian(g, 0.0, [0.0; 3], 1.0).is_err());
        assert!(make_maxwellian(g, 1.0, [0.0; 3], 0.0).is_err());
    }

    #[test]
    fn moment_of_zero_state() {
        let f = DistributionState::zeros(std_grid());
        assert_eq!(moment(&f, 0.0).unwrap(), 0.0);
        assert_eq!(moment(&f, 1.5).unwrap(), 0.0);
        assert!(moment(&f, -0.5).is_err());
    }

    #[test]
    fn lp_norms_of_maxwellian() {
        let g = std_grid();
        let f = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
        let l2 = lp_norm(&f, 2.0).unwrap();
        let expected = 2f64.powf(-1.5) * PI.powf(-0.75);
        assert!((l2 - expected).abs() < 1e-5, "{l2} vs {expected}");
        // peak sits at the off-center node (h/2, h/2, h/2)
        let linf = lp_norm(&f, f64::INFINITY).unwrap();
        let peak = (2.0 * PI).powf(-1.5);
        let h = g.spacing();
        assert!(linf < peak);
        assert!((linf - peak).abs() <= peak * 3.0 * h * h / 8.0 * 1.01);
        assert!(lp_norm(&f, 0.5).is_err());
        let z = DistributionState::zeros(g);
        assert_eq!(lp_norm(&z, 3.0).unwrap(), 0.0);
        assert_eq!(lp_norm(&z, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn inf_on_ball_cases() {
        let g = std_grid();
        let ell = 0.7;
        let ind = DistributionState::from_fn(g, |v| if dot(v, v) <= 4.0 { ell } else { 0.0 }).unwrap();
        assert_eq!(inf_on_ball(&ind, 1.0).unwrap(), ell);
        assert!(matches!(
            inf_on_ball(&ind, 9.0),
            Err(LandauError::DomainTruncation { .. })
        ));
        let z = DistributionState::zeros(g);
        assert_eq!(inf_on_ball(&z, 1.0).unwrap(), 0.0);

        // direct scan oracle: the outermost included node has the smallest value
        let m = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
        let mut r2_max: f64 = 0.0;
        for k in 0..g.len() {
            let v = g.node(k);
            if dot(v, v) <= 1.0 {
                r2_max = r2_max.max(dot(v, v));
            }
        }
        let expected = (2.0 * PI).powf(-1.5) * (-r2_max / 2.0).exp();
        assert!((inf_on_ball(&m, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn second_moment_converges_under_refinement() {
        let err = |n| {
            let g = VelocityGrid::new(n, 8.0).unwrap();
            let f = make_maxwellian(g, 1.0, [0.0; 3], 1.0).unwrap();
            (moment(&f, 2.0).unwrap() - 3.0).abs()
        };
        assert!(err(32) < err(16));
    }

    #[test]
    fn cylinder_extents() {
        let c = Cylinder::new(1.0, [0.0; 3], [0.5, 0.0, 0.0], 0.5).unwrap();
        assert_eq!(c.time_interval(), (0.75, 1.0));
        assert_eq!(c.space_radius(), 0.125);
        assert!(c.contains_velocity([0.6, 0.1, 0.0]));
        assert!(!c.contains_velocity([1.1, 0.0, 0.0]));
        assert!(Cylinder::new(0.0, [0.0; 3], [0.0; 3], 0.0).is_err());
    }
}
