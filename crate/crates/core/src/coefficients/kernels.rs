//! Cell-integrated convolution kernels on the doubled grid.
//!
//! The three kernels are
//!
//! * `K_a(z) = a_gamma |z|^(gamma+2) (I - z z^T / |z|^2)` (six packed channels),
//! * `K_b(z) = b_gamma |z|^gamma z` (three channels),
//! * `K_c(z) = c_gamma |z|^gamma` (one channel, identically zero for Coulomb).
//!
//! Entry `d` of a table is the average of the kernel over the cube of side
//! `h` centered at `z = d h`, for integer displacements `d` in `[-N, N-1]^3`.
//! Convolving these averages with nodal values reproduces the exact
//! whole-space convolution of the piecewise-constant reconstruction of `f`.

use rustfft::num_complex::Complex64;

use super::ModelParams;
use crate::fft::Fft3;
use crate::grid::VelocityGrid;
use crate::linalg::{dot, Vec3};
use crate::par;
use crate::quadrature::{composite_rule, gauss_legendre};

pub const CHANNELS: usize = 10;
pub const CHANNEL_LABELS: [&str; CHANNELS] = [
    "axx", "axy", "axz", "ayy", "ayz", "azz", "bx", "by", "bz", "c",
];
/// Channels whose kernel is odd under `z -> -z`.
const ODD: [bool; CHANNELS] = [
    false, false, false, false, false, false, true, true, true, false,
];

/// Gauss points per axis for cells away from the origin.
const FAR_ORDER: usize = 3;
/// Cells with `|d|_inf <= NEAR_SHELL` get the refined rule.
pub const NEAR_SHELL: i64 = 2;
/// Refined rule: `NEAR_PANELS` sub-cells per axis, `NEAR_ORDER` points each.
const NEAR_PANELS: usize = 2;
const NEAR_ORDER: usize = 8;
/// Face rule for the origin cell.
const FACE_PANELS: usize = 4;
const FACE_ORDER: usize = 8;

#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelConsts {
    gamma: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl KernelConsts {
    pub(crate) fn new(params: &ModelParams) -> Self {
        KernelConsts {
            gamma: params.gamma(),
            a: params.a_gamma(),
            b: params.b_gamma(),
            c: params.c_gamma().unwrap_or(0.0),
        }
    }

    /// Pointwise kernel values at `z != 0`.
    #[inline]
    pub(crate) fn eval(&self, z: Vec3) -> [f64; CHANNELS] {
        let r2 = dot(z, z);
        if r2 == 0.0 {
            return [0.0; CHANNELS];
        }
        let rg = r2.powf(0.5 * self.gamma);
        let a = self.a * rg;
        let b = self.b * rg;
        [
            a * (r2 - z[0] * z[0]),
            -a * z[0] * z[1],
            -a * z[0] * z[2],
            a * (r2 - z[1] * z[1]),
            -a * z[1] * z[2],
            a * (r2 - z[2] * z[2]),
            b * z[0],
            b * z[1],
            b * z[2],
            self.c * rg,
        ]
    }

    /// Homogeneity degree of each channel.
    fn degrees(&self) -> [f64; CHANNELS] {
        let g = self.gamma;
        [
            g + 2.0,
            g + 2.0,
            g + 2.0,
            g + 2.0,
            g + 2.0,
            g + 2.0,
            g + 1.0,
            g + 1.0,
            g + 1.0,
            g,
        ]
    }
}

/// Average of the kernels over the cube of side `h` centered at `center`.
///
/// Cells within the near shell of the origin use a refined tensor rule; the
/// origin cell itself is reduced to faces by radial integration, which is
/// exact for homogeneous kernels.
pub(crate) fn cell_average(consts: &KernelConsts, d: [i64; 3], h: f64) -> [f64; CHANNELS] {
    let dmax = d.iter().map(|x| x.abs()).max().unwrap_or(0);
    let center = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
    if dmax == 0 {
        origin_cell_average(consts, h)
    } else if dmax <= NEAR_SHELL {
        let (x, w) = composite_rule(-0.5, 0.5, NEAR_PANELS, NEAR_ORDER);
        tensor_average(consts, center, h, &x, &w)
    } else {
        let (mut x, mut w) = gauss_legendre(FAR_ORDER);
        x.iter_mut().for_each(|t| *t *= 0.5);
        w.iter_mut().for_each(|t| *t *= 0.5);
        tensor_average(consts, center, h, &x, &w)
    }
}

/// Tensor-product rule on the unit cube `[-1/2, 1/2]^3` (weights sum to 1).
fn tensor_average(
    consts: &KernelConsts,
    center: Vec3,
    h: f64,
    x: &[f64],
    w: &[f64],
) -> [f64; CHANNELS] {
    let mut acc = [0.0; CHANNELS];
    for (xk, wk) in x.iter().zip(w) {
        for (xj, wj) in x.iter().zip(w) {
            for (xi, wi) in x.iter().zip(w) {
                let z = [center[0] + h * xi, center[1] + h * xj, center[2] + h * xk];
                let weight = wi * wj * wk;
                let k = consts.eval(z);
                for c in 0..CHANNELS {
                    acc[c] += weight * k[c];
                }
            }
        }
    }
    acc
}

/// Origin cell by the pyramid decomposition: for a kernel homogeneous of
/// degree `beta > -3`, the integral over the pyramid with apex 0 and base
/// face `F` at distance `h/2` is `(h/2) / (beta + 3) * int_F K dA`.
fn origin_cell_average(consts: &KernelConsts, h: f64) -> [f64; CHANNELS] {
    let half = 0.5 * h;
    let (x, w) = composite_rule(-half, half, FACE_PANELS, FACE_ORDER);
    let degrees = consts.degrees();
    let mut acc = [0.0; CHANNELS];
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let (u_axis, v_axis) = ((axis + 1) % 3, (axis + 2) % 3);
            for (xu, wu) in x.iter().zip(&w) {
                for (xv, wv) in x.iter().zip(&w) {
                    let mut p = [0.0; 3];
                    p[axis] = sign * half;
                    p[u_axis] = *xu;
                    p[v_axis] = *xv;
                    let k = consts.eval(p);
                    for c in 0..CHANNELS {
                        acc[c] += wu * wv * k[c];
                    }
                }
            }
        }
    }
    let volume = h * h * h;
    let mut out = [0.0; CHANNELS];
    for c in 0..CHANNELS {
        // the Coulomb c-channel has degree -3 and a zero constant
        out[c] = if ODD[c] || (c == 9 && consts.c == 0.0) {
            0.0
        } else {
            acc[c] * half / (degrees[c] + 3.0) / volume
        };
    }
    out
}

/// Kernel tables for one grid and one parameter set, with their transforms.
pub struct KernelTables {
    grid: VelocityGrid,
    params: ModelParams,
    /// Doubled grid size `M = 2N`.
    m: usize,
    spatial: Vec<[f64; CHANNELS]>,
    /// Real transform for even channels, imaginary part for odd ones.
    spectra: Vec<[f64; CHANNELS]>,
    fft: Fft3,
}

impl std::fmt::Debug for KernelTables {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTables")
            .field("grid", &self.grid)
            .field("params", &self.params)
            .field("m", &self.m)
            .finish_non_exhaustive()
    }
}

impl KernelTables {
    /// Displacement along one axis encoded by cyclic index `t`.
    #[inline]
    fn displacement(&self, t: usize) -> i64 {
        let n = self.grid.points_per_axis() as i64;
        let t = t as i64;
        if t < n {
            t
        } else {
            t - 2 * n
        }
    }

    #[inline]
    fn cyclic(&self, d: i64) -> usize {
        d.rem_euclid(self.m as i64) as usize
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Cell-averaged kernel at integer displacement `d` (each component in `[-N+1, N-1]`).
    pub fn entry(&self, d: [i64; 3]) -> [f64; CHANNELS] {
        let m = self.m;
        self.spatial[self.cyclic(d[0]) + m * (self.cyclic(d[1]) + m * self.cyclic(d[2]))]
    }

    /// Zero-padded linear convolution of nodal `values` with every channel,
    /// scaled by the cell volume: `out_c[k] = sum_j T_c(k - j) values[j] h^3`.
    pub(crate) fn convolve(&self, values: &[f64]) -> [Vec<f64>; CHANNELS] {
        let n = self.grid.points_per_axis();
        let m = self.m;
        let len = m * m * m;
        let mut padded = vec![Complex64::default(); len];
        for k in 0..n {
            for j in 0..n {
                let src = n * (j + n * k);
                let dst = m * (j + m * k);
                for i in 0..n {
                    padded[dst + i] = Complex64::new(values[src + i], 0.0);
                }
            }
        }
        self.fft.forward(&mut padded);
        let scale = self.grid.cell_volume() / len as f64;
        let multiplier = |c: usize, t: usize| -> Complex64 {
            let s = self.spectra[t][c];
            if ODD[c] {
                Complex64::new(0.0, s)
            } else {
                Complex64::new(s, 0.0)
            }
        };
        let pairs: [(usize, usize); 5] = [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)];
        let results = par::map_vec(pairs.to_vec(), |(c1, c2)| {
            let mut buf = vec![Complex64::default(); len];
            par::fill_indexed(&mut buf, |t| {
                padded[t] * (multiplier(c1, t) + Complex64::i() * multiplier(c2, t))
            });
            self.fft.inverse(&mut buf);
            let mut first = vec![0.0; n * n * n];
            let mut second = vec![0.0; n * n * n];
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let z = buf[i + m * (j + m * k)];
                        first[i + n * (j + n * k)] = z.re * scale;
                        second[i + n * (j + n * k)] = z.im * scale;
                    }
                }
            }
            (first, second)
        });
        let mut out: [Vec<f64>; CHANNELS] = Default::default();
        for ((c1, c2), (a, b)) in pairs.iter().zip(results) {
            out[*c1] = a;
            out[*c2] = b;
        }
        out
    }

    /// Reference `O(N^6)` summation of the same convolution.
    pub(crate) fn convolve_direct(&self, values: &[f64]) -> [Vec<f64>; CHANNELS] {
        let g = self.grid;
        let n = g.points_per_axis();
        let vol = g.cell_volume();
        let sums = par::map_range(g.len(), |idx| {
            let [i, j, k] = g.ijk(idx);
            let mut acc = [0.0; CHANNELS];
            for kk in 0..n {
                for jj in 0..n {
                    for ii in 0..n {
                        let f = values[g.index(ii, jj, kk)];
                        if f == 0.0 {
                            continue;
                        }
                        let t = self.entry([
                            i as i64 - ii as i64,
                            j as i64 - jj as i64,
                            k as i64 - kk as i64,
                        ]);
                        for c in 0..CHANNELS {
                            acc[c] += t[c] * f;
                        }
                    }
                }
            }
            acc
        });
        let mut out: [Vec<f64>; CHANNELS] = Default::default();
        for c in 0..CHANNELS {
            out[c] = sums.iter().map(|s| s[c] * vol).collect();
        }
        out
    }
}

/// Builds the cell-averaged tables on the doubled grid and their transforms.
pub fn build_kernels(grid: &VelocityGrid, params: &ModelParams) -> KernelTables {
    let n = grid.points_per_axis();
    let m = 2 * n;
    let h = grid.spacing();
    let consts = KernelConsts::new(params);
    let ni = n as i64;
    let decode = |t: usize| -> i64 {
        let t = t as i64;
        if t < ni {
            t
        } else {
            t - 2 * ni
        }
    };
    let spatial = par::map_range(m * m * m, |idx| {
        let d = [decode(idx % m), decode((idx / m) % m), decode(idx / (m * m))];
        // the -N slot is never reached by a linear convolution; zero keeps
        // the cyclic table exactly even or odd
        if d.iter().any(|&x| x == -ni) {
            return [0.0; CHANNELS];
        }
        cell_average(&consts, d, h)
    });
    let fft = Fft3::new(m);
    let mut spectra = vec![[0.0; CHANNELS]; m * m * m];
    for c in 0..CHANNELS {
        let mut buf: Vec<Complex64> = spatial.iter().map(|t| Complex64::new(t[c], 0.0)).collect();
        fft.forward(&mut buf);
        for (s, z) in spectra.iter_mut().zip(&buf) {
            s[c] = if ODD[c] { z.im } else { z.re };
        }
    }
    let tables = KernelTables {
        grid: *grid,
        params: *params,
        m,
        spatial,
        spectra,
        fft,
    };
    debug_assert_eq!(tables.displacement(m - 1), -1);
    tables
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, Sym3};

    #[test]
    fn constant_kernel_for_gamma_zero() {
        let p = ModelParams::new(0.0, 0.5).unwrap();
        let consts = KernelConsts::new(&p);
        let c = cell_average(&consts, [9, -4, 3], 0.5)[9];
        assert!((c - p.c_gamma().unwrap()).abs() < 1e-14);
    }

    #[test]
    fn origin_cell_matches_self_similar_oracle() {
        // For a kernel homogeneous of degree beta, the octant cube [0, s]^3
        // satisfies I = I_rest / (1 - 2^-(3+beta)), where I_rest integrates
        // the seven sub-cubes not touching the origin.
        for gamma in [-3.0, -2.5, -2.0, 0.0, 1.0] {
            let p = ModelParams::new(gamma, 0.5).unwrap();
            let consts = KernelConsts::new(&p);
            let h = 0.5;
            let got = origin_cell_average(&consts, h);
            let half = 0.5 * h;
            let q = half / 2.0;
            let (gx, gw) = composite_rule(-0.5, 0.5, 4, 8);
            let mut rest = [0.0; CHANNELS];
            for octant in 0..8usize {
                let sgn = [
                    if octant & 1 == 0 { 1.0 } else { -1.0 },
                    if octant & 2 == 0 { 1.0 } else { -1.0 },
                    if octant & 4 == 0 { 1.0 } else { -1.0 },
                ];
                for sub in 1..8usize {
                    let c = [
                        sgn[0] * (q * 0.5 + q * (sub & 1) as f64),
                        sgn[1] * (q * 0.5 + q * ((sub >> 1) & 1) as f64),
                        sgn[2] * (q * 0.5 + q * ((sub >> 2) & 1) as f64),
                    ];
                    let avg = tensor_average(&consts, c, q, &gx, &gw);
                    for ch in 0..CHANNELS {
                        rest[ch] += avg[ch] * q * q * q;
                    }
                }
            }
            let degrees = consts.degrees();
            for ch in [0usize, 1, 3, 9] {
                if ch == 9 && gamma == -3.0 {
                    continue;
                }
                let oracle = rest[ch] / (1.0 - 2f64.powf(-(3.0 + degrees[ch]))) / (h * h * h);
                let scale = got[0].abs().max(1e-300);
                assert!(
                    (got[ch] - oracle).abs() <= 1e-4 * scale.max(oracle.abs()),
                    "gamma={gamma} ch={ch}: {} vs {}",
                    got[ch],
                    oracle
                );
            }
        }
    }

    #[test]
    fn coulomb_drift_kernel_is_integrable_near_origin() {
        // |K_b| = b |z|^-2 for gamma = -3; over a ball of radius eps the
        // radial integral is 4 pi b eps. The cube [-h/2, h/2]^3 contains the
        // ball of radius h/2 and sits inside the ball of radius sqrt(3) h/2.
        let p = ModelParams::new(-3.0, 0.5).unwrap();
        let b = p.b_gamma();
        let h = 0.25;
        let (x, w) = composite_rule(-0.5 * h, 0.5 * h, 8, 8);
        // pyramid reduction of |z|^-2 (degree -2) over the origin cube
        let mut face = 0.0;
        for (xu, wu) in x.iter().zip(&w) {
            for (xv, wv) in x.iter().zip(&w) {
                face += wu * wv / (0.25 * h * h + xu * xu + xv * xv);
            }
        }
        let cube = 6.0 * face * (0.5 * h) / 1.0 * b;
        let inner = 4.0 * std::f64::consts::PI * b * (0.5 * h);
        let outer = 4.0 * std::f64::consts::PI * b * (0.5 * 3f64.sqrt() * h);
        assert!(cube.is_finite());
        assert!(inner < cube && cube < outer, "{inner} < {cube} < {outer}");
        // neighbouring cell averages stay finite and bounded by |z|^-2 at the nearest face
        let consts = KernelConsts::new(&p);
        let t = cell_average(&consts, [1, 0, 0], h);
        let mag = norm([t[6], t[7], t[8]]);
        assert!(mag.is_finite() && mag < b / (0.25 * h * h));
    }

    #[test]
    fn projection_annihilates_far_direction() {
        // the exact cell average leaks O((h/|z|)^2) into the z direction
        let p = ModelParams::new(-2.0, 0.5).unwrap();
        let consts = KernelConsts::new(&p);
        for d in [[10i64, 3, -4], [-12, 0, 7], [12, 12, 12]] {
            let t = cell_average(&consts, d, 0.5);
            let a = Sym3([t[0], t[1], t[2], t[3], t[4], t[5]]);
            let z = [d[0] as f64, d[1] as f64, d[2] as f64];
            let zhat = z.map(|x| x / norm(z));
            let az = a.mul_vec(zhat);
            assert!(norm(az) <= 1e-3 * a.norm(), "{d:?}");
        }
    }

    #[test]
    fn tables_are_finite_and_psd() {
        for gamma in [-3.0, -2.5, 0.0, 1.0] {
            let g = VelocityGrid::new(8, 4.0).unwrap();
            let p = ModelParams::new(gamma, 0.5).unwrap();
            let t = build_kernels(&g, &p);
            for e in &t.spatial {
                assert!(e.iter().all(|x| x.is_finite()));
                let a = Sym3([e[0], e[1], e[2], e[3], e[4], e[5]]);
                let ev = a.eigenvalues();
                assert!(ev[0] >= -1e-10 * ev[2].abs().max(1e-300));
            }
        }
    }
}
