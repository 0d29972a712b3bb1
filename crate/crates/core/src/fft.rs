//! Complex 3-D FFT on a cube, built from 1-D rustfft plans.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

pub(crate) struct Fft3 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("m", &self.m).finish()
    }
}

impl Fft3 {
    pub(crate) fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 {
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    /// Unnormalized forward transform in place.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse transform in place.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        assert_eq!(data.len(), m * m * m);
        let mut work = vec![Complex64::default(); data.len()];
        self.lines(data, plan);
        // y: swap x and y within each plane
        swap_xy(data, &mut work, m);
        self.lines(&mut work, plan);
        swap_xy(&work, data, m);
        // z: swap x and z
        swap_xz(data, &mut work, m);
        self.lines(&mut work, plan);
        swap_xz(&work, data, m);
    }

    /// Transforms every contiguous x-line.
    fn lines(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        let scratch_len = plan.get_inplace_scratch_len();
        par::for_each_chunk_mut(data, m * m, |_, plane| {
            let mut scratch = vec![Complex64::default(); scratch_len];
            plan.process_with_scratch(plane, &mut scratch);
        });
    }
}

fn swap_xy(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    par::for_each_chunk_mut(dst, m * m, |k, plane| {
        let base = k * m * m;
        for j in 0..m {
            for i in 0..m {
                plane[j + m * i] = src[base + i + m * j];
            }
        }
    });
}

fn swap_xz(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    // dst[k + m (j + m i)] = src[i + m (j + m k)]
    par::for_each_chunk_mut(dst, m * m, |i, plane| {
        for j in 0..m {
            for k in 0..m {
                plane[k + m * j] = src[i + m * (j + m * k)];
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_dft() {
        let m = 4;
        let n = m * m * m;
        let data: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.17).cos()))
            .collect();
        let mut fast = data.clone();
        Fft3::new(m).forward(&mut fast);
        let tau = 2.0 * std::f64::consts::PI / m as f64;
        for (p, q, r) in [(0, 0, 0), (1, 2, 3), (3, 1, 0), (2, 2, 2)] {
            let mut acc = Complex64::default();
            for k in 0..m {
                for j in 0..m {
                    for i in 0..m {
                        let phase = -tau * ((p * i + q * j + r * k) as f64);
                        acc += data[i + m * (j + m * k)] * Complex64::from_polar(1.0, phase);
                    }
                }
            }
            let got = fast[p + m * (q + m * r)];
            assert!((got - acc).norm() < 1e-12, "{got} vs {acc}");
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = 6;
        let n = m * m * m;
        let data: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut buf = data.clone();
        let fft = Fft3::new(m);
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in data.iter().zip(&buf) {
            assert!((a - b / n as f64).norm() < 1e-10);
        }
    }
}
