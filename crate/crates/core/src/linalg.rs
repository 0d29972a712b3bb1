//! Small fixed-size linear algebra for per-node coefficient data.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

/// Symmetric 3x3 matrix stored as `[xx, xy, xz, yy, yz, zz]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym3(pub [f64; 6]);

/// Position of `(i, j)` in the packed storage.
pub const fn sym_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Channel labels in packed order.
pub const SYM_LABELS: [&str; 6] = ["axx", "axy", "axz", "ayy", "ayz", "azz"];

impl Sym3 {
    pub const ZERO: Sym3 = Sym3([0.0; 6]);
    pub const IDENTITY: Sym3 = Sym3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[sym_index(i, j)]
    }

    /// `I - z z^T / |z|^2`, zero at the origin.
    pub fn projector(z: Vec3) -> Sym3 {
        let r2 = dot(z, z);
        if r2 == 0.0 {
            return Sym3::ZERO;
        }
        let inv = 1.0 / r2;
        Sym3([
            1.0 - z[0] * z[0] * inv,
            -z[0] * z[1] * inv,
            -z[0] * z[2] * inv,
            1.0 - z[1] * z[1] * inv,
            -z[1] * z[2] * inv,
            1.0 - z[2] * z[2] * inv,
        ])
    }

    pub fn outer(v: Vec3) -> Sym3 {
        Sym3([
            v[0] * v[0],
            v[0] * v[1],
            v[0] * v[2],
            v[1] * v[1],
            v[1] * v[2],
            v[2] * v[2],
        ])
    }

    pub fn scale(&self, s: f64) -> Sym3 {
        let mut out = self.0;
        out.iter_mut().for_each(|x| *x *= s);
        Sym3(out)
    }

    pub fn add(&self, other: &Sym3) -> Sym3 {
        let mut out = self.0;
        out.iter_mut().zip(other.0).for_each(|(a, b)| *a += b);
        Sym3(out)
    }

    pub fn sub(&self, other: &Sym3) -> Sym3 {
        self.add(&other.scale(-1.0))
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        [
            m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
            m[1] * v[0] + m[3] * v[1] + m[4] * v[2],
            m[2] * v[0] + m[4] * v[1] + m[5] * v[2],
        ]
    }

    /// Quadratic form `e . (A e)`.
    pub fn quad(&self, e: Vec3) -> f64 {
        dot(e, self.mul_vec(e))
    }

    /// `tr(A B)` for symmetric `B`.
    pub fn contract(&self, other: &Sym3) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[3] * b[3] + a[5] * b[5] + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4])
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.contract(self).sqrt()
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.get(i, j))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let eig = SymmetricEigen::new(self.to_matrix());
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()[2]
    }

    /// Smallest eigenvalue of the restriction of the quadratic form to the
    /// plane orthogonal to `v`.
    pub fn min_eigenvalue_perp(&self, v: Vec3) -> f64 {
        let [e1, e2] = orthonormal_complement(v);
        let p = self.quad(e1);
        let q = self.quad(e2);
        let r = dot(e1, self.mul_vec(e2));
        let mean = 0.5 * (p + q);
        let half_gap = (0.25 * (p - q) * (p - q) + r * r).sqrt();
        mean - half_gap
    }
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Two unit vectors spanning the plane orthogonal to `v` (`v` nonzero).
pub fn orthonormal_complement(v: Vec3) -> [Vec3; 2] {
    let n = norm(v);
    let u = [v[0] / n, v[1] / n, v[2] / n];
    // least aligned coordinate axis
    let axis = if u[0].abs() <= u[1].abs() && u[0].abs() <= u[2].abs() {
        [1.0, 0.0, 0.0]
    } else if u[1].abs() <= u[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let a = cross(u, axis);
    let na = norm(a);
    let e1 = [a[0] / na, a[1] / na, a[2] / na];
    let e2 = cross(u, e1);
    [e1, e2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_annihilates_direction() {
        let z = [0.3, -1.2, 2.0];
        let p = Sym3::projector(z);
        let pz = p.mul_vec(z);
        assert!(norm(pz) < 1e-15);
        assert!((p.trace() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn perp_restriction_of_diagonal() {
        let a = Sym3([1.0, 0.0, 0.0, 2.0, 0.0, 3.0]);
        assert!((a.min_eigenvalue_perp([1.0, 0.0, 0.0]) - 2.0).abs() < 1e-14);
        assert!((a.min_eigenvalue_perp([0.0, 0.0, 1.0]) - 1.0).abs() < 1e-14);
        assert_eq!(a.eigenvalues(), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn contract_matches_dense_trace() {
        let a = Sym3([1.0, 0.5, -0.2, 2.0, 0.3, 1.5]);
        let b = Sym3([0.7, -0.1, 0.4, 1.1, 0.9, -0.6]);
        let dense = (a.to_matrix() * b.to_matrix()).trace();
        assert!((a.contract(&b) - dense).abs() < 1e-14);
    }
}
