//! Closed-form linear algebra for 2×2 and 3×3 matrices.
//!
//! Everything that sits on the differentiable path is generic over [`Real`], so
//! the same code evaluates plain values (`f64`) and forward-mode derivatives
//! ([`crate::diff::Dual`]). Eigendecompositions are only needed for reporting
//! and box recovery and are implemented for `f64` only.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar field used by the Gaussian and loss code.
pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Primal value (drops any tangent information).
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn acos(self) -> Self;

    fn abs(self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn scale(self, k: f64) -> Self {
        self * Self::from_f64(k)
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn acos(self) -> Self {
        f64::acos(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Row-major square matrix.
pub type Mat<T, const N: usize> = [[T; N]; N];

pub fn zeros<T: Real, const N: usize>() -> Mat<T, N> {
    [[T::zero(); N]; N]
}

pub fn identity<T: Real, const N: usize>() -> Mat<T, N> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn diag<T: Real, const N: usize>(d: [T; N]) -> Mat<T, N> {
    let mut m = zeros();
    for i in 0..N {
        m[i][i] = d[i];
    }
    m
}

pub fn lift<T: Real, const N: usize>(m: &Mat<f64, N>) -> Mat<T, N> {
    m.map(|row| row.map(T::from_f64))
}

pub fn lift_vec<T: Real, const N: usize>(v: &[f64; N]) -> [T; N] {
    v.map(T::from_f64)
}

pub fn values<T: Real, const N: usize>(m: &Mat<T, N>) -> Mat<f64, N> {
    m.map(|row| row.map(Real::value))
}

pub fn add<T: Real, const N: usize>(a: &Mat<T, N>, b: &Mat<T, N>) -> Mat<T, N> {
    let mut m = *a;
    for i in 0..N {
        for j in 0..N {
            m[i][j] = a[i][j] + b[i][j];
        }
    }
    m
}

pub fn sub<T: Real, const N: usize>(a: &Mat<T, N>, b: &Mat<T, N>) -> Mat<T, N> {
    let mut m = *a;
    for i in 0..N {
        for j in 0..N {
            m[i][j] = a[i][j] - b[i][j];
        }
    }
    m
}

pub fn mul<T: Real, const N: usize>(a: &Mat<T, N>, b: &Mat<T, N>) -> Mat<T, N> {
    let mut m = zeros();
    for i in 0..N {
        for j in 0..N {
            let mut acc = T::zero();
            for k in 0..N {
                acc = acc + a[i][k] * b[k][j];
            }
            m[i][j] = acc;
        }
    }
    m
}

pub fn transpose<T: Real, const N: usize>(a: &Mat<T, N>) -> Mat<T, N> {
    let mut m = *a;
    for i in 0..N {
        for j in 0..N {
            m[i][j] = a[j][i];
        }
    }
    m
}

/// `(A + Aᵀ) / 2`
pub fn symmetrize<T: Real, const N: usize>(a: &Mat<T, N>) -> Mat<T, N> {
    let mut m = *a;
    for i in 0..N {
        for j in (i + 1)..N {
            let v = (a[i][j] + a[j][i]).scale(0.5);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

pub fn trace<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    let mut t = T::zero();
    for (i, row) in a.iter().enumerate() {
        t = t + row[i];
    }
    t
}

pub fn mat_vec<T: Real, const N: usize>(a: &Mat<T, N>, v: &[T; N]) -> [T; N] {
    let mut out = [T::zero(); N];
    for i in 0..N {
        let mut acc = T::zero();
        for k in 0..N {
            acc = acc + a[i][k] * v[k];
        }
        out[i] = acc;
    }
    out
}

/// `vᵀ A v`
pub fn quad_form<T: Real, const N: usize>(v: &[T; N], a: &Mat<T, N>) -> T {
    let av = mat_vec(a, v);
    let mut acc = T::zero();
    for i in 0..N {
        acc = acc + v[i] * av[i];
    }
    acc
}

pub fn det<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    match N {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => unimplemented!("closed-form determinant only for n <= 3"),
    }
}

/// Sum of the principal 2×2 minors (second characteristic coefficient).
pub fn principal_minor_sum<T: Real, const N: usize>(a: &Mat<T, N>) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        for j in (i + 1)..N {
            acc = acc + a[i][i] * a[j][j] - a[i][j] * a[j][i];
        }
    }
    acc
}

/// Adjugate-based inverse. Returns `None` when `|det| <= tol`.
pub fn inverse<T: Real, const N: usize>(a: &Mat<T, N>, tol: f64) -> Option<Mat<T, N>> {
    let d = det(a);
    if !d.value().is_finite() || d.value().abs() <= tol {
        return None;
    }
    let mut m = zeros::<T, N>();
    match N {
        1 => m[0][0] = T::one() / d,
        2 => {
            m[0][0] = a[1][1] / d;
            m[0][1] = -a[0][1] / d;
            m[1][0] = -a[1][0] / d;
            m[1][1] = a[0][0] / d;
        }
        3 => {
            m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / d;
            m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / d;
            m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / d;
            m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / d;
            m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / d;
            m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / d;
            m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / d;
            m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / d;
            m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / d;
        }
        _ => unimplemented!("closed-form inverse only for n <= 3"),
    }
    Some(m)
}

pub fn max_abs_asymmetry<const N: usize>(a: &Mat<f64, N>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((a[i][j] - a[j][i]).abs());
        }
    }
    worst
}

/// Eigenpairs of a symmetric 2×2 matrix, largest eigenvalue first.
///
/// Also returns the angle (radians, in `(-π/2, π/2]`) of the leading eigenvector.
pub fn sym_eigen2(a: &Mat<f64, 2>) -> ([f64; 2], f64) {
    let (p, q, r) = (a[0][0], a[0][1], a[1][1]);
    let mean = 0.5 * (p + r);
    let half_diff = 0.5 * (p - r);
    let rad = half_diff.hypot(q);
    let angle = 0.5 * (2.0 * q).atan2(p - r);
    ([mean + rad, mean - rad], angle)
}

/// Eigenvalues and eigenvectors (as columns) of a symmetric 3×3 matrix by
/// cyclic Jacobi rotations, sorted by descending eigenvalue.
pub fn sym_eigen3(a: &Mat<f64, 3>) -> ([f64; 3], Mat<f64, 3>) {
    let mut m = *a;
    let mut v = identity::<f64, 3>();
    for _sweep in 0..64 {
        let off = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let scale = m[0][0].powi(2) + m[1][1].powi(2) + m[2][2].powi(2);
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let vals = order.map(|i| m[i][i]);
    let mut vecs = zeros::<f64, 3>();
    for (col, &src) in order.iter().enumerate() {
        for row in 0..3 {
            vecs[row][col] = v[row][src];
        }
    }
    (vals, vecs)
}

/// `tr((A^{1/2} B A^{1/2})^{1/2})` for symmetric positive definite `A`, `B`,
/// i.e. the sum of square roots of the eigenvalues of `AB`.
///
/// The eigenvalues of `AB` are real and positive; they are recovered from its
/// characteristic cubic (or quadratic) so the routine stays generic.
pub fn trace_sqrt_product<T: Real, const N: usize>(a: &Mat<T, N>, b: &Mat<T, N>) -> T {
    let ab = mul(a, b);
    match N {
        2 => {
            let t = trace(&ab);
            let d = det(a) * det(b);
            (t + d.sqrt().scale(2.0)).sqrt()
        }
        3 => {
            let roots = cubic_real_roots(trace(&ab), principal_minor_sum(&ab), det(a) * det(b));
            roots
                .into_iter()
                .fold(T::zero(), |acc, r| acc + if r.value() > 0.0 { r.sqrt() } else { T::zero() })
        }
        _ => unimplemented!("trace_sqrt_product only for n in {{2, 3}}"),
    }
}

/// Roots of `λ³ − c2 λ² + c1 λ − c0` assuming all three are real
/// (trigonometric form).
fn cubic_real_roots<T: Real>(c2: T, c1: T, c0: T) -> [T; 3] {
    let shift = c2.scale(1.0 / 3.0);
    // depressed cubic t³ + p t + q with λ = t + shift
    let p = c1 - c2 * c2.scale(1.0 / 3.0);
    let q = c2 * c1.scale(1.0 / 3.0) - c0 - c2 * c2 * c2.scale(2.0 / 27.0);
    if p.value() > -1e-300 {
        // triple root
        return [shift; 3];
    }
    let m = (-p).scale(1.0 / 3.0).sqrt();
    let mut arg = (q.scale(1.5) / p) * (T::from_f64(-3.0) / p).sqrt();
    if arg.value() > 1.0 {
        arg = T::one();
    } else if arg.value() < -1.0 {
        arg = -T::one();
    }
    let phi = arg.acos().scale(1.0 / 3.0);
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    [0.0, 1.0, 2.0].map(|k| shift + m.scale(2.0) * (phi - T::from_f64(tau * k)).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip_3x3() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = inverse(&a, 1e-300).unwrap();
        let prod = mul(&a, &inv);
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        assert!(inverse(&a, 1e-12).is_none());
    }

    #[test]
    fn eigen2_of_rotated_diag() {
        let (vals, angle) = sym_eigen2(&[[2.5, 1.5], [1.5, 2.5]]);
        assert!((vals[0] - 4.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        assert!((angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn eigen3_reconstructs() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let (vals, vecs) = sym_eigen3(&a);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let rebuilt = mul(&mul(&vecs, &diag(vals)), &transpose(&vecs));
        for i in 0..3 {
            for j in 0..3 {
                assert!((rebuilt[i][j] - a[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn trace_sqrt_product_matches_eigen_route() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let b = [[1.0, -0.3, 0.0], [-0.3, 2.0, 0.4], [0.0, 0.4, 5.0]];
        // oracle: eigen-decompose A^{1/2} B A^{1/2}
        let (va, ea) = sym_eigen3(&a);
        let half = mul(&mul(&ea, &diag(va.map(f64::sqrt))), &transpose(&ea));
        let m = symmetrize(&mul(&mul(&half, &b), &half));
        let (vm, _) = sym_eigen3(&m);
        let expect: f64 = vm.iter().map(|v| v.sqrt()).sum();
        assert!((trace_sqrt_product(&a, &b) - expect).abs() < 1e-10);

        let a2 = [[4.0, 1.0], [1.0, 3.0]];
        let b2 = [[1.0, -0.3], [-0.3, 2.0]];
        let (v2, e2) = sym_eigen2(&a2);
        let c = e2.cos();
        let s = e2.sin();
        let r = [[c, -s], [s, c]];
        let half2 = mul(&mul(&r, &diag(v2.map(f64::sqrt))), &transpose(&r));
        let m2 = symmetrize(&mul(&mul(&half2, &b2), &half2));
        let (vm2, _) = sym_eigen2(&m2);
        let expect2: f64 = vm2.iter().map(|v| v.sqrt()).sum();
        assert!((trace_sqrt_product(&a2, &b2) - expect2).abs() < 1e-12);
    }

    #[test]
    fn trace_sqrt_product_of_identities() {
        let i3 = identity::<f64, 3>();
        assert!((trace_sqrt_product(&i3, &i3) - 3.0).abs() < 1e-12);
    }
}
