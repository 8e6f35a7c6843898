//! Gaussian modeling of rotated boxes and the Gaussian product.
//!
//! A box with center `c`, extents `e` and yaw θ maps to `N(c, R Λ Rᵀ)` with
//! `Λ = diag(e²/4)`. The product of two such densities is again a scaled
//! Gaussian whose covariance depends only on the two input covariances; its
//! mixing matrix is the Kalman gain `K = Σ₁(Σ₁+Σ₂)⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_half_turn, AngleConvention, RotatedBox2D, RotatedBox3D};
use crate::linalg::{self, Mat, Real};

/// Singularity threshold for `|Σ₁+Σ₂|` and `|Σ|` inversions.
const SINGULAR_TOL: f64 = 1e-300;
/// Eigenvalue gap below which the orientation of a recovered box is arbitrary.
const ISOTROPIC_GAP: f64 = 1e-9;

/// Dimension-generic box parameters, the common currency of the Gaussian and
/// loss code. For `N = 2` the extents are `(w, h)`; for `N = 3` they are
/// `(w, h, l)` with `l` vertical. θ is a yaw in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxParams<T, const N: usize> {
    pub center: [T; N],
    pub extent: [T; N],
    pub theta_deg: T,
}

impl<T: Real, const N: usize> BoxParams<T, N> {
    pub fn lift(b: &BoxParams<f64, N>) -> Self {
        Self {
            center: b.center.map(T::from_f64),
            extent: b.extent.map(T::from_f64),
            theta_deg: T::from_f64(b.theta_deg),
        }
    }

    /// Parameters laid out as `x, y, [z], w, h, [l], θ`.
    pub fn flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(2 * N + 1);
        v.extend_from_slice(&self.center);
        v.extend_from_slice(&self.extent);
        v.push(self.theta_deg);
        v
    }

    pub fn from_flat(p: &[T]) -> Self {
        assert_eq!(p.len(), 2 * N + 1, "expected {} box parameters", 2 * N + 1);
        let mut center = [T::zero(); N];
        let mut extent = [T::zero(); N];
        center.copy_from_slice(&p[..N]);
        extent.copy_from_slice(&p[N..2 * N]);
        Self {
            center,
            extent,
            theta_deg: p[2 * N],
        }
    }
}

impl From<&RotatedBox2D> for BoxParams<f64, 2> {
    fn from(b: &RotatedBox2D) -> Self {
        Self {
            center: [b.x, b.y],
            extent: [b.w, b.h],
            theta_deg: b.theta,
        }
    }
}

impl From<&RotatedBox3D> for BoxParams<f64, 3> {
    fn from(b: &RotatedBox3D) -> Self {
        Self {
            center: [b.x, b.y, b.z],
            extent: [b.w, b.h, b.l],
            theta_deg: b.theta,
        }
    }
}

/// Concrete box types that can be viewed as [`BoxParams`].
pub trait RotatedBox<const N: usize>: Copy {
    fn box_params(&self) -> BoxParams<f64, N>;
    fn from_box_params(p: &BoxParams<f64, N>) -> Result<Self>;
    fn check(&self) -> Result<()>;
}

impl RotatedBox<2> for RotatedBox2D {
    fn box_params(&self) -> BoxParams<f64, 2> {
        BoxParams::from(self)
    }
    fn from_box_params(p: &BoxParams<f64, 2>) -> Result<Self> {
        RotatedBox2D::new(p.center[0], p.center[1], p.extent[0], p.extent[1], p.theta_deg)
    }
    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl RotatedBox<3> for RotatedBox3D {
    fn box_params(&self) -> BoxParams<f64, 3> {
        BoxParams::from(self)
    }
    fn from_box_params(p: &BoxParams<f64, 3>) -> Result<Self> {
        let [x, y, z] = p.center;
        let [w, h, l] = p.extent;
        RotatedBox3D::new(x, y, z, w, h, l, p.theta_deg)
    }
    fn check(&self) -> Result<()> {
        self.validate()
    }
}

/// `R(θ) diag(e²/4) R(θ)ᵀ`, rotating only the first two axes.
pub fn box_covariance<T: Real, const N: usize>(b: &BoxParams<T, N>) -> Mat<T, N> {
    let rad = b.theta_deg.scale(std::f64::consts::PI / 180.0);
    let (s, c) = (rad.sin(), rad.cos());
    let var = b.extent.map(|e| e * e.scale(0.25));
    let mut m = linalg::diag(var);
    let (a, d) = (var[0], var[1]);
    m[0][0] = c * c * a + s * s * d;
    m[1][1] = s * s * a + c * c * d;
    let off = c * s * (a - d);
    m[0][1] = off;
    m[1][0] = off;
    m
}

/// Mean and covariance of an `N`-dimensional Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "[T; N]: Serialize, Mat<T, N>: Serialize"))]
#[serde(bound(deserialize = "[T; N]: Deserialize<'de>, Mat<T, N>: Deserialize<'de>"))]
pub struct Gaussian<const N: usize, T = f64> {
    pub mu: [T; N],
    pub sigma: Mat<T, N>,
}

pub type Gaussian2 = Gaussian<2>;
pub type Gaussian3 = Gaussian<3>;

impl<const N: usize> Gaussian<N, f64> {
    /// Symmetrizes `sigma` and checks positive definiteness.
    pub fn new(mu: [f64; N], sigma: Mat<f64, N>) -> Result<Self> {
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite("non-finite mean".into()));
        }
        let sigma = linalg::symmetrize(&sigma);
        check_spd(&sigma)?;
        Ok(Self { mu, sigma })
    }
}

impl<T: Real, const N: usize> Gaussian<N, T> {
    pub fn from_box(b: &BoxParams<T, N>) -> Self {
        Self {
            mu: b.center,
            sigma: box_covariance(b),
        }
    }
}

/// Sylvester's criterion on the leading principal minors.
pub fn check_spd<const N: usize>(sigma: &Mat<f64, N>) -> Result<()> {
    if sigma.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite("non-finite entry".into()));
    }
    if linalg::max_abs_asymmetry(sigma) > 1e-12 * (1.0 + sigma.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))) {
        return Err(Error::NotPositiveDefinite("not symmetric".into()));
    }
    let minors = match N {
        2 => vec![sigma[0][0], linalg::det(sigma)],
        3 => vec![
            sigma[0][0],
            sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0],
            linalg::det(sigma),
        ],
        _ => return Err(Error::NotPositiveDefinite(format!("unsupported dimension {N}"))),
    };
    if let Some(k) = minors.iter().position(|m| *m <= 0.0) {
        return Err(Error::NotPositiveDefinite(format!("leading minor {} is {}", k + 1, minors[k])));
    }
    Ok(())
}

pub fn box2d_to_gaussian(b: &RotatedBox2D) -> Result<Gaussian2> {
    b.validate()?;
    Ok(Gaussian::from_box(&BoxParams::from(b)))
}

pub fn box3d_to_gaussian(b: &RotatedBox3D) -> Result<Gaussian3> {
    b.validate()?;
    Ok(Gaussian::from_box(&BoxParams::from(b)))
}

/// Recovers the long-edge box whose Gaussian is `g`.
///
/// Extents are `2√λ`; θ follows the leading eigenvector. Near-isotropic
/// covariances (eigenvalue gap below 1e-9) get θ = 0.
pub fn gaussian_to_box2d(g: &Gaussian2) -> Result<RotatedBox2D> {
    check_spd(&g.sigma)?;
    let ((w, h), theta) = footprint_from_block(&g.sigma);
    Ok(RotatedBox2D {
        x: g.mu[0],
        y: g.mu[1],
        w,
        h,
        theta,
        convention: AngleConvention::LongEdge,
    })
}

/// 3-D counterpart of [`gaussian_to_box2d`]; the covariance must have the
/// vertical axis as an eigenvector.
pub fn gaussian_to_box3d(g: &Gaussian3) -> Result<RotatedBox3D> {
    check_spd(&g.sigma)?;
    let s = &g.sigma;
    let scale = s.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if s[0][2].abs() > 1e-9 * scale || s[1][2].abs() > 1e-9 * scale {
        return Err(Error::NotYawAligned);
    }
    let block = [[s[0][0], s[0][1]], [s[1][0], s[1][1]]];
    let ((w, h), theta) = footprint_from_block(&block);
    Ok(RotatedBox3D {
        x: g.mu[0],
        y: g.mu[1],
        z: g.mu[2],
        w,
        h,
        l: 2.0 * s[2][2].sqrt(),
        theta,
    })
}

fn footprint_from_block(block: &Mat<f64, 2>) -> ((f64, f64), f64) {
    let (vals, angle) = linalg::sym_eigen2(block);
    let theta = if vals[0] - vals[1] < ISOTROPIC_GAP {
        0.0
    } else {
        wrap_half_turn(angle.to_degrees())
    };
    ((2.0 * vals[0].sqrt(), 2.0 * vals[1].max(0.0).sqrt()), theta)
}

/// `2ⁿ |Σ|^{1/2}`: the volume of the box a Gaussian represents.
pub fn volume<T: Real, const N: usize>(sigma: &Mat<T, N>) -> T {
    linalg::det(sigma).sqrt().scale(2f64.powi(N as i32))
}

pub fn gaussian_volume<const N: usize>(sigma: &Mat<f64, N>) -> Result<f64> {
    check_spd(sigma)?;
    Ok(volume(sigma))
}

/// Kalman gain and fused covariance `(K, Σ₁ − KΣ₁)`; `None` if `Σ₁+Σ₂` is singular.
pub fn product_covariance<T: Real, const N: usize>(
    s1: &Mat<T, N>,
    s2: &Mat<T, N>,
) -> Option<(Mat<T, N>, Mat<T, N>)> {
    let sum_inv = linalg::inverse(&linalg::add(s1, s2), SINGULAR_TOL)?;
    let gain = linalg::mul(s1, &sum_inv);
    let fused = linalg::symmetrize(&linalg::sub(s1, &linalg::mul(&gain, s1)));
    Some((gain, fused))
}

/// Result of multiplying two Gaussian densities:
/// `α N(μ, Σ) = N(μ₁, Σ₁) N(μ₂, Σ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "[f64; N]: Serialize, Mat<f64, N>: Serialize"))]
#[serde(bound(deserialize = "[f64; N]: Deserialize<'de>, Mat<f64, N>: Deserialize<'de>"))]
pub struct GaussianProduct<const N: usize> {
    pub gaussian: Gaussian<N>,
    /// `N_{μ₁}(μ₂, Σ₁+Σ₂)` including the normalization constant.
    pub alpha: f64,
    pub kalman_gain: Mat<f64, N>,
}

pub fn gaussian_product<const N: usize>(g1: &Gaussian<N>, g2: &Gaussian<N>) -> Result<GaussianProduct<N>> {
    check_spd(&g1.sigma)?;
    check_spd(&g2.sigma)?;
    let (gain, sigma) =
        product_covariance(&g1.sigma, &g2.sigma).ok_or(Error::Singular("sigma1 + sigma2"))?;
    let mut delta = [0.0; N];
    for i in 0..N {
        delta[i] = g2.mu[i] - g1.mu[i];
    }
    let shift = linalg::mat_vec(&gain, &delta);
    let mut mu = g1.mu;
    for i in 0..N {
        mu[i] += shift[i];
    }
    let sum = linalg::add(&g1.sigma, &g2.sigma);
    let sum_inv = linalg::inverse(&sum, SINGULAR_TOL).ok_or(Error::Singular("sigma1 + sigma2"))?;
    let mahalanobis = linalg::quad_form(&delta, &sum_inv);
    let norm = (2.0 * std::f64::consts::PI).powf(-(N as f64) / 2.0) / linalg::det(&sum).sqrt();
    Ok(GaussianProduct {
        gaussian: Gaussian { mu, sigma },
        alpha: norm * (-0.5 * mahalanobis).exp(),
        kalman_gain: gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::skew_iou_2d;

    fn close<const N: usize>(a: &Mat<f64, N>, b: &Mat<f64, N>, tol: f64) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn b2(x: f64, y: f64, w: f64, h: f64, t: f64) -> RotatedBox2D {
        RotatedBox2D::new(x, y, w, h, t).unwrap()
    }

    #[test]
    fn square_box_is_identity_for_any_angle() {
        for t in [0.0, 13.0, 45.0, -77.0, 90.0] {
            let g = box2d_to_gaussian(&b2(0.0, 0.0, 2.0, 2.0, t)).unwrap();
            assert_eq!(g.mu, [0.0, 0.0]);
            assert!(close(&g.sigma, &linalg::identity(), 1e-15));
        }
    }

    #[test]
    fn quarter_turn_swaps_axes() {
        let g = box2d_to_gaussian(&b2(0.0, 0.0, 4.0, 2.0, 90.0)).unwrap();
        assert!(close(&g.sigma, &[[1.0, 0.0], [0.0, 4.0]], 1e-12));
    }

    #[test]
    fn thirty_degree_box_invariants() {
        let g = box2d_to_gaussian(&b2(3.0, -1.0, 6.0, 2.0, 30.0)).unwrap();
        assert_eq!(g.mu, [3.0, -1.0]);
        assert!((linalg::trace(&g.sigma) - 10.0).abs() < 1e-12);
        assert!((linalg::det(&g.sigma) - 9.0).abs() < 1e-12);
        let (vals, _) = linalg::sym_eigen2(&g.sigma);
        assert!((vals[0] - 9.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        // closed form R diag(9,1) Rᵀ at 30°
        let (s, c) = 30f64.to_radians().sin_cos();
        let expect = [[9.0 * c * c + s * s, 8.0 * c * s], [8.0 * c * s, 9.0 * s * s + c * c]];
        assert!(close(&g.sigma, &expect, 1e-12));
    }

    #[test]
    fn box3d_examples() {
        let g = box3d_to_gaussian(&RotatedBox3D::new(0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 33.0).unwrap()).unwrap();
        assert!(close(&g.sigma, &linalg::identity(), 1e-15));
        let g = box3d_to_gaussian(&RotatedBox3D::new(0.0, 0.0, 0.0, 4.0, 2.0, 6.0, 0.0).unwrap()).unwrap();
        assert!(close(&g.sigma, &linalg::diag([4.0, 1.0, 9.0]), 1e-15));
        let g = box3d_to_gaussian(&RotatedBox3D::new(1.0, 2.0, 3.0, 4.0, 2.0, 6.0, 90.0).unwrap()).unwrap();
        assert_eq!(g.mu, [1.0, 2.0, 3.0]);
        assert!(close(&g.sigma, &linalg::diag([1.0, 4.0, 9.0]), 1e-12));
    }

    #[test]
    fn invalid_box_is_rejected() {
        let mut b = b2(0.0, 0.0, 1.0, 1.0, 0.0);
        b.h = 0.0;
        assert!(matches!(box2d_to_gaussian(&b), Err(Error::InvalidBox(_))));
    }

    #[test]
    fn recover_boxes() {
        let g = Gaussian::new([0.0, 0.0], linalg::identity()).unwrap();
        let b = gaussian_to_box2d(&g).unwrap();
        assert!((b.w - 2.0).abs() < 1e-12 && (b.h - 2.0).abs() < 1e-12);
        assert_eq!(b.theta, 0.0);

        let g = Gaussian::new([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]).unwrap();
        let b = gaussian_to_box2d(&g).unwrap();
        assert_eq!((b.w, b.h, b.theta), (4.0, 2.0, 0.0));

        let src = b2(1.0, 2.0, 3.0, 7.0, 41.0);
        let back = gaussian_to_box2d(&box2d_to_gaussian(&src).unwrap()).unwrap();
        back.validate().unwrap();
        assert!((skew_iou_2d(&src, &back) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recover_box3d_and_reject_tilt() {
        let src = RotatedBox3D::new(1.0, 2.0, 3.0, 4.0, 2.0, 6.0, 20.0).unwrap();
        let back = gaussian_to_box3d(&box3d_to_gaussian(&src).unwrap()).unwrap();
        assert!((back.l - 6.0).abs() < 1e-12 && (back.w - 4.0).abs() < 1e-12);
        assert!((back.theta - 20.0).abs() < 1e-9);
        let tilted = Gaussian::new([0.0; 3], [[2.0, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 3.0]]).unwrap();
        assert_eq!(gaussian_to_box3d(&tilted), Err(Error::NotYawAligned));
    }

    #[test]
    fn non_spd_rejected() {
        assert!(Gaussian::new([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(gaussian_volume(&[[-1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(gaussian_to_box2d(&Gaussian { mu: [0.0; 2], sigma: [[0.0, 0.0], [0.0, 1.0]] }).is_err());
    }

    #[test]
    fn volumes() {
        assert!((gaussian_volume(&linalg::identity::<f64, 2>()).unwrap() - 4.0).abs() < 1e-15);
        assert!((gaussian_volume(&[[4.0, 0.0], [0.0, 1.0]]).unwrap() - 8.0).abs() < 1e-15);
        assert!((gaussian_volume(&linalg::diag([4.0, 1.0, 9.0])).unwrap() - 48.0).abs() < 1e-12);
    }

    #[test]
    fn product_of_identical_unit_gaussians() {
        let g = Gaussian::new([0.0, 0.0], linalg::identity()).unwrap();
        let p = gaussian_product(&g, &g).unwrap();
        assert!(close(&p.kalman_gain, &[[0.5, 0.0], [0.0, 0.5]], 1e-15));
        assert!(close(&p.gaussian.sigma, &[[0.5, 0.0], [0.0, 0.5]], 1e-15));
        assert_eq!(p.gaussian.mu, [0.0, 0.0]);
        // density of N(0, 2I) at zero
        let expect = 1.0 / (2.0 * std::f64::consts::PI * 2.0);
        assert!((p.alpha - expect).abs() < 1e-15);
    }

    #[test]
    fn product_of_crossed_gaussians() {
        // Σ₁ − Σ₁(Σ₁+Σ₂)⁻¹Σ₁ = diag(4 − 16/5, 1 − 1/5)
        let g1 = Gaussian::new([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]).unwrap();
        let g2 = Gaussian::new([0.0, 0.0], [[1.0, 0.0], [0.0, 4.0]]).unwrap();
        let p = gaussian_product(&g1, &g2).unwrap();
        assert!(close(&p.gaussian.sigma, &[[0.8, 0.0], [0.0, 0.8]], 1e-14));
    }

    #[test]
    fn product_mean_and_alpha_with_offset() {
        let g1 = Gaussian::new([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]).unwrap();
        let g2 = Gaussian::new([2.0, 1.0], [[1.0, 0.0], [0.0, 4.0]]).unwrap();
        let p = gaussian_product(&g1, &g2).unwrap();
        // K = diag(4/5, 1/5)
        assert!((p.gaussian.mu[0] - 1.6).abs() < 1e-14);
        assert!((p.gaussian.mu[1] - 0.2).abs() < 1e-14);
        // Σ₁+Σ₂ = 5I, offset (2,1): density = exp(-(4+1)/10) / (2π·5)
        let expect = (-0.5f64).exp() / (2.0 * std::f64::consts::PI * 5.0);
        assert!((p.alpha - expect).abs() < 1e-15);
    }

    #[test]
    fn product_covariance_is_symmetric_in_its_inputs() {
        let s1 = box_covariance(&BoxParams { center: [0.0, 0.0], extent: [7.0, 2.0], theta_deg: 25.0 });
        let s2 = box_covariance(&BoxParams { center: [0.0, 0.0], extent: [3.0, 5.0], theta_deg: -60.0 });
        let (_, a) = product_covariance(&s1, &s2).unwrap();
        let (_, b) = product_covariance(&s2, &s1).unwrap();
        assert!(close(&a, &b, 1e-9));
    }
}
