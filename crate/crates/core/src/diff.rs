//! Forward-mode derivatives through the Gaussian / KFIoU pipeline and a
//! central-difference checker.
//!
//! [`Dual<K>`] carries one tangent slot per box parameter (5 in 2-D, 7 in 3-D),
//! so a single evaluation of the generic loss code yields the full gradient.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{BoxParams, RotatedBox};
use crate::geometry::{RotatedBox2D, RotatedBox3D};
use crate::linalg::Real;
use crate::losses::{self, LossConfig};

/// Default central-difference step, in parameter units (px, degrees).
pub const DEFAULT_STEP: f64 = 1e-5;
/// Extents at or below this are rejected by the gradient entry points.
pub const MIN_EXTENT: f64 = 1e-3;

/// Value plus a fixed-length tangent vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const K: usize> {
    pub v: f64,
    pub d: [f64; K],
}

impl<const K: usize> Dual<K> {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; K] }
    }

    /// The `i`-th input variable: tangent `eᵢ`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; K];
        d[i] = 1.0;
        Self { v, d }
    }

    /// Applies a scalar function with derivative `dv` at `self.v`.
    fn chain(self, v: f64, dv: f64) -> Self {
        Self {
            v,
            d: self.d.map(|t| t * dv),
        }
    }
}

impl<const K: usize> PartialOrd for Dual<K> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.v.partial_cmp(&other.v)
    }
}

impl<const K: usize> Add for Dual<K> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d) {
            *a += b;
        }
        Self { v: self.v + o.v, d }
    }
}

impl<const K: usize> Sub for Dual<K> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(o.d) {
            *a -= b;
        }
        Self { v: self.v - o.v, d }
    }
}

impl<const K: usize> Mul for Dual<K> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; K];
        for i in 0..K {
            d[i] = self.v * o.d[i] + o.v * self.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<const K: usize> Div for Dual<K> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; K];
        for i in 0..K {
            d[i] = (self.d[i] - v * o.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl<const K: usize> Neg for Dual<K> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            v: -self.v,
            d: self.d.map(|t| -t),
        }
    }
}

impl<const K: usize> Real for Dual<K> {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn ln_1p(self) -> Self {
        self.chain(self.v.ln_1p(), 1.0 / (1.0 + self.v))
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn acos(self) -> Self {
        self.chain(self.v.acos(), -1.0 / (1.0 - self.v * self.v).sqrt())
    }
    fn scale(self, k: f64) -> Self {
        Self {
            v: self.v * k,
            d: self.d.map(|t| t * k),
        }
    }
}

fn check_extents<const N: usize>(p: &BoxParams<f64, N>) -> Result<()> {
    if let Some(e) = p.extent.iter().find(|e| **e <= MIN_EXTENT) {
        return Err(Error::InvalidBox(format!("extent {e} is degenerate (must exceed {MIN_EXTENT})")));
    }
    Ok(())
}

/// Gradient of [`losses::regression_loss`] w.r.t. the `K = 2N+1` parameters of `pred`.
fn regression_gradient<B: RotatedBox<N>, const N: usize, const K: usize>(
    pred: &B,
    gt: &B,
    anchor: &B,
    cfg: &LossConfig,
) -> Result<[f64; K]> {
    assert_eq!(K, 2 * N + 1);
    cfg.validate()?;
    for b in [pred, gt, anchor] {
        b.check()?;
    }
    let p = pred.box_params();
    check_extents(&p)?;
    let vars: Vec<Dual<K>> = p.flat().into_iter().enumerate().map(|(i, v)| Dual::variable(v, i)).collect();
    let pd = BoxParams::from_flat(&vars);
    let terms = losses::regression_terms_of(&pd, &gt.box_params(), &anchor.box_params(), cfg)
        .ok_or(Error::Singular("target covariance"))?;
    let g = terms.total().d;
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { component: i });
    }
    Ok(g)
}

/// `∂L_reg/∂(x, y, w, h, θ)` of the prediction, with the target as anchor.
pub fn grad_kf_loss_2d(pred: &RotatedBox2D, gt: &RotatedBox2D, cfg: &LossConfig) -> Result<[f64; 5]> {
    regression_gradient::<_, 2, 5>(pred, gt, gt, cfg)
}

pub fn grad_kf_loss_2d_with_anchor(
    pred: &RotatedBox2D,
    gt: &RotatedBox2D,
    anchor: &RotatedBox2D,
    cfg: &LossConfig,
) -> Result<[f64; 5]> {
    regression_gradient::<_, 2, 5>(pred, gt, anchor, cfg)
}

/// `∂L_reg/∂(x, y, z, w, h, l, θ)` of the prediction, with the target as anchor.
pub fn grad_kf_loss_3d(pred: &RotatedBox3D, gt: &RotatedBox3D, cfg: &LossConfig) -> Result<[f64; 7]> {
    regression_gradient::<_, 3, 7>(pred, gt, gt, cfg)
}

pub fn grad_kf_loss_3d_with_anchor(
    pred: &RotatedBox3D,
    gt: &RotatedBox3D,
    anchor: &RotatedBox3D,
    cfg: &LossConfig,
) -> Result<[f64; 7]> {
    regression_gradient::<_, 3, 7>(pred, gt, anchor, cfg)
}

/// Central differences `(f(x+h·eᵢ) − f(x−h·eᵢ))/(2h)`.
pub fn finite_difference_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut p = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let hi = f(&p);
        p[i] = x[i] - h;
        let lo = f(&p);
        p[i] = x[i];
        let d = (hi - lo) / (2.0 * h);
        if !d.is_finite() {
            return Err(Error::NonFinite { component: i });
        }
        g.push(d);
    }
    Ok(g)
}

/// `|a − n| / max(1, |a|, |n|)`.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / 1f64.max(a.abs()).max(n.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_err: f64,
    pub step: f64,
    pub tol: f64,
    pub passed: bool,
}

impl GradReport {
    fn failed(len: usize, step: f64, tol: f64) -> Self {
        Self {
            analytic: vec![f64::NAN; len],
            numeric: vec![f64::NAN; len],
            max_rel_err: f64::INFINITY,
            step,
            tol,
            passed: false,
        }
    }
}

fn check_generic<B: RotatedBox<N>, const N: usize, const K: usize>(
    pred: &B,
    gt: &B,
    cfg: &LossConfig,
    h: f64,
    tol: f64,
) -> GradReport {
    let Ok(analytic) = regression_gradient::<B, N, K>(pred, gt, gt, cfg) else {
        return GradReport::failed(K, h, tol);
    };
    let gtp = gt.box_params();
    let f = |x: &[f64]| {
        losses::regression_terms_of(&BoxParams::<f64, N>::from_flat(x), &gtp, &gtp, cfg)
            .map_or(f64::NAN, |t| t.total())
    };
    let Ok(numeric) = finite_difference_grad(f, &pred.box_params().flat(), h) else {
        return GradReport {
            analytic: analytic.to_vec(),
            ..GradReport::failed(K, h, tol)
        };
    };
    let max_rel_err = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| rel_err(*a, *n))
        .fold(0.0, f64::max);
    GradReport {
        analytic: analytic.to_vec(),
        numeric,
        max_rel_err,
        step: h,
        tol,
        passed: max_rel_err < tol,
    }
}

/// Compares the dual-number gradient of the regression loss with central
/// differences. Never fails; an unusable input yields a failed report.
pub fn grad_check_2d(pred: &RotatedBox2D, gt: &RotatedBox2D, cfg: &LossConfig, h: f64, tol: f64) -> GradReport {
    check_generic::<_, 2, 5>(pred, gt, cfg, h, tol)
}

pub fn grad_check_3d(pred: &RotatedBox3D, gt: &RotatedBox3D, cfg: &LossConfig, h: f64, tol: f64) -> GradReport {
    check_generic::<_, 3, 7>(pred, gt, cfg, h, tol)
}
