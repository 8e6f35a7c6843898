//! KFIoU and its loss forms, the center-point terms, the combined regression
//! loss, and the GWD / KLD / Smooth-L1 baselines.
//!
//! Each quantity has a generic core over [`Real`] (used by [`crate::diff`]) and
//! a checked `f64` entry point that validates its inputs.

pub mod config;
pub mod encoding;

pub use config::{AngleMode, CenterForm, DistanceFn, KfForm, KldDirection, LossConfig, OffsetFrame};
pub use encoding::{decode_box, encode_box, normalize_angle_pair, AngleOffset, EncodedBox};

use crate::error::{Error, Result};
use crate::gaussian::{self, check_spd, BoxParams, Gaussian, RotatedBox};
use crate::linalg::{self, Mat, Real};

const SINGULAR_TOL: f64 = 1e-300;

/// `1/(2^(n/2+1) − 1)`: 1/3 in 2-D, `1/(√32 − 1)` in 3-D.
pub fn kfiou_upper_bound(n: usize) -> f64 {
    1.0 / (2f64.powf(n as f64 / 2.0 + 1.0) - 1.0)
}

/// `V(Σ)/(V(Σ₁)+V(Σ₂)−V(Σ))` with `Σ` the product covariance.
pub fn kfiou_of<T: Real, const N: usize>(s1: &Mat<T, N>, s2: &Mat<T, N>) -> Option<T> {
    let (_, fused) = gaussian::product_covariance(s1, s2)?;
    let v = gaussian::volume(&fused);
    Some(v / (gaussian::volume(s1) + gaussian::volume(s2) - v))
}

/// KFIoU of two Gaussians. Depends on the covariances only.
pub fn kfiou<const N: usize>(g1: &Gaussian<N>, g2: &Gaussian<N>) -> Result<f64> {
    check_spd(&g1.sigma)?;
    check_spd(&g2.sigma)?;
    kfiou_of(&g1.sigma, &g2.sigma).ok_or(Error::Singular("sigma1 + sigma2"))
}

/// KFIoU divided by its upper bound, so identical inputs give 1.
pub fn kfiou_rescaled<const N: usize>(g1: &Gaussian<N>, g2: &Gaussian<N>) -> Result<f64> {
    Ok(kfiou(g1, g2)? / kfiou_upper_bound(N))
}

/// Whether `cfg` asks for the KFIoU value to be stretched onto `(0, 1]`.
/// Either the `rescale` flag or a rescaled form turns it on; it never applies twice.
pub fn uses_rescaled(cfg: &LossConfig) -> bool {
    cfg.rescale || cfg.kf_form.is_rescaled()
}

/// Applies `cfg.kf_form` (and rescaling) to a raw KFIoU value.
pub fn kf_loss_from_kfiou<T: Real>(kfiou: T, n: usize, cfg: &LossConfig) -> T {
    let k = if uses_rescaled(cfg) {
        kfiou.scale(1.0 / kfiou_upper_bound(n))
    } else {
        kfiou
    };
    cfg.kf_form.apply(k, cfg.epsilon)
}

pub fn kf_loss_params<T: Real, const N: usize>(
    b1: &BoxParams<T, N>,
    b2: &BoxParams<T, N>,
    cfg: &LossConfig,
) -> Option<T> {
    let k = kfiou_of(&gaussian::box_covariance(b1), &gaussian::box_covariance(b2))?;
    Some(kf_loss_from_kfiou(k, N, cfg))
}

/// `L_kf` between two boxes under `cfg.kf_form`.
pub fn kf_loss<B: RotatedBox<N>, const N: usize>(b1: &B, b2: &B, cfg: &LossConfig) -> Result<f64> {
    b1.check()?;
    b2.check()?;
    kf_loss_params(&b1.box_params(), &b2.box_params(), cfg).ok_or(Error::Singular("sigma1 + sigma2"))
}

/// Smooth-L1 with transition at `β = 1/σ²`: `0.5 d²/β` below, `|d| − 0.5β` above.
pub fn smooth_l1<T: Real>(d: T, sigma: f64) -> T {
    let beta = 1.0 / (sigma * sigma);
    let a = d.abs();
    if a.value() < beta {
        (a * a).scale(0.5 / beta)
    } else {
        a - T::from_f64(0.5 * beta)
    }
}

/// Smooth-L1 summed over the center offsets (`t_x, t_y` and `t_z` in 3-D).
pub fn center_loss_smooth_l1<T: Real, const N: usize>(
    pred: &EncodedBox<N, T>,
    gt: &EncodedBox<N, T>,
    sigma: f64,
) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        acc = acc + smooth_l1(pred.center[i] - gt.center[i], sigma);
    }
    acc
}

pub fn center_loss_kld_term_of<T: Real, const N: usize>(mu1: &[T; N], mu2: &[T; N], sigma1: &Mat<T, N>) -> Option<T> {
    let inv = linalg::inverse(sigma1, SINGULAR_TOL)?;
    let mut d = [T::zero(); N];
    for i in 0..N {
        d[i] = mu2[i] - mu1[i];
    }
    Some(linalg::quad_form(&d, &inv).ln_1p())
}

/// `ln((μ₂−μ₁)ᵀ Σ₁⁻¹ (μ₂−μ₁) + 1)`, with `Σ₁` normally the target covariance.
pub fn center_loss_kld_term<const N: usize>(mu1: &[f64; N], mu2: &[f64; N], sigma1: &Mat<f64, N>) -> Result<f64> {
    check_spd(sigma1).map_err(|_| Error::Singular("sigma1"))?;
    center_loss_kld_term_of(mu1, mu2, sigma1).ok_or(Error::Singular("sigma1"))
}

/// The two summands of the regression loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionTerms<T = f64> {
    pub center: T,
    pub kf: T,
}

impl<T: Real> RegressionTerms<T> {
    pub fn total(&self) -> T {
        self.center + self.kf
    }
}

/// Center and KFIoU terms for a predicted box against its target. The center
/// term uses encodings against `anchor` (Smooth-L1) or the target covariance
/// (KLD term), per `cfg.center_form`.
pub fn regression_terms_of<T: Real, const N: usize>(
    pred: &BoxParams<T, N>,
    gt: &BoxParams<f64, N>,
    anchor: &BoxParams<f64, N>,
    cfg: &LossConfig,
) -> Option<RegressionTerms<T>> {
    let gt_t = BoxParams::lift(gt);
    let center = match cfg.center_form {
        CenterForm::SmoothL1 => {
            let p = encoding::encode(pred, anchor, cfg.angle_mode, cfg.offset_frame);
            let g = encoding::encode(&gt_t, anchor, cfg.angle_mode, cfg.offset_frame);
            center_loss_smooth_l1(&p, &g, cfg.smooth_l1_sigma)
        }
        CenterForm::KldTerm => {
            let s_gt = gaussian::box_covariance(&gt_t);
            center_loss_kld_term_of(&gt_t.center, &pred.center, &s_gt)?
        }
    };
    let kf = kf_loss_params(pred, &gt_t, cfg)?;
    Some(RegressionTerms { center, kf })
}

pub fn regression_loss_terms<B: RotatedBox<N>, const N: usize>(
    pred: &B,
    gt: &B,
    anchor: &B,
    cfg: &LossConfig,
) -> Result<RegressionTerms> {
    cfg.validate()?;
    pred.check()?;
    gt.check()?;
    anchor.check()?;
    let terms = regression_terms_of(&pred.box_params(), &gt.box_params(), &anchor.box_params(), cfg)
        .ok_or(Error::Singular("target covariance"))?;
    for (i, v) in [terms.center, terms.kf].into_iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { component: i });
        }
    }
    Ok(terms)
}

/// `L_reg = L_c + L_kf` (unweighted).
pub fn regression_loss<B: RotatedBox<N>, const N: usize>(
    pred: &B,
    gt: &B,
    anchor: &B,
    cfg: &LossConfig,
) -> Result<f64> {
    Ok(regression_loss_terms(pred, gt, anchor, cfg)?.total())
}

/// `λ₁ · L_reg`, the regression share of the multi-task loss.
pub fn weighted_regression_loss<B: RotatedBox<N>, const N: usize>(
    pred: &B,
    gt: &B,
    anchor: &B,
    cfg: &LossConfig,
) -> Result<f64> {
    Ok(cfg.lambda1 * regression_loss(pred, gt, anchor, cfg)?)
}

/// `1 − 1/(τ + f(d))`.
pub fn distance_loss<T: Real>(d: T, tau: f64, f: DistanceFn) -> T {
    T::one() - T::one() / (T::from_f64(tau) + f.apply(d))
}

/// Squared 2-Wasserstein distance
/// `‖μ₁−μ₂‖² + tr Σ₁ + tr Σ₂ − 2 tr((Σ₁^½ Σ₂ Σ₁^½)^½)`, clamped at 0.
pub fn gwd_distance_of<T: Real, const N: usize>(g1: &Gaussian<N, T>, g2: &Gaussian<N, T>) -> T {
    let mut d = T::zero();
    for i in 0..N {
        let e = g1.mu[i] - g2.mu[i];
        d = d + e * e;
    }
    d = d + linalg::trace(&g1.sigma) + linalg::trace(&g2.sigma)
        - linalg::trace_sqrt_product(&g1.sigma, &g2.sigma).scale(2.0);
    if d.value() < 0.0 {
        T::zero()
    } else {
        d
    }
}

pub fn gwd_distance<const N: usize>(g1: &Gaussian<N>, g2: &Gaussian<N>) -> Result<f64> {
    check_spd(&g1.sigma)?;
    check_spd(&g2.sigma)?;
    Ok(gwd_distance_of(g1, g2))
}

pub fn gwd_loss<const N: usize>(g1: &Gaussian<N>, g2: &Gaussian<N>, tau: f64, f: DistanceFn) -> Result<f64> {
    check_tau(tau)?;
    Ok(distance_loss(gwd_distance(g1, g2)?, tau, f))
}

/// `D(p ‖ q) = ½[(μ_q−μ_p)ᵀΣ_q⁻¹(μ_q−μ_p) + tr(Σ_q⁻¹Σ_p) + ln(|Σ_q|/|Σ_p|) − n]`, clamped at 0.
pub fn kld_divergence_of<T: Real, const N: usize>(p: &Gaussian<N, T>, q: &Gaussian<N, T>) -> Option<T> {
    let q_inv = linalg::inverse(&q.sigma, SINGULAR_TOL)?;
    let mut d = [T::zero(); N];
    for i in 0..N {
        d[i] = q.mu[i] - p.mu[i];
    }
    let ratio = linalg::det(&q.sigma) / linalg::det(&p.sigma);
    let v = (linalg::quad_form(&d, &q_inv) + linalg::trace(&linalg::mul(&q_inv, &p.sigma)) + ratio.ln()
        - T::from_f64(N as f64))
    .scale(0.5);
    Some(if v.value() < 0.0 { T::zero() } else { v })
}

/// KL divergence `D(pred ‖ target)`.
pub fn kld_divergence<const N: usize>(pred: &Gaussian<N>, target: &Gaussian<N>) -> Result<f64> {
    check_spd(&pred.sigma)?;
    check_spd(&target.sigma)?;
    kld_divergence_of(pred, target).ok_or(Error::Singular("target covariance"))
}

/// KLD loss with the divergence taken as `D(pred ‖ target)`.
pub fn kld_loss<const N: usize>(pred: &Gaussian<N>, target: &Gaussian<N>, tau: f64, f: DistanceFn) -> Result<f64> {
    check_tau(tau)?;
    Ok(distance_loss(kld_divergence(pred, target)?, tau, f))
}

/// GWD loss with `cfg.gwd_tau` and `cfg.gwd_f`.
pub fn gwd_loss_cfg<const N: usize>(pred: &Gaussian<N>, target: &Gaussian<N>, cfg: &LossConfig) -> Result<f64> {
    gwd_loss(pred, target, cfg.gwd_tau, cfg.gwd_f)
}

/// KLD loss with `cfg.kld_tau`, `cfg.kld_f` and `cfg.kld_direction`.
pub fn kld_loss_cfg<const N: usize>(pred: &Gaussian<N>, target: &Gaussian<N>, cfg: &LossConfig) -> Result<f64> {
    match cfg.kld_direction {
        KldDirection::PredToTarget => kld_loss(pred, target, cfg.kld_tau, cfg.kld_f),
        KldDirection::TargetToPred => kld_loss(target, pred, cfg.kld_tau, cfg.kld_f),
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 1.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("tau must be >= 1 (got {tau})")))
    }
}

/// Smooth-L1 summed over every encoded offset (center, extents, angle).
pub fn smooth_l1_box_loss<T: Real, const N: usize>(pred: &EncodedBox<N, T>, gt: &EncodedBox<N, T>, sigma: f64) -> T {
    pred.offsets()
        .into_iter()
        .zip(gt.offsets())
        .fold(T::zero(), |acc, (p, g)| acc + smooth_l1(p - g, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RotatedBox2D, RotatedBox3D};
    use proptest::prelude::*;

    fn g2(mu: [f64; 2], sigma: Mat<f64, 2>) -> Gaussian<2> {
        Gaussian::new(mu, sigma).unwrap()
    }

    fn b2(x: f64, y: f64, w: f64, h: f64, t: f64) -> RotatedBox2D {
        RotatedBox2D::new(x, y, w, h, t).unwrap()
    }

    fn cfg(form: KfForm) -> LossConfig {
        LossConfig {
            kf_form: form,
            ..LossConfig::default()
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kfiou_identical_hits_bound() {
        let g = g2([1.0, 2.0], [[3.0, 0.5], [0.5, 1.0]]);
        assert!(close(kfiou(&g, &g).unwrap(), 1.0 / 3.0, 1e-12));
        assert!(close(kfiou_rescaled(&g, &g).unwrap(), 1.0, 1e-12));
        let g3 = Gaussian::new([0.0; 3], [[2.0, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 0.5]]).unwrap();
        assert!(close(kfiou(&g3, &g3).unwrap(), 0.214738, 1e-6));
        assert!(close(kfiou(&g3, &g3).unwrap(), 1.0 / (32f64.sqrt() - 1.0), 1e-12));
        assert!(close(kfiou_rescaled(&g3, &g3).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn kfiou_crossed_diagonals() {
        let a = g2([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]);
        let b = g2([0.0, 0.0], [[1.0, 0.0], [0.0, 4.0]]);
        assert!(close(kfiou(&a, &b).unwrap(), 0.25, 1e-12));
        assert!(close(kfiou_rescaled(&a, &b).unwrap(), 0.75, 1e-12));
    }

    #[test]
    fn kfiou_rejects_non_spd() {
        let a = Gaussian {
            mu: [0.0, 0.0],
            sigma: [[1.0, 2.0], [2.0, 1.0]],
        };
        let b = g2([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]);
        assert!(kfiou(&a, &b).is_err());
    }

    #[test]
    fn kf_loss_forms_at_identical_boxes() {
        let b = b2(3.0, 4.0, 4.0, 2.0, 10.0);
        let exp = kf_loss(&b, &b, &cfg(KfForm::Exp)).unwrap();
        assert!(close(exp, (2.0f64 / 3.0).exp() - 1.0, 1e-12));
        assert!(close(exp, 0.947735, 1e-6));
        assert!(kf_loss(&b, &b, &cfg(KfForm::ExpRescaled)).unwrap().abs() < 1e-12);
        assert!(close(kf_loss(&b, &b, &cfg(KfForm::Linear)).unwrap(), 2.0 / 3.0, 1e-12));
        let nl = kf_loss(&b, &b, &cfg(KfForm::NegLog)).unwrap();
        assert!(close(nl, -(1.0 / 3.0 + 1e-6f64).ln(), 1e-12));
        let nlr = kf_loss(&b, &b, &cfg(KfForm::NegLogRescaled)).unwrap();
        assert!(close(nlr, -(1.0 + 1e-6f64).ln(), 1e-12));
        // the flag and a rescaled form never compound
        let both = LossConfig {
            rescale: true,
            ..cfg(KfForm::ExpRescaled)
        };
        assert!(kf_loss(&b, &b, &both).unwrap().abs() < 1e-12);
        let linear_rescaled = LossConfig {
            rescale: true,
            ..cfg(KfForm::Linear)
        };
        assert!(kf_loss(&b, &b, &linear_rescaled).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kf_loss_3d_identical() {
        let b = RotatedBox3D::new(0.0, 0.0, 0.0, 4.0, 2.0, 1.5, 30.0).unwrap();
        assert!(kf_loss(&b, &b, &cfg(KfForm::ExpRescaled)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn smooth_l1_center_examples() {
        let enc = |tx: f64| EncodedBox {
            center: [tx, 0.0],
            extent: [0.0, 0.0],
            angle: AngleOffset::Direct(0.0),
        };
        assert_eq!(center_loss_smooth_l1(&enc(0.0), &enc(0.0), 3.0), 0.0);
        assert!(close(center_loss_smooth_l1(&enc(0.5), &enc(0.0), 3.0), 0.5 - 0.5 / 9.0, 1e-12));
        assert!(close(center_loss_smooth_l1(&enc(0.01), &enc(0.0), 3.0), 4.5e-4, 1e-15));
        // continuous at the transition
        let beta = 1.0 / 9.0;
        assert!(close(smooth_l1(beta - 1e-12, 3.0), smooth_l1(beta + 1e-12, 3.0), 1e-11));
    }

    #[test]
    fn kld_term_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(center_loss_kld_term(&[1.0, 1.0], &[1.0, 1.0], &id).unwrap(), 0.0);
        assert!(close(center_loss_kld_term(&[0.0, 0.0], &[1.0, 0.0], &id).unwrap(), 2f64.ln(), 1e-12));
        let d = [[4.0, 0.0], [0.0, 1.0]];
        assert!(close(center_loss_kld_term(&[0.0, 0.0], &[1.0, 0.0], &d).unwrap(), 1.25f64.ln(), 1e-12));
        let sing = [[1.0, 1.0], [1.0, 1.0]];
        assert!(center_loss_kld_term(&[0.0, 0.0], &[1.0, 0.0], &sing).is_err());
    }

    #[test]
    fn regression_loss_examples() {
        let gt = b2(5.0, 5.0, 6.0, 3.0, 20.0);
        let anchor = b2(4.0, 6.0, 5.0, 5.0, 0.0);
        let c = cfg(KfForm::ExpRescaled);
        assert!(regression_loss(&gt, &gt, &anchor, &c).unwrap().abs() < 1e-12);

        let pred = b2(0.0, 0.0, 4.0, 2.0, 0.0);
        let gt = b2(0.0, 0.0, 4.0, 2.0, 90.0);
        let t = regression_loss_terms(&pred, &gt, &gt, &cfg(KfForm::Exp)).unwrap();
        assert!(t.center.abs() < 1e-15);
        assert!(close(t.total(), 0.75f64.exp() - 1.0, 1e-12));
        assert!(close(t.total(), 1.1170, 1e-4));

        let far = b2(100.0, 0.0, 4.0, 2.0, 0.0);
        for form in [CenterForm::SmoothL1, CenterForm::KldTerm] {
            let c = LossConfig {
                center_form: form,
                ..LossConfig::default()
            };
            let t = regression_loss_terms(&far, &gt, &gt, &c).unwrap();
            assert!(t.total().is_finite() && t.center > 0.0, "{form:?} {t:?}");
        }
        let w = weighted_regression_loss(&far, &gt, &gt, &LossConfig::default()).unwrap();
        let u = regression_loss(&far, &gt, &gt, &LossConfig::default()).unwrap();
        assert!(close(w, 0.01 * u, 1e-15));
    }

    #[test]
    fn gwd_and_kld_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let a = g2([0.0, 0.0], id);
        let b = g2([3.0, 0.0], id);
        assert!(close(gwd_distance(&a, &b).unwrap(), 9.0, 1e-12));
        assert!(close(gwd_loss(&a, &b, 1.0, DistanceFn::Sqrt).unwrap(), 0.75, 1e-12));
        assert!(gwd_loss(&a, &a, 1.0, DistanceFn::Sqrt).unwrap().abs() < 1e-12);
        assert!(close(gwd_loss(&a, &a, 2.0, DistanceFn::Sqrt).unwrap(), 0.5, 1e-12));

        let c = g2([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]);
        let expect = 0.5 * (0.25 + 1.0 - 2.0 + 4f64.ln());
        assert!(close(kld_divergence(&a, &c).unwrap(), expect, 1e-12));
        assert!(close(expect, 0.3182, 1e-4));
        assert!(kld_loss(&a, &a, 1.0, DistanceFn::Log1p).unwrap().abs() < 1e-12);
        assert!(close(
            kld_loss(&a, &c, 1.0, DistanceFn::Log1p).unwrap(),
            1.0 - 1.0 / (1.0 + expect.ln_1p()),
            1e-12
        ));
        assert!(gwd_loss(&a, &b, 0.5, DistanceFn::Sqrt).is_err());

        let rev = LossConfig {
            kld_direction: KldDirection::TargetToPred,
            ..LossConfig::default()
        };
        assert!(close(
            kld_loss_cfg(&c, &a, &rev).unwrap(),
            kld_loss(&a, &c, 1.0, DistanceFn::Log1p).unwrap(),
            1e-15
        ));
    }

    #[test]
    fn smooth_l1_box_loss_examples() {
        let anchor = b2(0.0, 0.0, 8.0, 8.0, 0.0);
        let e = encode_box(&anchor, &anchor, AngleMode::Direct, OffsetFrame::Image).unwrap();
        assert_eq!(smooth_l1_box_loss(&e, &e, 3.0), 0.0);
        // angle-only deviation: value independent of the aspect ratio
        let mut vals = Vec::new();
        for (w, h) in [(4.0, 4.0), (8.0, 2.0), (16.0, 1.0)] {
            let gt = b2(0.0, 0.0, w, h, 0.0);
            let pred = b2(0.0, 0.0, w, h, 15.0);
            let p = encode_box(&pred, &gt, AngleMode::Direct, OffsetFrame::Anchor).unwrap();
            let g = encode_box(&gt, &gt, AngleMode::Direct, OffsetFrame::Anchor).unwrap();
            vals.push(smooth_l1_box_loss(&p, &g, 3.0));
        }
        assert!(vals.iter().all(|v| close(*v, vals[0], 1e-15)), "{vals:?}");
        assert!(close(vals[0], 15f64.to_radians() - 0.5 / 9.0, 1e-12));
    }

    #[test]
    fn monotone_in_angle_at_four_to_one() {
        let gt = b2(0.0, 0.0, 8.0, 2.0, 0.0);
        for form in KfForm::ALL {
            let c = cfg(form);
            let mut prev = f64::NEG_INFINITY;
            for deg in 0..=90 {
                let pred = b2(0.0, 0.0, 8.0, 2.0, deg as f64);
                let v = kf_loss(&pred, &gt, &c).unwrap();
                assert!(v >= prev - 1e-12, "{form:?} at {deg}: {v} < {prev}");
                prev = v;
            }
        }
    }

    fn spd2() -> impl Strategy<Value = Mat<f64, 2>> {
        (0.05f64..50.0, 0.05f64..50.0, -90.0f64..90.0).prop_map(|(w, h, t)| {
            gaussian::box_covariance(&BoxParams {
                center: [0.0, 0.0],
                extent: [w, h],
                theta_deg: t,
            })
        })
    }

    fn box2() -> impl Strategy<Value = RotatedBox2D> {
        (-50.0f64..50.0, -50.0f64..50.0, 0.1f64..40.0, 0.1f64..40.0, -90.0f64..90.0)
            .prop_map(|(x, y, w, h, t)| b2(x, y, w, h, t))
    }

    proptest! {
        #[test]
        fn kfiou_bounded_and_symmetric(s1 in spd2(), s2 in spd2()) {
            let a = Gaussian { mu: [0.0, 0.0], sigma: s1 };
            let b = Gaussian { mu: [0.0, 0.0], sigma: s2 };
            let k = kfiou(&a, &b).unwrap();
            prop_assert!(k > 0.0 && k <= 1.0 / 3.0 + 1e-9);
            prop_assert!((k - kfiou(&b, &a).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn kfiou_ignores_means(s1 in spd2(), s2 in spd2(), dx in -1e3f64..1e3, dy in -1e3f64..1e3) {
            let a = Gaussian { mu: [0.0, 0.0], sigma: s1 };
            let b = Gaussian { mu: [0.0, 0.0], sigma: s2 };
            let moved = Gaussian { mu: [dx, dy], sigma: s2 };
            prop_assert!((kfiou(&a, &b).unwrap() - kfiou(&a, &moved).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn scale_invariance(p in box2(), g in box2(), s in 0.1f64..10.0) {
            let (gp, gg) = (gaussian::box2d_to_gaussian(&p).unwrap(), gaussian::box2d_to_gaussian(&g).unwrap());
            let (ps, gs) = (p.scaled(s), g.scaled(s));
            let (gps, ggs) = (gaussian::box2d_to_gaussian(&ps).unwrap(), gaussian::box2d_to_gaussian(&gs).unwrap());
            prop_assert!((kfiou(&gp, &gg).unwrap() - kfiou(&gps, &ggs).unwrap()).abs() < 1e-9);
            prop_assert!((kfiou_rescaled(&gp, &gg).unwrap() - kfiou_rescaled(&gps, &ggs).unwrap()).abs() < 1e-9);
            let d = kld_divergence(&gp, &gg).unwrap();
            prop_assert!((d - kld_divergence(&gps, &ggs).unwrap()).abs() <= 1e-9 * d.max(1.0));
            let w = gwd_distance(&gp, &gg).unwrap();
            prop_assert!((gwd_distance(&gps, &ggs).unwrap() - s * s * w).abs() <= 1e-7 * (s * s * w).max(1.0));
        }

        #[test]
        fn boundary_swap_invariance(p in box2(), g in box2()) {
            let swapped = RotatedBox2D::new(p.x, p.y, p.h, p.w, p.theta + 90.0).unwrap();
            for form in KfForm::ALL {
                let c = cfg(form);
                let a = kf_loss(&p, &g, &c).unwrap();
                let b = kf_loss(&swapped, &g, &c).unwrap();
                prop_assert!((a - b).abs() < 1e-9, "{form:?}: {a} vs {b}");
            }
        }

        #[test]
        fn losses_nonnegative(p in box2(), g in box2()) {
            let (gp, gg) = (gaussian::box2d_to_gaussian(&p).unwrap(), gaussian::box2d_to_gaussian(&g).unwrap());
            let l = gwd_loss(&gp, &gg, 1.0, DistanceFn::Sqrt).unwrap();
            prop_assert!((0.0..1.0).contains(&l));
            let l = kld_loss(&gp, &gg, 1.0, DistanceFn::Log1p).unwrap();
            prop_assert!((0.0..1.0).contains(&l));
            for form in KfForm::ALL {
                prop_assert!(kf_loss(&p, &g, &cfg(form)).unwrap() >= -1e-12);
            }
            let r = regression_loss(&p, &g, &g, &LossConfig::default()).unwrap();
            prop_assert!(r.is_finite() && r >= 0.0);
        }

        #[test]
        fn encoding_round_trip(p in box2(), a in box2(), indirect in any::<bool>(), image in any::<bool>()) {
            let mode = if indirect { AngleMode::Indirect } else { AngleMode::Direct };
            let frame = if image { OffsetFrame::Image } else { OffsetFrame::Anchor };
            let e = encode_box(&p, &a, mode, frame).unwrap();
            if let AngleOffset::Indirect { sin, cos } = e.angle {
                prop_assert!((sin * sin + cos * cos - 1.0).abs() < 1e-9);
            }
            let back: RotatedBox2D = decode_box(&e, &a, frame).unwrap();
            for (x, y) in back.params().iter().zip(p.params()) {
                prop_assert!((x - y).abs() < 1e-9 * y.abs().max(1.0), "{back:?} vs {p:?}");
            }
        }
    }
}
