use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Real;

/// Functional form applied to KFIoU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KfForm {
    /// `e^(1−KFIoU) − 1`
    #[default]
    Exp,
    /// `1 − KFIoU`
    Linear,
    /// `−ln(KFIoU + ε)`
    NegLog,
    /// `e^(1−KFIoU/b) − 1` with `b` the upper bound (×3 in 2-D)
    ExpRescaled,
    /// `−ln(KFIoU/b + ε)`
    NegLogRescaled,
}

impl KfForm {
    pub const ALL: [KfForm; 5] = [
        KfForm::Exp,
        KfForm::Linear,
        KfForm::NegLog,
        KfForm::ExpRescaled,
        KfForm::NegLogRescaled,
    ];

    pub fn is_rescaled(self) -> bool {
        matches!(self, KfForm::ExpRescaled | KfForm::NegLogRescaled)
    }

    pub fn name(self) -> &'static str {
        match self {
            KfForm::Exp => "exp",
            KfForm::Linear => "linear",
            KfForm::NegLog => "neg-log",
            KfForm::ExpRescaled => "exp-rescaled",
            KfForm::NegLogRescaled => "neg-log-rescaled",
        }
    }

    /// Applies the form to an already-rescaled (or not) KFIoU value.
    pub fn apply<T: Real>(self, kfiou: T, epsilon: f64) -> T {
        match self {
            KfForm::Exp | KfForm::ExpRescaled => (T::one() - kfiou).exp() - T::one(),
            KfForm::Linear => T::one() - kfiou,
            KfForm::NegLog | KfForm::NegLogRescaled => -(kfiou + T::from_f64(epsilon)).ln(),
        }
    }
}

impl std::str::FromStr for KfForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KfForm::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown kf form `{s}`")))
    }
}

/// Center-point term of the regression loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterForm {
    /// Smooth-L1 on the encoded center offsets.
    #[default]
    SmoothL1,
    /// `ln(ΔμᵀΣ⁻¹Δμ + 1)` with the target covariance.
    KldTerm,
}

impl std::str::FromStr for CenterForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth-l1" => Ok(CenterForm::SmoothL1),
            "kld-term" | "kld" => Ok(CenterForm::KldTerm),
            _ => Err(Error::InvalidConfig(format!("unknown center form `{s}`"))),
        }
    }
}

/// Non-linearity `f` in the distance-loss wrapper `1 − 1/(τ + f(D))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceFn {
    Sqrt,
    Log1p,
}

impl DistanceFn {
    pub fn apply<T: Real>(self, d: T) -> T {
        match self {
            DistanceFn::Sqrt => d.sqrt(),
            DistanceFn::Log1p => d.ln_1p(),
        }
    }
}

impl std::str::FromStr for DistanceFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(DistanceFn::Sqrt),
            "log1p" => Ok(DistanceFn::Log1p),
            _ => Err(Error::InvalidConfig(format!("unknown distance function `{s}`"))),
        }
    }
}

/// Which argument of the KL divergence is the reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KldDirection {
    /// `D(pred ‖ target)`
    #[default]
    PredToTarget,
    /// `D(target ‖ pred)`
    TargetToPred,
}

/// How the angle is regressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleMode {
    /// Offset `(θ − θ_a)·π/180`.
    #[default]
    Direct,
    /// Unit pair `(sin θ, cos θ)`.
    Indirect,
}

/// Coordinate frame for the center offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetFrame {
    /// Offsets measured along the anchor's own axes. Identical to `Image` for
    /// axis-aligned anchors.
    #[default]
    Anchor,
    /// `t_x = (x − x_a)/w_a`, `t_y = (y − y_a)/h_a` in image axes.
    Image,
}

/// Hyperparameters of the regression losses and baselines.
///
/// Serialized as a flat key-value (TOML) document; missing keys take the
/// defaults below and unknown keys are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub kf_form: KfForm,
    /// Added inside the logarithm of the log forms.
    pub epsilon: f64,
    pub center_form: CenterForm,
    /// Multiply KFIoU by the inverse of its upper bound before applying the form.
    pub rescale: bool,
    /// Weight of the regression term in the multi-task loss.
    pub lambda1: f64,
    /// Smooth-L1 switches from quadratic to linear at `1/σ²`.
    pub smooth_l1_sigma: f64,
    pub gwd_tau: f64,
    pub gwd_f: DistanceFn,
    pub kld_tau: f64,
    pub kld_f: DistanceFn,
    pub kld_direction: KldDirection,
    pub angle_mode: AngleMode,
    pub offset_frame: OffsetFrame,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kf_form: KfForm::Exp,
            epsilon: 1e-6,
            center_form: CenterForm::SmoothL1,
            rescale: false,
            lambda1: 0.01,
            smooth_l1_sigma: 3.0,
            gwd_tau: 1.0,
            gwd_f: DistanceFn::Sqrt,
            kld_tau: 1.0,
            kld_f: DistanceFn::Log1p,
            kld_direction: KldDirection::PredToTarget,
            angle_mode: AngleMode::Direct,
            offset_frame: OffsetFrame::Anchor,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be > 0 (got {})", self.epsilon));
        }
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be > 0 (got {})", self.lambda1));
        }
        if !(self.smooth_l1_sigma > 0.0 && self.smooth_l1_sigma.is_finite()) {
            return bad(format!("smooth_l1_sigma must be > 0 (got {})", self.smooth_l1_sigma));
        }
        for (name, tau) in [("gwd_tau", self.gwd_tau), ("kld_tau", self.kld_tau)] {
            if !(tau >= 1.0 && tau.is_finite()) {
                return bad(format!("{name} must be >= 1 (got {tau})"));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: LossConfig = toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// `key=value` pairs, one per field, for report headers.
    pub fn header_lines(&self) -> Vec<String> {
        self.to_toml_string()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.replace(" = ", "=").replace('"', ""))
            .collect()
    }
}
