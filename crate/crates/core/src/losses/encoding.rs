//! Anchor-relative box encoding.
//!
//! `t_c = Δc / e_a`, `t_e = ln(e / e_a)`, and either a direct angle offset in
//! radians or the unit pair `(sin θ, cos θ)`.

use crate::error::{Error, Result};
use crate::gaussian::{BoxParams, RotatedBox};
use crate::linalg::Real;

use super::config::{AngleMode, OffsetFrame};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleOffset<T = f64> {
    /// `(θ − θ_a)·π/180`
    Direct(T),
    /// `(sin θ, cos θ)`
    Indirect { sin: T, cos: T },
}

impl<T: Real> AngleOffset<T> {
    pub fn mode(&self) -> AngleMode {
        match self {
            AngleOffset::Direct(_) => AngleMode::Direct,
            AngleOffset::Indirect { .. } => AngleMode::Indirect,
        }
    }
}

/// Encoded regression targets of one box against an anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodedBox<const N: usize, T = f64> {
    pub center: [T; N],
    pub extent: [T; N],
    pub angle: AngleOffset<T>,
}

impl<T: Real, const N: usize> EncodedBox<N, T> {
    /// All offsets in a flat list (center, extent, angle components).
    pub fn offsets(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(2 * N + 2);
        v.extend_from_slice(&self.center);
        v.extend_from_slice(&self.extent);
        match self.angle {
            AngleOffset::Direct(t) => v.push(t),
            AngleOffset::Indirect { sin, cos } => {
                v.push(sin);
                v.push(cos);
            }
        }
        v
    }
}

/// Rescales `(s, c)` onto the unit circle.
pub fn normalize_angle_pair(s: f64, c: f64) -> Result<(f64, f64)> {
    let n = s.hypot(c);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok((s / n, c / n))
}

fn normalize_generic<T: Real>(s: T, c: T) -> (T, T) {
    let n = (s * s + c * c).sqrt();
    (s / n, c / n)
}

/// Encodes `b` against `anchor`. No validation; see [`encode_box`].
pub fn encode<T: Real, const N: usize>(
    b: &BoxParams<T, N>,
    anchor: &BoxParams<f64, N>,
    mode: AngleMode,
    frame: OffsetFrame,
) -> EncodedBox<N, T> {
    let mut delta = [T::zero(); N];
    for i in 0..N {
        delta[i] = b.center[i] - T::from_f64(anchor.center[i]);
    }
    if frame == OffsetFrame::Anchor {
        let (s, c) = anchor.theta_deg.to_radians().sin_cos();
        let (dx, dy) = (delta[0], delta[1]);
        delta[0] = dx.scale(c) + dy.scale(s);
        delta[1] = dy.scale(c) - dx.scale(s);
    }
    let mut center = [T::zero(); N];
    let mut extent = [T::zero(); N];
    for i in 0..N {
        center[i] = delta[i].scale(1.0 / anchor.extent[i]);
        extent[i] = b.extent[i].scale(1.0 / anchor.extent[i]).ln();
    }
    let angle = match mode {
        AngleMode::Direct => {
            AngleOffset::Direct((b.theta_deg - T::from_f64(anchor.theta_deg)).scale(std::f64::consts::PI / 180.0))
        }
        AngleMode::Indirect => {
            let rad = b.theta_deg.scale(std::f64::consts::PI / 180.0);
            AngleOffset::Indirect {
                sin: rad.sin(),
                cos: rad.cos(),
            }
        }
    };
    EncodedBox { center, extent, angle }
}

/// Inverse of [`encode`]. Indirect pairs are normalized first.
pub fn decode<T: Real, const N: usize>(
    enc: &EncodedBox<N, T>,
    anchor: &BoxParams<f64, N>,
    frame: OffsetFrame,
) -> BoxParams<T, N> {
    let mut delta = [T::zero(); N];
    let mut extent = [T::zero(); N];
    for i in 0..N {
        delta[i] = enc.center[i].scale(anchor.extent[i]);
        extent[i] = enc.extent[i].exp().scale(anchor.extent[i]);
    }
    if frame == OffsetFrame::Anchor {
        let (s, c) = anchor.theta_deg.to_radians().sin_cos();
        let (u, v) = (delta[0], delta[1]);
        delta[0] = u.scale(c) - v.scale(s);
        delta[1] = u.scale(s) + v.scale(c);
    }
    let mut center = [T::zero(); N];
    for i in 0..N {
        center[i] = delta[i] + T::from_f64(anchor.center[i]);
    }
    let theta_deg = match enc.angle {
        AngleOffset::Direct(t) => T::from_f64(anchor.theta_deg) + t.scale(180.0 / std::f64::consts::PI),
        AngleOffset::Indirect { sin, cos } => {
            let (s, c) = normalize_generic(sin, cos);
            // atan2 is only needed on values; decoding is not on the differentiable path
            T::from_f64(s.value().atan2(c.value()).to_degrees())
        }
    };
    BoxParams {
        center,
        extent,
        theta_deg,
    }
}

pub fn encode_box<B: RotatedBox<N>, const N: usize>(
    b: &B,
    anchor: &B,
    mode: AngleMode,
    frame: OffsetFrame,
) -> Result<EncodedBox<N>> {
    b.check()?;
    anchor.check()?;
    Ok(encode(&b.box_params(), &anchor.box_params(), mode, frame))
}

pub fn decode_box<B: RotatedBox<N>, const N: usize>(
    enc: &EncodedBox<N>,
    anchor: &B,
    frame: OffsetFrame,
) -> Result<B> {
    anchor.check()?;
    if let AngleOffset::Indirect { sin, cos } = enc.angle {
        normalize_angle_pair(sin, cos)?;
    }
    B::from_box_params(&decode(enc, &anchor.box_params(), frame))
}
