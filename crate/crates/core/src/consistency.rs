//! Trend-consistency simulation: seeded box-pair generation, per-method
//! similarity values, EMean / EVar against exact SkewIoU, and the angle,
//! aspect-ratio, center-deviation and scale sweeps.
//!
//! Every pair is drawn from its own ChaCha8 stream (`seed`, stream = sample
//! index), so results do not depend on evaluation order or thread count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::box2d_to_gaussian;
use crate::geometry::{skew_iou_2d, RotatedBox2D};
use crate::losses::{self, encode_box, LossConfig};

/// How random `(pred, gt)` pairs are drawn.
///
/// The target has its long side uniform in `extent_range` (times `scale`), an
/// aspect ratio uniform in `aspect_range` and θ uniform in `angle_range`, and
/// sits at the origin. The prediction is the target moved by a uniformly
/// distributed offset in the disc of radius `max_center_dev`, with its long
/// side and aspect ratio multiplied by `e^u` for `u` uniform in
/// `±size_jitter` (then clamped into the ranges) and θ shifted by up to
/// `±angle_jitter` degrees (wrapped back into `angle_range` when that spans a
/// half turn).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairProtocol {
    pub seed: u64,
    pub n_samples: usize,
    pub max_center_dev: f64,
    pub extent_range: [f64; 2],
    pub aspect_range: [f64; 2],
    pub angle_range: [f64; 2],
    pub scale: f64,
    /// Multiply the center offset by `scale` as well.
    pub scale_deviation: bool,
    pub angle_jitter: f64,
    pub size_jitter: f64,
}

impl Default for PairProtocol {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 1000,
            max_center_dev: 5.0,
            extent_range: [4.0, 50.0],
            aspect_range: [1.0, 8.0],
            angle_range: [-90.0, 90.0],
            scale: 1.0,
            scale_deviation: false,
            angle_jitter: 10.0,
            size_jitter: 0.1,
        }
    }
}

impl PairProtocol {
    /// Prediction equal to the target up to the center offset.
    pub fn identical(self) -> Self {
        Self {
            angle_jitter: 0.0,
            size_jitter: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_samples == 0 {
            return bad("n_samples must be >= 1".into());
        }
        let finite = |v: f64| v.is_finite();
        let [e0, e1] = self.extent_range;
        if !(finite(e0) && finite(e1) && e0 > 0.0 && e0 <= e1) {
            return bad(format!("extent_range must satisfy 0 < min <= max (got [{e0}, {e1}])"));
        }
        let [a0, a1] = self.aspect_range;
        if !(finite(a0) && finite(a1) && a0 >= 1.0 && a0 <= a1) {
            return bad(format!("aspect_range must satisfy 1 <= min <= max (got [{a0}, {a1}])"));
        }
        let [t0, t1] = self.angle_range;
        if !(finite(t0) && finite(t1) && t0 <= t1) {
            return bad(format!("angle_range must satisfy min <= max (got [{t0}, {t1}])"));
        }
        for (name, v) in [
            ("max_center_dev", self.max_center_dev),
            ("angle_jitter", self.angle_jitter),
            ("size_jitter", self.size_jitter),
        ] {
            if !(finite(v) && v >= 0.0) {
                return bad(format!("{name} must be >= 0 (got {v})"));
            }
        }
        if !(finite(self.scale) && self.scale > 0.0) {
            return bad(format!("scale must be > 0 (got {})", self.scale));
        }
        Ok(())
    }

    pub fn header_lines(&self) -> Vec<String> {
        vec![
            format!("seed={}", self.seed),
            format!("n_samples={}", self.n_samples),
            format!("max_center_dev={}", self.max_center_dev),
            format!("extent_range={},{}", self.extent_range[0], self.extent_range[1]),
            format!("aspect_range={},{}", self.aspect_range[0], self.aspect_range[1]),
            format!("angle_range={},{}", self.angle_range[0], self.angle_range[1]),
            format!("scale={}", self.scale),
            format!("scale_deviation={}", self.scale_deviation),
            format!("angle_jitter={}", self.angle_jitter),
            format!("size_jitter={}", self.size_jitter),
        ]
    }

    fn wrap_angle(&self, t: f64) -> f64 {
        let [lo, hi] = self.angle_range;
        if hi - lo >= 180.0 - 1e-12 {
            lo + (t - lo).rem_euclid(180.0)
        } else {
            t.clamp(lo, hi)
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws pair `index` as `(pred, gt)`. Deterministic in `(seed, index)`.
pub fn sample_pair(p: &PairProtocol, index: u64) -> (RotatedBox2D, RotatedBox2D) {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    rng.set_stream(index);
    let long = uniform(&mut rng, p.extent_range[0], p.extent_range[1]);
    let aspect = uniform(&mut rng, p.aspect_range[0], p.aspect_range[1]);
    let theta = uniform(&mut rng, p.angle_range[0], p.angle_range[1]);
    let radius = p.max_center_dev * rng.random::<f64>().sqrt();
    let phi = uniform(&mut rng, 0.0, std::f64::consts::TAU);
    let js = uniform(&mut rng, -p.size_jitter, p.size_jitter);
    let ja = uniform(&mut rng, -p.size_jitter, p.size_jitter);
    let jt = uniform(&mut rng, -p.angle_jitter, p.angle_jitter);

    let gt = RotatedBox2D {
        x: 0.0,
        y: 0.0,
        w: long * p.scale,
        h: long / aspect * p.scale,
        theta,
        convention: Default::default(),
    };
    let long2 = (long * js.exp()).clamp(p.extent_range[0], p.extent_range[1]);
    let aspect2 = (aspect * ja.exp()).clamp(p.aspect_range[0], p.aspect_range[1]);
    let r = if p.scale_deviation { radius * p.scale } else { radius };
    let pred = RotatedBox2D {
        x: r * phi.cos(),
        y: r * phi.sin(),
        w: long2 * p.scale,
        h: long2 / aspect2 * p.scale,
        theta: p.wrap_angle(theta + jt),
        convention: Default::default(),
    };
    (pred, gt)
}

/// Approximations compared against exact SkewIoU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact SkewIoU itself.
    PlainSkewIou,
    /// Rescaled KFIoU alone.
    Kfiou,
    /// Rescaled KFIoU times `e^(−L_c)` with the Smooth-L1 center loss.
    KfiouSmoothL1Center,
    /// Rescaled KFIoU times `e^(−L_c)` with the KLD center term, i.e. `/(1+q)`.
    KfiouKldCenter,
    Kld,
    Gwd,
    SmoothL1,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::PlainSkewIou,
        Method::Kfiou,
        Method::KfiouSmoothL1Center,
        Method::KfiouKldCenter,
        Method::Kld,
        Method::Gwd,
        Method::SmoothL1,
    ];

    /// The five rows compared in the EVar table, in expected increasing EVar.
    pub const TABLE: [Method; 5] = [
        Method::KfiouKldCenter,
        Method::KfiouSmoothL1Center,
        Method::Kld,
        Method::Gwd,
        Method::SmoothL1,
    ];

    /// Columns of the angle and aspect sweeps.
    pub const SWEEP: [Method; 5] = [Method::PlainSkewIou, Method::Kfiou, Method::Kld, Method::Gwd, Method::SmoothL1];

    pub fn name(self) -> &'static str {
        match self {
            Method::PlainSkewIou => "plain",
            Method::Kfiou => "kfiou",
            Method::KfiouSmoothL1Center => "kfiou-smooth-l1",
            Method::KfiouKldCenter => "kfiou-kld",
            Method::Kld => "kld",
            Method::Gwd => "gwd",
            Method::SmoothL1 => "smooth-l1",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Placement of the (unbounded) Smooth-L1 loss on the similarity axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothL1Map {
    /// `1 − L`; keeps the loss scale, unbounded below.
    #[default]
    OneMinus,
    /// `e^(−L)`; bounded in `(0, 1]`.
    Exp,
}

/// Which quantity EVar measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvarMode {
    /// Variance of `plain − app`.
    #[default]
    Error,
    /// `mean((app − EMean)²)`, the formula as printed.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimOptions {
    pub loss: LossConfig,
    pub smooth_l1_map: SmoothL1Map,
    pub evar_mode: EvarMode,
}

impl SimOptions {
    pub fn header_lines(&self) -> Vec<String> {
        let mut v = self.loss.header_lines();
        v.push(format!("smooth_l1_map={}", serde_plain(&self.smooth_l1_map)));
        v.push(format!("evar_mode={}", serde_plain(&self.evar_mode)));
        v
    }
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_default().trim_matches('"').to_string()
}

/// Similarity of `pred` to `gt` under `method`; higher is more similar and
/// identical boxes give 1.
pub fn method_similarity(pred: &RotatedBox2D, gt: &RotatedBox2D, method: Method, opts: &SimOptions) -> Result<f64> {
    pred.validate()?;
    gt.validate()?;
    let cfg = &opts.loss;
    let gaussians = || -> Result<_> { Ok((box2d_to_gaussian(pred)?, box2d_to_gaussian(gt)?)) };
    let encoded = || -> Result<_> {
        Ok((
            encode_box(pred, gt, cfg.angle_mode, cfg.offset_frame)?,
            encode_box(gt, gt, cfg.angle_mode, cfg.offset_frame)?,
        ))
    };
    Ok(match method {
        Method::PlainSkewIou => skew_iou_2d(pred, gt),
        Method::Kfiou => {
            let (gp, gg) = gaussians()?;
            losses::kfiou_rescaled(&gp, &gg)?
        }
        Method::KfiouSmoothL1Center => {
            let (gp, gg) = gaussians()?;
            let (ep, eg) = encoded()?;
            let lc = losses::center_loss_smooth_l1(&ep, &eg, cfg.smooth_l1_sigma);
            losses::kfiou_rescaled(&gp, &gg)? * (-lc).exp()
        }
        Method::KfiouKldCenter => {
            let (gp, gg) = gaussians()?;
            let lc = losses::center_loss_kld_term(&gg.mu, &gp.mu, &gg.sigma)?;
            losses::kfiou_rescaled(&gp, &gg)? * (-lc).exp()
        }
        Method::Kld => {
            let (gp, gg) = gaussians()?;
            1.0 - losses::kld_loss_cfg(&gp, &gg, cfg)?
        }
        Method::Gwd => {
            let (gp, gg) = gaussians()?;
            1.0 - losses::gwd_loss_cfg(&gp, &gg, cfg)?
        }
        Method::SmoothL1 => {
            let (ep, eg) = encoded()?;
            let l = losses::smooth_l1_box_loss(&ep, &eg, cfg.smooth_l1_sigma);
            match opts.smooth_l1_map {
                SmoothL1Map::OneMinus => 1.0 - l,
                SmoothL1Map::Exp => (-l).exp(),
            }
        }
    })
}

/// `1 − similarity`, the loss plotted in the sweeps.
pub fn method_loss(pred: &RotatedBox2D, gt: &RotatedBox2D, method: Method, opts: &SimOptions) -> Result<f64> {
    Ok(1.0 - method_similarity(pred, gt, method, opts)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub plain: f64,
    pub app: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub protocol: PairProtocol,
    pub method: Method,
    pub evar_mode: EvarMode,
    pub emean: f64,
    pub evar: f64,
    pub samples: Vec<Sample>,
}

/// `(EMean, EVar)` of `plain − app`.
pub fn error_stats(plain: &[f64], app: &[f64], mode: EvarMode) -> (f64, f64) {
    let n = plain.len() as f64;
    let emean = plain.iter().zip(app).map(|(p, a)| p - a).sum::<f64>() / n;
    let evar = match mode {
        EvarMode::Error => plain.iter().zip(app).map(|(p, a)| (p - a - emean).powi(2)).sum::<f64>() / n,
        EvarMode::Literal => app.iter().map(|a| (a - emean).powi(2)).sum::<f64>() / n,
    };
    (emean, evar)
}

/// Plain SkewIoU and every method's similarity over one protocol's samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub protocol: PairProtocol,
    pub options: SimOptions,
    pub methods: Vec<Method>,
    pub plain: Vec<f64>,
    /// `app[m][i]`: method `m` on sample `i`.
    pub app: Vec<Vec<f64>>,
}

pub fn simulate(protocol: &PairProtocol, methods: &[Method], opts: &SimOptions) -> Result<Simulation> {
    protocol.validate()?;
    opts.loss.validate()?;
    let rows: Vec<(f64, Vec<f64>)> = (0..protocol.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let (pred, gt) = sample_pair(protocol, i);
            let plain = skew_iou_2d(&pred, &gt);
            let app = methods
                .iter()
                .map(|m| method_similarity(&pred, &gt, *m, opts))
                .collect::<Result<Vec<_>>>()?;
            Ok((plain, app))
        })
        .collect::<Result<_>>()?;
    let plain = rows.iter().map(|r| r.0).collect();
    let app = (0..methods.len()).map(|m| rows.iter().map(|r| r.1[m]).collect()).collect();
    Ok(Simulation {
        protocol: *protocol,
        options: *opts,
        methods: methods.to_vec(),
        plain,
        app,
    })
}

impl Simulation {
    pub fn stats(&self, m: usize) -> (f64, f64) {
        error_stats(&self.plain, &self.app[m], self.options.evar_mode)
    }

    pub fn evars(&self) -> Vec<f64> {
        (0..self.methods.len()).map(|m| self.stats(m).1).collect()
    }

    pub fn reports(&self) -> Vec<SimReport> {
        (0..self.methods.len())
            .map(|m| {
                let (emean, evar) = self.stats(m);
                SimReport {
                    protocol: self.protocol,
                    method: self.methods[m],
                    evar_mode: self.options.evar_mode,
                    emean,
                    evar,
                    samples: self
                        .plain
                        .iter()
                        .zip(&self.app[m])
                        .map(|(&plain, &app)| Sample { plain, app })
                        .collect(),
                }
            })
            .collect()
    }

    fn header(&self) -> String {
        let mut s = String::new();
        for l in self.protocol.header_lines().iter().chain(&self.options.header_lines()) {
            let _ = writeln!(s, "# {l}");
        }
        s
    }

    /// `method,emean,evar,n` per method, after `#` header lines.
    pub fn summary_csv(&self) -> String {
        let mut s = self.header();
        s.push_str("method,emean,evar,n\n");
        for m in 0..self.methods.len() {
            let (emean, evar) = self.stats(m);
            let _ = writeln!(s, "{},{emean},{evar},{}", self.methods[m], self.plain.len());
        }
        s
    }

    /// One row per sample: `index,plain,<method>...`.
    pub fn samples_csv(&self) -> String {
        let mut s = self.header();
        s.push_str("index,plain");
        for m in &self.methods {
            let _ = write!(s, ",{m}");
        }
        s.push('\n');
        for i in 0..self.plain.len() {
            let _ = write!(s, "{i},{}", self.plain[i]);
            for col in &self.app {
                let _ = write!(s, ",{}", col[i]);
            }
            s.push('\n');
        }
        s
    }
}

/// EMean / EVar of one method.
pub fn emean_evar(protocol: &PairProtocol, method: Method, opts: &SimOptions) -> Result<SimReport> {
    Ok(simulate(protocol, &[method], opts)?.reports().remove(0))
}

/// Whether the values strictly increase in the order given.
pub fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Inclusive range `start, start+step, …, ≤ end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite() && start.is_finite() && end.is_finite() && start <= end) {
            return Err(Error::InvalidConfig(format!(
                "sweep range needs start <= end and step > 0 (got {start}:{end}:{step})"
            )));
        }
        Ok(Self { start, end, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl std::str::FromStr for SweepRange {
    type Err = Error;

    /// `start:end:step`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidConfig(format!("range `{s}` is not start:end:step"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        SweepRange::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub values: Vec<f64>,
}

/// Plot-ready sweep output: one `x` column and one column per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub x_label: String,
    /// What each method column holds (`loss` or `evar`).
    pub value: String,
    pub methods: Vec<Method>,
    pub rows: Vec<SweepRow>,
    pub notes: Vec<String>,
}

impl SweepTable {
    pub fn column(&self, m: Method) -> Option<Vec<f64>> {
        let i = self.methods.iter().position(|x| *x == m)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# value={}", self.value);
        for n in &self.notes {
            let _ = writeln!(s, "# {n}");
        }
        s.push_str(&self.x_label);
        for m in &self.methods {
            let _ = write!(s, ",{m}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{}", r.x);
            for v in &r.values {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

fn loss_row(pred: &RotatedBox2D, gt: &RotatedBox2D, methods: &[Method], opts: &SimOptions) -> Result<Vec<f64>> {
    methods.iter().map(|m| method_loss(pred, gt, *m, opts)).collect()
}

/// Loss against the rotation between two boxes of the same shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSweep {
    pub aspect: f64,
    /// Center offset along x, in px.
    pub center_dev: f64,
    /// Long side of both boxes, in px.
    pub long_side: f64,
    pub range: SweepRange,
}

impl Default for AngleSweep {
    fn default() -> Self {
        Self {
            aspect: 4.0,
            center_dev: 0.0,
            long_side: 40.0,
            range: SweepRange {
                start: 0.0,
                end: 90.0,
                step: 1.0,
            },
        }
    }
}

pub fn angle_sweep(s: &AngleSweep, methods: &[Method], opts: &SimOptions) -> Result<SweepTable> {
    if !(s.aspect >= 1.0 && s.long_side > 0.0 && s.center_dev >= 0.0) {
        return Err(Error::InvalidConfig("angle sweep needs aspect >= 1, long_side > 0, center_dev >= 0".into()));
    }
    let gt = RotatedBox2D::new(0.0, 0.0, s.long_side, s.long_side / s.aspect, 0.0)?;
    let rows = s
        .range
        .values()
        .into_iter()
        .map(|deg| {
            let pred = RotatedBox2D::new(s.center_dev, 0.0, gt.w, gt.h, deg)?;
            Ok(SweepRow {
                x: deg,
                values: loss_row(&pred, &gt, methods, opts)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        x_label: "delta_theta_deg".into(),
        value: "loss".into(),
        methods: methods.to_vec(),
        rows,
        notes: vec![
            format!("aspect={}", s.aspect),
            format!("center_dev={}", s.center_dev),
            format!("long_side={}", s.long_side),
        ],
    })
}

/// Loss against the aspect ratio of two unit-area (by default) boxes rotated
/// by a fixed angle relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectSweep {
    pub delta_theta: f64,
    pub area: f64,
    pub range: SweepRange,
}

impl Default for AspectSweep {
    fn default() -> Self {
        Self {
            delta_theta: 30.0,
            area: 1.0,
            range: SweepRange {
                start: 1.0,
                end: 8.0,
                step: 0.5,
            },
        }
    }
}

pub fn aspect_sweep(s: &AspectSweep, methods: &[Method], opts: &SimOptions) -> Result<SweepTable> {
    if !(s.area > 0.0 && s.range.start >= 1.0) {
        return Err(Error::InvalidConfig("aspect sweep needs area > 0 and aspect >= 1".into()));
    }
    let rows = s
        .range
        .values()
        .into_iter()
        .map(|a| {
            let w = (s.area * a).sqrt();
            let h = s.area / w;
            let gt = RotatedBox2D::new(0.0, 0.0, w, h, 0.0)?;
            let pred = RotatedBox2D::new(0.0, 0.0, w, h, s.delta_theta)?;
            Ok(SweepRow {
                x: a,
                values: loss_row(&pred, &gt, methods, opts)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        x_label: "aspect".into(),
        value: "loss".into(),
        methods: methods.to_vec(),
        rows,
        notes: vec![format!("delta_theta={}", s.delta_theta), format!("area={}", s.area)],
    })
}

fn evar_sweep(
    x_label: &str,
    xs: &[f64],
    protocols: impl Fn(f64) -> PairProtocol,
    methods: &[Method],
    opts: &SimOptions,
) -> Result<SweepTable> {
    let mut rows = Vec::with_capacity(xs.len());
    let mut notes = Vec::new();
    for &x in xs {
        let p = protocols(x);
        if notes.is_empty() {
            notes = p.header_lines();
            notes.extend(opts.header_lines());
        }
        rows.push(SweepRow {
            x,
            values: simulate(&p, methods, opts)?.evars(),
        });
    }
    Ok(SweepTable {
        x_label: x_label.into(),
        value: "evar".into(),
        methods: methods.to_vec(),
        rows,
        notes,
    })
}

/// EVar against the maximum center deviation (px).
pub fn deviation_sweep(
    template: &PairProtocol,
    devs: &[f64],
    methods: &[Method],
    opts: &SimOptions,
) -> Result<SweepTable> {
    evar_sweep(
        "max_center_dev",
        devs,
        |d| PairProtocol {
            max_center_dev: d,
            ..*template
        },
        methods,
        opts,
    )
}

/// EVar against a global box scale. Whether the center deviation scales too is
/// taken from `template.scale_deviation`.
pub fn scale_sweep(
    template: &PairProtocol,
    scales: &[f64],
    methods: &[Method],
    opts: &SimOptions,
) -> Result<SweepTable> {
    evar_sweep(
        "scale",
        scales,
        |s| PairProtocol {
            scale: s,
            ..*template
        },
        methods,
        opts,
    )
}
