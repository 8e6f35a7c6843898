//! Property suites behind `kfiou selftest`.
//!
//! Each suite draws its cases from a fixed ChaCha8 seed. The first failing
//! case is shrunk (components are replaced by simpler values while the case
//! keeps failing) before it is reported.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consistency::{self, AngleSweep, AspectSweep, EvarMode, Method, PairProtocol, SimOptions, SweepRange};
use crate::diff;
use crate::gaussian::{box2d_to_gaussian, box3d_to_gaussian, Gaussian};
use crate::geometry::{rasterized_iou, skew_iou_2d, RotatedBox2D, RotatedBox3D};
use crate::losses::{self, AngleMode, CenterForm, KfForm, LossConfig, OffsetFrame};

pub const SUITES: [&str; 10] = [
    "appendix-a-bound",
    "closed-form",
    "oracle-agreement",
    "evar-ordering",
    "shape-trends",
    "deviation-scale-trends",
    "grad-check",
    "non-overlap",
    "encoding-roundtrip",
    "determinism",
];

/// Case counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// The counts of the acceptance criteria.
    Full,
    /// Reduced counts for quick runs.
    Quick,
}

impl Scale {
    fn n(self, full: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => (full / 20).max(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub elapsed_ms: f64,
    /// First failing case, shrunk.
    pub failure: Option<String>,
    pub notes: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Tally {
    cases: usize,
    failures: usize,
    failure: Option<String>,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            failures: 0,
            failure: None,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.failure.is_none() {
                self.failure = Some(describe());
            }
        }
    }

    /// Like [`Tally::check`], shrinking `params` under `fails` before reporting.
    fn check_shrunk(&mut self, params: &[f64], fails: impl Fn(&[f64]) -> bool, label: &str) {
        let failed = fails(params);
        self.check(!failed, || {
            let small = shrink(params, &fails);
            format!("{label} {small:?} (original {params:?})")
        });
    }
}

/// Greedy shrinking: each component is replaced by `0`, its rounding, its
/// half or its one-decimal truncation while `fails` stays true.
pub fn shrink(params: &[f64], fails: impl Fn(&[f64]) -> bool) -> Vec<f64> {
    let mut cur = params.to_vec();
    loop {
        let mut changed = false;
        for i in 0..cur.len() {
            let v = cur[i];
            for cand in [0.0, v.round(), (v * 0.5).round(), (v * 10.0).trunc() / 10.0] {
                if cand == v || !cand.is_finite() {
                    continue;
                }
                let mut trial = cur.clone();
                trial[i] = cand;
                if fails(&trial) {
                    cur = trial;
                    changed = true;
                    break;
                }
            }
        }
        if !changed {
            return cur;
        }
    }
}

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x6b66_696f_7500 ^ salt)
}

fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

fn random_box2(r: &mut ChaCha8Rng, center: f64, lo: f64, hi: f64) -> RotatedBox2D {
    RotatedBox2D {
        x: uniform(r, -center, center),
        y: uniform(r, -center, center),
        w: uniform(r, lo, hi),
        h: uniform(r, lo, hi),
        theta: uniform(r, -90.0, 90.0),
        convention: Default::default(),
    }
}

fn random_box3(r: &mut ChaCha8Rng, center: f64, lo: f64, hi: f64) -> RotatedBox3D {
    RotatedBox3D {
        x: uniform(r, -center, center),
        y: uniform(r, -center, center),
        z: uniform(r, -center, center),
        w: uniform(r, lo, hi),
        h: uniform(r, lo, hi),
        l: uniform(r, lo, hi),
        theta: uniform(r, -90.0, 90.0),
    }
}

fn b2(p: &[f64]) -> Option<RotatedBox2D> {
    RotatedBox2D::new(p[0], p[1], p[2], p[3], p[4]).ok()
}

fn b3(p: &[f64]) -> Option<RotatedBox3D> {
    RotatedBox3D::new(p[0], p[1], p[2], p[3], p[4], p[5], p[6]).ok()
}

fn kfiou2(a: &RotatedBox2D, b: &RotatedBox2D) -> f64 {
    match (box2d_to_gaussian(a), box2d_to_gaussian(b)) {
        (Ok(x), Ok(y)) => losses::kfiou(&x, &y).unwrap_or(f64::NAN),
        _ => f64::NAN,
    }
}

fn kfiou3(a: &RotatedBox3D, b: &RotatedBox3D) -> f64 {
    match (box3d_to_gaussian(a), box3d_to_gaussian(b)) {
        (Ok(x), Ok(y)) => losses::kfiou(&x, &y).unwrap_or(f64::NAN),
        _ => f64::NAN,
    }
}

fn appendix_a_bound(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let n = scale.n(100_000);
    let bound2 = losses::kfiou_upper_bound(2);
    let bound3 = losses::kfiou_upper_bound(3);
    let mut r = rng(1);
    let mut max2: f64 = 0.0;
    let mut max3: f64 = 0.0;
    for _ in 0..n {
        let (a, b) = (random_box2(&mut r, 50.0, 1.0, 100.0), random_box2(&mut r, 50.0, 1.0, 100.0));
        let k = kfiou2(&a, &b);
        max2 = max2.max(k);
        let params: Vec<f64> = a.params().into_iter().chain(b.params()).collect();
        let fails = |p: &[f64]| match (b2(&p[..5]), b2(&p[5..])) {
            (Some(a), Some(b)) => !(kfiou2(&a, &b) <= bound2 + 1e-9),
            _ => false,
        };
        t.check_shrunk(&params, fails, "2-D pair");
        let k_self = kfiou2(&a, &a);
        t.check((k_self - bound2).abs() <= 1e-9, || format!("identical 2-D {a:?}: {k_self}"));

        let (a, b) = (random_box3(&mut r, 50.0, 1.0, 100.0), random_box3(&mut r, 50.0, 1.0, 100.0));
        let k = kfiou3(&a, &b);
        max3 = max3.max(k);
        let params: Vec<f64> = a.params().into_iter().chain(b.params()).collect();
        let fails = |p: &[f64]| match (b3(&p[..7]), b3(&p[7..])) {
            (Some(a), Some(b)) => !(kfiou3(&a, &b) <= bound3 + 1e-9),
            _ => false,
        };
        t.check_shrunk(&params, fails, "3-D pair");
        let k_self = kfiou3(&a, &a);
        t.check((k_self - bound3).abs() <= 1e-9, || format!("identical 3-D {a:?}: {k_self}"));
    }
    t.notes.push(format!("max 2-D KFIoU {max2} (bound {bound2})"));
    t.notes.push(format!("max 3-D KFIoU {max3} (bound {bound3})"));
    t
}

fn closed_form(_: Scale) -> Tally {
    let mut t = Tally::new();
    let sq = RotatedBox2D::new(0.0, 0.0, 4.0, 2.0, 15.0).expect("valid");
    let k = kfiou2(&sq, &sq);
    t.check((k - 1.0 / 3.0).abs() <= 1e-12, || format!("identical: {k}"));

    let g1 = Gaussian::new([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]).expect("spd");
    let g2 = Gaussian::new([0.0, 0.0], [[1.0, 0.0], [0.0, 4.0]]).expect("spd");
    let k = losses::kfiou(&g1, &g2).unwrap_or(f64::NAN);
    t.check((k - 0.25).abs() <= 1e-12, || format!("diag(4,1)/diag(1,4): {k}"));
    let a = RotatedBox2D::new(0.0, 0.0, 4.0, 2.0, 0.0).expect("valid");
    let b = RotatedBox2D::new(0.0, 0.0, 4.0, 2.0, 90.0).expect("valid");
    let iou = skew_iou_2d(&a, &b);
    t.check((iou - 1.0 / 3.0).abs() <= 1e-9, || format!("crossed 4x2 exact: {iou}"));

    let s0 = RotatedBox2D::new(0.0, 0.0, 2.0, 2.0, 0.0).expect("valid");
    let s45 = RotatedBox2D::new(0.0, 0.0, 2.0, 2.0, 45.0).expect("valid");
    let inter = 8.0 * (2f64.sqrt() - 1.0);
    let expect = inter / (8.0 - inter);
    let iou = skew_iou_2d(&s0, &s45);
    t.check((iou - expect).abs() <= 1e-9, || format!("45° squares exact: {iou} vs {expect}"));
    let raster = rasterized_iou(&s0, &s45, 2000).unwrap_or(f64::NAN);
    t.check((raster - expect).abs() <= 5e-3, || format!("45° squares raster: {raster} vs {expect}"));
    t
}

fn oracle_agreement(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..scale.n(1000) {
        let (a, b) = (random_box2(&mut r, 10.0, 2.0, 50.0), random_box2(&mut r, 10.0, 2.0, 50.0));
        let gap = |a: &RotatedBox2D, b: &RotatedBox2D| {
            (skew_iou_2d(a, b) - rasterized_iou(a, b, 1000).unwrap_or(f64::NAN)).abs()
        };
        let g = gap(&a, &b);
        worst = worst.max(g);
        let params: Vec<f64> = a.params().into_iter().chain(b.params()).collect();
        let fails = |p: &[f64]| match (b2(&p[..5]), b2(&p[5..])) {
            (Some(a), Some(b)) => !(gap(&a, &b) <= 5e-3),
            _ => false,
        };
        t.check_shrunk(&params, fails, "pair");
    }
    t.notes.push(format!("max |exact − raster| {worst:.2e}"));
    t
}

fn evar_ordering(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let n_samples = scale.n(1000).max(200);
    let seeds = 10;
    let mut ordered = 0;
    for seed in 0..seeds {
        let p = PairProtocol {
            seed,
            n_samples,
            ..PairProtocol::default()
        };
        match consistency::simulate(&p, &Method::TABLE, &SimOptions::default()) {
            Ok(sim) => {
                let e = sim.evars();
                if consistency::strictly_increasing(&e) {
                    ordered += 1;
                }
                if seed == 0 {
                    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" < ");
                    t.notes.push(format!("seed 0 EVar (error variance): {}", fmt(&e)));
                    let lit = SimOptions {
                        evar_mode: EvarMode::Literal,
                        ..SimOptions::default()
                    };
                    let l = consistency::simulate(&p, &Method::TABLE, &lit).map(|s| s.evars()).unwrap_or_default();
                    t.notes.push(format!("seed 0 EVar (literal formula): {}", fmt(&l)));
                }
            }
            Err(e) => t.notes.push(format!("seed {seed}: {e}")),
        }
    }
    t.check(ordered >= 9, || format!("ordering held for {ordered}/{seeds} seeds"));
    t.notes.push(format!("ordering held for {ordered}/{seeds} seeds"));
    t
}

fn shape_trends(_: Scale) -> Tally {
    let mut t = Tally::new();
    let opts = SimOptions::default();
    let methods = [
        Method::PlainSkewIou,
        Method::Kfiou,
        Method::KfiouSmoothL1Center,
        Method::KfiouKldCenter,
        Method::Kld,
        Method::Gwd,
        Method::SmoothL1,
    ];
    match consistency::angle_sweep(&AngleSweep::default(), &methods, &opts) {
        Ok(table) => {
            for m in methods {
                let col = table.column(m).unwrap_or_default();
                let ok = col.windows(2).all(|w| w[1] >= w[0] - 1e-12);
                t.check(ok, || format!("angle sweep {m} not nondecreasing: {col:?}"));
            }
        }
        Err(e) => t.check(false, || e.to_string()),
    }
    let aspect = AspectSweep {
        delta_theta: 30.0,
        area: 1.0,
        range: SweepRange {
            start: 1.0,
            end: 8.0,
            step: 0.5,
        },
    };
    match consistency::aspect_sweep(&aspect, &Method::SWEEP, &opts) {
        Ok(table) => {
            let sl1 = table.column(Method::SmoothL1).unwrap_or_default();
            let spread = sl1.iter().fold(0.0f64, |m, v| m.max((v - sl1[0]).abs()));
            t.check(spread <= 1e-9, || format!("smooth-l1 spread {spread}"));
            for m in [Method::Kfiou, Method::PlainSkewIou] {
                let col = table.column(m).unwrap_or_default();
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                t.check(hi - lo > 0.1 * hi, || format!("{m} varies only {lo}..{hi}"));
                t.notes.push(format!("{m} loss over aspect 1→8: {lo:.4}..{hi:.4}"));
            }
        }
        Err(e) => t.check(false, || e.to_string()),
    }
    t
}

fn deviation_scale_trends(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let opts = SimOptions::default();
    let template = PairProtocol {
        n_samples: scale.n(1000).max(200),
        ..PairProtocol::default()
    };
    let devs: Vec<f64> = (0..10).map(f64::from).collect();
    let methods = [Method::KfiouSmoothL1Center, Method::KfiouKldCenter, Method::Gwd];
    match consistency::deviation_sweep(&template, &devs, &methods, &opts) {
        Ok(table) => {
            for row in &table.rows {
                let (kf, kfk, gwd) = (row.values[0], row.values[1], row.values[2]);
                t.check(kf <= gwd && kfk <= gwd, || {
                    format!("dev {}: kfiou {kf} / kfiou-kld {kfk} > gwd {gwd}", row.x)
                });
            }
            let kf: Vec<String> = table.rows.iter().map(|r| format!("{:.4}", r.values[0])).collect();
            t.notes.push(format!("kfiou-smooth-l1 EVar by dev 0..9: {}", kf.join(" ")));
        }
        Err(e) => t.check(false, || e.to_string()),
    }

    let scales = [1.0, 2.0, 4.0, 10.0];
    let joint = PairProtocol {
        scale_deviation: true,
        ..template
    };
    let mut worst_drift: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    for i in 0..template.n_samples as u64 {
        let (p0, g0) = consistency::sample_pair(&joint, i);
        let base = consistency::method_similarity(&p0, &g0, Method::KfiouSmoothL1Center, &opts).unwrap_or(f64::NAN);
        let d_at = |s: f64| {
            let (p, g) = consistency::sample_pair(&PairProtocol { scale: s, ..joint }, i);
            match (box2d_to_gaussian(&p), box2d_to_gaussian(&g)) {
                (Ok(a), Ok(b)) => losses::gwd_distance(&a, &b).unwrap_or(f64::NAN),
                _ => f64::NAN,
            }
        };
        for s in scales {
            let (p, g) = consistency::sample_pair(&PairProtocol { scale: s, ..joint }, i);
            let v = consistency::method_similarity(&p, &g, Method::KfiouSmoothL1Center, &opts).unwrap_or(f64::NAN);
            let drift = (v - base).abs();
            worst_drift = worst_drift.max(drift);
            t.check(drift <= 1e-9, || format!("pair {i} scale {s}: kfiou similarity drift {drift}"));
        }
        let ratio = d_at(10.0) / d_at(1.0);
        min_ratio = min_ratio.min(ratio);
        t.check(ratio > 2.0, || format!("pair {i}: gwd D² ratio {ratio}"));
    }
    t.notes.push(format!("max kfiou similarity drift {worst_drift:.2e}; min gwd D² ratio (×10 scale) {min_ratio:.3}"));
    t
}

fn grad_check(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for i in 0..scale.n(1000) {
        let pred = random_box2(&mut r, 20.0, 1.0, 60.0);
        let gt = random_box2(&mut r, 20.0, 1.0, 60.0);
        for form in KfForm::ALL {
            let cfg = LossConfig {
                kf_form: form,
                center_form: if i % 2 == 0 { CenterForm::SmoothL1 } else { CenterForm::KldTerm },
                ..LossConfig::default()
            };
            let rep = diff::grad_check_2d(&pred, &gt, &cfg, diff::DEFAULT_STEP, 1e-4);
            worst = worst.max(rep.max_rel_err);
            let params: Vec<f64> = pred.params().into_iter().chain(gt.params()).collect();
            let fails = |p: &[f64]| match (b2(&p[..5]), b2(&p[5..])) {
                (Some(a), Some(b)) if a.w > diff::MIN_EXTENT && a.h > diff::MIN_EXTENT => {
                    !diff::grad_check_2d(&a, &b, &cfg, diff::DEFAULT_STEP, 1e-4).passed
                }
                _ => false,
            };
            if rep.passed {
                t.check(true, String::new);
            } else {
                t.check_shrunk(&params, fails, &format!("{} pred/gt", form.name()));
            }
        }
        for form in KfForm::ALL {
            let cfg = LossConfig {
                kf_form: form,
                ..LossConfig::default()
            };
            let swapped = RotatedBox2D {
                w: pred.h,
                h: pred.w,
                theta: pred.theta + if i % 2 == 0 { 90.0 } else { -90.0 },
                ..pred
            };
            let a = losses::kf_loss(&pred, &gt, &cfg).unwrap_or(f64::NAN);
            let b = losses::kf_loss(&swapped, &gt, &cfg).unwrap_or(f64::NAN);
            t.check((a - b).abs() <= 1e-9, || format!("boundary {pred:?} vs {swapped:?}: {a} vs {b}"));
        }
    }
    t.notes.push(format!("max relative error {worst:.2e}"));
    t
}

fn non_overlap(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let mut r = rng(8);
    for _ in 0..scale.n(100).max(100) {
        let gt = random_box2(&mut r, 0.0, 1.0, 40.0);
        let mut pred = random_box2(&mut r, 0.0, 1.0, 40.0);
        let reach = 0.5 * (gt.w.hypot(gt.h) + pred.w.hypot(pred.h));
        let dist = reach * uniform(&mut r, 1.05, 3.0);
        let phi = uniform(&mut r, 0.0, std::f64::consts::TAU);
        pred.x = dist * phi.cos();
        pred.y = dist * phi.sin();
        t.check(skew_iou_2d(&pred, &gt) == 0.0, || format!("not disjoint: {pred:?} {gt:?}"));
        for center in [CenterForm::SmoothL1, CenterForm::KldTerm] {
            let cfg = LossConfig {
                center_form: center,
                ..LossConfig::default()
            };
            let l = losses::regression_loss(&pred, &gt, &gt, &cfg);
            t.check(matches!(l, Ok(v) if v.is_finite()), || format!("loss {l:?} for {pred:?} {gt:?}"));
            let g = diff::grad_kf_loss_2d(&pred, &gt, &cfg);
            let ok = match g {
                Ok(g) => -(g[0] * (gt.x - pred.x) + g[1] * (gt.y - pred.y)) > 0.0,
                Err(_) => false,
            };
            t.check(ok, || format!("{center:?} gradient {g:?} does not point to target for {pred:?} {gt:?}"));
        }
    }
    t
}

fn encoding_roundtrip(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for _ in 0..scale.n(10_000) {
        let b = random_box2(&mut r, 200.0, 1.0, 100.0);
        let a = random_box2(&mut r, 200.0, 1.0, 100.0);
        for mode in [AngleMode::Direct, AngleMode::Indirect] {
            for frame in [OffsetFrame::Anchor, OffsetFrame::Image] {
                let back: Option<RotatedBox2D> = losses::encode_box(&b, &a, mode, frame)
                    .and_then(|e| losses::decode_box(&e, &a, frame))
                    .ok();
                let err = back.map_or(f64::INFINITY, |x| {
                    x.params().iter().zip(b.params()).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
                });
                worst = worst.max(err);
                t.check(err <= 1e-9, || format!("{mode:?}/{frame:?} {b:?} via {a:?}: error {err}"));
            }
        }
        let (s, c) = (uniform(&mut r, -10.0, 10.0), uniform(&mut r, -10.0, 10.0));
        let ok = losses::normalize_angle_pair(s, c).is_ok_and(|(s, c)| (s * s + c * c - 1.0).abs() <= 1e-9);
        t.check(ok, || format!("normalize ({s}, {c})"));
    }
    t.notes.push(format!("max round-trip error {worst:.2e}"));
    t
}

fn determinism(scale: Scale) -> Tally {
    let mut t = Tally::new();
    let p = PairProtocol {
        seed: 11,
        n_samples: scale.n(1000).max(100),
        ..PairProtocol::default()
    };
    let opts = SimOptions::default();
    let csv_with = |threads: usize| -> Option<(String, String)> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok()?;
        let sim = pool.install(|| consistency::simulate(&p, &Method::TABLE, &opts)).ok()?;
        Some((sim.summary_csv(), sim.samples_csv()))
    };
    let base = csv_with(1);
    t.check(base.is_some(), || "simulation failed".into());
    for threads in [1, 2, 4, 8] {
        let again = csv_with(threads);
        t.check(again == base, || format!("output differs with {threads} threads"));
    }
    t
}

fn run_one(name: &str, scale: Scale) -> SuiteResult {
    let start = Instant::now();
    let tally = match name {
        "appendix-a-bound" => appendix_a_bound(scale),
        "closed-form" => closed_form(scale),
        "oracle-agreement" => oracle_agreement(scale),
        "evar-ordering" => evar_ordering(scale),
        "shape-trends" => shape_trends(scale),
        "deviation-scale-trends" => deviation_scale_trends(scale),
        "grad-check" => grad_check(scale),
        "non-overlap" => non_overlap(scale),
        "encoding-roundtrip" => encoding_roundtrip(scale),
        "determinism" => determinism(scale),
        other => {
            let mut t = Tally::new();
            t.check(false, || format!("unknown suite `{other}`"));
            t
        }
    };
    SuiteResult {
        name: name.to_string(),
        cases: tally.cases,
        failures: tally.failures,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        failure: tally.failure,
        notes: tally.notes,
    }
}

/// Runs the named suites (all of them when `names` is empty).
pub fn run_suites(names: &[&str], scale: &Scale) -> Vec<SuiteResult> {
    let names: Vec<&str> = if names.is_empty() { SUITES.to_vec() } else { names.to_vec() };
    names.into_iter().map(|n| run_one(n, *scale)).collect()
}

pub fn format_text(results: &[SuiteResult]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(
            s,
            "{} {:<20} {:>7} cases {:>5} failures {:>9.1} ms",
            if r.passed() { "PASS" } else { "FAIL" },
            r.name,
            r.cases,
            r.failures,
            r.elapsed_ms
        );
        for n in &r.notes {
            let _ = writeln!(s, "     {n}");
        }
        if let Some(f) = &r.failure {
            let _ = writeln!(s, "     first failure: {f}");
        }
    }
    let passed = results.iter().filter(|r| r.passed()).count();
    let _ = writeln!(s, "{passed}/{} suites passed", results.len());
    s
}
