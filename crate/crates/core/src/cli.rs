//! Command-line front end. [`run`] is the whole program minus process exit, so
//! it can be driven from tests.
//!
//! Exit codes: 0 success, 1 assertion or self-test failure, 2 usage error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::consistency::{
    self, AngleSweep, AspectSweep, EvarMode, Method, PairProtocol, SimOptions, SmoothL1Map, SweepRange,
};
use crate::diff;
use crate::gaussian::{self, BoxParams, Gaussian};
use crate::geometry::{rasterized_iou, skew_iou_2d, skew_iou_3d, RotatedBox2D, RotatedBox3D};
use crate::losses::{self, AngleMode, CenterForm, DistanceFn, KfForm, KldDirection, LossConfig, OffsetFrame};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "KFIOU_THREADS";

#[derive(Debug, Parser)]
#[command(name = "kfiou", version, about = "Rotated-box IoU, KFIoU losses and trend-consistency simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact, rasterized or Gaussian (KFIoU) overlap of box pairs.
    Iou(IouArgs),
    /// Gaussian of a box, or the product of two boxes' Gaussians.
    Gauss(GaussArgs),
    /// Every loss term for a predicted box against a target.
    Loss(LossCmdArgs),
    /// EMean / EVar of each method against exact SkewIoU.
    Evar(EvarArgs),
    /// Loss or EVar curves.
    Sweep(SweepArgs),
    /// Timing of exact SkewIoU, KFIoU and the KFIoU gradient.
    Bench(BenchArgs),
    /// Run the property suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IouMode {
    Exact,
    Kfiou,
    Raster,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct Dims {
    /// Boxes are `x,y,w,h,theta` (default).
    #[arg(long = "2d")]
    pub two: bool,
    /// Boxes are `x,y,z,w,h,l,theta`.
    #[arg(long = "3d")]
    pub three: bool,
}

#[derive(Debug, Args)]
pub struct IouArgs {
    #[command(flatten)]
    pub dims: Dims,
    /// Two boxes; omit when reading `--file`.
    #[arg(num_args = 0..=2)]
    pub boxes: Vec<String>,
    /// One whitespace-separated box pair per line.
    #[arg(long, conflicts_with = "boxes")]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = IouMode::Exact)]
    pub mode: IouMode,
    /// Print exact SkewIoU, KFIoU and rescaled KFIoU side by side.
    #[arg(long)]
    pub all: bool,
    /// Raster resolution (2-D only, ≥ 100).
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Decimal places in text output.
    #[arg(long, default_value_t = 6)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct GaussArgs {
    #[command(flatten)]
    pub dims: Dims,
    /// One box, or two for their product.
    #[arg(num_args = 1..=2, required = true)]
    pub boxes: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Loss hyperparameters; flags override `--config`.
#[derive(Debug, Default, Args)]
pub struct LossArgs {
    /// Key-value (TOML) file with loss hyperparameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = serde_enum::<KfForm>)]
    pub kf_form: Option<KfForm>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_parser = serde_enum::<CenterForm>)]
    pub center_form: Option<CenterForm>,
    /// Stretch KFIoU onto (0, 1] before applying the form.
    #[arg(long)]
    pub rescale: bool,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub smooth_l1_sigma: Option<f64>,
    #[arg(long)]
    pub gwd_tau: Option<f64>,
    #[arg(long, value_parser = serde_enum::<DistanceFn>)]
    pub gwd_f: Option<DistanceFn>,
    #[arg(long)]
    pub kld_tau: Option<f64>,
    #[arg(long, value_parser = serde_enum::<DistanceFn>)]
    pub kld_f: Option<DistanceFn>,
    #[arg(long, value_parser = serde_enum::<KldDirection>)]
    pub kld_direction: Option<KldDirection>,
    #[arg(long, value_parser = serde_enum::<AngleMode>)]
    pub angle_mode: Option<AngleMode>,
    #[arg(long, value_parser = serde_enum::<OffsetFrame>)]
    pub offset_frame: Option<OffsetFrame>,
}

impl LossArgs {
    pub fn resolve(&self) -> Result<LossConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => LossConfig::load(p).map_err(CliError::usage)?,
            None => LossConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        over!(
            kf_form,
            epsilon,
            center_form,
            lambda1,
            smooth_l1_sigma,
            gwd_tau,
            gwd_f,
            kld_tau,
            kld_f,
            kld_direction,
            angle_mode,
            offset_frame
        );
        if self.rescale {
            c.rescale = true;
        }
        c.validate().map_err(CliError::usage)?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct LossCmdArgs {
    #[command(flatten)]
    pub dims: Dims,
    /// Predicted box, then target box.
    #[arg(num_args = 2, required = true)]
    pub boxes: Vec<String>,
    /// Anchor for the offset encoding (defaults to the target).
    #[arg(long, allow_hyphen_values = true)]
    pub anchor: Option<String>,
    /// Also print the gradient w.r.t. the predicted box.
    #[arg(long)]
    pub grad: bool,
    #[command(flatten)]
    pub loss: LossArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<&str> = s.split(',').collect();
    if v.len() != 2 {
        return Err(format!("expected `min,max`, got `{s}`"));
    }
    let a = v[0].trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", v[0]))?;
    let b = v[1].trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", v[1]))?;
    Ok([a, b])
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.trim().parse::<Method>().map_err(|e| e.to_string())
}

/// Random pair generation flags.
#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = PairProtocol::default().seed)]
    pub seed: u64,
    /// Number of pairs.
    #[arg(long = "n", default_value_t = PairProtocol::default().n_samples)]
    pub n: usize,
    /// Maximum center offset, px.
    #[arg(long, default_value_t = PairProtocol::default().max_center_dev, allow_hyphen_values = true)]
    pub max_dev: f64,
    /// Long-side range `min,max`, px.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub extent_range: Option<[f64; 2]>,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub aspect_range: Option<[f64; 2]>,
    /// Angle range `min,max`, degrees.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub angle_range: Option<[f64; 2]>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub scale: f64,
    /// Scale the center offset together with the boxes.
    #[arg(long)]
    pub scale_deviation: bool,
    #[arg(long, default_value_t = PairProtocol::default().angle_jitter, allow_hyphen_values = true)]
    pub angle_jitter: f64,
    #[arg(long, default_value_t = PairProtocol::default().size_jitter, allow_hyphen_values = true)]
    pub size_jitter: f64,
    /// Prediction is the target moved by the center offset only.
    #[arg(long)]
    pub identical: bool,
}

impl ProtocolArgs {
    pub fn resolve(&self) -> Result<PairProtocol, CliError> {
        let d = PairProtocol::default();
        let mut p = PairProtocol {
            seed: self.seed,
            n_samples: self.n,
            max_center_dev: self.max_dev,
            extent_range: self.extent_range.unwrap_or(d.extent_range),
            aspect_range: self.aspect_range.unwrap_or(d.aspect_range),
            angle_range: self.angle_range.unwrap_or(d.angle_range),
            scale: self.scale,
            scale_deviation: self.scale_deviation,
            angle_jitter: self.angle_jitter,
            size_jitter: self.size_jitter,
        };
        if self.identical {
            p = p.identical();
        }
        p.validate().map_err(CliError::usage)?;
        Ok(p)
    }
}

/// Similarity mapping and EVar flags.
#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub loss: LossArgs,
    /// Use `mean((app − EMean)²)` instead of the variance of the error.
    #[arg(long)]
    pub literal_evar: bool,
    #[arg(long, value_parser = serde_enum::<SmoothL1Map>, default_value = "one-minus")]
    pub smooth_l1_map: SmoothL1Map,
    /// Worker threads (default: $KFIOU_THREADS, else all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SimArgs {
    pub fn resolve(&self) -> Result<SimOptions, CliError> {
        Ok(SimOptions {
            loss: self.loss.resolve()?,
            smooth_l1_map: self.smooth_l1_map,
            evar_mode: if self.literal_evar {
                EvarMode::Literal
            } else {
                EvarMode::Error
            },
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let n = match self.threads {
            Some(n) => n,
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::usage(format!("{THREADS_ENV}=`{v}` is not a thread count")))?,
                Err(_) => 0,
            },
        };
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::failure(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct EvarArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Comma-separated methods (default: the five table rows).
    #[arg(long, value_parser = parse_method, value_delimiter = ',', allow_hyphen_values = true)]
    pub methods: Option<Vec<Method>>,
    /// Exit 1 unless EVar strictly increases in the listed method order.
    #[arg(long)]
    pub assert_order: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here and print a text summary to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write per-sample values as CSV.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(subcommand)]
    pub kind: SweepKind,
}

#[derive(Debug, Args)]
pub struct SweepCommon {
    /// Comma-separated method columns.
    #[arg(long, value_parser = parse_method, value_delimiter = ',', allow_hyphen_values = true)]
    pub methods: Option<Vec<Method>>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SweepKind {
    /// Loss against the angle between two same-shape boxes.
    Angle {
        #[arg(long, default_value_t = 4.0)]
        aspect: f64,
        #[arg(long, default_value_t = 0.0)]
        center_dev: f64,
        #[arg(long, default_value_t = 40.0)]
        long_side: f64,
        /// `start:end:step` in degrees.
        #[arg(long, default_value = "0:90:1", allow_hyphen_values = true)]
        range: SweepRange,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Loss against the aspect ratio at a fixed angle difference.
    Aspect {
        #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
        delta_theta: f64,
        #[arg(long, default_value_t = 1.0)]
        area: f64,
        #[arg(long, default_value = "1:8:0.5")]
        range: SweepRange,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// EVar against the maximum center deviation.
    Deviation {
        #[arg(long, value_parser = parse_number, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,2,3,4,5,6,7,8,9")]
        devs: Vec<f64>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// EVar against a global box scale.
    Scale {
        #[arg(long, value_parser = parse_number, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,2,4,10")]
        scales: Vec<f64>,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        common: SweepCommon,
    },
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub dims: Dims,
    /// Operations per timing (≥ 1000).
    #[arg(long = "n", default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Machine-readable results.
    #[arg(long)]
    pub json: bool,
    /// Run only these suites (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    /// Reduced case counts.
    #[arg(long)]
    pub quick: bool,
}

/// An error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(e: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    pub fn failure(e: impl ToString) -> Self {
        Self {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

const FIELDS_2D: [&str; 5] = ["x", "y", "w", "h", "theta"];
const FIELDS_3D: [&str; 7] = ["x", "y", "z", "w", "h", "l", "theta"];

fn parse_fields(s: &str, names: &[&str]) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != names.len() {
        return Err(CliError::usage(format!(
            "box `{s}`: expected {} comma-separated values ({}), got {}",
            names.len(),
            names.join(","),
            parts.len()
        )));
    }
    parts
        .iter()
        .zip(names)
        .map(|(p, name)| {
            let v = p
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("box `{s}`: field `{name}` = `{p}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::usage(format!("box `{s}`: field `{name}` is not finite")))
            }
        })
        .collect()
}

pub fn parse_box2d(s: &str) -> Result<RotatedBox2D, CliError> {
    let s = s.trim();
    let v = parse_fields(s, &FIELDS_2D)?;
    RotatedBox2D::new(v[0], v[1], v[2], v[3], v[4]).map_err(|e| CliError::usage(format!("box `{s}`: {e}")))
}

pub fn parse_box3d(s: &str) -> Result<RotatedBox3D, CliError> {
    let s = s.trim();
    let v = parse_fields(s, &FIELDS_3D)?;
    RotatedBox3D::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6]).map_err(|e| CliError::usage(format!("box `{s}`: {e}")))
}

#[derive(Debug, Clone, Copy)]
enum Pair {
    Two(RotatedBox2D, RotatedBox2D),
    Three(RotatedBox3D, RotatedBox3D),
}

fn parse_pair_boxes(a: &str, b: &str, three: bool) -> Result<Pair, CliError> {
    Ok(if three {
        Pair::Three(parse_box3d(a)?, parse_box3d(b)?)
    } else {
        Pair::Two(parse_box2d(a)?, parse_box2d(b)?)
    })
}

fn read_pairs(path: &Path, three: bool) -> Result<Vec<Pair>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(CliError::usage(format!(
                "{}:{}: expected two boxes, got {}",
                path.display(),
                i + 1,
                toks.len()
            )));
        }
        let pair = parse_pair_boxes(toks[0], toks[1], three)
            .map_err(|e| CliError::usage(format!("{}:{}: {}", path.display(), i + 1, e.message)))?;
        out.push(pair);
    }
    if out.is_empty() {
        return Err(CliError::usage(format!("{}: no box pairs", path.display())));
    }
    Ok(out)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn cmd_iou(a: &IouArgs) -> Result<String, CliError> {
    let three = a.dims.three;
    let pairs = match &a.file {
        Some(p) => read_pairs(p, three)?,
        None if a.boxes.len() == 2 => vec![parse_pair_boxes(&a.boxes[0], &a.boxes[1], three)?],
        None => return Err(CliError::usage("expected two boxes or --file")),
    };
    if three && a.mode == IouMode::Raster && !a.all {
        return Err(CliError::usage("raster mode is 2-D only"));
    }
    let cols: Vec<&str> = if a.all {
        vec!["exact", "kfiou", "kfiou_rescaled"]
    } else {
        vec![match a.mode {
            IouMode::Exact => "exact",
            IouMode::Kfiou => "kfiou",
            IouMode::Raster => "raster",
        }]
    };
    let mut rows = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let mut row = Vec::with_capacity(cols.len());
        for c in &cols {
            let v = match (*c, p) {
                ("exact", Pair::Two(x, y)) => skew_iou_2d(x, y),
                ("exact", Pair::Three(x, y)) => skew_iou_3d(x, y),
                ("raster", Pair::Two(x, y)) => rasterized_iou(x, y, a.grid).map_err(CliError::usage)?,
                ("kfiou", Pair::Two(x, y)) => losses::kfiou(&gaussian::box2d_to_gaussian(x).map_err(CliError::usage)?, &gaussian::box2d_to_gaussian(y).map_err(CliError::usage)?).map_err(CliError::failure)?,
                ("kfiou", Pair::Three(x, y)) => losses::kfiou(&gaussian::box3d_to_gaussian(x).map_err(CliError::usage)?, &gaussian::box3d_to_gaussian(y).map_err(CliError::usage)?).map_err(CliError::failure)?,
                ("kfiou_rescaled", Pair::Two(x, y)) => losses::kfiou_rescaled(&gaussian::box2d_to_gaussian(x).map_err(CliError::usage)?, &gaussian::box2d_to_gaussian(y).map_err(CliError::usage)?).map_err(CliError::failure)?,
                ("kfiou_rescaled", Pair::Three(x, y)) => losses::kfiou_rescaled(&gaussian::box3d_to_gaussian(x).map_err(CliError::usage)?, &gaussian::box3d_to_gaussian(y).map_err(CliError::usage)?).map_err(CliError::failure)?,
                _ => unreachable!("raster 3-D rejected above"),
            };
            row.push(v);
        }
        rows.push(row);
    }
    let mut s = String::new();
    match a.format {
        Format::Text => {
            for row in &rows {
                if a.all {
                    for (c, v) in cols.iter().zip(row) {
                        let _ = writeln!(s, "{c} {v:.prec$}", prec = a.precision);
                    }
                } else {
                    let _ = writeln!(s, "{:.prec$}", row[0], prec = a.precision);
                }
            }
        }
        Format::Csv => {
            let _ = writeln!(s, "{}", cols.join(","));
            for row in &rows {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", line.join(","));
            }
        }
        Format::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|row| cols.iter().zip(row).map(|(c, v)| (c.to_string(), serde_json::json!(v))).collect())
                .collect();
            s = to_json(&objs);
        }
    }
    Ok(s)
}

fn fmt_matrix<const N: usize>(m: &[[f64; N]; N]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
        .collect();
    format!("[{}]", rows.join("; "))
}

fn fmt_vec(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
}

fn matrix_json<const N: usize>(m: &[[f64; N]; N]) -> serde_json::Value {
    serde_json::json!(m.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn gauss_json<const N: usize>(g: &Gaussian<N>) -> serde_json::Value {
    serde_json::json!({ "mu": g.mu.to_vec(), "sigma": matrix_json(&g.sigma) })
}

fn gauss_report<const N: usize>(gs: &[Gaussian<N>], format: Format) -> Result<String, CliError> {
    let mut s = String::new();
    if gs.len() == 1 {
        let g = &gs[0];
        let vol = gaussian::gaussian_volume(&g.sigma).map_err(CliError::failure)?;
        match format {
            Format::Json => {
                s = to_json(&serde_json::json!({ "gaussian": gauss_json(g), "volume": vol }));
            }
            _ => {
                let _ = writeln!(s, "mu {}", fmt_vec(&g.mu));
                let _ = writeln!(s, "sigma {}", fmt_matrix(&g.sigma));
                let _ = writeln!(s, "volume {vol}");
            }
        }
    } else {
        let p = gaussian::gaussian_product(&gs[0], &gs[1]).map_err(CliError::failure)?;
        let k = losses::kfiou(&gs[0], &gs[1]).map_err(CliError::failure)?;
        match format {
            Format::Json => {
                s = to_json(&serde_json::json!({
                    "product": gauss_json(&p.gaussian),
                    "alpha": p.alpha,
                    "kalman_gain": matrix_json(&p.kalman_gain),
                    "volume": gaussian::volume(&p.gaussian.sigma),
                    "kfiou": k,
                }));
            }
            _ => {
                let _ = writeln!(s, "mu {}", fmt_vec(&p.gaussian.mu));
                let _ = writeln!(s, "sigma {}", fmt_matrix(&p.gaussian.sigma));
                let _ = writeln!(s, "alpha {}", p.alpha);
                let _ = writeln!(s, "kalman_gain {}", fmt_matrix(&p.kalman_gain));
                let _ = writeln!(s, "volume {}", gaussian::volume(&p.gaussian.sigma));
                let _ = writeln!(s, "kfiou {k}");
            }
        }
    }
    Ok(s)
}

fn cmd_gauss(a: &GaussArgs) -> Result<String, CliError> {
    if a.dims.three {
        let gs = a
            .boxes
            .iter()
            .map(|b| gaussian::box3d_to_gaussian(&parse_box3d(b)?).map_err(CliError::usage))
            .collect::<Result<Vec<_>, _>>()?;
        gauss_report(&gs, a.format)
    } else {
        let gs = a
            .boxes
            .iter()
            .map(|b| gaussian::box2d_to_gaussian(&parse_box2d(b)?).map_err(CliError::usage))
            .collect::<Result<Vec<_>, _>>()?;
        gauss_report(&gs, a.format)
    }
}

#[derive(Serialize)]
struct LossReport {
    kfiou: f64,
    kfiou_rescaled: f64,
    kf_loss: f64,
    center_loss: f64,
    regression_loss: f64,
    weighted_regression_loss: f64,
    gwd_loss: f64,
    kld_loss: f64,
    smooth_l1_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient: Option<Vec<f64>>,
}

fn loss_report<B: crate::gaussian::RotatedBox<N>, const N: usize>(
    pred: &B,
    gt: &B,
    anchor: &B,
    cfg: &LossConfig,
    gradient: Option<Vec<f64>>,
) -> Result<LossReport, CliError> {
    let f = CliError::failure;
    let gp = Gaussian::from_box(&pred.box_params());
    let gg = Gaussian::from_box(&gt.box_params());
    let terms = losses::regression_loss_terms(pred, gt, anchor, cfg).map_err(f)?;
    let ep = losses::encode_box(pred, anchor, cfg.angle_mode, cfg.offset_frame).map_err(f)?;
    let eg = losses::encode_box(gt, anchor, cfg.angle_mode, cfg.offset_frame).map_err(f)?;
    Ok(LossReport {
        kfiou: losses::kfiou(&gp, &gg).map_err(f)?,
        kfiou_rescaled: losses::kfiou_rescaled(&gp, &gg).map_err(f)?,
        kf_loss: terms.kf,
        center_loss: terms.center,
        regression_loss: terms.total(),
        weighted_regression_loss: cfg.lambda1 * terms.total(),
        gwd_loss: losses::gwd_loss_cfg(&gp, &gg, cfg).map_err(f)?,
        kld_loss: losses::kld_loss_cfg(&gp, &gg, cfg).map_err(f)?,
        smooth_l1_loss: losses::smooth_l1_box_loss(&ep, &eg, cfg.smooth_l1_sigma),
        gradient,
    })
}

fn cmd_loss(a: &LossCmdArgs) -> Result<String, CliError> {
    let cfg = a.loss.resolve()?;
    let report = if a.dims.three {
        let (p, g) = (parse_box3d(&a.boxes[0])?, parse_box3d(&a.boxes[1])?);
        let anchor = a.anchor.as_deref().map(parse_box3d).transpose()?.unwrap_or(g);
        let grad = a
            .grad
            .then(|| diff::grad_kf_loss_3d_with_anchor(&p, &g, &anchor, &cfg).map(|v| v.to_vec()))
            .transpose()
            .map_err(CliError::failure)?;
        loss_report(&p, &g, &anchor, &cfg, grad)?
    } else {
        let (p, g) = (parse_box2d(&a.boxes[0])?, parse_box2d(&a.boxes[1])?);
        let anchor = a.anchor.as_deref().map(parse_box2d).transpose()?.unwrap_or(g);
        let grad = a
            .grad
            .then(|| diff::grad_kf_loss_2d_with_anchor(&p, &g, &anchor, &cfg).map(|v| v.to_vec()))
            .transpose()
            .map_err(CliError::failure)?;
        loss_report(&p, &g, &anchor, &cfg, grad)?
    };
    let mut s = String::new();
    match a.format {
        Format::Json => s = to_json(&report),
        Format::Csv | Format::Text => {
            let v = serde_json::to_value(&report).expect("serializable");
            let obj = v.as_object().expect("struct");
            let sep = if a.format == Format::Csv { "," } else { " " };
            if a.format == Format::Csv {
                s.push_str("name,value\n");
            }
            for key in [
                "kfiou",
                "kfiou_rescaled",
                "kf_loss",
                "center_loss",
                "regression_loss",
                "weighted_regression_loss",
                "gwd_loss",
                "kld_loss",
                "smooth_l1_loss",
            ] {
                let _ = writeln!(s, "{key}{sep}{}", obj[key]);
            }
            if let Some(g) = &report.gradient {
                let _ = writeln!(s, "gradient{sep}{}", fmt_vec(g));
            }
        }
    }
    Ok(s)
}

fn text_summary(sim: &consistency::Simulation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<18} {:>14} {:>14}", "method", "emean", "evar");
    for (m, method) in sim.methods.iter().enumerate() {
        let (emean, evar) = sim.stats(m);
        let _ = writeln!(s, "{:<18} {:>14.6} {:>14.6}", method.name(), emean, evar);
    }
    s
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

fn cmd_evar(a: &EvarArgs) -> Result<(String, Option<String>), CliError> {
    let protocol = a.protocol.resolve()?;
    let opts = a.sim.resolve()?;
    let methods = a.methods.clone().unwrap_or_else(|| Method::TABLE.to_vec());
    if methods.is_empty() {
        return Err(CliError::usage("no methods selected"));
    }
    let pool = a.sim.pool()?;
    let sim = pool
        .install(|| consistency::simulate(&protocol, &methods, &opts))
        .map_err(CliError::failure)?;
    let report = match a.format {
        Format::Csv => sim.summary_csv(),
        Format::Json => to_json(&sim.reports()),
        Format::Text => {
            let mut s = String::new();
            for l in protocol.header_lines().iter().chain(&opts.header_lines()) {
                let _ = writeln!(s, "# {l}");
            }
            s + &text_summary(&sim)
        }
    };
    if let Some(p) = &a.samples {
        write_file(p, &sim.samples_csv())?;
    }
    let stdout = match &a.output {
        Some(p) => {
            write_file(p, &report)?;
            text_summary(&sim)
        }
        None => report,
    };
    let failure = if a.assert_order && !consistency::strictly_increasing(&sim.evars()) {
        let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
        Some(format!(
            "EVar order assertion failed: expected {} to be strictly increasing, got {:?}",
            names.join(" < "),
            sim.evars()
        ))
    } else {
        None
    };
    Ok((stdout, failure))
}

fn cmd_sweep(a: &SweepArgs) -> Result<String, CliError> {
    let (common, default_methods): (&SweepCommon, &[Method]) = match &a.kind {
        SweepKind::Angle { common, .. } | SweepKind::Aspect { common, .. } => (common, &Method::SWEEP),
        SweepKind::Deviation { common, .. } | SweepKind::Scale { common, .. } => (common, &Method::TABLE),
    };
    let methods = common.methods.clone().unwrap_or_else(|| default_methods.to_vec());
    if methods.is_empty() {
        return Err(CliError::usage("no methods selected"));
    }
    let opts = common.sim.resolve()?;
    let pool = common.sim.pool()?;
    let table = match &a.kind {
        SweepKind::Angle {
            aspect,
            center_dev,
            long_side,
            range,
            ..
        } => consistency::angle_sweep(
            &AngleSweep {
                aspect: *aspect,
                center_dev: *center_dev,
                long_side: *long_side,
                range: *range,
            },
            &methods,
            &opts,
        )
        .map_err(CliError::usage)?,
        SweepKind::Aspect {
            delta_theta,
            area,
            range,
            ..
        } => consistency::aspect_sweep(
            &AspectSweep {
                delta_theta: *delta_theta,
                area: *area,
                range: *range,
            },
            &methods,
            &opts,
        )
        .map_err(CliError::usage)?,
        SweepKind::Deviation { devs, protocol, .. } => {
            let p = protocol.resolve()?;
            if devs.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
                return Err(CliError::usage("deviations must be >= 0"));
            }
            pool.install(|| consistency::deviation_sweep(&p, devs, &methods, &opts))
                .map_err(CliError::usage)?
        }
        SweepKind::Scale { scales, protocol, .. } => {
            let p = protocol.resolve()?;
            if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(CliError::usage("scales must be > 0"));
            }
            pool.install(|| consistency::scale_sweep(&p, scales, &methods, &opts))
                .map_err(CliError::usage)?
        }
    };
    let out = match common.format {
        Format::Json => to_json(&table),
        _ => table.to_csv(),
    };
    Ok(match &common.output {
        Some(p) => {
            write_file(p, &out)?;
            String::new()
        }
        None => out,
    })
}

fn time_ns(n: usize, mut f: impl FnMut(usize)) -> f64 {
    let start = Instant::now();
    for i in 0..n {
        f(i);
    }
    start.elapsed().as_nanos() as f64 / n as f64
}

fn cmd_bench(a: &BenchArgs) -> Result<String, CliError> {
    if a.n < 1000 {
        return Err(CliError::usage(format!("--n must be >= 1000 (got {})", a.n)));
    }
    let protocol = PairProtocol {
        seed: a.seed,
        n_samples: a.n,
        ..PairProtocol::default()
    };
    let pairs: Vec<(RotatedBox2D, RotatedBox2D)> = (0..a.n as u64).map(|i| consistency::sample_pair(&protocol, i)).collect();
    let cfg = LossConfig::default();
    let mut s = String::from("op,ns_per_op\n");
    if a.dims.three {
        let lift = |b: &RotatedBox2D, z: f64| RotatedBox3D {
            x: b.x,
            y: b.y,
            z,
            w: b.w,
            h: b.h,
            l: 0.5 * (b.w + b.h),
            theta: b.theta,
        };
        let pairs3: Vec<_> = pairs.iter().map(|(p, g)| (lift(p, 0.5), lift(g, 0.0))).collect();
        let t_exact = time_ns(a.n, |i| {
            std::hint::black_box(skew_iou_3d(&pairs3[i].0, &pairs3[i].1));
        });
        let t_kf = time_ns(a.n, |i| {
            let (p, g) = &pairs3[i];
            std::hint::black_box(losses::kfiou_of(&gaussian::box_covariance(&BoxParams::from(p)), &gaussian::box_covariance(&BoxParams::from(g))));
        });
        let t_grad = time_ns(a.n, |i| {
            let _ = std::hint::black_box(diff::grad_kf_loss_3d(&pairs3[i].0, &pairs3[i].1, &cfg));
        });
        let _ = writeln!(s, "skew_iou_3d,{t_exact:.1}\nkfiou_3d,{t_kf:.1}\ngrad_kf_loss_3d,{t_grad:.1}");
    } else {
        let t_exact = time_ns(a.n, |i| {
            std::hint::black_box(skew_iou_2d(&pairs[i].0, &pairs[i].1));
        });
        let t_kf = time_ns(a.n, |i| {
            let (p, g) = &pairs[i];
            std::hint::black_box(losses::kfiou_of(&gaussian::box_covariance(&BoxParams::from(p)), &gaussian::box_covariance(&BoxParams::from(g))));
        });
        let t_grad = time_ns(a.n, |i| {
            let _ = std::hint::black_box(diff::grad_kf_loss_2d(&pairs[i].0, &pairs[i].1, &cfg));
        });
        let _ = writeln!(s, "skew_iou_2d,{t_exact:.1}\nkfiou_2d,{t_kf:.1}\ngrad_kf_loss_2d,{t_grad:.1}");
        let (p, g) = pairs[0];
        let k = losses::kfiou(
            &gaussian::box2d_to_gaussian(&p).map_err(CliError::failure)?,
            &gaussian::box2d_to_gaussian(&g).map_err(CliError::failure)?,
        )
        .map_err(CliError::failure)?;
        let _ = writeln!(s, "# spot check pair 0: exact={} kfiou={k}", skew_iou_2d(&p, &g));
    }
    Ok(s)
}

fn cmd_selftest(a: &SelftestArgs) -> Result<(String, bool), CliError> {
    let names: Vec<&str> = a.suite.iter().map(String::as_str).collect();
    for n in &names {
        if !selftest::SUITES.contains(n) {
            return Err(CliError::usage(format!(
                "unknown suite `{n}` (known: {})",
                selftest::SUITES.join(", ")
            )));
        }
    }
    let results = selftest::run_suites(&names, if a.quick { &selftest::Scale::Quick } else { &selftest::Scale::Full });
    let ok = results.iter().all(|r| r.passed());
    let out = if a.json {
        to_json(&results)
    } else {
        selftest::format_text(&results)
    };
    Ok((out, ok))
}

/// Runs the program on `args` (including the program name) and returns the
/// exit code. Output is only written once a command has fully succeeded.
/// Comma lists such as `-1,-2,4,2,-30` would otherwise parse as short flags;
/// a leading space keeps clap from treating them as options and every value
/// parser trims it.
fn shield_negative_list<T: Into<std::ffi::OsString>>(arg: T) -> std::ffi::OsString {
    let arg = arg.into();
    match arg.to_str() {
        Some(s) if s.contains(',') && s.starts_with('-') && s[1..].starts_with(|c: char| c.is_ascii_digit() || c == '.') => {
            format!(" {s}").into()
        }
        _ => arg,
    }
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args.into_iter().map(shield_negative_list)) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result: Result<(String, Option<String>), CliError> = match &cli.command {
        Command::Iou(a) => cmd_iou(a).map(|s| (s, None)),
        Command::Gauss(a) => cmd_gauss(a).map(|s| (s, None)),
        Command::Loss(a) => cmd_loss(a).map(|s| (s, None)),
        Command::Evar(a) => cmd_evar(a),
        Command::Sweep(a) => cmd_sweep(a).map(|s| (s, None)),
        Command::Bench(a) => cmd_bench(a).map(|s| (s, None)),
        Command::Selftest(a) => {
            cmd_selftest(a).map(|(s, ok)| (s, (!ok).then(|| "selftest failed".to_string())))
        }
    };
    match result {
        Ok((stdout, failure)) => {
            let _ = out.write_all(stdout.as_bytes());
            match failure {
                Some(msg) => {
                    let _ = writeln!(err, "error: {msg}");
                    EXIT_FAILURE
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("kfiou").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn iou_exact_example() {
        let (code, out, _) = run_args(&["iou", "--2d", "0,0,2,2,0", "1,0,2,2,0", "--mode", "exact"]);
        assert_eq!(code, 0);
        assert_eq!(out, "0.333333\n");
    }

    #[test]
    fn iou_all_example() {
        let (code, out, _) = run_args(&["iou", "--2d", "0,0,4,2,0", "0,0,4,2,90", "--all"]);
        assert_eq!(code, 0);
        assert_eq!(out, "exact 0.333333\nkfiou 0.250000\nkfiou_rescaled 0.750000\n");
    }

    #[test]
    fn negative_values_parse() {
        let (code, out, err) = run_args(&["iou", "-1,-2,4,2,-30", "-1,-2,4,2,-30", "--mode", "kfiou"]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(out, "0.333333\n");
    }

    #[test]
    fn malformed_box_is_usage_error() {
        let (code, out, err) = run_args(&["iou", "0,0,x,2,0", "1,0,2,2,0"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.contains("field `w`"), "{err}");
        let (code, _, err) = run_args(&["iou", "0,0,-2,2,0", "1,0,2,2,0"]);
        assert_eq!(code, 2);
        assert!(err.contains('w'), "{err}");
        let (code, _, _) = run_args(&["iou", "0,0,2,0", "1,0,2,2,0"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_args(&["iou", "--bogus"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn iou_three_d_and_file() {
        let (code, out, _) = run_args(&["iou", "--3d", "0,0,0,2,2,2,0", "0,0,1,2,2,2,0", "--all", "--format", "csv"]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("exact,kfiou,kfiou_rescaled"));
        let v: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-12);

        let dir = std::env::temp_dir().join(format!("kfiou-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("pairs.txt");
        std::fs::write(&f, "# pairs\n0,0,2,2,0 1,0,2,2,0\n\n0,0,4,2,0  0,0,4,2,90\n").unwrap();
        let (code, out, _) = run_args(&["iou", "--file", f.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(out, "0.333333\n0.333333\n");
        std::fs::write(&f, "0,0,2,2,0 1,0,2,2\n").unwrap();
        let (code, out, err) = run_args(&["iou", "--file", f.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(out.is_empty() && err.contains(":1:"), "{err}");
    }

    #[test]
    fn gauss_and_loss() {
        let (code, out, _) = run_args(&["gauss", "0,0,4,2,0"]);
        assert_eq!(code, 0);
        assert!(out.contains("sigma [4 0; 0 1]"), "{out}");
        let (code, out, _) = run_args(&["gauss", "0,0,4,2,0", "0,0,4,2,90", "--format", "json"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["kfiou"].as_f64().unwrap() - 0.25).abs() < 1e-12);

        let (code, out, _) = run_args(&["loss", "0,0,4,2,0", "0,0,4,2,90", "--format", "json", "--grad"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["regression_loss"].as_f64().unwrap() - (0.75f64.exp() - 1.0)).abs() < 1e-12);
        assert_eq!(v["gradient"].as_array().unwrap().len(), 5);
        let (code, _, err) = run_args(&["loss", "0,0,4,2,0", "0,0,4,2,90", "--epsilon", "0"]);
        assert_eq!(code, 2, "{err}");
        let (code, _, _) = run_args(&["loss", "0,0,4,2,0", "0,0,4,2,90", "--kf-form", "cubic"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn evar_identical_single_sample() {
        let (code, out, err) = run_args(&[
            "evar",
            "--n",
            "1",
            "--max-dev",
            "0",
            "--identical",
            "--methods",
            "plain,kfiou,gwd",
            "--format",
            "csv",
        ]);
        assert_eq!(code, 0, "{err}");
        let plain = out.lines().find(|l| l.starts_with("plain,")).unwrap();
        assert!(plain.starts_with("plain,0,0,1"), "{plain}");
    }

    #[test]
    fn evar_invalid_protocol_and_thread_independence() {
        let (code, _, _) = run_args(&["evar", "--n", "0"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_args(&["evar", "--extent-range", "5,1"]);
        assert_eq!(code, 2);
        let (_, a, _) = run_args(&["evar", "--n", "200", "--seed", "3", "--threads", "1"]);
        let (_, b, _) = run_args(&["evar", "--n", "200", "--seed", "3", "--threads", "3"]);
        assert_eq!(a, b);
    }

    #[test]
    fn evar_assert_order_failure_exits_one() {
        let (code, _, err) = run_args(&["evar", "--n", "100", "--methods", "smooth-l1,kfiou", "--assert-order"]);
        assert_eq!(code, 1);
        assert!(err.contains("assertion"), "{err}");
    }

    #[test]
    fn sweeps() {
        let (code, out, _) = run_args(&["sweep", "angle", "--aspect", "4", "--range", "0:90:1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 92);
        let (code, out, _) = run_args(&["sweep", "scale", "--scales", "1,2,4,10", "--n", "20"]);
        assert_eq!(code, 0);
        assert!(out.contains("\nscale,kfiou-kld,kfiou-smooth-l1,kld,gwd,smooth-l1\n"), "{out}");
        let (code, _, _) = run_args(&["sweep", "angle", "--range", "0:90:0"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_args(&["sweep", "scale", "--scales", "1,-2"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn bench_rows() {
        let (code, out, _) = run_args(&["bench", "--n", "1000"]);
        assert_eq!(code, 0);
        let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 3);
        for r in rows {
            let t: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
            assert!(t.is_finite() && t > 0.0);
        }
        let (code, _, _) = run_args(&["bench", "--n", "10"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn selftest_unknown_suite() {
        let (code, _, _) = run_args(&["selftest", "--suite", "nope"]);
        assert_eq!(code, 2);
    }
}
