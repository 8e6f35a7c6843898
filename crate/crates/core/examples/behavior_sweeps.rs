//! Loss curves against angle and aspect ratio, and EVar against center
//! deviation and scale.
//!
//! cargo run --release --example behavior_sweeps

use kfiou::consistency::{
    angle_sweep, aspect_sweep, deviation_sweep, scale_sweep, AngleSweep, AspectSweep, Method, PairProtocol,
    SimOptions, SweepRange,
};

fn main() -> kfiou::error::Result<()> {
    let opts = SimOptions::default();
    let angle = AngleSweep { range: SweepRange::new(0.0, 90.0, 15.0)?, ..AngleSweep::default() };
    println!("angle sweep, aspect {}", angle.aspect);
    print!("{}", angle_sweep(&angle, &Method::SWEEP, &opts)?.to_csv());

    let aspect = AspectSweep { range: SweepRange::new(1.0, 8.0, 1.0)?, ..AspectSweep::default() };
    println!("\naspect sweep, dtheta {}", aspect.delta_theta);
    print!("{}", aspect_sweep(&aspect, &Method::SWEEP, &opts)?.to_csv());

    let template = PairProtocol { n_samples: 500, ..PairProtocol::default() };
    let devs: Vec<f64> = (0..10).map(f64::from).collect();
    println!("\ndeviation sweep");
    print!("{}", deviation_sweep(&template, &devs, &Method::TABLE, &opts)?.to_csv());

    println!("\nscale sweep, deviation fixed in pixels");
    print!("{}", scale_sweep(&template, &[1.0, 2.0, 4.0, 10.0], &Method::TABLE, &opts)?.to_csv());
    Ok(())
}
