//! Forward-mode gradients of the regression loss against central differences.
//!
//! cargo run --example gradient_check

use kfiou::diff::{grad_check_2d, grad_check_3d, grad_kf_loss_2d, DEFAULT_STEP};
use kfiou::geometry::{RotatedBox2D, RotatedBox3D};
use kfiou::losses::{KfForm, LossConfig};

fn main() -> kfiou::error::Result<()> {
    let pred = RotatedBox2D::new(2.0, -1.0, 30.0, 8.0, 20.0)?;
    let gt = RotatedBox2D::new(0.0, 0.0, 32.0, 10.0, 5.0)?;
    let cfg = LossConfig::default();
    println!("d loss / d (x, y, w, h, theta) = {:?}", grad_kf_loss_2d(&pred, &gt, &cfg)?);

    for f in KfForm::ALL {
        let cfg = LossConfig { kf_form: f, ..LossConfig::default() };
        let r = grad_check_2d(&pred, &gt, &cfg, DEFAULT_STEP, 1e-4);
        println!("{:<16} max rel err {:.2e} {}", f.name(), r.max_rel_err, if r.passed { "ok" } else { "FAILED" });
    }

    let p3 = RotatedBox3D::new(1.0, 0.5, 0.2, 4.0, 2.0, 1.5, 30.0)?;
    let g3 = RotatedBox3D::new(0.0, 0.0, 0.0, 4.2, 1.8, 1.6, 10.0)?;
    let r = grad_check_3d(&p3, &g3, &cfg, DEFAULT_STEP, 1e-4);
    println!("3-D analytic {:?}", r.analytic);
    println!("3-D numeric  {:?}", r.numeric);
    println!("3-D max rel err {:.2e}", r.max_rel_err);
    Ok(())
}
