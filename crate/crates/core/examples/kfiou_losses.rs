//! The KFIoU loss forms, center terms and the GWD/KLD/Smooth-L1 baselines
//! for one prediction as it rotates away from its target.
//!
//! cargo run --example kfiou_losses

use kfiou::consistency::{method_loss, Method, SimOptions};
use kfiou::geometry::RotatedBox2D;
use kfiou::losses::{kf_loss, regression_loss_terms, CenterForm, KfForm, LossConfig};

fn main() -> kfiou::error::Result<()> {
    let gt = RotatedBox2D::new(0.0, 0.0, 40.0, 10.0, 0.0)?;
    print!("{:>5}", "dtheta");
    for f in KfForm::ALL {
        print!(" {:>16}", f.name());
    }
    println!(" {:>10} {:>10} {:>10}", "gwd", "kld", "smooth-l1");
    let opts = SimOptions::default();
    for dt in [0.0, 5.0, 15.0, 30.0, 60.0, 90.0] {
        let pred = RotatedBox2D::new(0.0, 0.0, 40.0, 10.0, dt)?;
        print!("{dt:>5}");
        for f in KfForm::ALL {
            let cfg = LossConfig { kf_form: f, ..LossConfig::default() };
            print!(" {:>16.6}", kf_loss(&pred, &gt, &cfg)?);
        }
        let l = |m| method_loss(&pred, &gt, m, &opts);
        println!(" {:>10.6} {:>10.6} {:>10.6}", l(Method::Gwd)?, l(Method::Kld)?, l(Method::SmoothL1)?);
    }

    let pred = RotatedBox2D::new(3.0, -2.0, 36.0, 12.0, 8.0)?;
    for center_form in [CenterForm::SmoothL1, CenterForm::KldTerm] {
        let cfg = LossConfig { center_form, ..LossConfig::default() };
        let t = regression_loss_terms(&pred, &gt, &gt, &cfg)?;
        println!("{center_form:?}: center {:.6} + kf {:.6} = {:.6}", t.center, t.kf, t.total());
    }
    Ok(())
}
