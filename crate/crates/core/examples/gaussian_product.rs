//! Boxes as Gaussians, their product and the KFIoU built from it.
//!
//! cargo run --example gaussian_product

use kfiou::gaussian::{box2d_to_gaussian, gaussian_product, gaussian_to_box2d, volume};
use kfiou::geometry::RotatedBox2D;
use kfiou::losses::{kfiou, kfiou_rescaled};

fn main() -> kfiou::error::Result<()> {
    let a = RotatedBox2D::new(0.0, 0.0, 4.0, 2.0, 0.0)?;
    let b = RotatedBox2D::new(1.0, 0.5, 4.0, 2.0, 60.0)?;
    let (ga, gb) = (box2d_to_gaussian(&a)?, box2d_to_gaussian(&b)?);
    println!("a: mu {:?} sigma {:?}", ga.mu, ga.sigma);
    println!("b: mu {:?} sigma {:?}", gb.mu, gb.sigma);

    let p = gaussian_product(&ga, &gb)?;
    println!("product mu {:?}", p.gaussian.mu);
    println!("product sigma {:?}", p.gaussian.sigma);
    println!("kalman gain {:?}", p.kalman_gain);
    println!("alpha {:.6e}", p.alpha);

    let (va, vb, vi) = (volume(&ga.sigma), volume(&gb.sigma), volume(&p.gaussian.sigma));
    println!("volumes {va:.4} {vb:.4} overlap {vi:.4}");
    println!("kfiou {:.6} rescaled {:.6}", kfiou(&ga, &gb)?, kfiou_rescaled(&ga, &gb)?);

    // The Gaussian forgets which side is "w": the decoded box is canonical.
    let back = gaussian_to_box2d(&gb)?;
    println!("b recovered from its Gaussian: {:?}", back.params());
    Ok(())
}
