//! KFIoU never exceeds 1/(2^(n/2+1) - 1); identical inputs reach it.
//!
//! cargo run --release --example upper_bound

use kfiou::gaussian::{box2d_to_gaussian, box3d_to_gaussian};
use kfiou::geometry::{RotatedBox2D, RotatedBox3D};
use kfiou::losses::{kfiou, kfiou_upper_bound};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> kfiou::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let n = 100_000;
    let (mut max2, mut max3) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let a = RotatedBox2D::new(u(-50.0, 50.0), u(-50.0, 50.0), u(1.0, 100.0), u(1.0, 100.0), u(-90.0, 90.0))?;
        let b = RotatedBox2D::new(u(-50.0, 50.0), u(-50.0, 50.0), u(1.0, 100.0), u(1.0, 100.0), u(-90.0, 90.0))?;
        max2 = max2.max(kfiou(&box2d_to_gaussian(&a)?, &box2d_to_gaussian(&b)?)?);
        let c = RotatedBox3D::new(0.0, 0.0, u(-5.0, 5.0), u(1.0, 100.0), u(1.0, 100.0), u(1.0, 100.0), u(-90.0, 90.0))?;
        let d = RotatedBox3D::new(0.0, 0.0, 0.0, u(1.0, 100.0), u(1.0, 100.0), u(1.0, 100.0), u(-90.0, 90.0))?;
        max3 = max3.max(kfiou(&box3d_to_gaussian(&c)?, &box3d_to_gaussian(&d)?)?);
    }
    println!("2-D: max over {n} pairs {max2:.9}, bound {:.9}", kfiou_upper_bound(2));
    println!("3-D: max over {n} pairs {max3:.9}, bound {:.9}", kfiou_upper_bound(3));
    let g = box3d_to_gaussian(&RotatedBox3D::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)?)?;
    println!("3-D identical: {:.9}", kfiou(&g, &g)?);
    Ok(())
}
