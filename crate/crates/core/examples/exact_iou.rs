//! Exact SkewIoU by convex clipping, checked against the raster estimate.
//!
//! cargo run --example exact_iou

use kfiou::geometry::{rasterized_iou, skew_iou_2d, skew_iou_3d, RotatedBox2D, RotatedBox3D};

fn main() -> kfiou::error::Result<()> {
    let pairs = [
        (RotatedBox2D::new(0.0, 0.0, 2.0, 2.0, 0.0)?, RotatedBox2D::new(1.0, 0.0, 2.0, 2.0, 0.0)?),
        (RotatedBox2D::new(0.0, 0.0, 4.0, 2.0, 0.0)?, RotatedBox2D::new(0.0, 0.0, 4.0, 2.0, 90.0)?),
        (RotatedBox2D::new(0.0, 0.0, 2.0, 2.0, 0.0)?, RotatedBox2D::new(0.0, 0.0, 2.0, 2.0, 45.0)?),
        (RotatedBox2D::new(3.0, -1.0, 10.0, 3.0, 30.0)?, RotatedBox2D::new(4.0, 0.0, 9.0, 4.0, -20.0)?),
        (RotatedBox2D::new(0.0, 0.0, 1.0, 1.0, 0.0)?, RotatedBox2D::new(5.0, 5.0, 1.0, 1.0, 10.0)?),
    ];
    println!("{:>40} {:>40} {:>10} {:>10}", "box a", "box b", "exact", "raster");
    for (a, b) in &pairs {
        let exact = skew_iou_2d(a, b);
        let raster = rasterized_iou(a, b, 1000)?;
        println!("{:>40} {:>40} {exact:>10.6} {raster:>10.6}", format!("{:?}", a.params()), format!("{:?}", b.params()));
    }

    let a = RotatedBox3D::new(0.0, 0.0, 0.0, 4.0, 2.0, 2.0, 0.0)?;
    let b = RotatedBox3D::new(0.0, 0.0, 1.0, 4.0, 2.0, 2.0, 90.0)?;
    println!("3-D (BEV polygon x height overlap): {:.6}", skew_iou_3d(&a, &b));
    Ok(())
}
