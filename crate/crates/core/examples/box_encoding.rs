//! Offset encoding of a box against an anchor, in both angle modes.
//!
//! cargo run --example box_encoding

use kfiou::geometry::RotatedBox2D;
use kfiou::losses::{decode_box, encode_box, normalize_angle_pair, AngleMode, AngleOffset, OffsetFrame};

fn main() -> kfiou::error::Result<()> {
    let anchor = RotatedBox2D::new(100.0, 50.0, 64.0, 16.0, 0.0)?;
    let gt = RotatedBox2D::new(108.0, 46.0, 70.0, 12.0, -35.0)?;
    for mode in [AngleMode::Direct, AngleMode::Indirect] {
        for frame in [OffsetFrame::Anchor, OffsetFrame::Image] {
            let e = encode_box(&gt, &anchor, mode, frame)?;
            let back: RotatedBox2D = decode_box(&e, &anchor, frame)?;
            println!("{mode:?}/{frame:?}: offsets {:?}", e.offsets());
            println!("  decoded {:?}", back.params());
        }
    }

    // A network predicts an unnormalized (sin, cos) pair; it is projected
    // onto the unit circle before decoding.
    let (s, c) = normalize_angle_pair(-1.4, 2.0)?;
    let raw = encode_box(&gt, &anchor, AngleMode::Indirect, OffsetFrame::Anchor)?;
    let pred = kfiou::losses::EncodedBox { angle: AngleOffset::Indirect { sin: s, cos: c }, ..raw };
    let b: RotatedBox2D = decode_box(&pred, &anchor, OffsetFrame::Anchor)?;
    println!("normalized ({s:.4}, {c:.4}) -> theta {:.3}", b.theta);
    Ok(())
}
