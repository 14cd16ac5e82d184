//! Common image points and invariant pairs of real 2x2 matrices on CP^1.

use cocycle_lab::projective::{common_image_points, common_invariant_pair, mobius_apply, ProjectivePoint};
use cocycle_lab::Mat2;

fn rotation(t: f64) -> Mat2 {
    Mat2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

fn main() -> cocycle_lab::Result<()> {
    // Upper-triangular maps all send [1 : 0] to [1 : 0].
    let tri = [Mat2::new(2.0, 1.0, 0.0, 0.5), Mat2::new(-1.0, 0.3, 0.0, 3.0), Mat2::new(0.7, -2.0, 0.0, 1.1)];
    println!("triangular: {:?}", common_image_points(&tri)?);
    let p = ProjectivePoint::real(1.0, 0.0)?;
    println!("  check: {:?}", tri.iter().map(|a| mobius_apply(a, &p)).collect::<Vec<_>>());

    // Conjugated rotations fix a complex-conjugate pair of points.
    let b = Mat2::new(1.0, 0.5, -0.3, 1.2);
    let rot: Vec<Mat2> = [0.3, 1.0, 2.2].iter().map(|&t| b * rotation(t) * b.inverse()).collect();
    println!("rotations: {:?}", common_image_points(&rot)?);
    println!("  pairs: {:?}", common_invariant_pair(&rot)?);

    let generic = [Mat2::new(1.0, 2.0, 0.5, 3.0), Mat2::new(-1.0, 0.3, 0.7, 0.2), Mat2::new(0.4, -1.2, 1.5, 0.9)];
    println!("generic: {:?}", common_image_points(&generic)?);
    Ok(())
}
