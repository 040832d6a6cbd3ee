//! Quaternions, Möbius matrices and the cross-ratio class of four points.
//!
//! ```text
//! cargo run --example quaternion_moebius
//! ```

use isothermic::error::Result;
use isothermic::quat::{
    cross_ratio_class, lorentz, moebius_act, moebius_point, point_form, study_det, Point, QMatrix2, Quaternion,
};

fn main() -> Result<()> {
    let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
    println!("ij = {:?}  (k = {:?})", i * j, k);

    // translation, rotation-dilation, then inversion in a point off the sample
    let r = Quaternion::new(1.0, 0.5, -0.2, 0.3);
    let r = r / r.norm();
    let t = QMatrix2::new(Quaternion::ONE, Quaternion::imag(0.1, 0.4, -0.3), Quaternion::ZERO, Quaternion::ONE);
    let s = QMatrix2::diag(r * 2.0, r);
    let pole = Quaternion::imag(3.0, 0.0, 1.0);
    let inv = QMatrix2::new(Quaternion::ZERO, Quaternion::ONE, Quaternion::ONE, -pole);
    let m = inv * t * s;
    println!("study determinant {:.6}", study_det(&m));

    let pts = [
        Quaternion::imag(0.0, 0.0, 0.0),
        Quaternion::imag(1.0, 0.0, 0.0),
        Quaternion::imag(0.0, 1.0, 0.5),
        Quaternion::imag(-0.3, 0.2, 1.0),
    ];
    let images: Vec<Quaternion> = pts.iter().map(|&p| moebius_point(&m, p)).collect::<Result<_>>()?;
    let before = cross_ratio_class(pts[0], pts[1], pts[2], pts[3])?;
    let after = cross_ratio_class(images[0], images[1], images[2], images[3])?;
    println!("cross-ratio class before {before:?}");
    println!("cross-ratio class after  {after:?}");

    // points of space as lightlike hermitian forms
    let p = point_form(Point::Finite(pts[3]))?;
    let q = moebius_act(&m, &p)?;
    println!("<p,p> = {:.1e}, <Mp,Mp> = {:.1e}", lorentz(&p, &p), lorentz(&q, &q));
    Ok(())
}
