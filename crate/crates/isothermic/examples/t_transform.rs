//! Calapso (T) transforms of the plane, the group law in λ and the
//! permutability checks.
//!
//! ```text
//! cargo run --example t_transform
//! ```

use isothermic::error::Result;
use isothermic::grid::{GridSpec, QField};
use isothermic::oracles;
use isothermic::quat::{QMatrix2, Quaternion};
use isothermic::transforms::{moebius_equivalent, permutability_suite, t_transform, Polarization, PolarizedSurface, Settings};

fn main() -> Result<()> {
    let cfg = Settings::default();
    let g = GridSpec::square(1.0, 1.0 / 64.0)?;
    let p0 = g.center();
    let f = PolarizedSurface::new(QField::sample(&g, oracles::oracle_f)).with_polarization(Polarization::Dzbar2);

    let t = t_transform(&f, 1.0, QMatrix2::IDENTITY, p0, &cfg)?;
    let exact = QField::try_sample(&g, |z| oracles::oracle_t(z, 1.0));
    println!("T_1 f vs closed form {:.2e}", t.surface.f.max_dist(&exact)?);
    println!("frame vs closed form {:.2e}", t.frame.max_dist(|z| oracles::oracle_frame(z, 1.0).unwrap()));

    let a = t_transform(&f, 0.3, QMatrix2::IDENTITY, p0, &cfg)?;
    let b = t_transform(&a.surface, 0.7, QMatrix2::IDENTITY, p0, &cfg)?;
    let (_, r) = moebius_equivalent(&b.surface.f, &t.surface.f, 20, 7, f64::INFINITY)?;
    println!("T_0.7 T_0.3 f vs T_1 f, cross-ratio residual {r:.2e}");

    let f0 = f.f.at(p0);
    let rep = permutability_suite(&f, 1.0, 0.5, p0, [f0 - Quaternion::I, f0 - Quaternion::I * 2.0], 20, 7, &cfg)?;
    println!("{rep:#?}");
    Ok(())
}
