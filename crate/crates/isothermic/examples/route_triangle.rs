//! Three constructions of the same cmc surface: Darboux transform of Enneper,
//! T-transform of a minimal surface, and Bryant's representation.
//!
//! ```text
//! cargo run --example route_triangle
//! ```

use isothermic::cmc::{bryant_surface, darboux_weierstrass, weierstrass_minimal, WeierstrassData};
use isothermic::error::Result;
use isothermic::grid::GridSpec;
use isothermic::quat::{QMatrix2, Quaternion};
use isothermic::transforms::{moebius_equivalent, t_transform, Settings};

fn main() -> Result<()> {
    let cfg = Settings::default();
    let g = GridSpec::square(1.0, 1.0 / 64.0)?;
    let p0 = g.center();
    let lambda = 0.5;

    let d = darboux_weierstrass(&WeierstrassData::enneper(&g), lambda, p0, [Quaternion::ONE, -Quaternion::I], &cfg)?;
    let fam = WeierstrassData::family(&g, lambda);
    let minimal = weierstrass_minimal(&fam, p0, Quaternion::ZERO, &cfg)?;
    let t = t_transform(&minimal, -lambda, QMatrix2::IDENTITY, p0, &cfg)?;
    let b = bryant_surface(&fam, -lambda, p0, Quaternion::ZERO, &cfg)?;

    let pairs = [("darboux/t", &d.f, &t.surface.f), ("darboux/bryant", &d.f, &b.surface.f), ("t/bryant", &t.surface.f, &b.surface.f)];
    for (name, x, y) in pairs {
        let (_, r) = moebius_equivalent(x, y, 20, 1, f64::INFINITY)?;
        println!("{name:<15} cross-ratio residual {r:.2e}");
    }
    Ok(())
}
