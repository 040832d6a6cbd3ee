//! A cmc surface in hyperbolic space, its dual and the double dual, with the
//! minimal cousins of both.
//!
//! ```text
//! cargo run --example duals
//! cargo run --example duals -- 128   # nodes per unit length
//! ```

use isothermic::cmc::{double_dual, dual_cmc, spherical_type_certificate, WeierstrassData};
use isothermic::error::Result;
use isothermic::grid::GridSpec;
use isothermic::quat::Quaternion;
use isothermic::transforms::{moebius_equivalent, Settings};

fn main() -> Result<()> {
    let cfg = Settings::default();
    let h: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(64.0);
    let g = GridSpec::square(1.0, 1.0 / h)?;
    let p0 = g.center();
    let pair = dual_cmc(&WeierstrassData::enneper(&g), 1.0, [Quaternion::ONE, -Quaternion::I], p0, &cfg)?;
    println!("f: H = {}, dual: H = {}", pair.f.mean_curvature, pair.dual.mean_curvature);

    let back = double_dual(&pair, p0, &cfg)?;
    println!("double dual vs f pointwise {:.2e}", back.max_dist(&pair.f.f)?);
    let (_, r) = moebius_equivalent(&back, &pair.f.f, 20, 3, f64::INFINITY)?;
    println!("double dual vs f cross-ratio {r:.2e}");

    for (name, s) in [("f", &pair.f), ("dual", &pair.dual)] {
        if let Some(c) = &s.cousin {
            let (_, res) = spherical_type_certificate(c, &cfg)?;
            println!("minimal cousin of {name}: spherical type residual {res:.2e}");
        }
    }
    Ok(())
}
