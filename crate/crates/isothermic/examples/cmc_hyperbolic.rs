//! Constant mean curvature surfaces in hyperbolic space from Weierstrass data
//! via the Darboux transform, with the mean curvature measured in the
//! half-space model.
//!
//! ```text
//! cargo run --example cmc_hyperbolic
//! ```

use isothermic::cmc::{darboux_weierstrass, mean_curvature_hyperbolic, WeierstrassData};
use isothermic::error::Result;
use isothermic::grid::{GridSpec, QField};
use isothermic::oracles;
use isothermic::quat::Quaternion;
use isothermic::transforms::Settings;

fn main() -> Result<()> {
    let cfg = Settings::default();
    let g = GridSpec::square(1.0, 1.0 / 64.0)?;
    let wd = WeierstrassData::enneper(&g);
    println!("holomorphy residual of the Enneper data {:.1e}", wd.holomorphy_residual(cfg.stencil));

    for lambda in [0.25, 0.5, 1.0] {
        let s = darboux_weierstrass(&wd, lambda, g.center(), [Quaternion::ONE, -Quaternion::I], &cfg)?;
        let h = mean_curvature_hyperbolic(&s.f, lambda, &cfg)?;
        let exact = QField::try_sample(&s.f.grid, |z| oracles::oracle_darboux(z, lambda));
        println!(
            "λ = {lambda:<4}  H = {:.6} ± {:.1e} (expect {})  vs closed form {:.2e}",
            h.mean.abs(),
            h.std,
            2.0 * lambda,
            s.f.max_dist(&exact)?
        );
    }
    Ok(())
}
