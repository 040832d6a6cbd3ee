//! Darboux transforms of the plane from the Riccati equation and from the
//! linear system, checked against the closed form.
//!
//! ```text
//! cargo run --example darboux
//! ```

use isothermic::error::Result;
use isothermic::grid::{GridSpec, QField};
use isothermic::oracles;
use isothermic::quat::Quaternion;
use isothermic::transforms::{darboux_linear, darboux_pair_residual, darboux_riccati, Polarization, PolarizedSurface, Settings};

fn main() -> Result<()> {
    let cfg = Settings::default();
    let g = GridSpec::square(1.0, 1.0 / 64.0)?;
    let p0 = g.center();
    let f = PolarizedSurface::new(QField::sample(&g, oracles::oracle_f)).with_polarization(Polarization::Dzbar2);

    for lambda in [0.5, 1.0, 2.0] {
        let r = darboux_riccati(&f, lambda, p0, -Quaternion::I, &cfg)?;
        let l = darboux_linear(&f, lambda, p0, [Quaternion::ONE, -Quaternion::I], &cfg)?;
        let exact = QField::try_sample(&r.f.grid, |z| oracles::oracle_darboux(z, lambda));
        println!(
            "λ = {lambda}: riccati vs linear {:.2e}, vs closed form {:.2e}, pair residual {:.2e}, nodes {}",
            r.f.max_dist(&l.f)?,
            r.f.max_dist(&exact)?,
            darboux_pair_residual(&f.f, &r.f, &cfg)?,
            r.f.grid.valid_count(),
        );
    }
    Ok(())
}
