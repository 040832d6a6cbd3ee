//! Christoffel and Goursat transforms of the Enneper surface.
//!
//! ```text
//! cargo run --example christoffel_goursat
//! ```

use isothermic::error::Result;
use isothermic::grid::{GridSpec, QField};
use isothermic::oracles;
use isothermic::quat::Quaternion;
use isothermic::transforms::{
    christoffel, christoffel_pair_residual, goursat, goursat_moebius, isothermic_certificate, PolarizedSurface, Settings,
};

fn main() -> Result<()> {
    let cfg = Settings::default();
    let g = GridSpec::square(1.0, 1.0 / 64.0)?;
    let p0 = g.center();
    let f = PolarizedSurface::new(QField::try_sample(&g, |z| oracles::oracle_minimal_family(z, 0.0)));

    let (_, iso) = isothermic_certificate(&f, &cfg)?;
    println!("isothermic certificate of Enneper {iso:.2e}");

    let c = christoffel(&f, p0, Quaternion::ZERO, &cfg)?;
    let cc = christoffel(&c, p0, Quaternion::ZERO, &cfg)?;
    println!("df ∧ dCf residual         {:.2e}", christoffel_pair_residual(&f.f, &c.f, &cfg)?);
    println!("C(Cf) vs f mod translation {:.2e}", cc.f.max_dist_mod_translation(&f.f)?);

    let m = Quaternion::imag(0.0, 2.0, 1.0);
    let a = goursat(&f, m, p0, Quaternion::ZERO, &cfg)?;
    let b = goursat_moebius(&f, m, p0, Quaternion::ZERO, &cfg)?;
    println!("Goursat: direct integral vs C∘inversion∘C {:.2e}", a.f.max_dist_mod_translation(&b.f)?);
    Ok(())
}
