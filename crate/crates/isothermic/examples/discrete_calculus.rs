//! Sampled fields, 1-forms and path integration on a rectangular grid.
//!
//! Integrates `d(sin 3z)` written as a quaternionic 1-form and compares with the
//! primitive at three spacings to read off the convergence order.
//!
//! ```text
//! cargo run --example discrete_calculus
//! ```

use isothermic::error::Result;
use isothermic::grid::{closedness_residual, d_field, integrate_form_tol, observed_order, GridSpec, QField, QForm1};
use isothermic::quat::Quaternion;

fn main() -> Result<()> {
    let mut errors = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let g = GridSpec::square(1.0, h)?;
        let primitive = QField::sample(&g, |z| Quaternion::cj((z * 3.0).sin()));
        let w = QForm1::sample(&g, |z| {
            let d = (z * 3.0).cos() * 3.0;
            (Quaternion::cj(d), Quaternion::cj(d * num_complex::Complex64::i()))
        });
        let p0 = g.center();
        // the discrete curl of a sampled closed form is small, not zero
        let f = integrate_form_tol(&w, p0, primitive.at(p0), 1e-2)?;
        let e = f.max_dist(&primitive)?;
        let rd = d_field(&primitive);
        println!(
            "h = {h:<8} nodes {:>5}  closedness {:.2e}  integral error {e:.2e}  max|df| {:.3}",
            g.valid_count(),
            closedness_residual(&w),
            rd.max_norm()
        );
        errors.push(e);
    }
    println!("observed orders {:?}", observed_order(&errors));
    Ok(())
}
