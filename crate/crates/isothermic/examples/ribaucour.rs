//! Integrate a Ribaucour frame from its connection form and read the
//! curvature data back off `F⁻¹dF`.
//!
//! ```text
//! cargo run --example ribaucour
//! ```

use isothermic::cmc::{example_ribaucour_frame, ribaucour_data_extract};
use isothermic::error::Result;
use isothermic::grid::GridSpec;
use isothermic::transforms::Settings;

fn main() -> Result<()> {
    let cfg = Settings::default();
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let g = GridSpec::square(1.0, h)?;
        let frame = example_ribaucour_frame(&g, g.center(), -1.0, 1.0, &cfg)?;
        let d = ribaucour_data_extract(&frame, &cfg)?;
        let (hm, hs) = d.h.mean_std();
        let (lm, ls) = d.lambda_hat.mean_std();
        println!(
            "h = {h:<9} H = {hm:.1e} ± {hs:.1e}  λ̂ = {lm:.1e} ± {ls:.1e}  pattern {:.1e}  gauss {:.2e}  codazzi {:.2e}",
            d.pattern_residual, d.gauss_residual, d.codazzi_residual
        );
    }
    Ok(())
}
