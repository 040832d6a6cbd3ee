//! Run a transform chain from a JSON config, print the invariant report and
//! write OBJ meshes to a temporary directory.
//!
//! ```text
//! cargo run --example pipeline_export
//! ```

use isothermic::error::Result;
use isothermic::pipeline::{run_pipeline, PipelineConfig};

const CONFIG: &str = r#"{
    "domain": {"x": [-1, 1], "y": [-1, 1], "hx": 0.015625, "hy": 0.015625},
    "lambda": 1.0,
    "generator": {"kind": "example"},
    "transforms": [
        {"op": "C"},
        {"op": "C"},
        {"op": "D", "lambda": 1.0, "method": "linear"},
        {"op": "T", "lambda": 0.5}
    ],
    "verify": {"isothermic": true}
}"#;

fn main() -> Result<()> {
    let cfg = PipelineConfig::from_json(CONFIG)?;
    let dir = std::env::temp_dir().join("isothermic-pipeline-example");
    let out = run_pipeline(&cfg, Some(&dir))?;
    for s in &out.stages {
        println!("stage {:<10} {} nodes", s.name, s.surface.f.grid.valid_count());
    }
    for c in &out.report.checks {
        println!("{} {:<28} {:.2e} (tol {:.0e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.residual, c.tolerance);
    }
    for p in &out.written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
