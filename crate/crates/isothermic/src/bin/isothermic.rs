use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isothermic::error::{Error, Result};
use isothermic::pipeline::{export_obj, run_generate, run_pipeline, sweep, PipelineConfig, VerifyFlags};
use isothermic::transforms::PolarizedSurface;

#[derive(Parser)]
#[command(name = "isothermic", version, about = "Transforms of isothermic surfaces on sampled grids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the generator surface.
    Generate(Common),
    /// Write the surface at the end of the transform chain.
    Transform(Common),
    /// Run all configured checks; exit 1 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Turn on every check regardless of the config.
        #[arg(long)]
        all: bool,
    },
    /// Write OBJ meshes, either of a surface JSON or of every stage of a run.
    Export {
        #[command(flatten)]
        common: Common,
        /// Surface JSON to convert instead of running a config.
        #[arg(long)]
        surface: Option<PathBuf>,
    },
    /// Spectral family λ ↦ T_λf of the last stage.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma separated values; defaults to the config's `sweep` list.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambdas: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Nodes along x; the spacing follows.
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance_scale: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<PipelineConfig> {
        let path = self.config.as_ref().ok_or_else(|| Error::ConfigInvalid("--config is required".into()))?;
        let mut c = PipelineConfig::load(path)?;
        if let Some(n) = self.grid_n {
            c.domain = c.domain.with_nodes(n)?;
        }
        if let Some(l) = self.lambda {
            c.lambda = l;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.tolerance_scale {
            c.tolerance_scale = t;
        }
        c.validate()?;
        Ok(c)
    }
}

fn list(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Generate(c) => {
            list(&run_generate(&c.load()?, &c.out, false)?.written);
            Ok(true)
        }
        Cmd::Transform(c) => {
            list(&run_generate(&c.load()?, &c.out, true)?.written);
            Ok(true)
        }
        Cmd::Verify { common, all } => {
            let mut cfg = common.load()?;
            if all {
                cfg.verify = VerifyFlags::all();
            }
            let out = run_pipeline(&cfg, Some(&common.out))?;
            for c in &out.report.checks {
                println!("{} {} residual={:.3e} tolerance={:.1e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.residual, c.tolerance);
            }
            Ok(out.report.pass)
        }
        Cmd::Export { common, surface: Some(path) } => {
            let s = PolarizedSurface::from_json(&std::fs::read_to_string(&path)?)?;
            let stem = path.file_stem().map_or("surface".into(), |s| s.to_string_lossy().into_owned());
            let target = common.out.join(format!("{stem}.obj"));
            export_obj(&s.f, &target)?;
            list(&[target]);
            Ok(true)
        }
        Cmd::Export { common, surface: None } => {
            let mut cfg = common.load()?;
            cfg.export.json = false;
            cfg.export.report = false;
            cfg.export.obj = true;
            cfg.verify = VerifyFlags::default();
            list(&run_pipeline(&cfg, Some(&common.out))?.written);
            Ok(true)
        }
        Cmd::Sweep { common, lambdas } => {
            let cfg = common.load()?;
            let ls = if lambdas.is_empty() { cfg.sweep.clone() } else { lambdas };
            let out = sweep(&cfg, &ls, Some(Path::new(&common.out)))?;
            list(&out.written);
            Ok(out.report.pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
