//! Config driven runs: generate a surface, apply a chain of transforms,
//! verify invariants and write surfaces, meshes and a report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cmc::{
    bryant_surface, darboux_weierstrass, example_ribaucour_frame, halfspace_normalize, mean_curvature_hyperbolic,
    ribaucour_data_extract, spherical_type_certificate, weierstrass_minimal, WeierstrassData,
};
use crate::error::{Error, NodeIx, Result};
use crate::grid::{observed_order, GridSpec, QField};
use crate::oracles;
use crate::quat::{QMatrix2, QVec2, Quaternion};
use crate::transforms::{
    christoffel, darboux_linear, darboux_riccati, goursat, inversion, isothermic_certificate, moebius_equivalent,
    moebius_image, permutability_suite, t_transform, Polarization, PolarizedSurface, Settings,
};

type Q4 = [f64; 4];

fn quat(v: Q4) -> Quaternion {
    Quaternion::new(v[0], v[1], v[2], v[3])
}

fn matrix(m: [Q4; 4]) -> QMatrix2 {
    QMatrix2::new(quat(m[0]), quat(m[1]), quat(m[2]), quat(m[3]))
}

/// Rectangle `[x₀, x₁] × [y₀, y₁]` sampled with spacings `hx`, `hy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub hx: f64,
    pub hy: f64,
}

impl Domain {
    pub fn square(a: f64, h: f64) -> Self {
        Domain { x: [-a, a], y: [-a, a], hx: h, hy: h }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let count = |lo: f64, hi: f64, h: f64, axis: &str| -> Result<usize> {
            if !(h > 0.0) || !(hi > lo) {
                return Err(Error::ConfigInvalid(format!("{axis}: empty range or non-positive spacing")));
            }
            let n = (hi - lo) / h;
            if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
                return Err(Error::ConfigInvalid(format!("{axis}: spacing {h} does not divide [{lo}, {hi}]")));
            }
            Ok(n.round() as usize + 1)
        };
        if (self.hx - self.hy).abs() > 1e-12 * self.hx.abs().max(self.hy.abs()) {
            return Err(Error::ConfigInvalid(format!("hx = {} differs from hy = {}", self.hx, self.hy)));
        }
        let nx = count(self.x[0], self.x[1], self.hx, "x")?;
        let ny = count(self.y[0], self.y[1], self.hy, "y")?;
        GridSpec::new(self.x[0], self.y[0], self.hx, self.hy, nx, ny).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Resample with `n` nodes along x, keeping the rectangle.
    pub fn with_nodes(&self, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::ConfigInvalid(format!("grid-n must be at least 2, got {n}")));
        }
        let h = (self.x[1] - self.x[0]) / (n - 1) as f64;
        Ok(Domain { hx: h, hy: h, ..self.clone() })
    }
}

/// Weierstrass data by name.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Data {
    /// `g = z`, `ω = dz`.
    Enneper,
    /// `g = tanh(√λz)/√λ`, `ω = cosh²(√λz) dz`.
    Family(f64),
}

impl Data {
    fn sample(self, g: &GridSpec) -> WeierstrassData {
        match self {
            Data::Enneper => WeierstrassData::enneper(g),
            Data::Family(l) => WeierstrassData::family(g, l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// The plane `f = -jz`.
    Example,
    Weierstrass {
        data: Data,
    },
    Bryant {
        data: Data,
        lambda: Option<f64>,
    },
    DarbouxWeierstrass {
        data: Data,
        lambda: Option<f64>,
        v0: Option<[Q4; 2]>,
    },
    /// A surface JSON written by an earlier run.
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DarbouxMethod {
    #[default]
    Riccati,
    Linear,
}

/// One step of the transform chain. `p0` is a point of the domain, snapped
/// to the nearest node; it defaults to the node nearest the centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", deny_unknown_fields)]
pub enum TransformOp {
    C {
        p0: Option<[f64; 2]>,
        c0: Option<Q4>,
    },
    T {
        lambda: Option<f64>,
        m: Option<[Q4; 4]>,
        p0: Option<[f64; 2]>,
    },
    D {
        lambda: Option<f64>,
        /// Initial point `D(p0)`; defaults to `f(p0) - i`.
        d0: Option<Q4>,
        /// Initial vector of the linear system; overrides `d0`.
        v0: Option<[Q4; 2]>,
        p0: Option<[f64; 2]>,
        #[serde(default)]
        method: DarbouxMethod,
    },
    Goursat {
        m: Q4,
        p0: Option<[f64; 2]>,
    },
    Moebius {
        m: [Q4; 4],
    },
    Inversion {
        m: Q4,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyFlags {
    pub isothermic: bool,
    pub spherical_type: bool,
    pub mean_curvature: bool,
    pub permutability: bool,
    pub liouville: bool,
    /// Compare with the closed forms when the run reproduces one.
    pub oracle: bool,
}

impl VerifyFlags {
    pub fn all() -> Self {
        VerifyFlags {
            isothermic: true,
            spherical_type: true,
            mean_curvature: true,
            permutability: true,
            liouville: true,
            oracle: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportTargets {
    pub json: bool,
    pub obj: bool,
    pub report: bool,
}

impl Default for ExportTargets {
    fn default() -> Self {
        ExportTargets { json: true, obj: true, report: true }
    }
}

fn one() -> f64 {
    1.0
}

fn twenty() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub domain: Domain,
    /// Spectral parameter used wherever a step leaves it unset.
    #[serde(default = "one")]
    pub lambda: f64,
    pub generator: Generator,
    #[serde(default)]
    pub transforms: Vec<TransformOp>,
    #[serde(default)]
    pub verify: VerifyFlags,
    #[serde(default)]
    pub export: ExportTargets,
    /// Seed for the quadruples of the Möbius equivalence tests.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "twenty")]
    pub n_quads: usize,
    #[serde(default = "one")]
    pub tolerance_scale: f64,
    /// Spectral parameters for `sweep`.
    #[serde(default)]
    pub sweep: Vec<f64>,
}

impl PipelineConfig {
    pub fn new(domain: Domain, generator: Generator) -> Self {
        PipelineConfig {
            domain,
            lambda: 1.0,
            generator,
            transforms: Vec::new(),
            verify: VerifyFlags::default(),
            export: ExportTargets::default(),
            seed: 0,
            n_quads: 20,
            tolerance_scale: 1.0,
            sweep: Vec::new(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: PipelineConfig = serde_json::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.grid()?;
        if !(self.tolerance_scale > 0.0) || !self.tolerance_scale.is_finite() {
            return Err(Error::ConfigInvalid(format!("tolerance_scale must be positive, got {}", self.tolerance_scale)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::ConfigInvalid("lambda must be finite".into()));
        }
        if self.n_quads == 0 {
            return Err(Error::ConfigInvalid("n_quads must be positive".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> Settings {
        Settings::default().scaled(self.tolerance_scale)
    }
}

/// One verified invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub grid_h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_order: Option<f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64, grid_h: f64) -> Self {
        // a non-finite residual never passes and is reported as the largest float
        let residual = if residual.is_finite() { residual } else { f64::MAX };
        Check { name: name.into(), residual, tolerance, pass: residual <= tolerance, grid_h, convergence_order: None }
    }

    /// Residual must stay above `bound` (negative controls).
    pub fn at_least(name: impl Into<String>, residual: f64, bound: f64, grid_h: f64) -> Self {
        let residual = if residual.is_finite() { residual } else { f64::MAX };
        Check { name: name.into(), residual, tolerance: bound, pass: residual >= bound, grid_h, convergence_order: None }
    }

    pub fn with_order(mut self, order: f64, min_order: f64) -> Self {
        self.convergence_order = Some(order);
        self.pass &= order >= min_order;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub stages: Vec<String>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl InvariantReport {
    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
        self.pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// What is known about a stage beyond its being isothermic.
#[derive(Clone, Debug)]
pub enum Kind {
    General,
    Minimal,
    /// cmc `h` in the half-space of curvature `-4λ²` once `boundary` is moved onto `Cj`.
    Cmc { lambda: f64, h: f64, boundary: Option<QField> },
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub name: String,
    pub surface: PolarizedSurface,
    pub kind: Kind,
}

/// Surfaces produced by a run together with the report.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub stages: Vec<Stage>,
    pub report: InvariantReport,
    pub written: Vec<PathBuf>,
}

fn at_stage(stage: &str, grid: &GridSpec) -> impl Fn(Error) -> Error {
    let stage = stage.to_string();
    let grid = grid.unmasked();
    move |e: Error| match e {
        Error::Stage { .. } => e,
        e => {
            let at = e.node().map(|n| (grid.x(n.0), grid.y(n.1)));
            Error::Stage { stage: stage.clone(), at, source: Box::new(e) }
        }
    }
}

fn node(grid: &GridSpec, p: Option<[f64; 2]>) -> NodeIx {
    match p {
        Some([x, y]) => grid.nearest(x, y),
        None => grid.center(),
    }
}

fn generate(cfg: &PipelineConfig, grid: &GridSpec, st: &Settings) -> Result<Stage> {
    let p0 = grid.center();
    let v0 = |v: Option<[Q4; 2]>| -> QVec2 {
        v.map_or([Quaternion::ONE, -Quaternion::I], |[a, b]| [quat(a), quat(b)])
    };
    let (name, surface, kind) = match &cfg.generator {
        Generator::Example => (
            "example",
            PolarizedSurface::new(QField::sample(grid, |z| Quaternion::cj(-z.conj())))
                .with_polarization(Polarization::Dzbar2)
                .with_step("example"),
            Kind::General,
        ),
        Generator::Weierstrass { data } => {
            ("weierstrass", weierstrass_minimal(&data.sample(grid), p0, Quaternion::ZERO, st)?, Kind::Minimal)
        }
        Generator::Bryant { data, lambda } => {
            let l = lambda.unwrap_or(cfg.lambda);
            let b = bryant_surface(&data.sample(grid), l, p0, Quaternion::ZERO, st)?;
            let boundary = b.surface.gauss_hyperbolic.clone();
            let s = PolarizedSurface::new(b.surface.f).with_step(format!("B({l})"));
            ("bryant", s, Kind::Cmc { lambda: l, h: b.surface.mean_curvature, boundary: Some(boundary) })
        }
        Generator::DarbouxWeierstrass { data, lambda, v0: v } => {
            let l = lambda.unwrap_or(cfg.lambda);
            let c = darboux_weierstrass(&data.sample(grid), l, p0, v0(*v), st)?;
            let s = PolarizedSurface::new(c.f).with_step(format!("DW({l})"));
            ("darboux-weierstrass", s, Kind::Cmc { lambda: l, h: c.mean_curvature, boundary: None })
        }
        Generator::File { path } => {
            let s = PolarizedSurface::from_json(&fs::read_to_string(path)?)?;
            if !s.f.grid.same_layout(grid) {
                return Err(Error::ConfigInvalid(format!("{} does not match the configured domain", path.display())));
            }
            ("file", s, Kind::General)
        }
    };
    Ok(Stage { name: name.into(), surface, kind })
}

fn apply(op: &TransformOp, prev: &Stage, cfg: &PipelineConfig, st: &Settings) -> Result<Stage> {
    let s = &prev.surface;
    let grid = s.grid();
    let (name, surface, kind) = match op {
        TransformOp::C { p0, c0 } => {
            let c = christoffel(s, node(grid, *p0), c0.map_or(Quaternion::ZERO, quat), st)?;
            ("C".to_string(), c, Kind::General)
        }
        TransformOp::T { lambda, m, p0 } => {
            let l = lambda.unwrap_or(cfg.lambda);
            let t = t_transform(s, l, m.map_or(QMatrix2::IDENTITY, matrix), node(grid, *p0), st)?;
            let kind = match prev.kind {
                Kind::Minimal => Kind::Cmc { lambda: l, h: -2.0 * l, boundary: Some(t.second_point.clone()) },
                _ => Kind::General,
            };
            (format!("T({l})"), t.surface, kind)
        }
        TransformOp::D { lambda, d0, v0, p0, method } => {
            let l = lambda.unwrap_or(cfg.lambda);
            let p = node(grid, *p0);
            let d = match (v0, method) {
                (Some([a, b]), _) => darboux_linear(s, l, p, [quat(*a), quat(*b)], st)?,
                (None, m) => {
                    let d0 = d0.map_or(s.f.at(p) - Quaternion::I, quat);
                    match m {
                        DarbouxMethod::Riccati => darboux_riccati(s, l, p, d0, st)?,
                        DarbouxMethod::Linear => {
                            darboux_linear(s, l, p, [Quaternion::ONE, d0 - s.f.at(p)], st)?
                        }
                    }
                }
            };
            (format!("D({l})"), d, Kind::General)
        }
        TransformOp::Goursat { m, p0 } => {
            let p = node(grid, *p0);
            ("G".to_string(), goursat(s, quat(*m), p, Quaternion::ZERO, st)?, Kind::General)
        }
        TransformOp::Moebius { m } => {
            let f = moebius_image(&s.f, &matrix(*m));
            ("M".to_string(), PolarizedSurface { f, ..s.clone() }.with_step("M"), Kind::General)
        }
        TransformOp::Inversion { m } => {
            let f = inversion(&s.f, quat(*m), st.eps_inv);
            ("I".to_string(), PolarizedSurface { f, ..s.clone() }.with_step("I"), Kind::General)
        }
    };
    Ok(Stage { name, surface, kind })
}

/// Generate and transform, without checks or output.
pub fn build_stages(cfg: &PipelineConfig) -> Result<Vec<Stage>> {
    cfg.validate()?;
    let grid = cfg.domain.grid()?;
    let st = cfg.settings();
    let first = generate(cfg, &grid, &st).map_err(at_stage("generate", &grid))?;
    let mut stages = vec![first];
    for (i, op) in cfg.transforms.iter().enumerate() {
        let label = format!("transform {i}");
        let next = apply(op, stages.last().expect("nonempty"), cfg, &st).map_err(at_stage(&label, &grid))?;
        stages.push(next);
    }
    Ok(stages)
}

fn oracle_for(cfg: &PipelineConfig) -> Option<Box<dyn Fn(num_complex::Complex64) -> Result<Quaternion>>> {
    if cfg.generator != Generator::Example {
        return None;
    }
    let centred = |p: &Option<[f64; 2]>| p.is_none() || *p == Some([0.0, 0.0]);
    match cfg.transforms.as_slice() {
        [] => Some(Box::new(|z| Ok(oracles::oracle_f(z)))),
        [TransformOp::C { p0, c0 }] if centred(p0) && c0.is_none() => Some(Box::new(|z| Ok(oracles::oracle_cf(z)))),
        [TransformOp::T { lambda, m, p0 }] if m.is_none() && centred(p0) => {
            let l = lambda.unwrap_or(cfg.lambda);
            Some(Box::new(move |z| oracles::oracle_t(z, l)))
        }
        [TransformOp::D { lambda, d0, v0, p0, .. }] if centred(p0) => {
            let l = lambda.unwrap_or(cfg.lambda);
            let default = v0.is_none() && (d0.is_none() || *d0 == Some([0.0, -1.0, 0.0, 0.0]));
            let explicit = *v0 == Some([[1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0]]);
            (default || explicit).then(|| Box::new(move |z| oracles::oracle_darboux(z, l)) as Box<_>)
        }
        _ => None,
    }
}

fn verify(cfg: &PipelineConfig, stages: &[Stage], report: &mut InvariantReport) -> Result<()> {
    let st = cfg.settings();
    let flags = cfg.verify;
    let grid = stages[0].surface.grid().clone();
    let h = grid.h;
    let scale = cfg.tolerance_scale;
    for (i, s) in stages.iter().enumerate() {
        let tag = format!("{i}:{}", s.name);
        if flags.isothermic {
            let (_, r) = isothermic_certificate(&s.surface, &st).map_err(at_stage(&tag, &grid))?;
            report.push(Check::new(format!("isothermic[{tag}]"), r, st.tau_iso, h));
        }
        match &s.kind {
            Kind::Minimal => {
                if flags.mean_curvature {
                    let ff = crate::cmc::fundamental_forms(&s.surface.f, st.stencil)?;
                    let r = (0..ff.grid.len())
                        .filter(|&k| ff.grid.valid(k))
                        .map(|k| ff.mean_curvature(k).abs() * ff.e[k].sqrt())
                        .fold(0.0, f64::max);
                    report.push(Check::new(format!("minimal[{tag}]"), r, 1e-3 * scale, h));
                }
                if flags.spherical_type {
                    let (_, r) = spherical_type_certificate(&s.surface, &st).map_err(at_stage(&tag, &grid))?;
                    report.push(Check::new(format!("spherical_type[{tag}]"), r, 1e-3 * scale, h));
                }
            }
            Kind::Cmc { lambda, h: hc, boundary } if flags.mean_curvature => {
                let f = match boundary {
                    Some(b) => halfspace_normalize(&s.surface.f, b).map_err(at_stage(&tag, &grid))?.1,
                    None => s.surface.f.clone(),
                };
                let hy = mean_curvature_hyperbolic(&f, *lambda, &st).map_err(at_stage(&tag, &grid))?;
                report.push(Check::new(format!("mean_curvature[{tag}]"), (hy.mean - hc.abs()).abs(), 1e-3 * scale, h));
                report.push(Check::new(format!("mean_curvature_std[{tag}]"), hy.std, 1e-3 * scale, h));
            }
            _ => {}
        }
    }
    let last = stages.last().expect("nonempty");
    if flags.oracle {
        if let Some(o) = oracle_for(cfg) {
            let f = &last.surface.f;
            let mut r: f64 = 0.0;
            for k in (0..f.grid.len()).filter(|&k| f.grid.valid(k)) {
                if let Ok(v) = o(f.grid.z_at(k)) {
                    r = r.max((f.values[k] - v).norm());
                }
            }
            report.push(Check::new("oracle", r, 5e-6 * scale, h));
        }
    }
    let base = &stages[0];
    if flags.permutability && matches!(base.kind, Kind::General | Kind::Minimal) {
        let p0 = grid.center();
        let f0 = base.surface.f.at(p0);
        let d = [f0 - Quaternion::I, f0 - Quaternion::I * 2.0];
        let l = cfg.lambda;
        let r = permutability_suite(&base.surface, l, 0.5 * l, p0, d, cfg.n_quads, cfg.seed, &st)
            .map_err(at_stage("permutability", &grid))?;
        for (name, v) in [
            ("p1", r.p1),
            ("p2_positioning", r.p2_positioning),
            ("p2_commute", r.p2_commute),
            ("p3", r.p3),
            ("goursat", r.goursat),
        ] {
            report.push(Check::new(format!("permutability.{name}"), v, st.tau_mob, h));
        }
    }
    if flags.liouville {
        let family = match &cfg.generator {
            Generator::Example | Generator::DarbouxWeierstrass { data: Data::Enneper, .. } => Some(cfg.lambda),
            Generator::Weierstrass { data: Data::Family(l) } => Some(*l),
            _ => None,
        };
        if let Some(fl) = family {
            for c in ribaucour_checks(&cfg.domain, fl, scale, &st)? {
                report.push(c);
            }
        }
    }
    Ok(())
}

/// Ribaucour data of the example frame: `H ≡ 0`, `Ĥ ≡ 1`, `λ̂ ≡ 0`, and
/// the Gauss (here Liouville) and Codazzi equations with their orders over
/// spacings `2h, h, h/2`. Values are reported at `h`.
pub fn ribaucour_checks(domain: &Domain, family_lambda: f64, scale: f64, st: &Settings) -> Result<Vec<Check>> {
    let mut gauss = Vec::new();
    let mut codazzi = Vec::new();
    let mut at_h = None;
    for f in [2.0, 1.0, 0.5] {
        let d = Domain { hx: domain.hx * f, hy: domain.hy * f, ..domain.clone() };
        let g = d.grid()?;
        let frame = example_ribaucour_frame(&g, g.center(), -family_lambda, family_lambda, st)
            .map_err(at_stage("ribaucour frame", &g))?;
        let data = ribaucour_data_extract(&frame, st).map_err(at_stage("ribaucour extraction", &g))?;
        gauss.push(data.gauss_residual);
        codazzi.push(data.codazzi_residual);
        if f == 1.0 {
            at_h = Some(data);
        }
    }
    let data = at_h.expect("three levels");
    let h = domain.hx;
    let order = |r: &[f64]| order_with_floor(r);
    Ok(vec![
        Check::new("ribaucour.pattern", data.pattern_residual, crate::cmc::TAU_PATTERN * scale, h),
        Check::new("ribaucour.H", data.h.max_abs(), 1e-6 * scale, h),
        Check::new("ribaucour.H_hat", data.h_hat.valid_values().map(|v| (v - 1.0).abs()).fold(0.0, f64::max), 1e-6 * scale, h),
        Check::new("ribaucour.lambda_hat", data.lambda_hat.max_abs(), 1e-6 * scale, h),
        Check::new("ribaucour.gauss", data.gauss_residual, 1e-3 * scale, h).with_order(order(&gauss), 1.9),
        Check::new("ribaucour.codazzi", data.codazzi_residual, 1e-3 * scale, h).with_order(order(&codazzi), 1.9),
    ])
}

/// Below this a residual is at roundoff and no longer refines.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Smallest observed order over successive halvings; pairs whose finer
/// residual is already at roundoff are skipped, and if every pair is
/// skipped the order is reported as infinite.
pub fn order_with_floor(residuals: &[f64]) -> f64 {
    let orders = observed_order(residuals);
    orders
        .iter()
        .zip(residuals.windows(2))
        .filter(|(_, w)| w[1] > ROUNDOFF_FLOOR)
        .map(|(o, _)| *o)
        .fold(f64::INFINITY, f64::min)
}

/// Wavefront OBJ text: one vertex per unmasked node, `(x, y, z)` the
/// `(i, j, k)` components, one quad per cell with four unmasked corners.
pub fn obj_string(f: &QField) -> String {
    let g = &f.grid;
    let mut index = vec![0usize; g.len()];
    let mut out = String::new();
    let mut n = 0;
    for (k, slot) in index.iter_mut().enumerate() {
        if g.valid(k) {
            n += 1;
            *slot = n;
            let v = f.values[k];
            let _ = writeln!(out, "v {:.12} {:.12} {:.12}", v.x, v.y, v.z);
        }
    }
    for j in 0..g.ny.saturating_sub(1) {
        for i in 0..g.nx.saturating_sub(1) {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|p| g.idx(p));
            if c.iter().all(|&k| g.valid(k)) {
                let _ = writeln!(out, "f {} {} {} {}", index[c[0]], index[c[1]], index[c[2]], index[c[3]]);
            }
        }
    }
    out
}

/// Write `contents` to a temporary sibling and rename it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn export_obj(f: &QField, path: &Path) -> Result<()> {
    write_atomic(path, &obj_string(f))
}

fn file_stem(i: usize, name: &str) -> String {
    let clean: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("stage{i:02}_{}", clean.trim_matches('_'))
}

fn write_stages(stages: &[Stage], out: &Path, targets: ExportTargets, only_last: bool) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let skip = if only_last { stages.len() - 1 } else { 0 };
    for (i, s) in stages.iter().enumerate().skip(skip) {
        let stem = file_stem(i, &s.name);
        if targets.json {
            let p = out.join(format!("{stem}.json"));
            write_atomic(&p, &s.surface.to_json()?)?;
            written.push(p);
        }
        if targets.obj {
            let p = out.join(format!("{stem}.obj"));
            export_obj(&s.surface.f, &p)?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Full run: stages, checks and, if `out` is given, artifacts.
pub fn run_pipeline(cfg: &PipelineConfig, out: Option<&Path>) -> Result<PipelineOutput> {
    let stages = build_stages(cfg)?;
    let mut report = InvariantReport {
        stages: stages.iter().map(|s| s.surface.provenance.join(" > ")).collect(),
        checks: Vec::new(),
        pass: true,
    };
    verify(cfg, &stages, &mut report)?;
    let mut written = Vec::new();
    if let Some(dir) = out {
        written = write_stages(&stages, dir, cfg.export, false)?;
        if cfg.export.report {
            let p = dir.join("report.json");
            write_atomic(&p, &report.to_json()?)?;
            written.push(p);
        }
    }
    Ok(PipelineOutput { stages, report, written })
}

/// Write only the surfaces, first and last stage.
pub fn run_generate(cfg: &PipelineConfig, out: &Path, with_chain: bool) -> Result<PipelineOutput> {
    let mut c = cfg.clone();
    if !with_chain {
        c.transforms.clear();
    }
    let stages = build_stages(&c)?;
    let written = write_stages(&stages, out, c.export, true)?;
    let report = InvariantReport {
        stages: stages.iter().map(|s| s.surface.provenance.join(" > ")).collect(),
        checks: Vec::new(),
        pass: true,
    };
    Ok(PipelineOutput { stages, report, written })
}

/// Spectral family `λ ↦ T_λf` of the last stage, one surface per λ.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub members: Vec<(f64, PolarizedSurface)>,
    pub report: InvariantReport,
    pub written: Vec<PathBuf>,
}

pub fn sweep(cfg: &PipelineConfig, lambdas: &[f64], out: Option<&Path>) -> Result<SweepOutput> {
    if lambdas.is_empty() {
        return Err(Error::ConfigInvalid("sweep needs at least one lambda".into()));
    }
    let stages = build_stages(cfg)?;
    let base = &stages.last().expect("nonempty").surface;
    let st = cfg.settings();
    let grid = base.grid().clone();
    let p0 = grid.center();
    let mut report = InvariantReport { stages: vec![base.provenance.join(" > ")], checks: Vec::new(), pass: true };
    let mut members = Vec::new();
    let mut written = Vec::new();
    for (i, &l) in lambdas.iter().enumerate() {
        let tag = format!("sweep {l}");
        let t = t_transform(base, l, QMatrix2::IDENTITY, p0, &st).map_err(at_stage(&tag, &grid))?;
        if cfg.verify.isothermic {
            let (_, r) = isothermic_certificate(&t.surface, &st).map_err(at_stage(&tag, &grid))?;
            report.push(Check::new(format!("isothermic[T({l})]"), r, st.tau_iso, grid.h));
        }
        if l == 0.0 {
            let (_, r) = moebius_equivalent(&t.surface.f, &base.f, cfg.n_quads, cfg.seed, st.tau_mob)?;
            report.push(Check::new("T(0) = f", r, st.tau_mob, grid.h));
        }
        if let Some(dir) = out {
            let stem = format!("sweep{i:02}_lambda{l}");
            if cfg.export.obj {
                let p = dir.join(format!("{stem}.obj"));
                export_obj(&t.surface.f, &p)?;
                written.push(p);
            }
            if cfg.export.json {
                let p = dir.join(format!("{stem}.json"));
                write_atomic(&p, &t.surface.to_json()?)?;
                written.push(p);
            }
        }
        report.stages.push(t.surface.provenance.join(" > "));
        members.push((l, t.surface));
    }
    if let Some(dir) = out {
        if cfg.export.report {
            let p = dir.join("family_report.json");
            write_atomic(&p, &report.to_json()?)?;
            written.push(p);
        }
    }
    Ok(SweepOutput { members, report, written })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(h: f64) -> PipelineConfig {
        PipelineConfig::new(Domain::square(1.0, h), Generator::Example)
    }

    #[test]
    fn anisotropic_domain_is_rejected() {
        let mut c = example(1.0 / 8.0);
        c.domain.hy = 1.0 / 16.0;
        assert!(matches!(c.validate(), Err(Error::ConfigInvalid(_))));
        let e = run_pipeline(&c, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let good = r#"{"domain": {"x": [-1, 1], "y": [-1, 1], "hx": 0.125, "hy": 0.125}, "generator": {"kind": "example"}}"#;
        assert!(PipelineConfig::from_json(good).is_ok());
        let bad = r#"{"domain": {"x": [-1, 1], "y": [-1, 1], "hx": 0.125, "hy": 0.125}, "generator": {"kind": "example"}, "colour": 1}"#;
        assert!(matches!(PipelineConfig::from_json(bad), Err(Error::ConfigInvalid(_))));
        let bad_op = r#"{"domain": {"x": [-1, 1], "y": [-1, 1], "hx": 0.125, "hy": 0.125}, "generator": {"kind": "example"},
            "transforms": [{"op": "T", "lambda": 1, "mu": 2}]}"#;
        assert!(PipelineConfig::from_json(bad_op).is_err());
    }

    #[test]
    fn config_roundtrip() {
        let mut c = example(0.25);
        c.transforms = vec![
            TransformOp::T { lambda: Some(0.5), m: None, p0: None },
            TransformOp::D { lambda: None, d0: Some([0.0, -1.0, 0.0, 0.0]), v0: None, p0: Some([0.0, 0.0]), method: DarbouxMethod::Linear },
        ];
        c.generator = Generator::DarbouxWeierstrass { data: Data::Family(0.5), lambda: None, v0: None };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(PipelineConfig::from_json(&s).unwrap(), c);
    }

    #[test]
    fn tiny_obj() {
        let g = GridSpec { x0: 0.0, y0: 0.0, h: 1.0, nx: 2, ny: 2, mask: None };
        let f = QField::constant(&g, Quaternion::imag(1.0, 2.0, 3.0));
        let s = obj_string(&f);
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).collect::<Vec<_>>(), vec!["f 1 2 4 3"]);
    }

    #[test]
    fn masked_cells_are_dropped() {
        let g = GridSpec::square(1.0, 0.5).unwrap();
        let mut mask = vec![true; g.len()];
        mask[g.idx(g.center())] = false;
        let f = QField::constant(&g.with_mask(mask), Quaternion::ZERO);
        let s = obj_string(&f);
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 24);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 16 - 4);
    }

    #[test]
    fn plane_exports_flat_sheet() {
        let out = run_pipeline(&example(0.25), None).unwrap();
        let s = obj_string(&out.stages[0].surface.f);
        for l in s.lines().filter(|l| l.starts_with("v ")) {
            let x: f64 = l.split_whitespace().nth(1).unwrap().parse().unwrap();
            assert_eq!(x, 0.0);
        }
    }

    #[test]
    fn christoffel_twice_is_a_translation() {
        let mut c = example(1.0 / 32.0);
        c.transforms = vec![TransformOp::C { p0: None, c0: None }, TransformOp::C { p0: None, c0: None }];
        let out = run_pipeline(&c, None).unwrap();
        let r = out.stages[2].surface.f.max_dist_mod_translation(&out.stages[0].surface.f).unwrap();
        assert!(r < 1e-4, "{r}");
    }

    #[test]
    fn weierstrass_enneper_verifies() {
        let mut c = PipelineConfig::new(Domain::square(1.0, 1.0 / 32.0), Generator::Weierstrass { data: Data::Enneper });
        c.verify = VerifyFlags { isothermic: true, mean_curvature: true, ..Default::default() };
        let out = run_pipeline(&c, None).unwrap();
        assert!(out.report.pass, "{:#?}", out.report);
        assert_eq!(out.report.checks.len(), 2);
    }

    #[test]
    fn errors_carry_coordinates() {
        let mut c = example(0.25);
        c.transforms = vec![TransformOp::Inversion { m: [0.0; 4] }, TransformOp::C { p0: None, c0: None }];
        let e = run_pipeline(&c, None).unwrap_err();
        assert!(matches!(e, Error::Stage { .. }), "{e}");
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn order_floor() {
        assert_eq!(order_with_floor(&[1e-12, 1e-13, 1e-13]), f64::INFINITY);
        assert!((order_with_floor(&[1.6e-3, 1e-4, 1e-11]) - 4.0).abs() < 1e-12);
    }
}
