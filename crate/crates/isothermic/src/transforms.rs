//! Christoffel, Goursat, Darboux and T-transforms of sampled isothermic
//! surfaces, with the certificates used to check them.
//!
//! Every surface lives on a grid in conformal curvature line coordinates and
//! carries the polarization `q = dz²`. Transforms integrate exact forms or
//! linear systems from a base node `p0`; surfaces that are only defined up to
//! Möbius transformation are compared with [`moebius_equivalent`].

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, NodeIx, Result};
use crate::grid::{
    d_field_with, integrate_form_tol, integrate_frame_tol, march, partials, wedge, FrameField, GridSpec, MatForm1,
    QField, QForm1, ScalarField, Stencil, TAU_CLOSED, TAU_MC,
};
use crate::quat::{affine, cross_ratio_class, moebius_point, QMatrix2, QVec2, Quaternion};

/// Numerical knobs shared by the transforms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    /// Difference operator for derivatives of sampled surfaces.
    pub stencil: Stencil,
    pub tau_closed: f64,
    pub tau_mc: f64,
    pub tau_iso: f64,
    pub tau_mob: f64,
    /// Smallest |Df - f| and |v₁| still inverted.
    pub eps_inv: f64,
    /// Smallest tangent length accepted as an immersion.
    pub eps_imm: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            stencil: Stencil::Fourth,
            tau_closed: TAU_CLOSED,
            tau_mc: TAU_MC,
            tau_iso: 1e-4,
            tau_mob: 1e-5,
            eps_inv: 1e-12,
            eps_imm: 1e-8,
        }
    }
}

impl Settings {
    /// Scale the tolerances of reported checks by `s`. The integrability
    /// guards `tau_closed`, `tau_mc` stay put.
    pub fn scaled(self, s: f64) -> Self {
        Settings {
            tau_iso: self.tau_iso * s,
            tau_mob: self.tau_mob * s,
            ..self
        }
    }
}

/// Which of `dz²`, `dz̄²` the grid polarization is relative to the complex
/// structure `span{1, i}` of the ambient quaternions. Christoffel flips it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Dz2,
    Dzbar2,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::Dz2 => Polarization::Dzbar2,
            Polarization::Dzbar2 => Polarization::Dz2,
        }
    }
}

/// An isothermic surface `f: grid → Im H` with its polarization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizedSurface {
    #[serde(flatten)]
    pub f: QField,
    pub polarization: Polarization,
    /// Spectral parameter of the last transform producing this surface.
    pub lambda: f64,
    pub provenance: Vec<String>,
}

impl PolarizedSurface {
    pub fn new(f: QField) -> Self {
        PolarizedSurface { f, polarization: Polarization::Dz2, lambda: 0.0, provenance: Vec::new() }
    }

    pub fn with_polarization(mut self, p: Polarization) -> Self {
        self.polarization = p;
        self
    }

    pub fn with_step(mut self, step: impl Into<String>) -> Self {
        self.provenance.push(step.into());
        self
    }

    fn derived(&self, f: QField, lambda: f64, step: String) -> Self {
        let mut provenance = self.provenance.clone();
        provenance.push(step);
        PolarizedSurface { f, polarization: self.polarization, lambda, provenance }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.f.grid
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: PolarizedSurface = serde_json::from_str(s)?;
        p.f.validate()?;
        Ok(p)
    }
}

/// `df` and the Christoffel form `f_x⁻¹dx - f_y⁻¹dy`. Nodes where a
/// tangent cannot be inverted are masked in both.
pub fn structure_forms(f: &QField, cfg: &Settings) -> (QForm1, QForm1) {
    let df = d_field_with(f, cfg.stencil);
    let mut mask = df.grid.mask_vec();
    let mut px = vec![Quaternion::ZERO; df.grid.len()];
    let mut py = vec![Quaternion::ZERO; df.grid.len()];
    for k in 0..df.grid.len() {
        if !mask[k] {
            continue;
        }
        match (df.px[k].inv_eps(cfg.eps_imm), df.py[k].inv_eps(cfg.eps_imm)) {
            (Ok(a), Ok(b)) => {
                px[k] = a;
                py[k] = -b;
            }
            _ => mask[k] = false,
        }
    }
    let grid = df.grid.with_mask(mask);
    let dc = QForm1 { grid: grid.clone(), px, py, stencil: df.stencil };
    (QForm1 { grid, ..df }, dc)
}

fn scale_form(w: &QForm1, s: f64) -> QForm1 {
    QForm1 {
        grid: w.grid.clone(),
        px: w.px.iter().map(|&q| q * s).collect(),
        py: w.py.iter().map(|&q| q * s).collect(),
        stencil: w.stencil,
    }
}

/// Unit normal `f_x × f_y / |f_x × f_y|`.
pub fn normal_field(s: &PolarizedSurface, cfg: &Settings) -> Result<QField> {
    let df = d_field_with(&s.f, cfg.stencil);
    let g = &df.grid;
    let mut values = vec![Quaternion::ZERO; g.len()];
    for k in (0..g.len()).filter(|&k| g.valid(k)) {
        let c = df.px[k].cross(df.py[k]);
        let n = c.norm();
        if n < cfg.eps_imm * cfg.eps_imm {
            return Err(Error::DegenerateTangent(g.node(k)));
        }
        values[k] = c / n;
    }
    Ok(QField { grid: g.clone(), values })
}

/// Hopf coefficient `ρ = (L - N)/4` of `dz²` and the largest defect from
/// conformal curvature line coordinates, `max(|E - G| + |F|, |M|)/E`.
pub fn isothermic_certificate(s: &PolarizedSurface, cfg: &Settings) -> Result<(ScalarField, f64)> {
    let n = normal_field(s, cfg)?;
    let df = d_field_with(&s.f, cfg.stencil);
    let (fxx, fxy, ok1) = partials(&df.grid, &df.px, cfg.stencil);
    let (_, fyy, ok2) = partials(&df.grid, &df.py, cfg.stencil);
    let mask: Vec<bool> = (0..df.grid.len()).map(|k| df.grid.valid(k) && ok1[k] && ok2[k]).collect();
    let grid = df.grid.with_mask(mask);
    let mut rho = vec![0.0; grid.len()];
    let mut residual: f64 = 0.0;
    for k in (0..grid.len()).filter(|&k| grid.valid(k)) {
        let (fx, fy, nk) = (df.px[k], df.py[k], n.values[k]);
        let e = fx.norm_sqr();
        let conf = ((e - fy.norm_sqr()).abs() + fx.dot(fy).abs()) / e;
        let m = fxy[k].dot(nk) / e;
        rho[k] = (fxx[k].dot(nk) - fyy[k].dot(nk)) / 4.0;
        residual = residual.max(conf).max(m.abs());
    }
    Ok((ScalarField { grid, values: rho }, residual))
}

/// Christoffel transform through `c0` at `p0`.
pub fn christoffel(s: &PolarizedSurface, p0: NodeIx, c0: Quaternion, cfg: &Settings) -> Result<PolarizedSurface> {
    let (_, dc) = structure_forms(&s.f, cfg);
    let cf = integrate_form_tol(&dc, p0, c0, cfg.tau_closed)?;
    Ok(s.derived(cf, s.lambda, "C".into()).with_polarization(s.polarization.flipped()))
}

/// `max|f_x Cf_y - f_y Cf_x| / max(|f_x||Cf_x|)`, from differences of both fields.
pub fn christoffel_pair_residual(f: &QField, cf: &QField, cfg: &Settings) -> Result<f64> {
    let a = d_field_with(f, cfg.stencil);
    let b = d_field_with(cf, cfg.stencil);
    let w = wedge(&a, &b)?;
    let scale = (0..w.grid.len())
        .filter(|&k| w.grid.valid(k))
        .map(|k| a.px[k].norm() * b.px[k].norm())
        .fold(0.0, f64::max);
    Ok(w.max_over(Quaternion::norm) / scale.max(f64::MIN_POSITIVE))
}

/// Goursat transform by integrating `-(Cf - m) df (Cf - m)`.
pub fn goursat(
    s: &PolarizedSurface,
    m: Quaternion,
    p0: NodeIx,
    g0: Quaternion,
    cfg: &Settings,
) -> Result<PolarizedSurface> {
    let cf = christoffel(s, p0, Quaternion::ZERO, cfg)?;
    let df = d_field_with(&s.f, cfg.stencil);
    let grid = df.grid.intersect(&cf.f.grid)?;
    let mut mask = grid.mask_vec();
    let mut px = vec![Quaternion::ZERO; grid.len()];
    let mut py = vec![Quaternion::ZERO; grid.len()];
    for k in (0..grid.len()).filter(|&k| grid.valid(k)) {
        let a = cf.f.values[k] - m;
        if a.norm() < cfg.eps_inv {
            mask[k] = false;
            continue;
        }
        px[k] = -(a * df.px[k] * a);
        py[k] = -(a * df.py[k] * a);
    }
    if !mask[grid.idx(p0)] {
        return Err(Error::NearZeroQuaternion { norm: (cf.f.at(p0) - m).norm() });
    }
    let w = QForm1 { grid: grid.with_mask(mask), px, py, stencil: cfg.stencil };
    let gf = integrate_form_tol(&w, p0, g0, cfg.tau_closed)?;
    Ok(s.derived(gf, s.lambda, format!("G({})", fmt_q(m))))
}

/// The same transform composed as Christoffel ∘ `(x - m)⁻¹` ∘ Christoffel.
pub fn goursat_moebius(
    s: &PolarizedSurface,
    m: Quaternion,
    p0: NodeIx,
    g0: Quaternion,
    cfg: &Settings,
) -> Result<PolarizedSurface> {
    let cf = christoffel(s, p0, Quaternion::ZERO, cfg)?;
    let inverted = PolarizedSurface { f: inversion(&cf.f, m, cfg.eps_inv), ..cf };
    christoffel(&inverted, p0, g0, cfg)
}

/// Pointwise `x ↦ (x - m)⁻¹`; nodes hitting `m` are masked.
pub fn inversion(f: &QField, m: Quaternion, eps: f64) -> QField {
    f.try_map(|x| (x - m).inv_eps(eps))
}

/// Pointwise Möbius image; nodes sent to ∞ are masked.
pub fn moebius_image(f: &QField, m: &QMatrix2) -> QField {
    f.try_map(|x| moebius_point(m, x))
}

fn coefficient_pairs(df: &QForm1, dc: &QForm1, k: usize) -> ([Quaternion; 2], [Quaternion; 2]) {
    ([df.px[k], dc.px[k]], [df.py[k], dc.py[k]])
}

/// λ-Darboux transform through `d0` at `p0` from the Riccati equation
/// `dX = X λdCf X - df` for `X = Df - f`.
pub fn darboux_riccati(
    s: &PolarizedSurface,
    lambda: f64,
    p0: NodeIx,
    d0: Quaternion,
    cfg: &Settings,
) -> Result<PolarizedSurface> {
    let (df, dc) = structure_forms(&s.f, cfg);
    let grid = df.grid.clone();
    let x0 = d0 - s.f.at(p0);
    if x0.norm() < cfg.eps_inv {
        return Err(Error::SingularityHit(p0));
    }
    let (cx, cy): (Vec<_>, Vec<_>) = (0..grid.len()).map(|k| coefficient_pairs(&df, &dc, k)).unzip();
    let (xs, reached) = march(&grid, p0, x0, &cx, &cy, |x: Quaternion, c: [Quaternion; 2]| {
        x * (c[1] * lambda) * x - c[0]
    })?;
    for k in (0..reached.len()).filter(|&k| reached.valid(k)) {
        if xs[k].norm() < cfg.eps_inv {
            return Err(Error::SingularityHit(reached.node(k)));
        }
    }
    let values = s.f.values.iter().zip(&xs).map(|(&f, &x)| f + x).collect();
    let out = QField { grid: reached, values };
    Ok(s.derived(out, lambda, format!("D({lambda})")))
}

/// λ-Darboux transform `f + v₂v₁⁻¹` from Darboux's linear system
/// `dv + Φ_λ v = 0`, `v(p0) = v0`.
pub fn darboux_linear(
    s: &PolarizedSurface,
    lambda: f64,
    p0: NodeIx,
    v0: QVec2,
    cfg: &Settings,
) -> Result<PolarizedSurface> {
    let (df, dc) = structure_forms(&s.f, cfg);
    let grid = df.grid.clone();
    let (cx, cy): (Vec<_>, Vec<_>) = (0..grid.len()).map(|k| coefficient_pairs(&df, &dc, k)).unzip();
    let (vs, reached) = march(&grid, p0, v0, &cx, &cy, |v: QVec2, c: [Quaternion; 2]| {
        [-(c[1] * lambda * v[1]), -(c[0] * v[0])]
    })?;
    let f = &s.f;
    let mut mask = reached.mask_vec();
    let mut values = vec![Quaternion::ZERO; grid.len()];
    for k in 0..grid.len() {
        if !mask[k] {
            continue;
        }
        match vs[k][0].inv_eps(cfg.eps_inv) {
            Ok(i) => values[k] = f.values[k] + vs[k][1] * i,
            Err(_) => mask[k] = false,
        }
    }
    if !mask[grid.idx(p0)] {
        return Err(Error::AffineEscape(p0));
    }
    let out = QField { grid: reached.with_mask(mask), values };
    Ok(s.derived(out, lambda, format!("D({lambda})")))
}

/// `max|df ∧ (f - Df)⁻¹dDf|` relative to `max|df|·max|(f - Df)⁻¹dDf|`:
/// curvature lines of a Darboux pair correspond.
pub fn darboux_pair_residual(f: &QField, d: &QField, cfg: &Settings) -> Result<f64> {
    let a = d_field_with(f, cfg.stencil);
    let b = d_field_with(d, cfg.stencil);
    let grid = a.grid.intersect(&b.grid)?;
    let mut mask = grid.mask_vec();
    let mut px = vec![Quaternion::ZERO; grid.len()];
    let mut py = vec![Quaternion::ZERO; grid.len()];
    for k in (0..grid.len()).filter(|&k| grid.valid(k)) {
        match (f.values[k] - d.values[k]).inv() {
            Ok(i) => {
                px[k] = i * b.px[k];
                py[k] = i * b.py[k];
            }
            Err(_) => mask[k] = false,
        }
    }
    let c = QForm1 { grid: grid.with_mask(mask), px, py, stencil: a.stencil };
    let w = wedge(&a, &c)?;
    Ok(w.max_over(Quaternion::norm) / (a.max_norm() * c.max_norm()).max(f64::MIN_POSITIVE))
}

/// Output of a T-transform: the frame `F` with `dF = FΦ_λ` and the two
/// affine points it carries.
#[derive(Clone, Debug)]
pub struct TTransformResult {
    /// `T_λf`, the affine projection of `B·F·e₁`.
    pub surface: PolarizedSurface,
    pub frame: FrameField,
    /// `B·F·e₂`, a copy of `T_λCf`; passes through ∞ at the base node.
    pub second_point: QField,
    /// `F_can(f(p0))·F0⁻¹`, fixing the representative.
    pub base: QMatrix2,
    pub lambda: f64,
}

impl TTransformResult {
    /// The `(-λ)`-Darboux transform of `T_λf` through `d0` at the base node,
    /// read off the frame as `B·F·F_can⁻¹·(d0, 1)` with `F_can = [[f, 1], [1, 0]]`.
    pub fn darboux_point(&self, f: &QField, d0: Quaternion) -> Result<QField> {
        let g = self.frame.grid.intersect(&f.grid)?;
        let mut mask = g.mask_vec();
        let mut values = vec![Quaternion::ZERO; g.len()];
        for k in 0..g.len() {
            if !mask[k] {
                continue;
            }
            let ecan = QMatrix2::euclidean_frame(f.values[k]).inverse()?;
            let v = self.base.mul_vec(self.frame.values[k].mul_vec(ecan.mul_vec([d0, Quaternion::ONE])));
            match affine(v) {
                Ok(q) => values[k] = q,
                Err(_) => mask[k] = false,
            }
        }
        Ok(QField { grid: g.with_mask(mask), values })
    }
}

fn project(base: &QMatrix2, frame: &FrameField, col: usize) -> QField {
    let g = &frame.grid;
    let mut mask = g.mask_vec();
    let mut values = vec![Quaternion::ZERO; g.len()];
    for k in 0..g.len() {
        if !mask[k] {
            continue;
        }
        match affine(base.mul_vec(frame.values[k].col(col))) {
            Ok(q) => values[k] = q,
            Err(_) => mask[k] = false,
        }
    }
    QField { grid: g.with_mask(mask), values }
}

/// T-transform: integrate `dF = FΦ_λ`, `Φ_λ = [[0, λdCf], [df, 0]]`,
/// with `F(p0) = F0`. The representative is pinned by projecting with the
/// Euclidean frame of `f(p0)`, so `T_0 f = f` and `T_λf(p0) = f(p0)`.
pub fn t_transform(
    s: &PolarizedSurface,
    lambda: f64,
    f0: QMatrix2,
    p0: NodeIx,
    cfg: &Settings,
) -> Result<TTransformResult> {
    let (df, dc) = structure_forms(&s.f, cfg);
    let b = scale_form(&dc, lambda);
    let phi = MatForm1::from_entries(None, Some(&b), Some(&df), None)?;
    let frame = integrate_frame_tol(&phi, f0, p0, cfg.tau_mc)?;
    let base = QMatrix2::euclidean_frame(s.f.at(p0)) * f0.inverse()?;
    let g = project(&base, &frame, 0);
    if !g.grid.valid(g.grid.idx(p0)) {
        return Err(Error::AffineEscape(p0));
    }
    let second_point = project(&base, &frame, 1);
    Ok(TTransformResult {
        surface: s.derived(g, lambda, format!("T({lambda})")),
        frame,
        second_point,
        base,
        lambda,
    })
}

/// T-transform computed in an arbitrary adapted frame `G` (`G e₁ ∥ (f, 1)`):
/// `Φ̃_λ = G⁻¹dG + λ[[0, ψ*], [0, 0]]` with ψ the lower left entry of
/// `G⁻¹dG` and `ψ* = ψ_x⁻¹dx - ψ_y⁻¹dy`.
pub fn t_transform_gauged(
    s: &PolarizedSurface,
    lambda: f64,
    gauge: &FrameField,
    p0: NodeIx,
    cfg: &Settings,
) -> Result<TTransformResult> {
    let grid = gauge.grid.intersect(&s.f.grid)?;
    for k in (0..grid.len()).filter(|&k| grid.valid(k)) {
        let f = s.f.values[k];
        let p = affine(gauge.values[k].col(0)).map_err(|_| Error::NotAdapted(grid.node(k)))?;
        if (p - f).norm() > 1e-8 * (1.0 + f.norm()) {
            return Err(Error::NotAdapted(grid.node(k)));
        }
    }
    let (gx, gy, ok) = partials(&grid, &gauge.values, cfg.stencil);
    let mut mask: Vec<bool> = (0..grid.len()).map(|k| grid.valid(k) && ok[k]).collect();
    let mut px = vec![QMatrix2::ZERO; grid.len()];
    let mut py = vec![QMatrix2::ZERO; grid.len()];
    for k in 0..grid.len() {
        if !mask[k] {
            continue;
        }
        let Ok(gi) = gauge.values[k].inverse() else {
            mask[k] = false;
            continue;
        };
        let (ax, ay) = (gi * gx[k], gi * gy[k]);
        match (ax.c.inv_eps(cfg.eps_imm), ay.c.inv_eps(cfg.eps_imm)) {
            (Ok(sx), Ok(sy)) => {
                px[k] = ax + QMatrix2::new(Quaternion::ZERO, sx * lambda, Quaternion::ZERO, Quaternion::ZERO);
                py[k] = ay - QMatrix2::new(Quaternion::ZERO, sy * lambda, Quaternion::ZERO, Quaternion::ZERO);
            }
            _ => mask[k] = false,
        }
    }
    let phi = MatForm1 { grid: grid.with_mask(mask), px, py, stencil: cfg.stencil };
    let frame = integrate_frame_tol(&phi, QMatrix2::IDENTITY, p0, cfg.tau_mc)?;
    let base = gauge.at(p0);
    let g = project(&base, &frame, 0);
    let second_point = project(&base, &frame, 1);
    Ok(TTransformResult {
        surface: s.derived(g, lambda, format!("T~({lambda})")),
        frame,
        second_point,
        base,
        lambda,
    })
}

/// Compare Möbius invariants of two surfaces on `n_quads` random node
/// quadruples. The residual is the largest discrepancy in `(Re r, |r|)`,
/// relative once `|r| > 1`; equivalent iff residual ≤ `tau`.
pub fn moebius_equivalent(a: &QField, b: &QField, n_quads: usize, seed: u64, tau: f64) -> Result<(bool, f64)> {
    let grid = a.grid.intersect(&b.grid)?;
    let nodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.valid(k)).collect();
    if nodes.len() < 4 {
        return Err(Error::DegenerateQuadruple);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut tries, mut residual) = (0, 0, 0.0f64);
    while done < n_quads {
        tries += 1;
        if tries > 20 * n_quads + 100 {
            return Err(Error::DegenerateQuadruple);
        }
        let q: Vec<usize> = sample(&mut rng, nodes.len(), 4).into_iter().map(|i| nodes[i]).collect();
        let ra = cross_ratio_class(a.values[q[0]], a.values[q[1]], a.values[q[2]], a.values[q[3]]);
        let rb = cross_ratio_class(b.values[q[0]], b.values[q[1]], b.values[q[2]], b.values[q[3]]);
        let (Ok(ra), Ok(rb)) = (ra, rb) else { continue };
        let d = (ra.0 - rb.0).abs().max((ra.1 - rb.1).abs()) / ra.1.max(1.0);
        residual = residual.max(if d.is_nan() { f64::INFINITY } else { d });
        done += 1;
    }
    Ok((residual <= tau, residual))
}

/// Residuals of the permutability checks.
#[derive(Clone, Debug, Serialize)]
pub struct PermutabilityReport {
    /// Second point of the T-frame against `T_λCf`.
    pub p1: f64,
    /// `max|λ(CDf - Cf) - (Df - f)⁻¹|`, relative.
    pub p2_positioning: f64,
    /// `C D_λf` against `D_λ Cf` through the same point.
    pub p2_commute: f64,
    /// `T_μD_λf` against `D_{λ-μ}T_μf`.
    pub p3: f64,
    /// `T_λD_λf` against `C((T_λf - Df(p0))⁻¹)`, worst of two Darboux transforms.
    pub goursat: f64,
}

/// Run the permutability checks with Darboux transforms through `d` at `p0`.
#[allow(clippy::too_many_arguments)]
pub fn permutability_suite(
    s: &PolarizedSurface,
    lambda: f64,
    mu: f64,
    p0: NodeIx,
    d: [Quaternion; 2],
    n_quads: usize,
    seed: u64,
    cfg: &Settings,
) -> Result<PermutabilityReport> {
    let tau = f64::INFINITY;
    let id = QMatrix2::IDENTITY;
    let f0 = s.f.at(p0);

    let t = t_transform(s, lambda, id, p0, cfg)?;
    let cf = christoffel(s, p0, Quaternion::ZERO, cfg)?;
    let tc = t_transform(&cf, lambda, id, p0, cfg)?;
    let (_, p1) = moebius_equivalent(&t.second_point, &tc.surface.f, n_quads, seed, tau)?;

    let df = darboux_riccati(s, lambda, p0, d[0], cfg)?;
    let c0 = cf.f.at(p0) + (d[0] - f0).inv()? * (1.0 / lambda);
    let cdf = christoffel(&df, p0, c0, cfg)?;
    let lhs = cdf.f.zip_map(&cf.f, |a, b| (a - b) * lambda)?;
    let rhs = df.f.zip_map(&s.f, |a, b| a - b)?.try_map(Quaternion::inv);
    let p2_positioning = lhs.max_dist(&rhs)? / rhs.max_over(Quaternion::norm);
    let dcf = darboux_riccati(&cf, lambda, p0, c0, cfg)?;
    let p2_commute = cdf.f.max_dist(&dcf.f)? / cdf.f.max_over(Quaternion::norm).max(1.0);

    let tdf = t_transform(&df, mu, id, p0, cfg)?;
    let tf = t_transform(s, mu, id, p0, cfg)?;
    let dtf = darboux_riccati(&tf.surface, lambda - mu, p0, d[0], cfg)?;
    let (_, p3) = moebius_equivalent(&tdf.surface.f, &dtf.f, n_quads, seed, tau)?;

    // T_λD_λf is a Christoffel transform of the inversion of T_λf at Df(p0),
    // so two Darboux transforms give Goursat-related T-transforms.
    let tl = t.surface.clone();
    let mut goursat: f64 = 0.0;
    for &di in &d {
        let dfi = darboux_riccati(s, lambda, p0, di, cfg)?;
        let tdi = t_transform(&dfi, lambda, id, p0, cfg)?;
        let inv = PolarizedSurface::new(inversion(&tl.f, di, cfg.eps_inv));
        let g = christoffel(&inv, p0, Quaternion::ZERO, cfg)?;
        goursat = goursat.max(moebius_equivalent(&tdi.surface.f, &g.f, n_quads, seed, tau)?.1);
    }

    Ok(PermutabilityReport { p1, p2_positioning, p2_commute, p3, goursat })
}

fn fmt_q(q: Quaternion) -> String {
    format!("{},{},{},{}", q.w, q.x, q.y, q.z)
}
