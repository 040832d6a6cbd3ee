//! Minimal surfaces in Im H and constant mean curvature surfaces in
//! hyperbolic space: Weierstrass and Bryant type representations, the
//! Darboux route from the hyperbolic Gauss map, duality, and the geometric
//! certificates (hyperbolic mean curvature, Liouville equation, Ribaucour
//! data).
//!
//! Hyperbolic space of curvature `-4λ²` is the half-space `{i-component > 0}`
//! with boundary plane `Cj` and metric `|dx| / (2|λ| t)`, `t` the height.

use nalgebra::{DMatrix, UnitQuaternion, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, NodeIx, Result};
use crate::grid::{
    d_scalar, integrate_form_tol, integrate_frame_tol, laplacian_with, march, partials, FrameField, GridSpec,
    MatForm1, QField, QForm1, ScalarField, Stencil,
};
use crate::oracles;
use crate::quat::{moebius_point, QMatrix2, QVec2, Quaternion};
use crate::transforms::{christoffel, darboux_linear, inversion, t_transform, PolarizedSurface, Settings};

/// Smallest height above the boundary plane.
pub const EPS_HEIGHT: f64 = 1e-6;
/// Relative tolerance on the off-pattern entries of a Ribaucour connection form.
pub const TAU_PATTERN: f64 = 1e-4;
/// Principal curvatures closer than this count as umbilic.
pub const EPS_UMBILIC: f64 = 1e-6;

fn q(c: Complex64) -> Quaternion {
    Quaternion::from(c)
}

/// Weierstrass data: a meromorphic `g` with its derivative and a
/// holomorphic differential `ω = w dz`, sampled on a grid.
#[derive(Clone, Debug)]
pub struct WeierstrassData {
    pub grid: GridSpec,
    pub g: Vec<Complex64>,
    pub dg: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl WeierstrassData {
    pub fn sample(
        grid: &GridSpec,
        g: impl Fn(Complex64) -> Complex64,
        dg: impl Fn(Complex64) -> Complex64,
        w: impl Fn(Complex64) -> Complex64,
    ) -> Self {
        let z: Vec<Complex64> = (0..grid.len()).map(|k| grid.z_at(k)).collect();
        WeierstrassData {
            grid: grid.clone(),
            g: z.iter().map(|&z| g(z)).collect(),
            dg: z.iter().map(|&z| dg(z)).collect(),
            w: z.iter().map(|&z| w(z)).collect(),
        }
    }

    /// `g = z`, `ω = dz`.
    pub fn enneper(grid: &GridSpec) -> Self {
        Self::sample(grid, |z| z, |_| Complex64::new(1.0, 0.0), |_| Complex64::new(1.0, 0.0))
    }

    /// `g = tanh(√λz)/√λ`, `ω = cosh²(√λz) dz`: Enneper at λ = 0, the
    /// catenoid at λ = 1.
    pub fn family(grid: &GridSpec, lambda: f64) -> Self {
        Self::sample(
            grid,
            |z| oracles::family_g(z, lambda),
            |z| oracles::family_dg(z, lambda),
            |z| oracles::family_w(z, lambda),
        )
    }

    fn ig(&self, k: usize) -> Quaternion {
        Quaternion::I - Quaternion::J * q(self.g[k])
    }

    /// Cauchy-Riemann defect `max|∂y - i∂x| / max(1, |∂x|)` of `g` and `w`, and the
    /// mismatch between the supplied `g'` and the differenced one.
    pub fn holomorphy_residual(&self, stencil: Stencil) -> f64 {
        let mut worst: f64 = 0.0;
        for (vals, deriv) in [(&self.g, Some(&self.dg)), (&self.w, None)] {
            let qv: Vec<Quaternion> = vals.iter().map(|&c| q(c)).collect();
            let (dx, dy, ok) = partials(&self.grid, &qv, stencil);
            let ks: Vec<usize> = (0..self.grid.len()).filter(|&k| self.grid.valid(k) && ok[k]).collect();
            let scale = ks.iter().map(|&k| dx[k].norm()).fold(1.0, f64::max);
            for &k in &ks {
                let cr = (dy[k] - Quaternion::I * dx[k]).norm();
                let dd = deriv.map_or(0.0, |d| (dx[k] - q(d[k])).norm());
                worst = worst.max(cr.max(dd) / scale);
            }
        }
        worst
    }

    /// `½(i - jg) ω j (i - jg)`.
    pub fn minimal_form(&self) -> QForm1 {
        let n = self.grid.len();
        let mut px = Vec::with_capacity(n);
        let mut py = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.ig(k);
            px.push(a * q(self.w[k]) * Quaternion::J * a * 0.5);
            py.push(a * q(self.w[k] * Complex64::i()) * Quaternion::J * a * 0.5);
        }
        QForm1 { grid: self.grid.clone(), px, py, stencil: Stencil::Fourth }
    }

    fn check(&self, cfg: &Settings) -> Result<()> {
        let r = self.holomorphy_residual(cfg.stencil);
        if r > cfg.tau_iso {
            return Err(Error::NotClosed { residual: r, tolerance: cfg.tau_iso });
        }
        Ok(())
    }
}

/// Minimal surface with `df = ½(i - jg)ω j(i - jg)` and `f(p0) = f0`.
pub fn weierstrass_minimal(
    wd: &WeierstrassData,
    p0: NodeIx,
    f0: Quaternion,
    cfg: &Settings,
) -> Result<PolarizedSurface> {
    wd.check(cfg)?;
    let f = integrate_form_tol(&wd.minimal_form(), p0, f0, cfg.tau_closed)?;
    Ok(PolarizedSurface::new(f).with_step("W"))
}

/// `x ↦ -i - 2(i + x)⁻¹`, Cj onto the unit sphere.
pub fn stereographic(x: Quaternion) -> Result<Quaternion> {
    Ok(-Quaternion::I - (Quaternion::I + x).inv()? * 2.0)
}

/// Which construction produced a cmc surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Darboux,
    T,
    Bryant,
}

/// Surface of constant mean curvature in a hyperbolic space, with the
/// Gauss maps that come with its construction.
#[derive(Clone, Debug, Serialize)]
pub struct CmcSurface {
    #[serde(flatten)]
    pub f: QField,
    pub model: &'static str,
    pub lambda: f64,
    /// Mean curvature the construction predicts; curvature of the space is `-h²`.
    pub mean_curvature: f64,
    pub route: Route,
    #[serde(skip)]
    pub gauss_hyperbolic: QField,
    #[serde(skip)]
    pub secondary_gauss: Option<QField>,
    #[serde(skip)]
    pub cousin: Option<PolarizedSurface>,
}

impl CmcSurface {
    fn new(f: QField, lambda: f64, h: f64, route: Route, gauss: QField) -> Self {
        CmcSurface {
            f,
            model: "halfspace",
            lambda,
            mean_curvature: h,
            route,
            gauss_hyperbolic: gauss,
            secondary_gauss: None,
            cousin: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

type Row = [Quaternion; 2];

fn bryant_coefficients(wd: &WeierstrassData, lambda: f64) -> Result<(Vec<Row>, Vec<Row>)> {
    let alpha = wd.minimal_form();
    let n = wd.grid.len();
    let mut cx = Vec::with_capacity(n);
    let mut cy = Vec::with_capacity(n);
    for k in 0..n {
        let ai = wd.ig(k).inv()?;
        let dgx = q(wd.dg[k]);
        let dgy = q(wd.dg[k] * Complex64::i());
        let beta = |d: Quaternion| ai * Quaternion::J * d * ai * (-2.0 * lambda);
        cx.push([alpha.px[k], beta(dgx)]);
        cy.push([alpha.py[k], beta(dgy)]);
    }
    Ok((cx, cy))
}

/// Integrate `df = f̂·α`, `df̂ = f·β` verbatim from `(f0, f̂0)`, with
/// `α = ½(i - jg)ω j(i - jg)`, `β = -2λ(i - jg)⁻¹ j dg (i - jg)⁻¹`.
pub fn bryant_system(
    wd: &WeierstrassData,
    lambda: f64,
    p0: NodeIx,
    f0: Quaternion,
    fh0: Quaternion,
    cfg: &Settings,
) -> Result<(QField, QField)> {
    wd.check(cfg)?;
    let (cx, cy) = bryant_coefficients(wd, lambda)?;
    let (rows, g) = march(&wd.grid, p0, [f0, fh0], &cx, &cy, |s: Row, c: Row| [s[1] * c[0], s[0] * c[1]])?;
    Ok((
        QField { grid: g.clone(), values: rows.iter().map(|r| r[0]).collect() },
        QField { grid: g, values: rows.iter().map(|r| r[1]).collect() },
    ))
}

/// Output of the Bryant type representation.
#[derive(Clone, Debug)]
pub struct BryantOutput {
    /// `f·a⁻¹` with hyperbolic Gauss map `f̂·b⁻¹`, where `(a, b)` solves the
    /// same system from `(1, 0)`.
    pub surface: CmcSurface,
    /// The first component `f` of the row from `(f0, 1)` read as an affine point.
    pub raw: QField,
}

/// Bryant type representation. The rows `(f, f̂)` are the first rows of a
/// frame solving `dF = FΦ`; the surface and its hyperbolic Gauss map are the
/// affine points of the frame's columns, completed by the row from `(1, 0)`.
pub fn bryant_surface(
    wd: &WeierstrassData,
    lambda: f64,
    p0: NodeIx,
    f0: Quaternion,
    cfg: &Settings,
) -> Result<BryantOutput> {
    let (f, fh) = bryant_system(wd, lambda, p0, f0, Quaternion::ONE, cfg)?;
    let (a, b) = bryant_system(wd, lambda, p0, Quaternion::ONE, Quaternion::ZERO, cfg)?;
    let project = |num: &QField, den: &QField| -> Result<QField> {
        let g = num.grid.intersect(&den.grid)?;
        let mut mask = g.mask_vec();
        let mut values = vec![Quaternion::ZERO; g.len()];
        for k in 0..g.len() {
            if !mask[k] {
                continue;
            }
            match den.values[k].inv_eps(cfg.eps_inv) {
                Ok(i) => values[k] = num.values[k] * i,
                Err(_) => mask[k] = false,
            }
        }
        Ok(QField { grid: g.with_mask(mask), values })
    };
    let surf = project(&f, &a)?;
    let gauss = project(&fh, &b)?;
    Ok(BryantOutput { surface: CmcSurface::new(surf, lambda, -2.0 * lambda, Route::Bryant, gauss), raw: f })
}

/// cmc surface `-jg + v₂v₁⁻¹` from Darboux's linear system
/// `dv₁ + λω j v₂ = 0`, `dv₂ - j dg v₁ = 0`; mean curvature `2λ`.
pub fn darboux_weierstrass(
    wd: &WeierstrassData,
    lambda: f64,
    p0: NodeIx,
    v0: QVec2,
    cfg: &Settings,
) -> Result<CmcSurface> {
    wd.check(cfg)?;
    let x0 = v0[1] * v0[0].inv()?;
    if x0.x.abs() <= 1e-12 * x0.norm().max(1.0) {
        return Err(Error::InitialOnBoundary);
    }
    let n = wd.grid.len();
    let mut cx = Vec::with_capacity(n);
    let mut cy = Vec::with_capacity(n);
    for k in 0..n {
        let w = wd.w[k];
        let d = wd.dg[k];
        cx.push([q(w) * Quaternion::J, Quaternion::J * q(d)]);
        cy.push([q(w * Complex64::i()) * Quaternion::J, Quaternion::J * q(d * Complex64::i())]);
    }
    let (vs, g) = march(&wd.grid, p0, v0, &cx, &cy, |v: QVec2, c: Row| {
        [-(c[0] * lambda * v[1]), c[1] * v[0]]
    })?;
    let mut mask = g.mask_vec();
    let mut values = vec![Quaternion::ZERO; n];
    let nh: Vec<Quaternion> = wd.g.iter().map(|&c| -(Quaternion::J * q(c))).collect();
    for k in 0..n {
        if !mask[k] {
            continue;
        }
        match vs[k][0].inv_eps(cfg.eps_inv) {
            Ok(i) => values[k] = nh[k] + vs[k][1] * i,
            Err(_) => mask[k] = false,
        }
    }
    if !mask[g.idx(p0)] {
        return Err(Error::AffineEscape(p0));
    }
    let g = g.with_mask(mask);
    let f = QField { grid: g.clone(), values };
    if f.max_over(|x| x.x.abs()) < 1e-10 {
        return Err(Error::DegenerateMeromorphicPair);
    }
    let gauss = QField { grid: g, values: nh };
    Ok(CmcSurface::new(f, lambda, 2.0 * lambda, Route::Darboux, gauss))
}

/// First and second fundamental forms and unit normal, by differences.
#[derive(Clone, Debug)]
pub struct FundamentalForms {
    pub grid: GridSpec,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub normal: Vec<Quaternion>,
}

impl FundamentalForms {
    pub fn mean_curvature(&self, k: usize) -> f64 {
        let (e, f, g) = (self.e[k], self.f[k], self.g[k]);
        (e * self.n[k] + g * self.l[k] - 2.0 * f * self.m[k]) / (2.0 * (e * g - f * f))
    }

    pub fn gauss_curvature(&self, k: usize) -> f64 {
        let (e, f, g) = (self.e[k], self.f[k], self.g[k]);
        (self.l[k] * self.n[k] - self.m[k] * self.m[k]) / (e * g - f * f)
    }
}

pub fn fundamental_forms(x: &QField, stencil: Stencil) -> Result<FundamentalForms> {
    let (fx, fy, ok) = partials(&x.grid, &x.values, stencil);
    let g0 = x.grid.with_mask((0..x.grid.len()).map(|k| x.grid.valid(k) && ok[k]).collect());
    let (fxx, fxy, ok1) = partials(&g0, &fx, stencil);
    let (_, fyy, ok2) = partials(&g0, &fy, stencil);
    let len = x.grid.len();
    let mut mask: Vec<bool> = (0..len).map(|k| g0.valid(k) && ok1[k] && ok2[k]).collect();
    let mut out = FundamentalForms {
        grid: g0.clone(),
        e: vec![0.0; len],
        f: vec![0.0; len],
        g: vec![0.0; len],
        l: vec![0.0; len],
        m: vec![0.0; len],
        n: vec![0.0; len],
        normal: vec![Quaternion::ZERO; len],
    };
    for k in 0..len {
        if !mask[k] {
            continue;
        }
        let c = fx[k].cross(fy[k]);
        if c.norm() < 1e-16 {
            mask[k] = false;
            continue;
        }
        let nk = c / c.norm();
        out.e[k] = fx[k].dot(fx[k]);
        out.f[k] = fx[k].dot(fy[k]);
        out.g[k] = fy[k].dot(fy[k]);
        out.l[k] = fxx[k].dot(nk);
        out.m[k] = fxy[k].dot(nk);
        out.n[k] = fyy[k].dot(nk);
        out.normal[k] = nk;
    }
    out.grid = g0.with_mask(mask);
    if out.grid.valid_count() == 0 {
        return Err(Error::DegenerateTangent(x.grid.center()));
    }
    Ok(out)
}

/// Hyperbolic mean curvature with its spread.
#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicCurvature {
    #[serde(skip)]
    pub field: ScalarField,
    pub mean: f64,
    pub std: f64,
    /// Orientation sign applied, fixed by majority vote.
    pub sign: f64,
    /// Nodes disagreeing with the majority sign.
    pub dissent: usize,
    /// Whether the surface was reflected into the upper half-space first.
    pub reflected: bool,
}

/// Reflection `x ↦ i x i` in the boundary plane `Cj`.
pub fn reflect(x: Quaternion) -> Quaternion {
    Quaternion::I * x * Quaternion::I
}

/// Mean curvature in the half-space model of curvature `-4λ²`:
/// `H = 2|λ|(t H_e + n_i)` with `t` the height, `H_e` and `n` Euclidean.
pub fn mean_curvature_hyperbolic(f: &QField, lambda: f64, cfg: &Settings) -> Result<HyperbolicCurvature> {
    let valid: Vec<usize> = (0..f.grid.len()).filter(|&k| f.grid.valid(k)).collect();
    let below = valid.iter().filter(|&&k| f.values[k].x < 0.0).count();
    let reflected = 2 * below > valid.len();
    let x = if reflected { f.map(reflect) } else { f.clone() };
    for &k in &valid {
        if x.values[k].x < EPS_HEIGHT {
            return Err(Error::BoundaryContact(x.grid.node(k)));
        }
    }
    let ff = fundamental_forms(&x, cfg.stencil)?;
    let mut vals = vec![0.0; ff.grid.len()];
    for k in (0..ff.grid.len()).filter(|&k| ff.grid.valid(k)) {
        let t = x.values[k].x;
        vals[k] = 2.0 * lambda.abs() * (t * ff.mean_curvature(k) + ff.normal[k].x);
    }
    let ks: Vec<usize> = (0..ff.grid.len()).filter(|&k| ff.grid.valid(k)).collect();
    let pos = ks.iter().filter(|&&k| vals[k] > 0.0).count();
    let sign = if 2 * pos >= ks.len() { 1.0 } else { -1.0 };
    let dissent = ks.iter().filter(|&&k| vals[k] * sign < 0.0).count();
    let field = ScalarField { grid: ff.grid, values: vals.iter().map(|v| v * sign).collect() };
    let (mean, std) = field.mean_std();
    Ok(HyperbolicCurvature { field, mean, std, sign, dissent, reflected })
}

fn to_quat(u: &UnitQuaternion<f64>) -> Quaternion {
    let c = u.quaternion();
    Quaternion::new(c.w, c.i, c.j, c.k)
}

/// Null vector of the smallest singular value of the rows `[|x|², x₁, x₂, x₃, 1]`.
fn fit_sphere(pts: &[Quaternion], with_quadratic: bool) -> Vec<f64> {
    let cols = if with_quadratic { 5 } else { 4 };
    let m = DMatrix::from_fn(pts.len(), cols, |r, c| {
        let p = pts[r];
        let v = [p.norm_sqr(), p.x, p.y, p.z, 1.0];
        if with_quadratic {
            v[c]
        } else {
            v[c + 1]
        }
    });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (imin, _) = svd.singular_values.iter().enumerate().fold((0, f64::MAX), |a, (i, &s)| if s < a.1 { (i, s) } else { a });
    vt.row(imin).iter().cloned().collect()
}

/// Möbius transformation carrying the generalized sphere through `boundary`
/// onto `Cj`, with the `surface` in the upper half-space. Returns the map
/// and its images of both fields.
pub fn halfspace_normalize(surface: &QField, boundary: &QField) -> Result<(QMatrix2, QField, QField)> {
    let pts: Vec<Quaternion> =
        (0..boundary.grid.len()).filter(|&k| boundary.grid.valid(k)).map(|k| boundary.values[k]).collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateQuadruple);
    }
    let c = fit_sphere(&pts, true);
    let bnorm = (c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
    let mut m = QMatrix2::IDENTITY;
    if c[0].abs() > 1e-9 * bnorm.max(c[4].abs()) {
        let centre = Quaternion::imag(c[1], c[2], c[3]) * (-0.5 / c[0]);
        let r = (centre.norm_sqr() - c[4] / c[0]).max(0.0).sqrt();
        let vs: Vec<Quaternion> =
            (0..surface.grid.len()).filter(|&k| surface.grid.valid(k)).map(|k| surface.values[k]).collect();
        let mean = vs.iter().fold(Quaternion::ZERO, |a, &b| a + b) / vs.len().max(1) as f64;
        let mut dir = mean - centre;
        if dir.norm() < 1e-12 {
            dir = Quaternion::I;
        }
        let pole = centre - dir / dir.norm() * r;
        // x ↦ (x - pole)⁻¹
        m = QMatrix2::new(Quaternion::ZERO, Quaternion::ONE, Quaternion::ONE, -pole);
    }
    let moved: Vec<Quaternion> = pts.iter().map(|&p| moebius_point(&m, p)).collect::<Result<_>>()?;
    let p = fit_sphere(&moved, false);
    let nrm = Vector3::new(p[0], p[1], p[2]);
    let len = nrm.norm();
    let (nrm, d) = (nrm / len, -p[3] / len);
    let rot = UnitQuaternion::rotation_between(&nrm, &Vector3::x())
        .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI));
    let r = to_quat(&rot);
    m = QMatrix2::diag(r, r) * m;
    m = QMatrix2::new(Quaternion::ONE, -Quaternion::I * d, Quaternion::ZERO, Quaternion::ONE) * m;
    let image = |x: &QField, m: &QMatrix2| x.try_map(|v| moebius_point(m, v).map(|y| y.im()));
    let s = image(surface, &m);
    let below = (0..s.grid.len()).filter(|&k| s.grid.valid(k) && s.values[k].x < 0.0).count();
    if 2 * below > s.grid.valid_count() {
        m = QMatrix2::diag(Quaternion::I, -Quaternion::I) * m;
    }
    Ok((m, image(surface, &m), image(boundary, &m)))
}

/// Conformal factor of the central sphere congruence, `e⁻²ᵘ = (H² - K)(E + G)/2`,
/// and the Liouville defect `max|Δu - e⁻²ᵘ|` away from umbilics and from
/// the one-sided stencils along the edge of the valid region.
pub fn spherical_type_certificate(s: &PolarizedSurface, cfg: &Settings) -> Result<(ScalarField, f64)> {
    let ff = fundamental_forms(&s.f, cfg.stencil)?;
    let len = ff.grid.len();
    let mut mask = ff.grid.mask_vec();
    let mut u = vec![0.0; len];
    for k in 0..len {
        if !mask[k] {
            continue;
        }
        let h = ff.mean_curvature(k);
        let d = h * h - ff.gauss_curvature(k);
        if 2.0 * d.max(0.0).sqrt() < EPS_UMBILIC {
            mask[k] = false;
            continue;
        }
        u[k] = -0.5 * (d * (ff.e[k] + ff.g[k]) / 2.0).ln();
    }
    // second derivatives are nested first differences: u is central four nodes in
    let uf = ScalarField { grid: erode(&ff.grid.with_mask(mask), 4), values: u };
    let lap = laplacian_with(&uf, Stencil::Fourth);
    let ks: Vec<usize> = (0..len).filter(|&k| lap.grid.valid(k)).collect();
    if ks.is_empty() {
        return Err(Error::UmbilicRegion);
    }
    let r = ks.iter().map(|&k| (lap.values[k] - (-2.0 * uf.values[k]).exp()).abs()).fold(0.0, f64::max);
    Ok((uf, r))
}

/// Connection form of a Ribaucour frame with `H = 0`, `Ĥ = 1`, `λ̂ = 0`:
/// `[[i/2(*du - e⁻ᵘdz̄ j), -λe⁻ᵘdz̄ j], [eᵘdz j, i/2(*du - e⁻ᵘdz̄ j)]]`.
pub fn cmc_connection_form(u: &ScalarField, ux: &ScalarField, uy: &ScalarField, lambda: f64) -> MatForm1 {
    let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
    MatForm1::from_fn(&u.grid, Stencil::Fourth, |n| {
        let (e, ei) = (u.values[n].exp(), (-u.values[n]).exp());
        let a = i * (-uy.values[n] / 2.0) - k * (ei / 2.0);
        let b = i * (ux.values[n] / 2.0) - j * (ei / 2.0);
        (
            QMatrix2::new(a, j * (-lambda * ei), j * e, a),
            QMatrix2::new(b, k * (lambda * ei), k * e, b),
        )
    })
}

/// Ribaucour frame of the example: `u` from the metric of the minimal family
/// member at `family_lambda`, frame parameter `lambda`, `F(p0) = Id`.
pub fn example_ribaucour_frame(
    grid: &GridSpec,
    p0: NodeIx,
    lambda: f64,
    family_lambda: f64,
    cfg: &Settings,
) -> Result<FrameField> {
    let parts: Vec<(f64, f64, f64)> = (0..grid.len()).map(|k| oracles::ribaucour_u(grid.z_at(k), family_lambda)).collect();
    let field = |f: fn(&(f64, f64, f64)) -> f64| ScalarField { grid: grid.clone(), values: parts.iter().map(f).collect() };
    let phi = cmc_connection_form(&field(|p| p.0), &field(|p| p.1), &field(|p| p.2), lambda);
    integrate_frame_tol(&phi, QMatrix2::IDENTITY, p0, cfg.tau_mc)
}

/// Real data of a Ribaucour connection form and its compatibility defects.
#[derive(Clone, Debug)]
pub struct RibaucourData {
    pub u: ScalarField,
    pub h: ScalarField,
    pub h_hat: ScalarField,
    pub lambda: ScalarField,
    pub lambda_hat: ScalarField,
    /// Largest off-pattern entry of `F⁻¹dF`, relative to `max|F⁻¹dF|`.
    pub pattern_residual: f64,
    /// `max|Δu + H²e²ᵘ - Ĥ²e⁻²ᵘ + 4λ̂e²ᵘ|`.
    pub gauss_residual: f64,
    /// Largest of the four Codazzi defects.
    pub codazzi_residual: f64,
}

/// Nodes whose `r` nearest neighbours along both axes are valid.
fn erode(g: &GridSpec, r: usize) -> GridSpec {
    let mut mask = vec![false; g.len()];
    for k in (0..g.len()).filter(|&k| g.valid(k)) {
        let (i, j) = g.node(k);
        if i < r || j < r || i + r >= g.nx || j + r >= g.ny {
            continue;
        }
        mask[k] = (1..=r).all(|d| {
            [(i - d, j), (i + d, j), (i, j - d), (i, j + d)].iter().all(|&n| g.valid(g.idx(n)))
        });
    }
    g.with_mask(mask)
}

/// Read `u, H, Ĥ, λ, λ̂` off `Φ = F⁻¹dF`.
pub fn ribaucour_data_extract(frame: &FrameField, cfg: &Settings) -> Result<RibaucourData> {
    let (dx, dy, ok) = partials(&frame.grid, &frame.values, cfg.stencil);
    let len = frame.grid.len();
    let mut mask: Vec<bool> = (0..len).map(|k| frame.grid.valid(k) && ok[k]).collect();
    let mut phis = vec![(QMatrix2::ZERO, QMatrix2::ZERO); len];
    for k in 0..len {
        if !mask[k] {
            continue;
        }
        match frame.values[k].inverse() {
            Ok(fi) => phis[k] = (fi * dx[k], fi * dy[k]),
            Err(_) => mask[k] = false,
        }
    }
    let grid = frame.grid.with_mask(mask);
    let ks: Vec<usize> = (0..len).filter(|&k| grid.valid(k)).collect();
    let mut fields = [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    for &k in &ks {
        let (px, py) = phis[k];
        let u = px.c.norm().ln();
        let (e, ei) = (u.exp(), (-u).exp());
        let a = -2.0 * px.a.z;
        let b = 2.0 * py.a.y;
        let (p, qq) = (px.b.y, py.b.z);
        fields[0][k] = u;
        fields[1][k] = (a + b) * ei / 2.0;
        fields[2][k] = (a - b) * e / 2.0;
        fields[3][k] = (qq - p) * e / 2.0;
        fields[4][k] = (p + qq) * ei / 2.0;
    }
    let sf = |v: &Vec<f64>| ScalarField { grid: grid.clone(), values: v.clone() };
    // compatibility equations only where every difference is central
    let inner = erode(&grid, 2);
    let si = |s: &ScalarField| ScalarField { grid: inner.clone(), values: s.values.clone() };
    let [u, h, hh, lam, lamh] = [&fields[0], &fields[1], &fields[2], &fields[3], &fields[4]].map(sf);
    let (ux, uy) = d_scalar(&u, cfg.stencil);

    let mut off: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &k in ks.iter().filter(|&&k| ux.grid.valid(k)) {
        let (px, py) = phis[k];
        let e = u.values[k].exp();
        scale = scale.max(px.norm()).max(py.norm());
        let dev = [
            px.a.w,
            px.a.y,
            px.a.x + uy.values[k] / 2.0,
            py.a.w,
            py.a.z,
            py.a.x - ux.values[k] / 2.0,
            px.b.w,
            px.b.x,
            px.b.z,
            py.b.w,
            py.b.x,
            py.b.y,
            (px.c - Quaternion::J * e).norm(),
            (py.c - Quaternion::K * e).norm(),
            (px.d - px.a).norm(),
            (py.d - py.a).norm(),
        ];
        off = dev.iter().fold(off, |m, v| m.max(v.abs()));
    }
    let pattern_residual = off / scale.max(f64::MIN_POSITIVE);
    if pattern_residual > TAU_PATTERN {
        return Err(Error::PatternMismatch(pattern_residual));
    }

    let lap = laplacian_with(&si(&u), Stencil::Fourth);
    let mut gauss_residual: f64 = 0.0;
    for k in (0..len).filter(|&k| lap.grid.valid(k)) {
        let (e2, em2) = ((2.0 * u.values[k]).exp(), (-2.0 * u.values[k]).exp());
        let rhs = -h.values[k].powi(2) * e2 + hh.values[k].powi(2) * em2 - 4.0 * lamh.values[k] * e2;
        gauss_residual = gauss_residual.max((lap.values[k] - rhs).abs());
    }
    let d = |s: &ScalarField| d_scalar(&si(s), cfg.stencil);
    let ((hx, hy), (hhx, hhy), (lx, ly), (lhx, lhy)) = (d(&h), d(&hh), d(&lam), d(&lamh));
    let mut codazzi_residual: f64 = 0.0;
    for k in (0..len).filter(|&k| hx.grid.valid(k)) {
        let (e, ei) = (u.values[k].exp(), (-u.values[k]).exp());
        let defects = [
            hx.values[k] * e - hhx.values[k] * ei,
            hy.values[k] * e + hhy.values[k] * ei,
            lhx.values[k] * e + lx.values[k] * ei,
            lhy.values[k] * e - ly.values[k] * ei,
        ];
        codazzi_residual = defects.iter().fold(codazzi_residual, |m, v| m.max(v.abs()));
    }
    Ok(RibaucourData {
        u,
        h,
        h_hat: hh,
        lambda: lam,
        lambda_hat: lamh,
        pattern_residual,
        gauss_residual,
        codazzi_residual,
    })
}

/// Residuals of the isometric deformation `I_λ = I₀`, `II_λ = II₀ - 2λI₀`.
#[derive(Clone, Debug, Serialize)]
pub struct UmeharaYamadaReport {
    /// `max|I_λ - I₀| / max|I₀|` with `I_λ` from the half-space metric.
    pub first_form: f64,
    /// Same for the second forms, best over normal orientations.
    pub second_form: f64,
    /// Mean curvature from the trace of `I_λ⁻¹II_λ`.
    pub mean: f64,
    pub std: f64,
    /// `max|e²ᵘ - E₀| / max E₀` when a frame metric is supplied.
    pub frame_metric: Option<f64>,
}

/// Compare the cmc surface `cmc` in the half-space of curvature `-4λ²`
/// with its minimal cousin node by node.
pub fn umehara_yamada_check(
    minimal: &QField,
    cmc: &QField,
    lambda: f64,
    frame_u: Option<&ScalarField>,
    cfg: &Settings,
) -> Result<UmeharaYamadaReport> {
    let below = (0..cmc.grid.len()).filter(|&k| cmc.grid.valid(k) && cmc.values[k].x < 0.0).count();
    let x = if 2 * below > cmc.grid.valid_count() { cmc.map(reflect) } else { cmc.clone() };
    let a = fundamental_forms(minimal, cfg.stencil)?;
    let b = fundamental_forms(&x, cfg.stencil)?;
    let grid = a.grid.intersect(&b.grid)?;
    let ks: Vec<usize> = (0..grid.len()).filter(|&k| grid.valid(k)).collect();
    let scale = ks.iter().map(|&k| a.e[k].max(a.g[k])).fold(0.0, f64::max);
    let mut first: f64 = 0.0;
    let mut second = [0.0f64; 4];
    let mut hs = Vec::with_capacity(ks.len());
    for &k in &ks {
        let t = x.values[k].x;
        if t < EPS_HEIGHT {
            return Err(Error::BoundaryContact(grid.node(k)));
        }
        let phi = 1.0 / (2.0 * lambda.abs() * t);
        let ni = b.normal[k].x / t;
        let i1 = [b.e[k] * phi * phi, b.f[k] * phi * phi, b.g[k] * phi * phi];
        let i2 = [phi * (b.l[k] + ni * b.e[k]), phi * (b.m[k] + ni * b.f[k]), phi * (b.n[k] + ni * b.g[k])];
        let i0 = [a.e[k], a.f[k], a.g[k]];
        let ii0 = [a.l[k], a.m[k], a.n[k]];
        for c in 0..3 {
            first = first.max((i1[c] - i0[c]).abs());
        }
        for (s, (s1, s2)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].iter().enumerate() {
            for c in 0..3 {
                let want = s2 * ii0[c] - 2.0 * lambda * i0[c];
                second[s] = second[s].max((s1 * i2[c] - want).abs());
            }
        }
        let det = i1[0] * i1[2] - i1[1] * i1[1];
        hs.push((i1[0] * i2[2] + i1[2] * i2[0] - 2.0 * i1[1] * i2[1]) / (2.0 * det));
    }
    let best = (0..4).min_by(|&p, &r| second[p].total_cmp(&second[r])).unwrap_or(0);
    let s1 = if best < 2 { 1.0 } else { -1.0 };
    let hs: Vec<f64> = hs.iter().map(|h| h * s1).collect();
    let n = hs.len().max(1) as f64;
    let mean = hs.iter().sum::<f64>() / n;
    let std = (hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n).sqrt();
    let frame_metric = frame_u.map(|u| {
        ks.iter()
            .filter(|&&k| u.grid.valid(k))
            .map(|&k| ((2.0 * u.values[k]).exp() - a.e[k]).abs())
            .fold(0.0, f64::max)
            / scale
    });
    Ok(UmeharaYamadaReport { first_form: first / scale, second_form: second[best] / scale, mean, std, frame_metric })
}

/// Minimal cousin `C((n - p)⁻¹)` of the Darboux transform through `p` of the
/// T-transformed Gauss map `n`.
pub fn minimal_cousin(n: &PolarizedSurface, p: Quaternion, p0: NodeIx, cfg: &Settings) -> Result<PolarizedSurface> {
    let inv = PolarizedSurface { f: inversion(&n.f, p, cfg.eps_inv), ..n.clone() };
    Ok(christoffel(&inv, p0, Quaternion::ZERO, cfg)?.with_step("cousin"))
}

/// A cmc surface and a dual obtained by swapping its Gauss maps.
#[derive(Clone, Debug)]
pub struct DualPair {
    pub f: CmcSurface,
    pub dual: CmcSurface,
}

/// `f = D_λ n_h` through `n_h(p0) + v₂v₁⁻¹` and its dual `f# = D_{-λ} n_s`
/// through `f(p0)`, where `n_s = T_λ n_h` is the secondary Gauss map.
pub fn dual_cmc(wd: &WeierstrassData, lambda: f64, v0: QVec2, p0: NodeIx, cfg: &Settings) -> Result<DualPair> {
    let nh = PolarizedSurface::new(QField { grid: wd.grid.clone(), values: wd.g.iter().map(|&c| -(Quaternion::J * q(c))).collect() });
    let mut f = darboux_weierstrass(wd, lambda, p0, v0, cfg)?;
    let ns = t_transform(&nh, lambda, QMatrix2::IDENTITY, p0, cfg)?.surface;
    let fp = f.f.at(p0);
    let back = t_transform(&ns, -lambda, QMatrix2::IDENTITY, p0, cfg)?.surface;
    let d = darboux_linear(&ns, -lambda, p0, [Quaternion::ONE, fp - ns.f.at(p0)], cfg)?;
    f.secondary_gauss = Some(ns.f.clone());
    f.cousin = Some(minimal_cousin(&ns, fp, p0, cfg)?);
    let mut dual = CmcSurface::new(d.f, -lambda, -2.0 * lambda, Route::Darboux, ns.f.clone());
    dual.secondary_gauss = Some(back.f.clone());
    dual.cousin = Some(minimal_cousin(&back, fp, p0, cfg)?);
    Ok(DualPair { f, dual })
}

/// Dual of the dual: `D_λ(T_{-λ} n_s)` through `f(p0)`.
pub fn double_dual(pair: &DualPair, p0: NodeIx, cfg: &Settings) -> Result<QField> {
    let ns = PolarizedSurface::new(pair.dual.gauss_hyperbolic.clone());
    let back = t_transform(&ns, pair.dual.lambda, QMatrix2::IDENTITY, p0, cfg)?.surface;
    let fp = pair.dual.f.at(p0);
    Ok(darboux_linear(&back, pair.f.lambda, p0, [Quaternion::ONE, fp - back.f.at(p0)], cfg)?.f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::moebius_equivalent;

    fn grid(h: f64) -> GridSpec {
        GridSpec::square(1.0, h).unwrap()
    }

    fn max_err(f: &QField, o: impl Fn(Complex64) -> Quaternion) -> f64 {
        (0..f.grid.len())
            .filter(|&k| f.grid.valid(k))
            .map(|k| (f.values[k] - o(f.grid.z_at(k))).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn stereographic_values() {
        assert!((stereographic(Quaternion::ZERO).unwrap() - Quaternion::I).norm() < 1e-15);
        let far = stereographic(Quaternion::J * 1e6).unwrap();
        assert!((far + Quaternion::I).norm() < 1e-5);
        let s = stereographic(Quaternion::imag(0.0, 0.3, -2.0)).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-14 && s.w.abs() < 1e-15);
    }

    #[test]
    fn weierstrass_reproduces_the_family() {
        let cfg = Settings::default();
        let g = grid(1.0 / 32.0);
        let p0 = g.center();
        for lam in [0.0, 1.0] {
            let wd = WeierstrassData::family(&g, lam);
            let f = weierstrass_minimal(&wd, p0, Quaternion::ZERO, &cfg).unwrap();
            let e = max_err(&f.f, |z| oracles::oracle_minimal_family(z, lam).unwrap());
            assert!(e < 1e-6, "{lam}: {e}");
        }
    }

    #[test]
    fn enneper_is_minimal() {
        let cfg = Settings::default();
        let g = grid(1.0 / 32.0);
        let f = weierstrass_minimal(&WeierstrassData::enneper(&g), g.center(), Quaternion::ZERO, &cfg).unwrap();
        let ff = fundamental_forms(&f.f, Stencil::Fourth).unwrap();
        let h = (0..ff.grid.len()).filter(|&k| ff.grid.valid(k)).map(|k| ff.mean_curvature(k).abs()).fold(0.0, f64::max);
        assert!(h < 1e-4, "{h}");
    }

    #[test]
    fn holomorphy_rejects_conjugate_data() {
        let g = grid(1.0 / 16.0);
        let good = WeierstrassData::enneper(&g);
        assert!(good.holomorphy_residual(Stencil::Fourth) < 1e-12);
        let bad = WeierstrassData::sample(&g, |z| z.conj(), |_| Complex64::new(1.0, 0.0), |_| Complex64::new(1.0, 0.0));
        assert!(bad.holomorphy_residual(Stencil::Fourth) > 0.5);
    }

    #[test]
    fn darboux_weierstrass_matches_closed_form() {
        let cfg = Settings::default();
        let g = grid(1.0 / 32.0);
        let wd = WeierstrassData::enneper(&g);
        let s = darboux_weierstrass(&wd, 1.0, g.center(), [Quaternion::ONE, -Quaternion::I], &cfg).unwrap();
        assert!(max_err(&s.f, |z| oracles::oracle_darboux(z, 1.0).unwrap()) < 1e-6);
        assert!(matches!(
            darboux_weierstrass(&wd, 1.0, g.center(), [Quaternion::ONE, Quaternion::J], &cfg),
            Err(Error::InitialOnBoundary)
        ));
    }

    #[test]
    fn horosphere_has_constant_curvature() {
        let g = grid(1.0 / 8.0);
        let f = QField::sample(&g, |z| Quaternion::imag(0.7, z.re, z.im));
        let h = mean_curvature_hyperbolic(&f, 0.5, &Settings::default()).unwrap();
        assert!((h.mean - 1.0).abs() < 1e-12 && h.std < 1e-12);
    }

    #[test]
    fn darboux_cmc_has_mean_curvature_two_lambda() {
        let cfg = Settings::default();
        let g = grid(1.0 / 32.0);
        for lam in [1.0, 0.5] {
            let s = darboux_weierstrass(&WeierstrassData::enneper(&g), lam, g.center(), [Quaternion::ONE, -Quaternion::I], &cfg)
                .unwrap();
            let h = mean_curvature_hyperbolic(&s.f, lam, &cfg).unwrap();
            assert!((h.mean - 2.0 * lam).abs() < 1e-4 && h.std < 1e-4, "{lam} {h:?}");
            assert_eq!(h.dissent, 0);
        }
    }

    #[test]
    fn liouville_certificates() {
        let cfg = Settings::default();
        let g = grid(1.0 / 32.0);
        let en = PolarizedSurface::new(QField::sample(&g, |z| oracles::oracle_minimal_family(z, 0.0).unwrap()));
        let (_, r) = spherical_type_certificate(&en, &cfg).unwrap();
        assert!(r < 1e-3, "enneper {r}");
        let cyl = PolarizedSurface::new(QField::sample(&g, |z| Quaternion::imag(z.im, z.re.cos(), z.re.sin())));
        let (u, r) = spherical_type_certificate(&cyl, &cfg).unwrap();
        assert!((r - 0.25).abs() < 1e-3, "{r}");
        assert!(u.valid_values().all(|v| (v - 2f64.ln()).abs() < 1e-4));
    }

    #[test]
    fn ribaucour_example_frame() {
        let cfg = Settings::default();
        let g = grid(1.0 / 64.0);
        let frame = example_ribaucour_frame(&g, g.center(), -1.0, 1.0, &cfg).unwrap();
        let data = ribaucour_data_extract(&frame, &cfg).unwrap();
        assert!(data.h.max_abs() < 1e-5, "{}", data.h.max_abs());
        assert!(data.h_hat.valid_values().all(|v| (v - 1.0).abs() < 1e-5));
        assert!(data.lambda_hat.max_abs() < 1e-5);
        assert!(data.lambda.valid_values().all(|v| (v + 1.0).abs() < 1e-5));
        assert!(data.gauss_residual < 1e-3, "{}", data.gauss_residual);
        // second envelope is the plane, first the cmc surface D_1(-jz)
        let f = QField {
            grid: frame.grid.clone(),
            values: frame.values.iter().map(|m| crate::quat::affine(m.col(0)).unwrap_or(Quaternion::ZERO)).collect(),
        };
        let o = QField::sample(&g, |z| oracles::oracle_darboux(z, 1.0).unwrap());
        let (ok, r) = moebius_equivalent(&f, &o, 20, 2, 1e-5).unwrap();
        assert!(ok, "{r}");
    }

    #[test]
    fn halfspace_normalization_of_a_sphere() {
        let g = grid(1.0 / 32.0);
        // plane Cj shifted and inverted into a sphere, surface the horosphere t = 1
        let m = QMatrix2::new(Quaternion::ONE, Quaternion::I * 0.3, Quaternion::I * 0.2, Quaternion::ONE);
        let b = QField::sample(&g, |z| moebius_point(&m, Quaternion::cj(z)).unwrap());
        let s = QField::sample(&g, |z| moebius_point(&m, Quaternion::I + Quaternion::cj(z)).unwrap());
        let (_, s2, b2) = halfspace_normalize(&s, &b).unwrap();
        assert!(b2.max_over(|x| x.x.abs()) < 1e-9);
        assert!((0..s2.grid.len()).filter(|&k| s2.grid.valid(k)).all(|k| s2.values[k].x > 0.0));
        let h = mean_curvature_hyperbolic(&s2, 0.5, &Settings::default()).unwrap();
        assert!((h.mean.abs() - 1.0).abs() < 1e-6, "{h:?}");
    }

    #[test]
    fn route_triangle() {
        let cfg = Settings::default();
        let g = grid(1.0 / 64.0);
        let p0 = g.center();
        let lam = 0.5;
        let d = darboux_weierstrass(&WeierstrassData::enneper(&g), lam, p0, [Quaternion::ONE, -Quaternion::I], &cfg).unwrap();
        let fam = WeierstrassData::family(&g, lam);
        let m0 = weierstrass_minimal(&fam, p0, Quaternion::ZERO, &cfg).unwrap();
        let t = t_transform(&m0, -lam, QMatrix2::IDENTITY, p0, &cfg).unwrap();
        let b = bryant_surface(&fam, -lam, p0, Quaternion::ZERO, &cfg).unwrap();
        for (a, c) in [(&d.f, &t.surface.f), (&d.f, &b.surface.f), (&t.surface.f, &b.surface.f)] {
            let (ok, r) = moebius_equivalent(a, c, 20, 3, 1e-5).unwrap();
            assert!(ok, "{r}");
        }
        let (ok, _) = moebius_equivalent(&d.f, &b.raw, 20, 3, 1e-5).unwrap();
        assert!(!ok);
        let (_, s2, b2) = halfspace_normalize(&t.surface.f, &t.second_point).unwrap();
        assert!(b2.max_over(|x| x.x.abs()) < 1e-6);
        let h = mean_curvature_hyperbolic(&s2, -lam, &cfg).unwrap();
        assert!((h.mean - 1.0).abs() < 1e-5 && h.std < 1e-4, "{h:?}");
    }

    #[test]
    fn isometric_deformation() {
        let cfg = Settings::default();
        let g = grid(1.0 / 64.0);
        let lam = 0.5;
        let d = darboux_weierstrass(&WeierstrassData::enneper(&g), lam, g.center(), [Quaternion::ONE, -Quaternion::I], &cfg).unwrap();
        let m = QField::sample(&g, |z| oracles::oracle_minimal_family(z, lam).unwrap());
        let u = ScalarField { grid: g.clone(), values: (0..g.len()).map(|k| oracles::ribaucour_u(g.z_at(k), lam).0).collect() };
        let r = umehara_yamada_check(&m, &d.f, lam, Some(&u), &cfg).unwrap();
        assert!(r.first_form < 1e-6 && r.second_form < 1e-4, "{r:?}");
        assert!((r.mean + 2.0 * lam).abs() < 1e-5);
        assert!(r.frame_metric.unwrap() < 1e-6, "{r:?}");
    }

    #[test]
    fn duals() {
        let cfg = Settings::default();
        let g = grid(1.0 / 64.0);
        let p0 = g.center();
        let pair = dual_cmc(&WeierstrassData::enneper(&g), 1.0, [Quaternion::ONE, -Quaternion::I], p0, &cfg).unwrap();
        assert!(max_err(&pair.dual.f, |z| oracles::oracle_darboux_of_t(z, 1.0).unwrap()) < 5e-6);
        let dd = double_dual(&pair, p0, &cfg).unwrap();
        assert!(dd.max_dist(&pair.f.f).unwrap() < 1e-5);
        let en = QField::sample(&g, |z| oracles::oracle_minimal_family(z, 0.0).unwrap());
        let cat = QField::sample(&g, |z| oracles::oracle_minimal_family(z, 1.0).unwrap());
        let (ok, r) = moebius_equivalent(&pair.dual.cousin.as_ref().unwrap().f, &en, 20, 4, 1e-5).unwrap();
        assert!(ok, "{r}");
        let (ok, r) = moebius_equivalent(&pair.f.cousin.as_ref().unwrap().f, &cat, 20, 4, 1e-5).unwrap();
        assert!(ok, "{r}");
    }

    #[test]
    fn minimal_family_is_christoffel_of_projected_t() {
        let cfg = Settings::default();
        let g = grid(1.0 / 64.0);
        for lam in [0.5, 1.0] {
            let t = PolarizedSurface::new(QField::sample(&g, |z| stereographic(oracles::oracle_t(z, lam).unwrap()).unwrap()))
                .with_polarization(crate::transforms::Polarization::Dzbar2);
            let c = christoffel(&t, g.center(), Quaternion::ZERO, &cfg).unwrap();
            let m = QField::sample(&g, |z| oracles::oracle_minimal_family(z, lam).unwrap());
            let r = c.f.max_dist_mod_translation(&m).unwrap();
            assert!(r < 1e-5, "{lam}: {r}");
        }
    }
}
