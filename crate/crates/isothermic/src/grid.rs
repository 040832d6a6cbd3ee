//! Sampled fields on a uniform grid in conformal coordinates z = x + iy,
//! finite differences, 1-forms and path integration.
//!
//! Nodes are indexed `(i, j)` with `i` along x and `j` along y; storage is
//! row-major (`j * nx + i`). Integration always runs up and down the column
//! through the base node first and then out along every row.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, NodeIx, Result};
use crate::quat::{study_det, QMatrix2, Quaternion};

/// Default tolerance on normalized closedness and Maurer-Cartan residuals.
pub const TAU_CLOSED: f64 = 1e-6;
pub const TAU_MC: f64 = 1e-6;
const BLOWUP: f64 = 1e12;

/// Order of the finite difference operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    #[default]
    Second,
    Fourth,
}

/// Values that can be combined linearly: scalars, quaternions, matrices, vectors.
pub trait Linear: Copy {
    fn zero() -> Self;
    fn lin(terms: &[(f64, Self)]) -> Self;
    fn size(&self) -> f64;
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    fn lin(terms: &[(f64, Self)]) -> Self {
        terms.iter().map(|(a, v)| a * v).sum()
    }
    fn size(&self) -> f64 {
        self.abs()
    }
}

impl Linear for Quaternion {
    fn zero() -> Self {
        Quaternion::ZERO
    }
    fn lin(terms: &[(f64, Self)]) -> Self {
        terms.iter().fold(Quaternion::ZERO, |s, (a, v)| s + *v * *a)
    }
    fn size(&self) -> f64 {
        self.norm()
    }
}

impl Linear for QMatrix2 {
    fn zero() -> Self {
        QMatrix2::ZERO
    }
    fn lin(terms: &[(f64, Self)]) -> Self {
        terms.iter().fold(QMatrix2::ZERO, |s, (a, v)| s + *v * *a)
    }
    fn size(&self) -> f64 {
        self.norm()
    }
}

impl Linear for [Quaternion; 2] {
    fn zero() -> Self {
        [Quaternion::ZERO; 2]
    }
    fn lin(terms: &[(f64, Self)]) -> Self {
        terms.iter().fold([Quaternion::ZERO; 2], |s, (a, v)| {
            [s[0] + v[0] * *a, s[1] + v[1] * *a]
        })
    }
    fn size(&self) -> f64 {
        (self[0].norm_sqr() + self[1].norm_sqr()).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<bool>>,
}

impl GridSpec {
    pub fn new(x0: f64, y0: f64, hx: f64, hy: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(hx > 0.0) || !(hy > 0.0) {
            return Err(Error::InvalidGrid(format!("spacings must be positive, got {hx}, {hy}")));
        }
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(Error::InvalidGrid(format!("anisotropic spacing hx={hx} hy={hy}")));
        }
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4x4 nodes, got {nx}x{ny}")));
        }
        Ok(GridSpec { x0, y0, h: hx, nx, ny, mask: None })
    }

    /// `[-a, a]²` sampled with spacing `h` (`a / h` must be an integer).
    pub fn square(a: f64, h: f64) -> Result<Self> {
        let m = (a / h).round() as usize;
        GridSpec::new(-a, -a, h, h, 2 * m + 1, 2 * m + 1)
    }

    /// Same layout without a mask.
    pub fn unmasked(&self) -> Self {
        GridSpec { mask: None, ..self.clone() }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, (i, j): NodeIx) -> usize {
        j * self.nx + i
    }

    pub fn node(&self, k: usize) -> NodeIx {
        (k % self.nx, k / self.nx)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    pub fn z(&self, (i, j): NodeIx) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    pub fn z_at(&self, k: usize) -> Complex64 {
        self.z(self.node(k))
    }

    /// Node nearest to the coordinate `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> NodeIx {
        let i = ((x - self.x0) / self.h).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((y - self.y0) / self.h).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    pub fn center(&self) -> NodeIx {
        (self.nx / 2, self.ny / 2)
    }

    pub fn valid(&self, k: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[k])
    }

    pub fn valid_count(&self) -> usize {
        (0..self.len()).filter(|&k| self.valid(k)).count()
    }

    pub fn mask_vec(&self) -> Vec<bool> {
        self.mask.clone().unwrap_or_else(|| vec![true; self.len()])
    }

    /// Replace the mask; an all-true mask is stored as `None`.
    pub fn with_mask(&self, mask: Vec<bool>) -> Self {
        let mask = if mask.iter().all(|&b| b) { None } else { Some(mask) };
        GridSpec { mask, ..self.clone() }
    }

    /// Intersection of the masks of two grids with the same layout.
    pub fn intersect(&self, other: &GridSpec) -> Result<Self> {
        self.check_same(other)?;
        let m = (0..self.len()).map(|k| self.valid(k) && other.valid(k)).collect();
        Ok(self.with_mask(m))
    }

    pub fn same_layout(&self, o: &GridSpec) -> bool {
        self.nx == o.nx
            && self.ny == o.ny
            && (self.h - o.h).abs() <= 1e-12 * self.h
            && (self.x0 - o.x0).abs() <= 1e-12 * (1.0 + self.x0.abs())
            && (self.y0 - o.y0).abs() <= 1e-12 * (1.0 + self.y0.abs())
    }

    pub fn check_same(&self, o: &GridSpec) -> Result<()> {
        if self.same_layout(o) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn check_node(&self, p: NodeIx) -> Result<()> {
        if p.0 >= self.nx || p.1 >= self.ny || !self.valid(self.idx(p)) {
            return Err(Error::MaskedRegion(p));
        }
        Ok(())
    }
}

/// Quaternion-valued field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QField {
    pub grid: GridSpec,
    pub values: Vec<Quaternion>,
}

impl QField {
    pub fn sample(grid: &GridSpec, f: impl Fn(Complex64) -> Quaternion) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.z_at(k))).collect();
        QField { grid: grid.clone(), values }
    }

    /// Sample a fallible function; failing nodes are masked.
    pub fn try_sample(grid: &GridSpec, f: impl Fn(Complex64) -> Result<Quaternion>) -> Self {
        let mut mask = grid.mask_vec();
        let values = (0..grid.len())
            .map(|k| match f(grid.z_at(k)) {
                Ok(q) => q,
                Err(_) => {
                    mask[k] = false;
                    Quaternion::ZERO
                }
            })
            .collect();
        QField { grid: grid.with_mask(mask), values }
    }

    pub fn constant(grid: &GridSpec, q: Quaternion) -> Self {
        QField { grid: grid.clone(), values: vec![q; grid.len()] }
    }

    pub fn at(&self, p: NodeIx) -> Quaternion {
        self.values[self.grid.idx(p)]
    }

    pub fn map(&self, f: impl Fn(Quaternion) -> Quaternion) -> Self {
        QField { grid: self.grid.clone(), values: self.values.iter().map(|&q| f(q)).collect() }
    }

    /// Pointwise map that may fail; failing nodes are masked.
    pub fn try_map(&self, f: impl Fn(Quaternion) -> Result<Quaternion>) -> Self {
        let mut mask = self.grid.mask_vec();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &q)| {
                if !mask[k] {
                    return Quaternion::ZERO;
                }
                f(q).unwrap_or_else(|_| {
                    mask[k] = false;
                    Quaternion::ZERO
                })
            })
            .collect();
        QField { grid: self.grid.with_mask(mask), values }
    }

    pub fn zip_map(
        &self,
        o: &QField,
        f: impl Fn(Quaternion, Quaternion) -> Quaternion,
    ) -> Result<Self> {
        let grid = self.grid.intersect(&o.grid)?;
        let values = self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(QField { grid, values })
    }

    /// Maximum of `g` over unmasked nodes (0 when everything is masked).
    pub fn max_over(&self, g: impl Fn(Quaternion) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.valid(*k))
            .map(|(_, &q)| g(q))
            .fold(0.0, f64::max)
    }

    /// Max pointwise distance on nodes valid in both fields.
    pub fn max_dist(&self, o: &QField) -> Result<f64> {
        Ok(self.zip_map(o, |a, b| a - b)?.max_over(Quaternion::norm))
    }

    /// Max distance after removing the best constant offset (mean difference).
    pub fn max_dist_mod_translation(&self, o: &QField) -> Result<f64> {
        let d = self.zip_map(o, |a, b| a - b)?;
        let (mut s, mut n) = (Quaternion::ZERO, 0.0);
        for (k, &q) in d.values.iter().enumerate() {
            if d.grid.valid(k) {
                s += q;
                n += 1.0;
            }
        }
        let mean = if n > 0.0 { s / n } else { s };
        Ok(d.max_over(|q| (q - mean).norm()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: QField = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    /// Shape checks for deserialized fields.
    pub fn validate(&self) -> Result<()> {
        let g = GridSpec::new(self.grid.x0, self.grid.y0, self.grid.h, self.grid.h, self.grid.nx, self.grid.ny)?;
        if self.values.len() != g.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}x{} grid",
                self.values.len(),
                g.nx,
                g.ny
            )));
        }
        if let Some(m) = &self.grid.mask {
            if m.len() != g.len() {
                return Err(Error::InvalidGrid("mask length mismatch".into()));
            }
        }
        Ok(())
    }
}

/// Real-valued field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn sample(grid: &GridSpec, f: impl Fn(Complex64) -> f64) -> Self {
        ScalarField { grid: grid.clone(), values: (0..grid.len()).map(|k| f(grid.z_at(k))).collect() }
    }

    pub fn at(&self, p: NodeIx) -> f64 {
        self.values[self.grid.idx(p)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().enumerate().filter(|(k, _)| self.grid.valid(*k)).map(|(_, &v)| v)
    }

    pub fn max_abs(&self) -> f64 {
        self.valid_values().map(f64::abs).fold(0.0, f64::max)
    }

    /// Mean and standard deviation over unmasked nodes.
    pub fn mean_std(&self) -> (f64, f64) {
        let v: Vec<f64> = self.valid_values().collect();
        if v.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

/// Quaternion-valued 1-form `px dx + py dy`.
///
/// `stencil` records the difference operator the form is compatible with:
/// forms produced by `d_field_with(_, s)` are exactly closed for the curl
/// built from the same operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QForm1 {
    pub grid: GridSpec,
    pub px: Vec<Quaternion>,
    pub py: Vec<Quaternion>,
    pub stencil: Stencil,
}

impl QForm1 {
    /// Sample an analytic form; tagged with the fourth order operator.
    pub fn sample(grid: &GridSpec, f: impl Fn(Complex64) -> (Quaternion, Quaternion)) -> Self {
        let (px, py) = (0..grid.len()).map(|k| f(grid.z_at(k))).unzip();
        QForm1 { grid: grid.clone(), px, py, stencil: Stencil::Fourth }
    }

    pub fn eval(&self, k: usize) -> (Quaternion, Quaternion) {
        (self.px[k], self.py[k])
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&k| self.grid.valid(k))
            .map(|k| self.px[k].norm().max(self.py[k].norm()))
            .fold(0.0, f64::max)
    }
}

/// Matrix-valued 1-form, e.g. a connection form Φ with dF = FΦ.
#[derive(Clone, Debug, PartialEq)]
pub struct MatForm1 {
    pub grid: GridSpec,
    pub px: Vec<QMatrix2>,
    pub py: Vec<QMatrix2>,
    pub stencil: Stencil,
}

impl MatForm1 {
    pub fn from_fn(
        grid: &GridSpec,
        stencil: Stencil,
        f: impl Fn(usize) -> (QMatrix2, QMatrix2),
    ) -> Self {
        let (px, py) = (0..grid.len()).map(f).unzip();
        MatForm1 { grid: grid.clone(), px, py, stencil }
    }

    /// Build from entry forms; `None` entries vanish.
    pub fn from_entries(
        a: Option<&QForm1>,
        b: Option<&QForm1>,
        c: Option<&QForm1>,
        d: Option<&QForm1>,
    ) -> Result<Self> {
        let first = [a, b, c, d].into_iter().flatten().next().ok_or(Error::GridMismatch)?;
        let mut grid = first.grid.clone();
        for e in [a, b, c, d].into_iter().flatten() {
            grid = grid.intersect(&e.grid)?;
        }
        let stencil = first.stencil;
        let pick = |e: Option<&QForm1>, k: usize, x: bool| {
            e.map_or(Quaternion::ZERO, |e| if x { e.px[k] } else { e.py[k] })
        };
        Ok(MatForm1::from_fn(&grid, stencil, |k| {
            (
                QMatrix2::new(pick(a, k, true), pick(b, k, true), pick(c, k, true), pick(d, k, true)),
                QMatrix2::new(pick(a, k, false), pick(b, k, false), pick(c, k, false), pick(d, k, false)),
            )
        }))
    }
}

/// Matrix-valued field, typically a frame with `F e₁` the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameField {
    pub grid: GridSpec,
    pub values: Vec<QMatrix2>,
    /// max |study_det(F) - study_det(F₀)| over reached nodes.
    pub det_drift: f64,
}

impl FrameField {
    pub fn at(&self, p: NodeIx) -> QMatrix2 {
        self.values[self.grid.idx(p)]
    }

    pub fn max_dist(&self, f: impl Fn(Complex64) -> QMatrix2) -> f64 {
        (0..self.grid.len())
            .filter(|&k| self.grid.valid(k))
            .map(|k| (self.values[k] - f(self.grid.z_at(k))).norm())
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// one-dimensional kernels

/// Maximal runs of valid nodes along a line: `(lo, hi)` inclusive.
fn runs(valid: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < valid.len() {
        if valid[k] {
            let lo = k;
            while k + 1 < valid.len() && valid[k + 1] {
                k += 1;
            }
            out.push((lo, k));
        }
        k += 1;
    }
    out
}

fn deriv_weights(p: usize, len: usize, stencil: Stencil) -> Option<(isize, &'static [f64], f64)> {
    const C2: [f64; 3] = [-0.5, 0.0, 0.5];
    const L2: [f64; 3] = [-1.5, 2.0, -0.5];
    const R2: [f64; 3] = [0.5, -2.0, 1.5];
    const C4: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    const L4: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const L4B: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const R4B: [f64; 5] = [-1.0, 6.0, -18.0, 10.0, 3.0];
    const R4: [f64; 5] = [3.0, -16.0, 36.0, -48.0, 25.0];
    match stencil {
        Stencil::Fourth if len >= 5 => Some(if p == 0 {
            (0, &L4, 12.0)
        } else if p == 1 {
            (-1, &L4B, 12.0)
        } else if p + 2 == len {
            (-3, &R4B, 12.0)
        } else if p + 1 == len {
            (-4, &R4, 12.0)
        } else {
            (-2, &C4, 12.0)
        }),
        _ if len >= 3 => Some(if p == 0 {
            (0, &L2, 1.0)
        } else if p + 1 == len {
            (-2, &R2, 1.0)
        } else {
            (-1, &C2, 1.0)
        }),
        _ => None,
    }
}

/// Derivative along a line; nodes in runs too short for a stencil come back `None`.
fn deriv_line<T: Linear>(vals: &[T], valid: &[bool], h: f64, stencil: Stencil) -> Vec<Option<T>> {
    let mut out = vec![None; vals.len()];
    let mut terms = Vec::with_capacity(5);
    for (lo, hi) in runs(valid) {
        let len = hi - lo + 1;
        for p in 0..len {
            if let Some((off, w, den)) = deriv_weights(p, len, stencil) {
                terms.clear();
                for (m, wm) in w.iter().enumerate() {
                    if *wm != 0.0 {
                        let q = (lo as isize + p as isize + off + m as isize) as usize;
                        terms.push((wm / (den * h), vals[q]));
                    }
                }
                out[lo + p] = Some(T::lin(&terms));
            }
        }
    }
    out
}

/// Partial derivatives of a sampled field; returns values and validity.
pub fn partials<T: Linear>(
    grid: &GridSpec,
    vals: &[T],
    stencil: Stencil,
) -> (Vec<T>, Vec<T>, Vec<bool>) {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut dx = vec![T::zero(); grid.len()];
    let mut dy = vec![T::zero(); grid.len()];
    let mut ok = vec![true; grid.len()];
    let valid = grid.mask_vec();
    for j in 0..ny {
        let row: Vec<T> = (0..nx).map(|i| vals[j * nx + i]).collect();
        let v: Vec<bool> = (0..nx).map(|i| valid[j * nx + i]).collect();
        for (i, d) in deriv_line(&row, &v, grid.h, stencil).into_iter().enumerate() {
            match d {
                Some(d) => dx[j * nx + i] = d,
                None => ok[j * nx + i] = false,
            }
        }
    }
    for i in 0..nx {
        let col: Vec<T> = (0..ny).map(|j| vals[j * nx + i]).collect();
        let v: Vec<bool> = (0..ny).map(|j| valid[j * nx + i]).collect();
        for (j, d) in deriv_line(&col, &v, grid.h, stencil).into_iter().enumerate() {
            match d {
                Some(d) => dy[j * nx + i] = d,
                None => ok[j * nx + i] = false,
            }
        }
    }
    (dx, dy, ok)
}

/// Exterior derivative with second order central differences.
pub fn d_field(f: &QField) -> QForm1 {
    d_field_with(f, Stencil::Second)
}

pub fn d_field_with(f: &QField, stencil: Stencil) -> QForm1 {
    let (px, py, ok) = partials(&f.grid, &f.values, stencil);
    QForm1 { grid: f.grid.with_mask(ok), px, py, stencil }
}

/// Derivatives of a real field.
pub fn d_scalar(u: &ScalarField, stencil: Stencil) -> (ScalarField, ScalarField) {
    let (dx, dy, ok) = partials(&u.grid, &u.values, stencil);
    let g = u.grid.with_mask(ok);
    (ScalarField { grid: g.clone(), values: dx }, ScalarField { grid: g, values: dy })
}

/// dx∧dy coefficient `α(∂x)β(∂y) - α(∂y)β(∂x)`.
pub fn wedge(a: &QForm1, b: &QForm1) -> Result<QField> {
    let grid = a.grid.intersect(&b.grid)?;
    let values = (0..grid.len()).map(|k| a.px[k] * b.py[k] - a.py[k] * b.px[k]).collect();
    Ok(QField { grid, values })
}

/// Discrete curl `∂x py - ∂y px` with the operator the form is tagged with.
pub fn curl(w: &QForm1) -> QField {
    let (dpy, _, okx) = partials(&w.grid, &w.py, w.stencil);
    let (_, dpx, oky) = partials(&w.grid, &w.px, w.stencil);
    let ok = okx.iter().zip(&oky).map(|(a, b)| *a && *b).collect();
    let values = dpy.iter().zip(&dpx).map(|(a, b)| *a - *b).collect();
    QField { grid: w.grid.with_mask(ok), values }
}

/// Normalized integrability defect: `h · max|curl ω| / max|ω|`.
///
/// The curl is the composite of the difference operator ω is tagged with, so
/// forms produced by `d_field` come out closed up to rounding.
pub fn closedness_residual(w: &QForm1) -> f64 {
    let m = w.max_norm();
    if m == 0.0 {
        return 0.0;
    }
    w.grid.h * curl(w).max_over(Quaternion::norm) / m
}

fn line_nodes(grid: &GridSpec, p0: NodeIx) -> (Vec<usize>, Vec<Vec<usize>>) {
    let spine: Vec<usize> = (0..grid.ny).map(|j| grid.idx((p0.0, j))).collect();
    let rows = (0..grid.ny).map(|j| (0..grid.nx).map(|i| grid.idx((i, j))).collect()).collect();
    (spine, rows)
}

/// The run of valid nodes containing `start` on a line.
fn run_of(valid: &[bool], start: usize) -> (usize, usize) {
    let mut lo = start;
    while lo > 0 && valid[lo - 1] {
        lo -= 1;
    }
    let mut hi = start;
    while hi + 1 < valid.len() && valid[hi + 1] {
        hi += 1;
    }
    (lo, hi)
}

/// ∫ over [n, n+1] of nodal samples, fourth order where the run allows it.
fn interval_integral<T: Linear>(p: &[T], lo: usize, hi: usize, n: usize, h: f64) -> T {
    let c = h / 24.0;
    if hi - lo + 1 < 4 {
        return T::lin(&[(h / 2.0, p[n]), (h / 2.0, p[n + 1])]);
    }
    if n == lo {
        T::lin(&[(9.0 * c, p[n]), (19.0 * c, p[n + 1]), (-5.0 * c, p[n + 2]), (c, p[n + 3])])
    } else if n + 1 == hi {
        T::lin(&[(c, p[n - 2]), (-5.0 * c, p[n - 1]), (19.0 * c, p[n]), (9.0 * c, p[n + 1])])
    } else {
        T::lin(&[(-c, p[n - 1]), (13.0 * c, p[n]), (13.0 * c, p[n + 1]), (-c, p[n + 2])])
    }
}

/// Cumulative integral along a line from `start` with value `v0`.
fn cumulate_line<T: Linear>(p: &[T], valid: &[bool], start: usize, v0: T, h: f64) -> Vec<Option<T>> {
    let mut out = vec![None; p.len()];
    let (lo, hi) = run_of(valid, start);
    out[start] = Some(v0);
    let mut acc = v0;
    for n in start..hi {
        acc = T::lin(&[(1.0, acc), (1.0, interval_integral(p, lo, hi, n, h))]);
        out[n + 1] = Some(acc);
    }
    acc = v0;
    for n in (lo..start).rev() {
        acc = T::lin(&[(1.0, acc), (-1.0, interval_integral(p, lo, hi, n, h))]);
        out[n] = Some(acc);
    }
    out
}

/// Integrate a closed form from `p0` with `F(p0) = v0`, checking closedness first.
pub fn integrate_form(w: &QForm1, p0: NodeIx, v0: Quaternion) -> Result<QField> {
    integrate_form_tol(w, p0, v0, TAU_CLOSED)
}

pub fn integrate_form_tol(w: &QForm1, p0: NodeIx, v0: Quaternion, tau: f64) -> Result<QField> {
    let r = closedness_residual(w);
    if !(r <= tau) {
        return Err(Error::NotClosed { residual: r, tolerance: tau });
    }
    integrate_form_unchecked(w, p0, v0)
}

/// Path integration without the closedness gate.
pub fn integrate_form_unchecked(w: &QForm1, p0: NodeIx, v0: Quaternion) -> Result<QField> {
    let grid = &w.grid;
    grid.check_node(p0)?;
    let valid = grid.mask_vec();
    let (spine, rows) = line_nodes(grid, p0);
    let mut values = vec![Quaternion::ZERO; grid.len()];
    let mut reached = vec![false; grid.len()];
    let sp: Vec<Quaternion> = spine.iter().map(|&k| w.py[k]).collect();
    let sv: Vec<bool> = spine.iter().map(|&k| valid[k]).collect();
    let spine_vals = cumulate_line(&sp, &sv, p0.1, v0, grid.h);
    for (j, row) in rows.iter().enumerate() {
        let Some(s) = spine_vals[j] else { continue };
        let rp: Vec<Quaternion> = row.iter().map(|&k| w.px[k]).collect();
        let rv: Vec<bool> = row.iter().map(|&k| valid[k]).collect();
        for (i, v) in cumulate_line(&rp, &rv, p0.0, s, grid.h).into_iter().enumerate() {
            if let Some(v) = v {
                values[row[i]] = v;
                reached[row[i]] = true;
            }
        }
    }
    Ok(QField { grid: grid.with_mask(reached), values })
}

/// Midpoint value on [m, m+1] by cubic interpolation where the run allows it.
fn midpoint<C: Linear>(c: &[C], lo: usize, hi: usize, m: usize) -> C {
    let s = 1.0 / 16.0;
    if hi - lo + 1 < 4 {
        return C::lin(&[(0.5, c[m]), (0.5, c[m + 1])]);
    }
    if m == lo {
        C::lin(&[(5.0 * s, c[m]), (15.0 * s, c[m + 1]), (-5.0 * s, c[m + 2]), (s, c[m + 3])])
    } else if m + 1 == hi {
        C::lin(&[(s, c[m - 2]), (-5.0 * s, c[m - 1]), (15.0 * s, c[m]), (5.0 * s, c[m + 1])])
    } else {
        C::lin(&[(-s, c[m - 1]), (9.0 * s, c[m]), (9.0 * s, c[m + 1]), (-s, c[m + 2])])
    }
}

/// RK4 along one line for `s' = rhs(s, c(t))` starting at `start`.
#[allow(clippy::too_many_arguments)]
fn march_line<S: Linear, C: Linear>(
    c: &[C],
    valid: &[bool],
    start: usize,
    s0: S,
    h: f64,
    rhs: &impl Fn(S, C) -> S,
    nodes: &[usize],
    grid: &GridSpec,
) -> Result<Vec<Option<S>>> {
    let mut out = vec![None; c.len()];
    let (lo, hi) = run_of(valid, start);
    out[start] = Some(s0);
    let step = |s: S, n: usize, m: usize, dt: f64| -> S {
        let cm = midpoint(c, lo, hi, n.min(m));
        let k1 = rhs(s, c[n]);
        let k2 = rhs(S::lin(&[(1.0, s), (dt / 2.0, k1)]), cm);
        let k3 = rhs(S::lin(&[(1.0, s), (dt / 2.0, k2)]), cm);
        let k4 = rhs(S::lin(&[(1.0, s), (dt, k3)]), c[m]);
        S::lin(&[(1.0, s), (dt / 6.0, k1), (dt / 3.0, k2), (dt / 3.0, k3), (dt / 6.0, k4)])
    };
    for dir in [1isize, -1] {
        let mut s = s0;
        let mut n = start;
        loop {
            let m = n as isize + dir;
            if m < lo as isize || m > hi as isize {
                break;
            }
            let m = m as usize;
            s = step(s, n, m, dir as f64 * h);
            if !(s.size() < BLOWUP) {
                return Err(Error::StepBlowup(grid.node(nodes[m])));
            }
            out[m] = Some(s);
            n = m;
        }
    }
    Ok(out)
}

/// Integrate `s' = rhs(s, c)` over the grid: up and down the column through
/// `p0` with the ∂y coefficients, then along rows with the ∂x coefficients.
pub fn march<S: Linear, C: Linear>(
    grid: &GridSpec,
    p0: NodeIx,
    s0: S,
    cx: &[C],
    cy: &[C],
    rhs: impl Fn(S, C) -> S,
) -> Result<(Vec<S>, GridSpec)> {
    grid.check_node(p0)?;
    let valid = grid.mask_vec();
    let (spine, rows) = line_nodes(grid, p0);
    let sc: Vec<C> = spine.iter().map(|&k| cy[k]).collect();
    let sv: Vec<bool> = spine.iter().map(|&k| valid[k]).collect();
    let spine_vals = march_line(&sc, &sv, p0.1, s0, grid.h, &rhs, &spine, grid)?;
    let mut values = vec![S::zero(); grid.len()];
    let mut reached = vec![false; grid.len()];
    for (j, row) in rows.iter().enumerate() {
        let Some(s) = spine_vals[j] else { continue };
        let rc: Vec<C> = row.iter().map(|&k| cx[k]).collect();
        let rv: Vec<bool> = row.iter().map(|&k| valid[k]).collect();
        for (i, v) in march_line(&rc, &rv, p0.0, s, grid.h, &rhs, row, grid)?.into_iter().enumerate() {
            if let Some(v) = v {
                values[row[i]] = v;
                reached[row[i]] = true;
            }
        }
    }
    Ok((values, grid.with_mask(reached)))
}

/// dx∧dy coefficient of `dΦ + Φ∧Φ`.
pub fn maurer_cartan(phi: &MatForm1) -> (Vec<QMatrix2>, GridSpec) {
    let (dpy, _, okx) = partials(&phi.grid, &phi.py, phi.stencil);
    let (_, dpx, oky) = partials(&phi.grid, &phi.px, phi.stencil);
    let vals = (0..phi.grid.len())
        .map(|k| dpy[k] - dpx[k] + phi.px[k] * phi.py[k] - phi.py[k] * phi.px[k])
        .collect();
    let ok = okx.iter().zip(&oky).map(|(a, b)| *a && *b).collect();
    (vals, phi.grid.with_mask(ok))
}

/// Normalized Maurer-Cartan defect `h · max|dΦ + Φ∧Φ| / max(|Φ|, |Φ|²)`.
pub fn maurer_cartan_residual(phi: &MatForm1) -> f64 {
    let (mc, g) = maurer_cartan(phi);
    let m = (0..phi.grid.len())
        .filter(|&k| phi.grid.valid(k))
        .map(|k| phi.px[k].norm().max(phi.py[k].norm()))
        .fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let r = (0..g.len()).filter(|&k| g.valid(k)).map(|k| mc[k].norm()).fold(0.0, f64::max);
    g.h * r / m.max(m * m)
}

/// Solve `dF = F Φ` with `F(p0) = F0` by RK4 along grid lines.
pub fn integrate_frame(phi: &MatForm1, f0: QMatrix2, p0: NodeIx) -> Result<FrameField> {
    integrate_frame_tol(phi, f0, p0, TAU_MC)
}

pub fn integrate_frame_tol(phi: &MatForm1, f0: QMatrix2, p0: NodeIx, tau: f64) -> Result<FrameField> {
    let r = maurer_cartan_residual(phi);
    if !(r <= tau) {
        return Err(Error::NotIntegrable { residual: r, tolerance: tau });
    }
    let (values, grid) = march(&phi.grid, p0, f0, &phi.px, &phi.py, |f: QMatrix2, a: QMatrix2| f * a)?;
    let d0 = study_det(&f0);
    let det_drift = (0..grid.len())
        .filter(|&k| grid.valid(k))
        .map(|k| (study_det(&values[k]) - d0).abs())
        .fold(0.0, f64::max);
    Ok(FrameField { grid, values, det_drift })
}

/// Five point Laplacian; boundary nodes and nodes next to the mask are dropped.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    laplacian_with(u, Stencil::Second)
}

/// Laplacian with the second order five point or the fourth order nine point cross.
pub fn laplacian_with(u: &ScalarField, stencil: Stencil) -> ScalarField {
    let g = &u.grid;
    let r: isize = if stencil == Stencil::Fourth { 2 } else { 1 };
    let h2 = g.h * g.h;
    let mut ok = vec![false; g.len()];
    let mut vals = vec![0.0; g.len()];
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let k = g.idx((i as usize, j as usize));
            if i < r || j < r || i >= g.nx as isize - r || j >= g.ny as isize - r {
                continue;
            }
            let at = |di: isize, dj: isize| g.idx(((i + di) as usize, (j + dj) as usize));
            let nb: Vec<usize> = (-r..=r)
                .flat_map(|d| [at(d, 0), at(0, d)])
                .collect();
            if !nb.iter().all(|&q| g.valid(q)) {
                continue;
            }
            let v = |di, dj| u.values[at(di, dj)];
            vals[k] = match stencil {
                Stencil::Second => (v(1, 0) + v(-1, 0) + v(0, 1) + v(0, -1) - 4.0 * v(0, 0)) / h2,
                Stencil::Fourth => {
                    let ax = -v(2, 0) + 16.0 * v(1, 0) - 30.0 * v(0, 0) + 16.0 * v(-1, 0) - v(-2, 0);
                    let ay = -v(0, 2) + 16.0 * v(0, 1) - 30.0 * v(0, 0) + 16.0 * v(0, -1) - v(0, -2);
                    (ax + ay) / (12.0 * h2)
                }
            };
            ok[k] = true;
        }
    }
    ScalarField { grid: g.with_mask(ok), values: vals }
}

/// Observed convergence order from residuals at successively halved spacings.
pub fn observed_order(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(h: f64) -> GridSpec {
        GridSpec::square(1.0, h).unwrap()
    }

    #[test]
    fn anisotropic_grid_rejected() {
        assert!(GridSpec::new(0.0, 0.0, 0.1, 0.2, 10, 10).is_err());
        assert!(GridSpec::new(0.0, 0.0, 0.1, 0.1, 3, 10).is_err());
    }

    #[test]
    fn linear_fields_differentiate_exactly() {
        let g = grid(1.0 / 8.0);
        let f = QField::sample(&g, |z| Quaternion::I * z.re);
        let w = d_field(&f);
        for k in 0..g.len() {
            assert!((w.px[k] - Quaternion::I).norm() < 1e-13);
            assert!(w.py[k].norm() < 1e-13);
        }
        let c = QField::constant(&g, Quaternion::K);
        assert_eq!(d_field(&c).max_norm(), 0.0);
    }

    #[test]
    fn wedge_of_basis_forms() {
        let g = grid(0.25);
        let a = QForm1::sample(&g, |_| (Quaternion::I, Quaternion::ZERO));
        let b = QForm1::sample(&g, |_| (Quaternion::ZERO, Quaternion::J));
        let w = wedge(&a, &b).unwrap();
        assert_eq!(w.values[0], Quaternion::K);
    }

    #[test]
    fn d_of_anything_is_closed() {
        let g = grid(0.1);
        let f = QField::sample(&g, |z| {
            Quaternion::new((3.0 * z.re).sin(), z.im * z.re * z.re, (z.re * z.im).exp(), 0.2)
        });
        assert!(closedness_residual(&d_field(&f)) < 1e-12);
        assert!(closedness_residual(&d_field_with(&f, Stencil::Fourth)) < 1e-12);
    }

    #[test]
    fn non_closed_form_detected() {
        let g = grid(1.0 / 16.0);
        let w = QForm1::sample(&g, |z| (Quaternion::ZERO, Quaternion::real(z.re)));
        let r = closedness_residual(&w);
        assert!(r > 0.5 * g.h, "{r}");
        assert!(integrate_form(&w, g.center(), Quaternion::ZERO).is_err());
    }

    #[test]
    fn integrate_linear_form() {
        let g = grid(0.125);
        let w = QForm1::sample(&g, |_| (Quaternion::I, Quaternion::J));
        let f = integrate_form(&w, g.center(), Quaternion::ZERO).unwrap();
        let d = f.max_dist(&QField::sample(&g, |z| Quaternion::imag(z.re, z.im, 0.0))).unwrap();
        assert!(d < 1e-14);
        let c = integrate_form(&QForm1::sample(&g, |_| (Quaternion::ZERO, Quaternion::ZERO)), (0, 0), Quaternion::K)
            .unwrap();
        assert!(c.values.iter().all(|&q| q == Quaternion::K));
    }

    #[test]
    fn scalar_frame_ode() {
        let g = grid(0.125);
        let r = 0.7;
        let phi = MatForm1::from_fn(&g, Stencil::Fourth, |_| {
            (QMatrix2::diag(Quaternion::real(r), Quaternion::ZERO), QMatrix2::ZERO)
        });
        let f0 = QMatrix2::new(Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::ONE);
        let f = integrate_frame(&phi, f0, g.center()).unwrap();
        // F = F0·diag(exp(rx), 1)
        let err = f.max_dist(|z| f0 * QMatrix2::diag(Quaternion::real((r * z.re).exp()), Quaternion::ONE));
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = grid(0.1);
        let l = laplacian(&ScalarField::sample(&g, |z| z.norm_sqr()));
        for v in l.valid_values() {
            assert_relative_eq!(v, 4.0, epsilon = 1e-9);
        }
        let l = laplacian(&ScalarField::sample(&g, |z| z.re * z.re - z.im * z.im));
        assert!(l.max_abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let g = grid(0.25);
        let f = QField::sample(&g, |z| Quaternion::imag(z.re, z.im, 1.0));
        let s = f.to_json().unwrap();
        assert!(s.starts_with("{\"grid\":{\"x0\":-1.0,\"y0\":-1.0,\"h\":0.25,\"nx\":9,\"ny\":9}"));
        assert_eq!(QField::from_json(&s).unwrap(), f);
    }
}
