//! Quaternions, 2x2 quaternionic matrices and hermitian forms on H².
//!
//! Conventions: `i*j = k`; the complex numbers sit inside H as span{1, i};
//! H² is a right module, so matrices act from the left and scalars from the
//! right.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold below which a quaternion is treated as non-invertible.
pub const EPS_INV: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl From<f64> for Quaternion {
    fn from(r: f64) -> Self {
        Quaternion::real(r)
    }
}

impl From<Complex64> for Quaternion {
    fn from(c: Complex64) -> Self {
        Quaternion::new(c.re, c.im, 0.0, 0.0)
    }
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const ONE: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const I: Quaternion = Quaternion { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };
    pub const J: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 1.0, z: 0.0 };
    pub const K: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    /// Imaginary quaternion with the given (i, j, k) components.
    pub const fn imag(x: f64, y: f64, z: f64) -> Self {
        Quaternion::new(0.0, x, y, z)
    }

    /// `c·j` for a complex number `c`; these span the plane Cj.
    pub fn cj(c: Complex64) -> Self {
        Quaternion::new(0.0, 0.0, c.re, c.im)
    }

    /// Complex part (components along 1 and i).
    pub fn complex(self) -> Complex64 {
        Complex64::new(self.w, self.x)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn re(self) -> f64 {
        self.w
    }

    pub fn im(self) -> Self {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn inv(self) -> Result<Self> {
        self.inv_eps(EPS_INV)
    }

    pub fn inv_eps(self, eps: f64) -> Result<Self> {
        let n = self.norm();
        if n < eps || !n.is_finite() {
            return Err(Error::NearZeroQuaternion { norm: n });
        }
        Ok(self.conj() / (n * n))
    }

    /// Euclidean inner product on H ≅ R⁴.
    pub fn dot(self, o: Self) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Cross product of the imaginary parts under Im H ≅ R³.
    pub fn cross(self, o: Self) -> Self {
        Quaternion::imag(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn vec3(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Complex 2x2 representation `q = α + βj ↦ [[α, β], [-β̄, ᾱ]]`.
    pub fn to_complex2(self) -> [[Complex64; 2]; 2] {
        let a = Complex64::new(self.w, self.x);
        let b = Complex64::new(self.y, self.z);
        [[a, b], [-b.conj(), a.conj()]]
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Self) -> Self {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Self) -> Self {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Self {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, r: f64) -> Self {
        Quaternion::new(self.w * r, self.x * r, self.y * r, self.z * r)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, r: f64) -> Self {
        self * (1.0 / r)
    }
}

pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

pub fn quat_inv(q: Quaternion) -> Result<Quaternion> {
    q.inv()
}

/// Column vector in H².
pub type QVec2 = [Quaternion; 2];

/// Affine coordinate `v₁·v₂⁻¹` of a homogeneous vector.
pub fn affine(v: QVec2) -> Result<Quaternion> {
    Ok(v[0] * v[1].inv()?)
}

/// Affine coordinate with the roles of the two entries swapped, `v₂·v₁⁻¹`.
pub fn affine_swapped(v: QVec2) -> Result<Quaternion> {
    Ok(v[1] * v[0].inv()?)
}

pub fn vec_scale(v: QVec2, s: Quaternion) -> QVec2 {
    [v[0] * s, v[1] * s]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QMatrix2 {
    pub a: Quaternion,
    pub b: Quaternion,
    pub c: Quaternion,
    pub d: Quaternion,
}

impl Default for QMatrix2 {
    fn default() -> Self {
        QMatrix2::IDENTITY
    }
}

impl QMatrix2 {
    pub const IDENTITY: QMatrix2 = QMatrix2 {
        a: Quaternion::ONE,
        b: Quaternion::ZERO,
        c: Quaternion::ZERO,
        d: Quaternion::ONE,
    };
    pub const ZERO: QMatrix2 = QMatrix2 {
        a: Quaternion::ZERO,
        b: Quaternion::ZERO,
        c: Quaternion::ZERO,
        d: Quaternion::ZERO,
    };
    /// `[[0, 1], [1, 0]]`.
    pub const SWAP: QMatrix2 = QMatrix2 {
        a: Quaternion::ZERO,
        b: Quaternion::ONE,
        c: Quaternion::ONE,
        d: Quaternion::ZERO,
    };

    pub const fn new(a: Quaternion, b: Quaternion, c: Quaternion, d: Quaternion) -> Self {
        QMatrix2 { a, b, c, d }
    }

    pub fn diag(a: Quaternion, d: Quaternion) -> Self {
        QMatrix2::new(a, Quaternion::ZERO, Quaternion::ZERO, d)
    }

    /// Canonical Euclidean frame `[[f, 1], [1, 0]]` of a point f.
    pub fn euclidean_frame(f: Quaternion) -> Self {
        QMatrix2::new(f, Quaternion::ONE, Quaternion::ONE, Quaternion::ZERO)
    }

    pub fn mul_vec(&self, v: QVec2) -> QVec2 {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn col(&self, k: usize) -> QVec2 {
        if k == 0 {
            [self.a, self.c]
        } else {
            [self.b, self.d]
        }
    }

    pub fn scale(&self, r: f64) -> Self {
        QMatrix2::new(self.a * r, self.b * r, self.c * r, self.d * r)
    }

    /// Frobenius-type norm.
    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Inverse by block elimination, pivoting on the larger first-row entry.
    pub fn inverse(&self) -> Result<Self> {
        let scale = self.norm().max(f64::MIN_POSITIVE);
        let eps = EPS_INV * scale;
        if self.a.norm() >= self.b.norm() {
            let ai = self.a.inv_eps(eps).map_err(|_| Error::SingularMatrix)?;
            let s = self.d - self.c * ai * self.b;
            let si = s.inv_eps(eps).map_err(|_| Error::SingularMatrix)?;
            let aib = ai * self.b;
            let cai = self.c * ai;
            Ok(QMatrix2::new(ai + aib * si * cai, -(aib * si), -(si * cai), si))
        } else {
            // M·SWAP = [[b, a], [d, c]]; invert that and undo the swap.
            let m = QMatrix2::new(self.b, self.a, self.d, self.c);
            let mi = m.inverse()?;
            Ok(QMatrix2::SWAP * mi)
        }
    }

    /// 4x4 complex representation.
    pub fn to_complex4(&self) -> Matrix4<Complex64> {
        let blocks = [
            [self.a.to_complex2(), self.b.to_complex2()],
            [self.c.to_complex2(), self.d.to_complex2()],
        ];
        Matrix4::from_fn(|r, c| blocks[r / 2][c / 2][r % 2][c % 2])
    }
}

impl Add for QMatrix2 {
    type Output = QMatrix2;
    fn add(self, o: Self) -> Self {
        QMatrix2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for QMatrix2 {
    type Output = QMatrix2;
    fn sub(self, o: Self) -> Self {
        QMatrix2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Mul for QMatrix2 {
    type Output = QMatrix2;
    fn mul(self, o: Self) -> Self {
        QMatrix2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<f64> for QMatrix2 {
    type Output = QMatrix2;
    fn mul(self, r: f64) -> Self {
        self.scale(r)
    }
}

/// Study determinant: the determinant of the 4x4 complex representation.
pub fn study_det(m: &QMatrix2) -> f64 {
    m.to_complex4().determinant().re
}

/// Fractional linear action `x ↦ (ax + b)(cx + d)⁻¹` on affine points.
pub fn moebius_point(m: &QMatrix2, x: Quaternion) -> Result<Quaternion> {
    affine(m.mul_vec([x, Quaternion::ONE]))
}

/// A point of HP¹ ≅ S⁴: finite affine point or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Finite(Quaternion),
    Infinity,
}

/// Quaternionic hermitian form on H², stored as six real numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianForm {
    pub s11: f64,
    pub s22: f64,
    pub s12: Quaternion,
}

impl HermitianForm {
    pub fn new(s11: f64, s22: f64, s12: Quaternion) -> Self {
        HermitianForm { s11, s22, s12 }
    }

    /// Coordinates in R⁶ (s11, s22, s12).
    pub fn coords(&self) -> [f64; 6] {
        [self.s11, self.s22, self.s12.w, self.s12.x, self.s12.y, self.s12.z]
    }

    pub fn scale(&self, r: f64) -> Self {
        HermitianForm::new(self.s11 * r, self.s22 * r, self.s12 * r)
    }
}

/// `s(u, v) = ū₁s11v₁ + ū₁s12v₂ + ū₂s̄12v₁ + ū₂s22v₂`.
pub fn herm_apply(s: &HermitianForm, u: QVec2, v: QVec2) -> Quaternion {
    u[0].conj() * s.s11 * v[0]
        + u[0].conj() * s.s12 * v[1]
        + u[1].conj() * s.s12.conj() * v[0]
        + u[1].conj() * s.s22 * v[1]
}

/// Polarization of `⟨s, s⟩ = |s12|² - s11·s22`.
pub fn lorentz(s: &HermitianForm, t: &HermitianForm) -> f64 {
    s.s12.dot(t.s12) - 0.5 * (s.s11 * t.s22 + s.s22 * t.s11)
}

/// Lightlike form whose null line is the given point.
pub fn point_form(p: Point) -> Result<HermitianForm> {
    match p {
        Point::Infinity => Ok(HermitianForm::new(0.0, 1.0, Quaternion::ZERO)),
        Point::Finite(p) => {
            if p.w.abs() > 1e-14 * (1.0 + p.norm()) {
                return Err(Error::PNotImaginary { re: p.w });
            }
            Ok(HermitianForm::new(1.0, p.norm_sqr(), -p))
        }
    }
}

/// `(M·s)(u, v) = s(M⁻¹u, M⁻¹v)`.
pub fn moebius_act(m: &QMatrix2, s: &HermitianForm) -> Result<HermitianForm> {
    if study_det(m) <= 0.0 {
        return Err(Error::SingularMatrix);
    }
    let a = m.inverse()?;
    let e1 = a.col(0);
    let e2 = a.col(1);
    Ok(HermitianForm::new(
        herm_apply(s, e1, e1).w,
        herm_apply(s, e2, e2).w,
        herm_apply(s, e1, e2),
    ))
}

/// Möbius invariants `(Re r, |r|)` of `r = (a-b)(b-c)⁻¹(c-d)(d-a)⁻¹`.
pub fn cross_ratio_class(
    a: Quaternion,
    b: Quaternion,
    c: Quaternion,
    d: Quaternion,
) -> Result<(f64, f64)> {
    let inv = |q: Quaternion| q.inv().map_err(|_| Error::DegenerateQuadruple);
    if (a - b).norm() < EPS_INV || (c - d).norm() < EPS_INV {
        return Err(Error::DegenerateQuadruple);
    }
    let r = (a - b) * inv(b - c)? * (c - d) * inv(d - a)?;
    Ok((r.w, r.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hamilton_relations() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
        assert_eq!(i * i, -Quaternion::ONE);
        assert_eq!(j * i, -k);
    }

    #[test]
    fn bilinear_expansion() {
        let p = Quaternion::ONE + Quaternion::I;
        let q = Quaternion::ONE + Quaternion::J;
        assert_eq!(p * q, Quaternion::new(1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn inverses() {
        assert_eq!(Quaternion::J.inv().unwrap(), -Quaternion::J);
        assert_eq!((Quaternion::I * 2.0).inv().unwrap(), Quaternion::I * -0.5);
        assert!(matches!(
            Quaternion::real(1e-13).inv(),
            Err(Error::NearZeroQuaternion { .. })
        ));
    }

    #[test]
    fn study_det_examples() {
        assert_relative_eq!(study_det(&QMatrix2::IDENTITY), 1.0, epsilon = 1e-14);
        let q = Quaternion::new(0.3, -1.2, 0.7, 2.0);
        let m = QMatrix2::diag(q, Quaternion::ONE);
        assert_relative_eq!(study_det(&m), q.norm_sqr(), max_relative = 1e-13);
        assert_relative_eq!(study_det(&QMatrix2::SWAP), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lorentz_examples() {
        let s = HermitianForm::new(0.0, 0.0, Quaternion::ONE);
        assert_relative_eq!(lorentz(&s, &s), 1.0);
        let t = HermitianForm::new(1.0, 1.0, Quaternion::ZERO);
        assert_relative_eq!(lorentz(&t, &t), -1.0);
        let p = point_form(Point::Finite(Quaternion::I)).unwrap();
        assert_eq!(p.s12, -Quaternion::I);
        assert_relative_eq!(lorentz(&p, &p), 0.0);
        let inf = point_form(Point::Infinity).unwrap();
        assert_eq!((inf.s11, inf.s22, inf.s12), (0.0, 1.0, Quaternion::ZERO));
    }

    #[test]
    fn imaginary_points_are_null_for_the_swap_form() {
        let s = HermitianForm::new(0.0, 0.0, Quaternion::ONE);
        let h = Quaternion::imag(0.4, -2.0, 1.1);
        let v = [h, Quaternion::ONE];
        assert_relative_eq!(herm_apply(&s, v, v).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn translation_moves_point_forms() {
        let m = Quaternion::imag(0.5, 1.0, -2.0);
        let t = QMatrix2::new(Quaternion::ONE, m, Quaternion::ZERO, Quaternion::ONE);
        let s = moebius_act(&t, &point_form(Point::Finite(Quaternion::ZERO)).unwrap()).unwrap();
        let expect = point_form(Point::Finite(m)).unwrap();
        for (a, b) in s.coords().iter().zip(expect.coords()) {
            assert_relative_eq!(*a, b * s.s11, epsilon = 1e-13);
        }
    }

    #[test]
    fn unit_square_cross_ratio() {
        let (a, b, c, d) = (
            Quaternion::ZERO,
            Quaternion::ONE,
            Quaternion::new(1.0, 1.0, 0.0, 0.0),
            Quaternion::I,
        );
        // r = (-1)(-i)⁻¹(1)(i)⁻¹ = (-1)(i)(-i) = -1
        let (re, abs) = cross_ratio_class(a, b, c, d).unwrap();
        assert_relative_eq!(re, -1.0, epsilon = 1e-15);
        assert_relative_eq!(abs, 1.0, epsilon = 1e-15);
    }
}
