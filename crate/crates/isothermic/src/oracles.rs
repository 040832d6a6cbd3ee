//! Closed forms for the plane `f = -jz` and everything built from it: its
//! spectral frame, T- and Darboux transforms, the minimal family running from
//! Enneper (λ = 0) to the catenoid (λ = 1), and the Weierstrass data of that
//! family.
//!
//! The special functions only enter through `cosh(√λ z)` and
//! `sinh(√λ z)/√λ`, which are entire in λ; they are evaluated by Taylor series
//! when `|λ z²|` is tiny and through a complex square root otherwise, so
//! negative λ takes the trigonometric branch automatically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quat::{QMatrix2, Quaternion};

/// Distance kept from the singularities of tanh and 1/cosh.
pub const POLE_MARGIN: f64 = 0.1;
const SERIES_BELOW: f64 = 1e-4;

fn sqrt_lambda(lambda: f64) -> Complex64 {
    if lambda >= 0.0 {
        Complex64::new(lambda.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-lambda).sqrt())
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `cosh(√λ z)`.
pub fn ch(lambda: f64, z: Complex64) -> Complex64 {
    let t = z * z * lambda;
    if t.norm() < SERIES_BELOW {
        (0..6).map(|n| t.powu(n) / factorial(2 * n)).sum()
    } else {
        (sqrt_lambda(lambda) * z).cosh()
    }
}

/// `sinh(√λ z)/√λ`.
pub fn sh(lambda: f64, z: Complex64) -> Complex64 {
    let t = z * z * lambda;
    if t.norm() < SERIES_BELOW {
        z * (0..6).map(|n| t.powu(n) / factorial(2 * n + 1)).sum::<Complex64>()
    } else {
        let s = sqrt_lambda(lambda);
        (s * z).sinh() / s
    }
}

/// `(sinh(2√λ z)/(2√λ) - z)/λ`, with the λ → 0 limit `2z³/3`.
fn sinh2_excess(lambda: f64, z: Complex64) -> Complex64 {
    let t = z * z * lambda;
    if t.norm() < SERIES_BELOW {
        z * z * z * (1..7).map(|n| t.powu(n - 1) * 4f64.powi(n as i32) / factorial(2 * n + 1)).sum::<Complex64>()
    } else {
        (sh(lambda, z) * ch(lambda, z) - z) / lambda
    }
}

fn margin(lambda: f64, z: Complex64) -> Result<()> {
    if lambda.abs().sqrt() * z.norm() < std::f64::consts::FRAC_PI_2 - POLE_MARGIN {
        Ok(())
    } else {
        Err(Error::PoleProximity)
    }
}

fn q(c: Complex64) -> Quaternion {
    Quaternion::from(c)
}

/// `f = -jz`, a plane in Cj.
pub fn oracle_f(z: Complex64) -> Quaternion {
    Quaternion::cj(-z.conj())
}

/// Christoffel transform `zj` of the plane.
pub fn oracle_cf(z: Complex64) -> Quaternion {
    Quaternion::cj(z)
}

/// `F_λ = diag(1,-j)·[[cosh, √λ sinh], [sinh/√λ, cosh]]·diag(1,j)` at √λz.
pub fn oracle_frame(z: Complex64, lambda: f64) -> Result<QMatrix2> {
    margin(lambda, z)?;
    let (c, s) = (ch(lambda, z), sh(lambda, z));
    Ok(QMatrix2::new(q(c), Quaternion::cj(s * lambda), Quaternion::cj(-s.conj()), q(c.conj())))
}

/// `T_λ f = -j tanh(√λ z)/√λ`.
pub fn oracle_t(z: Complex64, lambda: f64) -> Result<Quaternion> {
    margin(lambda, z)?;
    Ok(Quaternion::cj(-(sh(lambda, z) / ch(lambda, z)).conj()))
}

/// `C(T_λ f) = ½[z + sinh(2√λ z)/(2√λ)] j`.
pub fn oracle_ct(z: Complex64, lambda: f64) -> Result<Quaternion> {
    margin(lambda, z)?;
    Ok(Quaternion::cj((z + sh(lambda, z) * ch(lambda, z)) * 0.5))
}

/// Minimal family `¼{Re[(cosh 2√λz - 1)/λ] i + [z + sinh(2√λz)/(2√λ)] j
/// + j(1/λ)[z - sinh(2√λz)/(2√λ)]}`, the last j multiplying from the left.
pub fn oracle_minimal_family(z: Complex64, lambda: f64) -> Result<Quaternion> {
    margin(lambda, z)?;
    let s = sh(lambda, z);
    let re = 0.5 * (s * s).re;
    let a = (z + s * ch(lambda, z)) * 0.25;
    let b = -sinh2_excess(lambda, z) * 0.25;
    Ok(Quaternion::imag(re, 0.0, 0.0) + Quaternion::cj(a) + Quaternion::J * q(b))
}

/// `D_λ f = -j{z - [sinh/√λ - cosh·k][cosh - √λ sinh·k]⁻¹}`.
pub fn oracle_darboux(z: Complex64, lambda: f64) -> Result<Quaternion> {
    margin(lambda, z)?;
    let (c, s) = (ch(lambda, z), sh(lambda, z));
    let k = Quaternion::K;
    let a = q(s) - q(c) * k;
    let b = q(c) - q(s * lambda) * k;
    Ok(-Quaternion::J * (q(z) - a * b.inv()?))
}

/// `D_{-λ}T_λ f = -j{tanh/√λ - (1/cosh)[z - k][cosh - √λ sinh·(z - k)]⁻¹}`.
pub fn oracle_darboux_of_t(z: Complex64, lambda: f64) -> Result<Quaternion> {
    margin(lambda, z)?;
    let (c, s) = (ch(lambda, z), sh(lambda, z));
    let x = q(z) - Quaternion::K;
    let b = q(c) - q(s * lambda) * x;
    Ok(-Quaternion::J * (q(s / c) - q(c.inv()) * x * b.inv()?))
}

/// Weierstrass data `g = tanh(√λz)/√λ`, `g'`, and `ω = cosh²(√λz) dz` of the
/// minimal family; `ω·dg = dz²`. At λ = 0 this is Enneper's `(z, dz)`.
pub fn family_g(z: Complex64, lambda: f64) -> Complex64 {
    sh(lambda, z) / ch(lambda, z)
}

pub fn family_dg(z: Complex64, lambda: f64) -> Complex64 {
    let c = ch(lambda, z);
    (c * c).inv()
}

pub fn family_w(z: Complex64, lambda: f64) -> Complex64 {
    let c = ch(lambda, z);
    c * c
}

/// Ribaucour datum `u` of the family member at λ, `e^u = ½(|cosh|² + |sinh/√λ|²)`,
/// with its partial derivatives.
pub fn ribaucour_u(z: Complex64, lambda: f64) -> (f64, f64, f64) {
    let (c, s) = (ch(lambda, z), sh(lambda, z));
    let big = c.norm_sqr() + s.norm_sqr();
    // ∂z of |c|² + |s|², using c' = λ s and s' = c
    let dz = s * c.conj() * lambda + c * s.conj();
    ((0.5 * big).ln(), 2.0 * dz.re / big, -2.0 * dz.im / big)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn close(a: Quaternion, b: Quaternion, tol: f64) {
        assert!((a - b).norm() <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn plane_and_dual() {
        close(oracle_f(c(0.0, 0.0)), Quaternion::ZERO, 0.0);
        close(oracle_f(c(1.0, 0.0)), -Quaternion::J, 1e-16);
        close(oracle_cf(c(1.0, 0.0)), Quaternion::J, 1e-16);
        // -j·i = k
        close(oracle_f(c(0.0, 1.0)), Quaternion::K, 1e-16);
    }

    #[test]
    fn series_and_closed_forms_agree_at_the_switch() {
        for lam in [1.0, -1.0, 0.3] {
            let z = c(0.006, 0.004);
            let t = (z * z * lam).norm();
            assert!(t < SERIES_BELOW);
            let s = sqrt_lambda(lam);
            assert!((ch(lam, z) - (s * z).cosh()).norm() < 1e-15);
            assert!((sh(lam, z) - (s * z).sinh() / s).norm() < 1e-15);
            let direct = (sh(lam, z) * ch(lam, z) - z) / lam;
            assert!((sinh2_excess(lam, z) - direct).norm() < 1e-12, "{lam}");
        }
    }

    #[test]
    fn t_transform_values() {
        close(oracle_t(c(0.0, 0.0), 0.7).unwrap(), Quaternion::ZERO, 0.0);
        let z = c(0.3, -0.2);
        close(oracle_t(z, 0.0).unwrap(), oracle_f(z), 1e-15);
        close(oracle_t(c(1.0, 0.0), 1.0).unwrap(), -Quaternion::J * 1f64.tanh(), 1e-15);
        // λ < 0: tanh → tan
        close(oracle_t(c(1.0, 0.0), -1.0).unwrap(), -Quaternion::J * 1f64.tan(), 1e-14);
        assert!(matches!(oracle_t(c(1.6, 0.0), 1.0), Err(Error::PoleProximity)));
    }

    #[test]
    fn christoffel_of_t_values() {
        close(oracle_ct(c(0.0, 0.0), 1.0).unwrap(), Quaternion::ZERO, 0.0);
        let z = c(0.2, 0.5);
        close(oracle_ct(z, 0.0).unwrap(), oracle_cf(z), 1e-15);
        close(oracle_ct(c(1.0, 0.0), 1.0).unwrap(), Quaternion::J * (0.5 * (1.0 + 2f64.sinh() / 2.0)), 1e-15);
    }

    #[test]
    fn frame_is_unimodular_and_starts_at_identity() {
        assert_eq!(oracle_frame(c(0.0, 0.0), 1.0).unwrap(), QMatrix2::IDENTITY);
        let f = oracle_frame(c(1.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(f.a.w, 1f64.cosh(), epsilon = 1e-15);
        assert_relative_eq!(f.b.y, 1f64.sinh(), epsilon = 1e-15);
        assert_relative_eq!(f.c.y, -1f64.sinh(), epsilon = 1e-15);
        for z in [c(0.3, 0.9), c(-1.0, 0.2)] {
            for lam in [1.0, 0.5, -0.8, 0.0] {
                let d = crate::quat::study_det(&oracle_frame(z, lam).unwrap());
                assert_relative_eq!(d, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn frame_solves_its_system() {
        // dF = FΦ_λ with Φ_λ(∂x) = [[0, λj], [-j, 0]], Φ_λ(∂y) = [[0, λk], [k, 0]]
        let lam = 0.8;
        let z = c(0.4, -0.3);
        let h = 1e-5;
        let f = oracle_frame(z, lam).unwrap();
        let fx = (oracle_frame(z + h, lam).unwrap() - oracle_frame(z - h, lam).unwrap()) * (0.5 / h);
        let fy = (oracle_frame(z + c(0.0, h), lam).unwrap() - oracle_frame(z - c(0.0, h), lam).unwrap())
            * (0.5 / h);
        let px = QMatrix2::new(Quaternion::ZERO, Quaternion::J * lam, -Quaternion::J, Quaternion::ZERO);
        let py = QMatrix2::new(Quaternion::ZERO, Quaternion::K * lam, Quaternion::K, Quaternion::ZERO);
        assert!((fx - f * px).norm() < 1e-8);
        assert!((fy - f * py).norm() < 1e-8);
    }

    #[test]
    fn minimal_family_limits() {
        close(oracle_minimal_family(c(0.0, 0.0), 1.0).unwrap(), Quaternion::ZERO, 0.0);
        // Enneper at z = 1: ½{i + j - j/3}
        let e = oracle_minimal_family(c(1.0, 0.0), 0.0).unwrap();
        close(e, Quaternion::imag(0.5, 1.0 / 3.0, 0.0), 1e-15);
        let z = c(0.7, -0.4);
        let a = oracle_minimal_family(z, 1e-9).unwrap();
        let b = oracle_minimal_family(z, 0.0).unwrap();
        close(a, b, 1e-8);
    }

    #[test]
    fn catenoid_parallels_are_circles() {
        // fixed Re z: j-height x/2, circle of radius cosh(2x)/4 about the axis i = -1/4
        let x = 0.4;
        for n in 0..7 {
            let p = oracle_minimal_family(c(x, -1.2 + 0.4 * n as f64), 1.0).unwrap();
            assert_relative_eq!(p.y, x / 2.0, epsilon = 1e-14);
            assert_relative_eq!((p.x + 0.25).hypot(p.z), (2.0 * x).cosh() / 4.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn darboux_values() {
        // -j{0 - [-k][1]⁻¹} = -jk = -i
        close(oracle_darboux(c(0.0, 0.0), 1.0).unwrap(), -Quaternion::I, 1e-15);
        close(oracle_darboux_of_t(c(0.0, 0.0), 1.0).unwrap(), -Quaternion::I, 1e-15);
        for z in [c(0.5, 0.0), c(0.3, 0.9), c(-0.8, -0.6)] {
            let d = oracle_darboux(z, 1.0).unwrap();
            assert!(d.w.abs() < 1e-12 && d.x < 0.0);
            let e = oracle_darboux_of_t(z, 1.0).unwrap();
            assert!(e.w.abs() < 1e-12 && e.x < 0.0);
        }
    }

    #[test]
    fn family_data_polarization() {
        for lam in [0.0, 0.5, 1.0] {
            let z = c(0.3, 0.4);
            let q = family_w(z, lam) * family_dg(z, lam);
            assert!((q - 1.0).norm() < 1e-14);
        }
        let (u, ux, uy) = ribaucour_u(c(0.3, 0.8), 1.0);
        assert_relative_eq!(u, ((0.6f64).cosh() / 2.0).ln(), epsilon = 1e-14);
        assert_relative_eq!(ux, 2.0 * (0.6f64).tanh(), epsilon = 1e-14);
        assert!(uy.abs() < 1e-14);
    }
}
