use approx::assert_relative_eq;
use proptest::prelude::*;

use isothermic::grid::{GridSpec, QField};
use isothermic::oracles;
use isothermic::pipeline::{obj_string, Check};
use isothermic::quat::{cross_ratio_class, lorentz, moebius_act, moebius_point, point_form, study_det, Point, QMatrix2, Quaternion};
use isothermic::transforms::{christoffel, moebius_equivalent, t_transform, PolarizedSurface, Settings};

fn quaternion(r: f64) -> impl Strategy<Value = Quaternion> {
    (-r..r, -r..r, -r..r, -r..r).prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z))
}

fn imaginary(r: f64) -> impl Strategy<Value = Quaternion> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Quaternion::imag(x, y, z))
}

fn unit() -> impl Strategy<Value = Quaternion> {
    quaternion(1.0).prop_filter("away from zero", |q| q.norm() > 0.1).prop_map(|q| q / q.norm())
}

fn matrix() -> impl Strategy<Value = QMatrix2> {
    (quaternion(2.0), quaternion(2.0), quaternion(2.0), quaternion(2.0)).prop_map(|(a, b, c, d)| QMatrix2::new(a, b, c, d))
}

/// Möbius transformations of Im H: rotation and dilation, translation, and
/// optionally an inversion in a point off the sample.
fn moebius() -> impl Strategy<Value = QMatrix2> {
    (unit(), 0.3..3.0f64, imaginary(1.0), any::<bool>(), imaginary(1.0)).prop_map(|(r, s, t, inv, p)| {
        let mut m = QMatrix2::new(Quaternion::ONE, t, Quaternion::ZERO, Quaternion::ONE)
            * QMatrix2::diag(r * s, r);
        if inv {
            let pole = p + Quaternion::I * 5.0;
            m = QMatrix2::new(Quaternion::ZERO, Quaternion::ONE, Quaternion::ONE, -pole) * m;
        }
        m
    })
}

fn distinct(pts: &[Quaternion]) -> bool {
    pts.iter().enumerate().all(|(i, a)| pts[i + 1..].iter().all(|b| (*a - *b).norm() > 0.05))
}

proptest! {
    #[test]
    fn norm_is_multiplicative(a in quaternion(3.0), b in quaternion(3.0)) {
        assert_relative_eq!((a * b).norm(), a.norm() * b.norm(), max_relative = 1e-12, epsilon = 1e-14);
    }

    #[test]
    fn inverse_is_two_sided(a in quaternion(3.0).prop_filter("invertible", |q| q.norm() > 1e-3)) {
        let i = a.inv().unwrap();
        prop_assert!((a * i - Quaternion::ONE).norm() < 1e-12);
        prop_assert!((i * a - Quaternion::ONE).norm() < 1e-12);
    }

    #[test]
    fn study_det_is_multiplicative(a in matrix(), b in matrix()) {
        let (da, db) = (study_det(&a), study_det(&b));
        let scale = (a.norm() * b.norm()).powi(4).max(1.0);
        prop_assert!((study_det(&(a * b)) - da * db).abs() < 1e-9 * scale);
        prop_assert!(da >= -1e-9 * a.norm().powi(4).max(1.0));
    }

    #[test]
    fn cross_ratio_class_is_moebius_invariant(
        m in moebius(),
        a in imaginary(1.0), b in imaginary(1.0), c in imaginary(1.0), d in imaginary(1.0),
    ) {
        prop_assume!(distinct(&[a, b, c, d]));
        let before = cross_ratio_class(a, b, c, d).unwrap();
        let im = |x| moebius_point(&m, x).unwrap();
        let (a2, b2, c2, d2) = (im(a), im(b), im(c), im(d));
        prop_assert!(a2.re().abs() < 1e-9 * (1.0 + a2.norm()));
        let after = cross_ratio_class(a2, b2, c2, d2).unwrap();
        let tol = 1e-8 * (1.0 + before.1);
        prop_assert!((before.0 - after.0).abs() < tol && (before.1 - after.1).abs() < tol, "{before:?} {after:?}");
    }

    #[test]
    fn moebius_action_keeps_points_lightlike(m in moebius(), p in imaginary(2.0)) {
        let s = point_form(Point::Finite(p)).unwrap();
        let t = moebius_act(&m, &s).unwrap();
        let scale = t.coords().iter().map(|c| c * c).sum::<f64>().max(1.0);
        prop_assert!(lorentz(&t, &t).abs() < 1e-9 * scale);
    }

    #[test]
    fn checks_pass_iff_within_tolerance(r in prop_oneof![0.0..2.0f64, Just(f64::NAN), Just(f64::INFINITY)], tol in 0.0..2.0f64) {
        let c = Check::new("x", r, tol, 0.1);
        prop_assert!(c.residual.is_finite());
        prop_assert_eq!(c.pass, r.is_finite() && r <= tol);
    }

    #[test]
    fn obj_counts_match_mask(mask in proptest::collection::vec(any::<bool>(), 36)) {
        let g = GridSpec::new(0.0, 0.0, 1.0, 1.0, 6, 6).unwrap();
        let g = g.with_mask(mask.clone());
        let f = QField::sample(&g, |z| Quaternion::imag(0.0, z.re, z.im));
        let s = obj_string(&f);
        let faces = (0..5).flat_map(|j| (0..5).map(move |i| (i, j)))
            .filter(|&(i, j)| [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)].iter().all(|&(a, b)| mask[b * 6 + a]))
            .count();
        prop_assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), mask.iter().filter(|&&m| m).count());
        prop_assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), faces);
        prop_assert_eq!(s, obj_string(&f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn christoffel_is_an_involution(r in unit(), s in 0.5..2.0f64) {
        let g = GridSpec::square(1.0, 1.0 / 32.0).unwrap();
        let f = QField::sample(&g, |z| r * oracles::oracle_minimal_family(z, 0.0).unwrap() * r.conj() * s);
        let sf = PolarizedSurface::new(f);
        let p0 = g.center();
        let cfg = Settings::default();
        let c = christoffel(&sf, p0, Quaternion::ZERO, &cfg).unwrap();
        let cc = christoffel(&c, p0, Quaternion::ZERO, &cfg).unwrap();
        let d = cc.f.max_dist_mod_translation(&sf.f).unwrap();
        prop_assert!(d < 1e-4 * s, "{d}");
    }

    #[test]
    fn moebius_images_are_equivalent(m in moebius(), seed in any::<u64>()) {
        let g = GridSpec::square(1.0, 1.0 / 8.0).unwrap();
        let f = QField::sample(&g, |z| oracles::oracle_minimal_family(z, 0.0).unwrap());
        let mf = f.try_map(|x| moebius_point(&m, x).map(|y| y.im()));
        let (ok, r) = moebius_equivalent(&f, &mf, 20, seed, 1e-8).unwrap();
        prop_assert!(ok, "{r}");
    }

    #[test]
    fn spectral_parameter_zero_is_identity(r in unit()) {
        let g = GridSpec::square(1.0, 1.0 / 16.0).unwrap();
        let f = QField::sample(&g, |z| r * oracles::oracle_minimal_family(z, 0.0).unwrap() * r.conj());
        let s = PolarizedSurface::new(f);
        let t = t_transform(&s, 0.0, QMatrix2::IDENTITY, g.center(), &Settings::default()).unwrap();
        prop_assert!(t.surface.f.max_dist(&s.f).unwrap() < 1e-10);
    }
}
