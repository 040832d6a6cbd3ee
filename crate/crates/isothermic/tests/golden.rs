//! Golden OBJ of the catenoid cousin. Regenerate with
//! `ISOTHERMIC_BLESS=1 cargo test --test golden`.

use std::path::PathBuf;

use isothermic::cmc::{weierstrass_minimal, WeierstrassData};
use isothermic::grid::GridSpec;
use isothermic::pipeline::obj_string;
use isothermic::quat::Quaternion;
use isothermic::transforms::Settings;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/catenoid_cousin.obj")
}

fn parse(obj: &str) -> (Vec<[f64; 3]>, Vec<String>) {
    let mut v = Vec::new();
    let mut f = Vec::new();
    for line in obj.lines() {
        if let Some(rest) = line.strip_prefix("v ") {
            let c: Vec<f64> = rest.split_whitespace().map(|t| t.parse().unwrap()).collect();
            v.push([c[0], c[1], c[2]]);
        } else if line.starts_with("f ") {
            f.push(line.to_string());
        }
    }
    (v, f)
}

#[test]
fn catenoid_cousin_obj_matches_golden() {
    let g = GridSpec::square(0.5, 1.0 / 32.0).unwrap();
    let s = weierstrass_minimal(&WeierstrassData::family(&g, 1.0), g.center(), Quaternion::ZERO, &Settings::default()).unwrap();
    let obj = obj_string(&s.f);
    if std::env::var_os("ISOTHERMIC_BLESS").is_some() {
        std::fs::write(golden_path(), &obj).unwrap();
    }
    let want = std::fs::read_to_string(golden_path()).expect("golden file missing; run with ISOTHERMIC_BLESS=1");
    let (va, fa) = parse(&obj);
    let (vb, fb) = parse(&want);
    assert_eq!(fa, fb);
    assert_eq!(va.len(), vb.len());
    for (a, b) in va.iter().zip(&vb) {
        for (x, y) in a.iter().zip(b) {
            approx::assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }
}
