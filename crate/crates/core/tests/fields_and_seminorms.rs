use approx::assert_abs_diff_eq;
use reimann_core::harness::{to_json, RunConfig};
use reimann_core::seminorms::{estimate_seminorm, ProbeConfig, SeminormKind};
use reimann_core::{find_entry, make_zoo, Error};

#[test]
fn seminorms_are_homogeneous() {
    let v = find_entry("generic").unwrap().field;
    let cfg = ProbeConfig::random(2, 6, 1.0, 3)
        .with_directions(32)
        .with_dyadic_scales(0.5, 4);
    for kind in [
        SeminormKind::Qbar,
        SeminormKind::R,
        SeminormKind::R0,
        SeminormKind::Zygmund,
    ] {
        let a = estimate_seminorm(&v, kind, &cfg).unwrap().value;
        let b = estimate_seminorm(&v.scaled(-3.0), kind, &cfg).unwrap().value;
        assert_abs_diff_eq!(b, 3.0 * a, epsilon = 1e-10 * a.max(1.0));
    }
}

#[test]
fn rotation_has_closed_form_values() {
    let v = find_entry("rot").unwrap().field;
    let cfg = ProbeConfig::random(2, 4, 1.0, 11)
        .with_directions(64)
        .with_dyadic_scales(1.0, 3);
    for kind in [SeminormKind::Qbar, SeminormKind::R] {
        assert_abs_diff_eq!(estimate_seminorm(&v, kind, &cfg).unwrap().value, 2.0, epsilon = 1e-12);
    }
}

#[test]
fn planar_kinds_reject_space_fields() {
    let v = make_zoo(3).unwrap().remove(0).field;
    let cfg = ProbeConfig::random(3, 2, 1.0, 1);
    assert!(estimate_seminorm(&v, SeminormKind::Qbar, &cfg).is_err());
}

#[test]
fn estimates_repeat_exactly() {
    let v = find_entry("conjlog").unwrap().field;
    let cfg = ProbeConfig::random(2, 8, 1.0, 5)
        .with_directions(48)
        .with_dyadic_scales(0.5, 5);
    let a = estimate_seminorm(&v, SeminormKind::R0, &cfg).unwrap();
    let b = estimate_seminorm(&v, SeminormKind::R0, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.probe_hash, cfg.hash());
}

#[test]
fn config_files_are_strict() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"fields": ["rot"], "points": 4}"#).unwrap();
    let cfg = RunConfig::from_json_file(&good).unwrap();
    assert_eq!(cfg.points, 4);
    assert!(to_json(&cfg).unwrap().ends_with('\n'));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"fields": ["nope"]}"#).unwrap();
    assert!(matches!(RunConfig::from_json_file(&bad), Err(Error::UnknownField(_))));
}
