mod common;

use fsl_core::calculus::make_partition_of_unity;
use fsl_core::spaces::{
    angle_growth_slope, equivalence_suite, parseval_band, CheckParams, CHECKS,
};
use fsl_core::weights::Weight;
use fsl_core::FslError;

use common::*;

#[test]
fn every_check_is_sane_on_the_line() {
    let op = line();
    let unit = Weight::unit(op.space());
    for check in CHECKS {
        let grid = match check {
            "hardy-identity" => vec![CheckParams::new(0.0, 1.0, 2.0, unit.clone())],
            "sobolev-identity" | "hardy-sobolev-identity" => {
                vec![CheckParams::new(0.0, 2.0, 2.0, unit.clone()).with_s(1.0)]
            }
            _ => vec![CheckParams::new(0.0, 2.0, 2.0, unit.clone())],
        };
        let r = equivalence_suite(&op, check, &grid, 6, 17).unwrap();
        assert_eq!(r.check, check);
        assert!(!r.entries.is_empty(), "{check}");
        assert!(r.sane(), "{check}: {:?}", r.entries);
    }
}

#[test]
fn lp_identity_inside_parseval_band() {
    let op = line();
    let grid = [CheckParams::new(0.0, 2.0, 2.0, Weight::unit(op.space()))];
    let r = equivalence_suite(&op, "lp-identity", &grid, 20, 5).unwrap();
    let band = parseval_band(&make_partition_of_unity());
    for e in &r.entries {
        assert!(e.ratios.min >= band[0] - 1e-12 && e.ratios.max <= band[1] + 1e-12);
    }
}

#[test]
fn sobolev_identity_ratio_is_seed_independent() {
    let op = line();
    let grid = [CheckParams::new(0.0, 2.0, 2.0, Weight::unit(op.space())).with_s(1.0)];
    let a = equivalence_suite(&op, "sobolev-identity", &grid, 10, 1).unwrap();
    let b = equivalence_suite(&op, "sobolev-identity", &grid, 10, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn change_of_angle_slope_is_bounded() {
    let op = line();
    let p = CheckParams::new(0.0, 2.0, 2.0, Weight::unit(op.space()));
    let r = equivalence_suite(&op, "change-of-angle", std::slice::from_ref(&p), 8, 2).unwrap();
    let slope = angle_growth_slope(&r, &p.describe()).unwrap();
    let exponent = r.extra[&format!("angle_exponent|{}", p.describe())];
    assert!(slope <= exponent + 1e-12, "{slope} vs {exponent}");
    assert!(r.entries.iter().all(|e| e.ratios.min >= 1.0 - 1e-12));
}

#[test]
fn unknown_check_is_an_error() {
    let op = line();
    let grid = [CheckParams::new(0.0, 2.0, 2.0, Weight::unit(op.space()))];
    assert!(matches!(
        equivalence_suite(&op, "no-such-check", &grid, 1, 0),
        Err(FslError::UnknownCheck(_))
    ));
}
