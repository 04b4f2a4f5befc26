mod common;

use std::sync::OnceLock;

use fsl_core::apps::{laplace_type_multiplier, spectral_power, SymbolConfig};
use fsl_core::calculus::{heat_profile, make_partition_of_unity};
use fsl_core::operator::SelfAdjointOperator;
use fsl_core::spaces::{
    besov_norm, bmo_l_norm, f_infinity_norm, random_field, triebel_norm, Analyzer, Band, Flavor,
    Functional, NormEngine, NormParams, StructureIndices,
};
use fsl_core::weights::Weight;
use proptest::prelude::*;

use common::*;

const IDX: StructureIndices = StructureIndices { n: 1.16, qw: 1.0 };

fn op() -> &'static SelfAdjointOperator {
    static OP: OnceLock<SelfAdjointOperator> = OnceLock::new();
    OP.get_or_init(line)
}

fn weight(power: bool) -> Weight {
    if power {
        power_weight(op().space())
    } else {
        Weight::unit(op().space())
    }
}

fn field(seed: u64) -> Vec<f64> {
    random_field(op(), Band::default(), seed, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norms_are_homogeneous(seed in 0u64..1000, c in -5.0f64..5.0, alpha in -1.0f64..1.5,
                             p in 1.0f64..4.0, q in 1.0f64..4.0, power in any::<bool>()) {
        let f = field(seed);
        let g: Vec<f64> = f.iter().map(|v| c * v).collect();
        let params = NormParams::new(alpha, p, q, weight(power));
        let b = besov_norm(op(), &f, &params).unwrap().value;
        prop_assert!(rel(besov_norm(op(), &g, &params).unwrap().value, c.abs() * b) < 1e-12);
        let t = triebel_norm(op(), &f, &params).unwrap().value;
        prop_assert!(rel(triebel_norm(op(), &g, &params).unwrap().value, c.abs() * t) < 1e-12);
        let fi = f_infinity_norm(op(), &f, &params).unwrap().value;
        prop_assert!(rel(f_infinity_norm(op(), &g, &params).unwrap().value, c.abs() * fi) < 1e-12);
        let m = bmo_l_norm(op(), &f, &weight(power));
        prop_assert!(rel(bmo_l_norm(op(), &g, &weight(power)), c.abs() * m) < 1e-12);
    }

    #[test]
    fn kernel_shift_is_invisible(seed in 0u64..1000, c in -5.0f64..5.0, p in 1.0f64..4.0) {
        let f = field(seed);
        let g: Vec<f64> = f.iter().map(|v| v + c).collect();
        let params = NormParams::new(0.5, p, 2.0, weight(true));
        let a = besov_norm(op(), &f, &params).unwrap().value;
        prop_assert!(rel(besov_norm(op(), &g, &params).unwrap().value, a) < 1e-9);
        let a = triebel_norm(op(), &f, &params).unwrap().value;
        prop_assert!(rel(triebel_norm(op(), &g, &params).unwrap().value, a) < 1e-9);
    }

    #[test]
    fn dyadic_norms_decrease_in_q(seed in 0u64..1000, q1 in 0.5f64..6.0, dq in 0.0f64..6.0,
                                   alpha in -1.0f64..1.0) {
        let f = field(seed);
        let w = weight(false);
        let lo = NormParams::new(alpha, 2.0, q1, w.clone());
        let hi = NormParams::new(alpha, 2.0, q1 + dq, w);
        let b1 = besov_norm(op(), &f, &lo).unwrap().value;
        let b2 = besov_norm(op(), &f, &hi).unwrap().value;
        prop_assert!(b2 <= b1 * (1.0 + 1e-12));
        let t1 = triebel_norm(op(), &f, &lo).unwrap().value;
        let t2 = triebel_norm(op(), &f, &hi).unwrap().value;
        prop_assert!(t2 <= t1 * (1.0 + 1e-12));
    }

    #[test]
    fn lusin_below_g_function(seed in 0u64..1000, lambda in 1.2f64..4.0, power in any::<bool>()) {
        let f = field(seed);
        let base = NormParams::new(0.0, 2.0, 2.0, weight(power))
            .with_analyzer(Analyzer::Profile(heat_profile(1)))
            .with_indices(IDX);
        let lusin = NormEngine::new(op(), base.clone().with_flavor(Flavor::Lusin), Functional::Triebel).unwrap();
        let g = NormEngine::new(
            op(),
            base.with_flavor(Flavor::GFunction).with_lambda(lambda),
            Functional::Triebel,
        )
        .unwrap();
        let s = lusin.pointwise(&lusin.field(&f));
        let gg = g.pointwise(&g.field(&f));
        let bound = 2f64.powf(lambda);
        for (a, b) in s.iter().zip(&gg) {
            prop_assert!(*a <= bound * b * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lusin_grows_with_aperture(seed in 0u64..1000, a in 1.0f64..3.0, da in 0.0f64..3.0) {
        let f = field(seed);
        let base = NormParams::new(0.0, 2.0, 2.0, weight(false)).with_flavor(Flavor::Lusin);
        let e1 = NormEngine::new(op(), base.clone().with_aperture(a), Functional::Triebel).unwrap();
        let e2 = NormEngine::new(op(), base.with_aperture(a + da), Functional::Triebel).unwrap();
        let s1 = e1.pointwise(&e1.field(&f));
        let s2 = e2.pointwise(&e2.field(&f));
        for (x, y) in s1.iter().zip(&s2) {
            prop_assert!(*x <= y * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fractional_powers_compose(seed in 0u64..1000, a in -2.0f64..3.0, b in -2.0f64..3.0) {
        let f = field(seed);
        let lhs = spectral_power(op(), &spectral_power(op(), &f, b).unwrap(), a).unwrap();
        let rhs = spectral_power(op(), &f, a + b).unwrap();
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in lhs.iter().zip(&rhs) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn multipliers_commute_with_pieces(seed in 0u64..1000, a in 0.0f64..0.1, j in -2i32..8) {
        let f = field(seed);
        let m = SymbolConfig::Exp { a }.build().unwrap();
        let pou = make_partition_of_unity();
        let lp = |g: &[f64]| op().apply_fn(|l| pou.psi_j(j, l.max(0.0).sqrt()), g);
        let x = lp(&laplace_type_multiplier(op(), &m, &f));
        let y = laplace_type_multiplier(op(), &m, &lp(&f));
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in x.iter().zip(&y) {
            prop_assert!((u - v).abs() <= 1e-10 * scale);
        }
    }
}
