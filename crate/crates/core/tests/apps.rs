mod common;

use fsl_core::apps::{
    default_m_order, fractional_boundedness_check, fractional_power, fractional_power_report,
    laplace_type_multiplier, multiplier_boundedness_check, multiplier_factor, spectral_power,
    MultiplierProfile, SymbolConfig,
};
use fsl_core::calculus::make_partition_of_unity;
use fsl_core::spaces::{besov_norm, random_field, sobolev_norm, Band, NormParams};
use fsl_core::weights::{weighted_lp_norm, Weight};
use fsl_core::FslError;

use common::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn power_of_eigenfunction() {
    let op = line();
    for k in [1, 10, 40, 63] {
        let u = op.eigenvector(k);
        let lam = op.eigenvalues()[k];
        for s in [-1.0, 0.5, 1.0, 2.0, 3.0] {
            let got = fractional_power(&op, &u, s, default_m_order(s)).unwrap();
            let want: Vec<f64> = u.iter().map(|v| lam.powf(s / 2.0) * v).collect();
            assert!(max_abs_diff(&got, &want) <= 1e-8 * sup(&want), "k={k} s={s}");
        }
    }
}

#[test]
fn integral_agrees_with_spectral() {
    for op in [line(), square()] {
        for i in 0..4 {
            let f = random_field(&op, Band::default(), 40, i).unwrap();
            for s in [-1.0, 0.5, 1.0, 2.0] {
                let m = default_m_order(s);
                let r = fractional_power_report(&op, &f, s, m).unwrap();
                assert!(r.rel_diff <= 1e-6, "s={s}: {}", r.rel_diff);
                let r2 = fractional_power_report(&op, &f, s, m + 1).unwrap();
                let d = op.l2_norm(&r.quadrature.iter().zip(&r2.quadrature).map(|(a, b)| a - b).collect::<Vec<_>>());
                assert!(d <= 1e-8 * op.l2_norm(&r.value), "m-order dependence {d}");
            }
        }
    }
}

#[test]
fn order_must_exceed_half_power() {
    let op = line();
    let f = random_field(&op, Band::default(), 1, 0).unwrap();
    assert!(fractional_power(&op, &f, 2.0, 1).is_err());
    assert!(fractional_power(&op, &f, 1.0, 1).is_ok());
}

#[test]
fn zero_power_projects_off_kernel() {
    let op = line();
    let f: Vec<f64> = random_field(&op, Band::default(), 2, 0)
        .unwrap()
        .iter()
        .map(|v| v + 3.0)
        .collect();
    let g = spectral_power(&op, &f, 0.0).unwrap();
    assert!(max_abs_diff(&g, &op.project_off_kernel(&f)) < 1e-12);
    assert!(matches!(spectral_power(&op, &f, -1.0), Err(FslError::KernelComponent(_))));
}

#[test]
fn composition_law() {
    let op = square();
    let f = random_field(&op, Band::default(), 3, 0).unwrap();
    for a in [-1.0, 0.0, 1.0, 2.0] {
        for b in [-1.0, 0.0, 1.0, 2.0] {
            let lhs = spectral_power(&op, &spectral_power(&op, &f, b).unwrap(), a).unwrap();
            let rhs = spectral_power(&op, &f, a + b).unwrap();
            assert!(max_abs_diff(&lhs, &rhs) <= 1e-8 * sup(&rhs).max(1e-300), "a={a} b={b}");
        }
    }
}

#[test]
fn sobolev_norm_is_lp_of_power() {
    let op = line();
    let w = power_weight(op.space());
    let f = random_field(&op, Band::default(), 5, 0).unwrap();
    for s in [-1.0, 1.0, 2.0] {
        let g = fractional_power(&op, &f, s, default_m_order(s)).unwrap();
        let want = weighted_lp_norm(op.space(), &g, 2.0, &w);
        assert!(rel(sobolev_norm(&op, &f, s, 2.0, &w).unwrap(), want) < 1e-12);
    }
}

#[test]
fn unit_symbol_gives_half_projection() {
    let op = line();
    let one = SymbolConfig::Constant { value: 1.0 }.build().unwrap();
    let f: Vec<f64> = random_field(&op, Band::default(), 6, 0)
        .unwrap()
        .iter()
        .map(|v| v - 1.0)
        .collect();
    let g = laplace_type_multiplier(&op, &one, &f);
    let half: Vec<f64> = op.project_off_kernel(&f).iter().map(|v| 0.5 * v).collect();
    assert!(max_abs_diff(&g, &half) <= 1e-6 * sup(&half));
    let zero = SymbolConfig::Constant { value: 0.0 }.build().unwrap();
    assert!(sup(&laplace_type_multiplier(&op, &zero, &f)) == 0.0);
}

#[test]
fn exponential_symbol_closed_form() {
    let op = line();
    for a in [0.0, 0.5, 20.0, 3000.0] {
        let m = SymbolConfig::Exp { a }.build().unwrap();
        for &l in &op.eigenvalues()[1..] {
            let want = 0.5 / (1.0 + a / l);
            assert!((multiplier_factor(&m, l) - want).abs() < 1e-10, "a={a} l={l}");
        }
    }
}

#[test]
fn table_symbol_against_fine_quadrature() {
    let m = SymbolConfig::Table {
        u: vec![0.0, 1e-3, 5e-3, 2e-2],
        m: vec![1.0, -0.5, 0.8, 0.1],
    }
    .build()
    .unwrap();
    for lam in [40.0, 900.0, 16000.0] {
        // ∫₀^∞ tλ e^{-t²λ} m(t²) dt in the original variable
        let t_max = (40.0f64 / lam).sqrt();
        let oracle = simpson(|t| t * lam * (-t * t * lam).exp() * m.eval(t * t), 0.0, t_max, 1_000_000);
        assert!((multiplier_factor(&m, lam) - oracle).abs() < 1e-8);
    }
}

#[test]
fn multiplier_commutes_with_littlewood_paley() {
    let op = square();
    let m = SymbolConfig::Exp { a: 0.01 }.build().unwrap();
    let pou = make_partition_of_unity().fitted_to(&op);
    let f = random_field(&op, Band::default(), 8, 0).unwrap();
    for j in pou.js() {
        let lp = |g: &[f64]| op.apply_fn(|l| pou.psi_j(j, l.max(0.0).sqrt()), g);
        let a = lp(&laplace_type_multiplier(&op, &m, &f));
        let b = laplace_type_multiplier(&op, &m, &lp(&f));
        assert!(max_abs_diff(&a, &b) < 1e-10 * sup(&f));
    }
}

#[test]
fn multiplier_ratios() {
    let op = line();
    let w = Weight::unit(op.space());
    let params = NormParams::new(0.0, 2.0, 2.0, w);
    let one = SymbolConfig::Constant { value: 1.0 }.build().unwrap();
    let r = multiplier_boundedness_check(&op, &one, &params, 10, 1).unwrap();
    for e in &r.entries {
        assert!((e.ratios.min - 0.5).abs() < 1e-6 && (e.ratios.max - 0.5).abs() < 1e-6);
    }
    let m = MultiplierProfile::new("wiggle", 1.0, |u| (300.0 * u).cos()).unwrap();
    let base = multiplier_boundedness_check(&op, &m, &params, 10, 2).unwrap();
    let scaled = multiplier_boundedness_check(&op, &m.scaled(-3.0), &params, 10, 2).unwrap();
    for (a, b) in base.entries.iter().zip(&scaled.entries) {
        assert!(rel(3.0 * a.ratios.max, b.ratios.max) < 1e-10);
        assert!(a.ratios.max <= 1.0);
    }
}

#[test]
fn fractional_ratio_of_eigenfunction_and_identity() {
    let op = line();
    let w = Weight::unit(op.space());
    let params = NormParams::new(0.0, 2.0, 2.0, w.clone());
    let r = fractional_boundedness_check(&op, 0.0, &params, 8, 3).unwrap();
    for e in &r.entries {
        assert!((e.ratios.min - 1.0).abs() < 1e-12 && (e.ratios.max - 1.0).abs() < 1e-12);
    }
    let k = 12;
    let u = op.eigenvector(k);
    let lam = op.eigenvalues()[k];
    let psi = make_partition_of_unity().psi;
    let scalar = |alpha: f64| {
        (-40..=40)
            .map(|j| (2f64.powf(j as f64 * alpha) * psi.eval(2f64.powi(-j) * lam.sqrt())).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let s = 1.0;
    let want = lam.powf(s / 2.0) * scalar(0.0) / scalar(s);
    let g = spectral_power(&op, &u, s).unwrap();
    let got = besov_norm(&op, &g, &params).unwrap().value
        / besov_norm(&op, &u, &NormParams::new(s, 2.0, 2.0, w)).unwrap().value;
    assert!(rel(got, want) < 1e-8);
}
