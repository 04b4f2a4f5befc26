mod common;

use fsl_core::calculus::{heat_profile, make_partition_of_unity, ScaleGrid};
use fsl_core::operator::{heat_kernel, SelfAdjointOperator};
use fsl_core::spaces::{
    besov_norm, bmo_l_norm, f_infinity_norm, hardy_norm, random_field, sobolev_norm,
    triebel_norm, Analyzer, Band, Flavor, NormEngine, NormParams, Functional, StructureIndices,
};
use fsl_core::weights::Weight;
use fsl_core::FslError;

use common::*;

const IDX: StructureIndices = StructureIndices { n: 1.16, qw: 1.0 };

fn psi(x: f64) -> f64 {
    make_partition_of_unity().psi.eval(x)
}

fn dyadic_scalar(lam: f64, alpha: f64, q: f64) -> f64 {
    let terms = (-40..=40).map(|j| 2f64.powf(j as f64 * alpha) * psi(2f64.powi(-j) * lam.sqrt()).abs());
    if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

fn continuous_scalar(lam: f64, alpha: f64, q: f64) -> f64 {
    let r = lam.sqrt();
    let (a, b) = ((0.5 / r).ln(), (2.0 / r).ln());
    let g = |u: f64| {
        let t = u.exp();
        (t.powf(-alpha) * psi(t * r).abs()).powf(q)
    };
    simpson(g, a, b, 40000).powf(1.0 / q)
}

#[test]
fn single_eigenfunction_dyadic_oracle() {
    let op = line();
    let w = power_weight(op.space());
    let k = 9;
    let u = op.eigenvector(k);
    let lam = op.eigenvalues()[k];
    for (alpha, p, q) in [(0.5, 1.5, 1.0), (-0.3, 2.0, 2.0), (1.0, 3.0, f64::INFINITY)] {
        let params = NormParams::new(alpha, p, q, w.clone());
        let want = dyadic_scalar(lam, alpha, q) * lp_w(op.space(), &u, p, &w);
        let b = besov_norm(&op, &u, &params).unwrap().value;
        let f = triebel_norm(&op, &u, &params).unwrap().value;
        assert!(rel(b, want) < 1e-12, "besov {b} vs {want}");
        assert!(rel(f, want) < 1e-12, "triebel {f} vs {want}");
    }
}

#[test]
fn single_eigenfunction_continuous_oracle() {
    let op = square();
    let w = Weight::unit(op.space());
    let k = 40;
    let u = op.eigenvector(k);
    let lam = op.eigenvalues()[k];
    for (alpha, p, q) in [(0.0, 2.0, 2.0), (0.7, 1.5, 1.0), (-0.5, 4.0, 3.0)] {
        let params = NormParams::new(alpha, p, q, w.clone())
            .with_flavor(Flavor::Continuous)
            .with_points_per_octave(32);
        let want = continuous_scalar(lam, alpha, q) * lp_w(op.space(), &u, p, &w);
        let b = besov_norm(&op, &u, &params).unwrap().value;
        // trapezoid error of the 32-point-per-octave grid
        assert!(rel(b, want) < 1e-6, "{b} vs {want}");
    }
}

#[test]
fn parseval_formula_for_l2_triebel() {
    let op = line();
    let w = Weight::unit(op.space());
    let params = NormParams::new(0.0, 2.0, 2.0, w);
    for i in 0..5 {
        let f = random_field(&op, Band::default(), 9, i).unwrap();
        let c = op.coefficients(&f);
        let want: f64 = c
            .iter()
            .zip(op.eigenvalues())
            .map(|(ck, &l)| {
                let s: f64 = (-40..=40).map(|j| psi(2f64.powi(-j) * l.max(0.0).sqrt()).powi(2)).sum();
                ck * ck * s
            })
            .sum::<f64>()
            .sqrt();
        let got = triebel_norm(&op, &f, &params).unwrap().value;
        assert!(rel(got, want) < 1e-12);
    }
}

#[test]
fn constants_have_zero_norm() {
    let op = line();
    let w = power_weight(op.space());
    let c = vec![2.5; op.len()];
    for flavor in [Flavor::Dyadic, Flavor::Continuous, Flavor::Peetre] {
        let params = NormParams::new(0.3, 2.0, 2.0, w.clone()).with_flavor(flavor).with_indices(IDX);
        assert!(besov_norm(&op, &c, &params).unwrap().value < 1e-12);
        assert!(triebel_norm(&op, &c, &params).unwrap().value < 1e-12);
        // V(B)/w(B)² amplifies round-off on small balls; compare with a
        // nonconstant field of the same amplitude
        let reference = f_infinity_norm(&op, &op.eigenvector(1), &params).unwrap().value;
        assert!(f_infinity_norm(&op, &c, &params).unwrap().value < 1e-12 * reference);
    }
    for flavor in [Flavor::GFunction, Flavor::Lusin] {
        let params = NormParams::new(0.3, 2.0, 2.0, w.clone()).with_flavor(flavor).with_indices(IDX);
        assert!(triebel_norm(&op, &c, &params).unwrap().value < 1e-12);
    }
    assert!(bmo_l_norm(&op, &c, &w) < 1e-12);
    assert!(hardy_norm(&op, &c, 1.0, &w).unwrap() < 1e-12);
}

/// Field `F(t√L) f` for each scale.
fn fields(op: &SelfAdjointOperator, f: &[f64], ts: &[f64], prof: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
    ts.iter().map(|&t| op.apply_fn(|l| prof(t * l.max(0.0).sqrt()), f)).collect()
}

fn f_infinity_oracle(op: &SelfAdjointOperator, f: &[f64], alpha: f64, q: f64, w: &Weight, ts: &[f64], tw: &[f64]) -> f64 {
    let s = op.space();
    let n = s.len();
    let mu = s.measure();
    let wv = w.values();
    let g = fields(op, f, ts, psi);
    let mut radii: Vec<f64> = s.distance_levels()[1..].to_vec();
    radii.push(f64::INFINITY);
    let mut best: f64 = 0.0;
    for x in 0..n {
        for &r in &radii {
            let ball: Vec<usize> = (0..n).filter(|&y| s.dist(x, y) < r).collect();
            let v: f64 = ball.iter().map(|&y| mu[y]).sum();
            let wb: f64 = ball.iter().map(|&y| wv[y] * mu[y]).sum();
            let inside: Vec<usize> = (0..ts.len()).filter(|&k| ts[k] <= r).collect();
            if inside.is_empty() {
                continue;
            }
            let val = if q.is_infinite() {
                inside
                    .iter()
                    .map(|&k| ball.iter().map(|&y| mu[y] * ts[k].powf(-alpha) * g[k][y].abs()).sum::<f64>())
                    .fold(0.0, f64::max)
                    * v
                    / (wb * wb)
            } else {
                let sum: f64 = ball
                    .iter()
                    .map(|&y| {
                        mu[y] * inside.iter().map(|&k| tw[k] * (ts[k].powf(-alpha) * g[k][y].abs()).powf(q)).sum::<f64>()
                    })
                    .sum();
                (v / (wb * wb) * sum).powf(1.0 / q)
            };
            best = best.max(val);
        }
    }
    best
}

#[test]
fn f_infinity_matches_double_loop() {
    let op = line();
    for w in [Weight::unit(op.space()), power_weight(op.space())] {
        let f = random_field(&op, Band::Fixed { start: 0, len: 10 }, 4, 0).unwrap();
        for (flavor, q) in [
            (Flavor::Dyadic, 2.0),
            (Flavor::Dyadic, f64::INFINITY),
            (Flavor::Continuous, 1.5),
        ] {
            let params = NormParams::new(0.4, 2.0, q, w.clone()).with_flavor(flavor);
            let eng = NormEngine::new(&op, params, Functional::FInfinity).unwrap();
            let got = eng.norm(&f).unwrap().value;
            let want = f_infinity_oracle(&op, &f, 0.4, q, &w, eng.scales(), eng.scale_weights());
            assert!(rel(got, want) < 1e-12, "{flavor:?} q={q}: {got} vs {want}");
        }
    }
}

#[test]
fn bmo_matches_heat_kernel_sweep() {
    let op = line();
    let s = op.space();
    let n = s.len();
    let mu = s.measure();
    for w in [Weight::unit(s), power_weight(s)] {
        let wv = w.values();
        let f = random_field(&op, Band::default(), 12, 1).unwrap();
        let mut radii: Vec<f64> = s.distance_levels()[1..].to_vec();
        radii.push(f64::INFINITY);
        let mut best: f64 = 0.0;
        for &r in &radii {
            let g: Vec<f64> = if r.is_infinite() {
                let mean = f.iter().zip(mu).map(|(a, m)| a * m).sum::<f64>() / s.total_mass();
                f.iter().map(|v| v - mean).collect()
            } else {
                let p = heat_kernel(&op, r * r).unwrap();
                (0..n)
                    .map(|x| f[x] - (0..n).map(|y| p[(x, y)] * f[y] * mu[y]).sum::<f64>())
                    .collect()
            };
            for x in 0..n {
                let ball: Vec<usize> = (0..n).filter(|&y| s.dist(x, y) < r).collect();
                let a: f64 = ball.iter().map(|&y| g[y].abs() * mu[y]).sum();
                let wb: f64 = ball.iter().map(|&y| wv[y] * mu[y]).sum();
                best = best.max(a / wb);
            }
        }
        let got = bmo_l_norm(&op, &f, &w);
        assert!(rel(got, best) < 1e-10, "{got} vs {best}");
        assert!(rel(bmo_l_norm(&op, &f.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), &w), 2.0 * got) < 1e-14);
    }
}

fn area_oracle(op: &SelfAdjointOperator, f: &[f64], p: f64, w: &Weight, decay: Option<f64>) -> f64 {
    let s = op.space();
    let n = s.len();
    let mu = s.measure();
    let grid = ScaleGrid::for_profile(op, 16, &heat_profile(1)).unwrap();
    let g = fields(op, f, &grid.t, |x| x * x * (-x * x).exp());
    let sq: Vec<f64> = (0..n)
        .map(|x| {
            let mut acc = 0.0;
            for (k, &t) in grid.t.iter().enumerate() {
                let v = s.volume(x, t);
                let inner: f64 = (0..n)
                    .map(|y| {
                        let d = s.dist(x, y);
                        let kern = match decay {
                            None if d < t => 1.0,
                            None => 0.0,
                            Some(l) => (1.0 + d / t).powf(-2.0 * l),
                        };
                        kern * mu[y] * g[k][y].powi(2)
                    })
                    .sum();
                acc += grid.weights[k] * inner / v;
            }
            acc.sqrt()
        })
        .collect();
    lp_w(s, &sq, p, w)
}

#[test]
fn hardy_matches_direct_summation() {
    let op = line();
    for w in [Weight::unit(op.space()), power_weight(op.space())] {
        let f = random_field(&op, Band::default(), 21, 0).unwrap();
        for p in [1.0, 0.7] {
            let got = hardy_norm(&op, &f, p, &w).unwrap();
            let want = area_oracle(&op, &f, p, &w, None);
            assert!(rel(got, want) < 1e-10, "{got} vs {want}");
        }
    }
}

#[test]
fn g_function_matches_direct_summation() {
    let op = line();
    let w = power_weight(op.space());
    let f = random_field(&op, Band::default(), 22, 0).unwrap();
    let params = NormParams::new(0.0, 1.5, 2.0, w.clone())
        .with_analyzer(Analyzer::Profile(heat_profile(1)))
        .with_flavor(Flavor::GFunction)
        .with_indices(IDX)
        .with_lambda(3.0);
    let got = triebel_norm(&op, &f, &params).unwrap().value;
    let want = area_oracle(&op, &f, 1.5, &w, Some(3.0));
    assert!(rel(got, want) < 1e-10, "{got} vs {want}");
}

#[test]
fn sobolev_of_eigenfunction() {
    let op = square();
    let w = power_weight(op.space());
    let k = 30;
    let u = op.eigenvector(k);
    let lam = op.eigenvalues()[k];
    for s in [-1.0, 0.5, 1.0, 2.0] {
        for p in [1.0, 2.0, 3.0] {
            let got = sobolev_norm(&op, &u, s, p, &w).unwrap();
            let want = lam.powf(s / 2.0) * lp_w(op.space(), &u, p, &w);
            assert!(rel(got, want) < 1e-12);
        }
    }
    let c = vec![1.0; op.len()];
    assert!(matches!(sobolev_norm(&op, &c, -1.0, 2.0, &w), Err(FslError::KernelComponent(_))));
}

#[test]
fn engine_rejects_invalid_parameters() {
    let op = line();
    let w = Weight::unit(op.space());
    let base = || NormParams::new(0.0, 2.0, 2.0, w.clone()).with_indices(IDX);
    let bad = [
        (base().with_flavor(Flavor::Lusin), Functional::Besov),
        (base().with_flavor(Flavor::GFunction), Functional::FInfinity),
        (NormParams::new(0.0, f64::INFINITY, 2.0, w.clone()), Functional::Triebel),
        (NormParams::new(0.0, 2.0, f64::INFINITY, w.clone()).with_flavor(Flavor::Lusin), Functional::Triebel),
        (base().with_flavor(Flavor::Lusin).with_aperture(0.5), Functional::Triebel),
        (base().with_flavor(Flavor::Peetre).with_lambda(0.5), Functional::Triebel),
        (NormParams::new(0.0, 0.0, 2.0, w.clone()), Functional::Besov),
    ];
    for (params, functional) in bad {
        let d = params.describe();
        assert!(NormEngine::new(&op, params, functional).is_err(), "{d}");
    }
    assert!(hardy_norm(&op, &op.eigenvector(3), 1.5, &w).is_err());
}

#[test]
fn peetre_dominates_plain_pointwise() {
    let op = line();
    let w = Weight::unit(op.space());
    let f = random_field(&op, Band::default(), 30, 0).unwrap();
    let plain = NormEngine::new(
        &op,
        NormParams::new(0.0, 2.0, 2.0, w.clone()).with_flavor(Flavor::Continuous),
        Functional::Triebel,
    )
    .unwrap();
    let peetre = NormEngine::new(
        &op,
        NormParams::new(0.0, 2.0, 2.0, w).with_flavor(Flavor::Peetre).with_indices(IDX),
        Functional::Triebel,
    )
    .unwrap();
    let a = plain.pointwise(&plain.field(&f));
    let b = peetre.pointwise(&peetre.field(&f));
    assert!(a.iter().zip(&b).all(|(x, y)| x <= &(y * (1.0 + 1e-12))));
}
