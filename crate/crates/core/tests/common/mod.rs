#![allow(dead_code)]

use std::sync::Arc;

use fsl_core::operator::{build_laplacian, LaplacianKind, Normalization, SelfAdjointOperator};
use fsl_core::space::{build_grid_space, Boundary, MetricMeasureSpace};
use fsl_core::weights::Weight;

pub fn grid_op(dim: usize, side: usize) -> SelfAdjointOperator {
    let space = build_grid_space(dim, side, 1.0 / side as f64, Boundary::Periodic).unwrap();
    build_laplacian(Arc::new(space), LaplacianKind::Grid, Normalization::UnitSpeed).unwrap()
}

pub fn line() -> SelfAdjointOperator {
    grid_op(1, 64)
}

pub fn square() -> SelfAdjointOperator {
    grid_op(2, 16)
}

pub fn power_weight(space: &MetricMeasureSpace) -> Weight {
    Weight::power(space, 0, 0.5).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn lp_w(space: &MetricMeasureSpace, f: &[f64], p: f64, w: &Weight) -> f64 {
    let mu = space.measure();
    let wv = w.values();
    if p.is_infinite() {
        return f.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    (0..f.len())
        .map(|x| f[x].abs().powf(p) * wv[x] * mu[x])
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += c * f(a + i as f64 * h);
    }
    s * h / 3.0
}
