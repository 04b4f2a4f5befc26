//! Muckenhoupt weights, weighted norms and maximal functions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FslError, Result};
use crate::space::{DyadicCubeTree, MetricMeasureSpace};

/// Default threshold used to decide membership in `A_p` / `RH_r` on a finite
/// space, where every positive weight has finite constants.
pub const MEMBERSHIP_THRESHOLD: f64 = 1e3;
const INDEX_CAP: f64 = 64.0;
const INDEX_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum WeightConfig {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `w(x) = (h + d(x, center))^exponent`, `h` the minimal distance.
    Power { center: usize, exponent: f64 },
    Explicit { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl WeightConfig {
    pub fn build(&self, space: &MetricMeasureSpace) -> Result<Weight> {
        match self {
            WeightConfig::Constant { value } => Weight::constant(space, *value),
            WeightConfig::Power { center, exponent } => Weight::power(space, *center, *exponent),
            WeightConfig::Explicit { values } => Weight::explicit(values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    values: Vec<f64>,
    descriptor: WeightConfig,
}

impl Weight {
    pub fn constant(space: &MetricMeasureSpace, value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return invalid(format!("constant weight must be positive, got {value}"));
        }
        Ok(Self {
            values: vec![value; space.len()],
            descriptor: WeightConfig::Constant { value },
        })
    }

    pub fn unit(space: &MetricMeasureSpace) -> Self {
        Self::constant(space, 1.0).unwrap()
    }

    pub fn power(space: &MetricMeasureSpace, center: usize, exponent: f64) -> Result<Self> {
        if center >= space.len() {
            return invalid(format!("power weight center {center} out of range"));
        }
        if !exponent.is_finite() {
            return invalid("power weight exponent must be finite");
        }
        let h = space.min_positive_distance();
        let h = if h.is_finite() { h } else { 1.0 };
        let values = space
            .dist_row(center)
            .iter()
            .map(|d| (h + d).powf(exponent))
            .collect();
        Ok(Self {
            values,
            descriptor: WeightConfig::Power { center, exponent },
        })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return invalid(format!("weights must be positive and finite, found {v}"));
        }
        Ok(Self {
            descriptor: WeightConfig::Explicit {
                values: values.clone(),
            },
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn descriptor(&self) -> &WeightConfig {
        &self.descriptor
    }

    pub fn is_constant(&self) -> bool {
        let w0 = self.values[0];
        self.values.iter().all(|&w| w == w0)
    }

    /// `w^e` pointwise, tagged as explicit.
    pub fn pow(&self, e: f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|w| w.powf(e)).collect();
        Self::explicit(values).expect("powers of positive weights are positive")
    }

    /// `w(E) = Σ_{x∈E} w(x) μ(x)`.
    pub fn mass(&self, space: &MetricMeasureSpace, set: impl IntoIterator<Item = usize>) -> f64 {
        let mu = space.measure();
        set.into_iter().map(|x| self.values[x] * mu[x]).sum()
    }
}

/// `(Σ |f|^p w μ)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn weighted_lp_norm(space: &MetricMeasureSpace, f: &[f64], p: f64, w: &Weight) -> f64 {
    if p.is_infinite() {
        return f.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mu = space.measure();
    let s: f64 = f
        .iter()
        .zip(w.values())
        .zip(mu)
        .map(|((v, wx), m)| v.abs().powf(p) * wx * m)
        .sum();
    s.powf(1.0 / p)
}

fn ball_average(space: &MetricMeasureSpace, members: &[u32], g: impl Fn(usize) -> f64) -> f64 {
    let mu = space.measure();
    let mut s = 0.0;
    let mut v = 0.0;
    for &y in members {
        let y = y as usize;
        s += g(y) * mu[y];
        v += mu[y];
    }
    s / v
}

/// `[w]_{A_p} = sup_B (⨍_B w)^{1/p} (⨍_B w^{-1/(p-1)})^{(p-1)/p}` over all
/// distinct balls.
pub fn ap_constant(space: &MetricMeasureSpace, w: &Weight, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return invalid(format!("A_p constant requires p > 1, got {p}"));
    }
    let wv = w.values();
    let dual_exp = -1.0 / (p - 1.0);
    let mut best: f64 = 1.0;
    for ball in space.distinct_balls() {
        let m = space.members(ball);
        let a = ball_average(space, m, |y| wv[y]);
        let b = ball_average(space, m, |y| wv[y].powf(dual_exp));
        best = best.max(a.powf(1.0 / p) * b.powf((p - 1.0) / p));
    }
    Ok(best)
}

/// `[w]_{A_1} = sup_B (⨍_B w) / min_B w`.
pub fn a1_constant(space: &MetricMeasureSpace, w: &Weight) -> f64 {
    let wv = w.values();
    let mut best: f64 = 1.0;
    for ball in space.distinct_balls() {
        let m = space.members(ball);
        let a = ball_average(space, m, |y| wv[y]);
        let lo = m.iter().map(|&y| wv[y as usize]).fold(f64::INFINITY, f64::min);
        best = best.max(a / lo);
    }
    best
}

/// `sup_B (⨍_B w^q)^{1/q} / ⨍_B w`.
pub fn rh_constant(space: &MetricMeasureSpace, w: &Weight, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return invalid(format!("reverse Hölder constant requires q > 1, got {q}"));
    }
    let wv = w.values();
    let mut best: f64 = 1.0;
    for ball in space.distinct_balls() {
        let m = space.members(ball);
        let a = ball_average(space, m, |y| wv[y]);
        let b = if q.is_infinite() {
            m.iter().map(|&y| wv[y as usize]).fold(0.0, f64::max)
        } else {
            ball_average(space, m, |y| wv[y].powf(q)).powf(1.0 / q)
        };
        best = best.max(b / a);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub ap_const: f64,
    pub a1_const: f64,
    /// `(q, [w]_{RH_q})` for q ∈ {2, 4, 8}.
    pub rh_const: Vec<(f64, f64)>,
    pub qw_est: f64,
    pub rw_est: f64,
    pub threshold: f64,
}

/// Critical indices at `p = 2` with the default membership threshold.
pub fn critical_indices(space: &MetricMeasureSpace, w: &Weight) -> ApReport {
    critical_indices_with(space, w, 2.0, MEMBERSHIP_THRESHOLD).expect("p = 2 is valid")
}

/// `q_w` is the smallest p ∈ [1, 64] with `[w]_{A_p} <= threshold`, `r_w` the
/// largest r ∈ (1, 64] with `[w]_{RH_r} <= threshold`, both by bisection to
/// 1e-3 (the constants are monotone in the exponent).
pub fn critical_indices_with(
    space: &MetricMeasureSpace,
    w: &Weight,
    p: f64,
    threshold: f64,
) -> Result<ApReport> {
    let ap_const = ap_constant(space, w, p)?;
    let a1_const = a1_constant(space, w);
    let qw_est = if a1_const <= threshold {
        1.0
    } else if ap_constant(space, w, INDEX_CAP)? > threshold {
        INDEX_CAP
    } else {
        let (mut lo, mut hi) = (1.0, INDEX_CAP);
        while hi - lo > INDEX_TOL {
            let mid = 0.5 * (lo + hi);
            if ap_constant(space, w, mid)? <= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let rw_est = if rh_constant(space, w, INDEX_CAP)? <= threshold {
        INDEX_CAP
    } else {
        let (mut lo, mut hi) = (1.0, INDEX_CAP);
        while hi - lo > INDEX_TOL {
            let mid = 0.5 * (lo + hi);
            if rh_constant(space, w, mid)? <= threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let rh_const = [2.0, 4.0, 8.0]
        .iter()
        .map(|&q| Ok((q, rh_constant(space, w, q)?)))
        .collect::<Result<_>>()?;
    Ok(ApReport {
        p,
        ap_const,
        a1_const,
        rh_const,
        qw_est,
        rw_est,
        threshold,
    })
}

/// `M_{r,w} f(x) = sup_{B∋x} (w(B)^{-1} ∫_B |f|^r w dμ)^{1/r}`; unweighted
/// when `w` is `None`.
pub fn maximal_function(
    space: &MetricMeasureSpace,
    f: &[f64],
    r: f64,
    w: Option<&Weight>,
) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return invalid(format!("maximal exponent must be positive, got {r}"));
    }
    let mu = space.measure();
    let wv: Vec<f64> = match w {
        Some(w) => w.values().to_vec(),
        None => vec![1.0; space.len()],
    };
    let fr: Vec<f64> = f.iter().map(|v| v.abs().powf(r)).collect();
    let mut out = vec![0.0f64; space.len()];
    for ball in space.distinct_balls() {
        let m = space.members(ball);
        let mut s = 0.0;
        let mut wb = 0.0;
        for &y in m {
            let y = y as usize;
            s += fr[y] * wv[y] * mu[y];
            wb += wv[y] * mu[y];
        }
        let avg = s / wb;
        for &y in m {
            let o = &mut out[y as usize];
            *o = o.max(avg);
        }
    }
    Ok(out.into_iter().map(|v| v.powf(1.0 / r)).collect())
}

fn lq_sum(family: &[Vec<f64>], q: f64, x: usize) -> f64 {
    if q.is_infinite() {
        family.iter().fold(0.0, |m, f| m.max(f[x].abs()))
    } else {
        family
            .iter()
            .map(|f| f[x].abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Empirical Fefferman–Stein constant
/// `‖(Σ_ν (M_r f_ν)^q)^{1/q}‖_{p,w} / ‖(Σ_ν |f_ν|^q)^{1/q}‖_{p,w}`.
pub fn fefferman_stein_check(
    space: &MetricMeasureSpace,
    family: &[Vec<f64>],
    p: f64,
    q: f64,
    r: f64,
    w: &Weight,
) -> Result<f64> {
    if !(r > 0.0 && r < p.min(q)) {
        return invalid(format!("need 0 < r < min(p, q), got r={r}, p={p}, q={q}"));
    }
    let apr = ap_constant(space, w, p / r)?;
    if !apr.is_finite() {
        return Err(FslError::Prerequisite(format!("weight not in A_{}", p / r)));
    }
    let maxed: Vec<Vec<f64>> = family
        .iter()
        .map(|f| maximal_function(space, f, r, None))
        .collect::<Result<_>>()?;
    let n = space.len();
    let num: Vec<f64> = (0..n).map(|x| lq_sum(&maxed, q, x)).collect();
    let den: Vec<f64> = (0..n).map(|x| lq_sum(family, q, x)).collect();
    let d = weighted_lp_norm(space, &den, p, w);
    if d == 0.0 {
        return Err(FslError::Degenerate("all-zero family".into()));
    }
    Ok(weighted_lp_norm(space, &num, p, w) / d)
}

/// Smallest C with `w(B_Q)/w(Q) <= C (V(B_Q)/V(Q))^p` over all cubes Q and
/// their enclosing balls `B_Q`.
pub fn measure_comparison_constant(
    space: &MetricMeasureSpace,
    w: &Weight,
    p: f64,
    tree: &DyadicCubeTree,
) -> f64 {
    let mut c: f64 = 0.0;
    for level in &tree.levels {
        for cube in &level.cubes {
            let ball = space.ball_members(cube.center, tree.kappa0 * cube.side_len);
            let wb = w.mass(space, ball.iter().map(|&y| y as usize));
            let vb: f64 = ball.iter().map(|&y| space.measure()[y as usize]).sum();
            let we = w.mass(space, cube.members.iter().copied());
            let ve: f64 = cube.members.iter().map(|&y| space.measure()[y]).sum();
            c = c.max((wb / we) / (vb / ve).powf(p));
        }
    }
    c
}
