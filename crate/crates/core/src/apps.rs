//! Fractional powers `L^{s/2}` and Laplace-transform-type spectral
//! multipliers, with boundedness harnesses.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, FslError, Result};
use crate::operator::SelfAdjointOperator;
use crate::spaces::{
    random_field, Band, EquivalenceReport, Functional, NormEngine, NormParams, RatioEntry,
};

/// Largest kernel fraction tolerated by negative powers.
pub const KERNEL_COMPONENT_TOL: f64 = 1e-10;
/// Relative integral-vs-spectral disagreement that aborts `fractional_power`.
pub const QUADRATURE_ABORT: f64 = 1e-4;
const TAIL_TOL: f64 = 1e-14;
const POINTS_PER_OCTAVE: usize = 32;

/// `L^{s/2} f` on the eigenbasis, `0^{s/2} := 0` so `s = 0` gives `P⁺f`.
pub fn spectral_power(op: &SelfAdjointOperator, f: &[f64], s: f64) -> Result<Vec<f64>> {
    if !s.is_finite() {
        return invalid(format!("power must be finite, got {s}"));
    }
    if s < 0.0 {
        let frac = op.kernel_fraction(f);
        if frac > KERNEL_COMPONENT_TOL {
            return Err(FslError::KernelComponent(frac));
        }
    }
    Ok(op.apply_fn(|l| if l > 0.0 { l.powf(0.5 * s) } else { 0.0 }, f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalPower {
    pub value: Vec<f64>,
    pub quadrature: Vec<f64>,
    /// `‖quadrature − value‖₂ / ‖value‖₂`.
    pub rel_diff: f64,
    pub nodes: usize,
}

/// Both evaluations of `L^{s/2} f`: the spectral one and the integral
/// `Γ(m−s/2)^{-1} ∫₀^∞ t^{-s/2} (tL)^m e^{-tL} f dt/t` on a log grid.
pub fn fractional_power_report(
    op: &SelfAdjointOperator,
    f: &[f64],
    s: f64,
    m_order: u32,
) -> Result<FractionalPower> {
    let e = m_order as f64 - 0.5 * s;
    if !(e > 0.0) {
        return invalid(format!("m_order must exceed s/2, got m={m_order}, s={s}"));
    }
    let value = spectral_power(op, f, s)?;
    let (Some(l1), lmax) = (op.lambda_min_positive(), op.lambda_max()) else {
        return Ok(FractionalPower {
            quadrature: value.clone(),
            value,
            rel_diff: 0.0,
            nodes: 0,
        });
    };
    // u^e/(eΓ(e)) bounds the lower tail, e^{-u}u^e decides the upper one
    let g = gamma(e);
    let u_lo = (TAIL_TOL * e * g).powf(1.0 / e);
    let mut u_hi = e.max(1.0);
    while (-u_hi).exp() * u_hi.powf(e) > TAIL_TOL * g {
        u_hi *= 1.5;
    }
    let (a, b) = ((u_lo / lmax).log2(), (u_hi / l1).log2());
    let k_total = ((b - a) * POINTS_PER_OCTAVE as f64).ceil() as usize;
    let h = (b - a) / k_total as f64;
    let dl = h * std::f64::consts::LN_2;
    let coeffs = op.coefficients(f);
    let factors: Vec<f64> = op
        .eigenvalues()
        .iter()
        .map(|&l| {
            if l <= 0.0 {
                return 0.0;
            }
            let mut sum = 0.0;
            for i in 0..=k_total {
                let t = (a + i as f64 * h).exp2();
                let w = if i == 0 || i == k_total { 0.5 } else { 1.0 };
                let u = t * l;
                sum += w * t.powf(-0.5 * s) * u.powi(m_order as i32) * (-u).exp();
            }
            sum * dl / g
        })
        .collect();
    let c: Vec<f64> = coeffs.iter().zip(&factors).map(|(c, m)| c * m).collect();
    let quadrature = op.synthesize(&c);
    let diff: Vec<f64> = quadrature.iter().zip(&value).map(|(a, b)| a - b).collect();
    let den = op.l2_norm(&value);
    let rel_diff = if den == 0.0 {
        op.l2_norm(&diff)
    } else {
        op.l2_norm(&diff) / den
    };
    Ok(FractionalPower {
        value,
        quadrature,
        rel_diff,
        nodes: k_total + 1,
    })
}

/// `L^{s/2} f`, cross-checked against the integral representation.
pub fn fractional_power(
    op: &SelfAdjointOperator,
    f: &[f64],
    s: f64,
    m_order: u32,
) -> Result<Vec<f64>> {
    let r = fractional_power_report(op, f, s, m_order)?;
    if r.rel_diff > QUADRATURE_ABORT {
        return Err(FslError::Quadrature(r.rel_diff));
    }
    Ok(r.value)
}

/// Smallest admissible integer order for `fractional_power`.
pub fn default_m_order(s: f64) -> u32 {
    ((0.5 * s).floor() + 1.0).max(0.0) as u32
}

/// Ratio `‖L^{s/2} f‖_{α} / ‖f‖_{α+s}` in the Besov and the Triebel–Lizorkin
/// scale over seeded random fields.
pub fn fractional_boundedness_check(
    op: &SelfAdjointOperator,
    s: f64,
    params: &NormParams,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let mut shifted = params.clone();
    shifted.alpha += s;
    let mut kinds = vec![Functional::Besov];
    if params.p.is_finite() {
        kinds.push(Functional::Triebel);
    }
    let engines: Vec<(Functional, NormEngine, NormEngine)> = kinds
        .into_iter()
        .map(|k| {
            Ok((
                k,
                NormEngine::new(op, params.clone(), k)?,
                NormEngine::new(op, shifted.clone(), k)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut ratios = vec![Vec::with_capacity(samples); engines.len()];
    for i in 0..samples {
        let f = random_field(op, Band::default(), seed, i as u64)?;
        let g = spectral_power(op, &f, s)?;
        for (slot, (_, num, den)) in ratios.iter_mut().zip(&engines) {
            slot.push(ratio(num.norm(&g)?.value, den.norm(&f)?.value)?);
        }
    }
    let label = params.describe();
    let entries = engines
        .iter()
        .zip(ratios)
        .map(|((k, _, _), r)| RatioEntry::from_ratios(k.name(), format!("s={s},{label}"), &r))
        .collect();
    Ok(EquivalenceReport::new("fractional-boundedness", samples, seed, entries))
}

/// Symbol description for `m̃(L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SymbolConfig {
    Constant { value: f64 },
    /// `m(u) = e^{-a u}`.
    Exp { a: f64 },
    /// Piecewise-linear through `(u_i, m_i)`, constant outside.
    Table { u: Vec<f64>, m: Vec<f64> },
}

/// Bounded symbol `m` on `[0, ∞)`.
#[derive(Clone)]
pub struct MultiplierProfile {
    name: String,
    m: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    bound: f64,
}

impl fmt::Debug for MultiplierProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierProfile")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .finish()
    }
}

impl MultiplierProfile {
    /// `bound` must be `sup |m|` (or an upper bound of it).
    pub fn new(
        name: impl Into<String>,
        bound: f64,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return invalid(format!("symbol bound must be finite, got {bound}"));
        }
        Ok(Self {
            name: name.into(),
            m: Arc::new(m),
            bound,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.m)(u)
    }

    /// `c · m`.
    pub fn scaled(&self, c: f64) -> Self {
        let m = self.m.clone();
        Self {
            name: format!("{c}*{}", self.name),
            m: Arc::new(move |u| c * m(u)),
            bound: c.abs() * self.bound,
        }
    }
}

impl SymbolConfig {
    pub fn build(&self) -> Result<MultiplierProfile> {
        match self {
            SymbolConfig::Constant { value } => {
                let v = *value;
                MultiplierProfile::new(format!("constant({v})"), v.abs(), move |_| v)
            }
            SymbolConfig::Exp { a } => {
                let a = *a;
                if !(a >= 0.0) {
                    return invalid(format!("e^(-a u) is unbounded for a={a}"));
                }
                MultiplierProfile::new(format!("exp(a={a})"), 1.0, move |u| (-a * u).exp())
            }
            SymbolConfig::Table { u, m } => {
                if u.is_empty() || u.len() != m.len() {
                    return invalid("symbol table needs matching nonempty u and m");
                }
                if u.windows(2).any(|w| !(w[0] < w[1])) {
                    return invalid("symbol table abscissae must increase");
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return invalid("symbol table values must be finite");
                }
                let bound = m.iter().fold(0.0f64, |b, v| b.max(v.abs()));
                let (u, m) = (u.clone(), m.clone());
                MultiplierProfile::new("table", bound, move |x| interpolate(&u, &m, x))
            }
        }
    }
}

fn interpolate(u: &[f64], m: &[f64], x: f64) -> f64 {
    let n = u.len();
    if x <= u[0] {
        return m[0];
    }
    if x >= u[n - 1] {
        return m[n - 1];
    }
    let i = u.partition_point(|&v| v <= x);
    let (u0, u1, m0, m1) = (u[i - 1], u[i], m[i - 1], m[i]);
    m0 + (m1 - m0) * (x - u0) / (u1 - u0)
}

const SIMPSON_TOL: f64 = 1e-13;
const SIMPSON_DEPTH: u32 = 50;
const U_CUTOFF: f64 = 40.0;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // split first so oscillation or kinks cannot fool the top-level estimate
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let xm = 0.5 * (x0 + x1);
            let (f0, fm, f1) = (f(x0), f(xm), f(x1));
            let whole = simpson(x0, x1, f0, fm, f1);
            adaptive(f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, SIMPSON_DEPTH)
        })
        .sum()
}

/// `∫₀^∞ tλ e^{-t²λ} m(t²) dt = ½ ∫₀^∞ e^{-u} m(u/λ) du` for `λ > 0`, zero on
/// the kernel.
pub fn multiplier_factor(mprof: &MultiplierProfile, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let g = |u: f64| (-u).exp() * mprof.eval(u / lambda);
    0.5 * adaptive_simpson(&g, 0.0, U_CUTOFF, SIMPSON_TOL)
}

/// `m̃(L) f = ∫₀^∞ tL e^{-t²L} m(t²) f dt`.
pub fn laplace_type_multiplier(
    op: &SelfAdjointOperator,
    mprof: &MultiplierProfile,
    f: &[f64],
) -> Vec<f64> {
    op.apply_fn(|l| multiplier_factor(mprof, l), f)
}

/// Ratio `‖m̃(L) f‖ / ‖f‖` in the Besov and Triebel–Lizorkin norm given by
/// `params` over seeded random fields.
pub fn multiplier_boundedness_check(
    op: &SelfAdjointOperator,
    mprof: &MultiplierProfile,
    params: &NormParams,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let factors: Vec<f64> = op
        .eigenvalues()
        .iter()
        .map(|&l| multiplier_factor(mprof, l))
        .collect();
    let mut kinds = vec![Functional::Besov];
    if params.p.is_finite() {
        kinds.push(Functional::Triebel);
    }
    let engines: Vec<(Functional, NormEngine)> = kinds
        .into_iter()
        .map(|k| Ok((k, NormEngine::new(op, params.clone(), k)?)))
        .collect::<Result<_>>()?;
    let mut ratios = vec![Vec::with_capacity(samples); engines.len()];
    for i in 0..samples {
        let f = random_field(op, Band::default(), seed, i as u64)?;
        let c: Vec<f64> = op
            .coefficients(&f)
            .iter()
            .zip(&factors)
            .map(|(c, m)| c * m)
            .collect();
        let g = op.synthesize(&c);
        for (slot, (_, e)) in ratios.iter_mut().zip(&engines) {
            slot.push(ratio(e.norm(&g)?.value, e.norm(&f)?.value)?);
        }
    }
    let label = format!("symbol={},{}", mprof.name(), params.describe());
    let entries = engines
        .iter()
        .zip(ratios)
        .map(|((k, _), r)| RatioEntry::from_ratios(k.name(), label.clone(), &r))
        .collect();
    let mut report = EquivalenceReport::new("multiplier-boundedness", samples, seed, entries);
    report.extra.insert("symbol_bound".into(), mprof.bound());
    Ok(report)
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den == 0.0 {
        return Err(FslError::Degenerate("zero denominator norm".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_exponential() {
        let v = adaptive_simpson(&|u: f64| (-u).exp(), 0.0, 40.0, 1e-13);
        assert!((v - (1.0 - (-40f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn table_symbol_interpolates_and_clamps() {
        let m = SymbolConfig::Table {
            u: vec![0.0, 1.0, 3.0],
            m: vec![1.0, -1.0, 0.0],
        }
        .build()
        .unwrap();
        assert_eq!(m.bound(), 1.0);
        assert_eq!(m.eval(-1.0), 1.0);
        assert_eq!(m.eval(0.5), 0.0);
        assert_eq!(m.eval(2.0), -0.5);
        assert_eq!(m.eval(9.0), 0.0);
    }

    #[test]
    fn exp_symbol_rejects_growth() {
        assert!(SymbolConfig::Exp { a: -1.0 }.build().is_err());
    }

    #[test]
    fn m_order_exceeds_half_power() {
        for s in [-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.9] {
            assert!(default_m_order(s) as f64 > 0.5 * s);
        }
    }
}
