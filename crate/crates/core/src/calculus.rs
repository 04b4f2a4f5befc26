//! Spectral profiles, the dyadic partition of unity, scale grids, the
//! functional calculus `F(t√L)`, kernel bounds, Calderón reproducing formulas
//! and Peetre maximal functions.

use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FslError, Result};
use crate::operator::SelfAdjointOperator;
use crate::space::MetricMeasureSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    /// Zero outside the open interval `(a, b)` of `[0, ∞)`.
    Interval(f64, f64),
    Unbounded,
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Even scalar function `F` on `[0, ∞)` with support and vanishing-order
/// metadata; evaluated at `|ξ|`.
#[derive(Clone)]
pub struct SpectralProfile {
    name: String,
    support: Support,
    vanish_order: u32,
    f: ProfileFn,
}

impl fmt::Debug for SpectralProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralProfile")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("vanish_order", &self.vanish_order)
            .finish()
    }
}

impl SpectralProfile {
    pub fn new(
        name: impl Into<String>,
        support: Support,
        vanish_order: u32,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            support,
            vanish_order,
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn vanish_order(&self) -> u32 {
        self.vanish_order
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        if let Support::Interval(a, b) = self.support {
            if xi <= a || xi >= b {
                return 0.0;
            }
        }
        (self.f)(xi)
    }

    /// Pointwise product.
    pub fn product(&self, other: &SpectralProfile) -> SpectralProfile {
        let support = match (self.support, other.support) {
            (Support::Unbounded, s) | (s, Support::Unbounded) => s,
            (Support::Interval(a, b), Support::Interval(c, d)) => {
                Support::Interval(a.max(c), b.min(d).max(a.max(c)))
            }
        };
        let (f, g) = (self.clone(), other.clone());
        SpectralProfile::new(
            format!("{}*{}", self.name, other.name),
            support,
            self.vanish_order + other.vanish_order,
            move |x| f.eval(x) * g.eval(x),
        )
    }

    /// `ξ^{2k} F(ξ)`; negative `k` divides (only sensible for profiles
    /// vanishing near 0).
    pub fn times_power(&self, k: i32) -> SpectralProfile {
        let f = self.clone();
        let order = (self.vanish_order as i64 + k as i64).max(0) as u32;
        SpectralProfile::new(
            format!("xi^{}*{}", 2 * k, self.name),
            self.support,
            order,
            move |x| {
                let v = f.eval(x);
                if v == 0.0 {
                    0.0
                } else {
                    x.powi(2 * k) * v
                }
            },
        )
    }
}

/// Smooth bump in the log₂ variable, `exp(-β / (1 - u²))` for `|u| < 1`.
fn log_bump(u: f64, beta: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-beta / (1.0 - u * u)).exp()
    }
}

/// `ψ(λ) = η(log₂ λ) / Σ_j η(log₂ λ - j)`, supported in `(1/2, 2)`.
fn partition_value(lambda: f64, beta: f64) -> f64 {
    if lambda <= 0.5 || lambda >= 2.0 {
        return 0.0;
    }
    let u = lambda.log2();
    let fr = u - u.floor();
    let den = log_bump(fr, beta) + log_bump(fr - 1.0, beta);
    log_bump(u, beta) / den
}

/// Dyadic partition of unity `Σ_j ψ(2^{-j} λ) = 1` on `(0, ∞)`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub psi: SpectralProfile,
    /// `[∫₀^∞ ψ(t) dt/t]^{-1}`; equals `1/ln 2` for this construction.
    pub c_psi: f64,
    pub sharpness: f64,
    /// Inclusive dyadic index range `(j_lo, j_hi)`.
    pub j_range: (i32, i32),
}

pub const DEFAULT_SHARPNESS: f64 = 1.0;

pub fn make_partition_of_unity() -> PartitionOfUnity {
    PartitionOfUnity::with_sharpness(DEFAULT_SHARPNESS)
}

impl PartitionOfUnity {
    pub fn with_sharpness(beta: f64) -> Self {
        let psi = SpectralProfile::new(
            format!("partition(beta={beta})"),
            Support::Interval(0.5, 2.0),
            0,
            move |x| partition_value(x, beta),
        );
        Self {
            psi,
            // ∫ψ(t)dt/t = ln2 · ∫ η(u)/D(u) du and the integral of one
            // period of the telescoping sum is 1.
            c_psi: 1.0 / LN_2,
            sharpness: beta,
            j_range: (-20, 20),
        }
    }

    /// Restricts `j_range` to the indices that can be nonzero on the
    /// positive spectrum of `op`.
    pub fn fitted_to(mut self, op: &SelfAdjointOperator) -> Self {
        self.j_range = dyadic_range(op);
        self
    }

    pub fn psi_j(&self, j: i32, xi: f64) -> f64 {
        self.psi.eval(2f64.powi(-j) * xi)
    }

    pub fn js(&self) -> impl Iterator<Item = i32> {
        self.j_range.0..=self.j_range.1
    }
}

/// Dyadic indices j with `2^{-j}√λ ∈ (1/2, 2)` for some positive eigenvalue.
pub fn dyadic_range(op: &SelfAdjointOperator) -> (i32, i32) {
    match op.lambda_min_positive() {
        None => (0, 0),
        Some(l1) => {
            let lo = l1.sqrt().log2().floor() as i32 - 1;
            let hi = op.lambda_max().sqrt().log2().ceil() as i32 + 1;
            (lo, hi)
        }
    }
}

/// Half-width of the bump `φ` behind [`make_compact_phi`].
pub const PHI_HALF_WIDTH: f64 = 0.2;
const PHI_NODES: usize = 512;

/// `Φ(ξ) = (1/2π) ∫ φ(s) cos(sξ) ds` for an even bump `φ ≥ 0` supported in
/// `[-0.2, 0.2]` with `∫φ = 2π`, so `Φ(0) = 1`.
pub fn make_compact_phi() -> Result<SpectralProfile> {
    let a = PHI_HALF_WIDTH;
    let h = a / PHI_NODES as f64;
    // trapezoid on [0, a] of the even integrand, doubled; the bump is flat to
    // all orders at ±a so the rule converges spectrally
    let nodes: Vec<f64> = (0..=PHI_NODES).map(|i| i as f64 * h).collect();
    let bump = |s: f64| {
        let u = s / a;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u * u)).exp()
        }
    };
    let mut weights: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = if i == 0 { 1.0 } else { 2.0 };
            w * h * bump(s)
        })
        .collect();
    let mass: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= mass;
    }
    let phi = move |xi: f64| -> f64 {
        nodes
            .iter()
            .zip(&weights)
            .map(|(s, w)| w * (s * xi).cos())
            .sum()
    };
    let min_on_window = (0..=200)
        .map(|i| phi(0.5 + 1.5 * i as f64 / 200.0))
        .fold(f64::INFINITY, f64::min);
    if !(min_on_window > 0.5) {
        return Err(FslError::Degenerate(format!(
            "compact Φ drops to {min_on_window} on [1/2, 2]"
        )));
    }
    Ok(SpectralProfile::new("compact-phi", Support::Unbounded, 0, phi))
}

/// `ξ^{2m} e^{-ξ²}`, the profile of `(t²L)^m e^{-t²L}`.
pub fn heat_profile(m: u32) -> SpectralProfile {
    SpectralProfile::new(format!("heat(m={m})"), Support::Unbounded, m, move |x| {
        x.powi(2 * m as i32) * (-x * x).exp()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmBase {
    Gauss,
    Sech,
}

/// Member of the class `𝒮_m`: `ξ^{2m} φ(ξ)` with `φ` a Gaussian or `sech`.
pub fn sm_profile(m: u32, base: SmBase) -> SpectralProfile {
    let name = format!("sm(m={m},{base:?})");
    match base {
        SmBase::Gauss => SpectralProfile::new(name, Support::Unbounded, m, move |x| {
            x.powi(2 * m as i32) * (-x * x).exp()
        }),
        SmBase::Sech => SpectralProfile::new(name, Support::Unbounded, m, move |x| {
            x.powi(2 * m as i32) / x.cosh()
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProfileConfig {
    Partition {
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    Heat {
        m: u32,
    },
    CompactPhi,
    Sm {
        m: u32,
        base: SmBase,
    },
}

fn default_sharpness() -> f64 {
    DEFAULT_SHARPNESS
}

impl ProfileConfig {
    pub fn build(&self) -> Result<SpectralProfile> {
        match self {
            ProfileConfig::Partition { sharpness } => {
                if !(*sharpness > 0.0) {
                    return invalid("partition sharpness must be positive");
                }
                Ok(PartitionOfUnity::with_sharpness(*sharpness).psi)
            }
            ProfileConfig::Heat { m } => Ok(heat_profile(*m)),
            ProfileConfig::CompactPhi => make_compact_phi(),
            ProfileConfig::Sm { m, base } => Ok(sm_profile(*m, *base)),
        }
    }
}

/// Log-uniform grid `t_k = 2^{-ν_max} 2^{k/K}` with trapezoid weights for
/// `∫ … dt/t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub points_per_octave: usize,
    pub nu_max: i32,
}

/// Relative size below which a profile counts as negligible when choosing a
/// scale window.
pub const PROFILE_EPS: f64 = 1e-8;

impl ScaleGrid {
    /// Octave-aligned grid covering `[t_lo, t_hi]`.
    pub fn covering(t_lo: f64, t_hi: f64, points_per_octave: usize) -> Result<Self> {
        if !(t_lo > 0.0 && t_hi > t_lo && t_hi.is_finite()) {
            return invalid(format!("bad scale window [{t_lo}, {t_hi}]"));
        }
        if points_per_octave == 0 {
            return invalid("points per octave must be positive");
        }
        let nu_max = (-t_lo.log2()).ceil() as i32;
        let top = (-t_hi.log2()).floor() as i32;
        let octaves = (nu_max - top).max(1) as usize;
        let k_total = octaves * points_per_octave;
        let base = 2f64.powi(-nu_max);
        let t: Vec<f64> = (0..=k_total)
            .map(|k| base * 2f64.powf(k as f64 / points_per_octave as f64))
            .collect();
        let dw = LN_2 / points_per_octave as f64;
        let mut weights = vec![dw; k_total + 1];
        weights[0] *= 0.5;
        weights[k_total] *= 0.5;
        Ok(Self {
            t,
            weights,
            points_per_octave,
            nu_max,
        })
    }

    /// Window `[1/(2√λ_max), 2/√λ₁⁺]`, exact for profiles supported in
    /// `[1/2, 2]`.
    pub fn for_operator(op: &SelfAdjointOperator, points_per_octave: usize) -> Result<Self> {
        Self::for_profile(op, points_per_octave, &make_partition_of_unity().psi)
    }

    /// Window outside which `|F(t√λ)|` is below `PROFILE_EPS · sup|F|` on the
    /// whole positive spectrum.
    pub fn for_profile(
        op: &SelfAdjointOperator,
        points_per_octave: usize,
        profile: &SpectralProfile,
    ) -> Result<Self> {
        let (Some(l1), lmax) = (op.lambda_min_positive(), op.lambda_max()) else {
            return Err(FslError::Degenerate("empty positive spectrum".into()));
        };
        let (xi_lo, xi_hi) = profile_window(profile);
        Self::covering(xi_lo / lmax.sqrt(), xi_hi / l1.sqrt(), points_per_octave)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Octave index ν with `t_k ∈ [2^{-ν-1}, 2^{-ν})`.
    pub fn octave_of(&self, k: usize) -> i32 {
        self.nu_max - 1 - (k / self.points_per_octave) as i32
    }

    /// Distinct octaves from fine to coarse.
    pub fn octaves(&self) -> Vec<i32> {
        let mut v: Vec<i32> = (0..self.len()).map(|k| self.octave_of(k)).collect();
        v.dedup();
        v
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `(ξ_lo, ξ_hi)` such that the profile is negligible on `[0, ξ_lo]` and
/// `[ξ_hi, ∞)`.
pub fn profile_window(profile: &SpectralProfile) -> (f64, f64) {
    if let Support::Interval(a, b) = profile.support() {
        return (a, b);
    }
    let n = 4000;
    let xs: Vec<f64> = (0..=n)
        .map(|i| 10f64.powf(-12.0 + 15.0 * i as f64 / n as f64))
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| profile.eval(x).abs()).collect();
    let sup = vals.iter().copied().fold(0.0, f64::max);
    let tol = PROFILE_EPS * sup;
    let first = vals.iter().position(|&v| v > tol).unwrap_or(0);
    let last = vals.iter().rposition(|&v| v > tol).unwrap_or(n);
    let lo = if first == 0 { 0.0 } else { xs[first - 1] };
    let hi = if last == n { xs[n] } else { xs[last + 1] };
    (lo.max(xs[0]), hi)
}

/// `F(t√L) f`.
pub fn apply_spectral(
    op: &SelfAdjointOperator,
    profile: &SpectralProfile,
    t: f64,
    f: &[f64],
) -> Vec<f64> {
    op.apply_fn(|l| profile.eval(t * l.sqrt()), f)
}

/// Columns `F(t_k√L) f` for all scales, given the spectral coefficients of f.
pub fn spectral_field_from_coeffs(
    op: &SelfAdjointOperator,
    profile: &SpectralProfile,
    ts: &[f64],
    coeffs: &[f64],
) -> DMatrix<f64> {
    let n = op.len();
    let lam = op.eigenvalues();
    let c = DMatrix::from_fn(n, ts.len(), |i, k| {
        if coeffs[i] == 0.0 {
            0.0
        } else {
            profile.eval(ts[k] * lam[i].sqrt()) * coeffs[i]
        }
    });
    op.eigenvectors() * c
}

pub fn spectral_field(
    op: &SelfAdjointOperator,
    profile: &SpectralProfile,
    ts: &[f64],
    f: &[f64],
) -> DMatrix<f64> {
    spectral_field_from_coeffs(op, profile, ts, &op.coefficients(f))
}

/// Kernel of `F1(t√L) F2(s√L)`.
pub fn composed_kernel(
    op: &SelfAdjointOperator,
    f1: &SpectralProfile,
    f2: &SpectralProfile,
    t: f64,
    s: f64,
) -> DMatrix<f64> {
    op.kernel_fn(|l| {
        let r = l.sqrt();
        f1.eval(t * r) * f2.eval(s * r)
    })
}

/// `max_{x,y} |K(x,y)| V(x∨y, t) (1 + d(x,y)/t)^N (t/s)^{2ℓ}` for the kernel
/// of `F1(t√L) F2(s√L)`.
pub fn kernel_bound_check(
    op: &SelfAdjointOperator,
    f1: &SpectralProfile,
    f2: &SpectralProfile,
    t: f64,
    s: f64,
    n_decay: f64,
    ell: u32,
) -> Result<f64> {
    if !(t > 0.0 && s > 0.0) {
        return invalid("scales must be positive");
    }
    if ell > 0 && s > t * (1.0 + 1e-12) {
        return invalid(format!("the (s/t)^(2l) gain needs s <= t, got s={s}, t={t}"));
    }
    if f2.vanish_order() < ell {
        return invalid(format!(
            "second profile vanishes to order {} < {ell}",
            f2.vanish_order()
        ));
    }
    let k = composed_kernel(op, f1, f2, t, s);
    let space = op.space();
    let n = space.len();
    let vols: Vec<f64> = (0..n).map(|x| space.volume(x, t)).collect();
    let gain = (t / s).powi(2 * ell as i32);
    let mut c: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let v = vols[x].max(vols[y]);
            let decay = (1.0 + space.dist(x, y) / t).powf(n_decay);
            c = c.max(k[(x, y)].abs() * v * decay * gain);
        }
    }
    Ok(c)
}

/// Scalar multiplier `c_ψ Σ_k w_k ψ(t_k √λ)` of the discretized Calderón
/// formula.
pub fn calderon_multiplier(pou: &PartitionOfUnity, grid: &ScaleGrid, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let r = lambda.sqrt();
    pou.c_psi
        * grid
            .t
            .iter()
            .zip(&grid.weights)
            .map(|(t, w)| w * pou.psi.eval(t * r))
            .sum::<f64>()
}

/// `f̂ = c_ψ Σ_k w_k ψ(t_k√L) f` and `‖f̂ − P⁺f‖₂ / ‖f‖₂`.
pub fn calderon_reconstruct(
    op: &SelfAdjointOperator,
    pou: &PartitionOfUnity,
    grid: &ScaleGrid,
    f: &[f64],
) -> (Vec<f64>, f64) {
    let f_hat = op.apply_fn(|l| calderon_multiplier(pou, grid, l), f);
    let residual = relative_residual(op, &f_hat, &op.project_off_kernel(f), f);
    (f_hat, residual)
}

/// `Σ_j ψ_j(√L) f` over `pou.j_range` and its residual against `P⁺f`.
pub fn dyadic_reconstruct(
    op: &SelfAdjointOperator,
    pou: &PartitionOfUnity,
    f: &[f64],
) -> (Vec<f64>, f64) {
    let f_hat = op.apply_fn(
        |l| {
            let r = l.sqrt();
            pou.js().map(|j| pou.psi_j(j, r)).sum()
        },
        f,
    );
    let residual = relative_residual(op, &f_hat, &op.project_off_kernel(f), f);
    (f_hat, residual)
}

pub(crate) fn relative_residual(
    op: &SelfAdjointOperator,
    approx: &[f64],
    target: &[f64],
    reference: &[f64],
) -> f64 {
    let diff: Vec<f64> = approx.iter().zip(target).map(|(a, b)| a - b).collect();
    let den = op.l2_norm(reference);
    if den == 0.0 {
        0.0
    } else {
        op.l2_norm(&diff) / den
    }
}

/// `(1 + levels[i]/t)^{-λ}` for every distance level of the space.
pub fn decay_table(space: &MetricMeasureSpace, t: f64, lambda_exp: f64) -> Vec<f64> {
    space
        .distance_levels()
        .iter()
        .map(|d| (1.0 + d / t).powf(-lambda_exp))
        .collect()
}

/// `max_y |g(y)| (1 + d(x,y)/t)^{-λ}` for a precomputed field `g`.
pub fn peetre_of_field(space: &MetricMeasureSpace, g: &[f64], t: f64, lambda_exp: f64) -> Vec<f64> {
    let table = decay_table(space, t, lambda_exp);
    let n = space.len();
    let abs: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    (0..n)
        .map(|x| {
            let mut m: f64 = 0.0;
            for y in 0..n {
                m = m.max(abs[y] * table[space.dist_level(x, y)]);
            }
            m
        })
        .collect()
}

/// Peetre maximal function `(F*_λ f)(x) = max_y |F(t√L)f(y)| / (1 + d(x,y)/t)^λ`.
pub fn peetre_maximal(
    op: &SelfAdjointOperator,
    profile: &SpectralProfile,
    t: f64,
    lambda_exp: f64,
    f: &[f64],
) -> Vec<f64> {
    let g = apply_spectral(op, profile, t, f);
    peetre_of_field(op.space(), &g, t, lambda_exp)
}

/// Classical homogeneous splitting `Σ_k φ(2^{-k}λ) η(2^{-k}λ) = 1` built from
/// a profile `φ` that does not vanish on `[1/2, 2]`, with the head
/// `Φ(λ) = Σ_{k≤0} φη(2^{-k}λ)`, `Φ(0) = 1`.
#[derive(Debug, Clone)]
pub struct DkpSplit {
    pub phi: SpectralProfile,
    pub eta: SpectralProfile,
    pub head: SpectralProfile,
}

impl DkpSplit {
    pub fn new(phi: SpectralProfile, pou: &PartitionOfUnity) -> Result<Self> {
        let min = (0..=400)
            .map(|i| phi.eval(0.5 + 1.5 * i as f64 / 400.0).abs())
            .fold(f64::INFINITY, f64::min);
        if !(min > 1e-12) {
            return Err(FslError::Degenerate(
                "profile vanishes on [1/2, 2]; no splitting".into(),
            ));
        }
        let (psi, p2) = (pou.psi.clone(), phi.clone());
        let eta = SpectralProfile::new("dkp-eta", Support::Interval(0.5, 2.0), 0, move |x| {
            psi.eval(x) / p2.eval(x)
        });
        let psi = pou.psi.clone();
        let head = SpectralProfile::new("dkp-head", Support::Interval(-1.0, 2.0), 0, move |x| {
            if x <= 0.5 {
                return 1.0;
            }
            (0..=2).map(|k| psi.eval(2f64.powi(k) * x)).sum()
        });
        Ok(Self { phi, eta, head })
    }

    /// `Φ(2^{-j}t√L)f + Σ_{k=1}^{k_max} (φη)(2^{-(k+j)}t√L) f`.
    pub fn apply(&self, op: &SelfAdjointOperator, j: i32, t: f64, k_max: i32, f: &[f64]) -> Vec<f64> {
        op.apply_fn(
            |l| {
                let r = t * l.sqrt();
                let mut s = self.head.eval(2f64.powi(-j) * r);
                for k in 1..=k_max {
                    let x = 2f64.powi(-(k + j)) * r;
                    s += self.phi.eval(x) * self.eta.eval(x);
                }
                s
            },
            f,
        )
    }
}

/// `t` values `2^{-j}` for which the whole support annulus of `ψ_j` lies in
/// `[√λ₁⁺, √λ_max]`.
pub fn interior_scales(op: &SelfAdjointOperator) -> Vec<f64> {
    let Some(l1) = op.lambda_min_positive() else {
        return Vec::new();
    };
    let (lo, hi) = (l1.sqrt(), op.lambda_max().sqrt());
    dyadic_range_iter(op)
        .filter(|&j| {
            let c = 2f64.powi(j);
            c / 2.0 >= lo && 2.0 * c <= hi
        })
        .map(|j| 2f64.powi(-j))
        .collect()
}

fn dyadic_range_iter(op: &SelfAdjointOperator) -> impl Iterator<Item = i32> {
    let (a, b) = dyadic_range(op);
    a..=b
}

/// `∫₀^∞ F(ξ) dξ/ξ` by a fine log-trapezoid on the profile window.
pub fn log_integral(profile: &SpectralProfile) -> f64 {
    let (lo, hi) = profile_window(profile);
    let lo = lo.max(1e-12);
    let n = 20000;
    let (a, b) = (lo.ln(), hi.ln());
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * profile.eval((a + i as f64 * h).exp())
        })
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_endpoints_vanish() {
        let pou = make_partition_of_unity();
        assert_eq!(pou.psi.eval(0.5), 0.0);
        assert_eq!(pou.psi.eval(2.0), 0.0);
        assert_eq!(pou.psi.eval(0.0), 0.0);
    }

    #[test]
    fn telescoping_sum() {
        let pou = make_partition_of_unity();
        for lam in [0.3, 1.0, 7.77, 100.0] {
            let s: f64 = (-20..=20).map(|j| pou.psi_j(j, lam)).sum();
            assert!((s - 1.0).abs() <= 1e-12, "λ={lam}: {s}");
        }
    }

    #[test]
    fn c_psi_matches_quadrature() {
        let pou = make_partition_of_unity();
        let i = log_integral(&pou.psi);
        assert!((1.0 / i - pou.c_psi).abs() < 1e-9, "{i}");
    }

    #[test]
    fn compact_phi_normalized_and_even() {
        let phi = make_compact_phi().unwrap();
        assert!((phi.eval(0.0) - 1.0).abs() < 1e-10);
        assert_eq!(phi.eval(-1.3), phi.eval(1.3));
        let min = (0..=300)
            .map(|i| phi.eval(0.5 + 1.5 * i as f64 / 300.0))
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.5);
    }

    #[test]
    fn grid_weights_integrate_dt_over_t() {
        let g = ScaleGrid::covering(0.003, 0.7, 16).unwrap();
        let exact = (g.t.last().unwrap() / g.t[0]).ln();
        assert!((g.total_weight() - exact).abs() < 1e-13);
        assert!(g.t[0] <= 0.003 && *g.t.last().unwrap() >= 0.7);
        // each point lies in its octave
        for k in 0..g.len() {
            let nu = g.octave_of(k);
            assert!(g.t[k] >= 2f64.powi(-nu - 1) * (1.0 - 1e-14));
            assert!(g.t[k] < 2f64.powi(-nu) * (1.0 - 1e-14));
        }
    }

    #[test]
    fn heat_window_brackets_peak() {
        let (lo, hi) = profile_window(&heat_profile(1));
        assert!(lo < 1e-3 && hi > 4.0 && hi < 10.0);
    }
}
