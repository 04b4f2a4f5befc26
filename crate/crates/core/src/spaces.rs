//! Norm functionals of the weighted Besov and Triebel–Lizorkin spaces, the
//! identification norms (L^p, Hardy, BMO, Sobolev) and the equivalence
//! harness.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::apps::{spectral_power, KERNEL_COMPONENT_TOL};
use crate::calculus::{
    decay_table, heat_profile, make_partition_of_unity, peetre_of_field, profile_window,
    sm_profile, spectral_field_from_coeffs, PartitionOfUnity, ScaleGrid, SmBase, SpectralProfile,
};
use crate::error::{invalid, FslError, Result};
use crate::operator::SelfAdjointOperator;
use crate::space::{estimate_doubling, MetricMeasureSpace};
use crate::weights::{critical_indices, weighted_lp_norm, Weight, WeightConfig};

/// Points per octave of the default continuous scale grid.
pub const DEFAULT_POINTS_PER_OCTAVE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Dyadic,
    Continuous,
    Peetre,
    GFunction,
    Lusin,
}

/// Which functional a [`NormEngine`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    Besov,
    Triebel,
    FInfinity,
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::Besov => "besov",
            Functional::Triebel => "triebel",
            Functional::FInfinity => "f-infinity",
        }
    }
}

/// Scale analyzer: a dyadic partition of unity or a general profile used at
/// scales `2^{-j}` (dyadic) or `t` (continuous).
#[derive(Debug, Clone)]
pub enum Analyzer {
    Partition(PartitionOfUnity),
    Profile(SpectralProfile),
}

impl Analyzer {
    pub fn profile(&self) -> &SpectralProfile {
        match self {
            Analyzer::Partition(p) => &p.psi,
            Analyzer::Profile(p) => p,
        }
    }
}

/// `(n, q_w)`: doubling exponent and critical `A_p` index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureIndices {
    pub n: f64,
    pub qw: f64,
}

impl StructureIndices {
    pub fn measure(space: &MetricMeasureSpace, w: &Weight) -> Self {
        Self {
            n: estimate_doubling(space).n_exp,
            qw: critical_indices(space, w).qw_est,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub weight: Weight,
    pub analyzer: Analyzer,
    /// Peetre / g-function exponent; `None` picks the admissibility threshold
    /// plus one.
    pub lambda_exp: Option<f64>,
    /// Lusin aperture `a`.
    pub aperture: f64,
    /// Continuous scale grid; `None` derives one from the analyzer window.
    pub grid: Option<ScaleGrid>,
    pub points_per_octave: usize,
    pub flavor: Flavor,
    /// Precomputed `(n, q_w)`; measured on demand otherwise.
    pub indices: Option<StructureIndices>,
}

impl NormParams {
    pub fn new(alpha: f64, p: f64, q: f64, weight: Weight) -> Self {
        Self {
            alpha,
            p,
            q,
            weight,
            analyzer: Analyzer::Partition(make_partition_of_unity()),
            lambda_exp: None,
            aperture: 1.0,
            grid: None,
            points_per_octave: DEFAULT_POINTS_PER_OCTAVE,
            flavor: Flavor::Dyadic,
            indices: None,
        }
    }

    pub fn with_flavor(mut self, flavor: Flavor) -> Self {
        self.flavor = flavor;
        self
    }

    pub fn with_analyzer(mut self, analyzer: Analyzer) -> Self {
        self.analyzer = analyzer;
        self
    }

    pub fn with_lambda(mut self, lambda_exp: f64) -> Self {
        self.lambda_exp = Some(lambda_exp);
        self
    }

    pub fn with_aperture(mut self, a: f64) -> Self {
        self.aperture = a;
        self
    }

    pub fn with_grid(mut self, grid: ScaleGrid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_points_per_octave(mut self, k: usize) -> Self {
        self.points_per_octave = k;
        self
    }

    pub fn with_indices(mut self, indices: StructureIndices) -> Self {
        self.indices = Some(indices);
        self
    }

    /// Canonical parameter string used in reports and baseline keys.
    pub fn describe(&self) -> String {
        format!(
            "alpha={},p={},q={},w={}",
            self.alpha,
            self.p,
            self.q,
            weight_label(&self.weight)
        )
    }
}

pub fn weight_label(w: &Weight) -> String {
    match w.descriptor() {
        WeightConfig::Constant { value } if *value == 1.0 => "unit".into(),
        WeightConfig::Constant { value } => format!("const({value})"),
        WeightConfig::Power { center, exponent } => format!("power({center};{exponent})"),
        WeightConfig::Explicit { .. } => "explicit".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleTerm {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// `t^{-α} ‖F(t√L) f‖_{p,w}` per scale (sup norm when `p = ∞`).
    pub diagnostics: Vec<ScaleTerm>,
}

/// `(Σ_k w_k v_k^q)^{1/q}`, or `max_k v_k` for `q = ∞`.
fn lq(terms: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    if q.is_infinite() {
        terms.fold(0.0, |m, (_, v)| m.max(v))
    } else {
        terms.map(|(w, v)| w * v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return invalid(format!("{name} must lie in (0, inf], got {v}"));
    }
    Ok(())
}

/// Evaluates one functional for fixed parameters; validation, scale sets and
/// geometric tables are prepared once.
#[derive(Debug, Clone)]
pub struct NormEngine<'a> {
    op: &'a SelfAdjointOperator,
    params: NormParams,
    functional: Functional,
    /// Ascending scales and their quadrature weights.
    t: Vec<f64>,
    w: Vec<f64>,
    lambda_exp: f64,
    /// `(1 + d/t_k)^{-λ}` (Peetre) or `^{-λq}` (g-function) per distance level.
    decay: Vec<Vec<f64>>,
    /// `V(x, t_k)`, `[k][x]`.
    vols: Vec<Vec<f64>>,
    /// `|B(x, a t_k)|`, `[k][x]`.
    cone_len: Vec<Vec<usize>>,
}

impl<'a> NormEngine<'a> {
    pub fn new(op: &'a SelfAdjointOperator, params: NormParams, functional: Functional) -> Result<Self> {
        let (p, q) = (params.p, params.q);
        check_exponent("q", q)?;
        if functional != Functional::FInfinity {
            check_exponent("p", p)?;
        }
        if !params.alpha.is_finite() {
            return invalid("alpha must be finite");
        }
        if params.weight.values().len() != op.len() {
            return invalid("weight length does not match the space");
        }
        let flavor = params.flavor;
        match functional {
            Functional::Besov | Functional::FInfinity => {
                if matches!(flavor, Flavor::GFunction | Flavor::Lusin) {
                    return invalid(format!(
                        "{flavor:?} flavor applies to the Triebel-Lizorkin norm only"
                    ));
                }
            }
            Functional::Triebel => {
                if p.is_infinite() {
                    return invalid("p = inf is not a Triebel-Lizorkin norm; use f_infinity_norm");
                }
            }
        }
        if matches!(flavor, Flavor::GFunction | Flavor::Lusin) && q.is_infinite() {
            return invalid("square functions need q < inf");
        }
        if flavor == Flavor::Lusin && !(params.aperture >= 1.0) {
            return invalid(format!("aperture must be >= 1, got {}", params.aperture));
        }
        let space = op.space();
        let lambda_exp = if matches!(flavor, Flavor::Peetre | Flavor::GFunction) {
            let idx = match params.indices {
                Some(i) => i,
                None => StructureIndices::measure(space, &params.weight),
            };
            let need = lambda_threshold(functional, flavor, p, q, idx);
            match params.lambda_exp {
                Some(l) if l > need => l,
                Some(l) => {
                    return invalid(format!("lambda {l} must exceed {need}"));
                }
                None => need + 1.0,
            }
        } else {
            0.0
        };
        let (t, w) = if flavor == Flavor::Dyadic {
            dyadic_scales(op, params.analyzer.profile())
        } else {
            let grid = match &params.grid {
                Some(g) => g.clone(),
                None => ScaleGrid::for_profile(op, params.points_per_octave, params.analyzer.profile())?,
            };
            (grid.t, grid.weights)
        };
        if t.is_empty() {
            return Err(FslError::Degenerate("empty scale set".into()));
        }
        let decay = match flavor {
            Flavor::Peetre => t.iter().map(|&s| decay_table(space, s, lambda_exp)).collect(),
            Flavor::GFunction => t
                .iter()
                .map(|&s| decay_table(space, s, lambda_exp * q))
                .collect(),
            _ => Vec::new(),
        };
        let n = op.len();
        let (vols, cone_len) = if matches!(flavor, Flavor::GFunction | Flavor::Lusin) {
            let vols = t
                .iter()
                .map(|&s| (0..n).map(|x| space.volume(x, s)).collect())
                .collect();
            let cones = t
                .iter()
                .map(|&s| (0..n).map(|x| space.ball_len(x, params.aperture * s)).collect())
                .collect();
            (vols, cones)
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            op,
            params,
            functional,
            t,
            w,
            lambda_exp,
            decay,
            vols,
            cone_len,
        })
    }

    pub fn params(&self) -> &NormParams {
        &self.params
    }

    pub fn functional(&self) -> Functional {
        self.functional
    }

    pub fn scales(&self) -> &[f64] {
        &self.t
    }

    pub fn scale_weights(&self) -> &[f64] {
        &self.w
    }

    /// Effective Peetre / g-function exponent (0 when unused).
    pub fn lambda_exp(&self) -> f64 {
        self.lambda_exp
    }

    /// Columns `F(t_k√L) f`, Peetre-maximized for that flavor.
    pub fn field(&self, f: &[f64]) -> DMatrix<f64> {
        let coeffs = self.op.coefficients(f);
        let mut g = spectral_field_from_coeffs(self.op, self.params.analyzer.profile(), &self.t, &coeffs);
        if self.params.flavor == Flavor::Peetre {
            let space = self.op.space();
            for (k, &s) in self.t.iter().enumerate() {
                let col: Vec<f64> = g.column(k).iter().copied().collect();
                let pm = peetre_of_field(space, &col, s, self.lambda_exp);
                g.column_mut(k).copy_from_slice(&pm);
            }
        }
        g
    }

    pub fn norm(&self, f: &[f64]) -> Result<NormValue> {
        let g = self.field(f);
        Ok(self.norm_of_field(&g))
    }

    fn diagnostics(&self, g: &DMatrix<f64>, p: f64) -> Vec<ScaleTerm> {
        let space = self.op.space();
        let wt = &self.params.weight;
        self.t
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let col: Vec<f64> = g.column(k).iter().copied().collect();
                ScaleTerm {
                    t: s,
                    value: s.powf(-self.params.alpha) * weighted_lp_norm(space, &col, p, wt),
                }
            })
            .collect()
    }

    pub fn norm_of_field(&self, g: &DMatrix<f64>) -> NormValue {
        match self.functional {
            Functional::Besov => {
                let diagnostics = self.diagnostics(g, self.params.p);
                let value = lq(
                    self.w.iter().zip(&diagnostics).map(|(w, d)| (*w, d.value)),
                    self.params.q,
                );
                NormValue { value, diagnostics }
            }
            Functional::Triebel => {
                let h = self.pointwise(g);
                NormValue {
                    value: weighted_lp_norm(self.op.space(), &h, self.params.p, &self.params.weight),
                    diagnostics: self.diagnostics(g, self.params.p),
                }
            }
            Functional::FInfinity => NormValue {
                value: self.carleson(g),
                diagnostics: self.diagnostics(g, f64::INFINITY),
            },
        }
    }

    /// The pointwise square/`ℓ^q` function whose `L^p_w` norm is the
    /// Triebel–Lizorkin norm of the flavor.
    pub fn pointwise(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let n = self.op.len();
        let (alpha, q) = (self.params.alpha, self.params.q);
        let scale: Vec<f64> = self.t.iter().map(|s| s.powf(-alpha)).collect();
        match self.params.flavor {
            Flavor::Dyadic | Flavor::Continuous | Flavor::Peetre => (0..n)
                .map(|x| {
                    lq(
                        (0..self.t.len()).map(|k| (self.w[k], scale[k] * g[(x, k)].abs())),
                        q,
                    )
                })
                .collect(),
            Flavor::GFunction | Flavor::Lusin => {
                let space = self.op.space();
                let mu = space.measure();
                let mut acc = vec![0.0; n];
                for k in 0..self.t.len() {
                    let pk: Vec<f64> = (0..n)
                        .map(|y| mu[y] * (scale[k] * g[(y, k)].abs()).powf(q))
                        .collect();
                    for (x, a) in acc.iter_mut().enumerate() {
                        let s = if self.params.flavor == Flavor::GFunction {
                            let table = &self.decay[k];
                            (0..n).map(|y| pk[y] * table[space.dist_level(x, y)]).sum::<f64>()
                        } else {
                            let row = &space.sorted_row(x)[..self.cone_len[k][x]];
                            row.iter().map(|&y| pk[y as usize]).sum::<f64>()
                        };
                        *a += self.w[k] * s / self.vols[k][x];
                    }
                }
                acc.into_iter().map(|v| v.powf(1.0 / q)).collect()
            }
        }
    }

    /// `sup_B (V(B)/w(B)² Σ_{t_k ≤ r_B} w_k ∫_B (t_k^{-α}|F_k|)^q dμ)^{1/q}`
    /// over every (center, radius) ball; `q = ∞` takes the sup over scales of
    /// `V(B)/w(B)² ∫_B t_k^{-α}|F_k| dμ`.
    fn carleson(&self, g: &DMatrix<f64>) -> f64 {
        let space = self.op.space();
        let n = space.len();
        let mu = space.measure();
        let wv = self.params.weight.values();
        let (alpha, q) = (self.params.alpha, self.params.q);
        let s_count = self.t.len();
        let scale: Vec<f64> = self.t.iter().map(|s| s.powf(-alpha)).collect();
        // cum[y][m] = Σ_{k<m} w_k (t_k^{-α}|F_k(y)|)^q, or per-scale values for q = ∞
        let stride = s_count + 1;
        let mut cum = vec![0.0; n * stride];
        for y in 0..n {
            for k in 0..s_count {
                let v = scale[k] * g[(y, k)].abs();
                cum[y * stride + k + 1] = if q.is_infinite() {
                    v
                } else {
                    cum[y * stride + k] + self.w[k] * v.powf(q)
                };
            }
        }
        let mut best: f64 = 0.0;
        let mut per_scale = vec![0.0; s_count];
        for ball in space.all_balls() {
            let m = self.t.partition_point(|&s| s <= ball.radius);
            if m == 0 {
                continue;
            }
            let members = space.members(ball);
            let mut vol = 0.0;
            let mut wb = 0.0;
            for &y in members {
                let y = y as usize;
                vol += mu[y];
                wb += wv[y] * mu[y];
            }
            let factor = vol / (wb * wb);
            if q.is_infinite() {
                per_scale[..m].iter_mut().for_each(|v| *v = 0.0);
                for &y in members {
                    let y = y as usize;
                    for (k, v) in per_scale[..m].iter_mut().enumerate() {
                        *v += mu[y] * cum[y * stride + k + 1];
                    }
                }
                let top = per_scale[..m].iter().copied().fold(0.0, f64::max);
                best = best.max(factor * top);
            } else {
                let s: f64 = members
                    .iter()
                    .map(|&y| mu[y as usize] * cum[y as usize * stride + m])
                    .sum();
                best = best.max((factor * s).powf(1.0 / q));
            }
        }
        best
    }
}

/// Admissibility threshold for the Peetre / g-function exponent.
pub fn lambda_threshold(
    functional: Functional,
    flavor: Flavor,
    p: f64,
    q: f64,
    idx: StructureIndices,
) -> f64 {
    let StructureIndices { n, qw } = idx;
    match (functional, flavor) {
        (Functional::Besov, _) => n * qw / p,
        (Functional::Triebel, Flavor::GFunction) => n * qw / p.min(q),
        (Functional::Triebel, _) => (n / q).max(n * qw / p),
        // w ∈ A_r for every r > q_w (and r > 1); the bound n r/q + 2 n r²/q
        // is taken at r = max(q_w, 1)
        (Functional::FInfinity, _) => {
            let r = qw.max(1.0);
            n * r / q + 2.0 * n * r * r / q
        }
    }
}

/// Ascending dyadic scales `2^{-j}` on which `F(2^{-j}√λ)` can be
/// non-negligible for some positive eigenvalue, each with weight 1.
fn dyadic_scales(op: &SelfAdjointOperator, profile: &SpectralProfile) -> (Vec<f64>, Vec<f64>) {
    let (Some(l1), lmax) = (op.lambda_min_positive(), op.lambda_max()) else {
        return (Vec::new(), Vec::new());
    };
    let (lo, hi) = profile_window(profile);
    let j_lo = (l1.sqrt() / hi).log2().floor() as i32;
    let j_hi = (lmax.sqrt() / lo).log2().ceil() as i32;
    let t: Vec<f64> = (j_lo..=j_hi).rev().map(|j| 2f64.powi(-j)).collect();
    let w = vec![1.0; t.len()];
    (t, w)
}

pub fn besov_norm(op: &SelfAdjointOperator, f: &[f64], params: &NormParams) -> Result<NormValue> {
    NormEngine::new(op, params.clone(), Functional::Besov)?.norm(f)
}

pub fn triebel_norm(op: &SelfAdjointOperator, f: &[f64], params: &NormParams) -> Result<NormValue> {
    NormEngine::new(op, params.clone(), Functional::Triebel)?.norm(f)
}

/// Carleson-type `Ḟ^α_{∞,q,w}` functional; `params.p` is ignored.
pub fn f_infinity_norm(
    op: &SelfAdjointOperator,
    f: &[f64],
    params: &NormParams,
) -> Result<NormValue> {
    NormEngine::new(op, params.clone(), Functional::FInfinity)?.norm(f)
}

/// `sup_B w(B)^{-1} ∫_B |(I − e^{-r_B² L}) f| dμ` over every (center, radius)
/// ball, radius ∞ included.
pub fn bmo_l_norm(op: &SelfAdjointOperator, f: &[f64], w: &Weight) -> f64 {
    let space = op.space();
    let mu = space.measure();
    let wv = w.values();
    let coeffs = op.coefficients(f);
    let lam = op.eigenvalues();
    let mut radii: Vec<f64> = space.distance_levels()[1..].to_vec();
    radii.push(f64::INFINITY);
    let mut best: f64 = 0.0;
    let balls = space.all_balls();
    for &r in &radii {
        let c: Vec<f64> = coeffs
            .iter()
            .zip(lam)
            .map(|(c, &l)| {
                let m = if l <= 0.0 {
                    0.0
                } else if r.is_infinite() {
                    1.0
                } else {
                    -(-r * r * l).exp_m1()
                };
                c * m
            })
            .collect();
        let g = op.synthesize(&c);
        for ball in balls.iter().filter(|b| b.radius == r) {
            let mut s = 0.0;
            let mut wb = 0.0;
            for &y in space.members(ball) {
                let y = y as usize;
                s += g[y].abs() * mu[y];
                wb += wv[y] * mu[y];
            }
            best = best.max(s / wb);
        }
    }
    best
}

/// Parameters of the area function `S_L` behind the Hardy norm: aperture-1
/// Lusin function, `q = 2`, `α = 0`, profile `ξ² e^{-ξ²}`.
pub fn hardy_params(p: f64, w: Weight) -> NormParams {
    NormParams::new(0.0, p, 2.0, w)
        .with_analyzer(Analyzer::Profile(heat_profile(1)))
        .with_flavor(Flavor::Lusin)
        .with_aperture(1.0)
}

/// `‖S_L f‖_{p,w}` with `S_L` the area function of `t² L e^{-t² L} f`.
pub fn hardy_norm(op: &SelfAdjointOperator, f: &[f64], p: f64, w: &Weight) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return invalid(format!("Hardy norm needs 0 < p <= 1, got {p}"));
    }
    Ok(triebel_norm(op, f, &hardy_params(p, w.clone()))?.value)
}

/// `‖L^{s/2} f‖_{p,w}`.
pub fn sobolev_norm(
    op: &SelfAdjointOperator,
    f: &[f64],
    s: f64,
    p: f64,
    w: &Weight,
) -> Result<f64> {
    check_exponent("p", p)?;
    let g = spectral_power(op, f, s)?;
    Ok(weighted_lp_norm(op.space(), &g, p, w))
}

/// Spectral band of random test fields, counted from the first positive
/// eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Band {
    /// Random start and a length drawn from `[min_len, max_len]`.
    Random { min_len: usize, max_len: usize },
    Fixed { start: usize, len: usize },
}

impl Default for Band {
    fn default() -> Self {
        Band::Random {
            min_len: 8,
            max_len: 32,
        }
    }
}

/// Seeded field with i.i.d. standard normal coefficients on a band of
/// eigenvectors off `ker L`. Sample `index` uses ChaCha8 stream `index`.
pub fn random_field(op: &SelfAdjointOperator, band: Band, seed: u64, index: u64) -> Result<Vec<f64>> {
    let kdim = op.kernel_dim();
    let avail = op.len() - kdim;
    if avail == 0 {
        return Err(FslError::Degenerate("empty spectrum window".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let (start, len) = match band {
        Band::Random { min_len, max_len } => {
            if min_len == 0 || min_len > max_len {
                return invalid(format!("bad band lengths [{min_len}, {max_len}]"));
            }
            let len = rng.random_range(min_len..=max_len).min(avail);
            (rng.random_range(0..=avail - len), len)
        }
        Band::Fixed { start, len } => {
            if len == 0 || start + len > avail {
                return Err(FslError::Degenerate(format!(
                    "band [{start}, {}) outside the {avail} positive modes",
                    start + len
                )));
            }
            (start, len)
        }
    };
    let mut c = vec![0.0; op.len()];
    for ck in &mut c[kdim + start..kdim + start + len] {
        *ck = rng.sample(StandardNormal);
    }
    Ok(op.synthesize(&c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

impl RatioStats {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n == 0 {
            return Self {
                min: f64::NAN,
                max: f64::NAN,
                median: f64::NAN,
            };
        }
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Self {
            min: v[0],
            max: v[n - 1],
            median,
        }
    }

    /// `max / min`.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// Relative round-off allowance on analytic ratio bounds.
pub const BOUNDS_RTOL: f64 = 1e-12;

/// Ratio statistics of one comparison at one parameter tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEntry {
    pub label: String,
    pub params: String,
    pub ratios: RatioStats,
    /// Analytic interval the ratios must lie in, when one is known.
    pub bounds: Option<[f64; 2]>,
}

impl RatioEntry {
    pub fn from_ratios(label: impl Into<String>, params: impl Into<String>, r: &[f64]) -> Self {
        Self {
            label: label.into(),
            params: params.into(),
            ratios: RatioStats::of(r),
            bounds: None,
        }
    }

    pub fn key(&self) -> String {
        format!("{}|{}", self.label, self.params)
    }

    pub fn within_bounds(&self) -> bool {
        match self.bounds {
            None => true,
            Some([lo, hi]) => {
                self.ratios.min >= lo * (1.0 - BOUNDS_RTOL) && self.ratios.max <= hi * (1.0 + BOUNDS_RTOL)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub check: String,
    pub samples: usize,
    pub seed: u64,
    pub entries: Vec<RatioEntry>,
    pub extra: BTreeMap<String, f64>,
}

impl EquivalenceReport {
    pub fn new(check: impl Into<String>, samples: usize, seed: u64, entries: Vec<RatioEntry>) -> Self {
        Self {
            check: check.into(),
            samples,
            seed,
            entries,
            extra: BTreeMap::new(),
        }
    }

    /// Every ratio is positive and finite and every analytic bound holds.
    pub fn sane(&self) -> bool {
        self.entries.iter().all(|e| {
            e.ratios.min > 0.0 && e.ratios.max.is_finite() && e.within_bounds()
        })
    }
}

pub const CHECKS: [&str; 12] = [
    "two-partitions",
    "dyadic-vs-continuous",
    "peetre-vs-plain",
    "sm-characterization",
    "heat-characterization",
    "lp-identity",
    "hardy-identity",
    "bmo-identity",
    "sobolev-identity",
    "hardy-sobolev-identity",
    "change-of-angle",
    "f-infinity-chars",
];

/// One parameter tuple of an equivalence check.
#[derive(Debug, Clone)]
pub struct CheckParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub weight: Weight,
    /// Smoothness shift for the Sobolev-type identities.
    pub s: f64,
}

impl CheckParams {
    pub fn new(alpha: f64, p: f64, q: f64, weight: Weight) -> Self {
        Self {
            alpha,
            p,
            q,
            weight,
            s: 0.0,
        }
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    fn norm_params(&self) -> NormParams {
        NormParams::new(self.alpha, self.p, self.q, self.weight.clone())
    }

    pub fn describe(&self) -> String {
        let base = self.norm_params().describe();
        if self.s != 0.0 {
            format!("s={},{base}", self.s)
        } else {
            base
        }
    }
}

/// One side of a comparison.
enum Side<'a> {
    Engine(NormEngine<'a>),
    Lp { p: f64, w: Weight },
    Bmo { w: Weight },
    Hardy(NormEngine<'a>),
    Sobolev { s: f64, p: f64, w: Weight },
    HardySobolev { s: f64, engine: NormEngine<'a> },
}

impl Side<'_> {
    fn eval(&self, op: &SelfAdjointOperator, f: &[f64]) -> Result<f64> {
        Ok(match self {
            Side::Engine(e) | Side::Hardy(e) => e.norm(f)?.value,
            Side::Lp { p, w } => weighted_lp_norm(op.space(), &op.project_off_kernel(f), *p, w),
            Side::Bmo { w } => bmo_l_norm(op, f, w),
            Side::Sobolev { s, p, w } => sobolev_norm(op, f, *s, *p, w)?,
            Side::HardySobolev { s, engine } => engine.norm(&spectral_power(op, f, *s)?)?.value,
        })
    }
}

struct Comparison<'a> {
    label: String,
    params: String,
    num: Side<'a>,
    den: Side<'a>,
    bounds: Option<[f64; 2]>,
}

/// Second partition of unity used by the two-partitions check.
pub const ALT_SHARPNESS: f64 = 3.0;
/// Apertures of the change-of-angle sweep.
pub const APERTURES: [f64; 3] = [1.0, 2.0, 4.0];

/// `[min_λ (Σ_j ψ_j(λ)²)^{1/2}, max_λ (…)^{1/2}]` over one octave, which by
/// dilation invariance covers all `λ > 0`.
pub fn parseval_band(pou: &PartitionOfUnity) -> [f64; 2] {
    let samples = 4096;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..samples {
        let x = 2f64.powf(i as f64 / samples as f64);
        let s: f64 = (-3..=3).map(|j| pou.psi_j(j, x).powi(2)).sum();
        lo = lo.min(s.sqrt());
        hi = hi.max(s.sqrt());
    }
    [lo, hi]
}

fn engine<'a>(op: &'a SelfAdjointOperator, p: NormParams, k: Functional, idx: StructureIndices) -> Result<NormEngine<'a>> {
    NormEngine::new(op, p.with_indices(idx), k)
}

fn comparisons<'a>(
    op: &'a SelfAdjointOperator,
    check: &str,
    cp: &CheckParams,
    idx: StructureIndices,
) -> Result<Vec<Comparison<'a>>> {
    use Flavor::*;
    use Functional::*;
    let base = cp.norm_params();
    let desc = cp.describe();
    let with_tl = cp.p.is_finite();
    let mk = |label: &str, num: Side<'a>, den: Side<'a>| Comparison {
        label: label.to_string(),
        params: desc.clone(),
        num,
        den,
        bounds: None,
    };
    let e = |p: NormParams, k: Functional| engine(op, p, k, idx).map(Side::Engine);
    let mut out = Vec::new();
    match check {
        "two-partitions" => {
            let alt = base
                .clone()
                .with_analyzer(Analyzer::Partition(PartitionOfUnity::with_sharpness(ALT_SHARPNESS)));
            out.push(mk("besov", e(base.clone(), Besov)?, e(alt.clone(), Besov)?));
            if with_tl {
                out.push(mk("triebel", e(base.clone(), Triebel)?, e(alt, Triebel)?));
            }
        }
        "dyadic-vs-continuous" => {
            let cont = base.clone().with_flavor(Continuous);
            out.push(mk("besov", e(base.clone(), Besov)?, e(cont.clone(), Besov)?));
            if with_tl {
                out.push(mk("triebel", e(base.clone(), Triebel)?, e(cont, Triebel)?));
                out.push(mk(
                    "g-function",
                    e(base.clone().with_flavor(GFunction), Triebel)?,
                    e(base.clone(), Triebel)?,
                ));
                out.push(mk(
                    "lusin",
                    e(base.clone().with_flavor(Lusin), Triebel)?,
                    e(base.clone(), Triebel)?,
                ));
            }
        }
        "peetre-vs-plain" => {
            let cont = base.clone().with_flavor(Continuous);
            let peetre = base.clone().with_flavor(Peetre);
            out.push(mk("besov", e(peetre.clone(), Besov)?, e(cont.clone(), Besov)?));
            if with_tl {
                out.push(mk("triebel", e(peetre, Triebel)?, e(cont, Triebel)?));
            }
        }
        "sm-characterization" | "heat-characterization" => {
            let m = ((0.5 * cp.alpha).floor() + 1.0).max(1.0) as u32;
            let profile = if check == "sm-characterization" {
                sm_profile(m, SmBase::Sech)
            } else {
                heat_profile(m)
            };
            let cont = base
                .clone()
                .with_analyzer(Analyzer::Profile(profile))
                .with_flavor(Continuous);
            out.push(mk("besov", e(cont.clone(), Besov)?, e(base.clone(), Besov)?));
            if with_tl {
                out.push(mk("triebel", e(cont, Triebel)?, e(base.clone(), Triebel)?));
            }
        }
        "lp-identity" => {
            let tl = NormParams::new(0.0, cp.p, 2.0, cp.weight.clone());
            let mut c = mk(
                "lp",
                e(tl, Triebel)?,
                Side::Lp {
                    p: cp.p,
                    w: cp.weight.clone(),
                },
            );
            if cp.p == 2.0 && cp.weight.is_constant() {
                c.bounds = Some(parseval_band(&make_partition_of_unity()));
            }
            c.params = format!("p={},w={}", cp.p, weight_label(&cp.weight));
            out.push(c);
        }
        "hardy-identity" => {
            let tl = NormParams::new(0.0, cp.p, 2.0, cp.weight.clone());
            let mut c = mk(
                "hardy",
                Side::Hardy(engine(op, hardy_params(cp.p, cp.weight.clone()), Triebel, idx)?),
                e(tl, Triebel)?,
            );
            c.params = format!("p={},w={}", cp.p, weight_label(&cp.weight));
            out.push(c);
        }
        "bmo-identity" => {
            let fi = NormParams::new(0.0, f64::INFINITY, 2.0, cp.weight.clone());
            let mut c = mk(
                "bmo",
                Side::Bmo {
                    w: cp.weight.clone(),
                },
                e(fi, FInfinity)?,
            );
            c.params = format!("w={}", weight_label(&cp.weight));
            out.push(c);
        }
        "sobolev-identity" => {
            let tl = NormParams::new(cp.s, cp.p, 2.0, cp.weight.clone());
            let mut c = mk(
                "sobolev",
                Side::Sobolev {
                    s: cp.s,
                    p: cp.p,
                    w: cp.weight.clone(),
                },
                e(tl, Triebel)?,
            );
            c.params = format!("s={},p={},w={}", cp.s, cp.p, weight_label(&cp.weight));
            out.push(c);
        }
        "hardy-sobolev-identity" => {
            let tl = NormParams::new(cp.s, cp.p, 2.0, cp.weight.clone());
            let mut c = mk(
                "hardy-sobolev",
                Side::HardySobolev {
                    s: cp.s,
                    engine: engine(op, hardy_params(cp.p, cp.weight.clone()), Triebel, idx)?,
                },
                e(tl, Triebel)?,
            );
            c.params = format!("s={},p={},w={}", cp.s, cp.p, weight_label(&cp.weight));
            out.push(c);
        }
        "change-of-angle" => {
            if !with_tl {
                return invalid("change-of-angle needs p < inf");
            }
            let lusin = base.clone().with_flavor(Lusin);
            for &a in &APERTURES[1..] {
                let mut c = mk(
                    &format!("a={a}"),
                    e(lusin.clone().with_aperture(a), Triebel)?,
                    e(lusin.clone(), Triebel)?,
                );
                c.bounds = Some([1.0, f64::MAX]);
                out.push(c);
            }
        }
        "f-infinity-chars" => {
            let fi = NormParams::new(cp.alpha, f64::INFINITY, cp.q, cp.weight.clone());
            out.push(mk(
                "continuous",
                e(fi.clone().with_flavor(Continuous), FInfinity)?,
                e(fi.clone(), FInfinity)?,
            ));
            out.push(mk(
                "peetre",
                e(fi.clone().with_flavor(Peetre), FInfinity)?,
                e(fi, FInfinity)?,
            ));
        }
        other => return Err(FslError::UnknownCheck(other.to_string())),
    }
    Ok(out)
}

/// Runs one equivalence check over a parameter grid: `samples` seeded random
/// band-limited fields, ratio statistics per comparison.
pub fn equivalence_suite(
    op: &SelfAdjointOperator,
    check: &str,
    grid: &[CheckParams],
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if !CHECKS.contains(&check) {
        return Err(FslError::UnknownCheck(check.to_string()));
    }
    if samples == 0 {
        return invalid("sample count must be positive");
    }
    if op.lambda_min_positive().is_none() {
        return Err(FslError::Degenerate("empty spectrum window".into()));
    }
    let n = estimate_doubling(op.space()).n_exp;
    let mut qw_cache: Vec<(Weight, f64)> = Vec::new();
    let mut comps = Vec::new();
    for cp in grid {
        let qw = match qw_cache.iter().find(|(w, _)| *w == cp.weight) {
            Some((_, q)) => *q,
            None => {
                let q = critical_indices(op.space(), &cp.weight).qw_est;
                qw_cache.push((cp.weight.clone(), q));
                q
            }
        };
        comps.extend(comparisons(op, check, cp, StructureIndices { n, qw })?);
    }
    let project = matches!(
        check,
        "sm-characterization" | "heat-characterization" | "bmo-identity"
    );
    let mut ratios = vec![Vec::with_capacity(samples); comps.len()];
    for i in 0..samples {
        let mut f = random_field(op, Band::default(), seed, i as u64)?;
        if project {
            f = op.project_off_kernel(&f);
        }
        for (slot, c) in ratios.iter_mut().zip(&comps) {
            let den = c.den.eval(op, &f)?;
            if den == 0.0 {
                return Err(FslError::Degenerate(format!("{}: zero denominator", c.label)));
            }
            slot.push(c.num.eval(op, &f)? / den);
        }
    }
    let entries = comps
        .iter()
        .zip(ratios)
        .map(|(c, r)| {
            let mut e = RatioEntry::from_ratios(c.label.clone(), c.params.clone(), &r);
            e.bounds = c.bounds;
            e
        })
        .collect();
    let mut report = EquivalenceReport::new(check, samples, seed, entries);
    report.extra.insert("n_exp".into(), n);
    if check == "change-of-angle" {
        for cp in grid {
            let qw = qw_cache
                .iter()
                .find(|(w, _)| *w == cp.weight)
                .map(|(_, q)| *q)
                .unwrap_or(1.0);
            let exponent = qw.max(1.0) * n / cp.p.min(cp.q);
            report
                .extra
                .insert(format!("angle_exponent|{}", cp.describe()), exponent);
        }
    }
    Ok(report)
}

/// Least-squares slope of `log max ratio` against `log a` over the apertures
/// above 1, intercept free (the constant of the angle estimate).
pub fn angle_growth_slope(report: &EquivalenceReport, params: &str) -> Option<f64> {
    let pts: Vec<(f64, f64)> = report
        .entries
        .iter()
        .filter(|e| e.params == params)
        .filter_map(|e| {
            let a: f64 = e.label.strip_prefix("a=")?.parse().ok()?;
            Some((a.ln(), e.ratios.max.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(num / den)
}

/// Fails with `KernelComponent` when `f` is not orthogonal to `ker L`.
pub fn require_off_kernel(op: &SelfAdjointOperator, f: &[f64]) -> Result<()> {
    let frac = op.kernel_fraction(f);
    if frac > KERNEL_COMPONENT_TOL {
        return Err(FslError::KernelComponent(frac));
    }
    Ok(())
}
