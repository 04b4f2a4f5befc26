//! Constructive atomic decomposition, atom diagnostics, synthesis bounds and
//! the comparison with classical atoms.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calculus::{log_integral, PartitionOfUnity, ScaleGrid, SpectralProfile};
use crate::error::{invalid, FslError, Result};
use crate::operator::{HeatKernelReport, SelfAdjointOperator};
use crate::space::{build_dyadic_cubes, Cube, DyadicCubeTree, MetricMeasureSpace};
use crate::spaces::{
    random_field, Band, EquivalenceReport, Functional, NormEngine, NormParams, RatioEntry,
    StructureIndices,
};
use crate::weights::{weighted_lp_norm, Weight};

/// Default ε-support tolerance.
pub const SUPPORT_EPS: f64 = 1e-8;
/// Smallest admissible `|∫ψΦ dξ/ξ|`.
pub const NORMALIZATION_FLOOR: f64 = 1e-3;
/// Spectral coefficients below this fraction of the largest are dropped.
const COEFF_FLOOR: f64 = 1e-13;
/// Relative cancellation tolerance for `∫ a dμ`.
pub const CANCELLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub level: i32,
    pub cube_id: usize,
    pub center: usize,
    pub members: Vec<usize>,
    /// `ℓ(Q) = 2^{-ν}`.
    pub side_len: f64,
    /// Radius of `3B_Q`.
    pub dilated_radius: f64,
    pub m_order: u32,
    pub b: Vec<f64>,
    /// `L^M b`.
    pub a: Vec<f64>,
    pub s_coeff: f64,
    /// `max_{x∉3B_Q} |L^k b(x)| / max_x |L^k b(x)|`, `k = 0..=2M`.
    pub support_eps: Vec<f64>,
    /// `max_x |L^k b(x)| ℓ(Q)^{-2(M-k)} w(Q)^{1/p}`, `k = 0..=2M`.
    pub size_const: Vec<f64>,
    /// `|∫ a dμ| / ∫ |a| dμ`.
    pub cancellation: f64,
}

impl Atom {
    pub fn max_support_eps(&self) -> f64 {
        self.support_eps.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_size_const(&self) -> f64 {
        self.size_const.iter().copied().fold(0.0, f64::max)
    }
}

/// Optional hard cut of `b_Q` before forming `L^k b_Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    #[default]
    None,
    /// Zero `b` outside `3B_Q`.
    Dilated,
    /// Zero `b` outside the `2M`-hop interior of `3B_Q`, so every `L^k b`,
    /// `k ≤ 2M`, is supported in `3B_Q`.
    HopInterior,
}

#[derive(Debug, Clone)]
pub struct DecompositionParams {
    pub m_order: u32,
    pub p: f64,
    pub weight: Weight,
    pub pou: PartitionOfUnity,
    pub phi: SpectralProfile,
    pub grid: ScaleGrid,
    pub truncation: Truncation,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub space: Arc<MetricMeasureSpace>,
    pub atoms: Vec<Atom>,
    /// `(level, cube id)` of cubes with `s_Q = 0`.
    pub skipped: Vec<(i32, usize)>,
    pub params: DecompositionParams,
    /// `[∫ψΦ dξ/ξ]^{-1}`.
    pub norm_const: f64,
    /// `‖f‖₂` of the decomposed input, used for relative residuals.
    pub input_norm: f64,
    pub input: Vec<f64>,
}

/// Tree whose levels cover the octaves of `grid` and satisfy the builder's
/// scale constraints.
pub fn tree_for_grid(space: &MetricMeasureSpace, grid: &ScaleGrid) -> Result<DyadicCubeTree> {
    let oct = grid.octaves();
    let (o_lo, o_hi) = (*oct.iter().min().unwrap(), *oct.iter().max().unwrap());
    let coarse = (2.0 / space.diameter()).log2().floor() as i32;
    let fine = (1.0 / space.min_positive_distance()).log2().ceil() as i32;
    build_dyadic_cubes(space, o_lo.min(coarse), o_hi.max(fine))
}

/// Points whose `hops`-step neighbourhood under the sparsity pattern of `L`
/// stays inside `set`.
fn hop_interior(op: &SelfAdjointOperator, set: &[bool], hops: u32) -> Vec<bool> {
    let a = op.matrix();
    let n = op.len();
    let mut cur = set.to_vec();
    for _ in 0..hops {
        let next: Vec<bool> = (0..n)
            .map(|x| cur[x] && (0..n).all(|y| a[(x, y)] == 0.0 || cur[y]))
            .collect();
        cur = next;
    }
    cur
}

fn dilated_mask(space: &MetricMeasureSpace, center: usize, radius: f64) -> Vec<bool> {
    space.dist_row(center).iter().map(|&d| d < radius).collect()
}

/// Support, size and cancellation diagnostics of `b` and its powers.
fn diagnose(
    op: &SelfAdjointOperator,
    b: &[f64],
    m_order: u32,
    mask: &[bool],
    side_len: f64,
    wq_pow: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let mu = op.space().measure();
    let mut eps = Vec::new();
    let mut size = Vec::new();
    let mut cur = b.to_vec();
    let mut a = Vec::new();
    for k in 0..=2 * m_order {
        if k > 0 {
            cur = op.apply_matrix(&cur);
        }
        if k == m_order {
            a = cur.clone();
        }
        let sup = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let out = cur
            .iter()
            .zip(mask)
            .filter(|(_, &inside)| !inside)
            .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
        eps.push(if sup == 0.0 { 0.0 } else { out / sup });
        let scale = side_len.powi(2 * (m_order as i32 - k as i32));
        size.push(sup / scale * wq_pow);
    }
    let int: f64 = a.iter().zip(mu).map(|(v, m)| v * m).sum();
    let abs: f64 = a.iter().zip(mu).map(|(v, m)| v.abs() * m).sum();
    let cancel = if abs == 0.0 { 0.0 } else { int.abs() / abs };
    (a, eps, size, cancel)
}

/// `f = c Σ_ν Σ_Q s_Q a_Q` with `a_Q = L^M b_Q` built from the octave buckets
/// of the scale grid.
pub fn atomic_decompose(
    op: &SelfAdjointOperator,
    f: &[f64],
    params: DecompositionParams,
    tree: &DyadicCubeTree,
) -> Result<Decomposition> {
    let DecompositionParams {
        m_order,
        p,
        ref weight,
        ref pou,
        ref phi,
        ref grid,
        truncation,
    } = params;
    if m_order < 1 {
        return invalid("atom order M must be at least 1");
    }
    if !(p > 0.0) {
        return invalid(format!("p must be positive, got {p}"));
    }
    crate::spaces::require_off_kernel(op, f)?;
    let integral = log_integral(&pou.psi.product(phi));
    if !(integral.abs() > NORMALIZATION_FLOOR) {
        return Err(FslError::Degenerate(format!(
            "normalization integral {integral:e} is below {NORMALIZATION_FLOOR:e}"
        )));
    }
    let norm_const = 1.0 / integral;
    for nu in grid.octaves() {
        if tree.level(nu).is_none() {
            return invalid(format!("cube tree lacks octave {nu}"));
        }
    }
    let space = op.space();
    let n = op.len();
    let mu = space.measure();
    let lam = op.eigenvalues();
    let u = op.eigenvectors();
    // round-off coefficients would otherwise light up every cube with s_Q ~ 1e-17
    let mut coeffs = op.coefficients(f);
    let top = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for c in &mut coeffs {
        if c.abs() <= COEFF_FLOOR * top {
            *c = 0.0;
        }
    }
    let m2 = 2 * m_order as i32;
    let psi_m = |xi: f64| {
        if xi <= 0.0 {
            0.0
        } else {
            pou.psi.eval(xi) * xi.powi(-m2)
        }
    };
    let mut atoms = Vec::new();
    let mut skipped = Vec::new();
    let wv = weight.values();
    for nu in grid.octaves() {
        let ks: Vec<usize> = (0..grid.len()).filter(|&k| grid.octave_of(k) == nu).collect();
        // G_k = ψ_M(t_k√L) f
        let fields: Vec<Vec<f64>> = ks
            .iter()
            .map(|&k| {
                let t = grid.t[k];
                let c: Vec<f64> = coeffs
                    .iter()
                    .zip(lam)
                    .map(|(c, &l)| c * psi_m(t * l.max(0.0).sqrt()))
                    .collect();
                op.synthesize(&c)
            })
            .collect();
        let mut bucket = vec![0.0; n];
        for (i, &k) in ks.iter().enumerate() {
            for (h, g) in bucket.iter_mut().zip(&fields[i]) {
                *h += grid.weights[k] * g.abs();
            }
        }
        // w_k t_k^{2M} Φ(t_k√λ_j)
        let phi_tab: Vec<Vec<f64>> = ks
            .iter()
            .map(|&k| {
                let t = grid.t[k];
                let pref = grid.weights[k] * t.powi(m2);
                lam.iter()
                    .map(|&l| pref * phi.eval(t * l.max(0.0).sqrt()))
                    .collect()
            })
            .collect();
        let level = tree.level(nu).unwrap();
        for cube in &level.cubes {
            let wq: f64 = cube.members.iter().map(|&y| wv[y] * mu[y]).sum();
            let sup = cube.members.iter().map(|&y| bucket[y]).fold(0.0, f64::max);
            let s_q = wq.powf(1.0 / p) * sup;
            if s_q == 0.0 {
                skipped.push((nu, cube.id));
                continue;
            }
            // spectral coefficients of Σ_k w_k t_k^{2M} Φ(t_k√L)[G_k χ_Q]
            let mut acc = vec![0.0; n];
            for (i, g) in fields.iter().enumerate() {
                for (j, a) in acc.iter_mut().enumerate() {
                    let proj: f64 = cube
                        .members
                        .iter()
                        .map(|&y| u[(y, j)] * g[y] * mu[y])
                        .sum();
                    *a += phi_tab[i][j] * proj;
                }
            }
            let mut b = op.synthesize(&acc);
            for v in &mut b {
                *v /= s_q;
            }
            let radius = tree.dilated_radius(cube);
            let mask = dilated_mask(space, cube.center, radius);
            let keep = match truncation {
                Truncation::None => None,
                Truncation::Dilated => Some(mask.clone()),
                Truncation::HopInterior => Some(hop_interior(op, &mask, 2 * m_order)),
            };
            if let Some(keep) = keep {
                for (v, &inside) in b.iter_mut().zip(&keep) {
                    if !inside {
                        *v = 0.0;
                    }
                }
            }
            let (a, support_eps, size_const, cancellation) =
                diagnose(op, &b, m_order, &mask, cube.side_len, wq.powf(1.0 / p));
            atoms.push(Atom {
                level: nu,
                cube_id: cube.id,
                center: cube.center,
                members: cube.members.clone(),
                side_len: cube.side_len,
                dilated_radius: radius,
                m_order,
                b,
                a,
                s_coeff: s_q,
                support_eps,
                size_const,
                cancellation,
            });
        }
    }
    Ok(Decomposition {
        space: op.space_arc().clone(),
        atoms,
        skipped,
        params,
        norm_const,
        input_norm: op.l2_norm(f),
        input: f.to_vec(),
    })
}

/// `f̂ = c Σ s_Q a_Q` and `‖f̂ − f‖₂ / ‖f‖₂`.
pub fn reconstruct(op: &SelfAdjointOperator, d: &Decomposition) -> (Vec<f64>, f64) {
    let mut f_hat = vec![0.0; op.len()];
    for atom in &d.atoms {
        for (h, a) in f_hat.iter_mut().zip(&atom.a) {
            *h += d.norm_const * atom.s_coeff * a;
        }
    }
    if d.input_norm == 0.0 {
        return (f_hat, 0.0);
    }
    let diff: Vec<f64> = f_hat.iter().zip(&d.input).map(|(a, b)| a - b).collect();
    let residual = op.l2_norm(&diff) / d.input_norm;
    (f_hat, residual)
}

/// A coefficient set `(level, members, s_Q)` on which the sequence norms are
/// evaluated.
pub trait CoefficientSet {
    fn coefficients(&self) -> Vec<(i32, &[usize], f64)>;
}

impl CoefficientSet for Decomposition {
    fn coefficients(&self) -> Vec<(i32, &[usize], f64)> {
        self.atoms
            .iter()
            .map(|a| (a.level, a.members.as_slice(), a.s_coeff))
            .collect()
    }
}

/// `[Σ_ν 2^{ναq}(Σ_Q |s_Q|^p)^{q/p}]^{1/q}` and
/// `‖[Σ_ν 2^{ναq}(Σ_Q w(Q)^{-1/p}|s_Q|χ_Q)^q]^{1/q}‖_{p,w}`.
pub fn sequence_norms(
    space: &MetricMeasureSpace,
    coeffs: &[(i32, &[usize], f64)],
    alpha: f64,
    p: f64,
    q: f64,
    w: &Weight,
) -> (f64, f64) {
    if coeffs.is_empty() {
        return (0.0, 0.0);
    }
    let mu = space.measure();
    let wv = w.values();
    let n = space.len();
    let mut levels: Vec<i32> = coeffs.iter().map(|c| c.0).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut besov_terms = Vec::new();
    let mut pointwise: Vec<Vec<f64>> = Vec::new();
    for &nu in &levels {
        let scale = 2f64.powf(nu as f64 * alpha);
        let mut lp = 0.0f64;
        let mut field = vec![0.0; n];
        for &(_, members, s) in coeffs.iter().filter(|c| c.0 == nu) {
            if p.is_infinite() {
                lp = lp.max(s.abs());
            } else {
                lp += s.abs().powf(p);
            }
            let wq: f64 = members.iter().map(|&y| wv[y] * mu[y]).sum();
            let v = if p.is_infinite() { s.abs() } else { wq.powf(-1.0 / p) * s.abs() };
            for &y in members {
                field[y] += v;
            }
        }
        let lp = if p.is_infinite() { lp } else { lp.powf(1.0 / p) };
        besov_terms.push(scale * lp);
        pointwise.push(field.into_iter().map(|v| scale * v).collect());
    }
    let lq = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
        if q.is_infinite() {
            vals.fold(0.0, f64::max)
        } else {
            vals.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
        }
    };
    let besov = lq(&mut besov_terms.iter().copied());
    let h: Vec<f64> = (0..n)
        .map(|x| lq(&mut pointwise.iter().map(|f| f[x])))
        .collect();
    let triebel = weighted_lp_norm(space, &h, p, w);
    (besov, triebel)
}

/// Besov and Triebel–Lizorkin sequence norms of the decomposition's
/// coefficients.
pub fn coefficient_norms(d: &Decomposition, alpha: f64, p: f64, q: f64, w: &Weight) -> (f64, f64) {
    sequence_norms(&d.space, &d.coefficients(), alpha, p, q, w)
}

/// `n/2 + ½ max{α, n q_w/(1∧p∧q) − α}`; synthesis needs `M` strictly above it.
pub fn synthesis_threshold(idx: StructureIndices, alpha: f64, p: f64, q: f64) -> f64 {
    let r = 1f64.min(p).min(q);
    0.5 * idx.n + 0.5 * alpha.max(idx.n * idx.qw / r - alpha)
}

/// Number of random cubes carrying an atom in one synthetic decomposition.
const SYNTHETIC_ATOMS: usize = 6;

/// One admissible atom on `cube`: random `b` on the `2M`-hop interior of
/// `3B_Q`, scaled so the size conditions hold with constant 1. `None` when
/// the interior is empty.
pub fn random_admissible_atom(
    op: &SelfAdjointOperator,
    tree: &DyadicCubeTree,
    cube: &Cube,
    m_order: u32,
    p: f64,
    w: &Weight,
    rng: &mut ChaCha8Rng,
) -> Option<Atom> {
    let space = op.space();
    let mu = space.measure();
    let radius = tree.dilated_radius(cube);
    let mask = dilated_mask(space, cube.center, radius);
    let inner = hop_interior(op, &mask, 2 * m_order);
    if !inner.iter().any(|&v| v) {
        return None;
    }
    let mut b: Vec<f64> = inner
        .iter()
        .map(|&i| if i { rng.sample(StandardNormal) } else { 0.0 })
        .collect();
    let wq: f64 = cube.members.iter().map(|&y| w.values()[y] * mu[y]).sum();
    let wq_pow = wq.powf(1.0 / p);
    let (_, _, size, _) = diagnose(op, &b, m_order, &mask, cube.side_len, wq_pow);
    let worst = size.iter().copied().fold(0.0, f64::max);
    if worst == 0.0 {
        return None;
    }
    for v in &mut b {
        *v /= worst;
    }
    let (a, support_eps, size_const, cancellation) =
        diagnose(op, &b, m_order, &mask, cube.side_len, wq_pow);
    Some(Atom {
        level: cube.level,
        cube_id: cube.id,
        center: cube.center,
        members: cube.members.clone(),
        side_len: cube.side_len,
        dilated_radius: radius,
        m_order,
        b,
        a,
        s_coeff: 0.0,
        support_eps,
        size_const,
        cancellation,
    })
}

/// Ratios `‖Σ s_Q a_Q‖ / (sequence norm)` in the Besov and Triebel–Lizorkin
/// norms over random synthetic decompositions with admissible atoms.
#[allow(clippy::too_many_arguments)]
pub fn synthesis_bound_check(
    op: &SelfAdjointOperator,
    tree: &DyadicCubeTree,
    params: &NormParams,
    m_order: u32,
    idx: StructureIndices,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let (alpha, p, q) = (params.alpha, params.p, params.q);
    let threshold = synthesis_threshold(idx, alpha, p, q);
    if !(m_order as f64 > threshold) {
        return Err(FslError::BelowThreshold(format!(
            "M = {m_order} does not exceed {threshold:.4}"
        )));
    }
    let params = params.clone().with_indices(idx);
    let besov = NormEngine::new(op, params.clone(), Functional::Besov)?;
    let triebel = if p.is_finite() {
        Some(NormEngine::new(op, params.clone(), Functional::Triebel)?)
    } else {
        None
    };
    let cubes: Vec<&Cube> = tree.levels.iter().flat_map(|l| l.cubes.iter()).collect();
    let mut rb = Vec::with_capacity(samples);
    let mut rt = Vec::with_capacity(samples);
    let mut drawn = 0usize;
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut atoms = Vec::new();
        let mut attempts = 0;
        while atoms.len() < SYNTHETIC_ATOMS && attempts < 50 * SYNTHETIC_ATOMS {
            attempts += 1;
            let cube = cubes[rng.random_range(0..cubes.len())];
            if let Some(mut atom) =
                random_admissible_atom(op, tree, cube, m_order, p, &params.weight, &mut rng)
            {
                let s: f64 = rng.sample(StandardNormal);
                atom.s_coeff = s.abs();
                atoms.push(atom);
            }
        }
        if atoms.is_empty() {
            return Err(FslError::Degenerate(
                "no cube admits an atom of this order".into(),
            ));
        }
        drawn += atoms.len();
        let mut f = vec![0.0; op.len()];
        for atom in &atoms {
            for (v, a) in f.iter_mut().zip(&atom.a) {
                *v += atom.s_coeff * a;
            }
        }
        let coeffs: Vec<(i32, &[usize], f64)> = atoms
            .iter()
            .map(|a| (a.level, a.members.as_slice(), a.s_coeff))
            .collect();
        let (cb, ct) = sequence_norms(op.space(), &coeffs, alpha, p, q, &params.weight);
        rb.push(besov.norm(&f)?.value / cb);
        if let Some(e) = &triebel {
            rt.push(e.norm(&f)?.value / ct);
        }
    }
    let label = format!("M={m_order},{}", params.describe());
    let mut entries = vec![RatioEntry::from_ratios("besov", label.clone(), &rb)];
    if triebel.is_some() {
        entries.push(RatioEntry::from_ratios("triebel", label, &rt));
    }
    let mut report = EquivalenceReport::new("synthesis-bound", samples, seed, entries);
    report.extra.insert("threshold".into(), threshold);
    report.extra.insert("atoms_per_sample".into(), drawn as f64 / samples as f64);
    Ok(report)
}

/// Ratios `coefficient norm / space norm` over seeded random fields.
#[allow(clippy::too_many_arguments)]
pub fn analysis_bound_check(
    op: &SelfAdjointOperator,
    tree: &DyadicCubeTree,
    dparams: &DecompositionParams,
    norm_params: &NormParams,
    band: Band,
    samples: usize,
    seed: u64,
) -> Result<(EquivalenceReport, Vec<f64>)> {
    let (alpha, p, q) = (norm_params.alpha, norm_params.p, norm_params.q);
    let besov = NormEngine::new(op, norm_params.clone(), Functional::Besov)?;
    let triebel = NormEngine::new(op, norm_params.clone(), Functional::Triebel)?;
    let mut rb = Vec::with_capacity(samples);
    let mut rt = Vec::with_capacity(samples);
    let mut residuals = Vec::with_capacity(samples);
    for i in 0..samples {
        let f = random_field(op, band, seed, i as u64)?;
        let d = atomic_decompose(op, &f, dparams.clone(), tree)?;
        residuals.push(reconstruct(op, &d).1);
        let (cb, ct) = coefficient_norms(&d, alpha, p, q, &norm_params.weight);
        rb.push(cb / besov.norm(&f)?.value);
        rt.push(ct / triebel.norm(&f)?.value);
    }
    let label = format!("M={},{}", dparams.m_order, norm_params.describe());
    let entries = vec![
        RatioEntry::from_ratios("besov", label.clone(), &rb),
        RatioEntry::from_ratios("triebel", label, &rt),
    ];
    Ok((
        EquivalenceReport::new("analysis-bound", samples, seed, entries),
        residuals,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalAtomReport {
    pub support_eps: f64,
    /// `max |a| w(Q)^{1/p}`.
    pub sup_const: f64,
    /// `max_{x≠y ∈ 3B_Q} |a(x) − a(y)| w(Q)^{1/p} (d(x,y)/ℓ(Q))^{-δ₀}`.
    pub holder_const: f64,
    pub cancellation: f64,
    pub cancellation_ok: bool,
    pub support_ok: bool,
}

/// Checks the classical `(p, w, δ₀)` atom conditions on `a_Q`, requiring the
/// conservation property and a fitted Hölder exponent.
pub fn classical_atom_check(
    op: &SelfAdjointOperator,
    atom: &Atom,
    heat: &HeatKernelReport,
    p: f64,
    w: &Weight,
) -> Result<ClassicalAtomReport> {
    if !(heat.conservation_defect <= 1e-8) {
        return Err(FslError::Prerequisite(format!(
            "conservation defect {:e} (L1 != 0)",
            heat.conservation_defect
        )));
    }
    let delta0 = heat.holder_delta0;
    if !(delta0 > 0.0) {
        return Err(FslError::Prerequisite("no Hölder exponent was fitted".into()));
    }
    let space = op.space();
    let mu = space.measure();
    let wq: f64 = atom.members.iter().map(|&y| w.values()[y] * mu[y]).sum();
    let wq_pow = wq.powf(1.0 / p);
    let inside: Vec<usize> = space
        .ball_members(atom.center, atom.dilated_radius)
        .iter()
        .map(|&y| y as usize)
        .collect();
    let a = &atom.a;
    let sup = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut mask = vec![false; a.len()];
    for &y in &inside {
        mask[y] = true;
    }
    let out = a
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| !m)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    let support_eps = if sup == 0.0 { 0.0 } else { out / sup };
    let mut holder: f64 = 0.0;
    for (i, &x) in inside.iter().enumerate() {
        for &y in &inside[i + 1..] {
            let d = space.dist(x, y) / atom.side_len;
            holder = holder.max((a[x] - a[y]).abs() * wq_pow / d.powf(delta0));
        }
    }
    let int: f64 = a.iter().zip(mu).map(|(v, m)| v * m).sum();
    let abs: f64 = a.iter().zip(mu).map(|(v, m)| v.abs() * m).sum();
    let cancellation = if abs == 0.0 { 0.0 } else { int.abs() / abs };
    Ok(ClassicalAtomReport {
        support_eps,
        sup_const: sup * wq_pow,
        holder_const: holder,
        cancellation,
        cancellation_ok: cancellation <= CANCELLATION_TOL,
        support_ok: support_eps <= SUPPORT_EPS,
    })
}
