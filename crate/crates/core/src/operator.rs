//! Nonnegative μ-self-adjoint operators, their eigendecomposition, heat
//! kernels and the standing kernel hypotheses (Gaussian bound, Hölder
//! continuity, conservation).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FslError, Result};
use crate::space::{MetricMeasureSpace, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianKind {
    /// `Lf(x) = μ(x)^{-1} Σ_y w_xy (f(x) - f(y))`.
    Graph,
    /// Lattice Laplacian of a grid space, `h^{-2}`-scaled under unit speed.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    None,
    UnitSpeed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub kind: LaplacianKind,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
}

fn default_normalization() -> Normalization {
    Normalization::UnitSpeed
}

impl OperatorConfig {
    pub fn build(&self, space: Arc<MetricMeasureSpace>) -> Result<SelfAdjointOperator> {
        build_laplacian(space, self.kind, self.normalization)
    }
}

/// Eigenvalues below this fraction of `λ_max` are treated as exact zeros.
pub const KERNEL_TOL: f64 = 1e-9;
const NEGATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SelfAdjointOperator {
    space: Arc<MetricMeasureSpace>,
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    /// Columns are μ-orthonormal eigenvectors: `Uᵀ diag(μ) U = I`.
    eigvecs: DMatrix<f64>,
    kernel_dim: usize,
}

impl SelfAdjointOperator {
    /// Wraps a matrix acting as `(Af)(x) = Σ_y A(x,y) f(y)`; it must satisfy
    /// `μ(x)A(x,y) = μ(y)A(y,x)` and be positive semidefinite.
    pub fn from_matrix(space: Arc<MetricMeasureSpace>, matrix: DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return invalid(format!(
                "operator is {}x{}, space has {n} points",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        let mu = space.measure();
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let mut defect: f64 = 0.0;
        for x in 0..n {
            for y in 0..x {
                let d = (mu[x] * matrix[(x, y)] - mu[y] * matrix[(y, x)]).abs()
                    / (scale * mu[x].max(mu[y]));
                defect = defect.max(d);
            }
        }
        if defect > 1e-12 {
            return Err(FslError::NotSelfAdjoint(defect));
        }
        let sq: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
        let mut s = DMatrix::from_fn(n, n, |x, y| sq[x] * matrix[(x, y)] / sq[y]);
        let st = s.transpose();
        s = (s + st) * 0.5;
        let eig = SymmetricEigen::new(s);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigvecs = DMatrix::zeros(n, n);
        let mut kernel_dim = 0;
        for (k, &i) in idx.iter().enumerate() {
            let mut l = eig.eigenvalues[i];
            if l < -NEGATIVE_TOL * lmax {
                return Err(FslError::NotNonnegative(l));
            }
            if l <= KERNEL_TOL * lmax {
                l = 0.0;
                kernel_dim += 1;
            }
            eigenvalues.push(l);
            let v = eig.eigenvectors.column(i);
            // fix the sign so that the largest entry is positive
            let (imax, _) = v.iter().enumerate().fold((0, 0.0f64), |acc, (j, x)| {
                if x.abs() > acc.1 + 1e-12 {
                    (j, x.abs())
                } else {
                    acc
                }
            });
            let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
            for x in 0..n {
                eigvecs[(x, k)] = sign * v[x] / sq[x];
            }
        }
        Ok(Self {
            space,
            matrix,
            eigenvalues,
            eigvecs,
            kernel_dim,
        })
    }

    pub fn space(&self) -> &MetricMeasureSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<MetricMeasureSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigvecs.column(k).iter().copied().collect()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap_or(&0.0)
    }

    /// Smallest positive eigenvalue `λ₁⁺`.
    pub fn lambda_min_positive(&self) -> Option<f64> {
        self.eigenvalues.get(self.kernel_dim).copied()
    }

    /// μ-spectral coefficients `f̂ = Uᵀ diag(μ) f`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        let mu = self.space.measure();
        let mf = DVector::from_iterator(f.len(), f.iter().zip(mu).map(|(a, b)| a * b));
        (self.eigvecs.tr_mul(&mf)).iter().copied().collect()
    }

    /// `U c`.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(c);
        (&self.eigvecs * v).iter().copied().collect()
    }

    /// `m(L) f` for a scalar function of the eigenvalue.
    pub fn apply_fn(&self, m: impl Fn(f64) -> f64, f: &[f64]) -> Vec<f64> {
        let mut c = self.coefficients(f);
        for (ck, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= m(l);
        }
        self.synthesize(&c)
    }

    /// Kernel matrix of `m(L)` in the convention `(Tf)(x) = Σ_y K(x,y) f(y) μ(y)`.
    pub fn kernel_fn(&self, m: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d: Vec<f64> = self.eigenvalues.iter().map(|&l| m(l)).collect();
        self.kernel_from_diag(&d)
    }

    /// `U diag(d) Uᵀ`.
    pub fn kernel_from_diag(&self, d: &[f64]) -> DMatrix<f64> {
        let n = self.len();
        let mut scaled = self.eigvecs.clone();
        for k in 0..n {
            scaled.column_mut(k).scale_mut(d[k]);
        }
        scaled * self.eigvecs.transpose()
    }

    /// Direct matrix application `A f`.
    pub fn apply_matrix(&self, f: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(f);
        (&self.matrix * v).iter().copied().collect()
    }

    /// `P⁺ f`, the projection off `ker L`.
    pub fn project_off_kernel(&self, f: &[f64]) -> Vec<f64> {
        self.apply_fn(|l| if l > 0.0 { 1.0 } else { 0.0 }, f)
    }

    /// Relative μ-L² size of the kernel component of `f`.
    pub fn kernel_fraction(&self, f: &[f64]) -> f64 {
        let c = self.coefficients(f);
        let total: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if total == 0.0 {
            return 0.0;
        }
        let ker: f64 = c[..self.kernel_dim].iter().map(|v| v * v).sum::<f64>().sqrt();
        ker / total
    }

    /// μ-weighted L² norm.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(self.space.measure())
            .map(|(v, m)| v * v * m)
            .sum::<f64>()
            .sqrt()
    }
}

fn grid_neighbors(space: &MetricMeasureSpace) -> Option<(Vec<(usize, usize)>, f64)> {
    let Topology::Grid(g) = space.topology() else {
        return None;
    };
    let n = space.len();
    let mut edges = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            if (space.dist(x, y) - g.spacing).abs() <= 1e-12 * g.spacing {
                edges.push((x, y));
            }
        }
    }
    Some((edges, g.spacing))
}

/// Laplacian of a grid or graph space. Graph kind uses edge weights 1
/// (`none`) or `len^{-2}` (`unit-speed`) and divides by the measure; grid
/// kind is the lattice Laplacian, divided by `h²` under unit speed.
pub fn build_laplacian(
    space: Arc<MetricMeasureSpace>,
    kind: LaplacianKind,
    normalization: Normalization,
) -> Result<SelfAdjointOperator> {
    let n = space.len();
    let mut a = DMatrix::zeros(n, n);
    match kind {
        LaplacianKind::Grid => {
            let Some((edges, h)) = grid_neighbors(&space) else {
                return invalid("grid Laplacian requires a grid space");
            };
            let w = match normalization {
                Normalization::None => 1.0,
                Normalization::UnitSpeed => 1.0 / (h * h),
            };
            for (x, y) in edges {
                a[(x, y)] -= w;
                a[(y, x)] -= w;
                a[(x, x)] += w;
                a[(y, y)] += w;
            }
        }
        LaplacianKind::Graph => {
            let edges: Vec<(usize, usize, f64)> = match space.topology() {
                Topology::Graph(e) => e.clone(),
                Topology::Grid(_) => {
                    let (e, h) = grid_neighbors(&space).expect("grid topology");
                    e.into_iter().map(|(x, y)| (x, y, h)).collect()
                }
            };
            let mu = space.measure();
            for (x, y, len) in edges {
                if x == y {
                    continue;
                }
                let w = match normalization {
                    Normalization::None => 1.0,
                    Normalization::UnitSpeed => 1.0 / (len * len),
                };
                a[(x, y)] -= w / mu[x];
                a[(y, x)] -= w / mu[y];
                a[(x, x)] += w / mu[x];
                a[(y, y)] += w / mu[y];
            }
        }
    }
    if space.len() > 1 && space.diameter().is_infinite() {
        return Err(FslError::Disconnected);
    }
    SelfAdjointOperator::from_matrix(space, a)
}

/// Heat kernel `p_t` with `(e^{-tL} f)(x) = Σ_y p_t(x,y) f(y) μ(y)`.
pub fn heat_kernel(op: &SelfAdjointOperator, t: f64) -> Result<DMatrix<f64>> {
    if !(t > 0.0) {
        return invalid(format!("heat time must be positive, got {t}"));
    }
    Ok(op.kernel_fn(|l| (-t * l).exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelReport {
    pub t_grid: Vec<f64>,
    /// `(c, C(c))` for each candidate Gaussian width.
    pub candidates: Vec<(f64, f64)>,
    pub c: f64,
    pub big_c: f64,
    /// Worst `|p_t| / bound` under the chosen pair (at most 1).
    pub max_violation: f64,
    pub holder_delta0: f64,
    /// `(δ, C_H(δ))` for the scanned Hölder exponents.
    pub holder_constants: Vec<(f64, f64)>,
    pub conservation_defect: f64,
    pub min_kernel_value: f64,
}

const FIT_CEILING: f64 = 1e6;

/// Fits `|p_t(x,y)| <= C V(x,√t)^{-1} exp(-d²/(ct))` over all `(x, y, t)`
/// for c ∈ {2,4,8,16}, picks the smallest c whose C stays below 1e6, then
/// scans the Hölder exponent in condition (H) on the pairs `d(x, x̄) < √t`.
pub fn gaussian_bound_fit(op: &SelfAdjointOperator, t_grid: &[f64]) -> Result<HeatKernelReport> {
    let space = op.space();
    let n = space.len();
    let h = space.min_positive_distance();
    let diam = space.diameter();
    for &t in t_grid {
        if t < h * h / 4.0 * (1.0 - 1e-12) || t > diam * diam * (1.0 + 1e-12) {
            return invalid(format!("t = {t} outside [h²/4, diam²]"));
        }
    }
    let cands = [2.0, 4.0, 8.0, 16.0];
    let mut log_c = [f64::NEG_INFINITY; 4];
    let mut conservation: f64 = 0.0;
    let mut min_val = f64::INFINITY;
    let mu = space.measure();
    let kernels: Vec<DMatrix<f64>> = t_grid
        .iter()
        .map(|&t| heat_kernel(op, t))
        .collect::<Result<_>>()?;
    for (ti, &t) in t_grid.iter().enumerate() {
        let p = &kernels[ti];
        let sqt = t.sqrt();
        for x in 0..n {
            let lv = space.volume(x, sqt).ln();
            for y in 0..n {
                let v = p[(x, y)];
                min_val = min_val.min(v);
                if v == 0.0 {
                    continue;
                }
                let d = space.dist(x, y);
                let base = v.abs().ln() + lv;
                for (i, &c) in cands.iter().enumerate() {
                    log_c[i] = log_c[i].max(base + d * d / (c * t));
                }
            }
        }
        for y in 0..n {
            let s: f64 = (0..n).map(|x| p[(x, y)] * mu[x]).sum();
            conservation = conservation.max((s - 1.0).abs());
        }
    }
    let candidates: Vec<(f64, f64)> = cands.iter().zip(&log_c).map(|(&c, &l)| (c, l.exp())).collect();
    let Some(&(c, big_c)) = candidates.iter().find(|(_, bc)| *bc <= FIT_CEILING) else {
        return Err(FslError::FitFailed(format!(
            "no Gaussian width in {{2,4,8,16}} has C <= {FIT_CEILING:e}: {candidates:?}"
        )));
    };

    let deltas: Vec<f64> = (1..=10).rev().map(|k| k as f64 / 10.0).collect();
    let mut log_h = vec![f64::NEG_INFINITY; deltas.len()];
    for (ti, &t) in t_grid.iter().enumerate() {
        let p = &kernels[ti];
        let sqt = t.sqrt();
        for x in 0..n {
            let lv = space.volume(x, sqt).ln();
            for xb in 0..n {
                let dxx = space.dist(x, xb);
                if dxx == 0.0 || dxx >= sqt {
                    continue;
                }
                let mut m = f64::NEG_INFINITY;
                for y in 0..n {
                    let diff = (p[(x, y)] - p[(xb, y)]).abs();
                    if diff == 0.0 {
                        continue;
                    }
                    let d = space.dist(x, y);
                    m = m.max(diff.ln() + d * d / (c * t));
                }
                let lr = (dxx / sqt).ln();
                for (i, &dl) in deltas.iter().enumerate() {
                    log_h[i] = log_h[i].max(m + lv - dl * lr);
                }
            }
        }
    }
    let holder_constants: Vec<(f64, f64)> =
        deltas.iter().zip(&log_h).map(|(&d, &l)| (d, l.exp())).collect();
    let holder_delta0 = holder_constants
        .iter()
        .find(|(_, ch)| *ch <= FIT_CEILING)
        .map(|(d, _)| *d)
        .unwrap_or(0.0);
    Ok(HeatKernelReport {
        t_grid: t_grid.to_vec(),
        candidates,
        c,
        big_c,
        max_violation: 1.0,
        holder_delta0,
        holder_constants,
        conservation_defect: conservation,
        min_kernel_value: min_val,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub t: f64,
    /// Distance thresholds divided by t.
    pub rho_over_t: Vec<f64>,
    /// `max_{d(x,y) > ρ} |K_{cos(t√L)}(x,y)|`.
    pub values: Vec<f64>,
    pub peak: f64,
    /// Smallest `ρ/t` past which the kernel stays below `1e-3 · peak`.
    pub drop_location: f64,
    /// `max_{d(x,y) > t} |K| / peak`.
    pub off_support_residual: f64,
}

/// Decay profile of the kernel of `cos(t√L)` away from the diagonal.
pub fn wave_support_profile(op: &SelfAdjointOperator, t: f64) -> Result<WaveProfile> {
    if !(t > 0.0) {
        return invalid(format!("wave time must be positive, got {t}"));
    }
    let k = op.kernel_fn(|l| (t * l.sqrt()).cos());
    let space = op.space();
    let n = space.len();
    let levels = space.distance_levels();
    let mut level_max = vec![0.0f64; levels.len()];
    let mut off = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let v = k[(x, y)].abs();
            let li = space.dist_level(x, y);
            level_max[li] = level_max[li].max(v);
            if space.dist(x, y) > t {
                off = off.max(v);
            }
        }
    }
    let peak = level_max.iter().copied().fold(0.0, f64::max);
    // values[i] = max over levels strictly beyond levels[i]
    let mut values = vec![0.0; levels.len()];
    let mut acc = 0.0f64;
    for i in (0..levels.len()).rev() {
        values[i] = acc;
        acc = acc.max(level_max[i]);
    }
    let drop = (0..levels.len())
        .find(|&i| values[i] <= 1e-3 * peak)
        .map(|i| levels[i] / t)
        .unwrap_or(f64::INFINITY);
    Ok(WaveProfile {
        t,
        rho_over_t: levels.iter().map(|l| l / t).collect(),
        values,
        peak,
        drop_location: drop,
        off_support_residual: if peak > 0.0 { off / peak } else { 0.0 },
    })
}
