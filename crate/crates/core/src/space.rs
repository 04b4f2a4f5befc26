//! Finite metric measure spaces, ball geometry, doubling diagnostics and
//! Christ-type dyadic cubes.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FslError, Result};

const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    DirichletGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dim: usize,
    pub side: usize,
    pub spacing: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Grid(GridInfo),
    /// Undirected edges `(i, j, length)`.
    Graph(Vec<(usize, usize, f64)>),
}

/// JSON description of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SpaceConfig {
    Grid {
        dim: usize,
        side: usize,
        spacing: f64,
        #[serde(default = "default_boundary")]
        boundary: Boundary,
    },
    Graph {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
        measure: Vec<f64>,
    },
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

impl SpaceConfig {
    pub fn build(&self) -> Result<MetricMeasureSpace> {
        match self {
            SpaceConfig::Grid {
                dim,
                side,
                spacing,
                boundary,
            } => build_grid_space(*dim, *side, *spacing, *boundary),
            SpaceConfig::Graph { n, edges, measure } => build_graph_space(*n, edges, measure),
        }
    }
}

/// An open ball `{y : d(center, y) < radius}`. Members are the first `len`
/// entries of the center's distance-sorted row; `radius` is infinite for the
/// whole-space ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub len: usize,
}

#[derive(Debug)]
struct BallCache {
    /// Every (center, radius) pair, radius running over the distinct positive
    /// distances plus infinity.
    all: Vec<Ball>,
    /// Set-distinct balls, deduplicated across centers.
    distinct: Vec<Ball>,
}

#[derive(Debug)]
pub struct MetricMeasureSpace {
    n: usize,
    dist: Vec<f64>,
    measure: Vec<f64>,
    quasi_const: f64,
    topology: Topology,
    /// Sorted distinct distances, `levels[0] == 0`.
    levels: Vec<f64>,
    /// `dist_level[x * n + y]` indexes `levels`.
    dist_level: Vec<u32>,
    /// Points of each row sorted by distance (stable in index).
    order: Vec<u32>,
    /// `prefix_mass[x * (n + 1) + k]` = mass of the first `k` points of row x.
    prefix_mass: Vec<f64>,
    balls: OnceLock<BallCache>,
}

impl Clone for MetricMeasureSpace {
    fn clone(&self) -> Self {
        Self::from_parts(
            self.n,
            self.dist.clone(),
            self.measure.clone(),
            self.quasi_const,
            self.topology.clone(),
        )
    }
}

impl MetricMeasureSpace {
    fn from_parts(
        n: usize,
        dist: Vec<f64>,
        measure: Vec<f64>,
        quasi_const: f64,
        topology: Topology,
    ) -> Self {
        let mut levels: Vec<f64> = dist.clone();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        if levels.first().copied() != Some(0.0) {
            levels.insert(0, 0.0);
        }
        let dist_level = dist
            .iter()
            .map(|d| levels.binary_search_by(|l| l.partial_cmp(d).unwrap()).unwrap() as u32)
            .collect();
        let mut order = Vec::with_capacity(n * n);
        let mut prefix_mass = Vec::with_capacity(n * (n + 1));
        for x in 0..n {
            let mut row: Vec<u32> = (0..n as u32).collect();
            row.sort_by(|&a, &b| {
                dist[x * n + a as usize]
                    .partial_cmp(&dist[x * n + b as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut acc = 0.0;
            prefix_mass.push(0.0);
            for &y in &row {
                acc += measure[y as usize];
                prefix_mass.push(acc);
            }
            order.extend(row);
        }
        Self {
            n,
            dist,
            measure,
            quasi_const,
            topology,
            levels,
            dist_level,
            order,
            prefix_mass,
            balls: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.dist[x * self.n + y]
    }

    pub fn dist_row(&self, x: usize) -> &[f64] {
        &self.dist[x * self.n..(x + 1) * self.n]
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn quasi_const(&self) -> f64 {
        self.quasi_const
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.iter().sum()
    }

    /// Sorted distinct distances including 0.
    pub fn distance_levels(&self) -> &[f64] {
        &self.levels
    }

    /// Index of `d(x, y)` in [`Self::distance_levels`].
    pub fn dist_level(&self, x: usize, y: usize) -> usize {
        self.dist_level[x * self.n + y] as usize
    }

    pub fn diameter(&self) -> f64 {
        *self.levels.last().unwrap_or(&0.0)
    }

    pub fn min_positive_distance(&self) -> f64 {
        self.levels.get(1).copied().unwrap_or(f64::INFINITY)
    }

    /// Points sorted by distance from `x`.
    pub fn sorted_row(&self, x: usize) -> &[u32] {
        &self.order[x * self.n..(x + 1) * self.n]
    }

    /// Number of points with `d(x, y) < r`.
    pub fn ball_len(&self, x: usize, r: f64) -> usize {
        let row = self.sorted_row(x);
        let d = self.dist_row(x);
        row.partition_point(|&y| d[y as usize] < r)
    }

    /// Members of the open ball `B(x, r)` in distance order.
    pub fn ball_members(&self, x: usize, r: f64) -> &[u32] {
        let k = self.ball_len(x, r);
        &self.sorted_row(x)[..k]
    }

    pub fn members(&self, ball: &Ball) -> &[u32] {
        &self.sorted_row(ball.center)[..ball.len]
    }

    /// `V(x, r) = μ(B(x, r))`.
    pub fn volume(&self, x: usize, r: f64) -> f64 {
        let k = self.ball_len(x, r);
        self.prefix_mass[x * (self.n + 1) + k]
    }

    pub fn ball_volume(&self, ball: &Ball) -> f64 {
        self.prefix_mass[ball.center * (self.n + 1) + ball.len]
    }

    fn ball_cache(&self) -> &BallCache {
        self.balls.get_or_init(|| {
            let n = self.n;
            let mut all = Vec::new();
            let mut distinct = Vec::new();
            let mut seen: HashSet<Vec<u64>> = HashSet::new();
            let radii: Vec<f64> = self.levels[1..]
                .iter()
                .copied()
                .chain(std::iter::once(f64::INFINITY))
                .collect();
            for x in 0..n {
                let mut prev_len = 0;
                for &r in &radii {
                    let len = self.ball_len(x, r);
                    let ball = Ball {
                        center: x,
                        radius: r,
                        len,
                    };
                    all.push(ball);
                    if len == prev_len {
                        continue;
                    }
                    prev_len = len;
                    let mut key = vec![0u64; n.div_ceil(64)];
                    for &y in &self.sorted_row(x)[..len] {
                        key[y as usize / 64] |= 1 << (y % 64);
                    }
                    if seen.insert(key) {
                        distinct.push(ball);
                    }
                }
            }
            BallCache { all, distinct }
        })
    }

    /// All `(center, radius)` balls with radius over distinct distances and
    /// infinity. Used by radius-dependent functionals.
    pub fn all_balls(&self) -> &[Ball] {
        &self.ball_cache().all
    }

    /// All set-distinct balls. Used by functionals of the member set only.
    pub fn distinct_balls(&self) -> &[Ball] {
        &self.ball_cache().distinct
    }

    /// Maximum of `d(x,y) / (d(x,z) + d(z,y))` over all triples, the
    /// measured quasi-triangle constant.
    pub fn measured_quasi_const(&self) -> f64 {
        let n = self.n;
        let mut k: f64 = 1.0;
        for x in 0..n {
            for y in 0..n {
                let dxy = self.dist(x, y);
                if dxy == 0.0 {
                    continue;
                }
                for z in 0..n {
                    let s = self.dist(x, z) + self.dist(z, y);
                    k = k.max(dxy / s);
                }
            }
        }
        k
    }
}

/// Regular 1D or 2D lattice with lattice-path (L1) distance times spacing and
/// counting measure scaled by `spacing^dim`.
pub fn build_grid_space(
    dim: usize,
    side: usize,
    spacing: f64,
    boundary: Boundary,
) -> Result<MetricMeasureSpace> {
    if dim != 1 && dim != 2 {
        return invalid(format!("grid dimension must be 1 or 2, got {dim}"));
    }
    if side < 4 {
        return invalid(format!("grid side must be at least 4, got {side}"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return invalid(format!("grid spacing must be positive and finite, got {spacing}"));
    }
    let n = side.checked_pow(dim as u32).filter(|&n| n <= MAX_POINTS);
    let Some(n) = n else {
        return invalid(format!("grid with side {side} in dimension {dim} is too large"));
    };
    if !(side as f64 * spacing * dim as f64).is_finite() {
        return invalid("grid extent overflows");
    }
    let axis = |a: usize, b: usize| -> usize {
        let d = a.abs_diff(b);
        match boundary {
            Boundary::Periodic => d.min(side - d),
            Boundary::DirichletGeometry => d,
        }
    };
    let coord = |i: usize| -> (usize, usize) {
        if dim == 1 {
            (i, 0)
        } else {
            (i / side, i % side)
        }
    };
    let mut dist = vec![0.0; n * n];
    for x in 0..n {
        let (xi, xj) = coord(x);
        for y in 0..n {
            let (yi, yj) = coord(y);
            dist[x * n + y] = (axis(xi, yi) + axis(xj, yj)) as f64 * spacing;
        }
    }
    let measure = vec![spacing.powi(dim as i32); n];
    Ok(MetricMeasureSpace::from_parts(
        n,
        dist,
        measure,
        1.0,
        Topology::Grid(GridInfo {
            dim,
            side,
            spacing,
            boundary,
        }),
    ))
}

/// Weighted graph with shortest-path distance and an explicit measure.
pub fn build_graph_space(
    n: usize,
    edges: &[(usize, usize, f64)],
    measure: &[f64],
) -> Result<MetricMeasureSpace> {
    if n == 0 || n > MAX_POINTS {
        return invalid(format!("graph size must be in 1..={MAX_POINTS}, got {n}"));
    }
    if measure.len() != n {
        return invalid(format!("measure has {} entries, expected {n}", measure.len()));
    }
    if let Some(m) = measure.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return invalid(format!("measure must be positive, found {m}"));
    }
    let mut dist = vec![f64::INFINITY; n * n];
    for x in 0..n {
        dist[x * n + x] = 0.0;
    }
    for &(i, j, len) in edges {
        if i >= n || j >= n {
            return invalid(format!("edge ({i}, {j}) out of range"));
        }
        if !(len > 0.0 && len.is_finite()) {
            return invalid(format!("edge ({i}, {j}) has non-positive length {len}"));
        }
        if i != j {
            let d = dist[i * n + j].min(len);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + dist[k * n + j];
                if cand < dist[i * n + j] {
                    dist[i * n + j] = cand;
                }
            }
        }
    }
    if dist.iter().any(|d| !d.is_finite()) {
        return Err(FslError::Disconnected);
    }
    Ok(MetricMeasureSpace::from_parts(
        n,
        dist,
        measure.to_vec(),
        1.0,
        Topology::Graph(edges.to_vec()),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub n_exp: f64,
    pub n_tilde: f64,
    /// Smallest C with `V(x, 2r) <= C V(x, r)` over all x and r.
    pub c_doubling: f64,
    /// Smallest C with `V(x, λr) <= C λ^n V(x, r)` for the fitted n.
    pub c_growth: f64,
    /// Worst ratio `max_{x,r} V(x, λr)/V(x, r)` for λ = 2, 4, 8.
    pub growth_ratios: [f64; 3],
}

/// Doubling exponents by exhaustive sweep. `n_exp` is the least-squares slope
/// of `log max V(x,λr)/V(x,r)` against `log λ` for λ ∈ {2,4,8}; `c_growth`
/// then makes the growth bound exact. `n_tilde` is the smallest exponent with
/// `V(x,r) <= c_doubling (1 + d(x,y)/r)^ñ V(y,r)` over all (x, y, r).
pub fn estimate_doubling(space: &MetricMeasureSpace) -> DoublingReport {
    let lambdas = [2.0, 4.0, 8.0];
    let radii = &space.levels[1..];
    let mut ratios = [1.0f64; 3];
    for x in 0..space.n {
        for &r in radii {
            let v = space.volume(x, r);
            for (i, &l) in lambdas.iter().enumerate() {
                ratios[i] = ratios[i].max(space.volume(x, l * r) / v);
            }
        }
    }
    let xs: Vec<f64> = lambdas.iter().map(|l: &f64| l.ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let n_exp = (sxy / sxx).max(0.0);
    let c_growth = lambdas
        .iter()
        .zip(&ratios)
        .map(|(l, r)| r / l.powf(n_exp))
        .fold(1.0, f64::max);
    let c_doubling = ratios[0];

    let mut n_tilde: f64 = 0.0;
    for &r in radii {
        let vols: Vec<f64> = (0..space.n).map(|x| space.volume(x, r)).collect();
        for x in 0..space.n {
            for y in 0..space.n {
                let rho = vols[x] / vols[y];
                if rho <= c_doubling {
                    continue;
                }
                let base = 1.0 + space.dist(x, y) / r;
                n_tilde = n_tilde.max((rho / c_doubling).ln() / base.ln());
            }
        }
    }
    DoublingReport {
        n_exp,
        n_tilde,
        c_doubling,
        c_growth,
        growth_ratios: ratios,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub id: usize,
    pub level: i32,
    pub center: usize,
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub side_len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeLevel {
    pub nu: i32,
    pub cubes: Vec<Cube>,
    /// Cube id of every point.
    pub assignment: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicCubeTree {
    pub levels: Vec<CubeLevel>,
    pub c0: f64,
    pub kappa0: f64,
    /// Points whose unconstrained nearest net point lay outside their parent.
    pub reassigned: usize,
}

impl DyadicCubeTree {
    pub fn nu_min(&self) -> i32 {
        self.levels[0].nu
    }

    pub fn nu_max(&self) -> i32 {
        self.levels.last().unwrap().nu
    }

    pub fn level(&self, nu: i32) -> Option<&CubeLevel> {
        let i = nu.checked_sub(self.nu_min())?;
        self.levels.get(usize::try_from(i).ok()?)
    }

    pub fn cube_count(&self) -> usize {
        self.levels.iter().map(|l| l.cubes.len()).sum()
    }

    /// Radius of the dilated ball `3B_Q`.
    pub fn dilated_radius(&self, cube: &Cube) -> f64 {
        3.0 * self.kappa0 * cube.side_len
    }
}

/// Net-based dyadic cubes for levels `nu_min..=nu_max` with `ℓ(Q) = 2^{-ν}`.
pub fn build_dyadic_cubes(
    space: &MetricMeasureSpace,
    nu_min: i32,
    nu_max: i32,
) -> Result<DyadicCubeTree> {
    if nu_min > nu_max {
        return invalid(format!("empty level range {nu_min}..={nu_max}"));
    }
    let tol = 1e-12;
    let coarse = 2f64.powi(-nu_min);
    if coarse < space.diameter() / 2.0 * (1.0 - tol) {
        return invalid(format!(
            "coarsest scale 2^{} is below half the diameter {}",
            -nu_min,
            space.diameter()
        ));
    }
    let fine = 2f64.powi(-nu_max);
    if fine > space.min_positive_distance() * (1.0 + tol) {
        return invalid(format!(
            "finest scale 2^{} exceeds the minimal distance {}",
            -nu_max,
            space.min_positive_distance()
        ));
    }
    let n = space.len();
    let mut net: Vec<usize> = Vec::new();
    let mut levels: Vec<CubeLevel> = Vec::new();
    let mut reassigned = 0;
    for nu in nu_min..=nu_max {
        let sep = 2f64.powi(-nu);
        for x in 0..n {
            if net.iter().all(|&c| space.dist(x, c) >= sep * (1.0 - tol)) {
                net.push(x);
            }
        }
        let nearest = |x: usize, allowed: &dyn Fn(usize) -> bool| -> usize {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (i, &c) in net.iter().enumerate() {
                if !allowed(i) {
                    continue;
                }
                let d = space.dist(x, c);
                if d < best_d || (d == best_d && c < net[best]) {
                    best = i;
                    best_d = d;
                }
            }
            best
        };
        let mut assignment = vec![0; n];
        match levels.last() {
            None => {
                for (x, a) in assignment.iter_mut().enumerate() {
                    *a = nearest(x, &|_| true);
                }
            }
            Some(parent) => {
                for (x, a) in assignment.iter_mut().enumerate() {
                    let px = parent.assignment[x];
                    let free = nearest(x, &|_| true);
                    let constrained =
                        nearest(x, &|i| parent.assignment[net[i]] == px);
                    if free != constrained {
                        reassigned += 1;
                    }
                    *a = constrained;
                }
            }
        }
        let parent_level = levels.last();
        let cubes = net
            .iter()
            .enumerate()
            .map(|(id, &c)| Cube {
                id,
                level: nu,
                center: c,
                members: (0..n).filter(|&x| assignment[x] == id).collect(),
                parent: parent_level.map(|p| p.assignment[c]),
                side_len: sep,
            })
            .collect();
        levels.push(CubeLevel {
            nu,
            cubes,
            assignment,
        });
    }
    let mut c0 = f64::INFINITY;
    let mut kmax: f64 = 0.0;
    for level in &levels {
        for cube in &level.cubes {
            let outer = cube
                .members
                .iter()
                .map(|&y| space.dist(cube.center, y))
                .fold(0.0, f64::max);
            kmax = kmax.max(outer / cube.side_len);
            let inner = (0..n)
                .filter(|&y| level.assignment[y] != cube.id)
                .map(|y| space.dist(cube.center, y))
                .fold(f64::INFINITY, f64::min);
            c0 = c0.min(inner / cube.side_len);
        }
    }
    // open ball B(x_Q, κ₀ℓ) must contain the farthest member
    let kappa0 = kmax * (1.0 + 1e-9) + 1e-12;
    Ok(DyadicCubeTree {
        levels,
        c0,
        kappa0,
        reassigned,
    })
}
