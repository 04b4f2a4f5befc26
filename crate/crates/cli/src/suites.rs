use std::time::Instant;

use fsl_core::apps::{
    default_m_order, fractional_boundedness_check, fractional_power_report, laplace_type_multiplier,
    multiplier_boundedness_check, spectral_power, SymbolConfig,
};
use fsl_core::atoms::{
    atomic_decompose, classical_atom_check, coefficient_norms, reconstruct, synthesis_bound_check,
    synthesis_threshold, tree_for_grid, DecompositionParams, Truncation, CANCELLATION_TOL,
    SUPPORT_EPS,
};
use fsl_core::calculus::{
    calderon_reconstruct, dyadic_reconstruct, heat_profile, kernel_bound_check, make_compact_phi,
    make_partition_of_unity, ScaleGrid, SpectralProfile, Support,
};
use fsl_core::operator::{gaussian_bound_fit, wave_support_profile, SelfAdjointOperator};
use fsl_core::space::{build_dyadic_cubes, estimate_doubling};
use fsl_core::spaces::{
    angle_growth_slope, equivalence_suite, parseval_band, random_field, weight_label, Band,
    CheckParams, Functional, NormEngine, NormParams, StructureIndices, CHECKS,
};
use fsl_core::weights::{a1_constant, ap_constant, critical_indices, fefferman_stein_check, Weight};
use fsl_core::FslError;

use crate::baseline::{BaselineRecord, BaselineStore, Gate, Provenance};
use crate::config::{Fixture, ResolvedConfig};
use crate::error::{CliError, Result};
use crate::report::{checks_from_report, CheckResult, Report, Requirement, SuiteReport};

/// Suites in dependency order.
pub const SUITES: [&str; 8] = [
    "space",
    "weights",
    "kernel",
    "calderon",
    "norms",
    "equivalences",
    "atoms",
    "apps",
];

/// Equivalence checks reported under the `norms` suite; the others belong to
/// `equivalences`.
pub const IDENTIFICATION_CHECKS: [&str; 5] = [
    "lp-identity",
    "hardy-identity",
    "sobolev-identity",
    "hardy-sobolev-identity",
    "bmo-identity",
];

/// Decay exponent `N` of the kernel-bound sweep.
pub const KERNEL_DECAY: f64 = 1.0;
/// Allowed spread of the kernel constants across scales.
pub const KERNEL_SPREAD: f64 = 4.0;
/// Allowed growth of the kernel constant between the two smallest `s`.
pub const GAIN_SATURATION: f64 = 1.05;
/// Allowed spread of the Fefferman–Stein constants across seeds.
pub const FS_SPREAD: f64 = 2.0;
pub const TELESCOPING_TOL: f64 = 1e-10;
pub const CALDERON_TOL: f64 = 1e-6;
pub const DYADIC_TOL: f64 = 1e-10;
pub const EIGEN_POWER_TOL: f64 = 1e-8;
pub const INTEGRAL_TOL: f64 = 1e-6;
pub const COMPOSITION_TOL: f64 = 1e-8;
pub const MULTIPLIER_TOL: f64 = 1e-6;
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Points per octave of the continuous Calderón and decomposition grids.
pub const FINE_POINTS_PER_OCTAVE: usize = 32;
/// Fields per exact-identity check in the applications suite.
const IDENTITY_FIELDS: usize = 20;

fn suite_of(name: &str) -> Option<&'static str> {
    if let Some(s) = SUITES.iter().find(|s| **s == name) {
        return Some(s);
    }
    if IDENTIFICATION_CHECKS.contains(&name) {
        return Some("norms");
    }
    CHECKS.contains(&name).then_some("equivalences")
}

/// Accepts a suite name or a single equivalence-check name.
pub fn check_suite(name: &str) -> Result<()> {
    suite_of(name)
        .map(|_| ())
        .ok_or_else(|| CliError::UnknownSuite(name.to_string()))
}

/// `(suite, check filter)` in dependency order; `None` runs the whole suite.
pub fn plan(names: &[String]) -> Result<Vec<(&'static str, Option<Vec<String>>)>> {
    let mut out: Vec<(&'static str, Option<Vec<String>>)> = Vec::new();
    for name in names {
        let suite = suite_of(name).ok_or_else(|| CliError::UnknownSuite(name.clone()))?;
        let whole = suite == name;
        match out.iter_mut().find(|(s, _)| *s == suite) {
            Some((_, filter)) => match filter {
                Some(f) if !whole => {
                    if !f.contains(name) {
                        f.push(name.clone());
                    }
                }
                _ if whole => *filter = None,
                _ => {}
            },
            None => out.push((suite, (!whole).then(|| vec![name.clone()]))),
        }
    }
    out.sort_by_key(|(s, _)| SUITES.iter().position(|x| x == s));
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record observed bands as the new baselines.
    pub rebaseline: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteTiming {
    pub suite: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub timings: Vec<SuiteTiming>,
}

struct Ctx<'a> {
    fx: &'a Fixture,
    samples: usize,
    atom_samples: usize,
    seed: u64,
}

impl Ctx<'_> {
    fn op(&self) -> &SelfAdjointOperator {
        &self.fx.op
    }

    fn weight(&self, i: usize) -> &Weight {
        &self.fx.weights[i % self.fx.weights.len()]
    }
}

/// Runs the selected suites, gates baseline-tracked checks against `store`
/// (or records them under `--rebaseline`) and assembles the report.
pub fn run_suite(cfg: &ResolvedConfig, store: &mut BaselineStore, opts: RunOptions) -> Result<RunOutcome> {
    let plan = plan(&cfg.suites)?;
    let fx = cfg.build()?;
    let hash = cfg.hash();
    let ctx = Ctx {
        fx: &fx,
        samples: cfg.samples,
        atom_samples: cfg.atom_samples,
        seed: cfg.seed,
    };
    let provenance = opts.rebaseline.then(|| Provenance::now(&hash));
    let mut suites = Vec::new();
    let mut timings = Vec::new();
    for (suite, filter) in plan {
        let start = Instant::now();
        let filter = filter.as_deref();
        let result = match suite {
            "space" => space_suite(&ctx),
            "weights" => weights_suite(&ctx),
            "kernel" => kernel_suite(&ctx),
            "calderon" => calderon_suite(&ctx),
            "norms" => norms_suite(&ctx, filter),
            "equivalences" => equivalences_suite(&ctx, filter),
            "atoms" => atoms_suite(&ctx),
            "apps" => apps_suite(&ctx),
            _ => unreachable!("plan only yields known suites"),
        };
        let mut checks = result.unwrap_or_else(|e| {
            vec![CheckResult::flag(suite, "suite-error", "error", "", false).note(e.to_string())]
        });
        for c in &mut checks {
            c.evaluate();
            if c.gating && c.needs_baseline() {
                apply_baseline(c, store, provenance.as_ref());
            }
        }
        timings.push(SuiteTiming {
            suite: suite.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        suites.push(SuiteReport {
            suite: suite.to_string(),
            pass: checks.iter().all(|c| c.pass || !c.gating),
            checks,
        });
    }
    if opts.rebaseline {
        store.save()?;
    }
    let pass = suites.iter().all(|s| s.pass);
    Ok(RunOutcome {
        report: Report {
            fixture: cfg.name.clone(),
            config_hash: hash,
            seed: cfg.seed,
            samples: cfg.samples,
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            suites,
            pass,
        },
        timings,
    })
}

fn apply_baseline(c: &mut CheckResult, store: &mut BaselineStore, provenance: Option<&Provenance>) {
    let observed = [c.ratios.min, c.ratios.max];
    let key = c.key();
    if let Some(p) = provenance {
        if observed.iter().all(|v| v.is_finite()) {
            store.append(
                &key,
                BaselineRecord {
                    band: observed,
                    provenance: p.clone(),
                },
            );
        }
        c.baseline = store.active(&key).map(|r| r.band);
        return;
    }
    match store.gate(&key, observed) {
        Gate::Pass => c.baseline = store.active(&key).map(|r| r.band),
        Gate::Missing => {
            c.pass = false;
            c.notes.push("no baseline recorded; run with --rebaseline".into());
        }
        Gate::Drift { recorded, observed } => {
            c.pass = false;
            c.baseline = Some(recorded);
            c.notes.push(format!(
                "baseline mismatch: recorded [{:e}, {:e}], observed [{:e}, {:e}]",
                recorded[0], recorded[1], observed[0], observed[1]
            ));
        }
    }
}

fn wl(w: &Weight) -> String {
    weight_label(w)
}

fn space_suite(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    const S: &str = "space";
    let op = ctx.op();
    let space = op.space();
    let n = op.len();
    let lam = op.eigenvalues();
    let scale = op.lambda_max().max(1.0);
    let resid: Vec<f64> = (0..n)
        .map(|k| {
            let u = op.eigenvector(k);
            let lu = op.apply_matrix(&u);
            lu.iter()
                .zip(&u)
                .map(|(a, b)| (a - lam[k] * b).abs())
                .fold(0.0, f64::max)
                / scale
        })
        .collect();
    let mu = space.measure();
    let u = op.eigenvectors();
    let mut ortho = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let ip: f64 = (0..n).map(|x| u[(x, i)] * u[(x, j)] * mu[x]).sum();
            ortho = ortho.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let doubling = estimate_doubling(space);
    let fine = (1.0 / space.min_positive_distance()).log2().ceil() as i32;
    let tree = build_dyadic_cubes(space, 0, fine)?;
    let mut nested = true;
    for (i, level) in tree.levels.iter().enumerate() {
        let mut seen = vec![0usize; n];
        for c in &level.cubes {
            nested &= c.members.contains(&c.center);
            for &m in &c.members {
                seen[m] += 1;
                nested &= level.assignment[m] == c.id;
            }
            if i > 0 {
                nested &= match c.parent {
                    Some(pid) => {
                        let parent = &tree.levels[i - 1].cubes[pid];
                        c.members.iter().all(|m| parent.members.contains(m))
                    }
                    None => false,
                };
            }
        }
        nested &= seen.iter().all(|&k| k == 1);
    }
    let h = space.min_positive_distance();
    let diam = space.diameter();
    let ts: Vec<f64> = (0..8)
        .map(|i| 4.0 * h * h * 4f64.powi(i))
        .filter(|&t| t <= diam * diam)
        .collect();
    let heat = gaussian_bound_fit(op, &ts)?;
    let wave: Vec<[f64; 2]> = [2.0, 4.0, 8.0]
        .iter()
        .map(|&k| {
            let t = k * h;
            wave_support_profile(op, t).map(|w| [t, w.off_support_residual])
        })
        .collect::<fsl_core::Result<_>>()?;
    let wave_vals: Vec<f64> = wave.iter().map(|p| p[1]).collect();
    Ok(vec![
        CheckResult::new(S, "operator", "eigen-residual", "", &resid)
            .require(Requirement::AtMost { limit: 1e-10 }),
        CheckResult::new(S, "operator", "orthonormality", "", &[ortho])
            .require(Requirement::AtMost { limit: 1e-10 }),
        CheckResult::flag(S, "operator", "connected-kernel", "", op.kernel_dim() == 1),
        CheckResult::new(S, "doubling", "n_exp", "", &[doubling.n_exp])
            .require(Requirement::FinitePositive)
            .require(Requirement::Baseline),
        CheckResult::new(S, "doubling", "c_doubling", "", &[doubling.c_doubling])
            .require(Requirement::FinitePositive)
            .require(Requirement::Baseline),
        CheckResult::new(S, "quasi-metric", "measured", "", &[space.measured_quasi_const()])
            .require(Requirement::AtMost {
                limit: space.quasi_const(),
            }),
        CheckResult::flag(S, "cubes", "partition-and-nesting", format!("levels=0..={fine}"), nested),
        CheckResult::new(S, "heat", "conservation-defect", "", &[heat.conservation_defect])
            .require(Requirement::AtMost { limit: 1e-8 }),
        CheckResult::new(S, "heat", "gaussian-constant", format!("c={}", heat.c), &[heat.big_c])
            .informational(),
        CheckResult::new(S, "heat", "holder-exponent", "", &[heat.holder_delta0]).informational(),
        CheckResult::new(S, "wave", "off-support-residual", "t=2h,4h,8h", &wave_vals)
            .informational()
            .with_series(wave),
    ])
}

fn weights_suite(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    const S: &str = "weights";
    let op = ctx.op();
    let space = op.space();
    let mut out = Vec::new();
    for w in &ctx.fx.weights {
        let label = wl(w);
        if w.is_constant() {
            let mut vals: Vec<f64> = [1.5, 2.0, 3.0]
                .iter()
                .map(|&p| ap_constant(space, w, p))
                .collect::<fsl_core::Result<_>>()?;
            vals.push(a1_constant(space, w));
            out.push(
                CheckResult::new(S, "constant-weight", "ap-and-a1", format!("w={label}"), &vals)
                    .require(Requirement::Within { lo: 1.0, hi: 1.0 }),
            );
        }
        let ps = [1.1, 1.3, 1.5, 2.0, 3.0, 5.0, 8.0];
        let aps: Vec<f64> = ps
            .iter()
            .map(|&p| ap_constant(space, w, p))
            .collect::<fsl_core::Result<_>>()?;
        let a1 = a1_constant(space, w);
        let mut growth: Vec<f64> = aps.windows(2).map(|x| x[1] / x[0]).collect();
        growth.extend(aps.iter().map(|a| a / a1));
        out.push(
            CheckResult::new(S, "ap-monotonicity", "successive-ratio", format!("w={label}"), &growth)
                .require(Requirement::AtMost { limit: 1.0 + 1e-12 })
                .with_series(ps.iter().zip(&aps).map(|(p, a)| [*p, *a]).collect()),
        );
        let mut dual = Vec::new();
        for p in [1.5f64, 2.0, 3.0] {
            let pp = p / (p - 1.0);
            let sigma = w.pow(1.0 - pp);
            let lhs = ap_constant(space, w, p)?;
            let rhs = ap_constant(space, &sigma, pp)?;
            dual.push((lhs - rhs).abs() / lhs);
        }
        out.push(
            CheckResult::new(S, "ap-duality", "relative-gap", format!("w={label}"), &dual)
                .require(Requirement::AtMost { limit: 1e-10 }),
        );
        let idx = critical_indices(space, w);
        out.push(
            CheckResult::new(S, "critical-indices", "q_w", format!("w={label}"), &[idx.qw_est])
                .require(Requirement::FinitePositive)
                .require(Requirement::Baseline),
        );
        let consts: Vec<f64> = (0..4u64)
            .map(|k| {
                let family: Vec<Vec<f64>> = (0..6)
                    .map(|i| random_field(op, Band::default(), ctx.seed + k, i))
                    .collect::<fsl_core::Result<_>>()?;
                fefferman_stein_check(space, &family, 2.0, 2.0, 1.0, w)
            })
            .collect::<fsl_core::Result<_>>()?;
        out.push(
            CheckResult::new(S, "fefferman-stein", "seed-constants", format!("p=2,q=2,r=1,w={label}"), &consts)
                .require(Requirement::FinitePositive)
                .require(Requirement::Spread { limit: FS_SPREAD })
                .require(Requirement::Baseline),
        );
    }
    Ok(out)
}

/// Dyadic scales `t` with `t√λ₁⁺ <= 1 <= t√λ_max`.
pub fn kernel_scales(op: &SelfAdjointOperator) -> Vec<f64> {
    let Some(l1) = op.lambda_min_positive() else {
        return Vec::new();
    };
    let (lo, hi) = (l1.sqrt(), op.lambda_max().sqrt());
    (-8..=30)
        .map(|j| 2f64.powi(-j))
        .filter(|&t| t * lo <= 1.0 && t * hi >= 1.0)
        .collect()
}

struct KernelFamily {
    name: String,
    f1: SpectralProfile,
    f2: SpectralProfile,
    /// `s` values paired with `t`.
    s_of: fn(f64) -> Vec<f64>,
    ell: u32,
    gating: bool,
}

fn same_scale(t: f64) -> Vec<f64> {
    vec![t]
}

fn paired_scales(t: f64) -> Vec<f64> {
    vec![t, 1.5 * t]
}

fn shrinking_scales(t: f64) -> Vec<f64> {
    (0..=10).map(|i| t / 2f64.powi(i)).collect()
}

fn kernel_suite(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    const S: &str = "kernel";
    let op = ctx.op();
    let ts = kernel_scales(op);
    if ts.is_empty() {
        return Err(FslError::Degenerate("no scales in the spectral window".into()).into());
    }
    let psi = make_partition_of_unity().psi;
    let gauss = heat_profile(0);
    let one = SpectralProfile::new("one", Support::Unbounded, 0, |_| 1.0);
    let mut fams = vec![
        KernelFamily {
            name: "single-gaussian".into(),
            f1: gauss.clone(),
            f2: one.clone(),
            s_of: same_scale,
            ell: 0,
            gating: true,
        },
        KernelFamily {
            name: "single-partition".into(),
            f1: psi.clone(),
            f2: one,
            s_of: same_scale,
            ell: 0,
            gating: true,
        },
        KernelFamily {
            name: "pair-gaussian".into(),
            f1: gauss.clone(),
            f2: gauss.clone(),
            s_of: paired_scales,
            ell: 0,
            gating: true,
        },
        KernelFamily {
            name: "pair-partition".into(),
            f1: psi.clone(),
            f2: psi.clone(),
            s_of: paired_scales,
            ell: 0,
            gating: false,
        },
    ];
    for ell in [1u32, 2] {
        fams.push(KernelFamily {
            name: format!("gain-gaussian(l={ell})"),
            f1: gauss.clone(),
            f2: heat_profile(ell),
            s_of: shrinking_scales,
            ell,
            gating: true,
        });
        fams.push(KernelFamily {
            name: format!("gain-partition(l={ell})"),
            f1: psi.clone(),
            f2: heat_profile(ell),
            s_of: shrinking_scales,
            ell,
            gating: false,
        });
    }
    let mut out = Vec::new();
    for fam in fams {
        let mut per_t = Vec::new();
        let mut saturation = Vec::new();
        for &t in &ts {
            let row: Vec<f64> = (fam.s_of)(t)
                .into_iter()
                .map(|s| kernel_bound_check(op, &fam.f1, &fam.f2, t, s, KERNEL_DECAY, fam.ell))
                .collect::<fsl_core::Result<_>>()?;
            per_t.push(row.iter().copied().fold(0.0, f64::max));
            if fam.ell > 0 {
                let k = row.len();
                saturation.push(row[k - 1] / row[k - 2]);
            }
        }
        let params = format!("N={KERNEL_DECAY},scales={}", ts.len());
        let series = ts.iter().zip(&per_t).map(|(t, c)| [*t, *c]).collect();
        let mut c = CheckResult::new(S, "constants", &fam.name, &params, &per_t)
            .require(Requirement::FinitePositive)
            .require(Requirement::Spread {
                limit: KERNEL_SPREAD,
            })
            .require(Requirement::Baseline)
            .with_series(series);
        if !fam.gating {
            c = c.informational();
        }
        out.push(c);
        if fam.ell > 0 {
            let mut g = CheckResult::new(S, "gain", &fam.name, &params, &saturation)
                .require(Requirement::AtMost {
                    limit: GAIN_SATURATION,
                });
            if !fam.gating {
                g = g.informational();
            }
            out.push(g);
        }
    }
    Ok(out)
}

fn calderon_suite(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    const S: &str = "calderon";
    let op = ctx.op();
    let pou = make_partition_of_unity().fitted_to(op);
    let tele: Vec<f64> = op
        .eigenvalues()
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| {
            let r = l.sqrt();
            (pou.js().map(|j| pou.psi_j(j, r)).sum::<f64>() - 1.0).abs()
        })
        .collect();
    let grid = ScaleGrid::for_operator(op, FINE_POINTS_PER_OCTAVE)?;
    let mut cont = Vec::with_capacity(ctx.samples);
    let mut dy = Vec::with_capacity(ctx.samples);
    for i in 0..ctx.samples {
        let f = random_field(op, Band::default(), ctx.seed, i as u64)?;
        cont.push(calderon_reconstruct(op, &pou, &grid, &f).1);
        dy.push(dyadic_reconstruct(op, &pou, &f).1);
    }
    let band = parseval_band(&pou);
    Ok(vec![
        CheckResult::new(S, "telescoping", "max-defect", "positive spectrum", &tele)
            .require(Requirement::AtMost { limit: TELESCOPING_TOL }),
        CheckResult::new(
            S,
            "reconstruction",
            "continuous",
            format!("points_per_octave={FINE_POINTS_PER_OCTAVE}"),
            &cont,
        )
        .require(Requirement::AtMost { limit: CALDERON_TOL }),
        CheckResult::new(S, "reconstruction", "dyadic", "", &dy)
            .require(Requirement::AtMost { limit: DYADIC_TOL }),
        CheckResult::new(S, "parseval-band", "sqrt-sum-psi-squared", "", &band).informational(),
    ])
}

fn selected(filter: Option<&[String]>, check: &str) -> bool {
    filter.is_none_or(|f| f.iter().any(|c| c == check))
}

fn norms_suite(ctx: &Ctx, filter: Option<&[String]>) -> Result<Vec<CheckResult>> {
    const S: &str = "norms";
    let op = ctx.op();
    let ws = &ctx.fx.weights;
    let plans: Vec<(&str, Vec<CheckParams>)> = vec![
        (
            "lp-identity",
            [1.5, 2.0, 3.0]
                .iter()
                .flat_map(|&p| ws.iter().map(move |w| CheckParams::new(0.0, p, 2.0, w.clone())))
                .collect(),
        ),
        (
            "hardy-identity",
            [0.7, 1.0]
                .iter()
                .flat_map(|&p| ws.iter().map(move |w| CheckParams::new(0.0, p, 2.0, w.clone())))
                .collect(),
        ),
        (
            "sobolev-identity",
            [-1.0, 1.0, 2.0]
                .iter()
                .flat_map(|&s| {
                    ws.iter()
                        .map(move |w| CheckParams::new(0.0, 2.0, 2.0, w.clone()).with_s(s))
                })
                .collect(),
        ),
        (
            "hardy-sobolev-identity",
            [-1.0, 1.0, 2.0]
                .iter()
                .map(|&s| CheckParams::new(0.0, 1.0, 2.0, ws[0].clone()).with_s(s))
                .collect(),
        ),
        (
            "bmo-identity",
            ws.iter()
                .map(|w| CheckParams::new(0.0, 2.0, 2.0, w.clone()))
                .collect(),
        ),
    ];
    let mut out = Vec::new();
    for (check, grid) in plans {
        if selected(filter, check) {
            let r = equivalence_suite(op, check, &grid, ctx.samples, ctx.seed)?;
            out.extend(checks_from_report(S, &r));
        }
    }
    Ok(out)
}

/// Parameter tuples `(α, p, q)` of the equivalence checks; weights cycle
/// through the fixture's list starting from the second.
pub const EQUIVALENCE_TUPLES: [(f64, f64, f64); 3] = [(0.0, 2.0, 2.0), (0.5, 1.5, 2.0), (-0.5, 3.0, 1.0)];
pub const F_INFINITY_TUPLES: [(f64, f64); 2] = [(0.0, 2.0), (0.5, 1.5)];

fn equivalences_suite(ctx: &Ctx, filter: Option<&[String]>) -> Result<Vec<CheckResult>> {
    const S: &str = "equivalences";
    let op = ctx.op();
    let grid: Vec<CheckParams> = EQUIVALENCE_TUPLES
        .iter()
        .enumerate()
        .map(|(i, &(a, p, q))| CheckParams::new(a, p, q, ctx.weight(i.min(1)).clone()))
        .collect();
    let fi_grid: Vec<CheckParams> = F_INFINITY_TUPLES
        .iter()
        .enumerate()
        .map(|(i, &(a, q))| CheckParams::new(a, f64::INFINITY, q, ctx.weight(i).clone()))
        .collect();
    let mut out = Vec::new();
    for check in CHECKS.iter().filter(|c| !IDENTIFICATION_CHECKS.contains(c)) {
        if !selected(filter, check) {
            continue;
        }
        let g = if *check == "f-infinity-chars" { &fi_grid } else { &grid };
        let r = equivalence_suite(op, check, g, ctx.samples, ctx.seed)?;
        out.extend(checks_from_report(S, &r));
        if *check == "change-of-angle" {
            for cp in g {
                let d = cp.describe();
                let slope = angle_growth_slope(&r, &d)
                    .ok_or_else(|| FslError::Degenerate("angle slope needs two apertures".into()))?;
                let exponent = r.extra[&format!("angle_exponent|{d}")];
                out.push(
                    CheckResult::new(S, check, "growth-slope", d, &[slope])
                        .require(Requirement::AtMost { limit: exponent }),
                );
            }
        }
    }
    Ok(out)
}

/// Smallest integer order strictly above the synthesis threshold at
/// `α = 0`, `p = q = 2`.
pub fn atom_order(idx: StructureIndices) -> u32 {
    synthesis_threshold(idx, 0.0, 2.0, 2.0).floor() as u32 + 1
}

fn atoms_suite(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    const S: &str = "atoms";
    let op = ctx.op();
    let space = op.space();
    let grid = ScaleGrid::for_operator(op, FINE_POINTS_PER_OCTAVE)?;
    let tree = tree_for_grid(space, &grid)?;
    let h = space.min_positive_distance();
    let diam = space.diameter();
    let ts: Vec<f64> = (0..8)
        .map(|i| 4.0 * h * h * 4f64.powi(i))
        .filter(|&t| t <= diam * diam)
        .collect();
    let heat = gaussian_bound_fit(op, &ts)?;
    let analysis_params = [(0.0, 2.0), (0.5, 1.0)];
    let mut out = Vec::new();
    for w in &ctx.fx.weights {
        let idx = StructureIndices::measure(space, w);
        let m = atom_order(idx);
        let label = format!("M={m},p=2,w={}", wl(w));
        let params = DecompositionParams {
            m_order: m,
            p: 2.0,
            weight: w.clone(),
            pou: make_partition_of_unity(),
            phi: make_compact_phi()?,
            grid: grid.clone(),
            truncation: Truncation::None,
        };
        let engines: Vec<(f64, f64, NormEngine, NormEngine)> = analysis_params
            .iter()
            .map(|&(a, q)| {
                let np = NormParams::new(a, 2.0, q, w.clone()).with_indices(idx);
                Ok((
                    a,
                    q,
                    NormEngine::new(op, np.clone(), Functional::Besov)?,
                    NormEngine::new(op, np, Functional::Triebel)?,
                ))
            })
            .collect::<fsl_core::Result<_>>()?;
        let mut residual = Vec::new();
        let mut eps = Vec::new();
        let mut size_low = Vec::new();
        let mut size_high = Vec::new();
        let mut cancel = Vec::new();
        let mut classical = Vec::new();
        let mut ratios = vec![(Vec::new(), Vec::new()); engines.len()];
        for i in 0..ctx.atom_samples {
            let f = random_field(op, Band::default(), ctx.seed, i as u64)?;
            let d = atomic_decompose(op, &f, params.clone(), &tree)?;
            residual.push(reconstruct(op, &d).1);
            let mut e = 0.0f64;
            let (mut lo, mut hi, mut c) = (0.0f64, 0.0f64, 0.0f64);
            for a in &d.atoms {
                e = e.max(a.max_support_eps());
                c = c.max(a.cancellation);
                for (k, v) in a.size_const.iter().enumerate() {
                    if k as u32 <= m {
                        lo = lo.max(*v);
                    } else {
                        hi = hi.max(*v);
                    }
                }
            }
            eps.push(e);
            size_low.push(lo);
            size_high.push(hi);
            cancel.push(c);
            if i == 0 {
                for a in &d.atoms {
                    let r = classical_atom_check(op, a, &heat, 2.0, w)?;
                    classical.push(r.support_eps);
                }
            }
            for ((rb, rt), (a, q, be, te)) in ratios.iter_mut().zip(&engines) {
                let (cb, ct) = coefficient_norms(&d, *a, 2.0, *q, w);
                rb.push(cb / be.norm(&f)?.value);
                rt.push(ct / te.norm(&f)?.value);
            }
        }
        out.push(
            CheckResult::new(S, "decomposition", "residual", &label, &residual)
                .require(Requirement::AtMost { limit: RECONSTRUCTION_TOL }),
        );
        out.push(
            CheckResult::new(S, "decomposition", "epsilon-support", &label, &eps)
                .require(Requirement::AtMost { limit: SUPPORT_EPS }),
        );
        out.push(
            CheckResult::new(S, "decomposition", "size-k<=M", &label, &size_low)
                .require(Requirement::FinitePositive)
                .require(Requirement::Baseline),
        );
        out.push(
            CheckResult::new(S, "decomposition", "size-k>M", &label, &size_high)
                .require(Requirement::FinitePositive)
                .require(Requirement::Baseline),
        );
        out.push(
            CheckResult::new(S, "decomposition", "cancellation", &label, &cancel)
                .require(Requirement::AtMost { limit: CANCELLATION_TOL }),
        );
        out.push(
            CheckResult::new(S, "decomposition", "classical-support-eps", &label, &classical)
                .informational(),
        );
        for ((rb, rt), (a, q, _, _)) in ratios.iter().zip(&engines) {
            let p = format!("M={m},alpha={a},p=2,q={q},w={}", wl(w));
            out.push(
                CheckResult::new(S, "analysis-bound", "besov", &p, rb)
                    .require(Requirement::FinitePositive)
                    .require(Requirement::Baseline),
            );
            out.push(
                CheckResult::new(S, "analysis-bound", "triebel", &p, rt)
                    .require(Requirement::FinitePositive)
                    .require(Requirement::Baseline),
            );
        }
        let hop = DecompositionParams {
            truncation: Truncation::HopInterior,
            ..params.clone()
        };
        let f = random_field(op, Band::default(), ctx.seed, 0)?;
        let d = atomic_decompose(op, &f, hop, &tree)?;
        let e = d.atoms.iter().map(|a| a.max_support_eps()).fold(0.0, f64::max);
        out.push(
            CheckResult::new(S, "hop-interior-truncation", "residual", &label, &[reconstruct(op, &d).1])
                .informational()
                .note(format!("max epsilon-support {e:e}")),
        );
        let np = NormParams::new(0.0, 2.0, 2.0, w.clone());
        let syn = synthesis_bound_check(op, &tree, &np, m, idx, ctx.samples, ctx.seed)?;
        out.extend(checks_from_report(S, &syn));
        if m >= 2 {
            let refused = matches!(
                synthesis_bound_check(op, &tree, &np, m - 1, idx, 1, ctx.seed),
                Err(FslError::BelowThreshold(_))
            );
            out.push(CheckResult::flag(
                S,
                "synthesis-bound",
                "refuses-below-threshold",
                format!("M={},threshold={:.4},w={}", m - 1, synthesis_threshold(idx, 0.0, 2.0, 2.0), wl(w)),
                refused,
            ));
        }
    }
    Ok(out)
}

fn rel_l2(op: &SelfAdjointOperator, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let den = op.l2_norm(b);
    if den == 0.0 {
        op.l2_norm(&d)
    } else {
        op.l2_norm(&d) / den
    }
}

fn apps_suite(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    const S: &str = "apps";
    let op = ctx.op();
    let lam = op.eigenvalues();
    let kdim = op.kernel_dim();
    let fields: Vec<Vec<f64>> = (0..IDENTITY_FIELDS.min(ctx.samples))
        .map(|i| random_field(op, Band::default(), ctx.seed, i as u64))
        .collect::<fsl_core::Result<_>>()?;
    let mut out = Vec::new();
    for s in [-1.0, 0.5, 1.0, 2.0] {
        let errs: Vec<f64> = (kdim..op.len())
            .map(|k| {
                let u = op.eigenvector(k);
                let c = lam[k].powf(0.5 * s);
                let want: Vec<f64> = u.iter().map(|v| c * v).collect();
                spectral_power(op, &u, s).map(|g| rel_l2(op, &g, &want))
            })
            .collect::<fsl_core::Result<_>>()?;
        out.push(
            CheckResult::new(S, "eigenfunctions", "power", format!("s={s}"), &errs)
                .require(Requirement::AtMost { limit: EIGEN_POWER_TOL }),
        );
    }
    for s in [-1.0, 0.5, 1.0, 1.5] {
        let m0 = default_m_order(s);
        for m in [m0, m0 + 1] {
            let diffs: Vec<f64> = fields
                .iter()
                .map(|f| fractional_power_report(op, f, s, m).map(|r| r.rel_diff))
                .collect::<fsl_core::Result<_>>()?;
            out.push(
                CheckResult::new(S, "integral-vs-spectral", "relative-difference", format!("s={s},m={m}"), &diffs)
                    .require(Requirement::AtMost { limit: INTEGRAL_TOL }),
            );
        }
    }
    for (a, b) in [(0.5, 1.0), (1.0, -1.0), (-0.5, 2.0), (1.5, 1.5)] {
        let errs: Vec<f64> = fields
            .iter()
            .map(|f| {
                let lhs = spectral_power(op, &spectral_power(op, f, b)?, a)?;
                let rhs = spectral_power(op, f, a + b)?;
                Ok(rel_l2(op, &lhs, &rhs))
            })
            .collect::<fsl_core::Result<_>>()?;
        out.push(
            CheckResult::new(S, "composition", "relative-difference", format!("a={a},b={b}"), &errs)
                .require(Requirement::AtMost { limit: COMPOSITION_TOL }),
        );
    }
    let one = SymbolConfig::Constant { value: 1.0 }.build()?;
    let errs: Vec<f64> = fields
        .iter()
        .map(|f| {
            let g = laplace_type_multiplier(op, &one, f);
            let half: Vec<f64> = op.project_off_kernel(f).iter().map(|v| 0.5 * v).collect();
            rel_l2(op, &g, &half)
        })
        .collect();
    out.push(
        CheckResult::new(S, "multiplier", "constant-one", "m=1", &errs)
            .require(Requirement::AtMost { limit: MULTIPLIER_TOL }),
    );
    let params: Vec<NormParams> = [(0.0, 2.0, 2.0), (0.5, 1.5, 2.0)]
        .iter()
        .enumerate()
        .map(|(i, &(a, p, q))| NormParams::new(a, p, q, ctx.weight(i).clone()))
        .collect();
    for s in [1.0, -1.0] {
        for np in &params {
            let r = fractional_boundedness_check(op, s, np, ctx.samples, ctx.seed)?;
            out.extend(checks_from_report(S, &r));
        }
    }
    let symbols = [
        SymbolConfig::Constant { value: 1.0 },
        SymbolConfig::Exp { a: 0.5 },
        SymbolConfig::Table {
            u: vec![0.0, 1.0, 2.0, 4.0],
            m: vec![1.0, -1.0, 0.5, 0.0],
        },
    ];
    for sym in &symbols {
        let mp = sym.build()?;
        for np in &params {
            let r = multiplier_boundedness_check(op, &mp, np, ctx.samples, ctx.seed)?;
            out.extend(checks_from_report(S, &r));
        }
    }
    Ok(out)
}
