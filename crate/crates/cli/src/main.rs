use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use fsl_cli::baseline::BASELINE_ENV;
use fsl_cli::config::{RunConfig, Source};
use fsl_cli::error::{CliError, Result};
use fsl_cli::io::{read_field_csv, read_json, write_field_csv, write_json};
use fsl_cli::{emit_plot_data, run_suite, BaselineStore, Report, RunOptions};
use fsl_core::apps::{default_m_order, fractional_power, laplace_type_multiplier, SymbolConfig};
use fsl_core::atoms::{
    atomic_decompose, coefficient_norms, reconstruct, tree_for_grid, DecompositionParams, Truncation,
};
use fsl_core::calculus::{make_compact_phi, make_partition_of_unity, ScaleGrid};
use fsl_core::operator::{OperatorConfig, SelfAdjointOperator};
use fsl_core::space::{build_dyadic_cubes, estimate_doubling, DoublingReport, SpaceConfig};
use fsl_core::spaces::{Flavor, Functional, NormEngine, NormParams};
use fsl_core::weights::{Weight, WeightConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fsl", version, about = "Weighted Besov and Triebel-Lizorkin spaces on finite metric measure spaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct FixtureArgs {
    /// Space JSON; the periodic 64-point line when omitted.
    #[arg(long)]
    space: Option<PathBuf>,
    /// Operator JSON; the unit-speed grid Laplacian when omitted.
    #[arg(long)]
    operator: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Line,
    Square,
}

#[derive(Clone, Copy, ValueEnum)]
enum ApplyOp {
    Fractional,
    Multiplier,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a space and operator and print a summary.
    Build {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one norm of a field.
    Norm {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, value_parser = parse_flavor, default_value = "dyadic")]
        flavor: Flavor,
        #[arg(long, value_parser = parse_functional, default_value = "triebel")]
        functional: Functional,
        /// Peetre / square-function exponent.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
    },
    /// Run verification suites and gate them against recorded baselines.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in fixture used when no config is given.
        #[arg(long, value_enum, default_value = "line")]
        fixture: FixtureName,
        /// Suite or equivalence-check name; repeatable.
        #[arg(long = "suite", value_delimiter = ',')]
        suites: Vec<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for CSV plot data.
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long)]
        baseline_dir: Option<PathBuf>,
        /// Record the observed bands as new baselines.
        #[arg(long)]
        rebaseline: bool,
    },
    /// Constructive atomic decomposition of a field.
    Decompose {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long = "M")]
        m_order: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long, value_parser = parse_truncation, default_value = "none")]
        truncation: Truncation,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Store the dense `b` vector of every atom.
        #[arg(long)]
        dense: bool,
    },
    /// Apply a fractional power or a Laplace-type multiplier.
    Apply {
        #[command(flatten)]
        fixture: FixtureArgs,
        #[arg(long = "op", value_enum)]
        op: ApplyOp,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<f64>,
        #[arg(long)]
        symbol: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a report and optionally write its plot data.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        plots: Option<PathBuf>,
    },
}

fn parse_kebab<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_flavor(s: &str) -> std::result::Result<Flavor, String> {
    parse_kebab(s)
}

fn parse_functional(s: &str) -> std::result::Result<Functional, String> {
    parse_kebab(s)
}

fn parse_truncation(s: &str) -> std::result::Result<Truncation, String> {
    parse_kebab(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_op(args: &FixtureArgs) -> Result<SelfAdjointOperator> {
    let space: SpaceConfig = match &args.space {
        Some(p) => read_json(p)?,
        None => match RunConfig::line().space {
            Source::Inline(s) => s,
            Source::Path(_) => unreachable!("built-in fixture is inline"),
        },
    };
    let op_cfg: OperatorConfig = match &args.operator {
        Some(p) => read_json(p)?,
        None => OperatorConfig {
            kind: fsl_core::operator::LaplacianKind::Grid,
            normalization: fsl_core::operator::Normalization::UnitSpeed,
        },
    };
    Ok(op_cfg.build(Arc::new(space.build()?))?)
}

fn load_weight(path: Option<&Path>, op: &SelfAdjointOperator) -> Result<Weight> {
    match path {
        Some(p) => {
            let cfg: WeightConfig = read_json(p)?;
            Ok(cfg.build(op.space())?)
        }
        None => Ok(Weight::unit(op.space())),
    }
}

fn load_field(path: &Path, op: &SelfAdjointOperator) -> Result<Vec<f64>> {
    let f = read_field_csv(path)?;
    if f.len() != op.len() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            msg: format!("expected {} values, found {}", op.len(), f.len()),
        });
    }
    Ok(f)
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct BuildSummary {
    points: usize,
    diameter: f64,
    min_distance: f64,
    quasi_const: f64,
    kernel_dim: usize,
    lambda_min_positive: Option<f64>,
    lambda_max: f64,
    doubling: DoublingReport,
    cube_levels: Vec<(i32, usize)>,
}

#[derive(Serialize)]
struct NormOutput {
    functional: Functional,
    flavor: Flavor,
    alpha: f64,
    p: String,
    q: String,
    lambda: f64,
    value: f64,
}

#[derive(Serialize)]
struct AtomRecord {
    level: i32,
    cube_id: usize,
    #[serde(rename = "s_Q")]
    s_q: f64,
    support_eps: Vec<f64>,
    size_const: Vec<f64>,
    cancellation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct DecompositionOutput {
    m_order: u32,
    p: f64,
    alpha: f64,
    q: f64,
    truncation: Truncation,
    norm_const: f64,
    residual: f64,
    coefficient_norms: CoefficientNorms,
    skipped: usize,
    atoms: Vec<AtomRecord>,
}

#[derive(Serialize)]
struct CoefficientNorms {
    besov: f64,
    triebel: f64,
}

fn exp_str(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

fn run(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Build { fixture, out } => {
            let op = load_op(&fixture)?;
            let s = op.space();
            let fine = (1.0 / s.min_positive_distance()).log2().ceil() as i32;
            let tree = build_dyadic_cubes(s, 0, fine)?;
            let summary = BuildSummary {
                points: op.len(),
                diameter: s.diameter(),
                min_distance: s.min_positive_distance(),
                quasi_const: s.quasi_const(),
                kernel_dim: op.kernel_dim(),
                lambda_min_positive: op.lambda_min_positive(),
                lambda_max: op.lambda_max(),
                doubling: estimate_doubling(s),
                cube_levels: tree.levels.iter().map(|l| (l.nu, l.cubes.len())).collect(),
            };
            emit(out.as_deref(), &summary)?;
            Ok(0)
        }
        Cmd::Norm {
            fixture,
            alpha,
            p,
            q,
            flavor,
            functional,
            lambda,
            weight,
            input,
        } => {
            let op = load_op(&fixture)?;
            let w = load_weight(weight.as_deref(), &op)?;
            let f = load_field(&input, &op)?;
            let mut params = NormParams::new(alpha, p, q, w).with_flavor(flavor);
            if let Some(l) = lambda {
                params = params.with_lambda(l);
            }
            let engine = NormEngine::new(&op, params, functional)?;
            let value = engine.norm(&f)?.value;
            emit(
                None,
                &NormOutput {
                    functional,
                    flavor,
                    alpha,
                    p: exp_str(p),
                    q: exp_str(q),
                    lambda: engine.lambda_exp(),
                    value,
                },
            )?;
            Ok(0)
        }
        Cmd::Verify {
            config,
            fixture,
            suites,
            samples,
            seed,
            report,
            plots,
            baseline_dir,
            rebaseline,
        } => {
            let (mut cfg, base) = match &config {
                Some(p) => RunConfig::load(p)?,
                None => (
                    match fixture {
                        FixtureName::Line => RunConfig::line(),
                        FixtureName::Square => RunConfig::square(),
                    },
                    PathBuf::new(),
                ),
            };
            if !suites.is_empty() {
                cfg.suites = suites;
            }
            if let Some(n) = samples {
                cfg.samples = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let resolved = cfg.resolve(&base)?;
            let dir = baseline_dir
                .or_else(|| std::env::var_os(BASELINE_ENV).map(PathBuf::from))
                .or_else(|| cfg.baseline_dir.as_ref().map(|d| base.join(d)))
                .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/baselines")));
            let mut store = BaselineStore::open(&dir, &resolved.name)?;
            let outcome = run_suite(&resolved, &mut store, RunOptions { rebaseline })?;
            for t in &outcome.timings {
                let pass = outcome
                    .report
                    .suites
                    .iter()
                    .find(|s| s.suite == t.suite)
                    .is_some_and(|s| s.pass);
                println!(
                    "{:<5} {:<13} {:>8.2}s",
                    if pass { "PASS" } else { "FAIL" },
                    t.suite,
                    t.seconds
                );
            }
            for c in outcome.report.failures() {
                println!("  failed {}: {}", c.key(), c.notes.join("; "));
            }
            let report_path = report.or_else(|| {
                cfg.out_dir
                    .as_ref()
                    .map(|d| base.join(d).join(format!("report-{}.json", resolved.name)))
            });
            if let Some(p) = &report_path {
                write_json(p, &outcome.report)?;
            }
            if let Some(d) = &plots {
                emit_plot_data(&outcome.report, d)?;
            }
            if rebaseline {
                println!("baselines: {}", store.path().display());
            }
            Ok(if outcome.report.pass { 0 } else { 1 })
        }
        Cmd::Decompose {
            fixture,
            m_order,
            p,
            alpha,
            q,
            weight,
            truncation,
            input,
            out,
            dense,
        } => {
            let op = load_op(&fixture)?;
            let w = load_weight(weight.as_deref(), &op)?;
            let f = load_field(&input, &op)?;
            let grid = ScaleGrid::for_operator(&op, fsl_cli::suites::FINE_POINTS_PER_OCTAVE)?;
            let tree = tree_for_grid(op.space(), &grid)?;
            let params = DecompositionParams {
                m_order,
                p,
                weight: w.clone(),
                pou: make_partition_of_unity(),
                phi: make_compact_phi()?,
                grid,
                truncation,
            };
            let d = atomic_decompose(&op, &f, params, &tree)?;
            let residual = reconstruct(&op, &d).1;
            let (besov, triebel) = coefficient_norms(&d, alpha, p, q, &w);
            let output = DecompositionOutput {
                m_order,
                p,
                alpha,
                q,
                truncation,
                norm_const: d.norm_const,
                residual,
                coefficient_norms: CoefficientNorms { besov, triebel },
                skipped: d.skipped.len(),
                atoms: d
                    .atoms
                    .iter()
                    .map(|a| AtomRecord {
                        level: a.level,
                        cube_id: a.cube_id,
                        s_q: a.s_coeff,
                        support_eps: a.support_eps.clone(),
                        size_const: a.size_const.clone(),
                        cancellation: a.cancellation,
                        b: dense.then(|| a.b.clone()),
                    })
                    .collect(),
            };
            write_json(&out, &output)?;
            println!("{} atoms, residual {residual:e}", output.atoms.len());
            Ok(0)
        }
        Cmd::Apply {
            fixture,
            op: kind,
            s,
            symbol,
            input,
            out,
        } => {
            let op = load_op(&fixture)?;
            let f = load_field(&input, &op)?;
            let g = match kind {
                ApplyOp::Fractional => {
                    let s = s.ok_or_else(|| CliError::Config("--op fractional needs --s".into()))?;
                    fractional_power(&op, &f, s, default_m_order(s))?
                }
                ApplyOp::Multiplier => {
                    let path = symbol
                        .ok_or_else(|| CliError::Config("--op multiplier needs --symbol".into()))?;
                    let sym: SymbolConfig = read_json(&path)?;
                    laplace_type_multiplier(&op, &sym.build()?, &f)
                }
            };
            match out {
                Some(p) => write_field_csv(&p, &g)?,
                None => {
                    println!("value");
                    for v in g {
                        println!("{v}");
                    }
                }
            }
            Ok(0)
        }
        Cmd::Report { input, plots } => {
            let report: Report = read_json(&input)?;
            for s in &report.suites {
                println!("{:<5} {}", if s.pass { "PASS" } else { "FAIL" }, s.suite);
            }
            for c in report.failures() {
                println!("  failed {}: {}", c.key(), c.notes.join("; "));
            }
            if let Some(d) = &plots {
                for p in emit_plot_data(&report, d)? {
                    println!("wrote {}", p.display());
                }
            }
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}
