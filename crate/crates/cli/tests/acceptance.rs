//! Acceptance criteria 1–9 on the line and square fixtures, gated against
//! the checked-in baselines. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use fsl_cli::report::{CheckResult, Report};
use fsl_cli::suites::{run_suite, RunOptions};
use fsl_cli::{BaselineStore, RunConfig, BASELINE_ENV};

const SAMPLES: usize = 100;
const SEED: u64 = 7;

/// Wall-clock limits in seconds.
const LIMIT_TELESCOPING: f64 = 1.0;
const LIMIT_CALDERON: f64 = 10.0;
const LIMIT_KERNEL: f64 = 60.0;
const LIMIT_EQUIVALENCES: f64 = 300.0;
const LIMIT_IDENTIFICATIONS: f64 = 300.0;
const LIMIT_ATOMS: f64 = 120.0;
const LIMIT_APPS: f64 = 60.0;
const LIMIT_WEIGHTS: f64 = 120.0;

struct Run {
    report: Report,
    seconds: f64,
}

fn baseline_dir() -> PathBuf {
    std::env::var_os(BASELINE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines"))
}

fn run(cfg: &RunConfig, suites: &[&str]) -> Run {
    let mut cfg = cfg.clone();
    cfg.suites = suites.iter().map(|s| s.to_string()).collect();
    cfg.samples = SAMPLES;
    cfg.seed = SEED;
    let resolved = cfg.resolve(Path::new("")).expect("valid config");
    let mut store = BaselineStore::open(&baseline_dir(), &resolved.name).expect("baseline store");
    let start = Instant::now();
    let out = run_suite(&resolved, &mut store, RunOptions::default()).expect("suite runs");
    Run {
        report: out.report,
        seconds: start.elapsed().as_secs_f64(),
    }
}

struct Verdict {
    failures: Vec<String>,
    seconds: f64,
}

impl Verdict {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            seconds: 0.0,
        }
    }

    /// Every gating check selected by `pick` must pass; at least one must exist.
    fn checks(&mut self, fixture: &str, run: &Run, pick: impl Fn(&CheckResult) -> bool) {
        let picked: Vec<&CheckResult> = run.report.checks().filter(|c| c.gating && pick(c)).collect();
        if picked.is_empty() {
            self.failures.push(format!("{fixture}: no checks selected"));
        }
        for c in picked.into_iter().filter(|c| !c.pass) {
            self.failures
                .push(format!("{fixture}: {} ({})", c.key(), c.notes.join("; ")));
        }
    }

    fn time(&mut self, fixture: &str, seconds: f64, limit: f64) {
        self.seconds += seconds;
        if seconds > limit {
            self.failures
                .push(format!("{fixture}: runtime {seconds:.1}s exceeds {limit}s"));
        }
    }

    fn print(&self, n: u32, name: &str) -> bool {
        let ok = self.failures.is_empty();
        println!(
            "criterion {n} {} {name} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            self.seconds
        );
        for f in &self.failures {
            println!("    {f}");
        }
        ok
    }
}

fn strip_timestamp(r: &Report) -> String {
    let mut r = r.clone();
    r.generated_at.clear();
    serde_json::to_string_pretty(&r).unwrap()
}

fn main() -> ExitCode {
    let fixtures = [RunConfig::line(), RunConfig::square()];
    let mut c = (0..10).map(|_| Verdict::new()).collect::<Vec<_>>();
    for cfg in &fixtures {
        let name = cfg.name.as_str();

        let start = Instant::now();
        let cal = run(cfg, &["calderon"]);
        let tele_secs = start.elapsed().as_secs_f64();
        c[1].checks(name, &cal, |k| k.check == "telescoping");
        // the whole suite stands in as an upper bound for the telescoping time
        c[1].time(name, tele_secs, LIMIT_TELESCOPING);
        c[2].checks(name, &cal, |k| k.check == "reconstruction");
        c[2].time(name, cal.seconds, LIMIT_CALDERON);

        let ker = run(cfg, &["kernel"]);
        c[3].checks(name, &ker, |_| true);
        c[3].time(name, ker.seconds, LIMIT_KERNEL);

        let eq = run(cfg, &["equivalences"]);
        c[4].checks(name, &eq, |_| true);
        c[4].time(name, eq.seconds, LIMIT_EQUIVALENCES);

        let norms = run(cfg, &["norms"]);
        c[4].checks(name, &norms, |k| {
            k.check == "lp-identity" && k.params == "p=2,w=unit"
        });
        let parseval_bounded = norms
            .report
            .checks()
            .filter(|k| k.check == "lp-identity" && k.params == "p=2,w=unit")
            .all(|k| k.requirements.iter().any(|r| matches!(r, fsl_cli::report::Requirement::Within { .. })));
        if !parseval_bounded {
            c[4].failures.push(format!("{name}: lp-identity lacks the Parseval band"));
        }
        c[5].checks(name, &norms, |_| true);
        c[5].time(name, norms.seconds, LIMIT_IDENTIFICATIONS);

        let atoms = run(cfg, &["atoms"]);
        c[6].checks(name, &atoms, |_| true);
        c[6].time(name, atoms.seconds, LIMIT_ATOMS);

        let apps = run(cfg, &["apps"]);
        c[7].checks(name, &apps, |_| true);
        c[7].time(name, apps.seconds, LIMIT_APPS);

        let weights = run(cfg, &["weights"]);
        c[8].checks(name, &weights, |_| true);
        c[8].time(name, weights.seconds, LIMIT_WEIGHTS);
    }

    let all = ["space", "weights", "kernel", "calderon", "norms", "equivalences", "atoms", "apps"];
    let first = run(&fixtures[0], &all);
    let second = run(&fixtures[0], &all);
    c[9].seconds = first.seconds + second.seconds;
    if strip_timestamp(&first.report) != strip_timestamp(&second.report) {
        c[9].failures.push("line64: reports differ beyond the timestamp".into());
    }

    let names = [
        "",
        "partition-of-unity telescoping",
        "Calderon reconstruction",
        "kernel bounds",
        "norm-equivalence suites",
        "identifications",
        "atomic decomposition",
        "applications",
        "weighted infrastructure",
        "determinism",
    ];
    let mut ok = true;
    for n in 1..=9 {
        ok &= c[n].print(n as u32, names[n]);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
