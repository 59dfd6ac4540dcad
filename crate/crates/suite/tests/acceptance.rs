//! Acceptance suite: twelve criteria on the two reference kernels, one
//! PASS/FAIL line each. Runs without the libtest harness so every line is
//! printed and every criterion runs even after a failure.
//!
//! Invoked as `acceptance --canham <args>` it behaves exactly like the
//! `canham` binary, which lets the determinism check spawn real processes.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use canham_cli::config::{RunConfig, ToleranceProfile};
use canham_cli::report::{strip_volatile, Entry};
use canham_cli::suite::Suite;
use canham_core::modelspace::j_kernel;
use canham_core::{Complex64, Kernel, Resolution};

/// `∫_0^1 K = 0.9`, support `[0, 1]`.
fn bump() -> Kernel {
    Kernel::bump_with_mass(0.9, 1.0).unwrap()
}

/// `K(x) = 0.5 e^{−x}`.
fn exp() -> Kernel {
    Kernel::exponential(0.5, 1.0).unwrap()
}

fn config(profile: ToleranceProfile) -> RunConfig {
    RunConfig {
        tol_profile: profile,
        ..RunConfig::default()
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn from_entries(entries: &[Entry]) -> Self {
        let failed: Vec<String> = entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| {
                let order = e.observed_order.map(|p| format!(", order {p:.2}")).unwrap_or_default();
                format!("{}.{} {:.2e} > {:.0e}{order}", e.identity, e.name, e.residual, e.tolerance)
            })
            .collect();
        let worst = entries
            .iter()
            .map(|e| e.residual / e.tolerance)
            .fold(0.0, f64::max);
        if failed.is_empty() {
            Outcome {
                pass: !entries.is_empty(),
                detail: format!("{} checks, worst residual/tolerance {worst:.2e}", entries.len()),
            }
        } else {
            Outcome {
                pass: false,
                detail: format!("{} of {} checks fail: {}", failed.len(), entries.len(), failed.join("; ")),
            }
        }
    }

    fn and(self, other: Outcome) -> Outcome {
        Outcome {
            pass: self.pass && other.pass,
            detail: format!("{}; {}", self.detail, other.detail),
        }
    }

    fn check(pass: bool, detail: String) -> Outcome {
        Outcome { pass, detail }
    }
}

fn run(spec: &Kernel, profile: ToleranceProfile, identity: &str) -> Vec<Entry> {
    let cfg = config(profile);
    Suite::new(spec, &cfg).unwrap().run(identity).unwrap()
}

fn bump_run(identity: &str) -> Vec<Entry> {
    run(&bump(), ToleranceProfile::Default, identity)
}

fn exp_run(identity: &str) -> Vec<Entry> {
    run(&exp(), ToleranceProfile::Kinked, identity)
}

fn both(identity: &str) -> Outcome {
    let mut all = bump_run(identity);
    all.extend(exp_run(identity));
    Outcome::from_entries(&all)
}

fn determinant_identity() -> Outcome {
    let start = Instant::now();
    let out = both("determinant_identity");
    let elapsed = start.elapsed();
    out.and(Outcome::check(
        elapsed < Duration::from_secs(10),
        format!("runtime {:.2} s (budget 10 s)", elapsed.as_secs_f64()),
    ))
}

fn mu_route() -> Outcome {
    Outcome::from_entries(&bump_run("mu_route"))
}

fn closed_forms() -> Outcome {
    both("closed_forms")
}

fn derivative_relations() -> Outcome {
    Outcome::from_entries(&bump_run("derivative_relations"))
}

fn canonical_ode() -> Outcome {
    Outcome::from_entries(&bump_run("canonical_ode"))
}

fn theta_consistency() -> Outcome {
    both("theta_consistency")
}

fn spectral_facts() -> Outcome {
    let exp_entries = exp_run("spectral_facts");
    let norm = exp_entries
        .iter()
        .find(|e| e.name == "operator_norm")
        .map(|e| e.residual)
        .unwrap_or(f64::INFINITY);
    let mut all = bump_run("spectral_facts");
    all.extend(exp_entries);
    Outcome::from_entries(&all).and(Outcome::check(
        norm <= 0.51,
        format!("exponential operator norm {norm:.4} (bound 0.51)"),
    ))
}

fn boundary_identity() -> Outcome {
    both("boundary_identity")
}

fn reproducing_kernel() -> Outcome {
    let z = Complex64::new(0.0, 2.0);
    let j = j_kernel(&exp(), 0.0, z, z, &Resolution::default()).unwrap().j_hat;
    let exact = 35.0 / (288.0 * std::f64::consts::PI);
    let err = (j - Complex64::new(exact, 0.0)).norm();
    Outcome::from_entries(&exp_run("reproducing_kernel")).and(Outcome::check(
        err <= 1e-7,
        format!("j(2i, 2i) at t = 0 is {:.10} vs 35/(288 pi) = {exact:.10}, error {err:.1e}", j.re),
    ))
}

fn energy_identity() -> Outcome {
    Outcome::from_entries(&bump_run("energy_identity"))
}

fn pde_characterization() -> Outcome {
    Outcome::from_entries(&bump_run("pde_characterization"))
}

const CANHAM_FLAG: &str = "--canham";

/// Runs `canham verify all` twice, each in a fresh process, on one config
/// and compares the reports with the timestamp and timings removed.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let kernel = dir.path().join("bump.json");
    std::fs::write(&kernel, r#"{"family": "bump", "mass": 0.9, "width": 1.0}"#).unwrap();
    let cfg_path = dir.path().join("config.json");
    let cfg = RunConfig {
        kernel: Some("bump.json".into()),
        tol_profile: ToleranceProfile::Default,
        ..RunConfig::default()
    };
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    let mut reports = Vec::new();
    for k in 0..2 {
        let report = dir.path().join(format!("report{k}.json"));
        let status = Command::new(std::env::current_exe().unwrap())
            .args([CANHAM_FLAG, "verify", "all", "--config"])
            .arg(&cfg_path)
            .arg("--report")
            .arg(&report)
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        let code = status.code().unwrap_or(-1);
        if !matches!(code, 0 | 1) {
            return Outcome::check(false, format!("run {k} exited with {code}"));
        }
        let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
        strip_volatile(&mut v);
        reports.push(serde_json::to_string_pretty(&v).unwrap());
    }
    Outcome::check(
        reports[0] == reports[1],
        format!("{} report bytes after removing timestamp and timings", reports[0].len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    if args.get(1).is_some_and(|a| a == CANHAM_FLAG) {
        return canham_cli::main_with_args(std::iter::once("canham".into()).chain(args[2..].iter().cloned()));
    }
    let criteria: [Criterion; 12] = [
        ("determinant identity", determinant_identity),
        ("mu route", mu_route),
        ("closed forms for t <= 0", closed_forms),
        ("derivative relations", derivative_relations),
        ("canonical ODE", canonical_ode),
        ("theta consistency", theta_consistency),
        ("spectral facts", spectral_facts),
        ("boundary identity", boundary_identity),
        ("reproducing kernel", reproducing_kernel),
        ("energy identity", energy_identity),
        ("PDE characterizations", pde_characterization),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        if !out.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<24} {} ({:.1} s) {}",
            k + 1,
            name,
            if out.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria pass in {:.1} s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
