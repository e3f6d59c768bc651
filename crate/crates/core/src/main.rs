//! Command-line interface: batch analysis and reproducible verification runs.
//!
//! Exit codes are stable API: 0 success, 1 verification failure, 2 usage or
//! validation error, 3 chain not irreducible, 4 monotone-perturbation
//! conditions violated.

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use pilift::chain::{structure, StructureReport};
use pilift::error::Error;
use pilift::io::{self, PerturbInput};
use pilift::perturbation::{apply_elementary, check_theorem_conditions, decompose, Violation};
use pilift::sensitivity::{
    coupled_derivative_direct, finite_difference_check, CouplingSpec,
};
use pilift::sigfig::{format_sig, round_sig};
use pilift::verify::{run_suite, z_score, TrialConfig};
use pilift::{
    expected_hitting_times, expected_return_time, require_ergodic, simulate_return_time,
    stationary_linear, stationary_power,
};

const HUMAN_DIGITS: u32 = 6;
const JSON_DIGITS: u32 = 12;

#[derive(Parser)]
#[command(name = "pilift", version, about = "Finite Markov chain analysis: stationary distributions, return times, and perturbation monotonicity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure report, stationary distribution, and (with --s0) hitting
    /// times plus the return-time identity residual.
    Analyze {
        /// Chain JSON file: {"labels": [...], "matrix": [[...], ...]}
        chain: String,
        /// Target state for hitting/return-time analysis.
        #[arg(long)]
        s0: Option<usize>,
        /// Emit a single JSON document instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Return-time sensitivities for mass moved from a donor column into a
    /// target column, with finite-difference cross-checks.
    Sensitivity {
        chain: String,
        /// Target state (column gaining mass).
        #[arg(long)]
        s0: usize,
        /// Donor state (column losing mass).
        #[arg(long)]
        donor: usize,
        /// Central-difference step.
        #[arg(long, default_value_t = 1e-6)]
        h: f64,
        #[arg(long)]
        json: bool,
    },
    /// Apply a perturbation file, or compare two chains: check the monotone
    /// conditions, decompose into elementary moves, and track pi(s0).
    Perturb {
        chain: String,
        /// Perturbation JSON ({"target": t, "donor": d, "c": [...]}) or a
        /// second chain JSON; detected by schema.
        second: String,
        /// Target state; defaults to the perturbation file's target.
        #[arg(long)]
        s0: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Run the randomized verification suite.
    Verify {
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value_t = 0.01)]
        min_entry: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        strictness: f64,
        #[arg(long)]
        json: bool,
    },
    /// Estimate the expected return time by trajectory simulation and
    /// compare against the exact value.
    Simulate {
        chain: String,
        #[arg(long)]
        s0: usize,
        /// Number of trajectories.
        #[arg(short = 'n', long, default_value_t = 100_000)]
        trajectories: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NotIrreducible { .. } | Error::NotAperiodic { .. } => 3,
        Error::ConditionsViolated { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Analyze { chain, s0, json } => cmd_analyze(&chain, s0, json),
        Command::Sensitivity { chain, s0, donor, h, json } => {
            cmd_sensitivity(&chain, s0, donor, h, json)
        }
        Command::Perturb { chain, second, s0, json } => cmd_perturb(&chain, &second, s0, json),
        Command::Verify { trials, n_min, n_max, min_entry, seed, strictness, json } => {
            cmd_verify(
                TrialConfig {
                    trials,
                    n_min,
                    n_max,
                    min_entry,
                    seed,
                    strictness_tolerance: strictness,
                },
                json,
            )
        }
        Command::Simulate { chain, s0, trajectories, seed, json } => {
            cmd_simulate(&chain, s0, trajectories, seed, json)
        }
    }
}

/// Round every float in a JSON tree to 12 significant digits and print it.
fn emit_json<T: Serialize>(doc: &T) {
    let mut value = serde_json::to_value(doc).expect("report serialization");
    round_tree(&mut value);
    println!("{}", serde_json::to_string(&value).expect("json formatting"));
}

fn round_tree(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                let rounded = round_sig(n.as_f64().unwrap(), JSON_DIGITS);
                if let Some(num) = serde_json::Number::from_f64(rounded) {
                    *value = serde_json::Value::Number(num);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_tree),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_tree),
        _ => {}
    }
}

fn fmt(x: f64) -> String {
    format_sig(x, HUMAN_DIGITS)
}

fn fmt_vec(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt(x)).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------- analyze

#[derive(Serialize)]
struct AnalyzeDoc {
    n: usize,
    labels: Option<Vec<String>>,
    structure: StructureReport,
    pi_linear: Option<Vec<f64>>,
    pi_power: Option<Vec<f64>>,
    s0: Option<usize>,
    hit: Option<Vec<f64>>,
    return_time: Option<f64>,
    pi_via_return_time: Option<f64>,
    kac_residual: Option<f64>,
}

fn cmd_analyze(chain_path: &str, s0: Option<usize>, json: bool) -> Result<ExitCode, Error> {
    let m = io::load_chain(chain_path)?;
    let report = structure(&m);
    let mut doc = AnalyzeDoc {
        n: m.n(),
        labels: m.labels().map(<[String]>::to_vec),
        structure: report.clone(),
        pi_linear: None,
        pi_power: None,
        s0,
        hit: None,
        return_time: None,
        pi_via_return_time: None,
        kac_residual: None,
    };

    if !report.irreducible {
        // surface what is known before refusing
        if json {
            emit_json(&doc);
        } else {
            print_analyze_human(&doc);
        }
        return Err(Error::NotIrreducible { classes: report.communicating_classes });
    }

    let pi = stationary_linear(&m)?;
    doc.pi_linear = Some(pi.probs().to_vec());
    doc.pi_power = match stationary_power(&m, 1e-12, 200_000) {
        Ok(p) => Some(p.probs().to_vec()),
        Err(Error::NotAperiodic { .. }) | Err(Error::NoConvergence { .. }) => None,
        Err(e) => return Err(e),
    };
    if let Some(s0) = s0 {
        m.check_state(s0)?;
        let profile = expected_hitting_times(&m, s0)?;
        doc.pi_via_return_time = Some(1.0 / profile.return_time);
        doc.kac_residual = Some((pi.get(s0) * profile.return_time - 1.0).abs());
        doc.return_time = Some(profile.return_time);
        doc.hit = Some(profile.hit);
    }

    if json {
        emit_json(&doc);
    } else {
        print_analyze_human(&doc);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_analyze_human(doc: &AnalyzeDoc) {
    println!("states          : {}", doc.n);
    if let Some(labels) = &doc.labels {
        println!("labels          : {}", labels.join(" "));
    }
    println!("irreducible     : {}", doc.structure.irreducible);
    println!("aperiodic       : {}", doc.structure.aperiodic);
    match doc.structure.period {
        Some(p) => println!("period          : {p}"),
        None => println!("period          : undefined (reducible)"),
    }
    let classes: Vec<String> = doc
        .structure
        .communicating_classes
        .iter()
        .map(|c| format!("{{{}}}", c.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")))
        .collect();
    println!("classes         : {}", classes.join(" "));
    if let Some(pi) = &doc.pi_linear {
        println!("pi (linear)     : {}", fmt_vec(pi));
    }
    match &doc.pi_power {
        Some(pi) => println!("pi (power)      : {}", fmt_vec(pi)),
        None if doc.pi_linear.is_some() => {
            println!("pi (power)      : not applicable (chain is periodic)")
        }
        None => {}
    }
    if let Some(s0) = doc.s0 {
        println!("s0              : {s0}");
    }
    if let Some(hit) = &doc.hit {
        println!("hit times to s0 : {}", fmt_vec(hit));
    }
    if let Some(mu) = doc.return_time {
        println!("return time     : {}", fmt(mu));
    }
    if let Some(p) = doc.pi_via_return_time {
        println!("pi via return   : {}", fmt(p));
    }
    if let Some(r) = doc.kac_residual {
        println!("kac residual    : {}", fmt(r));
    }
}

// ------------------------------------------------------------ sensitivity

#[derive(Serialize)]
struct SensitivityDoc {
    s0: usize,
    donor: usize,
    return_time: f64,
    d_mu: Vec<f64>,
    fd: Vec<Option<f64>>,
    d_pi: Vec<f64>,
}

fn cmd_sensitivity(
    chain_path: &str,
    s0: usize,
    donor: usize,
    h: f64,
    json: bool,
) -> Result<ExitCode, Error> {
    let m = io::load_chain(chain_path)?;
    let spec = CouplingSpec::new(s0, donor)?;
    spec.check_against(&m)?;
    let sens = coupled_derivative_direct(&m, spec)?;
    let mu = expected_return_time(&m, s0)?;
    let fd: Vec<Option<f64>> = (0..m.n())
        .map(|row| finite_difference_check(&m, spec, row, h).ok())
        .collect();
    let d_pi: Vec<f64> = sens.d_mu.iter().map(|&d| -d / (mu * mu)).collect();
    let doc = SensitivityDoc { s0, donor, return_time: mu, d_mu: sens.d_mu, fd, d_pi };

    if json {
        emit_json(&doc);
    } else {
        println!("s0 {} donor {} return time {}", doc.s0, doc.donor, fmt(doc.return_time));
        println!("row  d_mu/dc       fd            d_pi/dc");
        for i in 0..doc.d_mu.len() {
            let fd = match doc.fd[i] {
                Some(v) => fmt(v),
                None => "infeasible".to_string(),
            };
            println!("{:<4} {:<13} {:<13} {}", i, fmt(doc.d_mu[i]), fd, fmt(doc.d_pi[i]));
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------- perturb

#[derive(Serialize)]
struct PerturbStep {
    donor: usize,
    mass_moved: f64,
    /// pi(s0) after this step, when the intermediate chain is irreducible.
    pi_after: Option<f64>,
}

#[derive(Serialize)]
struct PerturbDoc {
    mode: &'static str,
    s0: usize,
    holds: bool,
    strict: bool,
    violations: Vec<Violation>,
    steps: Vec<PerturbStep>,
    pi_before: Option<f64>,
    pi_after: Option<f64>,
    gap: Option<f64>,
}

fn cmd_perturb(
    chain_path: &str,
    second_path: &str,
    s0: Option<usize>,
    json: bool,
) -> Result<ExitCode, Error> {
    let base = io::load_chain(chain_path)?;
    match io::load_perturb_input(second_path)? {
        PerturbInput::Perturbation(pert) => {
            if let Some(s0) = s0 {
                if s0 != pert.coupling.target {
                    return Err(Error::BadParameter(format!(
                        "--s0 {s0} conflicts with the perturbation file's target {}",
                        pert.coupling.target
                    )));
                }
            }
            let s0 = pert.coupling.target;
            let perturbed = apply_elementary(&base, &pert)?;
            require_ergodic(&base)?;
            require_ergodic(&perturbed)?;
            let before = stationary_linear(&base)?.get(s0);
            let after = stationary_linear(&perturbed)?.get(s0);
            let doc = PerturbDoc {
                mode: "perturbation",
                s0,
                holds: true,
                strict: pert.is_strict(1e-12),
                violations: Vec::new(),
                steps: vec![PerturbStep {
                    donor: pert.coupling.donor,
                    mass_moved: pert.c.iter().sum(),
                    pi_after: Some(after),
                }],
                pi_before: Some(before),
                pi_after: Some(after),
                gap: Some(after - before),
            };
            render_perturb(&doc, json);
            Ok(ExitCode::SUCCESS)
        }
        PerturbInput::Chain(prime) => {
            let s0 = s0.ok_or_else(|| {
                Error::BadParameter("--s0 is required when comparing two chains".into())
            })?;
            base.check_state(s0)?;
            let report = check_theorem_conditions(&base, &prime, s0)?;
            if !report.holds {
                let doc = PerturbDoc {
                    mode: "pair",
                    s0,
                    holds: false,
                    strict: report.strict,
                    violations: report.violations.clone(),
                    steps: Vec::new(),
                    pi_before: None,
                    pi_after: None,
                    gap: None,
                };
                render_perturb(&doc, json);
                return Ok(ExitCode::from(4));
            }
            require_ergodic(&base)?;
            require_ergodic(&prime)?;
            let before = stationary_linear(&base)?.get(s0);
            let after = stationary_linear(&prime)?.get(s0);
            let moves = decompose(&base, &prime, s0)?;
            let mut steps = Vec::new();
            let mut current = base.clone();
            for mv in &moves {
                current = apply_elementary(&current, mv)?;
                let pi_after = match stationary_linear(&current) {
                    Ok(pi) => Some(pi.get(s0)),
                    Err(Error::NotIrreducible { .. }) => None,
                    Err(e) => return Err(e),
                };
                steps.push(PerturbStep {
                    donor: mv.coupling.donor,
                    mass_moved: mv.c.iter().sum(),
                    pi_after,
                });
            }
            let doc = PerturbDoc {
                mode: "pair",
                s0,
                holds: true,
                strict: report.strict,
                violations: Vec::new(),
                steps,
                pi_before: Some(before),
                pi_after: Some(after),
                gap: Some(after - before),
            };
            render_perturb(&doc, json);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn render_perturb(doc: &PerturbDoc, json: bool) {
    if json {
        emit_json(doc);
        return;
    }
    println!("mode            : {}", doc.mode);
    println!("s0              : {}", doc.s0);
    println!("conditions hold : {}", doc.holds);
    println!("strict          : {}", doc.strict);
    for v in &doc.violations {
        println!(
            "violation       : row {} col {}: {} -> {}",
            v.row,
            v.col,
            fmt(v.p),
            fmt(v.p_prime)
        );
    }
    for (k, step) in doc.steps.iter().enumerate() {
        let pi = match step.pi_after {
            Some(p) => fmt(p),
            None => "undefined (intermediate chain reducible)".to_string(),
        };
        println!(
            "step {:<2}         : donor {} moved {} pi(s0) {}",
            k + 1,
            step.donor,
            fmt(step.mass_moved),
            pi
        );
    }
    if let (Some(b), Some(a), Some(g)) = (doc.pi_before, doc.pi_after, doc.gap) {
        println!("pi(s0) before   : {}", fmt(b));
        println!("pi(s0) after    : {}", fmt(a));
        println!("gap             : {}", fmt(g));
    }
}

// ----------------------------------------------------------------- verify

fn cmd_verify(config: TrialConfig, json: bool) -> Result<ExitCode, Error> {
    let report = run_suite(&config)?;
    if json {
        emit_json(&report);
    } else {
        println!("trials          : {}", report.trials_run);
        println!("pass            : {}", report.pass);
        match report.min_gap {
            Some(g) => println!("min gap         : {}", fmt(g)),
            None => println!("min gap         : undefined"),
        }
        for f in &report.failures {
            println!(
                "FAIL trial {} (n={}, s0={}, donor={}): {}: {}",
                f.trial, f.n, f.s0, f.donor, f.property, f.observed
            );
        }
    }
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

// --------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimulateDoc {
    s0: usize,
    trajectories: u64,
    seed: u64,
    mean: f64,
    std_error: f64,
    exact: f64,
    z: f64,
}

fn cmd_simulate(
    chain_path: &str,
    s0: usize,
    trajectories: u64,
    seed: u64,
    json: bool,
) -> Result<ExitCode, Error> {
    let m = io::load_chain(chain_path)?;
    let estimate = simulate_return_time(&m, s0, trajectories, seed)?;
    let exact = expected_return_time(&m, s0)?;
    let doc = SimulateDoc {
        s0,
        trajectories,
        seed,
        mean: estimate.mean,
        std_error: estimate.std_error,
        exact,
        z: z_score(&estimate, exact),
    };
    if json {
        emit_json(&doc);
    } else {
        println!("s0              : {}", doc.s0);
        println!("trajectories    : {}", doc.trajectories);
        println!("seed            : {}", doc.seed);
        println!("simulated mean  : {}", fmt(doc.mean));
        println!("std error       : {}", fmt(doc.std_error));
        println!("exact           : {}", fmt(doc.exact));
        println!("z-score         : {}", fmt(doc.z));
    }
    Ok(ExitCode::SUCCESS)
}
