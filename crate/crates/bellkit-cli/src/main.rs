//! Command-line front end: ingest coincidence or family CSV data, decide
//! compatibility, compute quasi-probability decompositions, predict singlet
//! statistics, run simulations from config files, and analyze data for
//! deviations. Every subcommand writes one structured JSON report.
//!
//! Exit codes: 0 success, 1 findings when `--fail-on-findings` asked for
//! them, 2 input or usage errors.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use bellkit::analysis::InequalityKind;
use bellkit::config::{parse_legget_config, parse_sim_config, SimJob};
use bellkit::inequality::InequalityReport;
use bellkit::types::Feasibility;
use bellkit::{
    anomaly_analysis, bell_covariance, check_compatibility, chsh, evaluate_cross_context,
    leggett_joint_average, leggett_two_step, model_from_joint, post_select, run_with_drift,
    sample_context_in_run, sample_from_table, sample_threshold, singlet_correlation,
    singlet_family, solve_quasi, validate_family, wigner, AngleSet, BigRational,
    CoincidenceRecord, EventStream, MarginalFamily, Pairing, Scalar, SolverOptions,
};
use report::{rational_value, Report};

#[derive(Parser)]
#[command(
    name = "bellkit",
    version,
    about = "Pairwise-marginal compatibility, Bell-type inequalities, and contextual simulation"
)]
struct Cli {
    /// Exit with code 1 when the analysis finds what it tests for
    /// (infeasibility, violations, anomalies).
    #[arg(long, global = true)]
    fail_on_findings: bool,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether one joint distribution reproduces a family of
    /// pairwise tables.
    Check(CheckArgs),
    /// Minimal-negativity signed joint reproducing a family.
    Quasi(QuasiArgs),
    /// Singlet predictions and inequality reports for a set of angles.
    Predict(PredictArgs),
    /// Run a simulation described by a TOML config.
    Simulate(SimulateArgs),
    /// Compare coincidence data against the singlet predictions.
    Analyze(AnalyzeArgs),
    /// Two-step averaging consistency check for a conditioned
    /// hidden-variable model.
    Legget(LeggetArgs),
    /// Assemble an inequality from records measured in different contexts.
    Cross(CrossArgs),
}

#[derive(Args, Clone, Copy)]
struct ModeArgs {
    /// Force exact rational arithmetic.
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Force floating-point arithmetic (tolerance 1e-9).
    #[arg(long)]
    float: bool,
}

impl ModeArgs {
    /// Exact mode by default up to 12 variables, float above.
    fn exact_for(&self, n: usize) -> bool {
        if self.exact {
            true
        } else if self.float {
            false
        } else {
            n <= 12
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Family CSV with header `var_i,var_j,p_pp,p_pm,p_mp,p_mm`.
    #[arg(long)]
    family: PathBuf,
    #[command(flatten)]
    mode: ModeArgs,
}

#[derive(Args)]
struct QuasiArgs {
    #[arg(long)]
    family: PathBuf,
    #[command(flatten)]
    mode: ModeArgs,
    /// Negativity above this counts as a finding.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
}

#[derive(Args)]
struct PredictArgs {
    /// Analyzer angles in degrees, comma separated (2 to 4).
    #[arg(long, value_delimiter = ',', required = true)]
    angles: Vec<f64>,
    /// With four angles, read them as (a, a', b, b') and only build the
    /// cross-station pairs.
    #[arg(long)]
    chsh_pairs: bool,
    #[command(flatten)]
    mode: ModeArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation TOML config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the trial count from the config.
    #[arg(long)]
    trials: Option<u64>,
    /// Also write post-selected coincidence records as CSV.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Coincidence CSV with header `theta1_deg,theta2_deg,n_pp,n_pm,n_mp,n_mm`.
    #[arg(long)]
    data: PathBuf,
    /// Extra linear combination of cell deviations, four comma-separated
    /// coefficients over (pp, pm, mp, mm); repeatable.
    #[arg(long = "combo")]
    combos: Vec<String>,
    /// Flag deviations beyond this many standard errors.
    #[arg(long, default_value_t = 5.0)]
    sigma_k: f64,
}

#[derive(Args)]
struct LeggetArgs {
    /// Model TOML config.
    #[arg(long)]
    config: PathBuf,
    /// Two-step vs joint average disagreement above this is a finding.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
}

#[derive(Args)]
struct CrossArgs {
    #[arg(long)]
    data: PathBuf,
    /// One of: bell, wigner, chsh.
    #[arg(long)]
    inequality: String,
    /// Role angles in degrees: a,b,c for bell/wigner, a,a',b,b' for chsh.
    #[arg(long, value_delimiter = ',', required = true)]
    angles: Vec<f64>,
    /// Statistical violation threshold in standard errors.
    #[arg(long, default_value_t = 5.0)]
    sigma_k: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(found) => {
            if found && cli.fail_on_findings {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Runs the subcommand; `Ok(true)` means the analysis found what it tests
/// for.
fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Check(args) => cmd_check(cli, args),
        Command::Quasi(args) => cmd_quasi(cli, args),
        Command::Predict(args) => cmd_predict(cli, args),
        Command::Simulate(args) => cmd_simulate(cli, args),
        Command::Analyze(args) => cmd_analyze(cli, args),
        Command::Legget(args) => cmd_legget(cli, args),
        Command::Cross(args) => cmd_cross(cli, args),
    }
}

fn family_summary<T: Scalar>(family: &MarginalFamily<T>) -> Value {
    json!({
        "variables": family.n,
        "tables": family.tables.iter().map(|t| json!({
            "pair": [t.pair.0.index, t.pair.1.index],
            "cells": t.cells.iter().map(Scalar::to_f64).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn reject_invalid<T: Scalar>(family: &MarginalFamily<T>) -> Result<()> {
    let violations = validate_family(family);
    if violations.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(anyhow!("invalid family:\n  {}", lines.join("\n  ")))
}

fn status_text(status: Feasibility) -> &'static str {
    match status {
        Feasibility::Feasible => "FEASIBLE",
        Feasibility::Infeasible => "INFEASIBLE",
    }
}

fn cmd_check(cli: &Cli, args: &CheckArgs) -> Result<bool> {
    let options = SolverOptions::default();
    let float_family: MarginalFamily<f64> = bellkit::io::parse_family_csv(&args.family)?;
    reject_invalid(&float_family)?;
    let exact = args.mode.exact_for(float_family.n);

    let (status, results) = if exact {
        let family: MarginalFamily<BigRational> = bellkit::io::parse_family_csv(&args.family)?;
        reject_invalid(&family)?;
        let verdict = check_compatibility(&family, &options)?;
        let gap = verdict
            .certificate
            .as_ref()
            .and_then(|c| bellkit::certificate_gap(&family, c))
            .map(|g| rational_value(&g));
        let witness =
            verdict.witness.as_ref().map(|w| w.weights.iter().map(rational_value).collect::<Vec<_>>());
        (
            verdict.status,
            json!({
                "status": status_text(verdict.status),
                "witness": witness,
                "certificate_gap": gap,
            }),
        )
    } else {
        let verdict = check_compatibility(&float_family, &options)?;
        let gap = verdict
            .certificate
            .as_ref()
            .and_then(|c| bellkit::certificate_gap(&float_family, c));
        (
            verdict.status,
            json!({
                "status": status_text(verdict.status),
                "witness": verdict.witness.as_ref().map(|w| w.weights.clone()),
                "certificate_gap": gap,
            }),
        )
    };

    let mode = if exact { "exact" } else { "float" };
    let summary = format!(
        "check: {} variables, {} tables -> {} ({mode} mode)",
        float_family.n,
        float_family.tables.len(),
        status_text(status)
    );
    let inputs = json!({
        "family_file": args.family.display().to_string(),
        "family": family_summary(&float_family),
        "mode": mode,
    });
    Report::new("check", inputs, summary, results).emit(cli.out.as_deref())?;
    Ok(status == Feasibility::Infeasible)
}

fn cmd_quasi(cli: &Cli, args: &QuasiArgs) -> Result<bool> {
    let options = SolverOptions::default();
    let float_family: MarginalFamily<f64> = bellkit::io::parse_family_csv(&args.family)?;
    reject_invalid(&float_family)?;
    let exact = args.mode.exact_for(float_family.n);

    let (negativity, results) = if exact {
        let family: MarginalFamily<BigRational> = bellkit::io::parse_family_csv(&args.family)?;
        let solution = solve_quasi(&family, &options)?;
        (
            Scalar::to_f64(&solution.negativity),
            json!({
                "negativity": rational_value(&solution.negativity),
                "weights": solution.joint.weights.iter().map(rational_value).collect::<Vec<_>>(),
            }),
        )
    } else {
        let solution = solve_quasi(&float_family, &options)?;
        (
            solution.negativity,
            json!({
                "negativity": solution.negativity,
                "weights": solution.joint.weights,
            }),
        )
    };

    let mode = if exact { "exact" } else { "float" };
    let summary = format!(
        "quasi: minimal negativity {negativity} ({mode} mode); zero means a joint distribution exists"
    );
    let inputs = json!({
        "family_file": args.family.display().to_string(),
        "family": family_summary(&float_family),
        "mode": mode,
        "tolerance": args.tolerance,
    });
    Report::new("quasi", inputs, summary, results).emit(cli.out.as_deref())?;
    Ok(negativity > args.tolerance)
}

fn inequality_json(report: &InequalityReport) -> Value {
    serde_json::to_value(report).expect("report serializes")
}

fn cmd_predict(cli: &Cli, args: &PredictArgs) -> Result<bool> {
    let angles = AngleSet::from_degrees(&args.angles)?;
    let pairing = if args.chsh_pairs { Pairing::ChshCross } else { Pairing::AllPairs };
    let family = singlet_family(&angles, pairing)?;
    let rad = angles.angles();

    let mut tables = Vec::new();
    for t in &family.tables {
        let (i, j) = (t.pair.0.index, t.pair.1.index);
        tables.push(json!({
            "pair": [i, j],
            "theta_deg": [rad[i].to_degrees(), rad[j].to_degrees()],
            "cells": t.cells,
            "correlation": singlet_correlation(rad[i], rad[j]),
        }));
    }

    let table = |i: usize, j: usize| {
        family.tables.iter().find(|t| (t.pair.0.index, t.pair.1.index) == (i, j))
    };

    let mut inequalities = Vec::new();
    let mut any_violated = false;
    if rad.len() == 3 {
        let (a, b, c) = (rad[0], rad[1], rad[2]);
        let bell = bell_covariance(
            singlet_correlation(a, b),
            singlet_correlation(c, b),
            singlet_correlation(a, c),
        )?;
        use bellkit::types::Sign::{Minus, Plus};
        let wig = wigner(
            *table(0, 1).expect("pair (0,1)").p(Plus, Plus),
            *table(1, 2).expect("pair (1,2)").p(Minus, Plus),
            *table(0, 2).expect("pair (0,2)").p(Plus, Plus),
        )?;
        any_violated = bell.violated || wig.violated;
        inequalities.push(inequality_json(&bell));
        inequalities.push(inequality_json(&wig));
    } else if rad.len() == 4 {
        let (a, a2, b, b2) = (rad[0], rad[1], rad[2], rad[3]);
        let report = chsh(
            singlet_correlation(a, b),
            singlet_correlation(a, b2),
            singlet_correlation(a2, b),
            singlet_correlation(a2, b2),
        )?;
        any_violated = report.violated;
        inequalities.push(inequality_json(&report));
    }

    // Trigonometric cells land a hair off exact normalization, so the
    // compatibility check runs in float mode unless exactness is forced
    // (useful only at angles with exactly representable cells).
    let exact = args.mode.exact;
    let status = if exact {
        let exact_family = family.map_scalar::<BigRational>();
        reject_invalid(&exact_family)?;
        check_compatibility(&exact_family, &SolverOptions::default())?.status
    } else {
        check_compatibility(&family, &SolverOptions::default())?.status
    };

    let summary = format!(
        "predict: angles {:?} deg; {} tables; compatibility {}; {} inequality report(s), violated: {}",
        args.angles,
        family.tables.len(),
        status_text(status),
        inequalities.len(),
        any_violated
    );
    let inputs = json!({
        "angles_deg": args.angles,
        "pairing": if args.chsh_pairs { "chsh_cross" } else { "all_pairs" },
        "mode": if exact { "exact" } else { "float" },
    });
    let results = json!({
        "tables": tables,
        "inequalities": inequalities,
        "compatibility": status_text(status),
    });
    Report::new("predict", inputs, summary, results).emit(cli.out.as_deref())?;
    Ok(any_violated || status == Feasibility::Infeasible)
}

fn stream_json(stream: &EventStream) -> (Value, CoincidenceRecord) {
    let (record, discarded) = post_select(stream);
    let total = record.total();
    let value = json!({
        "label": stream.label,
        "theta_deg": [stream.theta_a.to_degrees(), stream.theta_b.to_degrees()],
        "trials": stream.events.len(),
        "discarded_no_click": discarded,
        "counts": { "pp": record.n_pp, "pm": record.n_pm, "mp": record.n_mp, "mm": record.n_mm },
        "frequencies": if total > 0 {
            let n = total as f64;
            json!({
                "pp": record.n_pp as f64 / n,
                "pm": record.n_pm as f64 / n,
                "mp": record.n_mp as f64 / n,
                "mm": record.n_mm as f64 / n,
            })
        } else {
            Value::Null
        },
        "correlation": stream.correlation(),
    });
    (value, record)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = parse_sim_config(&text)?;
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    let job = config.compile()?;
    let trials = config.trials;
    let seed = args.seed;

    let mut streams = Vec::new();
    match &job {
        SimJob::Contexts(specs) => {
            // Each context samples in its own lane: entries with identical
            // specs still produce independent streams.
            for (index, spec) in specs.iter().enumerate() {
                streams.push(sample_context_in_run(spec, trials, seed, index as u64)?);
            }
        }
        SimJob::Table { table, settings } => {
            streams.push(sample_from_table(table, *settings, trials, seed)?);
        }
        SimJob::Threshold { spec, settings } => {
            streams.push(sample_threshold(spec, *settings, trials, seed)?);
        }
        SimJob::Drift { spec } => {
            streams.extend(run_with_drift(spec, trials, seed)?);
        }
    }

    let mut parts = Vec::new();
    let mut records = Vec::new();
    for stream in &streams {
        let (value, record) = stream_json(stream);
        parts.push(value);
        if record.total() > 0 {
            records.push(record);
        }
    }

    if let Some(path) = &args.csv_out {
        std::fs::write(path, bellkit::io::write_coincidence_csv(&records))
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let summary = format!(
        "simulate: {} stream(s) of {} trials each, seed {}; post-selected records: {}",
        streams.len(),
        trials,
        seed,
        records.len()
    );
    let inputs = json!({
        "config_file": args.config.display().to_string(),
        "config": text,
        "trials": trials,
        "seed": seed,
    });
    Report::new("simulate", inputs, summary, json!({ "streams": parts }))
        .emit(cli.out.as_deref())?;
    Ok(false)
}

fn parse_combo(raw: &str) -> Result<[f64; 4]> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("combo `{raw}` must be four comma-separated numbers"))?;
    if parts.len() != 4 {
        return Err(anyhow!("combo `{raw}` must have exactly four coefficients"));
    }
    Ok([parts[0], parts[1], parts[2], parts[3]])
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<bool> {
    let records = bellkit::io::parse_coincidence_csv(&args.data)?;
    if records.is_empty() {
        return Err(anyhow!("no records in {}", args.data.display()));
    }
    let combos: Vec<[f64; 4]> = args.combos.iter().map(|c| parse_combo(c)).collect::<Result<_>>()?;
    let reports = anomaly_analysis(&records, &combos, args.sigma_k)?;

    let flagged: usize = reports.iter().filter(|r| !r.flags.is_empty()).count();
    let results: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "theta_deg": [r.theta1.to_degrees(), r.theta2.to_degrees()],
                "total": r.total,
                "deviations": { "pp": r.deviations[0], "pm": r.deviations[1],
                                 "mp": r.deviations[2], "mm": r.deviations[3] },
                "cell_std_errors": r.cell_std_errors,
                "delta_e": r.delta_e,
                "delta_e_std_error": r.delta_e_std_error,
                "compensation_residual": r.compensation_residual,
                "marginal_a_deviation": r.marginal_a_deviation,
                "marginal_b_deviation": r.marginal_b_deviation,
                "combinations": r.combinations,
                "flags": r.flags,
            })
        })
        .collect();

    let summary = format!(
        "analyze: {} record(s) against singlet predictions; {flagged} with deviations beyond {} sigma",
        reports.len(),
        args.sigma_k
    );
    let inputs = json!({
        "data_file": args.data.display().to_string(),
        "records": records.len(),
        "combos": combos,
        "sigma_k": args.sigma_k,
    });
    Report::new("analyze", inputs, summary, json!({ "records": results }))
        .emit(cli.out.as_deref())?;
    Ok(flagged > 0)
}

fn cmd_legget(cli: &Cli, args: &LeggetArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let compiled = parse_legget_config(&text)?.compile()?;
    let model = model_from_joint(&compiled.joint)?;
    let two_step = leggett_two_step(
        &model,
        compiled.station_a.as_ref(),
        compiled.station_b.as_ref(),
        compiled.a,
        compiled.b,
    )?;
    let direct = leggett_joint_average(
        &compiled.joint,
        compiled.station_a.as_ref(),
        compiled.station_b.as_ref(),
        compiled.a,
        compiled.b,
    )?;
    let difference = (two_step - direct).abs();
    let excluded: Vec<[usize; 2]> = (0..compiled.joint.u_grid.len())
        .flat_map(|iu| (0..compiled.joint.v_grid.len()).map(move |iv| [iu, iv]))
        .filter(|[iu, iv]| model.conditional(*iu, *iv).is_err())
        .collect();

    let consistent = difference <= args.tolerance;
    let summary = format!(
        "legget: two-step average {two_step}, joint average {direct}, |difference| {difference:e} ({})",
        if consistent { "consistent" } else { "INCONSISTENT" }
    );
    let inputs = json!({
        "config_file": args.config.display().to_string(),
        "config": text,
        "tolerance": args.tolerance,
    });
    let results = json!({
        "two_step_average": two_step,
        "joint_average": direct,
        "difference": difference,
        "consistent": consistent,
        "excluded_zero_mass_cells": excluded,
    });
    Report::new("legget", inputs, summary, results).emit(cli.out.as_deref())?;
    Ok(!consistent)
}

fn cmd_cross(cli: &Cli, args: &CrossArgs) -> Result<bool> {
    let records = bellkit::io::parse_coincidence_csv(&args.data)?;
    let kind: InequalityKind = args.inequality.parse()?;
    let role_angles: Vec<f64> = args.angles.iter().map(|d| d.to_radians()).collect();
    let eval = evaluate_cross_context(&records, kind, &role_angles, args.sigma_k)?;

    let summary = format!(
        "cross: {} from {} records -> lhs {} vs rhs {}; margin {} +/- {}; statistically violated: {}",
        eval.report.name,
        records.len(),
        eval.report.lhs,
        eval.report.rhs,
        eval.report.margin,
        eval.margin_std_error,
        eval.statistically_violated
    );
    let inputs = json!({
        "data_file": args.data.display().to_string(),
        "records": records.len(),
        "inequality": args.inequality,
        "role_angles_deg": args.angles,
        "sigma_k": args.sigma_k,
    });
    let statistically_violated = eval.statistically_violated;
    let results = serde_json::to_value(&eval)?;
    Report::new("cross", inputs, summary, results).emit(cli.out.as_deref())?;
    Ok(statistically_violated)
}
