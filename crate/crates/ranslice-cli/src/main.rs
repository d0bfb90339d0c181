//! Command-line front end: run scenarios, compare against the baselines,
//! verify the greedy heuristics against the exact oracles, and replay the
//! built-in pair-bid walkthrough.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ranslice::config::{Config, ResaleProfile};
use ranslice::experiments::run_compare;
use ranslice::fixtures::run_walkthrough;
use ranslice::lower::{run_lower_greedy_full, validate_lower, CarriedLoad};
use ranslice::oracle::{
    solve_lower_exact_full, solve_upper_exact, OracleError, OracleLimits,
};
use ranslice::sim::{run_simulation, Algorithm, Scenario, ScenarioOverrides};
use ranslice::testgen::{random_lower_instance, random_upper_bids};
use ranslice::upper::{run_upper_greedy, NbWeights};

use report::{compare_csv, RunReport};

#[derive(Parser)]
#[command(
    name = "ranslice",
    version,
    about = "Two-level hierarchical pair-bid auction simulator for RAN slicing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write per_slot.csv and summary.csv.
    Run(RunArgs),
    /// Run the heuristic and a baseline over many seeds and write compare.csv.
    Compare(CompareArgs),
    /// Check the greedy heuristics against the exact oracles on random instances.
    OracleCheck(OracleCheckArgs),
    /// Replay the built-in two-MVNO pair-bid walkthrough market.
    Fig2,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML); omitted means the built-in default scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon override, in timeslots.
    #[arg(long)]
    timeslots: Option<u32>,
    /// Resale-gain preset: R1, R2 or R3.
    #[arg(long)]
    resale_profile: Option<ResaleProfile>,
    /// Output directory (also settable via RANSLICE_OUT; default "out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force dynamic (true) or static (false) request durations.
    #[arg(long)]
    dynamic: Option<bool>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Run a baseline policy instead of the heuristic.
    #[arg(long, value_parser = parse_baseline)]
    baseline: Option<Algorithm>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Which baseline to compare against: 1 or 2.
    #[arg(long, value_parser = parse_baseline)]
    baseline: Algorithm,
    /// Number of seeds (1..=N).
    #[arg(long, default_value_t = 20)]
    seeds: u64,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Instances per market level.
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Max requests per sampled lower-level instance.
    #[arg(long, default_value_t = 10)]
    requests: usize,
    /// Max slices per sampled lower-level instance.
    #[arg(long, default_value_t = 5)]
    slices: usize,
    /// Max bids per sampled upper-level instance.
    #[arg(long, default_value_t = 8)]
    bids: usize,
}

fn parse_baseline(s: &str) -> Result<Algorithm, String> {
    match s {
        "1" => Ok(ranslice::baselines::BaselineKind::B1.into()),
        "2" => Ok(ranslice::baselines::BaselineKind::B2.into()),
        other => Err(format!("baseline must be 1 or 2, got '{other}'")),
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Validation(String),
    OracleLimit(String),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Validation(_) => 4,
            CliError::OracleLimit(_) => 5,
            CliError::Io(_, _) => 6,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::OracleLimit(m) => write!(f, "oracle limit exceeded: {m}"),
            CliError::Io(path, e) => write!(f, "io error at {}: {e}", path.display()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::Fig2 => cmd_fig2(),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<(Config, String), CliError> {
    let config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Io(p.clone(), e))?;
            Config::from_toml_str(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => Config::default(),
    };
    let canonical = config.to_toml_string();
    Ok((config, canonical))
}

fn out_dir(args: &ScenarioArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("RANSLICE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(path)
}

fn overrides_from(args: &ScenarioArgs, algorithm: Option<Algorithm>) -> ScenarioOverrides {
    ScenarioOverrides {
        seed: args.seed,
        horizon: args.timeslots,
        resale_profile: args.resale_profile,
        dynamic: args.dynamic,
        algorithm,
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let (config, canonical) = load_config(&args.scenario.config)?;
    let overrides = overrides_from(&args.scenario, args.baseline);
    let scenario = Scenario::from_config(&config, &overrides)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let metrics = run_simulation(&scenario);
    let report = RunReport::new(&scenario, &canonical, metrics);

    let dir = out_dir(&args.scenario);
    let per_slot = write_file(&dir, "per_slot.csv", &report.per_slot_csv())?;
    let summary = write_file(&dir, "summary.csv", &report.summary_csv())?;

    println!(
        "run {} seed={} profile={} algorithm={} dynamic={}",
        report.digest, report.seed, report.profile, report.algorithm.label(), report.dynamic
    );
    println!(
        "  mno_revenue={} mno_cost={} mno_profit={} accepted={}/{}",
        report::sig6(report.metrics.mno_revenue),
        report::sig6(report.metrics.mno_cost),
        report::sig6(report.metrics.mno_profit),
        report.metrics.accepted_requests,
        report.metrics.total_requests,
    );
    println!("  wrote {}", per_slot.display());
    println!("  wrote {}", summary.display());
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let (config, _) = load_config(&args.scenario.config)?;
    let profiles: Vec<ResaleProfile> = match args.scenario.resale_profile {
        Some(p) => vec![p],
        None => vec![ResaleProfile::R1, ResaleProfile::R2, ResaleProfile::R3],
    };
    let seeds: Vec<u64> = (1..=args.seeds.max(1)).collect();
    let base_seed_shift = args.scenario.seed.unwrap_or(0);
    let seeds: Vec<u64> = seeds.iter().map(|s| s + base_seed_shift).collect();

    let report = run_compare(
        &config,
        &profiles,
        &[Algorithm::Heuristic, args.baseline],
        &seeds,
        args.scenario.dynamic,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    let dir = out_dir(&args.scenario);
    let path = write_file(&dir, "compare.csv", &compare_csv(&report))?;

    for d in &report.deltas {
        println!(
            "{} vs {}: mno_revenue {:+.2}%  mno_cost {:+.2}%  mvno_revenue {:+.2}%  accepted_bids {:+.2}%",
            d.profile,
            d.baseline.label(),
            d.mno_revenue_delta_pct,
            d.mno_cost_delta_pct,
            d.mvno_revenue_delta_pct,
            d.accepted_bid_sum_delta_pct,
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_oracle_check(args: OracleCheckArgs) -> Result<(), CliError> {
    let limits = OracleLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let map_oracle_err = |e: OracleError| CliError::OracleLimit(e.to_string());

    let mut violations = 0u64;
    let mut lower_gaps: Vec<f64> = Vec::new();
    for _ in 0..args.trials {
        let inst = random_lower_instance(&mut rng, args.requests, args.slices, false);
        let greedy = run_lower_greedy_full(
            &inst.requests,
            &inst.slices,
            &inst.counter_bids,
            0,
            &CarriedLoad::default(),
            &inst.bounds,
        );
        let exact = solve_lower_exact_full(
            &inst.requests,
            &inst.slices,
            &inst.counter_bids,
            0,
            &CarriedLoad::default(),
            &inst.bounds,
            &limits,
        )
        .map_err(map_oracle_err)?;
        if !validate_lower(&greedy, &inst.requests, &inst.slices, &inst.mvnos)
            || !validate_lower(&exact, &inst.requests, &inst.slices, &inst.mvnos)
        {
            violations += 1;
        }
        if greedy.surplus > exact.surplus + 1e-9 {
            violations += 1;
        }
        if exact.surplus > 0.0 {
            lower_gaps.push((exact.surplus - greedy.surplus) / exact.surplus * 100.0);
        }
    }

    let graph = ranslice::net::build_graph(&ranslice::net::GraphConfig::default())
        .expect("default graph builds");
    let weights = NbWeights::default();
    let mut upper_gaps: Vec<f64> = Vec::new();
    for _ in 0..args.trials {
        let bids = random_upper_bids(&mut rng, args.bids, graph.node_count() as u16);
        let greedy = run_upper_greedy(&graph, &bids, &weights, 0.3, 1.0);
        let exact = solve_upper_exact(&graph, &bids, &weights, 0.3, 1.0, &limits)
            .map_err(map_oracle_err)?;
        if greedy.profit > exact.profit + 1e-9 {
            violations += 1;
        }
        if exact.profit > 0.0 {
            upper_gaps.push((exact.profit - greedy.profit) / exact.profit * 100.0);
        }
    }

    let stats = |gaps: &[f64]| {
        let mean = if gaps.is_empty() {
            0.0
        } else {
            gaps.iter().sum::<f64>() / gaps.len() as f64
        };
        let max = gaps.iter().copied().fold(0.0, f64::max);
        (mean, max)
    };
    let (lower_mean, lower_max) = stats(&lower_gaps);
    let (upper_mean, upper_max) = stats(&upper_gaps);
    println!(
        "lower: {} instances, optimality gap mean {:.3}% max {:.3}%",
        args.trials, lower_mean, lower_max
    );
    println!(
        "upper: {} instances, optimality gap mean {:.3}% max {:.3}%",
        args.trials, upper_mean, upper_max
    );

    if violations > 0 {
        return Err(CliError::Validation(format!(
            "{violations} oracle dominance/constraint violations"
        )));
    }
    println!("all oracle checks passed");
    Ok(())
}

fn cmd_fig2() -> Result<(), CliError> {
    let out = run_walkthrough();
    let names: std::collections::BTreeMap<_, _> = out
        .market
        .mvnos
        .iter()
        .map(|m| (m.id, m.name.clone()))
        .collect();

    for r in &out.market.requests {
        match out.allocation.assignment(r.id) {
            Some(a) => println!(
                "user{} -> {} (bid {}, counter-bid {}, surplus {})",
                r.id.0,
                names[&a.mvno],
                report::sig6(r.bid),
                report::sig6(a.counter_bid),
                report::sig6(r.bid - a.counter_bid),
            ),
            None => println!("user{} rejected", r.id.0),
        }
    }
    println!("surplus: {}", report::sig6(out.allocation.surplus));
    for charge in &out.charges {
        println!(
            "charge user{}: {} (externality {}, base {})",
            charge.bidder.0,
            report::sig6(charge.q_final),
            report::sig6(charge.q_vcg),
            report::sig6(charge.q_base),
        );
    }
    Ok(())
}
