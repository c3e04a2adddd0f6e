//! `promex` — run, replay, compare and batch promise-based goal-reasoning
//! simulations, or invoke the temporal planner directly.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use promex_core::pddl;
use promex_core::planner::{self, PlanOutcome, PlannerConfig, SearchMode};
use promex_core::sim::{self, RunOptions, RunReport};
use promex_core::time::Tick;

#[derive(Parser)]
#[command(name = "promex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write events.jsonl, report.txt and gantt.txt.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's promises flag.
        #[arg(long, value_enum)]
        promises: Option<OnOff>,
        /// Override every operator's lookahead time (0 disables promises).
        #[arg(long)]
        lookahead: Option<u64>,
        /// Output directory (default: out/<scenario>-seed<N>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan for a domain/problem pair and print the timed plan.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "uniform-cost")]
        mode: Mode,
        /// Search node budget.
        #[arg(long, default_value_t = 200_000)]
        budget: usize,
        /// Time horizon in ticks.
        #[arg(long, default_value_t = 1_000_000)]
        bound: u64,
    },
    /// Re-read an event log and print its report (and optionally the gantt).
    Replay {
        eventlog: PathBuf,
        #[arg(long)]
        gantt: bool,
    },
    /// Compare two event logs of the same scenario (baseline first).
    Compare { baseline: PathBuf, other: PathBuf },
    /// Run a scenario over several seeds and summarize makespans.
    Batch {
        scenario: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, value_enum)]
        promises: Option<OnOff>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    UniformCost,
    Greedy,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { scenario, seed, promises, lookahead, out } => {
            run(scenario, seed, promises, lookahead, out)
        }
        Command::Plan { domain, problem, mode, budget, bound } => {
            plan(domain, problem, mode, budget, bound)
        }
        Command::Replay { eventlog, gantt } => replay(eventlog, gantt),
        Command::Compare { baseline, other } => compare(baseline, other),
        Command::Batch { scenario, seeds, promises } => batch(scenario, seeds, promises),
    }
}

fn load_report(path: &Path) -> Result<RunReport> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let events = sim::read_events(BufReader::new(file))
        .with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(RunReport::from_events(events, None))
}

fn run(
    scenario_path: PathBuf,
    seed: Option<u64>,
    promises: Option<OnOff>,
    lookahead: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let scenario = sim::load_scenario(&scenario_path)?;
    let options = RunOptions {
        seed,
        promises: promises.map(|p| matches!(p, OnOff::On)),
        lookahead,
    };
    let report = sim::run_with_options(&scenario, &options);

    let out = out.unwrap_or_else(|| {
        PathBuf::from("out").join(format!("{}-seed{}", report.scenario, report.seed))
    });
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    fs::write(out.join("events.jsonl"), sim::events_to_string(&report.events))?;
    fs::write(out.join("report.txt"), report.render_text())?;
    fs::write(out.join("gantt.txt"), report.render_gantt(100))?;

    print!("{}", report.render_text());
    println!("wrote {}", out.display());
    Ok(())
}

fn plan(domain: PathBuf, problem: PathBuf, mode: Mode, budget: usize, bound: u64) -> Result<()> {
    let domain_text =
        fs::read_to_string(&domain).with_context(|| format!("cannot read {}", domain.display()))?;
    let parsed_domain = pddl::parse_domain(&domain_text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", domain.display()))?;
    let problem_text = fs::read_to_string(&problem)
        .with_context(|| format!("cannot read {}", problem.display()))?;
    let parsed_problem = pddl::parse_problem(&problem_text, &parsed_domain)
        .map_err(|e| anyhow::anyhow!("{}: {e}", problem.display()))?;

    let objects = parsed_domain.merged_objects(&parsed_problem.objects);
    let til_preds = parsed_problem.tils.iter().map(|(_, l)| l.atom.pred.clone()).collect();
    let actions =
        pddl::ground_actions(&parsed_domain, &objects, &parsed_problem.init, &til_preds);
    let config = PlannerConfig {
        mode: match mode {
            Mode::UniformCost => SearchMode::UniformCost,
            Mode::Greedy => SearchMode::Greedy,
        },
        node_budget: budget,
        bound: Tick(bound),
    };
    match planner::plan(
        &actions,
        &parsed_problem.init,
        &parsed_problem.objective,
        &parsed_problem.tils,
        &config,
    ) {
        PlanOutcome::Solved(plan) => {
            print!("{plan}");
            println!("; makespan {}", plan.makespan());
            Ok(())
        }
        PlanOutcome::Unsolvable => bail!("unsolvable within bound {bound}"),
        PlanOutcome::ResourceLimit => bail!("node budget {budget} exceeded"),
    }
}

fn replay(eventlog: PathBuf, gantt: bool) -> Result<()> {
    let report = load_report(&eventlog)?;
    print!("{}", report.render_text());
    if gantt {
        print!("{}", report.render_gantt(100));
    }
    Ok(())
}

fn compare(baseline: PathBuf, other: PathBuf) -> Result<()> {
    let a = load_report(&baseline)?;
    let b = load_report(&other)?;
    let comparison = sim::compare(&a, &b)?;
    print!("{}", comparison.render());
    Ok(())
}

fn batch(scenario_path: PathBuf, seeds: u64, promises: Option<OnOff>) -> Result<()> {
    let scenario = sim::load_scenario(&scenario_path)?;
    let mut runs = Vec::new();
    for seed in 0..seeds {
        let options = RunOptions {
            seed: Some(seed),
            promises: promises.map(|p| matches!(p, OnOff::On)),
            lookahead: None,
        };
        let report = sim::run_with_options(&scenario, &options);
        runs.push(report);
    }
    let promises_on = runs.first().map(|r| r.promises).unwrap_or(false);
    let summary = sim::summarize_batch(&scenario.name, promises_on, &runs);
    print!("{}", summary.render());
    Ok(())
}
