use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use olplab::bench::{
    fit_growth_slope, parse_aggregate_csv, render_timing_table, run_plan, timing_rows, ExperimentPlan,
    PlanOutcome, WORKERS_ENV,
};

/// Online linear programming simulation laboratory.
#[derive(Parser)]
#[command(version, about, after_help = format!("Set {WORKERS_ENV} to bound the worker pool."))]
struct Cli {
    /// Override the plan's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON experiment plan.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also render SVG charts.
        #[arg(long)]
        svg: bool,
    },
    /// Run a named scenario (continuous-1..4, finite-1..4, dilemma, theorem-gamma, timing).
    Demo {
        scenario: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
        /// Print the scenario's plan as JSON instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Timing table (wall time is recorded).
    Table {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Growth slopes of an aggregate or per-trial CSV.
    Slope { csv: PathBuf },
}

fn finish(plan: &ExperimentPlan, outcome: &PlanOutcome, out: &Path, svg: bool) -> anyhow::Result<()> {
    let files = outcome.write(out, svg)?;
    for (t, i, e) in &outcome.failures {
        eprintln!("excluded trial T={t} #{i}: {e}");
    }
    println!("{}: {} policy runs, {} failed trials", plan.name, outcome.reports.len(), outcome.failures.len());
    print_slopes(&outcome.rows);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn print_slopes(rows: &[olplab::bench::AggregateRow]) {
    let mut algos: Vec<&str> = Vec::new();
    for r in rows {
        if !algos.contains(&r.algo.as_str()) {
            algos.push(&r.algo);
        }
    }
    for algo in algos {
        let sub: Vec<_> = rows.iter().filter(|r| r.algo == algo).cloned().collect();
        match fit_growth_slope(&sub) {
            Ok(s) => println!("{algo}: slope {s:.3}"),
            Err(e) => println!("{algo}: no slope ({e})"),
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, svg } => {
            let mut plan = ExperimentPlan::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = cli.seed {
                plan.seed = seed;
            }
            let outcome = run_plan(&plan)?;
            finish(&plan, &outcome, &out, svg)
        }
        Command::Demo { scenario, trials, out, svg, print_config } => {
            let mut plan = ExperimentPlan::preset(&scenario)?;
            if let Some(seed) = cli.seed {
                plan.seed = seed;
            }
            if let Some(n) = trials {
                plan.trials = n;
            }
            if print_config {
                println!("{}", plan.to_json());
                return Ok(());
            }
            let outcome = run_plan(&plan)?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&scenario));
            finish(&plan, &outcome, &out, svg)
        }
        Command::Table { config, out } => {
            let mut plan = ExperimentPlan::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = cli.seed {
                plan.seed = seed;
            }
            plan.timing = true;
            let outcome = run_plan(&plan)?;
            outcome.write(&out, false)?;
            let table = render_timing_table(&timing_rows(&outcome.rows));
            std::fs::write(out.join("timing.txt"), &table)?;
            print!("{table}");
            Ok(())
        }
        Command::Slope { csv } => {
            let text = std::fs::read_to_string(&csv).with_context(|| format!("reading {}", csv.display()))?;
            let rows = parse_aggregate_csv(&text)?;
            if rows.is_empty() {
                bail!("no rows in {}", csv.display());
            }
            print_slopes(&rows);
            Ok(())
        }
    }
}
