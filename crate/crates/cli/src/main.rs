use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use socnav::eval::{
    aggregate, compute_metrics, emit_report, load_scenario, load_scenario_dir, render_svg, run_batch, run_suite,
    text_table, RunRecord,
};
use socnav::sim::{PlannerKind, RunTrace};

#[derive(Parser)]
#[command(name = "socnav", version, about = "Run and compare social navigation planners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    Dwa,
    Teb,
    Mpteb,
}

impl From<PlannerArg> for PlannerKind {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Dwa => PlannerKind::Dwa,
            PlannerArg::Teb => PlannerKind::Teb,
            PlannerArg::Mpteb => PlannerKind::Mpteb,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one planner on one scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        planner: PlannerArg,
        /// Number of runs; defaults to the scenario's `repeats`.
        #[arg(long)]
        repeats: Option<usize>,
        /// Base seed; defaults to the scenario's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the table, plots and traces.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all planners on every scenario in a directory.
    Compare {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Summarize a recorded trace.
    Replay {
        trace: PathBuf,
        /// Also write an SVG plot next to the trace.
        #[arg(long)]
        plot: bool,
    },
}

fn all_ok(records: &[RunRecord]) -> bool {
    records.iter().all(|r| r.metrics.arrived && !r.metrics.collided)
}

fn report(records: &[RunRecord], out: Option<&Path>) -> Result<()> {
    let stats = aggregate(records);
    print!("{}", text_table(&stats));
    if let Some(dir) = out {
        let files =
            emit_report(&stats, records, dir).with_context(|| format!("writing report to {}", dir.display()))?;
        log::info!("wrote {} files to {}", files.len(), dir.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            scenario,
            planner,
            repeats,
            seed,
            out,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let n = repeats.unwrap_or(s.repeats).max(1);
            let records = run_batch(&s, &[planner.into()], n)?;
            report(&records, out.as_deref())?;
            Ok(all_ok(&records))
        }
        Command::Compare { dir, out, repeats } => {
            let scenarios = load_scenario_dir(&dir)?;
            anyhow::ensure!(!scenarios.is_empty(), "no scenario files in {}", dir.display());
            let records = run_suite(&scenarios, &PlannerKind::ALL, repeats)?;
            report(&records, Some(&out))?;
            Ok(all_ok(&records))
        }
        Command::Replay { trace, plot } => {
            let file = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let t = RunTrace::read_jsonl(BufReader::new(file))?;
            let m = compute_metrics(&t);
            println!(
                "{} {} seed {}: path {:.2} m, time {:.1} s, min H-R {}, arrived {}, collided {}",
                t.header.scenario,
                t.header.planner,
                t.header.seed,
                m.path_length,
                m.total_time,
                m.min_hr_distance.map_or("-".to_string(), |d| format!("{d:.2} m")),
                m.arrived,
                m.collided
            );
            if plot {
                let svg = trace.with_extension("svg");
                std::fs::write(&svg, render_svg(&t)).with_context(|| format!("writing {}", svg.display()))?;
                println!("plot: {}", svg.display());
            }
            Ok(m.arrived && !m.collided)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
