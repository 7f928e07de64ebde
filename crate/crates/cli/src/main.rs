use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use planadapt::Variant;
use planadapt_cli::{
    cmd_adapt, cmd_plot, cmd_rollout, cmd_sweep, cmd_trace_search, CliError, RunConfig,
};

#[derive(Parser)]
#[command(name = "planadapt", version, about = "Online adaptation of waypoint-graph planning parameters")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pattern search variant: alg2 or alg3
    #[arg(long, global = true)]
    variant: Option<Variant>,
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptation loop and write adapt_trace.csv / .svg
    Adapt,
    /// Sweep w or e with the other held fixed; writes sweep.csv / .svg
    Sweep,
    /// Evaluate one batch at (rollout.w, rollout.e)
    Rollout,
    /// Feed a scripted outcome sequence (S, CR, NP) through the search
    TraceSearch {
        /// e.g. "NP NP NP S"
        script: String,
    },
    /// Plot columns of a CSV file as SVG
    Plot {
        input: PathBuf,
        /// Comma separated column names
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(variant) = common.variant {
        cfg.variant = variant;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let verbose = cli.common.verbose;
    if let Command::Plot {
        input,
        columns,
        output,
    } = &cli.command
    {
        let path = cmd_plot(input, columns, output.as_deref())?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Adapt => {
            let trace = cmd_adapt(&cfg, verbose)?;
            let last = trace.records.last();
            println!(
                "{} iterations (terminated: {}); final w={:.2} e={:.2}",
                trace.records.len(),
                trace.terminated,
                last.map_or(cfg.w_search.init, |_| trace.final_w.value),
                last.map_or(cfg.e_search.init, |_| trace.final_e.value),
            );
        }
        Command::Sweep => {
            let rows = cmd_sweep(&cfg, verbose)?;
            for r in rows {
                println!(
                    "{}={}  S={:.3} CR={:.3} NP={:.3} time={}",
                    cfg.sweep.swept,
                    r.value,
                    r.rate_success,
                    r.rate_cannot_reach,
                    r.rate_no_path,
                    r.avg_task_time.map_or("-".into(), |t| format!("{t:.2}"))
                );
            }
        }
        Command::Rollout => {
            let s = cmd_rollout(&cfg, verbose)?;
            println!(
                "episodes={} S={:.3} CR={:.3} NP={:.3} time={}",
                s.episodes,
                s.rate_success,
                s.rate_cannot_reach,
                s.rate_no_path,
                s.avg_task_time.map_or("-".into(), |t| format!("{t:.2}"))
            );
        }
        Command::TraceSearch { script } => {
            let steps = cmd_trace_search(&cfg, &script)?;
            for s in steps {
                println!("{} w={} e={}", s.action, s.cfg.w_state.value, s.cfg.e_state.value);
            }
        }
        Command::Plot { .. } => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("planadapt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
