use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbwk::harness::{
    cell_env, environment_opt, parse_config, parse_values, preset, read_csv, render_plot, run_sweep, write_csv,
    write_meta, write_summary, ExperimentConfig, SweepParam,
};
use cbwk::CbwkError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cbwk", version, about = "Contextual bandits with knapsacks experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment document, or the name of a shipped preset.
    config: String,
    /// Output directory; defaults to `output.dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replicates per cell, overriding `seeds.count`.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep a document describes and write CSV, summary and plot.
    Run(RunArgs),
    /// Like `run`, with the swept parameter replaced from the command line.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = ["m", "K", "T"])]
        param: String,
        /// Comma-separated list or an inclusive `start:end:step` range.
        #[arg(long)]
        values: String,
    },
    /// Print the per-round value of the best static policy for each cell.
    Opt { config: String },
    /// Render a results CSV as an SVG figure.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(source: &str) -> Result<(ExperimentConfig, String), CbwkError> {
    let text = match std::fs::read_to_string(source) {
        Ok(t) => t,
        Err(e) => match preset(source) {
            Some(t) => t.to_string(),
            None if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(CbwkError::config(format!("{source}: no such file or preset")))
            }
            None => return Err(CbwkError::config(format!("{source}: {e}"))),
        },
    };
    Ok((parse_config(&text)?, text))
}

fn run(args: RunArgs, sweep: Option<(String, String)>) -> Result<bool, CbwkError> {
    let (mut cfg, text) = load(&args.config)?;
    if let Some((param, values)) = sweep {
        let param = SweepParam::parse(&param).ok_or_else(|| CbwkError::config(format!("unknown sweep parameter {param}")))?;
        let values = parse_values(&values).map_err(|e| CbwkError::config(format!("--values: {e}")))?;
        cfg = cfg.with_sweep(param, values)?;
    }
    if let Some(n) = args.seeds {
        if n == 0 {
            return Err(CbwkError::config("--seeds must be at least 1"));
        }
        cfg.seed_count = n;
    }
    if args.parallelism == 0 {
        return Err(CbwkError::config("--parallelism must be at least 1"));
    }
    let out = args
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CbwkError::io(&out, e))?;

    let result = run_sweep(&cfg, args.parallelism)?;
    write_csv(&result, &out.join("results.csv"))?;
    write_summary(&result, &out.join("summary.csv"))?;
    write_meta(&result, &text, &out.join("run.meta"))?;
    if let Err(e) = render_plot(&result, &out.join("plot.svg")) {
        eprintln!("plot skipped: {e}");
    }
    for s in result.summaries() {
        println!(
            "{:<20} {}={:<6} seeds={:<3} regret {:.3} ± {:.3}",
            s.algorithm, result.sweep_param, s.sweep_value, s.count, s.mean, s.std
        );
    }
    let failed = result.failures().count();
    for r in result.failures() {
        if let Err(msg) = &r.outcome {
            eprintln!("failed {} {}={} seed={}: {msg}", r.algorithm, r.sweep_param, r.sweep_value, r.seed);
        }
    }
    println!("wrote {} rows to {}", result.rows.len(), out.display());
    Ok(failed == 0)
}

fn opt(source: &str) -> Result<bool, CbwkError> {
    let (cfg, _) = load(source)?;
    let param = cfg.sweep.param;
    println!("sweep_param,sweep_value,T,B,opt_per_round,opt_total");
    for &v in &cfg.sweep.values {
        let env = cell_env(&cfg.env, param, v).build()?;
        let per_round = environment_opt(&env)?;
        let t = env.instance.horizon;
        println!(
            "{},{v},{t},{},{per_round:.6},{:.3}",
            param.name(),
            env.instance.budget, per_round * t as f64);
    }
    Ok(true)
}

fn plot(csv: &Path, out: &Path) -> Result<bool, CbwkError> {
    let result = read_csv(csv)?;
    render_plot(&result, out)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args, None),
        Command::Sweep { run: args, param, values } => run(args, Some((param, values))),
        Command::Opt { config } => opt(&config),
        Command::Plot { csv, out } => plot(&csv, &out),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
