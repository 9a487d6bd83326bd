use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use salsa_core::problems::{finite_diff_grad, relative_error};
use salsa_harness::config::{load_json, AblationConfig, CompareConfig, GradCheckConfig, ScalingConfig};
use salsa_harness::emit::{render, to_stdout, Emit, TraceSet};
use salsa_harness::experiment::{run_experiment_detailed, RunSummary};
use salsa_harness::{
    batch_scaling_experiment, frequency_ablation, run_comparison, ExperimentConfig, Format, HarnessError, Result,
};

#[derive(Parser)]
#[command(name = "salsa", version, about = "Line-search optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one optimizer on one problem for every seed.
    Run(Common),
    /// Tabulate several optimizers over several problems.
    Compare(Common),
    /// Step size versus batch size.
    Scaling(Common),
    /// Paired runs with and without the line-search frequency controller.
    FreqAblation(Common),
    /// Compare analytic gradients with central finite differences.
    CheckGrad(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Replaces the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

fn write(item: &impl Emit, format: Format, out: Option<&Path>) -> Result<()> {
    let bytes = render(item, format)?;
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => to_stdout(&bytes),
    }
}

/// `runs/out.csv` with seed 7 becomes `runs/out_seed7.csv`.
fn per_seed_path(path: &Path, seed: u64) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_seed{seed}.{ext}"),
        None => format!("{stem}_seed{seed}"),
    };
    path.with_file_name(name)
}

fn override_seeds(seeds: &mut Vec<u64>, seed: Option<u64>) {
    if let Some(seed) = seed {
        *seeds = vec![seed];
    }
}

fn run(args: &Common) -> Result<()> {
    let mut cfg: ExperimentConfig = load_json(&args.config)?;
    override_seeds(&mut cfg.seeds, args.seed);
    let out = args.out.clone().or(cfg.output.clone());
    let format = Format::from(args.format);
    let runs = run_experiment_detailed(&cfg)?;
    let summary = RunSummary::from_runs(&runs);
    log::info!(
        "{} on {}: mean final loss {:.6e}",
        summary.optimizer,
        summary.problem,
        summary.mean_final_loss
    );
    let traces: Vec<_> = runs.into_iter().map(|r| r.trace).collect();
    match (format, out) {
        (Format::Csv, Some(path)) if traces.len() > 1 => {
            for trace in &traces {
                write(trace, format, Some(&per_seed_path(&path, trace.metadata.seed)))?;
            }
            Ok(())
        }
        (Format::Csv, out) if traces.len() == 1 => write(&traces[0], format, out.as_deref()),
        (Format::Csv, None) => Err(HarnessError::Config(
            "CSV to stdout holds one trace; pass --seed or --out".into(),
        )),
        (_, out) => write(&TraceSet(traces), format, out.as_deref()),
    }
}

fn compare(args: &Common) -> Result<()> {
    let mut cfg: CompareConfig = load_json(&args.config)?;
    override_seeds(&mut cfg.seeds, args.seed);
    let out = args.out.clone().or(cfg.output.clone());
    let (_, table) = run_comparison(&cfg)?;
    write(&table, args.format.into(), out.as_deref())
}

fn scaling(args: &Common) -> Result<()> {
    let mut cfg: ScalingConfig = load_json(&args.config)?;
    override_seeds(&mut cfg.seeds, args.seed);
    let out = args.out.clone().or(cfg.output.clone());
    let problem = cfg.problem.build()?;
    let report = batch_scaling_experiment(
        problem.as_ref(),
        &cfg.optimizer,
        &cfg.batch_sizes,
        &cfg.seeds,
        cfg.epochs,
    )?;
    for r in &report.ratios {
        log::info!("batch {} -> {}: step size ratio {:.3}", r.from, r.to, r.ratio);
    }
    write(&report, args.format.into(), out.as_deref())
}

fn freq_ablation(args: &Common) -> Result<()> {
    let mut cfg: AblationConfig = load_json(&args.config)?;
    override_seeds(&mut cfg.seeds, args.seed);
    let out = args.out.clone().or(cfg.output.clone());
    let problem = cfg.problem.build()?;
    let report = frequency_ablation(problem.as_ref(), &cfg.optimizer, &cfg.seeds, cfg.epochs, cfg.batch_size)?;
    log::info!(
        "final loss delta {:.3e} ({:.2} pooled standard errors)",
        report.final_loss_delta,
        report.delta_in_standard_errors()
    );
    write(&report, args.format.into(), out.as_deref())
}

fn check_grad(args: &Common) -> Result<()> {
    let cfg: GradCheckConfig = load_json(&args.config)?;
    let problem = cfg.problem.build()?;
    let seeds: Vec<u64> = match args.seed {
        Some(seed) => vec![seed],
        None => (0..cfg.points).collect(),
    };
    let mut report = String::from("seed,relative_error\n");
    let mut worst: f64 = 0.0;
    for seed in seeds {
        let w = problem.initial_point(seed);
        let analytic = problem.loss_grad(&w, &problem.all_indices())?.grad;
        let err = relative_error(&analytic, &finite_diff_grad(problem.as_ref(), &w, cfg.h), 1e-12);
        worst = worst.max(err);
        report.push_str(&format!("{seed},{err:e}\n"));
    }
    match &args.out {
        Some(path) => std::fs::write(path, &report).map_err(|e| HarnessError::Io {
            path: path.clone(),
            source: e,
        })?,
        None => to_stdout(report.as_bytes())?,
    }
    if worst > cfg.tolerance {
        return Err(HarnessError::Config(format!(
            "gradient check failed: worst relative error {worst:e} exceeds {:e}",
            cfg.tolerance
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Scaling(args) => scaling(args),
        Command::FreqAblation(args) => freq_ablation(args),
        Command::CheckGrad(args) => check_grad(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
