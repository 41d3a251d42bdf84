use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use valley_shuttle::harness::{
    preset_names, run_experiment, run_summary, summarize, write_outputs, ExperimentConfig, ExperimentKind,
};

#[derive(Parser)]
#[command(name = "valley-shuttle", version, about = "Monte Carlo sweeps for conveyor-mode electron shuttling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample disorder landscapes and write one CSV per realization.
    GenLandscape(RunArgs),
    /// Paused inter-channel transfer success over (ε₀, t₀, τ_tot).
    TransferSweep(RunArgs),
    /// Transfer while moving through a disorder landscape.
    MovingSweep(RunArgs),
    /// Five-pocket Lindblad leakage along a 2D shuttle.
    #[command(name = "leakage-2d")]
    Leakage2d(RunArgs),
    /// Orbital energy and tunnel coupling over (P, V_amp).
    ElectroWindow(RunArgs),
    /// Per-point aggregates of a records.csv file.
    Summarize {
        records: PathBuf,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config (fig2d, fig2e, ...); see `presets/`.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> valley_shuttle::Result<bool> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        return Err(valley_shuttle::Error::Config(format!(
            "config is a `{}` experiment, not `{}`",
            cfg.kind.name(),
            kind.name()
        )));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = Some(o);
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let res = run_experiment(&cfg, args.jobs)?;
    let written = write_outputs(&cfg, &res, &dir)?;
    let summary = run_summary(&cfg, &res);
    eprintln!("{}: {} records, {} failed", kind.name(), summary.records, summary.failed);
    for p in &summary.points {
        eprintln!(
            "  point {} {:?}: mean {:.6e} ± {:.2e}, P_suc {:.4} ± {:.4} ({}/{})",
            p.point, p.params, p.mean, p.stderr, p.p_suc, p.p_suc_stderr, p.completed, p.n
        );
    }
    for w in written {
        eprintln!("  wrote {}", w.display());
    }
    Ok(summary.failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenLandscape(a) => run(ExperimentKind::GenLandscape, a),
        Command::TransferSweep(a) => run(ExperimentKind::TransferSweep, a),
        Command::MovingSweep(a) => run(ExperimentKind::MovingSweep, a),
        Command::Leakage2d(a) => run(ExperimentKind::Leakage2d, a),
        Command::ElectroWindow(a) => run(ExperimentKind::ElectroWindow, a),
        Command::Summarize { records, out } => summarize(&records).and_then(|t| {
            match out {
                Some(p) => t.write_csv(std::fs::File::create(p)?)?,
                None => t.write_csv(std::io::stdout().lock())?,
            }
            Ok(true)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let valley_shuttle::Error::Config(_) = e {
                eprintln!("presets: {}", preset_names().collect::<Vec<_>>().join(", "));
            }
            ExitCode::from(2)
        }
    }
}
