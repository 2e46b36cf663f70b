use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use congestion::features::DEFAULT_MIN_LEN;
use congestion::ingest::AirportCode;
use congestion::pipeline::{
    format_calibration, ingest_check, run_calibration, run_cluster, run_evaluate, run_features, run_pipeline, run_synth,
    Overrides, PipelineConfig, PipelineError, SynthOptions,
};
use congestion::synth::CALIBRATION_GRID;

/// Cluster the operating days of one airport by congestion pattern.
///
/// Every global option can also be set through a CONGESTION_* environment
/// variable; command-line flags win over the environment, which wins over
/// the configuration file.
#[derive(Parser)]
#[command(name = "congestion", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Global {
    /// TOML configuration with [input], [input.columns], [series], [features], [kmeans], [output].
    #[arg(long, global = true, env = "CONGESTION_CONFIG")]
    config: Option<PathBuf>,
    /// Flight records CSV.
    #[arg(long, global = true, env = "CONGESTION_INPUT")]
    input: Option<PathBuf>,
    /// Study airport, three-letter code.
    #[arg(long, global = true, env = "CONGESTION_AIRPORT")]
    airport: Option<AirportCode>,
    #[arg(long, global = true, env = "CONGESTION_YEAR")]
    year: Option<i32>,
    /// Number of clusters.
    #[arg(long, global = true, env = "CONGESTION_K")]
    k: Option<usize>,
    /// Root seed of all randomness.
    #[arg(long, global = true, env = "CONGESTION_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "CONGESTION_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline (the default when no subcommand is given).
    Run,
    /// Parse and clean the input; print validation and drop statistics.
    IngestCheck,
    /// Stop after writing features.csv.
    Features,
    /// Cluster an existing features.csv.
    Cluster {
        #[arg(long, default_value = "features.csv")]
        features: PathBuf,
    },
    /// Evaluate existing assignments against the raw flight data.
    Evaluate {
        #[arg(long, default_value = "assignments.csv")]
        assignments: PathBuf,
    },
    /// Write a labelled synthetic year and optionally an fGn series.
    Synth {
        /// Hurst parameter of an extra fGn series.
        #[arg(long)]
        fgn_h: Option<f64>,
        #[arg(long, default_value_t = 1024)]
        fgn_n: usize,
    },
    /// Print the R/S estimator bias table on exact fGn.
    CalibrateHurst {
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = DEFAULT_MIN_LEN)]
        min_len: usize,
    },
}

fn config(g: &Global) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cfg.apply(&Overrides {
        input: g.input.clone(),
        airport: g.airport,
        year: g.year,
        k: g.k,
        seed: g.seed,
        out_dir: g.out_dir.clone(),
    });
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let cfg = config(&cli.global)?;
    match cli.command.unwrap_or(Command::Run) {
        Command::Run => {
            let run = run_pipeline(&cfg)?;
            println!(
                "{} days clustered into {} groups; outputs in {}",
                run.features.len(),
                run.clustering.k(),
                cfg.output.dir.display()
            );
        }
        Command::IngestCheck => {
            let report = ingest_check(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
        }
        Command::Features => {
            run_features(&cfg)?;
        }
        Command::Cluster { features } => {
            run_cluster(&cfg, &features)?;
        }
        Command::Evaluate { assignments } => {
            run_evaluate(&cfg, &assignments)?;
        }
        Command::Synth { fgn_h, fgn_n } => {
            let opts = SynthOptions {
                airport: cfg.input.airport.unwrap_or_else(|| "CAN".parse().expect("valid code")),
                year: cfg.input.year,
                seed: cfg.kmeans.seed,
                fgn: fgn_h.map(|h| (h, fgn_n)),
            };
            run_synth(&opts, &cfg.series, &cfg.output.dir)?;
        }
        Command::CalibrateHurst { n, seeds, min_len } => {
            let rows = run_calibration(&CALIBRATION_GRID, n, seeds, min_len)?;
            print!("{}", format_calibration(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
