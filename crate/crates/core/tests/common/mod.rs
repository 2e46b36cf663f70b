#![allow(dead_code)]

use std::path::{Path, PathBuf};

use congestion::ingest::AirportCode;
use congestion::pipeline::{run_synth, PipelineConfig, SynthOptions};
use congestion::series::SeriesConfig;

pub const YEAR: i32 = 2023;

pub fn airport() -> AirportCode {
    "CAN".parse().unwrap()
}

/// Write the default four-regime year to `dir/flights.csv` and return
/// its path.
pub fn synthetic_input(dir: &Path, seed: u64) -> PathBuf {
    let opts = SynthOptions {
        airport: airport(),
        year: YEAR,
        seed,
        fgn: None,
    };
    run_synth(&opts, &SeriesConfig::default(), dir).unwrap();
    dir.join("flights.csv")
}

pub fn config(input: &Path, out: &Path, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.input.path = Some(input.to_path_buf());
    cfg.input.airport = Some(airport());
    cfg.input.year = YEAR;
    cfg.kmeans.seed = seed;
    cfg.output.dir = out.to_path_buf();
    cfg
}
