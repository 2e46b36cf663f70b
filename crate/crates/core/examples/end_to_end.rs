//! Full batch run on a generated year: write the flight file, run every
//! stage and print the cluster evaluation table.

use std::fs;

use congestion::pipeline::{run_pipeline, run_synth, PipelineConfig, SynthOptions};
use congestion::series::SeriesConfig;

fn main() {
    let dir = std::env::temp_dir().join("congestion-end-to-end");
    let airport = "CAN".parse().unwrap();
    let opts = SynthOptions { airport, year: 2023, seed: 11, fgn: None };
    run_synth(&opts, &SeriesConfig::default(), &dir).unwrap();

    let mut cfg = PipelineConfig::default();
    cfg.input.path = Some(dir.join("flights.csv"));
    cfg.input.airport = Some(airport);
    cfg.kmeans.seed = 11;
    cfg.output.dir = dir.join("report");
    let run = run_pipeline(&cfg).unwrap();

    println!("{} of {} rows retained", run.report.retained, run.report.rows);
    for name in run.bundle.files.keys() {
        println!("  wrote {}", cfg.output.dir.join(name).display());
    }
    print!("{}", fs::read_to_string(cfg.output.dir.join("cluster_evaluation.csv")).unwrap());
}
