//! Turn a synthetic year into daily series and the 20-dimensional
//! feature rows, then dump the feature matrix as CSV.

use congestion::features::{cumulants, extract_features, feature_names, write_features_csv, DEFAULT_MIN_LEN};
use congestion::ingest::clean;
use congestion::series::{build_daily_series, SeriesConfig, CHANNEL_NAMES};
use congestion::synth::{default_regimes, simulate_year};

fn main() {
    let cfg = SeriesConfig::default();
    let airport = "CAN".parse().unwrap();
    let year = simulate_year(&default_regimes(), 2023, airport, &cfg, 2).unwrap();
    let cleaned = clean(year.records, airport, &cfg);
    let series = build_daily_series(&cleaned, &cfg, 2023).unwrap();

    let day = &series.days[40];
    println!("{} ({} bins)", day.date, cfg.n_ts());
    for (j, name) in CHANNEL_NAMES.iter().enumerate() {
        let c = cumulants(day.channel(j)).unwrap();
        println!("  {name:<14} c1 {:>9.2}  c2 {:>10.2}  c3 {:>12.1}  c4 {:>14.1}", c[0], c[1], c[2], c[3]);
    }

    let features = extract_features(&series.days, DEFAULT_MIN_LEN).unwrap();
    println!("{} days x {} features: {}", features.len(), feature_names().len(), feature_names().join(" "));
    let mut out = Vec::new();
    write_features_csv(&mut out, &features).unwrap();
    for line in String::from_utf8(out).unwrap().lines().take(4) {
        println!("{line}");
    }
}
