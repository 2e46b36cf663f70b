//! Project daily feature rows onto their two leading principal components
//! for a scatter plot coloured by planted regime.

use std::collections::BTreeMap;

use congestion::cluster::pca_project;
use congestion::features::{extract_features, DEFAULT_MIN_LEN};
use congestion::ingest::clean;
use congestion::series::{build_daily_series, SeriesConfig};
use congestion::synth::{default_regimes, simulate_year};

fn main() {
    let cfg = SeriesConfig::default();
    let airport = "CAN".parse().unwrap();
    let year = simulate_year(&default_regimes(), 2023, airport, &cfg, 6).unwrap();
    let labels: BTreeMap<_, _> = year.labels.iter().copied().collect();
    let cleaned = clean(year.records, airport, &cfg);
    let series = build_daily_series(&cleaned, &cfg, 2023).unwrap();
    let features = extract_features(&series.days, DEFAULT_MIN_LEN).unwrap();

    let pca = pca_project(&features.rows, 2).unwrap();
    println!("explained variance: {:?}", pca.explained_variance);
    let mut centres: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for (date, xy) in features.dates.iter().zip(&pca.coords) {
        let c = centres.entry(labels[date]).or_default();
        c.0 += xy[0];
        c.1 += xy[1];
        c.2 += 1;
    }
    for (regime, (x, y, n)) in centres {
        println!("regime {regime}: {n:>3} days centred at ({:+.3}, {:+.3})", x / n as f64, y / n as f64);
    }
}
