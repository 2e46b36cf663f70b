//! Cluster the days of a synthetic year and compare the clusters with the
//! planted regimes.

use congestion::cluster::{adjusted_rand_index, centroid_distance_matrix, kmeans, KMeansConfig};
use congestion::features::{extract_features, DEFAULT_MIN_LEN};
use congestion::ingest::clean;
use congestion::series::{build_daily_series, SeriesConfig};
use congestion::synth::{default_regimes, simulate_year};

fn main() {
    let cfg = SeriesConfig::default();
    let airport = "CAN".parse().unwrap();
    let year = simulate_year(&default_regimes(), 2023, airport, &cfg, 4).unwrap();
    let planted: Vec<usize> = year.labels.iter().map(|(_, r)| *r as usize).collect();
    let cleaned = clean(year.records, airport, &cfg);
    let series = build_daily_series(&cleaned, &cfg, 2023).unwrap();
    let features = extract_features(&series.days, DEFAULT_MIN_LEN).unwrap();

    let clustering = kmeans(&features.rows, &KMeansConfig { seed: 4, ..KMeansConfig::default() }).unwrap();
    println!(
        "loss {:.4} after {} iterations (restart {}), sizes {:?}",
        clustering.loss, clustering.iterations, clustering.restart, clustering.cluster_sizes
    );
    println!("adjusted Rand index vs planted regimes: {:.4}", adjusted_rand_index(&clustering.assignments, &planted));
    println!("centroid distances:");
    for row in centroid_distance_matrix(&clustering) {
        println!("  {}", row.iter().map(|d| format!("{d:6.3}")).collect::<Vec<_>>().join(" "));
    }
}
