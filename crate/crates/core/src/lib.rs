//! Daily congestion patterns of a single airport from flight records.
//!
//! Flights are binned into four per-day series (departure and arrival
//! delay minutes, departure and arrival counts). Each day becomes a
//! 20-dimensional vector of rescaled-range Hurst exponents and normalised
//! cumulants; K-means groups the days and the groups are described by
//! capacity, flow and punctuality indicators.

pub mod cluster;
pub mod features;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod series;
pub mod synth;

pub use cluster::{adjusted_rand_index, kmeans, pca_project, Clustering, KMeansConfig};
pub use features::{cumulants, extract_features, hurst, rs_statistic, FeatureMatrix};
pub use ingest::{clean, parse_records, AirportCode, FlightRecord};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError};
pub use series::{assign_day, build_daily_series, DailySeries, SeriesConfig};
pub use synth::{default_regimes, fgn_generate, simulate_year, FgnSpec, RegimeSpec};
