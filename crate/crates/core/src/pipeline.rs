//! Batch orchestration: configuration, the full ingest-to-report run, the
//! individual stages behind each subcommand, and atomic bundle output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::cluster::{centroid_distance_matrix, kmeans, pca_project, ClusterError, Clustering, KMeansConfig, PcaProjection};
use crate::features::{extract_features, feature_names, read_features_csv, write_features_csv, FeatureError, FeatureMatrix, DEFAULT_MIN_LEN};
use crate::ingest::{clean, parse_records, write_records, write_rejects, AirportCode, CleanDataset, ColumnMapping, IngestError, IngestReport};
use crate::metrics::{daily_metrics, evaluate_clusters, evaluation_json, write_boxplot_long, write_evaluation_csv, MetricsError};
use crate::series::{build_daily_series, SeriesBuild, SeriesConfig, SeriesError};
use crate::synth::{calibrate_hurst, default_regimes, fgn_generate, simulate_year, CalibrationRow, FgnSpec, SynthError};

/// Prefix of the environment variables that override configuration.
pub const ENV_PREFIX: &str = "CONGESTION_";
pub const MANIFEST: &str = "run_manifest.json";
/// Number of principal components written to `pca_coords.csv`.
pub const PCA_COMPONENTS: usize = 2;

/// Output file name and schema version.
pub const SCHEMAS: [(&str, u32); 10] = [
    ("features.csv", 1),
    ("assignments.csv", 1),
    ("centroids.csv", 1),
    ("centroid_distances.csv", 1),
    ("pca_coords.csv", 1),
    ("cluster_evaluation.csv", 1),
    ("cluster_evaluation.json", 1),
    ("boxplot_long.csv", 1),
    ("rejects.csv", 1),
    (MANIFEST, 1),
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    pub airport: Option<AirportCode>,
    pub year: i32,
    pub columns: ColumnMapping,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            path: None,
            airport: None,
            year: 2023,
            columns: ColumnMapping::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Smallest sample length kept in the R/S halving ladder.
    pub min_len: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            min_len: DEFAULT_MIN_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Everything one run needs. Loaded from TOML; every field has a default
/// except the input path and airport.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub series: SeriesConfig,
    pub features: FeatureConfig,
    pub kmeans: KMeansConfig,
    pub output: OutputConfig,
}

/// Command-line or environment values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub airport: Option<AirportCode>,
    pub year: Option<i32>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.input {
            self.input.path = Some(p.clone());
        }
        if let Some(a) = o.airport {
            self.input.airport = Some(a);
        }
        if let Some(y) = o.year {
            self.input.year = y;
        }
        if let Some(k) = o.k {
            self.kmeans.k = k;
        }
        if let Some(s) = o.seed {
            self.kmeans.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
    }

    fn airport(&self) -> Result<AirportCode, PipelineError> {
        self.input
            .airport
            .ok_or_else(|| PipelineError::Config("no airport given (--airport)".into()))
    }

    fn input_path(&self) -> Result<&Path, PipelineError> {
        self.input
            .path
            .as_deref()
            .ok_or_else(|| PipelineError::Config("no input file given (--input)".into()))
    }
}

/// Named output files held in memory until the whole run succeeded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Bundle {
    fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    /// Write every file through a temporary name and rename it into place.
    /// On failure the files already written by this call are removed.
    pub fn write_to(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut written: Vec<PathBuf> = Vec::new();
        let result = self.files.iter().try_for_each(|(name, bytes)| {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.partial"));
            let outcome = fs::File::create(&tmp)
                .and_then(|mut f| f.write_all(bytes).and_then(|()| f.sync_all()))
                .and_then(|()| fs::rename(&tmp, &target));
            if outcome.is_err() {
                let _ = fs::remove_file(&tmp);
            } else {
                written.push(target.clone());
            }
            outcome.map_err(io_err(&target))
        });
        if result.is_err() {
            for path in &written {
                let _ = fs::remove_file(path);
            }
        }
        result
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), PipelineError>) -> Result<Vec<u8>, PipelineError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("JSON values always serialise");
    out.push(b'\n');
    out
}

fn schema_table(names: &[&str]) -> serde_json::Value {
    let map: BTreeMap<&str, u32> = SCHEMAS
        .iter()
        .filter(|(n, _)| names.contains(n))
        .copied()
        .collect();
    json!(map)
}

/// Parsed and cleaned input with its conservation report.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub parsed_header: Vec<String>,
    pub rejects: Vec<crate::ingest::Reject>,
    pub cleaned: CleanDataset,
    pub report: IngestReport,
}

pub fn load_input(cfg: &PipelineConfig) -> Result<LoadedInput, PipelineError> {
    let path = cfg.input_path()?;
    let airport = cfg.airport()?;
    cfg.series.validate()?;
    let file = fs::File::open(path).map_err(io_err(path))?;
    let parsed = parse_records(std::io::BufReader::new(file), &cfg.input.columns).map_err(|e| PipelineError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let cleaned = clean(parsed.records.iter().cloned(), airport, &cfg.series);
    let report = IngestReport::new(&parsed, &cleaned);
    Ok(LoadedInput {
        parsed_header: parsed.header,
        rejects: parsed.rejects,
        cleaned,
        report,
    })
}

/// Stage outputs of the feature step.
#[derive(Debug, Clone)]
pub struct FeatureStage {
    pub series: SeriesBuild,
    pub features: FeatureMatrix,
}

pub fn feature_stage(cfg: &PipelineConfig, input: &LoadedInput) -> Result<FeatureStage, PipelineError> {
    let series = build_daily_series(&input.cleaned, &cfg.series, cfg.input.year)?;
    if series.days.is_empty() {
        return Err(PipelineError::Config(format!("no movements fall in year {}", cfg.input.year)));
    }
    let features = extract_features(&series.days, cfg.features.min_len)?;
    Ok(FeatureStage { series, features })
}

fn features_file(features: &FeatureMatrix) -> Result<Vec<u8>, PipelineError> {
    csv_bytes(|b| Ok(write_features_csv(b, features)?))
}

/// Clustering and projection of a feature matrix.
#[derive(Debug, Clone)]
pub struct ClusterStage {
    pub clustering: Clustering,
    pub pca: PcaProjection,
}

pub fn cluster_stage(features: &FeatureMatrix, cfg: &KMeansConfig) -> Result<ClusterStage, PipelineError> {
    let clustering = kmeans(&features.rows, cfg)?;
    let pca = pca_project(&features.rows, PCA_COMPONENTS)?;
    Ok(ClusterStage { clustering, pca })
}

fn cluster_name(index: usize) -> String {
    format!("C{}", index + 1)
}

fn cluster_files(features: &FeatureMatrix, stage: &ClusterStage, bundle: &mut Bundle) -> Result<(), PipelineError> {
    let c = &stage.clustering;
    let csv_err = |e: csv::Error| PipelineError::Config(format!("csv output: {e}"));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["date", "label"]).map_err(csv_err)?;
    for (date, label) in features.dates.iter().zip(c.labels()) {
        w.write_record([date.to_string(), label.to_string()]).map_err(csv_err)?;
    }
    bundle.insert("assignments.csv", finish(w)?);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["cluster".to_string()];
    head.extend(feature_names());
    w.write_record(&head).map_err(csv_err)?;
    for (i, centroid) in c.centroids.iter().enumerate() {
        let mut row = vec![cluster_name(i)];
        row.extend(centroid.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    bundle.insert("centroids.csv", finish(w)?);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["cluster".to_string()];
    head.extend((0..c.k()).map(cluster_name));
    w.write_record(&head).map_err(csv_err)?;
    for (i, row) in centroid_distance_matrix(c).iter().enumerate() {
        let mut rec = vec![cluster_name(i)];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    bundle.insert("centroid_distances.csv", finish(w)?);

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["date".to_string(), "cluster".to_string()];
    head.extend((1..=PCA_COMPONENTS).map(|i| format!("pc{i}")));
    w.write_record(&head).map_err(csv_err)?;
    for ((date, coords), &a) in features.dates.iter().zip(&stage.pca.coords).zip(&c.assignments) {
        let mut rec = vec![date.to_string(), cluster_name(a)];
        rec.extend(coords.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    bundle.insert("pca_coords.csv", finish(w)?);
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, PipelineError> {
    w.into_inner()
        .map_err(|e| PipelineError::Config(format!("csv output: {e}")))
}

fn evaluation_files(
    cfg: &PipelineConfig,
    cleaned: &CleanDataset,
    dates: &[NaiveDate],
    labels: &[usize],
    bundle: &mut Bundle,
) -> Result<(), PipelineError> {
    let daily = daily_metrics(cleaned, &cfg.series, dates);
    let eval = evaluate_clusters(&daily, dates, labels, cfg.kmeans.k)?;
    bundle.insert(
        "cluster_evaluation.csv",
        csv_bytes(|b| write_evaluation_csv(b, &eval).map_err(|e| MetricsError::from(e).into()))?,
    );
    bundle.insert("cluster_evaluation.json", json_bytes(&evaluation_json(&eval)));
    bundle.insert(
        "boxplot_long.csv",
        csv_bytes(|b| Ok(write_boxplot_long(b, &daily, dates, labels)?))?,
    );
    Ok(())
}

fn rejects_file(input: &LoadedInput) -> Result<Vec<u8>, PipelineError> {
    csv_bytes(|b| Ok(write_rejects(b, &input.parsed_header, &input.rejects)?))
}

fn series_json(series: &SeriesBuild) -> serde_json::Value {
    json!({
        "days": series.days.len(),
        "binned": series.binned,
        "out_of_window": series.out_of_window,
        "out_of_year": series.out_of_year,
    })
}

fn features_json(stage: &FeatureStage) -> serde_json::Value {
    let f = &stage.features;
    json!({
        "days": f.len(),
        "skipped_empty_days": stage.series.days.len() - f.len(),
        "hurst_fallbacks": f.hurst_fallback.iter().flatten().filter(|&&b| b).count(),
        "degenerate_columns": f
            .degenerate_columns
            .iter()
            .map(|(j, l)| format!("a{}_{}", j + 1, l + 1))
            .collect::<Vec<_>>(),
    })
}

fn cluster_json(cfg: &KMeansConfig, stage: &ClusterStage) -> serde_json::Value {
    let c = &stage.clustering;
    json!({
        "k": c.k(),
        "n_init": cfg.n_init,
        "best_restart": c.restart,
        "loss": c.loss,
        "iterations": c.iterations,
        "converged": c.converged,
        "cluster_sizes": c.cluster_sizes,
        "pca_explained_variance": stage.pca.explained_variance,
        "pca_null_components": stage.pca.null_components,
    })
}

fn manifest(stage: &str, cfg: &PipelineConfig, files: &[&str], sections: serde_json::Value) -> serde_json::Value {
    let mut names: Vec<&str> = files.to_vec();
    names.push(MANIFEST);
    let mut m = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "stage": stage,
        "status": "complete",
        "seed": cfg.kmeans.seed,
        "config": cfg,
        "schemas": schema_table(&names),
    });
    if let (Some(obj), serde_json::Value::Object(extra)) = (m.as_object_mut(), sections) {
        obj.extend(extra);
    }
    m
}

/// Summary returned by [`run_pipeline`] for callers and tests.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub bundle: Bundle,
    pub report: IngestReport,
    pub features: FeatureMatrix,
    pub clustering: Clustering,
}

/// Run every stage in memory and return the report bundle without
/// touching the output directory.
pub fn build_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let input = load_input(cfg)?;
    let fstage = feature_stage(cfg, &input)?;
    let cstage = cluster_stage(&fstage.features, &cfg.kmeans)?;

    let mut bundle = Bundle::default();
    bundle.insert("features.csv", features_file(&fstage.features)?);
    cluster_files(&fstage.features, &cstage, &mut bundle)?;
    evaluation_files(
        cfg,
        &input.cleaned,
        &fstage.features.dates,
        &cstage.clustering.assignments,
        &mut bundle,
    )?;
    bundle.insert("rejects.csv", rejects_file(&input)?);

    let names: Vec<&str> = bundle.files.keys().map(String::as_str).collect();
    let m = manifest(
        "pipeline",
        cfg,
        &names,
        json!({
            "ingest": input.report,
            "series": series_json(&fstage.series),
            "features": features_json(&fstage),
            "kmeans": cluster_json(&cfg.kmeans, &cstage),
        }),
    );
    bundle.insert(MANIFEST, json_bytes(&m));
    Ok(PipelineRun {
        bundle,
        report: input.report,
        features: fstage.features,
        clustering: cstage.clustering,
    })
}

/// Full run: ingest, series, features, clustering, evaluation; writes the
/// bundle into the configured output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let run = build_pipeline(cfg)?;
    run.bundle.write_to(&cfg.output.dir)?;
    Ok(run)
}

/// Validation and drop statistics only.
pub fn ingest_check(cfg: &PipelineConfig) -> Result<IngestReport, PipelineError> {
    Ok(load_input(cfg)?.report)
}

/// Stop after the feature matrix.
pub fn run_features(cfg: &PipelineConfig) -> Result<Bundle, PipelineError> {
    let input = load_input(cfg)?;
    let stage = feature_stage(cfg, &input)?;
    let mut bundle = Bundle::default();
    bundle.insert("features.csv", features_file(&stage.features)?);
    bundle.insert("rejects.csv", rejects_file(&input)?);
    let m = manifest(
        "features",
        cfg,
        &["features.csv", "rejects.csv"],
        json!({
            "ingest": input.report,
            "series": series_json(&stage.series),
            "features": features_json(&stage),
        }),
    );
    bundle.insert(MANIFEST, json_bytes(&m));
    bundle.write_to(&cfg.output.dir)?;
    Ok(bundle)
}

fn read_file(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(io_err(path))
}

/// Cluster an existing `features.csv`.
pub fn run_cluster(cfg: &PipelineConfig, features_path: &Path) -> Result<Bundle, PipelineError> {
    let features = read_features_csv(read_file(features_path)?.as_slice()).map_err(|e| PipelineError::Input {
        path: features_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let stage = cluster_stage(&features, &cfg.kmeans)?;
    let mut bundle = Bundle::default();
    cluster_files(&features, &stage, &mut bundle)?;
    let names: Vec<&str> = bundle.files.keys().map(String::as_str).collect();
    let m = manifest(
        "cluster",
        cfg,
        &names,
        json!({
            "features_input": features_path,
            "kmeans": cluster_json(&cfg.kmeans, &stage),
        }),
    );
    bundle.insert(MANIFEST, json_bytes(&m));
    bundle.write_to(&cfg.output.dir)?;
    Ok(bundle)
}

/// Read `assignments.csv`: dates and 0-based cluster indices.
pub fn read_assignments(bytes: &[u8]) -> Result<(Vec<NaiveDate>, Vec<usize>), String> {
    let mut r = csv::Reader::from_reader(bytes);
    let mut dates = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = |what: &str| format!("row {}: {what}", i + 1);
        if rec.len() != 2 {
            return Err(bad("expected date,label"));
        }
        dates.push(rec[0].parse().map_err(|_| bad("date"))?);
        let label: usize = rec[1].parse().map_err(|_| bad("label"))?;
        if label == 0 {
            return Err(bad("labels start at 1"));
        }
        labels.push(label - 1);
    }
    Ok((dates, labels))
}

/// Evaluate existing assignments against the raw flight data.
pub fn run_evaluate(cfg: &PipelineConfig, assignments_path: &Path) -> Result<Bundle, PipelineError> {
    let (dates, labels) = read_assignments(&read_file(assignments_path)?).map_err(|message| PipelineError::Input {
        path: assignments_path.to_path_buf(),
        message,
    })?;
    let input = load_input(cfg)?;
    let mut bundle = Bundle::default();
    evaluation_files(cfg, &input.cleaned, &dates, &labels, &mut bundle)?;
    let names: Vec<&str> = bundle.files.keys().map(String::as_str).collect();
    let m = manifest(
        "evaluate",
        cfg,
        &names,
        json!({ "ingest": input.report, "assignments_input": assignments_path }),
    );
    bundle.insert(MANIFEST, json_bytes(&m));
    bundle.write_to(&cfg.output.dir)?;
    Ok(bundle)
}

/// Options of the `synth` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub airport: AirportCode,
    pub year: i32,
    pub seed: u64,
    /// Also write one fGn realisation of this Hurst parameter and length.
    pub fgn: Option<(f64, usize)>,
}

/// Write a synthetic year (`flights.csv`, `labels.csv`) and optionally an
/// fGn series (`fgn.csv`) into `dir`.
pub fn run_synth(opts: &SynthOptions, series: &SeriesConfig, dir: &Path) -> Result<Bundle, PipelineError> {
    let year = simulate_year(&default_regimes(), opts.year, opts.airport, series, opts.seed)?;
    let mut bundle = Bundle::default();
    bundle.insert(
        "flights.csv",
        csv_bytes(|b| Ok(write_records(b, &year.records, &ColumnMapping::default())?))?,
    );
    let mut labels = String::from("date,regime\n");
    for (date, regime) in &year.labels {
        labels.push_str(&format!("{date},{regime}\n"));
    }
    bundle.insert("labels.csv", labels.into_bytes());
    if let Some((h, n)) = opts.fgn {
        let x = fgn_generate(FgnSpec {
            h_target: h,
            n,
            seed: opts.seed,
        })?;
        let mut text = String::from("index,value\n");
        for (i, v) in x.iter().enumerate() {
            text.push_str(&format!("{i},{v}\n"));
        }
        bundle.insert("fgn.csv", text.into_bytes());
    }
    bundle.write_to(dir)?;
    Ok(bundle)
}

/// Bias table of the Hurst estimator on exact fGn.
pub fn run_calibration(grid: &[f64], n: usize, seeds: u64, min_len: usize) -> Result<Vec<CalibrationRow>, PipelineError> {
    Ok(calibrate_hurst(grid, n, seeds, min_len)?)
}

pub fn format_calibration(rows: &[CalibrationRow]) -> String {
    let mut out = format!(
        "{:>6} {:>6} {:>6} {:>9} {:>9} {:>8} {:>8}\n",
        "H", "n", "seeds", "mean_h", "bias", "mae", "std"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>6.2} {:>6} {:>6} {:>9.4} {:>+9.4} {:>8.4} {:>8.4}\n",
            r.h_target, r.n, r.seeds, r.mean_h, r.bias, r.mae, r.std
        ));
    }
    out
}
