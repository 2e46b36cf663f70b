//! Synthetic ground truth: fractional Gaussian noise for Hurst calibration
//! and a labelled multi-regime flight schedule for clustering recovery.

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{hurst, FeatureError};
use crate::ingest::{AirportCode, FlightRecord};
use crate::series::{days_in_year, SeriesConfig};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error(
        "covariance factorisation failed at step {step} of {n}: innovation variance {variance:e} \
         (ratio to lag-0 variance {ratio:e}); matrix is numerically singular"
    )]
    Factorization {
        step: usize,
        n: usize,
        variance: f64,
        ratio: f64,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Fractional Gaussian noise request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgnSpec {
    pub h_target: f64,
    pub n: usize,
    pub seed: u64,
}

/// Autocovariance of unit-variance fGn at lag `k`:
/// `½(|k+1|^2H − 2|k|^2H + |k−1|^2H)`.
pub fn fgn_autocovariance(k: usize, h: f64) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Exact fGn sampler.
///
/// The Toeplitz covariance is factorised by the Durbin-Levinson
/// recursion: each sample is its best linear prediction from all earlier
/// samples plus an independent innovation, which reproduces the target
/// covariance exactly.
#[derive(Debug, Clone)]
pub struct FgnGenerator {
    h: f64,
    gamma: Vec<f64>,
    innovation_sd: Vec<f64>,
}

impl FgnGenerator {
    pub fn new(h: f64, n: usize) -> Result<Self, SynthError> {
        if !(h > 0.0 && h < 1.0) {
            return Err(SynthError::InvalidSpec(format!("Hurst parameter {h} outside (0, 1)")));
        }
        if n == 0 {
            return Err(SynthError::InvalidSpec("length must be positive".into()));
        }
        let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, h)).collect();
        let mut innovation_sd = Vec::with_capacity(n);
        let mut v = gamma[0];
        innovation_sd.push(v.sqrt());
        let mut phi: Vec<f64> = Vec::with_capacity(n);
        for t in 1..n {
            let reflection = reflection_step(&gamma, &mut phi, v, t);
            v *= 1.0 - reflection * reflection;
            if v.is_nan() || v <= 0.0 || v.is_infinite() {
                return Err(SynthError::Factorization {
                    step: t,
                    n,
                    variance: v,
                    ratio: v / gamma[0],
                });
            }
            innovation_sd.push(v.sqrt());
        }
        Ok(Self {
            h,
            gamma,
            innovation_sd,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Map independent standard normals to correlated fGn values.
    pub fn transform(&self, z: &[f64]) -> Vec<f64> {
        let n = self.len().min(z.len());
        let mut x = Vec::with_capacity(n);
        let mut phi: Vec<f64> = Vec::with_capacity(n);
        let mut v = self.gamma[0];
        for (t, zt) in z.iter().take(n).enumerate() {
            if t > 0 {
                reflection_step(&self.gamma, &mut phi, v, t);
                v = self.innovation_sd[t] * self.innovation_sd[t];
            }
            let predicted: f64 = phi.iter().zip(x.iter().rev()).map(|(p, xv)| p * xv).sum();
            x.push(predicted + self.innovation_sd[t] * zt);
        }
        x
    }

    pub fn sample(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..self.len()).map(|_| rng.sample(StandardNormal)).collect();
        self.transform(&z)
    }
}

/// One Durbin-Levinson update: extend the prediction coefficients from
/// order `t - 1` to order `t`, returning the new reflection coefficient.
fn reflection_step(gamma: &[f64], phi: &mut Vec<f64>, v_prev: f64, t: usize) -> f64 {
    let acc: f64 = phi.iter().enumerate().map(|(k, p)| p * gamma[t - 1 - k]).sum();
    let reflection = (gamma[t] - acc) / v_prev;
    let prev = phi.clone();
    for k in 0..phi.len() {
        phi[k] = prev[k] - reflection * prev[prev.len() - 1 - k];
    }
    phi.push(reflection);
    reflection
}

pub fn fgn_generate(spec: FgnSpec) -> Result<Vec<f64>, SynthError> {
    Ok(FgnGenerator::new(spec.h_target, spec.n)?.sample(spec.seed))
}

/// Accuracy of the R/S estimator at one Hurst value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub h_target: f64,
    pub n: usize,
    pub seeds: usize,
    pub mean_h: f64,
    pub bias: f64,
    /// Mean over seeds of |estimate − target|.
    pub mae: f64,
    pub std: f64,
}

pub const CALIBRATION_GRID: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

/// Estimate H on `seeds` fGn realisations per grid value.
pub fn calibrate_hurst(
    grid: &[f64],
    n: usize,
    seeds: u64,
    min_len: usize,
) -> Result<Vec<CalibrationRow>, SynthError> {
    if seeds == 0 {
        return Err(SynthError::InvalidSpec("need at least one seed".into()));
    }
    grid.iter()
        .map(|&h| {
            let generator = FgnGenerator::new(h, n)?;
            let estimates: Vec<f64> = (0..seeds)
                .into_par_iter()
                .map(|seed| hurst(&generator.sample(seed), min_len).map(|fit| fit.h))
                .collect::<Result<_, _>>()?;
            let count = estimates.len() as f64;
            let mean_h = estimates.iter().sum::<f64>() / count;
            let mae = estimates.iter().map(|e| (e - h).abs()).sum::<f64>() / count;
            let var = estimates.iter().map(|e| (e - mean_h).powi(2)).sum::<f64>() / count;
            Ok(CalibrationRow {
                h_target: h,
                n,
                seeds: estimates.len(),
                mean_h,
                bias: mean_h - h,
                mae,
                std: var.sqrt(),
            })
        })
        .collect()
}

/// One planted operating mode of the synthetic airport.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub regime_id: u32,
    /// Expected movements per operational hour (one entry per hour).
    pub mean_hourly_q: Vec<f64>,
    /// Mean delay minutes per movement.
    pub delay_mean: f64,
    /// Standard deviation of delay minutes.
    pub delay_dispersion: f64,
    /// Relative standard deviation of hourly demand.
    pub volatility: f64,
    pub days: usize,
}

/// Daily demand shape over the 20 operational hours, peak 1.
const DAY_SHAPE: [f64; 20] = [
    0.30, 0.70, 0.90, 1.00, 1.00, 0.95, 0.90, 0.90, 0.95, 1.00, 1.00, 0.95, 0.90, 0.90, 0.85, 0.80,
    0.70, 0.50, 0.35, 0.20,
];

fn profile(peak: f64) -> Vec<f64> {
    DAY_SHAPE.iter().map(|s| s * peak).collect()
}

/// Four well separated regimes covering a 365-day year: high volume with
/// low delay, high volume with high delay, medium volume with extreme
/// delay, and low volume with low delay.
pub fn default_regimes() -> Vec<RegimeSpec> {
    let regime = |regime_id, peak, delay_mean, delay_dispersion, days| RegimeSpec {
        regime_id,
        mean_hourly_q: profile(peak),
        delay_mean,
        delay_dispersion,
        volatility: 0.1,
        days,
    };
    vec![
        regime(1, 70.0, 8.0, 10.0, 181),
        regime(2, 66.0, 25.0, 25.0, 136),
        regime(3, 55.0, 70.0, 60.0, 33),
        regime(4, 40.0, 5.0, 6.0, 15),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticYear {
    pub records: Vec<FlightRecord>,
    /// Planted regime of every day of the year, in date order.
    pub labels: Vec<(NaiveDate, u32)>,
}

const OTHER_AIRPORTS: [&str; 8] = ["PEK", "PVG", "CTU", "SZX", "KMG", "XIY", "HGH", "WUH"];

fn validate_regimes(regimes: &[RegimeSpec], cfg: &SeriesConfig, year_days: usize) -> Result<(), SynthError> {
    let bad = |m: String| Err(SynthError::InvalidSpec(m));
    let total: usize = regimes.iter().map(|r| r.days).sum();
    if total != year_days {
        return bad(format!("regime days sum to {total}, year has {year_days}"));
    }
    let hours = (cfg.t_end - cfg.t_start).div_ceil(60) as usize;
    for r in regimes {
        let values = [r.delay_mean, r.delay_dispersion, r.volatility];
        if values.iter().chain(&r.mean_hourly_q).any(|v| !v.is_finite() || *v < 0.0) {
            return bad(format!("regime {} has negative or non-finite parameters", r.regime_id));
        }
        if r.mean_hourly_q.len() != hours {
            return bad(format!(
                "regime {} profile has {} hours, window has {hours}",
                r.regime_id,
                r.mean_hourly_q.len()
            ));
        }
    }
    Ok(())
}

fn delay_sampler(spec: &RegimeSpec) -> Option<LogNormal<f64>> {
    if spec.delay_mean <= 0.0 {
        return None;
    }
    let m = spec.delay_mean;
    let sigma2 = (1.0 + (spec.delay_dispersion / m).powi(2)).ln();
    LogNormal::new(m.ln() - sigma2 / 2.0, sigma2.sqrt()).ok()
}

fn simulate_day(
    date: NaiveDate,
    spec: &RegimeSpec,
    airport: AirportCode,
    cfg: &SeriesConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<FlightRecord> {
    let others: Vec<AirportCode> = OTHER_AIRPORTS
        .iter()
        .filter_map(|c| c.parse().ok())
        .filter(|c| *c != airport)
        .collect();
    let delays = delay_sampler(spec);
    let day_start = date.and_hms_opt(0, 0, 0).expect("midnight exists") + Duration::minutes(cfg.t_start.into());
    let span = i64::from(cfg.t_end - cfg.t_start);
    let mut records = Vec::new();
    for (hour, &mean) in spec.mean_hourly_q.iter().enumerate() {
        let jitter: f64 = rng.sample(StandardNormal);
        let count = (mean * (1.0 + spec.volatility * jitter)).max(0.0).round() as usize;
        for _ in 0..count {
            let offset = (hour as i64 * 60 + rng.random_range(0..60)).min(span - 1);
            let sampled = delays.as_ref().map_or(0.0, |d| d.sample(rng));
            // Keep the actual time inside the operational window.
            let delay = (sampled.round() as i64).min(span - 1 - offset);
            let block = Duration::minutes(rng.random_range(60..240));
            let other = others[rng.random_range(0..others.len())];
            let departing = rng.random_bool(0.5);
            let scheduled = day_start + Duration::minutes(offset);
            let actual = scheduled + Duration::minutes(delay);
            let flight_id = format!("SY{:03}{:05}", date.ordinal(), records.len());
            records.push(if departing {
                FlightRecord {
                    flight_id,
                    origin: airport,
                    destination: other,
                    sched_dep: scheduled,
                    actual_dep: Some(actual),
                    sched_arr: scheduled + block,
                    actual_arr: Some(actual + block),
                    dep_delay_s: Some(delay * 60),
                }
            } else {
                FlightRecord {
                    flight_id,
                    origin: other,
                    destination: airport,
                    sched_dep: scheduled - block,
                    actual_dep: Some(actual - block),
                    sched_arr: scheduled,
                    actual_arr: Some(actual),
                    dep_delay_s: Some(delay * 60),
                }
            });
        }
    }
    records
}

/// Simulate one year of movements at `airport`. Regimes are spread over
/// the year in a seeded random order; every day draws from its own
/// sub-stream, so the output depends only on the inputs and `seed`.
pub fn simulate_year(
    regimes: &[RegimeSpec],
    year: i32,
    airport: AirportCode,
    cfg: &SeriesConfig,
    seed: u64,
) -> Result<SyntheticYear, SynthError> {
    cfg.validate()
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let dates = days_in_year(year);
    validate_regimes(regimes, cfg, dates.len())?;

    let mut plan: Vec<usize> = regimes
        .iter()
        .enumerate()
        .flat_map(|(i, r)| std::iter::repeat_n(i, r.days))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plan.shuffle(&mut rng);

    let per_day: Vec<Vec<FlightRecord>> = dates
        .par_iter()
        .zip(&plan)
        .map(|(&date, &r)| {
            let mut day_rng = ChaCha8Rng::seed_from_u64(seed);
            day_rng.set_stream(u64::from(date.ordinal()));
            simulate_day(date, &regimes[r], airport, cfg, &mut day_rng)
        })
        .collect();

    Ok(SyntheticYear {
        records: per_day.into_iter().flatten().collect(),
        labels: dates
            .iter()
            .zip(&plan)
            .map(|(&d, &r)| (d, regimes[r].regime_id))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::clean;

    #[test]
    fn autocovariance_special_cases() {
        assert_eq!(fgn_autocovariance(0, 0.7), 1.0);
        for k in 1..10 {
            assert!(fgn_autocovariance(k, 0.5).abs() < 1e-15);
        }
        let rho1 = 2f64.powf(1.8) / 2.0 - 1.0;
        assert!((fgn_autocovariance(1, 0.9) - rho1).abs() < 1e-12);
        assert!((rho1 - 0.7411).abs() < 1e-4);
    }

    #[test]
    fn h_half_is_white_noise() {
        let g = FgnGenerator::new(0.5, 64).unwrap();
        let z: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = g.transform(&z);
        for (a, b) in x.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// The linear map z -> x must satisfy A Aᵀ = Γ, the Toeplitz covariance.
    #[test]
    fn factor_reproduces_covariance() {
        for &h in &[0.2, 0.5, 0.75, 0.95] {
            let n = 48;
            let g = FgnGenerator::new(h, n).unwrap();
            let columns: Vec<Vec<f64>> = (0..n)
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    g.transform(&e)
                })
                .collect();
            for r in 0..n {
                for c in 0..n {
                    let cov: f64 = columns.iter().map(|col| col[r] * col[c]).sum();
                    let expected = fgn_autocovariance(r.abs_diff(c), h);
                    assert!((cov - expected).abs() < 1e-10, "H={h} ({r},{c}): {cov} vs {expected}");
                }
            }
        }
    }

    /// Lag-1 correlation from the variogram: with unit variance,
    /// E[(x[t+1] - x[t])^2] / 2 = 1 - rho(1). The ratio-of-sums estimator
    /// is biased low under strong persistence because its denominator has
    /// long memory; the differenced series does not.
    #[test]
    fn lag_one_autocorrelation_for_h_09() {
        let g = FgnGenerator::new(0.9, 4096).unwrap();
        let seeds = 5;
        let mut acc = 0.0;
        for seed in 0..seeds {
            let x = g.sample(seed);
            let semivariance = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (2 * (x.len() - 1)) as f64;
            acc += 1.0 - semivariance;
        }
        let rho = acc / seeds as f64;
        assert!((rho - 0.7411).abs() < 0.03, "rho = {rho}");
    }

    #[test]
    fn mean_and_variance_converge() {
        let g = FgnGenerator::new(0.7, 4096).unwrap();
        let (mut mean_acc, mut var_acc) = (0.0, 0.0);
        for seed in 0..20 {
            let x = g.sample(seed);
            let m = x.iter().sum::<f64>() / x.len() as f64;
            mean_acc += m;
            var_acc += x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        }
        assert!((mean_acc / 20.0).abs() < 0.05);
        assert!((var_acc / 20.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn generation_is_deterministic_and_validated() {
        let spec = FgnSpec { h_target: 0.8, n: 100, seed: 9 };
        assert_eq!(fgn_generate(spec).unwrap(), fgn_generate(spec).unwrap());
        assert_ne!(fgn_generate(spec).unwrap(), fgn_generate(FgnSpec { seed: 10, ..spec }).unwrap());
        assert!(matches!(fgn_generate(FgnSpec { h_target: 1.0, ..spec }), Err(SynthError::InvalidSpec(_))));
        assert!(matches!(fgn_generate(FgnSpec { h_target: 0.0, ..spec }), Err(SynthError::InvalidSpec(_))));
    }

    fn airport() -> AirportCode {
        "CAN".parse().unwrap()
    }

    #[test]
    fn simulated_year_is_clean_and_labelled() {
        let cfg = SeriesConfig::default();
        let regimes = default_regimes();
        let year = simulate_year(&regimes, 2023, airport(), &cfg, 7).unwrap();
        assert_eq!(year.labels.len(), 365);
        for r in &regimes {
            assert_eq!(year.labels.iter().filter(|(_, l)| *l == r.regime_id).count(), r.days);
        }
        let n = year.records.len();
        let cleaned = clean(year.records, airport(), &cfg);
        assert_eq!(cleaned.records.len(), n);
        assert_eq!(cleaned.dropped_missing + cleaned.dropped_window + cleaned.dropped_unrelated, 0);
    }

    #[test]
    fn zero_delay_regime_is_punctual() {
        let cfg = SeriesConfig::default();
        let mut regime = default_regimes().remove(0);
        regime.delay_mean = 0.0;
        regime.days = 365;
        let year = simulate_year(&[regime], 2023, airport(), &cfg, 1).unwrap();
        assert!(year.records.iter().all(|r| r.dep_delay_s == Some(0)
            && r.actual_arr.unwrap() - r.sched_arr == Duration::zero()));
    }

    #[test]
    fn zero_volatility_keeps_hourly_schedule_constant() {
        let cfg = SeriesConfig::default();
        let mut regime = default_regimes().remove(3);
        regime.volatility = 0.0;
        regime.days = 365;
        let year = simulate_year(&[regime.clone()], 2023, airport(), &cfg, 3).unwrap();
        let expected: usize = regime.mean_hourly_q.iter().map(|q| q.round() as usize).sum();
        let mut per_day = std::collections::BTreeMap::<u32, usize>::new();
        for r in &year.records {
            let sched = if r.origin == airport() { r.sched_dep } else { r.sched_arr };
            let day = if sched.time() < chrono::NaiveTime::from_hms_opt(5, 0, 0).unwrap() {
                sched.date().pred_opt().unwrap()
            } else {
                sched.date()
            };
            *per_day.entry(day.ordinal()).or_default() += 1;
        }
        assert_eq!(per_day.len(), 365);
        assert!(per_day.values().all(|&c| c == expected));
    }

    #[test]
    fn regime_days_must_cover_the_year() {
        let mut regimes = default_regimes();
        regimes[0].days -= 1;
        let err = simulate_year(&regimes, 2023, airport(), &SeriesConfig::default(), 0).unwrap_err();
        assert!(matches!(err, SynthError::InvalidSpec(_)));
    }

    #[test]
    fn same_seed_same_year() {
        let cfg = SeriesConfig::default();
        let a = simulate_year(&default_regimes(), 2023, airport(), &cfg, 11).unwrap();
        let b = simulate_year(&default_regimes(), 2023, airport(), &cfg, 11).unwrap();
        assert_eq!(a, b);
    }
}
