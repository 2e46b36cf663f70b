//! Per-day feature extraction.
//!
//! Every channel of a [`DailySeries`] yields one rescaled-range Hurst
//! exponent and four cumulants. Cumulants are standardised per
//! (channel, order) column across all days and then min-max scaled to
//! `[0, 1]`; Hurst exponents enter the feature vector unscaled. The
//! resulting 20-dimensional row is
//!
//! ```text
//! [h1, h2, h3, h4, a1_1..a1_4, a2_1..a2_4, a3_1..a3_4, a4_1..a4_4]
//! ```
//!
//! where `aj_l` is the normalised order-`l` cumulant of channel `j`.

use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use thiserror::Error;

use crate::series::{DailySeries, CHANNELS};

pub const ORDERS: usize = 4;
pub const FEATURE_DIM: usize = CHANNELS + CHANNELS * ORDERS;

/// Shortest sample on which an R/S value is still computed.
pub const DEFAULT_MIN_LEN: usize = 8;

/// Hurst value substituted for channels without enough valid scales.
pub const HURST_FALLBACK: f64 = 0.5;

// A standard deviation this small relative to the sample magnitude is
// rounding noise around a constant.
const DEGENERATE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("empty series")]
    Empty,
    #[error("R/S needs at least 2 samples, got {0}")]
    SampleTooShort(usize),
    #[error("minimum scale length must be at least 2, got {0}")]
    InvalidMinLen(usize),
    #[error("series of length {len} is shorter than twice the minimum scale {min_len}")]
    SeriesTooShort { len: usize, min_len: usize },
    #[error("insufficient scales: {valid} non-degenerate R/S level(s), need 2")]
    InsufficientScales { valid: usize },
    #[error("normalisation needs at least 2 days, got {0}")]
    TooFewDays(usize),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("malformed feature file: {0}")]
    Malformed(String),
    #[error("csv error: {0}")]
    Csv(String),
}

impl From<csv::Error> for FeatureError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

/// Halve a sequence by averaging disjoint consecutive pairs. With an odd
/// length the last element is carried over unchanged.
pub fn halve(series: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::Empty);
    }
    let mut out: Vec<f64> = series
        .chunks_exact(2)
        .map(|pair| (pair[0] + pair[1]) / 2.0)
        .collect();
    if series.len() % 2 == 1 {
        out.push(series[series.len() - 1]);
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Rescaled range of one sample: range of the cumulative deviations from
/// the mean divided by the unbiased standard deviation.
///
/// Returns `Ok(None)` for a constant sample, where the ratio is undefined.
pub fn rs_statistic(sample: &[f64]) -> Result<Option<f64>, FeatureError> {
    let n = sample.len();
    if n < 2 {
        return Err(FeatureError::SampleTooShort(n));
    }
    let e = mean(sample);
    let mut z = 0.0;
    let mut z_max = f64::NEG_INFINITY;
    let mut z_min = f64::INFINITY;
    let mut ss = 0.0;
    for &x in sample {
        let y = x - e;
        z += y;
        z_max = z_max.max(z);
        z_min = z_min.min(z);
        ss += y * y;
    }
    let s = (ss / (n - 1) as f64).sqrt();
    let scale = sample.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let range = z_max - z_min;
    if s <= DEGENERATE_REL_TOL * scale || range <= 0.0 {
        return Ok(None);
    }
    Ok(Some(range / s))
}

/// Least-squares fit of `log10 RS = log_c + h * log10 N` over the halving
/// levels of a series.
#[derive(Debug, Clone, PartialEq)]
pub struct HurstFit {
    pub h: f64,
    pub log_c: f64,
    /// `(log10 N_m, log10 RS_m)` for every non-degenerate level.
    pub points: Vec<(f64, f64)>,
    pub r_squared: f64,
}

/// Rescaled-range Hurst exponent.
///
/// Level 0 is the series itself; each further level halves the previous
/// one, continuing while the level still has at least `min_len` samples.
/// Constant levels are skipped.
pub fn hurst(series: &[f64], min_len: usize) -> Result<HurstFit, FeatureError> {
    if min_len < 2 {
        return Err(FeatureError::InvalidMinLen(min_len));
    }
    if series.len() < 2 * min_len {
        return Err(FeatureError::SeriesTooShort {
            len: series.len(),
            min_len,
        });
    }

    let mut points = Vec::new();
    let mut level = series.to_vec();
    while level.len() >= min_len {
        if let Some(rs) = rs_statistic(&level)? {
            points.push(((level.len() as f64).log10(), rs.log10()));
        }
        level = halve(&level)?;
    }
    if points.len() < 2 {
        return Err(FeatureError::InsufficientScales {
            valid: points.len(),
        });
    }

    let (h, log_c, r_squared) = least_squares(&points);
    Ok(HurstFit {
        h,
        log_c,
        points,
        r_squared,
    })
}

/// Ordinary least squares line through `points`: (slope, intercept, R²).
fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - x_mean, y - y_mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r_squared)
}

/// Hurst exponents of the four channels of one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstVector {
    pub h: [f64; CHANNELS],
    /// Channels where [`HURST_FALLBACK`] was substituted.
    pub fallback: [bool; CHANNELS],
}

impl HurstVector {
    pub fn of_day(day: &DailySeries, min_len: usize) -> Result<Self, FeatureError> {
        let mut out = Self {
            h: [HURST_FALLBACK; CHANNELS],
            fallback: [false; CHANNELS],
        };
        for j in 0..CHANNELS {
            match hurst(day.channel(j), min_len) {
                Ok(fit) => out.h[j] = fit.h,
                Err(FeatureError::InsufficientScales { .. }) => {
                    log::debug!("{}: channel {} degenerate, Hurst set to {HURST_FALLBACK}", day.date, j + 1);
                    out.fallback[j] = true;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

/// Cumulants of orders 1 to 4 with population (1/N) moments:
/// mean, variance, third central moment, and fourth central moment minus
/// three times the squared variance.
pub fn cumulants(series: &[f64]) -> Result<[f64; ORDERS], FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::Empty);
    }
    let n = series.len() as f64;
    let c1 = mean(series);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in series {
        let d = x - c1;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    Ok([c1, m2, m3, m4 - 3.0 * m2 * m2])
}

/// Cumulants of one day indexed `[channel][order - 1]`.
pub type CumulantBlock = [[f64; ORDERS]; CHANNELS];

pub fn cumulant_block(day: &DailySeries) -> Result<CumulantBlock, FeatureError> {
    let mut block = [[0.0; ORDERS]; CHANNELS];
    for (j, row) in block.iter_mut().enumerate() {
        *row = cumulants(day.channel(j))?;
    }
    Ok(block)
}

/// A (channel, order) column, both 0-based.
pub type Column = (usize, usize);

/// Column-wise standardised cumulants (divisor `days - 1` for the
/// standard deviation). Degenerate columns hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScored {
    pub values: Vec<CumulantBlock>,
    pub degenerate: Vec<Column>,
}

pub fn zscore_cumulants(raw: &[CumulantBlock]) -> Result<ZScored, FeatureError> {
    let days = raw.len();
    if days < 2 {
        return Err(FeatureError::TooFewDays(days));
    }
    let mut values = vec![[[0.0; ORDERS]; CHANNELS]; days];
    let mut degenerate = Vec::new();
    for j in 0..CHANNELS {
        for l in 0..ORDERS {
            let col: Vec<f64> = raw.iter().map(|b| b[j][l]).collect();
            let mu = mean(&col);
            let var = col.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (days - 1) as f64;
            let sigma = var.sqrt();
            let spread = col.iter().fold(0.0f64, |m, x| m.max((x - mu).abs()));
            if sigma == 0.0 || spread <= DEGENERATE_REL_TOL * mu.abs() {
                degenerate.push((j, l));
                continue;
            }
            for (out, x) in values.iter_mut().zip(&col) {
                out[j][l] = (x - mu) / sigma;
            }
        }
    }
    Ok(ZScored { values, degenerate })
}

/// Cumulants after Z-score and min-max scaling, each column in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCumulants {
    pub values: Vec<CumulantBlock>,
    /// Zero-variance columns, set to 0.5 throughout.
    pub degenerate: Vec<Column>,
}

/// Standardise then min-max scale every (channel, order) column across
/// days. Scaling is relative to the days supplied, so a subset of a year
/// normalises differently from the whole year.
pub fn normalize_cumulants(raw: &[CumulantBlock]) -> Result<NormalizedCumulants, FeatureError> {
    let ZScored {
        mut values,
        degenerate,
    } = zscore_cumulants(raw)?;
    for j in 0..CHANNELS {
        for l in 0..ORDERS {
            if degenerate.contains(&(j, l)) {
                log::warn!("cumulant column channel {} order {} is constant; set to 0.5", j + 1, l + 1);
                values.iter_mut().for_each(|b| b[j][l] = 0.5);
                continue;
            }
            let (lo, hi) = values
                .iter()
                .map(|b| b[j][l])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
            let width = hi - lo;
            for b in values.iter_mut() {
                b[j][l] = (b[j][l] - lo) / width;
            }
        }
    }
    Ok(NormalizedCumulants { values, degenerate })
}

/// One 20-dimensional feature row per day with data (days as rows).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<[f64; FEATURE_DIM]>,
    pub hurst_fallback: Vec<[bool; CHANNELS]>,
    pub degenerate_columns: Vec<Column>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Stack Hurst vectors and normalised cumulants into feature rows.
pub fn assemble(
    dates: &[NaiveDate],
    hursts: &[HurstVector],
    cumulants: &NormalizedCumulants,
) -> Result<FeatureMatrix, FeatureError> {
    if hursts.len() != cumulants.values.len() || dates.len() != hursts.len() {
        return Err(FeatureError::LengthMismatch(format!(
            "{} dates, {} Hurst vectors, {} cumulant blocks",
            dates.len(),
            hursts.len(),
            cumulants.values.len()
        )));
    }
    let rows = hursts
        .iter()
        .zip(&cumulants.values)
        .map(|(h, block)| {
            let mut row = [0.0; FEATURE_DIM];
            row[..CHANNELS].copy_from_slice(&h.h);
            for (j, orders) in block.iter().enumerate() {
                let at = CHANNELS + j * ORDERS;
                row[at..at + ORDERS].copy_from_slice(orders);
            }
            row
        })
        .collect();
    Ok(FeatureMatrix {
        dates: dates.to_vec(),
        rows,
        hurst_fallback: hursts.iter().map(|h| h.fallback).collect(),
        degenerate_columns: cumulants.degenerate.clone(),
    })
}

/// Full feature extraction over a year of daily series. Days without any
/// movement are skipped.
pub fn extract_features(days: &[DailySeries], min_len: usize) -> Result<FeatureMatrix, FeatureError> {
    let active: Vec<&DailySeries> = days.iter().filter(|d| !d.is_empty()).collect();
    let per_day: Result<Vec<(HurstVector, CumulantBlock)>, FeatureError> = active
        .par_iter()
        .map(|day| Ok((HurstVector::of_day(day, min_len)?, cumulant_block(day)?)))
        .collect();
    let (hursts, raw): (Vec<_>, Vec<_>) = per_day?.into_iter().unzip();
    let normalized = normalize_cumulants(&raw)?;
    let dates: Vec<NaiveDate> = active.iter().map(|d| d.date).collect();
    assemble(&dates, &hursts, &normalized)
}

pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=CHANNELS).map(|j| format!("h{j}")).collect();
    for j in 1..=CHANNELS {
        for l in 1..=ORDERS {
            names.push(format!("a{j}_{l}"));
        }
    }
    names
}

/// Feature dump: date, 20 feature columns, 4 Hurst fallback flags.
/// Floats are written in shortest round-trip form, so reading the file
/// back reproduces the matrix exactly.
pub fn write_features_csv<W: Write>(sink: W, features: &FeatureMatrix) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["date".to_string()];
    header.extend(feature_names());
    header.extend((1..=CHANNELS).map(|j| format!("h{j}_fallback")));
    w.write_record(&header)?;
    for ((date, row), flags) in features.dates.iter().zip(&features.rows).zip(&features.hurst_fallback) {
        let mut rec = vec![date.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        rec.extend(flags.iter().map(|&f| u8::from(f).to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| FeatureError::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_features_csv<R: Read>(source: R) -> Result<FeatureMatrix, FeatureError> {
    let mut r = csv::Reader::from_reader(source);
    let expected = 1 + FEATURE_DIM + CHANNELS;
    if r.headers()?.len() != expected {
        return Err(FeatureError::Malformed(format!("expected {expected} columns")));
    }
    let mut out = FeatureMatrix {
        dates: Vec::new(),
        rows: Vec::new(),
        hurst_fallback: Vec::new(),
        degenerate_columns: Vec::new(),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| FeatureError::Malformed(format!("row {}: {what}", i + 1));
        if rec.len() != expected {
            return Err(bad("wrong field count"));
        }
        out.dates.push(rec[0].parse().map_err(|_| bad("date"))?);
        let mut row = [0.0_f64; FEATURE_DIM];
        for (k, x) in row.iter_mut().enumerate() {
            *x = rec[1 + k].parse().map_err(|_| bad("feature value"))?;
            if !x.is_finite() {
                return Err(bad("non-finite feature"));
            }
        }
        out.rows.push(row);
        let mut flags = [false; CHANNELS];
        for (j, f) in flags.iter_mut().enumerate() {
            *f = match &rec[1 + FEATURE_DIM + j] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("fallback flag")),
            };
        }
        out.hurst_fallback.push(flags);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halve_examples() {
        assert_eq!(halve(&[1.0, 3.0, 5.0, 7.0]).unwrap(), vec![2.0, 6.0]);
        assert_eq!(halve(&[1.0, 3.0, 5.0]).unwrap(), vec![2.0, 5.0]);
        assert_eq!(halve(&[4.0]).unwrap(), vec![4.0]);
        assert_eq!(halve(&[]), Err(FeatureError::Empty));
    }

    #[test]
    fn rs_of_1_to_4() {
        // E = 2.5, Z = [-1.5, -2, -1.5, 0], R = 2, S = sqrt(5/3)
        let rs = rs_statistic(&[1.0, 2.0, 3.0, 4.0]).unwrap().unwrap();
        let expected = 2.0 / (5.0f64 / 3.0).sqrt();
        assert!((rs - expected).abs() < 1e-15);
        assert!((rs - 1.5492).abs() < 1e-4);
    }

    #[test]
    fn rs_degenerate_and_errors() {
        assert_eq!(rs_statistic(&[5.0, 5.0, 5.0]).unwrap(), None);
        assert_eq!(rs_statistic(&[0.1, 0.1, 0.1]).unwrap(), None);
        assert_eq!(rs_statistic(&[0.0; 10]).unwrap(), None);
        assert_eq!(rs_statistic(&[1.0]), Err(FeatureError::SampleTooShort(1)));
    }

    #[test]
    fn hurst_uses_four_scales_on_80_samples() {
        let xs: Vec<f64> = (0..80).map(|t| ((t * 37) % 11) as f64).collect();
        let fit = hurst(&xs, DEFAULT_MIN_LEN).unwrap();
        let lens: Vec<f64> = fit.points.iter().map(|p| 10f64.powf(p.0).round()).collect();
        assert_eq!(lens, vec![80.0, 40.0, 20.0, 10.0]);
    }

    #[test]
    fn hurst_of_linear_ramp_is_persistent() {
        let ramp: Vec<f64> = (1..=80).map(f64::from).collect();
        let fit = hurst(&ramp, DEFAULT_MIN_LEN).unwrap();
        // Closed form: a ramp of length n has Z_i = i(i - n)/2, so R = n^2/8
        // and S = sqrt(n(n + 1)/12). Halving a ramp gives a ramp, and R/S
        // ignores the step size.
        let exact: Vec<(f64, f64)> = [80.0f64, 40.0, 20.0, 10.0]
            .iter()
            .map(|&n| (n.log10(), ((n * n / 8.0) / (n * (n + 1.0) / 12.0).sqrt()).log10()))
            .collect();
        let (slope, _, _) = least_squares(&exact);
        assert!((fit.h - slope).abs() < 1e-9, "{} vs {}", fit.h, slope);
        assert!(fit.h >= 0.85, "h = {}", fit.h);
    }

    #[test]
    fn hurst_errors() {
        assert_eq!(hurst(&[1.0; 20], 1), Err(FeatureError::InvalidMinLen(1)));
        assert!(matches!(hurst(&[1.0; 10], 8), Err(FeatureError::SeriesTooShort { .. })));
        assert_eq!(
            hurst(&[3.0; 80], 8),
            Err(FeatureError::InsufficientScales { valid: 0 })
        );
    }

    #[test]
    fn cumulants_of_1_to_4_are_exact() {
        assert_eq!(cumulants(&[1.0, 2.0, 3.0, 4.0]).unwrap(), [2.5, 1.25, 0.0, -2.125]);
        assert_eq!(cumulants(&[7.0; 5]).unwrap(), [7.0, 0.0, 0.0, 0.0]);
        assert_eq!(cumulants(&[]), Err(FeatureError::Empty));
    }

    fn block_with(col: &[f64]) -> Vec<CumulantBlock> {
        col.iter().map(|&x| [[x; ORDERS]; CHANNELS]).collect()
    }

    #[test]
    fn three_point_column_normalises_to_0_half_1() {
        let raw = block_with(&[1.0, 2.0, 3.0]);
        let z = zscore_cumulants(&raw).unwrap();
        let col: Vec<f64> = z.values.iter().map(|b| b[0][0]).collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
        let n = normalize_cumulants(&raw).unwrap();
        let col: Vec<f64> = n.values.iter().map(|b| b[2][3]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
        assert!(n.degenerate.is_empty());
    }

    #[test]
    fn constant_column_becomes_half() {
        let raw = block_with(&[4.0, 4.0, 4.0, 4.0]);
        let n = normalize_cumulants(&raw).unwrap();
        assert_eq!(n.degenerate.len(), CHANNELS * ORDERS);
        assert!(n.values.iter().flatten().flatten().all(|&x| x == 0.5));
        assert_eq!(normalize_cumulants(&raw[..1]), Err(FeatureError::TooFewDays(1)));
    }

    #[test]
    fn assemble_orders_hurst_then_channels_then_orders() {
        let date: NaiveDate = "2023-01-01".parse().unwrap();
        let h = HurstVector {
            h: [0.5; 4],
            fallback: [false; 4],
        };
        let mut block = [[0.0; ORDERS]; CHANNELS];
        block[1][2] = 0.25;
        let norm = NormalizedCumulants {
            values: vec![block],
            degenerate: vec![],
        };
        let f = assemble(&[date], &[h], &norm).unwrap();
        let mut expected = [0.0; FEATURE_DIM];
        expected[..4].copy_from_slice(&[0.5; 4]);
        expected[4 + 4 + 2] = 0.25;
        assert_eq!(f.rows, vec![expected]);
        assert_eq!(feature_names()[4 + 4 + 2], "a2_3");
        assert!(matches!(
            assemble(&[date, date], &[h], &norm),
            Err(FeatureError::LengthMismatch(_))
        ));
    }

    #[test]
    fn feature_csv_round_trips_exactly() {
        let f = FeatureMatrix {
            dates: vec!["2023-01-01".parse().unwrap(), "2023-01-02".parse().unwrap()],
            rows: vec![[0.1 + 0.2; FEATURE_DIM], [1.0 / 3.0; FEATURE_DIM]],
            hurst_fallback: vec![[true, false, false, true], [false; 4]],
            degenerate_columns: vec![],
        };
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &f).unwrap();
        assert_eq!(read_features_csv(buf.as_slice()).unwrap(), f);
    }

    proptest! {
        #[test]
        fn cumulants_shift_and_scale(
            xs in prop::collection::vec(-50.0f64..50.0, 2..100),
            a in 0.2f64..5.0,
            b in -100.0f64..100.0,
        ) {
            let c = cumulants(&xs).unwrap();
            let shifted: Vec<f64> = xs.iter().map(|x| x + b).collect();
            let cs = cumulants(&shifted).unwrap();
            for l in 1..ORDERS {
                let tol = 1e-8 * (1.0 + c[l].abs()) * 50f64.powi(l as i32 + 1);
                prop_assert!((cs[l] - c[l]).abs() <= tol, "order {}: {} vs {}", l + 1, cs[l], c[l]);
            }
            let scaled: Vec<f64> = xs.iter().map(|x| a * x).collect();
            let cc = cumulants(&scaled).unwrap();
            for l in 0..ORDERS {
                let expected = a.powi(l as i32 + 1) * c[l];
                let tol = 1e-9 * (1.0 + expected.abs()) * 50f64.powi(l as i32 + 1);
                prop_assert!((cc[l] - expected).abs() <= tol);
            }
        }

        #[test]
        fn normalized_columns_in_unit_interval(
            days in prop::collection::vec(prop::array::uniform4(prop::array::uniform4(-1e3f64..1e3)), 2..40)
        ) {
            let n = normalize_cumulants(&days).unwrap();
            for b in &n.values {
                for x in b.iter().flatten() {
                    prop_assert!((0.0..=1.0).contains(x));
                }
            }
        }

        #[test]
        fn hurst_is_finite_with_enough_points(xs in prop::collection::vec(-10.0f64..10.0, 16..200)) {
            if let Ok(fit) = hurst(&xs, 8) {
                prop_assert!(fit.h.is_finite());
                prop_assert!(fit.points.len() >= 2);
            }
        }
    }
}
