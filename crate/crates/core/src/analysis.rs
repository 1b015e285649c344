//! Downstream tasks on embeddings: K-NN classification, K-NN anomaly
//! screening and correlation against event locations.

use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Embedding coordinates with one label per row.
#[derive(Debug, Clone)]
pub struct LabeledEmbedding<L> {
    pub coords: DMatrix<f64>,
    pub labels: Vec<L>,
    pub event_ids: Vec<String>,
}

impl<L: Clone + PartialEq> LabeledEmbedding<L> {
    pub fn new(coords: DMatrix<f64>, labels: Vec<L>, event_ids: Vec<String>) -> Result<Self> {
        if labels.len() != coords.nrows() || event_ids.len() != coords.nrows() {
            return Err(Error::Size(format!(
                "{} rows, {} labels, {} ids",
                coords.nrows(),
                labels.len(),
                event_ids.len()
            )));
        }
        Ok(LabeledEmbedding {
            coords,
            labels,
            event_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    /// Rows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        LabeledEmbedding {
            coords: self.coords.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            event_ids: idx.iter().map(|&i| self.event_ids[i].clone()).collect(),
        }
    }
}

fn row_sq_dist(coords: &DMatrix<f64>, i: usize, q: &[f64]) -> f64 {
    coords.row(i).iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Indices sorted by `(distance, index)`.
fn sorted_neighbours(dist: &[f64], skip: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).filter(|&j| Some(j) != skip).collect();
    idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    idx
}

/// Majority vote over `neighbours` (nearest first); among tied labels the one
/// that occurs nearest wins.
fn vote<L: Clone + PartialEq>(labels: &[L], neighbours: &[usize]) -> L {
    let mut counts: Vec<(L, usize)> = Vec::new();
    for &j in neighbours {
        match counts.iter_mut().find(|(l, _)| *l == labels[j]) {
            Some((_, c)) => *c += 1,
            None => counts.push((labels[j].clone(), 1)),
        }
    }
    // counts is in order of first (nearest) occurrence
    let best = counts.iter().map(|(_, c)| *c).max().unwrap_or(0);
    counts
        .into_iter()
        .find(|(_, c)| *c == best)
        .map(|(l, _)| l)
        .expect("at least one neighbour")
}

pub fn knn_classify<L: Clone + PartialEq>(train: &LabeledEmbedding<L>, query: &[f64], k: usize) -> Result<L> {
    if train.is_empty() {
        return Err(Error::Config("K-NN training set is empty".into()));
    }
    if query.len() != train.coords.ncols() {
        return Err(Error::Size(format!(
            "query has dimension {}, training set {}",
            query.len(),
            train.coords.ncols()
        )));
    }
    if k == 0 || k > train.len() {
        return Err(Error::Config(format!(
            "K must satisfy 1 <= K <= {}, got {k}",
            train.len()
        )));
    }
    let dist: Vec<f64> = (0..train.len()).map(|i| row_sq_dist(&train.coords, i, query)).collect();
    let nn = sorted_neighbours(&dist, None);
    Ok(vote(&train.labels, &nn[..k]))
}

/// Every point's other points, nearest first.
fn loo_neighbour_lists(coords: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let m = coords.nrows();
    par::map_range(m, |i| {
        let q: Vec<f64> = coords.row(i).iter().copied().collect();
        let dist: Vec<f64> = (0..m).map(|j| row_sq_dist(coords, j, &q)).collect();
        sorted_neighbours(&dist, Some(i))
    })
}

/// Fraction of points whose label is recovered by K-NN on the remaining points.
pub fn leave_one_out_accuracy<L: Clone + PartialEq + Sync>(emb: &LabeledEmbedding<L>, k: usize) -> Result<f64> {
    Ok(leave_one_out_curve(emb, &[k])?[0])
}

/// Leave-one-out accuracy for several K from a single neighbour search.
pub fn leave_one_out_curve<L: Clone + PartialEq + Sync>(emb: &LabeledEmbedding<L>, ks: &[usize]) -> Result<Vec<f64>> {
    let m = emb.len();
    if m < 2 {
        return Err(Error::Size(format!("leave-one-out needs at least 2 points, got {m}")));
    }
    if let Some(&bad) = ks.iter().find(|&&k| k == 0 || k > m - 1) {
        return Err(Error::Config(format!("K must satisfy 1 <= K <= {}, got {bad}", m - 1)));
    }
    let lists = loo_neighbour_lists(&emb.coords);
    Ok(ks
        .iter()
        .map(|&k| {
            let hits = lists
                .iter()
                .enumerate()
                .filter(|(i, nn)| vote(&emb.labels, &nn[..k]) == emb.labels[*i])
                .count();
            hits as f64 / m as f64
        })
        .collect())
}

/// Index subsets for repeated class-balanced trials: every minority-class
/// point plus `multiple × minority` majority points drawn without
/// replacement. Trial `r` draws from ChaCha stream `r` of `seed`, so trials
/// are independent of evaluation order.
pub fn balanced_resample<L: Clone + PartialEq>(
    labels: &[L],
    multiple: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let mut classes: Vec<(L, Vec<usize>)> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match classes.iter_mut().find(|(c, _)| c == l) {
            Some((_, v)) => v.push(i),
            None => classes.push((l.clone(), vec![i])),
        }
    }
    if classes.len() != 2 {
        return Err(Error::Config(format!(
            "balanced resampling needs exactly 2 classes, got {}",
            classes.len()
        )));
    }
    if multiple == 0 || trials == 0 {
        return Err(Error::Config(
            "resampling multiple and trial count must be positive".into(),
        ));
    }
    // ties: the first-seen class counts as the minority
    let (minority, majority) = if classes[1].1.len() < classes[0].1.len() {
        (&classes[1].1, &classes[0].1)
    } else {
        (&classes[0].1, &classes[1].1)
    };
    let draw = multiple * minority.len();
    if draw > majority.len() {
        return Err(Error::Config(format!(
            "need {draw} majority-class events, only {} available",
            majority.len()
        )));
    }
    Ok((0..trials)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut subset: Vec<usize> = minority.clone();
            subset.extend(
                index::sample(&mut rng, majority.len(), draw)
                    .iter()
                    .map(|j| majority[j]),
            );
            subset.sort_unstable();
            subset
        })
        .collect())
}

/// Divisor applied to the sum of the `K − 1` non-self neighbour distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KnnDivisor {
    #[default]
    K,
    KMinusOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    /// `D̂_i` per point.
    pub avg_knn_distance: Vec<f64>,
    /// Indices with `D̂_i > δ`, largest `D̂` first.
    pub flagged: Vec<usize>,
    pub threshold: f64,
    pub k: usize,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Flags points whose mean squared distance to their `K − 1` nearest other
/// points exceeds `threshold_multiple` times the median of that quantity.
pub fn detect_anomalies(
    coords: &DMatrix<f64>,
    k: usize,
    threshold_multiple: f64,
    divisor: KnnDivisor,
) -> Result<AnomalyReport> {
    let m = coords.nrows();
    if k < 2 || m <= k {
        return Err(Error::Config(format!(
            "anomaly detection needs 2 <= K < M = {m}, got K = {k}"
        )));
    }
    if !(threshold_multiple > 0.0 && threshold_multiple.is_finite()) {
        return Err(Error::Config(format!(
            "threshold multiple must be positive, got {threshold_multiple}"
        )));
    }
    let denom = match divisor {
        KnnDivisor::K => k,
        KnnDivisor::KMinusOne => k - 1,
    } as f64;
    let avg: Vec<f64> = par::map_range(m, |i| {
        let q: Vec<f64> = coords.row(i).iter().copied().collect();
        let mut dist: Vec<f64> = (0..m).filter(|&j| j != i).map(|j| row_sq_dist(coords, j, &q)).collect();
        dist.sort_by(f64::total_cmp);
        dist[..k - 1].iter().sum::<f64>() / denom
    });
    let threshold = threshold_multiple * median(&avg);
    let mut flagged: Vec<usize> = (0..m).filter(|&i| avg[i] > threshold).collect();
    flagged.sort_by(|&a, &b| avg[b].total_cmp(&avg[a]).then(a.cmp(&b)));
    Ok(AnomalyReport {
        avg_knn_distance: avg,
        flagged,
        threshold,
        k,
    })
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Size(format!(
            "pearson inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::UndefinedCorrelation(format!("need at least 2 samples, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("an input has zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocationMethod {
    #[serde(rename = "DM")]
    DiffusionMaps,
    #[serde(rename = "PCA")]
    Pca,
}

impl std::fmt::Display for LocationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LocationMethod::DiffusionMaps => "DM",
            LocationMethod::Pca => "PCA",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationEval {
    pub pearson_lat: f64,
    pub pearson_lon: f64,
    pub method: LocationMethod,
    /// True when coordinate 2 was paired with latitude.
    pub swapped: bool,
}

impl LocationEval {
    pub fn mean(&self) -> f64 {
        0.5 * (self.pearson_lat + self.pearson_lon)
    }
}

/// Absolute correlations of the first two coordinates with latitude and
/// longitude, under whichever pairing of coordinates to axes scores higher.
pub fn location_correlation(
    coords: &DMatrix<f64>,
    lat: &[f64],
    lon: &[f64],
    method: LocationMethod,
) -> Result<LocationEval> {
    if coords.ncols() < 2 {
        return Err(Error::Config(format!(
            "location evaluation needs d >= 2, got {}",
            coords.ncols()
        )));
    }
    if lat.len() != coords.nrows() || lon.len() != coords.nrows() {
        return Err(Error::Size("coordinates and catalog are not aligned".into()));
    }
    let c1: Vec<f64> = coords.column(0).iter().copied().collect();
    let c2: Vec<f64> = coords.column(1).iter().copied().collect();
    let direct = (pearson(&c1, lat)?.abs(), pearson(&c2, lon)?.abs());
    let swapped = (pearson(&c2, lat)?.abs(), pearson(&c1, lon)?.abs());
    let use_swapped = swapped.0 + swapped.1 > direct.0 + direct.1;
    let (pearson_lat, pearson_lon) = if use_swapped { swapped } else { direct };
    Ok(LocationEval {
        pearson_lat,
        pearson_lon,
        method,
        swapped: use_swapped,
    })
}

/// One point of an accuracy-vs-K curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    #[serde(rename = "K")]
    pub k: usize,
    pub method: String,
    pub mean_accuracy: f64,
    pub std: f64,
}

/// Mean and sample standard deviation across trials; `per_trial[r][j]` is
/// the accuracy of trial `r` at `ks[j]`.
pub fn summarize_curve(method: &str, ks: &[usize], per_trial: &[Vec<f64>]) -> Result<Vec<AccuracyPoint>> {
    if per_trial.is_empty() || per_trial.iter().any(|t| t.len() != ks.len()) {
        return Err(Error::Size("every trial needs one accuracy per K".into()));
    }
    let n = per_trial.len() as f64;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let mean = per_trial.iter().map(|t| t[j]).sum::<f64>() / n;
            let var = if per_trial.len() > 1 {
                per_trial.iter().map(|t| (t[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            AccuracyPoint {
                k,
                method: method.to_string(),
                mean_accuracy: mean,
                std: var.sqrt(),
            }
        })
        .collect())
}

/// Full-precision float formatting shared by every CSV writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_accuracy_csv<W: Write>(out: W, points: &[AccuracyPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["K", "method", "mean_accuracy", "std"])?;
    for p in points {
        w.write_record([
            p.k.to_string(),
            p.method.clone(),
            fmt_f64(p.mean_accuracy),
            fmt_f64(p.std),
        ])?;
    }
    w.flush()
        .map_err(|e| Error::Run(format!("writing accuracy CSV: {e}")))?;
    Ok(())
}

pub fn write_anomaly_csv<W: Write>(out: W, report: &AnomalyReport, event_ids: &[String]) -> Result<()> {
    if event_ids.len() != report.avg_knn_distance.len() {
        return Err(Error::Size("event ids and anomaly scores are not aligned".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event_id", "avg_knn_distance", "flagged"])?;
    for (i, id) in event_ids.iter().enumerate() {
        let flagged = report.flagged.contains(&i);
        w.write_record([id.clone(), fmt_f64(report.avg_knn_distance[i]), flagged.to_string()])?;
    }
    w.flush().map_err(|e| Error::Run(format!("writing anomaly CSV: {e}")))?;
    Ok(())
}
