//! Event-to-embedding mapping and the evaluation drivers built on it.

use nalgebra::DMatrix;

use super::catalog::EventRecord;
use super::config::{Method, RunConfig};
use crate::analysis::{self, AccuracyPoint, AnomalyReport, LabeledEmbedding, LocationEval, LocationMethod};
use crate::diffusion::{self, pca_fit, pca_project, DiffusionOperator};
use crate::error::{Error, Result};
use crate::features::extract_sonovector;
use crate::fusion;
use crate::kernels::{max_min_from_distances, rbf_from_distances, squared_distances, DataMatrix, KernelMatrix};
use crate::par;
use crate::signal::{align_trigger, truncate_around_onset, Channel};

/// Sonovectors of the events that survived alignment and truncation.
#[derive(Debug)]
pub struct FeatureSet {
    pub event_ids: Vec<String>,
    /// Positions of the kept events in the input slice.
    pub source_index: Vec<usize>,
    pub onsets: Vec<usize>,
    /// One `M × D` matrix per channel, in `E, N, Z` order.
    pub views: Vec<DataMatrix>,
    pub excluded: Vec<(String, Error)>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.event_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_ids.is_empty()
    }

    pub fn view(&self, c: Channel) -> &DataMatrix {
        &self.views[c.index()]
    }
}

/// Onset (on the alignment channel) and the three sonovectors of one event.
pub fn event_features(ev: &EventRecord, cfg: &RunConfig) -> Result<(usize, [Vec<f64>; 3])> {
    cfg.validate_for_rate(ev.entry.fs)?;
    let trigger = align_trigger(ev.channel(cfg.align_channel), &cfg.sta_lta, &cfg.trigger_bands)?;
    let onset = trigger.onset_index;
    let mut out: [Vec<f64>; 3] = Default::default();
    for c in Channel::ALL {
        let cut = truncate_around_onset(ev.channel(c), onset, cfg.n_before, cfg.n_after)?;
        out[c.index()] = extract_sonovector(&cut, &cfg.stft, &cfg.band_table)?.x;
    }
    Ok((onset, out))
}

/// Aligns, truncates and extracts features for every event; failures are
/// listed in `excluded`. At least 3 usable events are required.
pub fn prepare_features(events: &[EventRecord], cfg: &RunConfig) -> Result<FeatureSet> {
    cfg.validate()?;
    let results = par::map_slice(events, |ev| event_features(ev, cfg));
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (i, (ev, r)) in events.iter().zip(results).enumerate() {
        match r {
            Ok(f) => kept.push((i, f)),
            Err(e) => {
                log::warn!("event {} excluded: {e}", ev.id());
                excluded.push((ev.id().to_string(), e));
            }
        }
    }
    if kept.len() < 3 {
        return Err(Error::Run(format!(
            "only {} of {} events are usable; at least 3 are needed",
            kept.len(),
            events.len()
        )));
    }
    let ids: Vec<String> = kept.iter().map(|(i, _)| events[*i].id().to_string()).collect();
    let dim = kept[0].1 .1[0].len();
    let views = Channel::ALL
        .iter()
        .map(|c| {
            let rows = DMatrix::from_fn(kept.len(), dim, |r, j| kept[r].1 .1[c.index()][j]);
            DataMatrix::new(rows, ids.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSet {
        event_ids: ids,
        source_index: kept.iter().map(|(i, _)| *i).collect(),
        onsets: kept.iter().map(|(_, f)| f.0).collect(),
        views,
        excluded,
    })
}

/// Pairwise squared distances of each channel view, computed once so that
/// subsets can be re-embedded without touching the features again.
#[derive(Debug, Clone)]
pub struct ViewDistances {
    /// `E, N, Z` order.
    pub d2: Vec<DMatrix<f64>>,
}

impl ViewDistances {
    pub fn new(fs: &FeatureSet) -> Self {
        ViewDistances {
            d2: fs.views.iter().map(squared_distances).collect(),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        ViewDistances {
            d2: self.d2.iter().map(|d| d.select_rows(idx).select_columns(idx)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.d2[0].nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kernel(&self, c: Channel, bandwidth_factor: f64) -> Result<KernelMatrix> {
        let d2 = &self.d2[c.index()];
        let sigma2 = max_min_from_distances(d2, bandwidth_factor)?;
        Ok(rbf_from_distances(d2, sigma2)?.with_view(c))
    }

    fn all_kernels(&self, bandwidth_factor: f64) -> Result<Vec<KernelMatrix>> {
        par::map_slice(&Channel::ALL, |&c| self.kernel(c, bandwidth_factor))
            .into_iter()
            .collect()
    }
}

/// Output of one mapping run.
#[derive(Debug, Clone)]
pub struct Mapping {
    pub method: Method,
    pub event_ids: Vec<String>,
    /// Representation used downstream: `M × d`, or `M × 3d` for multiview.
    pub coords: DMatrix<f64>,
    /// Multiview only: the `M × d` block of each channel.
    pub per_view: Option<Vec<(Channel, DMatrix<f64>)>>,
    /// Eigenvalue (or canonical correlation, for KCCA) behind each column of
    /// a `d`-wide block.
    pub eigenvalues: Vec<f64>,
    pub t: u32,
}

fn single_operator(op: &DiffusionOperator, d: usize, t: u32) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let e = diffusion::embed(op, d, t)?;
    Ok((e.coords, e.eigenvalues))
}

/// Embeds the events behind `dist` with `method`.
pub fn map_distances(
    dist: &ViewDistances,
    event_ids: &[String],
    method: Method,
    d: usize,
    cfg: &RunConfig,
) -> Result<Mapping> {
    let (c, t) = (cfg.bandwidth_factor, cfg.t);
    let mut per_view = None;
    let (coords, eigenvalues) = match method {
        Method::SingleE | Method::SingleN | Method::SingleZ => {
            let ch = method.single_channel().expect("single-channel method");
            single_operator(&diffusion::row_normalize(&dist.kernel(ch, c)?)?, d, t)?
        }
        Method::Multiview => {
            let ks = dist.all_kernels(c)?;
            let e = fusion::multiview_embed(&fusion::build_multiview(&ks)?, d, t)?;
            per_view = Some(Channel::ALL.into_iter().zip(e.per_view_coords).collect());
            (e.concatenated, e.eigenvalues)
        }
        Method::KernelProduct => single_operator(&fusion::kernel_product(&dist.all_kernels(c)?)?, d, t)?,
        Method::KernelSum => single_operator(&fusion::kernel_sum(&dist.all_kernels(c)?)?, d, t)?,
        Method::Kcca => {
            let [a, b] = cfg.kcca_channels;
            let (k1, k2) = (dist.kernel(a, c)?, dist.kernel(b, c)?);
            let pairs = fusion::kcca_pairs(&k1, &k2, cfg.gamma, d.div_ceil(2))?;
            let coords = fusion::kcca_project(&k1, &k2, &pairs, d);
            (coords, (0..d).map(|j| pairs[j / 2].rho).collect())
        }
    };
    Ok(Mapping {
        method,
        event_ids: event_ids.to_vec(),
        coords,
        per_view,
        eigenvalues,
        t,
    })
}

pub fn map_features(fs: &FeatureSet, method: Method, d: usize, cfg: &RunConfig) -> Result<Mapping> {
    map_distances(&ViewDistances::new(fs), &fs.event_ids, method, d, cfg)
}

/// Alignment, truncation, sonovectors and the configured embedding.
pub fn run_mapping(events: &[EventRecord], cfg: &RunConfig) -> Result<(FeatureSet, Mapping)> {
    let fs = prepare_features(events, cfg)?;
    let m = map_features(&fs, cfg.method, cfg.d, cfg)?;
    Ok((fs, m))
}

/// Leave-one-out accuracy curves over `cfg.classify.k_values`, averaged over
/// class-balanced resampling trials, for each method.
pub fn classification_curves<L: Clone + PartialEq + Sync + Send>(
    fs: &FeatureSet,
    labels: &[L],
    methods: &[Method],
    cfg: &RunConfig,
) -> Result<Vec<AccuracyPoint>> {
    if labels.len() != fs.len() {
        return Err(Error::Size("labels are not aligned with the feature set".into()));
    }
    let cc = &cfg.classify;
    let subsets = analysis::balanced_resample(labels, cc.resample_multiple, cc.trials, cfg.seed)?;
    let dist = ViewDistances::new(fs);
    let per_trial: Vec<Result<Vec<Vec<f64>>>> = par::map_slice(&subsets, |idx| {
        let sub = dist.select(idx);
        let ids: Vec<String> = idx.iter().map(|&i| fs.event_ids[i].clone()).collect();
        let lab: Vec<L> = idx.iter().map(|&i| labels[i].clone()).collect();
        methods
            .iter()
            .map(|&m| {
                let mapping = map_distances(&sub, &ids, m, cfg.d, cfg)?;
                let emb = LabeledEmbedding::new(mapping.coords, lab.clone(), ids.clone())?;
                analysis::leave_one_out_curve(&emb, &cc.k_values)
            })
            .collect()
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (j, m) in methods.iter().enumerate() {
        let rows: Vec<Vec<f64>> = per_trial.iter().map(|t| t[j].clone()).collect();
        out.extend(analysis::summarize_curve(m.as_str(), &cc.k_values, &rows)?);
    }
    Ok(out)
}

/// Leave-one-out accuracy curves on the full feature set, one embedding per
/// method and no resampling; `std` is zero.
pub fn loo_curves<L: Clone + PartialEq + Sync + Send>(
    fs: &FeatureSet,
    labels: &[L],
    methods: &[Method],
    cfg: &RunConfig,
) -> Result<Vec<AccuracyPoint>> {
    if labels.len() != fs.len() {
        return Err(Error::Size("labels are not aligned with the feature set".into()));
    }
    let dist = ViewDistances::new(fs);
    let ks = &cfg.classify.k_values;
    let mut out = Vec::new();
    for &m in methods {
        let mapping = map_distances(&dist, &fs.event_ids, m, cfg.d, cfg)?;
        let emb = LabeledEmbedding::new(mapping.coords, labels.to_vec(), fs.event_ids.clone())?;
        let curve = analysis::leave_one_out_curve(&emb, ks)?;
        out.extend(analysis::summarize_curve(m.as_str(), ks, &[curve])?);
    }
    Ok(out)
}

/// Leave-one-out accuracy of `method` at `k` on the full feature set.
pub fn loo_accuracy<L: Clone + PartialEq + Sync>(
    fs: &FeatureSet,
    labels: &[L],
    method: Method,
    k: usize,
    cfg: &RunConfig,
) -> Result<f64> {
    let m = map_features(fs, method, cfg.d, cfg)?;
    let emb = LabeledEmbedding::new(m.coords, labels.to_vec(), fs.event_ids.clone())?;
    analysis::leave_one_out_accuracy(&emb, k)
}

/// Two-dimensional single-channel diffusion map and PCA projection of the
/// same sonovectors.
pub fn location_embeddings(fs: &FeatureSet, channel: Channel, cfg: &RunConfig) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let method = match channel {
        Channel::E => Method::SingleE,
        Channel::N => Method::SingleN,
        Channel::Z => Method::SingleZ,
    };
    let dm = map_features(fs, method, 2, cfg)?;
    let x = fs.view(channel);
    let pca = pca_project(&pca_fit(x, 2)?, x)?;
    Ok((dm.coords, pca))
}

/// Correlation of the first two coordinates with location, for a
/// single-channel diffusion map and for PCA on the same sonovectors.
pub fn location_study(
    fs: &FeatureSet,
    lat: &[f64],
    lon: &[f64],
    channel: Channel,
    cfg: &RunConfig,
) -> Result<(LocationEval, LocationEval)> {
    let (dm, pca) = location_embeddings(fs, channel, cfg)?;
    Ok((
        analysis::location_correlation(&dm, lat, lon, LocationMethod::DiffusionMaps)?,
        analysis::location_correlation(&pca, lat, lon, LocationMethod::Pca)?,
    ))
}

/// K-NN anomaly screening on the configured anomaly mapping.
pub fn anomaly_study(fs: &FeatureSet, cfg: &RunConfig) -> Result<(Mapping, AnomalyReport)> {
    let a = &cfg.anomaly;
    let d = a.d.min(fs.len() - 1);
    if d < a.d {
        log::info!("anomaly embedding capped at d = {d} for {} events", fs.len());
    }
    let m = map_features(fs, a.method, d, cfg)?;
    let report = analysis::detect_anomalies(&m.coords, a.k, a.threshold_multiple, a.divisor)?;
    Ok((m, report))
}
