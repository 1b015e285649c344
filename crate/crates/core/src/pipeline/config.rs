use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::KnnDivisor;
use crate::error::{Error, Result};
use crate::features::{BandTable, StftParams};
use crate::fusion::DEFAULT_GAMMA;
use crate::signal::{BandPassSpec, Channel, StaLtaParams};

/// Representation used for downstream tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "single_E")]
    SingleE,
    #[serde(rename = "single_N")]
    SingleN,
    #[serde(rename = "single_Z")]
    SingleZ,
    #[serde(rename = "multiview")]
    Multiview,
    #[serde(rename = "KP")]
    KernelProduct,
    #[serde(rename = "KS")]
    KernelSum,
    #[serde(rename = "KCCA")]
    Kcca,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::SingleE,
        Method::SingleN,
        Method::SingleZ,
        Method::Multiview,
        Method::KernelProduct,
        Method::KernelSum,
        Method::Kcca,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::SingleE => "single_E",
            Method::SingleN => "single_N",
            Method::SingleZ => "single_Z",
            Method::Multiview => "multiview",
            Method::KernelProduct => "KP",
            Method::KernelSum => "KS",
            Method::Kcca => "KCCA",
        }
    }

    pub fn single_channel(self) -> Option<Channel> {
        match self {
            Method::SingleE => Some(Channel::E),
            Method::SingleN => Some(Channel::N),
            Method::SingleZ => Some(Channel::Z),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub k_values: Vec<usize>,
    /// Majority events drawn per minority event in each trial.
    pub resample_multiple: usize,
    pub trials: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            k_values: (1..=15).collect(),
            resample_multiple: 2,
            trials: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnomalyConfig {
    pub k: usize,
    pub threshold_multiple: f64,
    pub divisor: KnnDivisor,
    pub method: Method,
    /// Embedding dimension, capped at `M - 1`.
    pub d: usize,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        AnomalyConfig {
            k: 4,
            threshold_multiple: 4.0,
            divisor: KnnDivisor::K,
            method: Method::SingleZ,
            d: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sta_lta: StaLtaParams,
    pub trigger_bands: [BandPassSpec; 3],
    /// Channel whose onset aligns all three.
    pub align_channel: Channel,
    /// Samples kept before the onset (N1).
    pub n_before: usize,
    /// Samples kept after the onset (N2).
    pub n_after: usize,
    pub stft: StftParams,
    pub band_table: BandTable,
    /// Max-min bandwidth factor C.
    pub bandwidth_factor: f64,
    pub d: usize,
    pub t: u32,
    pub method: Method,
    pub gamma: f64,
    pub kcca_channels: [Channel; 2],
    pub classify: ClassifyConfig,
    /// K for the quarry-cluster task.
    pub quarry_k: usize,
    pub anomaly: AnomalyConfig,
    /// Channel of the location study.
    pub location_channel: Channel,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sta_lta: StaLtaParams::default(),
            trigger_bands: BandPassSpec::trigger_bands(),
            align_channel: Channel::Z,
            n_before: 1199,
            n_after: 3800,
            stft: StftParams::default(),
            band_table: BandTable::default(),
            bandwidth_factor: 2.0,
            d: 4,
            t: 1,
            method: Method::Multiview,
            gamma: DEFAULT_GAMMA,
            kcca_channels: [Channel::E, Channel::N],
            classify: ClassifyConfig::default(),
            quarry_k: 3,
            anomaly: AnomalyConfig::default(),
            location_channel: Channel::N,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Truncated window length `N1 + N2 + 1`.
    pub fn window_len(&self) -> usize {
        self.n_before + self.n_after + 1
    }

    /// Checks every parameter that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.sta_lta.validate()?;
        self.stft.validate()?;
        if self.n_before == 0 && self.n_after == 0 {
            return Err(Error::Config("truncation window is empty".into()));
        }
        self.stft.num_time_bins(self.window_len())?;
        if !(self.bandwidth_factor > 0.0 && self.bandwidth_factor.is_finite()) {
            return Err(Error::Config(format!(
                "bandwidth factor must be positive, got {}",
                self.bandwidth_factor
            )));
        }
        if self.d == 0 || self.t == 0 {
            return Err(Error::Config("d and t must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.kcca_channels[0] == self.kcca_channels[1] {
            return Err(Error::Config("KCCA needs two distinct channels".into()));
        }
        let c = &self.classify;
        if c.k_values.is_empty() || c.k_values.contains(&0) {
            return Err(Error::Config("K values must be non-empty and positive".into()));
        }
        if c.resample_multiple == 0 || c.trials == 0 {
            return Err(Error::Config("resampling multiple and trials must be positive".into()));
        }
        if self.quarry_k == 0 {
            return Err(Error::Config("quarry K must be positive".into()));
        }
        let a = &self.anomaly;
        if a.k < 2 || a.d == 0 || !(a.threshold_multiple > 0.0) {
            return Err(Error::Config(
                "anomaly settings need K >= 2, d >= 1, threshold > 0".into(),
            ));
        }
        Ok(())
    }

    /// Sampling-rate dependent checks.
    pub fn validate_for_rate(&self, fs: f64) -> Result<()> {
        for b in &self.trigger_bands {
            b.validate(fs)?;
        }
        self.band_table.validate(fs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.validate_for_rate(40.0).unwrap();
        assert_eq!(cfg.window_len(), 5000);
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn partial_json_keeps_defaults() {
        let cfg = RunConfig::from_json(r#"{"d": 3, "method": "KCCA", "anomaly": {"k": 5}}"#).unwrap();
        assert_eq!(cfg.d, 3);
        assert_eq!(cfg.method, Method::Kcca);
        assert_eq!(cfg.anomaly.k, 5);
        assert_eq!(cfg.anomaly.threshold_multiple, 4.0);
        assert_eq!(cfg.n_after, 3800);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(RunConfig::from_json(r#"{"dd": 3}"#), Err(Error::Json(_))));
        assert!(matches!(RunConfig::from_json(r#"{"gamma": 0}"#), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"kcca_channels": ["E", "E"]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"anomaly": {"k": 1}}"#).is_err());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.as_str()));
        }
        assert!("pca".parse::<Method>().is_err());
    }
}
