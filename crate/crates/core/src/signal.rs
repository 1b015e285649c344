//! Band-pass filtering, STA/LTA characteristic function and P-onset alignment.
//!
//! The STA/LTA ratio uses two *forward* windows that both start at the sample
//! being evaluated:
//!
//! ```text
//! R(i) = L · Σ_{j=i}^{i+S-1} y²(j)  /  ( S · Σ_{j=i}^{i+L-1} y²(j) )
//! ```
//!
//! so `R` is defined for `i = 0 ..= n - L` only. Because the long window looks
//! ahead, `R` dips below one in the `L` samples preceding an arrival and peaks
//! at the arrival itself. A silent long window yields `R = 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, WindowSide};

/// Seismometer component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    E,
    N,
    Z,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::E, Channel::N, Channel::Z];

    pub fn index(self) -> usize {
        match self {
            Channel::E => 0,
            Channel::N => 1,
            Channel::Z => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::E => "E",
            Channel::N => "N",
            Channel::Z => "Z",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E" | "e" => Ok(Channel::E),
            "N" | "n" => Ok(Channel::N),
            "Z" | "z" => Ok(Channel::Z),
            other => Err(Error::Config(format!("unknown channel '{other}'"))),
        }
    }
}

/// One channel of a raw seismogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
    pub channel: Channel,
    pub event_id: String,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, fs: f64, channel: Channel, event_id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Size("waveform has no samples".into()));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Config(format!("sampling rate must be positive, got {fs}")));
        }
        Ok(Waveform {
            samples,
            fs,
            channel,
            event_id: event_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn with_samples(&self, samples: Vec<f64>) -> Waveform {
        Waveform {
            samples,
            fs: self.fs,
            channel: self.channel,
            event_id: self.event_id.clone(),
        }
    }
}

/// Linear-phase FIR band-pass design request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPassSpec {
    pub f_low: f64,
    pub f_high: f64,
    /// Odd, so the group delay is a whole number of samples.
    pub num_taps: usize,
}

impl BandPassSpec {
    pub const DEFAULT_TAPS: usize = 129;

    pub fn new(f_low: f64, f_high: f64) -> Self {
        BandPassSpec {
            f_low,
            f_high,
            num_taps: Self::DEFAULT_TAPS,
        }
    }

    /// The three trigger bands: 2–4, 4–8 and 8–12 Hz.
    pub fn trigger_bands() -> [BandPassSpec; 3] {
        [
            BandPassSpec::new(2.0, 4.0),
            BandPassSpec::new(4.0, 8.0),
            BandPassSpec::new(8.0, 12.0),
        ]
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        let nyquist = fs / 2.0;
        if !(self.f_low > 0.0 && self.f_low < self.f_high && self.f_high < nyquist) {
            return Err(Error::Config(format!(
                "band edges must satisfy 0 < f_low < f_high < fs/2 = {nyquist} Hz, got {}..{} Hz",
                self.f_low, self.f_high
            )));
        }
        if self.num_taps < 3 || self.num_taps % 2 == 0 {
            return Err(Error::Config(format!(
                "num_taps must be odd and at least 3, got {}",
                self.num_taps
            )));
        }
        Ok(())
    }

    /// Hamming-windowed sinc taps, scaled to unit gain at the band centre.
    pub fn design(&self, fs: f64) -> Result<Vec<f64>> {
        self.validate(fs)?;
        let n = self.num_taps;
        let centre = (n - 1) as f64 / 2.0;
        let lo = self.f_low / fs;
        let hi = self.f_high / fs;
        let window: Vec<f64> = (0..n)
            .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / (n - 1) as f64).cos())
            .collect();
        let mut taps: Vec<f64> = window
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let m = k as f64 - centre;
                w * (2.0 * hi * sinc(2.0 * hi * m) - 2.0 * lo * sinc(2.0 * lo * m))
            })
            .collect();
        // Null the residual DC response (~ -56 dB for Hamming) exactly.
        let dc = taps.iter().sum::<f64>() / window.iter().sum::<f64>();
        taps.iter_mut().zip(&window).for_each(|(h, w)| *h -= dc * w);

        let fc = 0.5 * (lo + hi);
        let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, &h)| {
            let phase = -2.0 * PI * fc * k as f64;
            (re + h * phase.cos(), im + h * phase.sin())
        });
        let gain = re.hypot(im);
        if gain <= 0.0 || !gain.is_finite() {
            return Err(Error::Numeric("band-pass design has zero centre gain".into()));
        }
        taps.iter_mut().for_each(|h| *h /= gain);
        Ok(taps)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Filters `w` with a delay-compensated linear-phase FIR; the output has the
/// input's length and treats samples outside the record as zero.
pub fn bandpass_filter(w: &Waveform, spec: &BandPassSpec) -> Result<Waveform> {
    let taps = spec.design(w.fs)?;
    Ok(w.with_samples(convolve_same(&w.samples, &taps)))
}

fn convolve_same(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len() as isize;
    let c = (taps.len() / 2) as isize;
    (0..n)
        .map(|i| {
            // y[i] = Σ_k h[k] x[i + c - k]
            let k_lo = (i + c - (n - 1)).max(0) as usize;
            let k_hi = ((i + c) as usize).min(taps.len() - 1);
            (k_lo..=k_hi).map(|k| taps[k] * x[(i + c - k as isize) as usize]).sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaLtaParams {
    /// Short window, in samples.
    pub sta: usize,
    /// Long window, in samples.
    pub lta: usize,
    pub threshold_cap: f64,
    pub threshold_frac: f64,
}

impl Default for StaLtaParams {
    /// 1 s / 30 s at 40 Hz.
    fn default() -> Self {
        StaLtaParams {
            sta: 40,
            lta: 1200,
            threshold_cap: 4.0,
            threshold_frac: 0.3,
        }
    }
}

impl StaLtaParams {
    pub fn validate(&self) -> Result<()> {
        if self.sta == 0 || self.lta <= self.sta {
            return Err(Error::Config(format!(
                "STA/LTA windows must satisfy lta > sta >= 1, got sta={} lta={}",
                self.sta, self.lta
            )));
        }
        if !(self.threshold_cap > 0.0 && self.threshold_frac > 0.0) {
            return Err(Error::Config("STA/LTA threshold constants must be positive".into()));
        }
        Ok(())
    }

    /// `min(cap, frac · max R)`.
    pub fn threshold(&self, max_ratio: f64) -> f64 {
        self.threshold_cap.min(self.threshold_frac * max_ratio)
    }
}

/// Prefix sums of squares carried in double-double precision, so that window
/// sums taken as differences stay accurate to a few ulps of the window itself.
struct SquarePrefix {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl SquarePrefix {
    fn new(y: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(y.len() + 1);
        let mut lo = Vec::with_capacity(y.len() + 1);
        let (mut s, mut c) = (0.0f64, 0.0f64);
        hi.push(0.0);
        lo.push(0.0);
        for &v in y {
            let x = v * v;
            let t = s + x;
            // two-sum error term
            let bp = t - s;
            let err = (s - (t - bp)) + (x - bp);
            s = t;
            c += err;
            hi.push(s);
            lo.push(c);
        }
        SquarePrefix { hi, lo }
    }

    /// Σ y²[a..b]
    fn window(&self, a: usize, b: usize) -> f64 {
        ((self.hi[b] - self.hi[a]) + (self.lo[b] - self.lo[a])).max(0.0)
    }
}

/// Forward-window STA/LTA ratio for `i = 0 ..= len - lta`.
pub fn sta_lta_ratio(w: &Waveform, p: &StaLtaParams) -> Result<Vec<f64>> {
    p.validate()?;
    sta_lta_samples(&w.samples, p)
}

fn sta_lta_samples(y: &[f64], p: &StaLtaParams) -> Result<Vec<f64>> {
    let n = y.len();
    if n < p.lta + 1 {
        return Err(Error::Size(format!(
            "STA/LTA needs at least {} samples, got {n}",
            p.lta + 1
        )));
    }
    let prefix = SquarePrefix::new(y);
    let (s, l) = (p.sta as f64, p.lta as f64);
    Ok((0..=n - p.lta)
        .map(|i| {
            let long = prefix.window(i, i + p.lta);
            if long > 0.0 {
                let short = prefix.window(i, i + p.sta);
                (l * short) / (s * long)
            } else {
                0.0
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerResult {
    pub onset_index: usize,
    pub per_band_onsets: [Option<usize>; 3],
    pub thresholds: [f64; 3],
    pub ratios: [Vec<f64>; 3],
}

/// First sample where `ratio` strictly exceeds the adaptive threshold.
fn first_crossing(ratio: &[f64], p: &StaLtaParams) -> (Option<usize>, f64) {
    let max = ratio.iter().copied().fold(0.0f64, f64::max);
    let delta = p.threshold(max);
    (ratio.iter().position(|&r| r > delta), delta)
}

/// Estimates the P onset as the earliest threshold crossing over three
/// band-passed copies of `w`.
pub fn align_trigger(w: &Waveform, p: &StaLtaParams, bands: &[BandPassSpec; 3]) -> Result<TriggerResult> {
    p.validate()?;
    let longest = bands.iter().map(|b| b.num_taps).max().unwrap_or(0);
    let needed = 2 * (longest + p.lta);
    if w.len() < needed {
        return Err(Error::Size(format!(
            "event {}: alignment needs at least {needed} samples, got {}",
            w.event_id,
            w.len()
        )));
    }

    let mut per_band_onsets = [None; 3];
    let mut thresholds = [0.0; 3];
    let mut ratios: [Vec<f64>; 3] = Default::default();
    for (k, band) in bands.iter().enumerate() {
        let filtered = bandpass_filter(w, band)?;
        let r = sta_lta_samples(&filtered.samples, p)?;
        let (onset, delta) = first_crossing(&r, p);
        per_band_onsets[k] = onset;
        thresholds[k] = delta;
        ratios[k] = r;
    }

    let onset_index = per_band_onsets
        .iter()
        .flatten()
        .copied()
        .min()
        .ok_or_else(|| Error::AlignmentFailed {
            event_id: w.event_id.clone(),
        })?;
    Ok(TriggerResult {
        onset_index,
        per_band_onsets,
        thresholds,
        ratios,
    })
}

/// `[y(onset - before), …, y(onset + after)]`, length `before + after + 1`.
pub fn truncate_around_onset(w: &Waveform, onset: usize, before: usize, after: usize) -> Result<Waveform> {
    if onset < before {
        return Err(Error::Truncation {
            side: WindowSide::Before,
            needed: before,
            available: onset,
        });
    }
    let available_after = w.len().saturating_sub(onset + 1);
    if onset >= w.len() || after > available_after {
        return Err(Error::Truncation {
            side: WindowSide::After,
            needed: after,
            available: available_after,
        });
    }
    Ok(w.with_samples(w.samples[onset - before..=onset + after].to_vec()))
}
