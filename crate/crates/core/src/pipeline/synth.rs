//! Synthetic three-component events with controlled spectral content.
//!
//! Each channel is unit-variance white background noise plus a burst of
//! spectrally shaped noise with a 1 s sin² rise and an exponential decay.
//! The burst's energy per frequency band is the sum of a carrier profile
//! shared by every event, which keeps all trigger bands excited, and the
//! event's class profile. Each channel independently loses the class part
//! with probability `channel_dropout`, and every band is scaled per channel
//! by a log-normal factor.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::catalog::{CatalogEntry, EventRecord, EventType};
use crate::error::{Error, Result};
use crate::features::BandTable;
use crate::par;
use crate::signal::{Channel, Waveform};

/// One population of events sharing a band profile and source region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventClass {
    /// Label, written to the catalog's `cluster` field.
    pub name: String,
    pub event_type: EventType,
    pub count: usize,
    /// Relative burst energy per band of the band table.
    pub profile: Vec<f64>,
    pub lat: f64,
    pub lon: f64,
    /// Half-width of the uniform location scatter, degrees.
    pub location_spread: f64,
}

/// Replaces class profiles by a Gaussian bump over band index whose centre
/// moves with a latent position `u ∈ [0, 1]`; latitude and longitude move
/// linearly with the same `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationDrift {
    /// Bump centre at `u = 0` and `u = 1`, as zero-based band indices.
    pub band_from: f64,
    pub band_to: f64,
    /// Bump standard deviation in bands.
    pub width: f64,
    pub lat: (f64, f64),
    pub lon: (f64, f64),
}

impl LocationDrift {
    pub fn profile(&self, u: f64, bands: usize) -> Vec<f64> {
        let centre = self.band_from + u * (self.band_to - self.band_from);
        (0..bands)
            .map(|b| (-0.5 * ((b as f64 - centre) / self.width).powi(2)).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: Vec<EventClass>,
    pub fs: f64,
    pub n_samples: usize,
    /// Inclusive range of true onsets.
    pub onset_range: (usize, usize),
    /// Burst-to-background SNR range in dB, drawn uniformly per event.
    pub snr_db: (f64, f64),
    /// Band energies added to every event.
    pub carrier: Vec<f64>,
    /// Probability that a channel of an event carries only the carrier.
    pub channel_dropout: f64,
    /// Standard deviation of the per-event, per-channel, per-band
    /// log-amplitude factor.
    pub channel_jitter: f64,
    /// Range of the burst amplitude decay constant in samples, drawn
    /// uniformly per event.
    pub decay: (f64, f64),
    /// Burst rise time, samples.
    pub rise: usize,
    #[serde(default)]
    pub drift: Option<LocationDrift>,
    pub seed: u64,
}

/// Samples over which the burst power is referenced to the SNR.
const SNR_WINDOW: usize = 400;

/// Carrier bands: #7, #8 and #10. Together they cover the 2-4, 4-8 and
/// 8-12 Hz detection bands.
pub const CARRIER_BANDS: [usize; 3] = [6, 7, 9];

const CARRIER_LEVEL: f64 = 0.3;

pub fn carrier_profile() -> Vec<f64> {
    (0..11)
        .map(|b| if CARRIER_BANDS.contains(&b) { CARRIER_LEVEL } else { 0.0 })
        .collect()
}

/// Unit energy in band `dominant` (zero-based), nothing elsewhere.
pub fn peaked_profile(dominant: usize) -> Vec<f64> {
    band_set_profile(&[dominant])
}

/// Unit energy in each listed band (zero-based), nothing elsewhere.
pub fn band_set_profile(bands: &[usize]) -> Vec<f64> {
    (0..11).map(|b| if bands.contains(&b) { 1.0 } else { 0.0 }).collect()
}

fn class(name: &str, event_type: EventType, count: usize, profile: Vec<f64>, lat: f64, lon: f64) -> EventClass {
    EventClass {
        name: name.into(),
        event_type,
        count,
        profile,
        lat,
        lon,
        location_spread: 0.05,
    }
}

/// Class bands of the five quarry clusters, zero-based.
const QUARRY_BANDS: [usize; 5] = [3, 4, 5, 8, 10];

impl SyntheticSpec {
    fn base(classes: Vec<EventClass>, seed: u64) -> Self {
        SyntheticSpec {
            classes,
            fs: 40.0,
            n_samples: 6000,
            onset_range: (1250, 1400),
            snr_db: (15.0, 25.0),
            carrier: carrier_profile(),
            channel_dropout: 0.0,
            channel_jitter: 0.1,
            decay: (160.0, 160.0),
            rise: 40,
            drift: None,
            seed,
        }
    }

    /// Broadband events with onsets spread over `[1100, 1400]`.
    pub fn alignment(n: usize, seed: u64) -> Self {
        let flat: Vec<f64> = (0..11).map(|b| if (5..=9).contains(&b) { 1.0 } else { 0.0 }).collect();
        let mut s = Self::base(vec![class("burst", EventType::Earthquake, n, flat, 31.0, 35.0)], seed);
        s.carrier = vec![0.0; 11];
        s.onset_range = (1100, 1400);
        s
    }

    /// Earthquakes with class energy in band #6 against explosions with class
    /// energy in band #9. Channel dropout makes every channel miss the class
    /// signature on some events, so the channels complement each other.
    pub fn discrimination(earthquakes: usize, explosions: usize, seed: u64) -> Self {
        let mut s = Self::base(
            vec![
                class(
                    "earthquake",
                    EventType::Earthquake,
                    earthquakes,
                    peaked_profile(5),
                    31.5,
                    35.5,
                ),
                class(
                    "explosion",
                    EventType::Explosion,
                    explosions,
                    peaked_profile(8),
                    30.0,
                    35.0,
                ),
            ],
            seed,
        );
        s.channel_dropout = 0.25;
        s
    }

    /// Five quarries, each with its own class band (#4, #5, #6, #9, #11).
    pub fn quarry(per_cluster: usize, seed: u64) -> Self {
        let sites = [(30.2, 35.1), (30.6, 35.0), (31.0, 35.2), (29.8, 35.4), (30.4, 35.6)];
        let classes = sites
            .iter()
            .enumerate()
            .map(|(q, &(lat, lon))| {
                class(
                    &format!("quarry{}", q + 1),
                    EventType::Explosion,
                    per_cluster,
                    peaked_profile(QUARRY_BANDS[q]),
                    lat,
                    lon,
                )
            })
            .collect();
        let mut s = Self::base(classes, seed);
        s.channel_dropout = 0.1;
        s
    }

    /// Events whose class energy moves from band #2 to band #9 as the source
    /// moves along a line.
    pub fn location_drift(n: usize, seed: u64) -> Self {
        let mut s = Self::base(
            vec![class("drift", EventType::Explosion, n, vec![1.0; 11], 30.0, 35.0)],
            seed,
        );
        s.drift = Some(LocationDrift {
            band_from: 1.0,
            band_to: 8.0,
            width: 0.7,
            lat: (29.8, 31.2),
            lon: (34.9, 35.6),
        });
        s
    }

    /// `normal` events with class energy in band #6, all at 20 dB, plus
    /// `outliers` events with energy spread over other bands.
    pub fn anomaly(normal: usize, outliers: usize, seed: u64) -> Self {
        let mut classes = vec![class(
            "normal",
            EventType::Explosion,
            normal,
            peaked_profile(5),
            30.5,
            35.2,
        )];
        let odd_bands: [&[usize]; 4] = [&[1, 2, 3, 4], &[8, 10], &[2, 4, 8, 10], &[3, 8]];
        for o in 0..outliers {
            let mut c = class(
                &format!("outlier{}", o + 1),
                EventType::Explosion,
                1,
                band_set_profile(odd_bands[o % odd_bands.len()]),
                29.9 + 0.3 * o as f64,
                35.3,
            );
            c.location_spread = 0.0;
            classes.push(c);
        }
        let mut s = Self::base(classes, seed);
        s.snr_db = (20.0, 20.0);
        s
    }

    pub fn total_events(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn validate(&self, bands: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.classes.is_empty() || self.total_events() == 0 {
            return bad("synthetic spec has no events".into());
        }
        for c in &self.classes {
            if c.profile.len() != bands {
                return bad(format!(
                    "class {} profile has {} bands, expected {bands}",
                    c.name,
                    c.profile.len()
                ));
            }
            if c.profile.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
                return bad(format!("class {} profile has negative or non-finite entries", c.name));
            }
            let silent = c.profile.iter().zip(&self.carrier).all(|(&p, &q)| p == 0.0 && q == 0.0);
            if self.drift.is_none() && silent {
                return bad(format!("class {} has no burst energy in any band", c.name));
            }
            if !(-90.0..=90.0).contains(&c.lat) || !(-180.0..=180.0).contains(&c.lon) {
                return bad(format!("class {} location out of range", c.name));
            }
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return bad(format!("invalid sampling rate {}", self.fs));
        }
        let (lo, hi) = self.onset_range;
        if lo == 0 || lo > hi || hi + SNR_WINDOW >= self.n_samples {
            return bad(format!(
                "onset range {lo}..={hi} does not fit {} samples",
                self.n_samples
            ));
        }
        let (s0, s1) = self.snr_db;
        if !(s0.is_finite() && s1.is_finite() && s0 <= s1) {
            return bad(format!("invalid SNR range ({s0}, {s1})"));
        }
        if self.carrier.len() != bands || self.carrier.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return bad(format!("carrier must have {bands} non-negative entries"));
        }
        if !(0.0..=1.0).contains(&self.channel_dropout) {
            return bad(format!(
                "channel dropout must be a probability, got {}",
                self.channel_dropout
            ));
        }
        let (d0, d1) = self.decay;
        if !(self.channel_jitter >= 0.0 && d0 > 0.0 && d0 <= d1 && d1.is_finite() && self.rise > 0) {
            return bad("jitter must be non-negative, decay and rise positive".into());
        }
        if let Some(d) = &self.drift {
            if !(d.width > 0.0) {
                return bad("drift width must be positive".into());
            }
        }
        Ok(())
    }
}

/// Band index of every one-sided FFT bin of an `n`-point transform, or
/// `None` for bins outside every band.
fn bin_bands(bt: &BandTable, fs: f64, n: usize) -> Vec<Option<usize>> {
    let last = bt.len() - 1;
    (0..=n / 2)
        .map(|k| {
            let f = k as f64 * fs / n as f64;
            bt.bands.iter().enumerate().position(|(b, &(lo, hi))| {
                if lo == hi {
                    f == lo
                } else {
                    f >= lo && (f < hi || (b == last && f <= hi))
                }
            })
        })
        .collect()
}

/// Zero-mean noise whose energy per band is proportional to `profile`.
fn shaped_noise(
    rng: &mut ChaCha8Rng,
    profile: &[f64],
    bins: &[Option<usize>],
    fft: &(
        std::sync::Arc<dyn rustfft::Fft<f64>>,
        std::sync::Arc<dyn rustfft::Fft<f64>>,
    ),
    n: usize,
) -> Vec<f64> {
    let mut counts = vec![0usize; profile.len()];
    for b in bins.iter().flatten() {
        counts[*b] += 1;
    }
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    fft.0.process(&mut buf);
    for k in 0..n {
        let folded = k.min(n - k);
        let gain = match bins[folded] {
            Some(b) if k != 0 => (profile[b] / counts[b] as f64).sqrt(),
            _ => 0.0,
        };
        buf[k] *= gain;
    }
    fft.1.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Deterministic per-event generator; event `g` uses ChaCha stream `g`.
fn event_rng(seed: u64, g: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(g as u64);
    rng
}

pub fn synthesize(spec: &SyntheticSpec, bt: &BandTable) -> Result<Vec<EventRecord>> {
    spec.validate(bt.len())?;
    bt.validate(spec.fs)?;
    let n = spec.n_samples;
    let bins = bin_bands(bt, spec.fs, n);
    let mut planner = FftPlanner::new();
    let fft = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));

    let mut plan: Vec<(&EventClass, usize)> = Vec::new();
    for c in &spec.classes {
        plan.extend((0..c.count).map(|i| (c, i)));
    }
    let records: Vec<Result<EventRecord>> = par::map_range(plan.len(), |g| {
        let (class, i) = plan[g];
        let mut rng = event_rng(spec.seed, g);
        let onset = rng.random_range(spec.onset_range.0..=spec.onset_range.1);
        let snr = if spec.snr_db.0 < spec.snr_db.1 {
            rng.random_range(spec.snr_db.0..spec.snr_db.1)
        } else {
            spec.snr_db.0
        };
        let decay = if spec.decay.0 < spec.decay.1 {
            rng.random_range(spec.decay.0..spec.decay.1)
        } else {
            spec.decay.0
        };
        let (profile, lat, lon) = match &spec.drift {
            Some(d) => {
                let u: f64 = rng.random();
                (
                    d.profile(u, bt.len()),
                    d.lat.0 + u * (d.lat.1 - d.lat.0),
                    d.lon.0 + u * (d.lon.1 - d.lon.0),
                )
            }
            None => {
                let s = class.location_spread;
                let jitter = |rng: &mut ChaCha8Rng| if s > 0.0 { rng.random_range(-s..s) } else { 0.0 };
                (
                    class.profile.clone(),
                    class.lat + jitter(&mut rng),
                    class.lon + jitter(&mut rng),
                )
            }
        };
        let envelope: Vec<f64> = (0..n)
            .map(|k| {
                if k < onset {
                    return 0.0;
                }
                let t = (k - onset) as f64;
                let rise = if t < spec.rise as f64 {
                    (0.5 * PI * t / spec.rise as f64).sin().powi(2)
                } else {
                    1.0
                };
                rise * (-t / decay).exp()
            })
            .collect();

        let id = format!("{}_{:04}", class.name, i + 1);
        let channels = Channel::ALL.map(|c| {
            let keep = rng.random::<f64>() >= spec.channel_dropout;
            let p: Vec<f64> = profile
                .iter()
                .zip(&spec.carrier)
                .map(|(&e, &q)| {
                    let e = if keep { e + q } else { q };
                    e * (spec.channel_jitter * rng.sample::<f64, _>(StandardNormal)).exp()
                })
                .collect();
            let mut burst = shaped_noise(&mut rng, &p, &bins, &fft, n);
            for (b, e) in burst.iter_mut().zip(&envelope) {
                *b *= e;
            }
            let power = burst[onset..onset + SNR_WINDOW].iter().map(|v| v * v).sum::<f64>() / SNR_WINDOW as f64;
            let gain = if power > 0.0 {
                (10f64.powf(snr / 10.0) / power).sqrt()
            } else {
                0.0
            };
            let samples: Vec<f64> = burst
                .iter()
                .map(|&b| (gain * b + rng.sample::<f64, _>(StandardNormal)) as f32 as f64)
                .collect();
            Waveform::new(samples, spec.fs, c, id.clone())
        });
        let [e, nn, z] = channels;
        let entry = CatalogEntry {
            event_id: id.clone(),
            event_type: class.event_type,
            lat,
            lon,
            cluster: Some(class.name.clone()),
            fs: spec.fs,
            n_samples: n,
            onset: Some(onset),
        };
        EventRecord::new(entry, [e?, nn?, z?])
    });
    records.into_iter().collect()
}
