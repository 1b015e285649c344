//! Sonogram features: Hann-windowed STFT, energy spectrogram, log-spaced band
//! aggregation with per-band normalisation, and column-major flattening into a
//! sonovector.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Channel, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum WindowFn {
    #[default]
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftParams {
    pub window_len: usize,
    /// Fractional overlap between consecutive windows, in `[0, 1)`.
    pub overlap: f64,
    #[serde(default)]
    pub window_fn: WindowFn,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams {
            window_len: 256,
            overlap: 0.8,
            window_fn: WindowFn::Hann,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(Error::Config("STFT window must have at least 2 samples".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!(
                "STFT overlap must be in [0, 1), got {}",
                self.overlap
            )));
        }
        Ok(())
    }

    /// `(1 - s) · N0`; generally not an integer.
    pub fn hop(&self) -> f64 {
        (1.0 - self.overlap) * self.window_len as f64
    }

    /// `T = ceil((N - N0) / hop) + 1`.
    pub fn num_time_bins(&self, n: usize) -> Result<usize> {
        self.validate()?;
        if n < self.window_len {
            return Err(Error::Size(format!(
                "signal of {n} samples is shorter than one {}-sample window",
                self.window_len
            )));
        }
        // 1 - 0.8 is not exact in binary; keep exact quotients from rounding up.
        let q = (n - self.window_len) as f64 / self.hop();
        Ok((q - 1e-9).ceil().max(0.0) as usize + 1)
    }

    /// Start sample of window `t` (0-based): `round(hop · t)`.
    pub fn offset(&self, t: usize) -> usize {
        (self.hop() * t as f64).round() as usize
    }

    fn window(&self) -> Vec<f64> {
        let n = self.window_len;
        match self.window_fn {
            WindowFn::Hann => (0..n)
                .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / (n - 1) as f64).cos()))
                .collect(),
        }
    }
}

/// Complex STFT, `N0` frequency rows by `T` time columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Stft {
    pub values: DMatrix<Complex64>,
    pub fs: f64,
    pub window_len: usize,
}

pub fn stft(w: &Waveform, p: &StftParams) -> Result<Stft> {
    let t_bins = p.num_time_bins(w.len())?;
    let n0 = p.window_len;
    let window = p.window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n0);
    let mut values = DMatrix::<Complex64>::zeros(n0, t_bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); n0];
    for t in 0..t_bins {
        let start = p.offset(t);
        for (k, slot) in buf.iter_mut().enumerate() {
            let y = w.samples.get(start + k).copied().unwrap_or(0.0);
            *slot = Complex64::new(y * window[k], 0.0);
        }
        fft.process(&mut buf);
        values.column_mut(t).copy_from_slice(&buf);
    }
    Ok(Stft {
        values,
        fs: w.fs,
        window_len: n0,
    })
}

/// `|STFT|² / N0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: DMatrix<f64>,
    pub fs: f64,
    pub window_len: usize,
}

impl Spectrogram {
    pub fn num_freq_bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_time_bins(&self) -> usize {
        self.values.ncols()
    }

    /// Centre frequency of row `k`, in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.fs / self.window_len as f64
    }

    pub fn total_energy(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn spectrogram(s: &Stft) -> Spectrogram {
    let n0 = s.window_len as f64;
    Spectrogram {
        values: s.values.map(|z| z.norm_sqr() / n0),
        fs: s.fs,
        window_len: s.window_len,
    }
}

/// Ordered `(f_start, f_end)` frequency bands in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub bands: Vec<(f64, f64)>,
}

impl Default for BandTable {
    /// Eleven log-spaced bands up to 20 Hz; the first holds DC only.
    fn default() -> Self {
        BandTable {
            bands: vec![
                (0.0, 0.0),
                (0.157, 0.315),
                (0.315, 0.630),
                (0.630, 1.102),
                (1.102, 1.889),
                (1.889, 2.992),
                (2.992, 4.567),
                (4.567, 6.772),
                (6.772, 9.921),
                (9.921, 14.331),
                (14.331, 20.0),
            ],
        }
    }
}

impl BandTable {
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::Config("band table is empty".into()));
        }
        let nyquist = fs / 2.0;
        let mut prev_end = f64::NEG_INFINITY;
        for (i, &(a, b)) in self.bands.iter().enumerate() {
            if !(a >= 0.0 && b >= a) {
                return Err(Error::Config(format!("band #{} has edges {a}..{b}", i + 1)));
            }
            if a == b && a != 0.0 {
                return Err(Error::Config(format!(
                    "band #{} is empty; only the DC band may have zero width",
                    i + 1
                )));
            }
            if a < prev_end {
                return Err(Error::Config(format!("band #{} overlaps its predecessor", i + 1)));
            }
            if b > nyquist + 1e-12 {
                return Err(Error::Config(format!(
                    "band #{} ends at {b} Hz, above the {nyquist} Hz Nyquist limit",
                    i + 1
                )));
            }
            prev_end = b;
        }
        Ok(())
    }

    /// Fraction of each one-sided spectrogram bin credited to each band.
    ///
    /// Bin `k` is taken to cover `[f_k - Δ/2, f_k + Δ/2]` (clipped to
    /// `[0, fs/2]`) and is split across bands in proportion to overlap. The DC
    /// bin goes entirely to a zero-width band at 0 Hz when the table has one.
    pub fn bin_weights(&self, fs: f64, window_len: usize) -> Result<DMatrix<f64>> {
        self.validate(fs)?;
        let df = fs / window_len as f64;
        let nyquist = fs / 2.0;
        let n_bins = window_len / 2 + 1;
        let dc_band = self.bands.iter().position(|&(a, b)| a == 0.0 && b == 0.0);
        let mut w = DMatrix::zeros(self.len(), n_bins);
        for k in 0..n_bins {
            if k == 0 {
                if let Some(band) = dc_band {
                    w[(band, 0)] = 1.0;
                    continue;
                }
            }
            let centre = k as f64 * df;
            let lo = (centre - df / 2.0).max(0.0);
            let hi = (centre + df / 2.0).min(nyquist);
            for (j, &(a, b)) in self.bands.iter().enumerate() {
                let overlap = hi.min(b) - lo.max(a);
                if overlap > 0.0 {
                    w[(j, k)] = overlap / df;
                }
            }
        }
        Ok(w)
    }
}

/// Raw (un-normalised) energy per band and time bin.
pub fn band_energies(spec: &Spectrogram, bt: &BandTable) -> Result<DMatrix<f64>> {
    let weights = bt.bin_weights(spec.fs, spec.window_len)?;
    let one_sided = spec.values.rows(0, weights.ncols());
    Ok(&weights * one_sided)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sonogram {
    /// Bands by time bins; each non-zero row sums to one.
    pub values: DMatrix<f64>,
    pub band_table: BandTable,
}

impl Sonogram {
    pub fn num_time_bins(&self) -> usize {
        self.values.ncols()
    }

    /// Inverse of [`sonovector`].
    pub fn from_sonovector(v: &Sonovector, band_table: BandTable) -> Result<Sonogram> {
        let b = band_table.len();
        if b == 0 || v.x.len() % b != 0 {
            return Err(Error::Size(format!(
                "sonovector of length {} does not tile {b} bands",
                v.x.len()
            )));
        }
        Ok(Sonogram {
            values: DMatrix::from_column_slice(b, v.x.len() / b, &v.x),
            band_table,
        })
    }
}

pub fn sonogram(spec: &Spectrogram, bt: &BandTable) -> Result<Sonogram> {
    let mut values = band_energies(spec, bt)?;
    for mut row in values.row_iter_mut() {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row /= total;
        }
    }
    Ok(Sonogram {
        values,
        band_table: bt.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sonovector {
    pub x: Vec<f64>,
    pub source: Option<(String, Channel)>,
}

impl Sonovector {
    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Column-major flattening: `x[t·B + k] = S(k, t)`.
pub fn sonovector(s: &Sonogram) -> Sonovector {
    Sonovector {
        x: s.values.as_slice().to_vec(),
        source: None,
    }
}

/// Waveform → STFT → spectrogram → sonogram → sonovector.
pub fn extract_sonovector(w: &Waveform, p: &StftParams, bt: &BandTable) -> Result<Sonovector> {
    let spec = spectrogram(&stft(w, p)?);
    let mut v = sonovector(&sonogram(&spec, bt)?);
    v.source = Some((w.event_id.clone(), w.channel));
    Ok(v)
}
