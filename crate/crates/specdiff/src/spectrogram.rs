//! STFT magnitude spectrograms and dB conversion.
//!
//! The preprocessing chain is `stft_magnitude` followed by `amplitude_to_db`.
//! Defaults reproduce the common audio-tooling conventions: window size 2048,
//! hop 512 (a quarter window), periodic Hann window, centered frames with
//! zero padding, and dB conversion with `ref=1.0`, `amin=1e-5`, `top_db=80`.

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    /// Zero padding on both ends of the signal.
    Constant,
}

/// Short-time Fourier transform parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop_length: usize,
    pub window: WindowKind,
    pub center: bool,
    pub pad_mode: PadMode,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            n_fft: 2048,
            hop_length: 512,
            window: WindowKind::Hann,
            center: true,
            pad_mode: PadMode::Constant,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.n_fft % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "n_fft must be positive and even, got {}",
                self.n_fft
            )));
        }
        if self.hop_length == 0 || self.hop_length > self.n_fft {
            return Err(Error::InvalidConfig(format!(
                "hop_length must satisfy 0 < hop <= n_fft, got {}",
                self.hop_length
            )));
        }
        Ok(())
    }
}

/// Amplitude-to-dB conversion parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbConfig {
    /// Amplitude reference; 0 dB corresponds to this value.
    pub ref_value: f64,
    /// Clamp floor applied to amplitudes (and to `ref_value`) before the log.
    pub amin: f64,
    /// Optional dynamic-range limit: entries are clamped to `max - top_db`.
    pub top_db: Option<f64>,
}

impl Default for DbConfig {
    fn default() -> Self {
        DbConfig {
            ref_value: 1.0,
            amin: 1e-5,
            top_db: Some(80.0),
        }
    }
}

impl DbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ref_value > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "ref_value must be positive, got {}",
                self.ref_value
            )));
        }
        if !(self.amin > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "amin must be positive, got {}",
                self.amin
            )));
        }
        if let Some(t) = self.top_db {
            if !(t >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "top_db must be non-negative, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// A dB-scale magnitude spectrogram: rows are frequency bins, columns are
/// time frames. `fingerprint` identifies the preprocessing configuration so
/// that mismatched references and samples are rejected at score time.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    pub source_id: String,
    pub fingerprint: String,
}

impl Spectrogram {
    pub fn new(values: Array2<f64>, source_id: impl Into<String>, fingerprint: impl Into<String>) -> Self {
        Spectrogram {
            values,
            source_id: source_id.into(),
            fingerprint: fingerprint.into(),
        }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// Total number of entries n = rows * cols.
    pub fn entry_count(&self) -> usize {
        self.values.len()
    }
}

/// Periodic Hann window: `w[k] = 0.5 * (1 - cos(2*pi*k/n))`, k = 0..n-1.
pub fn hann_window(n: usize) -> Vec<f64> {
    assert!(n >= 1, "window length must be at least 1");
    (0..n)
        .map(|k| 0.5 * (1.0 - (std::f64::consts::TAU * k as f64 / n as f64).cos()))
        .collect()
}

/// Windowed STFT magnitudes, `n_fft/2 + 1` frequency rows.
///
/// With `center = true` the signal is zero-padded by `n_fft/2` on both ends
/// and frame `t` covers padded samples `[t*hop, t*hop + n_fft)`, giving
/// `1 + floor(len/hop)` frames.
pub fn stft_magnitude(signal: &[f64], cfg: &StftConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    if signal.is_empty() {
        return Err(Error::SignalTooShort("signal is empty".into()));
    }
    let n_fft = cfg.n_fft;
    let hop = cfg.hop_length;

    let (padded, n_frames) = if cfg.center {
        let mut p = vec![0.0f64; signal.len() + n_fft];
        p[n_fft / 2..n_fft / 2 + signal.len()].copy_from_slice(signal);
        (p, 1 + signal.len() / hop)
    } else {
        if signal.len() < n_fft {
            return Err(Error::SignalTooShort(format!(
                "uncentered STFT needs at least n_fft = {} samples, got {}",
                n_fft,
                signal.len()
            )));
        }
        (signal.to_vec(), 1 + (signal.len() - n_fft) / hop)
    };

    let window = hann_window(n_fft);
    let rows = n_fft / 2 + 1;
    let mut out = Array2::zeros((rows, n_frames));

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut frame = vec![Complex::new(0.0, 0.0); n_fft];
    for t in 0..n_frames {
        let start = t * hop;
        for k in 0..n_fft {
            frame[k] = Complex::new(padded[start + k] * window[k], 0.0);
        }
        fft.process(&mut frame);
        for f in 0..rows {
            out[[f, t]] = frame[f].norm();
        }
    }
    Ok(out)
}

/// `d = 20*log10(max(amin, a)) - 20*log10(max(amin, ref))`, then an optional
/// clamp to `global_max - top_db`. Monotone in `a` when `top_db` is off.
pub fn amplitude_to_db(magnitudes: &Array2<f64>, cfg: &DbConfig) -> Array2<f64> {
    let ref_db = 20.0 * cfg.ref_value.max(cfg.amin).log10();
    let mut out = magnitudes.mapv(|a| 20.0 * a.max(cfg.amin).log10() - ref_db);
    if let Some(top) = cfg.top_db {
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = max - top;
        out.mapv_inplace(|d| d.max(floor));
    }
    out
}

/// Full preprocessing chain with provenance metadata attached.
pub fn compute_spectrogram(
    signal: &[f64],
    source_id: &str,
    stft_cfg: &StftConfig,
    db_cfg: &DbConfig,
) -> Result<Spectrogram> {
    db_cfg.validate()?;
    let mag = stft_magnitude(signal, stft_cfg)?;
    let db = amplitude_to_db(&mag, db_cfg);
    Ok(Spectrogram::new(db, source_id, config_fingerprint(stft_cfg, db_cfg)))
}

/// Deterministic fingerprint of the preprocessing configuration.
///
/// FNV-1a over a canonical parameter string; stable across platforms and
/// releases, unlike `std`'s default hasher.
pub fn config_fingerprint(stft: &StftConfig, db: &DbConfig) -> String {
    let canonical = format!(
        "stft:n_fft={},hop={},window={:?},center={},pad={:?}|db:ref={},amin={},top_db={}",
        stft.n_fft,
        stft.hop_length,
        stft.window,
        stft.center,
        stft.pad_mode,
        db.ref_value,
        db.amin,
        match db.top_db {
            Some(t) => t.to_string(),
            None => "none".into(),
        }
    );
    format!("{:016x}", fnv1a64(canonical.as_bytes()))
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
