//! Difference spectrograms, the four deviation metrics, and explanation
//! exports.
//!
//! The difference spectrogram `D = max(0, W - Q)` is both the scoring input
//! and the explainability artifact: its positive entries mark exactly where a
//! test spectrogram rises above the reference.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::formats;
use crate::reference::ReferenceSpectrogram;
use crate::spectrogram::Spectrogram;

/// Deviation metrics, in tie-breaking order for the grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Counting,
    Sum,
    Mean,
    Binomial,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Counting, Metric::Sum, Metric::Mean, Metric::Binomial];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Counting => "counting",
            Metric::Sum => "sum",
            Metric::Mean => "mean",
            Metric::Binomial => "binomial",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "counting" | "count" => Ok(Metric::Counting),
            "sum" => Ok(Metric::Sum),
            "mean" => Ok(Metric::Mean),
            "binomial" => Ok(Metric::Binomial),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }
}

/// Entry-wise positive part of test minus reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSpectrogram {
    pub values: Array2<f64>,
    /// Number of strictly positive entries.
    pub exceedance_count: usize,
    pub source_id: String,
    /// Quantile level of the reference this difference was taken against.
    pub z: f64,
}

impl DifferenceSpectrogram {
    pub fn entry_count(&self) -> usize {
        self.values.len()
    }
}

/// A scalar anomaly score; larger means more anomalous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScore {
    pub metric: Metric,
    pub value: f64,
    /// Exceedance count of the underlying difference spectrogram.
    pub raw_k: usize,
    /// Total entry count n.
    pub n: usize,
    /// The literal binomial log PMF `ln[C(n,k) (1-z)^k z^(n-k)]`; only set by
    /// the binomial metric. Kept alongside the survival-based `value` because
    /// the PMF itself is not monotone in k.
    pub log_pmf: Option<f64>,
}

/// `d_j = max(0, w_j - q_j)`, with the strict-inequality exceedance count.
pub fn difference_spectrogram(w: &Spectrogram, q: &ReferenceSpectrogram) -> Result<DifferenceSpectrogram> {
    if w.values.dim() != q.values.dim() {
        return Err(Error::ShapeMismatch(format!(
            "sample {} is {}x{} but the reference is {}x{}",
            w.source_id,
            w.rows(),
            w.cols(),
            q.rows(),
            q.cols()
        )));
    }
    if w.fingerprint != q.fingerprint {
        return Err(Error::ConfigMismatch(format!(
            "sample {} has fingerprint {} but the reference was built with {}",
            w.source_id, w.fingerprint, q.fingerprint
        )));
    }
    let mut count = 0usize;
    let values = ndarray::Zip::from(&w.values).and(&q.values).map_collect(|&wv, &qv| {
        let d = (wv - qv).max(0.0);
        if d > 0.0 {
            count += 1;
        }
        d
    });
    Ok(DifferenceSpectrogram {
        values,
        exceedance_count: count,
        source_id: w.source_id.clone(),
        z: q.z,
    })
}

/// Counting metric: the exceedance count k itself.
pub fn score_counting(d: &DifferenceSpectrogram) -> AnomalyScore {
    AnomalyScore {
        metric: Metric::Counting,
        value: d.exceedance_count as f64,
        raw_k: d.exceedance_count,
        n: d.entry_count(),
        log_pmf: None,
    }
}

/// Sum metric: total positive deviation.
pub fn score_sum(d: &DifferenceSpectrogram) -> AnomalyScore {
    AnomalyScore {
        metric: Metric::Sum,
        value: d.values.iter().sum(),
        raw_k: d.exceedance_count,
        n: d.entry_count(),
        log_pmf: None,
    }
}

/// Mean metric: average positive deviation, defined as 0 when k = 0 (an
/// empty exceedance set is maximally normal).
pub fn score_mean(d: &DifferenceSpectrogram) -> AnomalyScore {
    let k = d.exceedance_count;
    let sum: f64 = d.values.iter().sum();
    AnomalyScore {
        metric: Metric::Mean,
        value: if k > 0 { sum / k as f64 } else { 0.0 },
        raw_k: k,
        n: d.entry_count(),
        log_pmf: None,
    }
}

/// Binomial metric.
///
/// Under the reference model, k ~ Binomial(n, 1-z). The reported value is the
/// upper-tail score `-ln P(K >= k)`, which is monotone non-decreasing in k.
/// The literal PMF `C(n,k) (1-z)^k z^(n-k)` is retained as `log_pmf`; used
/// raw it would score under-exceeding samples as anomalous, since the PMF is
/// small at both tails.
pub fn score_binomial(k: usize, n: usize, z: f64) -> Result<AnomalyScore> {
    if k > n {
        return Err(Error::DomainError(format!("exceedance count {k} exceeds entry count {n}")));
    }
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::DomainError(format!(
            "binomial metric needs 0 < z < 1, reference has z = {z}"
        )));
    }
    let p = 1.0 - z;
    let log_pmf = binomial::log_pmf(k as u64, n as u64, p);
    let value = -binomial::log_survival(k as u64, n as u64, p);
    Ok(AnomalyScore {
        metric: Metric::Binomial,
        value,
        raw_k: k,
        n,
        log_pmf: Some(log_pmf),
    })
}

/// Difference-then-metric composition.
pub fn score(w: &Spectrogram, q: &ReferenceSpectrogram, metric: Metric) -> Result<AnomalyScore> {
    let d = difference_spectrogram(w, q)?;
    score_difference(&d, metric)
}

pub fn score_difference(d: &DifferenceSpectrogram, metric: Metric) -> Result<AnomalyScore> {
    match metric {
        Metric::Counting => Ok(score_counting(d)),
        Metric::Sum => Ok(score_sum(d)),
        Metric::Mean => Ok(score_mean(d)),
        Metric::Binomial => score_binomial(d.exceedance_count, d.entry_count(), d.z),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplanationFormat {
    /// SPEC1 container holding the difference matrix.
    Matrix,
    /// 16-bit PGM image, frequency bin 0 at the bottom.
    Image,
}

/// Writes the explainability artifact for a difference spectrogram.
pub fn export_explanation(d: &DifferenceSpectrogram, path: &Path, format: ExplanationFormat) -> Result<()> {
    match format {
        ExplanationFormat::Matrix => {
            let as_spec = Spectrogram::new(d.values.clone(), d.source_id.clone(), format!("diff-z{}", d.z));
            formats::save_spectrogram(path, &as_spec)
        }
        ExplanationFormat::Image => formats::save_pgm16(path, &d.values),
    }
}

/// One CSV row per (sample, metric): `path,metric,value,k,n,z,log_pmf`.
pub fn write_scores_csv<W: Write>(w: &mut W, rows: &[(String, AnomalyScore, f64)]) -> Result<()> {
    writeln!(w, "path,metric,value,k,n,z,log_pmf")?;
    for (path, score, z) in rows {
        let log_pmf = score.log_pmf.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            csv_field(path),
            score.metric,
            score.value,
            score.raw_k,
            score.n,
            z,
            log_pmf
        )?;
    }
    Ok(())
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
