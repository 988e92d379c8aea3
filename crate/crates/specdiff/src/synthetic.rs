//! Seeded synthetic spectrogram generation and the binomial-consistency
//! experiment.
//!
//! With i.i.d. entries, the per-sample exceedance count against a z-quantile
//! reference follows Binomial(n, 1-z) up to quantile-estimation error; the
//! experiment measures how far the observed mean count drifts from (1-z)*n.
//! The generator also builds the patch benchmark used by the end-to-end
//! evaluation tests: Gaussian noise fields where anomalous samples carry an
//! additive rectangular patch.

use std::io::Write;

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::reference::build_references;
use crate::scoring::difference_spectrogram;
use crate::spectrogram::{fnv1a64, Spectrogram};

/// Generator parameters for i.i.d. Gaussian spectrogram fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    pub entry_means: Array2<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Flat means at `mean`.
    pub fn flat(rows: usize, cols: usize, mean: f64, noise_sigma: f64, seed: u64) -> Result<Self> {
        let spec = SyntheticSpec {
            rows,
            cols,
            entry_means: Array2::from_elem((rows, cols), mean),
            noise_sigma,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidConfig("synthetic grid must be at least 1x1".into()));
        }
        if self.entry_means.dim() != (self.rows, self.cols) {
            return Err(Error::InvalidConfig("entry_means shape disagrees with rows/cols".into()));
        }
        if !(self.noise_sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Fingerprint shared by all samples drawn from this generator family.
    /// The seed is excluded so that independently seeded draws from the same
    /// family remain comparable.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::with_capacity(self.entry_means.len() * 8 + 32);
        bytes.extend_from_slice(&(self.rows as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.cols as u64).to_le_bytes());
        bytes.extend_from_slice(&self.noise_sigma.to_le_bytes());
        for &m in self.entry_means.iter() {
            bytes.extend_from_slice(&m.to_le_bytes());
        }
        format!("synth-{:016x}", fnv1a64(&bytes))
    }
}

/// Draws `count` samples: entry j of each sample is `entry_means_j` plus
/// Gaussian(0, noise_sigma) noise, i.i.d. across entries and samples, from a
/// single ChaCha8 stream seeded by `spec.seed`.
pub fn synth_generate(spec: &SyntheticSpec, count: usize) -> Result<Vec<Spectrogram>> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
    let fingerprint = spec.fingerprint();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let values = spec.entry_means.mapv(|m| m + normal.sample(&mut rng));
        out.push(Spectrogram::new(values, format!("synth-{}-{i:05}", spec.seed), fingerprint.clone()));
    }
    Ok(out)
}

/// Observed vs expected exceedance counts at one quantile level.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceReport {
    pub z: f64,
    pub n: usize,
    pub train_count: usize,
    pub test_count: usize,
    /// Mean over seeds of the per-seed mean exceedance count on the test set.
    pub mean_count: f64,
    /// The binomial expectation (1-z)*n.
    pub expected: f64,
    pub relative_deviation: f64,
    pub std_over_seeds: f64,
}

/// Runs the consistency experiment: per seed, draw `train_count + test_count`
/// fresh samples, pool the training part into references at every `z`, count
/// per-sample exceedances on the test part, and average. Reported means and
/// standard deviations are taken over seeds.
pub fn exceedance_experiment(
    train_count: usize,
    test_count: usize,
    spec: &SyntheticSpec,
    z_list: &[f64],
    split_seeds: &[u64],
) -> Result<Vec<ExceedanceReport>> {
    spec.validate()?;
    if train_count == 0 || test_count == 0 {
        return Err(Error::InvalidConfig("train and test counts must be at least 1".into()));
    }
    if split_seeds.is_empty() {
        return Err(Error::InvalidConfig("need at least one seed".into()));
    }
    for &z in z_list {
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::DomainError(format!("z {z} outside (0, 1)")));
        }
    }

    let n = spec.rows * spec.cols;
    let mut per_seed_means: Vec<Vec<f64>> = vec![Vec::with_capacity(split_seeds.len()); z_list.len()];
    for &seed in split_seeds {
        let derived = SyntheticSpec { seed: derive_seed(spec.seed, seed), ..spec.clone() };
        let samples = synth_generate(&derived, train_count + test_count)?;
        let (train, test) = samples.split_at(train_count);
        let references = build_references(train, z_list)?;
        for (zi, reference) in references.iter().enumerate() {
            let mut total = 0usize;
            for sample in test {
                total += difference_spectrogram(sample, reference)?.exceedance_count;
            }
            per_seed_means[zi].push(total as f64 / test_count as f64);
        }
    }

    Ok(z_list
        .iter()
        .zip(per_seed_means)
        .map(|(&z, means)| {
            let mean_count = means.iter().sum::<f64>() / means.len() as f64;
            let expected = (1.0 - z) * n as f64;
            let variance = means.iter().map(|m| (m - mean_count).powi(2)).sum::<f64>() / means.len() as f64;
            ExceedanceReport {
                z,
                n,
                train_count,
                test_count,
                mean_count,
                expected,
                relative_deviation: (mean_count - expected).abs() / expected,
                std_over_seeds: variance.sqrt(),
            }
        })
        .collect())
}

// SplitMix64 step; decorrelates the per-seed generator streams.
fn derive_seed(base: u64, seed: u64) -> u64 {
    let mut x = base ^ seed.wrapping_mul(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// `z,n,train_count,test_count,mean_count,expected,relative_deviation,std_over_seeds`
pub fn write_reports_csv<W: Write>(w: &mut W, reports: &[ExceedanceReport]) -> Result<()> {
    writeln!(w, "z,n,train_count,test_count,mean_count,expected,relative_deviation,std_over_seeds")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.z, r.n, r.train_count, r.test_count, r.mean_count, r.expected, r.relative_deviation, r.std_over_seeds
        )?;
    }
    Ok(())
}

/// Minimal SVG of relative deviation vs z with one standard-deviation error
/// bars (deviation std expressed relative to the expected count).
pub fn render_deviation_svg(reports: &[ExceedanceReport]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 50.0;

    let max_dev = reports
        .iter()
        .map(|r| r.relative_deviation + r.std_over_seeds / r.expected)
        .fold(0.01f64, f64::max);
    let x_of = |z: f64| ML + z * (W - ML - MR);
    let y_of = |d: f64| H - MB - (d / max_dev) * (H - MT - MB);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB,
        H - MB
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">quantile level z</text>\n",
        (ML + W - MR) / 2.0,
        H - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 {})\">relative deviation</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));
    for frac in [0.0f64, 0.5, 1.0] {
        let d = frac * max_dev;
        let y = y_of(d);
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"12\">{:.3}</text>\n",
            ML - 6.0,
            y + 4.0,
            d
        ));
    }
    for r in reports {
        let x = x_of(r.z);
        let y = y_of(r.relative_deviation);
        let half_bar = r.std_over_seeds / r.expected;
        let y_top = y_of(r.relative_deviation + half_bar);
        let y_bot = y_of((r.relative_deviation - half_bar).max(0.0));
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y_top}\" x2=\"{x}\" y2=\"{y_bot}\" stroke=\"steelblue\"/>\n"
        ));
        svg.push_str(&format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"4\" fill=\"steelblue\"/>\n"));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">z={}</text>\n",
            H - MB + 18.0,
            r.z
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Configuration of the patch benchmark: normal samples are pure noise
/// fields, anomalous samples add `amplitude` on one randomly placed
/// `patch_rows x patch_cols` rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchBenchmarkConfig {
    pub rows: usize,
    pub cols: usize,
    pub train: usize,
    pub val_normal: usize,
    pub val_anormal: usize,
    pub test_normal: usize,
    pub test_anormal: usize,
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub amplitude: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for PatchBenchmarkConfig {
    fn default() -> Self {
        PatchBenchmarkConfig {
            rows: 64,
            cols: 64,
            train: 500,
            val_normal: 100,
            val_anormal: 100,
            test_normal: 100,
            test_anormal: 100,
            patch_rows: 8,
            patch_cols: 8,
            amplitude: 1.0,
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkData {
    pub train: Vec<Spectrogram>,
    pub validation: Vec<(Spectrogram, Label)>,
    pub test: Vec<(Spectrogram, Label)>,
}

/// Generates the benchmark deterministically from the config seed.
pub fn generate_patch_benchmark(cfg: &PatchBenchmarkConfig) -> Result<BenchmarkData> {
    if cfg.patch_rows > cfg.rows || cfg.patch_cols > cfg.cols {
        return Err(Error::InvalidConfig("patch does not fit the grid".into()));
    }
    let spec = SyntheticSpec::flat(cfg.rows, cfg.cols, 0.0, cfg.noise_sigma, cfg.seed)?;
    let total = cfg.train + cfg.val_normal + cfg.val_anormal + cfg.test_normal + cfg.test_anormal;
    let mut samples = synth_generate(&spec, total)?;

    // Patch placement uses its own stream so sample noise stays aligned with
    // the plain generator.
    let mut patch_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xA707));
    let mut take = |n: usize| samples.drain(..n).collect::<Vec<_>>();
    let train = take(cfg.train);
    let val_normal = take(cfg.val_normal);
    let mut val_anormal = take(cfg.val_anormal);
    let test_normal = take(cfg.test_normal);
    let mut test_anormal = take(cfg.test_anormal);

    for s in val_anormal.iter_mut().chain(test_anormal.iter_mut()) {
        let r0 = (patch_rng.next_u64() % (cfg.rows - cfg.patch_rows + 1) as u64) as usize;
        let c0 = (patch_rng.next_u64() % (cfg.cols - cfg.patch_cols + 1) as u64) as usize;
        for r in r0..r0 + cfg.patch_rows {
            for c in c0..c0 + cfg.patch_cols {
                s.values[[r, c]] += cfg.amplitude;
            }
        }
    }

    let with = |v: Vec<Spectrogram>, l: Label| v.into_iter().map(move |s| (s, l));
    Ok(BenchmarkData {
        train,
        validation: with(val_normal, Label::Normal).chain(with(val_anormal, Label::Anormal)).collect(),
        test: with(test_normal, Label::Normal).chain(with(test_anormal, Label::Anormal)).collect(),
    })
}
