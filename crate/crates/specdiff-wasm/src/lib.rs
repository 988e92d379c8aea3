//! Interactive browser demo: build a quantile reference from synthetic
//! machine-hum spectrograms, score fresh samples against it at an adjustable
//! quantile level, and probe the binomial consistency of exceedance counts.
//!
//! The wasm surface is three operations on a [`Demo`]:
//!
//! - `set_quantile(z)` rebuilds the reference,
//! - `new_sample(anomalous, amplitude)` draws and scores a test spectrogram,
//! - `exceedance_curve_json()` runs a small consistency experiment.
//!
//! Heatmaps are rendered to RGBA here; the page only blits them.

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use specdiff::reference::build_reference;
use specdiff::scoring::{difference_spectrogram, score_difference, DifferenceSpectrogram, Metric};
use specdiff::synthetic::{exceedance_experiment, synth_generate, SyntheticSpec};
use specdiff::{ReferenceSpectrogram, Spectrogram};

const ROWS: usize = 96;
const COLS: usize = 128;
const TRAIN_COUNT: usize = 64;
const NOISE_SIGMA: f64 = 3.0;

#[wasm_bindgen]
pub struct Demo {
    means: Array2<f64>,
    train: Vec<Spectrogram>,
    reference: ReferenceSpectrogram,
    sample: Spectrogram,
    difference: DifferenceSpectrogram,
    sample_rng: ChaCha8Rng,
    /// Shared color range for sample and reference heatmaps.
    lo: f64,
    hi: f64,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the training corpus and an initial z = 0.9 reference.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Demo {
        let means = hum_means();
        let spec = SyntheticSpec {
            rows: ROWS,
            cols: COLS,
            entry_means: means.clone(),
            noise_sigma: NOISE_SIGMA,
            seed: seed as u64,
        };
        let train = synth_generate(&spec, TRAIN_COUNT).expect("valid generator");
        let reference = build_reference(&train, 0.9).expect("non-empty training set");

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &train {
            for &v in s.values.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }

        let mut sample_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5A17_BEEF);
        let sample = draw_sample(&means, &mut sample_rng, &train[0].fingerprint, false, 0.0);
        let difference = difference_spectrogram(&sample, &reference).expect("same shape");
        Demo { means, train, reference, sample, difference, sample_rng, lo, hi }
    }

    pub fn rows(&self) -> usize {
        ROWS
    }

    pub fn cols(&self) -> usize {
        COLS
    }

    pub fn quantile(&self) -> f64 {
        self.reference.z
    }

    /// Rebuilds the reference at a new quantile level and rescores the
    /// current sample.
    pub fn set_quantile(&mut self, z: f64) {
        let z = z.clamp(0.0, 1.0);
        self.reference = build_reference(&self.train, z).expect("training set unchanged");
        self.difference = difference_spectrogram(&self.sample, &self.reference).expect("same shape");
    }

    /// Draws a fresh sample; anomalous samples carry an additive excitation
    /// block of the given amplitude (dB) at a random position.
    pub fn new_sample(&mut self, anomalous: bool, amplitude: f64) {
        self.sample = draw_sample(
            &self.means,
            &mut self.sample_rng,
            &self.train[0].fingerprint,
            anomalous,
            amplitude,
        );
        self.difference = difference_spectrogram(&self.sample, &self.reference).expect("same shape");
    }

    /// RGBA heatmap of the current sample (frequency bin 0 at the bottom).
    pub fn sample_pixels(&self) -> Vec<u8> {
        render_heatmap(&self.sample.values, self.lo, self.hi, viridis)
    }

    /// RGBA heatmap of the reference, on the same color scale as samples.
    pub fn reference_pixels(&self) -> Vec<u8> {
        render_heatmap(&self.reference.values, self.lo, self.hi, viridis)
    }

    /// RGBA heatmap of the difference spectrogram (black = no exceedance).
    pub fn difference_pixels(&self) -> Vec<u8> {
        let max = self.difference.values.iter().copied().fold(0.0f64, f64::max);
        render_heatmap(&self.difference.values, 0.0, max.max(1e-9), hot)
    }

    /// The four scores of the current sample as JSON.
    pub fn scores_json(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            metric: String,
            value: f64,
            k: usize,
            n: usize,
            log_pmf: Option<f64>,
        }
        let rows: Vec<Row> = Metric::ALL
            .iter()
            .map(|&m| {
                let s = score_difference(&self.difference, m).expect("demo z is in (0,1)");
                Row {
                    metric: m.to_string(),
                    value: s.value,
                    k: s.raw_k,
                    n: s.n,
                    log_pmf: s.log_pmf,
                }
            })
            .collect();
        serde_json::to_string(&rows).expect("plain struct")
    }

    /// Runs a small binomial-consistency experiment and returns
    /// `[{z, relative_deviation, rel_std}]` for plotting. Train count governs
    /// the quantile-estimation bias, so the curve shifts as it changes.
    pub fn exceedance_curve_json(&self, train_count: usize, seed: u32) -> String {
        #[derive(Serialize)]
        struct Point {
            z: f64,
            relative_deviation: f64,
            rel_std: f64,
        }
        let spec = SyntheticSpec::flat(40, 40, 0.0, 1.0, seed as u64).expect("valid generator");
        let z_list = [0.5, 0.7, 0.9, 0.95, 0.99];
        let reports = exceedance_experiment(train_count.clamp(8, 4000), 100, &spec, &z_list, &[0, 1, 2])
            .expect("valid experiment");
        let points: Vec<Point> = reports
            .iter()
            .map(|r| Point {
                z: r.z,
                relative_deviation: r.relative_deviation,
                rel_std: r.std_over_seeds / r.expected,
            })
            .collect();
        serde_json::to_string(&points).expect("plain struct")
    }
}

/// Stationary "machine hum" mean field: a sloped noise floor plus decaying
/// harmonic ridges with a slow time ripple.
fn hum_means() -> Array2<f64> {
    Array2::from_shape_fn((ROWS, COLS), |(r, c)| {
        let mut v = -72.0 + 10.0 * (1.0 - r as f64 / ROWS as f64);
        for (k, &bin) in [10usize, 20, 30, 40, 60, 80].iter().enumerate() {
            let strength = 46.0 / (k as f64 + 1.0).sqrt();
            let ripple = 1.0 + 0.08 * (std::f64::consts::TAU * (c as f64 / COLS as f64) * 2.0 + k as f64).sin();
            let d = r as f64 - bin as f64;
            v += strength * ripple * (-d * d / (2.0 * 1.8 * 1.8)).exp();
        }
        v
    })
}

fn draw_sample(
    means: &Array2<f64>,
    rng: &mut ChaCha8Rng,
    fingerprint: &str,
    anomalous: bool,
    amplitude: f64,
) -> Spectrogram {
    // Box-Muller on the raw stream; rand_distr's ziggurat would do equally
    // well, this keeps the demo's draws trivially portable.
    let mut gauss = || {
        let u1 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut values = means.mapv(|m| m + NOISE_SIGMA * gauss());
    if anomalous {
        let block_rows = 14usize;
        let block_cols = 22usize;
        let r0 = (rng.next_u64() % (ROWS - block_rows + 1) as u64) as usize;
        let c0 = (rng.next_u64() % (COLS - block_cols + 1) as u64) as usize;
        for r in r0..r0 + block_rows {
            for c in c0..c0 + block_cols {
                values[[r, c]] += amplitude;
            }
        }
    }
    Spectrogram::new(values, "demo-sample", fingerprint)
}

fn render_heatmap(
    values: &Array2<f64>,
    lo: f64,
    hi: f64,
    colormap: fn(f64) -> [u8; 3],
) -> Vec<u8> {
    let (rows, cols) = values.dim();
    let span = (hi - lo).max(1e-12);
    let mut out = vec![0u8; rows * cols * 4];
    for image_row in 0..rows {
        let bin = rows - 1 - image_row;
        for c in 0..cols {
            let t = ((values[[bin, c]] - lo) / span).clamp(0.0, 1.0);
            let [r, g, b] = colormap(t);
            let o = (image_row * cols + c) * 4;
            out[o] = r;
            out[o + 1] = g;
            out[o + 2] = b;
            out[o + 3] = 255;
        }
    }
    out
}

fn lerp_stops(stops: &[[f64; 3]], t: f64) -> [u8; 3] {
    let x = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (x.floor() as usize).min(stops.len() - 2);
    let f = x - i as f64;
    let mix = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    [
        mix(stops[i][0], stops[i + 1][0]),
        mix(stops[i][1], stops[i + 1][1]),
        mix(stops[i][2], stops[i + 1][2]),
    ]
}

fn viridis(t: f64) -> [u8; 3] {
    lerp_stops(
        &[
            [68.0, 1.0, 84.0],
            [59.0, 82.0, 139.0],
            [33.0, 145.0, 140.0],
            [94.0, 201.0, 98.0],
            [253.0, 231.0, 37.0],
        ],
        t,
    )
}

fn hot(t: f64) -> [u8; 3] {
    lerp_stops(
        &[
            [0.0, 0.0, 0.0],
            [120.0, 10.0, 36.0],
            [237.0, 105.0, 37.0],
            [255.0, 223.0, 120.0],
        ],
        t,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_builds_and_renders() {
        let demo = Demo::new(7);
        assert_eq!(demo.rows(), ROWS);
        assert_eq!(demo.cols(), COLS);
        assert_eq!(demo.sample_pixels().len(), ROWS * COLS * 4);
        assert_eq!(demo.reference_pixels().len(), ROWS * COLS * 4);
        assert_eq!(demo.difference_pixels().len(), ROWS * COLS * 4);
        // Alpha channel is opaque everywhere.
        assert!(demo.sample_pixels().chunks(4).all(|px| px[3] == 255));
    }

    #[test]
    fn quantile_slider_moves_reference_up() {
        let mut demo = Demo::new(1);
        demo.set_quantile(0.5);
        let median_ref = demo.reference.values.clone();
        demo.set_quantile(0.99);
        let high_ref = &demo.reference.values;
        assert!(median_ref.iter().zip(high_ref.iter()).all(|(a, b)| a <= b));
        assert_eq!(demo.quantile(), 0.99);
    }

    #[test]
    fn anomalous_samples_score_higher() {
        let mut demo = Demo::new(3);
        demo.set_quantile(0.95);
        demo.new_sample(false, 0.0);
        let normal: Vec<serde_json::Value> =
            serde_json::from_str(&demo.scores_json()).unwrap();
        demo.new_sample(true, 12.0);
        let anomalous: Vec<serde_json::Value> =
            serde_json::from_str(&demo.scores_json()).unwrap();
        for (n, a) in normal.iter().zip(&anomalous) {
            assert_eq!(n["metric"], a["metric"]);
        }
        // Counting and sum should both move visibly for a strong block.
        let value = |rows: &[serde_json::Value], m: &str| {
            rows.iter()
                .find(|r| r["metric"] == m)
                .and_then(|r| r["value"].as_f64())
                .unwrap()
        };
        assert!(value(&anomalous, "sum") > value(&normal, "sum"));
        assert!(value(&anomalous, "counting") > value(&normal, "counting"));
    }

    #[test]
    fn exceedance_curve_is_parseable() {
        let demo = Demo::new(0);
        let points: Vec<serde_json::Value> =
            serde_json::from_str(&demo.exceedance_curve_json(400, 0)).unwrap();
        assert_eq!(points.len(), 5);
        for p in &points {
            assert!(p["relative_deviation"].as_f64().unwrap() >= 0.0);
        }
    }
}
