//! Acceptance suite. Each test prints one `ACCEPTANCE <id>: PASS|FAIL` line
//! (visible with `cargo test --test acceptance -- --nocapture`) and asserts
//! the criterion at its stated tolerance.
//!
//! Oracles here are deliberately independent of the library code paths they
//! check: quantiles against a hand-written sort-and-interpolate, AUC against
//! the O(P*N) pairwise definition, binomial logs against exact rational
//! enumeration, and the STFT against a naive O(n^2) DFT.

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specdiff::dataset::Label;
use specdiff::evaluation::{evaluate, make_splits, roc_auc};
use specdiff::scoring::Metric;
use specdiff::synthetic::{exceedance_experiment, generate_patch_benchmark, PatchBenchmarkConfig, SyntheticSpec};
use specdiff::{quantile, DatasetManifest, ManifestEntry, ReferenceSpectrogram, Spectrogram, StftConfig};

fn criterion(id: &str, pass: bool, detail: &str) {
    println!("ACCEPTANCE {id}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "acceptance criterion {id} failed: {detail}");
}

// ------------------------------------------------------------- criterion 1a

#[test]
fn criterion_1a_quantile_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut worst: Option<String> = None;
    for case in 0..1000 {
        let len = 1 + (rng.next_u64() % 100) as usize;
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1e6..1e6)).collect();
        let z = rng.random_range(0.0..=1.0);

        let got = quantile(&values, z).unwrap();

        // Independent sort-and-interpolate oracle.
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h = (len - 1) as f64 * z;
        let lo = h.floor() as usize;
        let expect = if lo + 1 >= len {
            sorted[len - 1]
        } else {
            sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
        };

        if got.to_bits() != expect.to_bits() {
            worst = Some(format!("case {case}: got {got}, oracle {expect}"));
            break;
        }
    }
    criterion(
        "1a quantile-oracle",
        worst.is_none(),
        &worst.unwrap_or_else(|| "1000 multisets, exact equality".into()),
    );
}

// ------------------------------------------------------------- criterion 1b

#[test]
fn criterion_1b_roc_auc_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB2);
    let mut failure: Option<String> = None;
    for case in 0..500 {
        let len = 2 + (rng.next_u64() % 199) as usize;
        // Integer scores in a narrow band force heavy ties.
        let scores: Vec<f64> = (0..len).map(|_| (rng.next_u64() % 9) as f64).collect();
        let labels: Vec<Label> = (0..len)
            .map(|_| if rng.next_u64() % 2 == 0 { Label::Anormal } else { Label::Normal })
            .collect();
        if !labels.contains(&Label::Anormal) || !labels.contains(&Label::Normal) {
            continue;
        }

        let got = roc_auc(&scores, &labels).unwrap().auc;

        let mut total = 0.0;
        let mut pairs = 0.0;
        for (sp, _) in scores.iter().zip(&labels).filter(|(_, &l)| l == Label::Anormal) {
            for (sn, _) in scores.iter().zip(&labels).filter(|(_, &l)| l == Label::Normal) {
                pairs += 1.0;
                if sp > sn {
                    total += 1.0;
                } else if sp == sn {
                    total += 0.5;
                }
            }
        }
        let expect = total / pairs;

        if got != expect {
            failure = Some(format!("case {case}: midrank {got} vs pairwise {expect}"));
            break;
        }
    }
    criterion(
        "1b roc-auc-oracle",
        failure.is_none(),
        &failure.unwrap_or_else(|| "500 tie-heavy instances, exact equality".into()),
    );
}

// ------------------------------------------------------------- criterion 1c

fn big_binom(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

fn rational_pow(base: &BigRational, exp: u64) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

/// ln of an exact rational via separate numerator/denominator logs.
fn ln_rational(x: &BigRational) -> f64 {
    assert!(x.is_positive());
    x.numer().to_f64().unwrap().ln() - x.denom().to_f64().unwrap().ln()
}

fn rel_log_err(got: f64, oracle: f64) -> f64 {
    if oracle.abs() < 1e-300 {
        got.abs()
    } else {
        (got - oracle).abs() / oracle.abs()
    }
}

#[test]
fn criterion_1c_binomial_oracle() {
    let z_levels: [(i64, i64); 4] = [(1, 10), (5, 10), (9, 10), (99, 100)];
    let mut worst_pmf = 0.0f64;
    let mut worst_surv = 0.0f64;

    for &(zn, zd) in &z_levels {
        let z = BigRational::new(BigInt::from(zn), BigInt::from(zd));
        let p = BigRational::one() - z.clone(); // exceedance probability 1-z
        let z_f = zn as f64 / zd as f64;
        for n in 1u64..=30 {
            // Exact pmf table for this n.
            let pmf: Vec<BigRational> = (0..=n)
                .map(|k| {
                    BigRational::from(big_binom(n, k))
                        * rational_pow(&p, k)
                        * rational_pow(&z, n - k)
                })
                .collect();
            for k in 0..=n {
                let score = specdiff::scoring::score_binomial(k as usize, n as usize, z_f).unwrap();

                let log_pmf_oracle = ln_rational(&pmf[k as usize]);
                worst_pmf = worst_pmf.max(rel_log_err(score.log_pmf.unwrap(), log_pmf_oracle));

                // Survival log via whichever side is well-conditioned.
                let complement: BigRational =
                    pmf[..k as usize].iter().cloned().fold(BigRational::zero(), |a, b| a + b);
                let log_surv_oracle = if complement.to_f64().unwrap() <= 0.5 {
                    (-complement.to_f64().unwrap()).ln_1p()
                } else {
                    ln_rational(&(BigRational::one() - complement))
                };
                worst_surv = worst_surv.max(rel_log_err(-score.value, log_surv_oracle));
            }
        }
    }

    // PMF normalization for large n.
    let mut worst_sum = 0.0f64;
    for n in [1usize, 2, 7, 31, 100, 333, 1000] {
        for z in [0.1, 0.5, 0.9, 0.99] {
            let total: f64 = (0..=n)
                .map(|k| specdiff::binomial::log_pmf(k as u64, n as u64, 1.0 - z).exp())
                .sum();
            worst_sum = worst_sum.max((total - 1.0).abs());
        }
    }

    let pass = worst_pmf < 1e-10 && worst_surv < 1e-10 && worst_sum < 1e-9;
    criterion(
        "1c binomial-oracle",
        pass,
        &format!(
            "max rel log err: pmf {worst_pmf:.2e}, survival {worst_surv:.2e}; |pmf sum - 1| <= {worst_sum:.2e}"
        ),
    );
}

// ------------------------------------------------------------- criterion 1d

/// Naive O(n^2) DFT magnitude oracle with its own framing and window.
fn naive_stft(signal: &[f64], n_fft: usize, hop: usize, center: bool) -> Vec<Vec<f64>> {
    let padded: Vec<f64> = if center {
        let mut p = vec![0.0; signal.len() + n_fft];
        p[n_fft / 2..n_fft / 2 + signal.len()].copy_from_slice(signal);
        p
    } else {
        signal.to_vec()
    };
    let n_frames = if center {
        1 + signal.len() / hop
    } else {
        1 + (signal.len() - n_fft) / hop
    };
    let window: Vec<f64> = (0..n_fft)
        .map(|k| 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / n_fft as f64).cos())
        .collect();
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let mut mags = Vec::with_capacity(n_fft / 2 + 1);
        for f in 0..=n_fft / 2 {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in 0..n_fft {
                let x = padded[t * hop + k] * window[k];
                let phase = -std::f64::consts::TAU * f as f64 * k as f64 / n_fft as f64;
                re += x * phase.cos();
                im += x * phase.sin();
            }
            mags.push((re * re + im * im).sqrt());
        }
        frames.push(mags);
    }
    frames
}

#[test]
fn criterion_1d_stft_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD4);
    let mut worst = 0.0f64;
    for &n_fft in &[4usize, 8, 16, 32, 64] {
        for &hop_div in &[1usize, 2, 4] {
            let hop = (n_fft / hop_div).max(1);
            for center in [true, false] {
                let len = n_fft + (rng.next_u64() % 64) as usize;
                let signal: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
                let cfg = StftConfig { n_fft, hop_length: hop, ..Default::default() };
                let cfg = StftConfig { center, ..cfg };
                let got = specdiff::stft_magnitude(&signal, &cfg).unwrap();
                let oracle = naive_stft(&signal, n_fft, hop, center);
                assert_eq!(got.ncols(), oracle.len(), "frame count");
                for (t, frame) in oracle.iter().enumerate() {
                    for (f, &expect) in frame.iter().enumerate() {
                        let rel = (got[[f, t]] - expect).abs() / (1.0 + expect.abs());
                        worst = worst.max(rel);
                    }
                }
            }
        }
    }

    // Pure 1 kHz tone at 16 kHz with the full-size config peaks at bin
    // 1000/16000*2048 = 128 in every interior frame.
    let signal: Vec<f64> = (0..16_000)
        .map(|i| (std::f64::consts::TAU * 1000.0 * i as f64 / 16_000.0).sin())
        .collect();
    let cfg = StftConfig::default();
    let mag = specdiff::stft_magnitude(&signal, &cfg).unwrap();
    let first_interior = (cfg.n_fft / 2).div_ceil(cfg.hop_length);
    let last_interior = (signal.len() - cfg.n_fft / 2) / cfg.hop_length;
    let mut tone_ok = true;
    for t in first_interior..=last_interior {
        let mut best = (0usize, f64::NEG_INFINITY);
        for f in 0..mag.nrows() {
            if mag[[f, t]] > best.1 {
                best = (f, mag[[f, t]]);
            }
        }
        if best.0 != 128 {
            tone_ok = false;
            break;
        }
    }

    let pass = worst < 1e-9 && tone_ok;
    criterion(
        "1d stft-oracle",
        pass,
        &format!("max rel err vs naive DFT {worst:.2e}; tone peak at bin 128: {tone_ok}"),
    );
}

// -------------------------------------------------------------- criterion 2

#[test]
fn criterion_2_split_arithmetic() {
    let mut entries = Vec::new();
    for i in 0..1011 {
        entries.push(ManifestEntry {
            path: format!("normal-{i:04}"),
            label: Label::Normal,
            machine_type: "fan".into(),
            machine_id: "id_00".into(),
            snr: "0dB".into(),
        });
    }
    for i in 0..407 {
        entries.push(ManifestEntry {
            path: format!("anormal-{i:04}"),
            label: Label::Anormal,
            machine_type: "fan".into(),
            machine_id: "id_00".into(),
            snr: "0dB".into(),
        });
    }
    let manifest = DatasetManifest::new(entries).unwrap();

    let mut pass = true;
    let mut detail = String::new();
    for seed in 0..10u64 {
        let plan = make_splits(&manifest, seed).unwrap();
        let count = |v: &[specdiff::evaluation::PlanEntry], l: Label| {
            v.iter().filter(|e| e.label == l).count()
        };
        let got = (
            plan.train.len(),
            count(&plan.validation, Label::Normal),
            count(&plan.validation, Label::Anormal),
            count(&plan.test, Label::Normal),
            count(&plan.test, Label::Anormal),
        );
        if got != (604, 203, 203, 204, 204) {
            pass = false;
            detail = format!("seed {seed}: got {got:?}, want (604, 203, 203, 204, 204)");
            break;
        }
    }
    criterion(
        "2 split-arithmetic",
        pass,
        if detail.is_empty() { "1011/407 -> 604 | 203+203 | 204+204 for all seeds" } else { &detail },
    );
}

// -------------------------------------------------------------- criterion 3

#[test]
fn criterion_3_synthetic_benchmark() {
    let cfg = PatchBenchmarkConfig::default(); // 64x64, +1.0 on an 8x8 patch
    let data = generate_patch_benchmark(&cfg).unwrap();
    let result = evaluate(&data.train, &data.test, 0.9, Metric::Mean).unwrap();
    criterion(
        "3 synthetic-benchmark",
        result.auc >= 0.95,
        &format!("z=0.9 Mean test AUC = {:.4} (required >= 0.95)", result.auc),
    );
}

// -------------------------------------------------------------- criterion 4

#[test]
fn criterion_4_binomial_consistency() {
    let spec = SyntheticSpec::flat(100, 100, 0.0, 1.0, 0).unwrap();
    let z_list = [0.5, 0.75, 0.9, 0.95, 0.99];
    let reports = exceedance_experiment(2000, 500, &spec, &z_list, &[0, 1, 2, 3, 4]).unwrap();

    let mut pass = true;
    let mut lines = Vec::new();
    for r in &reports {
        lines.push(format!("z={}: {:.3}%", r.z, 100.0 * r.relative_deviation));
        if r.relative_deviation >= 0.02 {
            pass = false;
        }
    }
    criterion(
        "4 binomial-consistency",
        pass,
        &format!("relative deviations (required < 2%): {}", lines.join(", ")),
    );
}

// -------------------------------------------------------------- criterion 5

#[test]
fn criterion_5_persistence_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x55);
    let specials = [
        0.0f64,
        -0.0,
        f64::MIN_POSITIVE,
        -f64::MIN_POSITIVE,
        5e-324, // smallest subnormal
        -5e-324,
        f64::MAX,
        f64::MIN,
        1e-310, // subnormal range
        f64::INFINITY,
        f64::NEG_INFINITY,
    ];
    let mut pass = true;
    let mut detail = String::from("100 matrices incl. subnormal/extreme values, bit-exact");

    'outer: for case in 0..100 {
        let rows = 1 + (rng.next_u64() % 12) as usize;
        let cols = 1 + (rng.next_u64() % 12) as usize;
        let values = Array2::from_shape_fn((rows, cols), |_| {
            if rng.next_u64() % 4 == 0 {
                specials[(rng.next_u64() % specials.len() as u64) as usize]
            } else {
                f64::from_bits(rng.next_u64() | 1) // arbitrary bit patterns
            }
        });

        let spec = Spectrogram::new(values.clone(), format!("case-{case}"), "fp-acceptance");
        let mut buf = Vec::new();
        specdiff::formats::write_spectrogram(&mut buf, &spec).unwrap();
        let back = specdiff::formats::read_spectrogram(&mut buf.as_slice()).unwrap();
        for (a, b) in spec.values.iter().zip(back.values.iter()) {
            if a.to_bits() != b.to_bits() {
                pass = false;
                detail = format!("SPEC1 case {case}: {a:?} -> {b:?}");
                break 'outer;
            }
        }
        if back.source_id != spec.source_id || back.fingerprint != spec.fingerprint {
            pass = false;
            detail = format!("SPEC1 case {case}: metadata drift");
            break;
        }

        let reference = ReferenceSpectrogram {
            values,
            z: rng.random_range(0.0..=1.0),
            training_count: 1 + (rng.next_u64() % 1000) as usize,
            fingerprint: "fp-acceptance".into(),
            quantile_rule: "linear".into(),
        };
        let mut buf = Vec::new();
        specdiff::formats::write_reference(&mut buf, &reference).unwrap();
        let back = specdiff::formats::read_reference(&mut buf.as_slice()).unwrap();
        for (a, b) in reference.values.iter().zip(back.values.iter()) {
            if a.to_bits() != b.to_bits() {
                pass = false;
                detail = format!("QREF1 case {case}: {a:?} -> {b:?}");
                break 'outer;
            }
        }
        if back.z.to_bits() != reference.z.to_bits()
            || back.training_count != reference.training_count
        {
            pass = false;
            detail = format!("QREF1 case {case}: header drift");
            break;
        }
    }
    criterion("5 persistence-roundtrip", pass, &detail);
}

// -------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_tune_determinism() {
    let bin = env!("CARGO_BIN_EXE_specdiff");
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");

    let run = |args: &[&str]| {
        let out = std::process::Command::new(bin)
            .args(args)
            .current_dir(dir.path())
            .output()
            .expect("spawn specdiff");
        assert!(
            out.status.success(),
            "specdiff {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };

    run(&[
        "synth", "--rows", "16", "--cols", "16", "--train", "24", "--val-normal", "8",
        "--val-anormal", "8", "--test-normal", "8", "--test-anormal", "8", "--patch", "4",
        "--amplitude", "3.0", "-o", ds.to_str().unwrap(),
    ]);
    let manifest = ds.join("manifest.csv");
    for out_dir in ["t1", "t2"] {
        run(&[
            "tune", "--manifest", manifest.to_str().unwrap(), "--seeds", "0,1,2",
            "--z-grid", "0.5,0.9,0.95", "-o", dir.path().join(out_dir).to_str().unwrap(),
        ]);
    }

    let mut pass = true;
    let mut detail = String::from("tuning_records.csv, grid_results.csv, run_config.json byte-identical");
    for file in ["tuning_records.csv", "grid_results.csv", "run_config.json"] {
        let a = std::fs::read(dir.path().join("t1").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("t2").join(file)).unwrap();
        if a != b {
            pass = false;
            detail = format!("{file} differs between identical runs");
            break;
        }
    }
    criterion("6 tune-determinism", pass, &detail);
}
