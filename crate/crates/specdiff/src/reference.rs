//! Entry-wise quantile pooling of training spectrograms into a reference.
//!
//! For every entry j the z-quantile is taken over the j-th entries of all
//! training spectrograms. The quantile rule is linear interpolation on
//! `(N-1)*z` (the R-7 convention used by mainstream numerical tooling); the
//! rule id is stored in the QREF metadata so references are self-describing.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectrogram::Spectrogram;

pub const QUANTILE_RULE: &str = "linear";

/// Per-entry z-quantile matrix pooled from `training_count` spectrograms.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpectrogram {
    pub values: Array2<f64>,
    pub z: f64,
    pub training_count: usize,
    pub fingerprint: String,
    pub quantile_rule: String,
}

impl ReferenceSpectrogram {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn entry_count(&self) -> usize {
        self.values.len()
    }
}

/// Linear-interpolation quantile of a multiset.
///
/// With sorted values `v_0 <= ... <= v_{N-1}` and `h = (N-1)*z`, returns
/// `v_floor(h) + (h - floor(h)) * (v_floor(h)+1 - v_floor(h))`; z=0 gives the
/// minimum, z=1 the maximum.
pub fn quantile(values: &[f64], z: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile of an empty multiset".into()));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::DomainError(format!("quantile level {z} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_of_sorted(&sorted, z))
}

/// The interpolation step on an already sorted slice.
pub(crate) fn quantile_of_sorted(sorted: &[f64], z: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * z;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Pools the training set into a reference at quantile level `z`.
///
/// All spectrograms must share shape and config fingerprint. Each entry's
/// quantile is a pure function of its value column, so the result is
/// independent of any parallel schedule.
pub fn build_reference(spectrograms: &[Spectrogram], z: f64) -> Result<ReferenceSpectrogram> {
    let mut refs = build_references(spectrograms, &[z])?;
    Ok(refs.pop().expect("one level requested"))
}

/// Pools several quantile levels in one pass: each entry column is sorted
/// once and interpolated per level. Equivalent to calling [`build_reference`]
/// per level, bit for bit.
pub fn build_references(spectrograms: &[Spectrogram], z_levels: &[f64]) -> Result<Vec<ReferenceSpectrogram>> {
    let first = spectrograms
        .first()
        .ok_or_else(|| Error::EmptyInput("build_reference needs at least one spectrogram".into()))?;
    let dim = first.values.dim();
    let fingerprint = &first.fingerprint;
    for s in spectrograms.iter().skip(1) {
        if s.values.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "training spectrogram {} is {}x{}, expected {}x{}",
                s.source_id,
                s.values.nrows(),
                s.values.ncols(),
                dim.0,
                dim.1
            )));
        }
        if s.fingerprint != *fingerprint {
            return Err(Error::ConfigMismatch(format!(
                "training spectrogram {} has fingerprint {}, expected {}",
                s.source_id, s.fingerprint, fingerprint
            )));
        }
    }
    for &z in z_levels {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::DomainError(format!("quantile level {z} outside [0, 1]")));
        }
    }

    let n_entries = dim.0 * dim.1;
    let flats: Vec<_> = spectrograms.iter().map(|s| s.values.as_standard_layout()).collect();
    let columns: Vec<&[f64]> = flats.iter().map(|f| f.as_slice().expect("standard layout")).collect();

    let mut pooled: Vec<Vec<f64>> = z_levels.iter().map(|_| vec![0.0; n_entries]).collect();
    pool_entries(&columns, z_levels, &mut pooled);

    Ok(pooled
        .into_iter()
        .zip(z_levels)
        .map(|(values, &z)| ReferenceSpectrogram {
            values: Array2::from_shape_vec(dim, values).expect("shape preserved"),
            z,
            training_count: spectrograms.len(),
            fingerprint: fingerprint.clone(),
            quantile_rule: QUANTILE_RULE.into(),
        })
        .collect())
}

// Entries are processed in fixed-size chunks so the gather buffer stays small
// and chunks can run on worker threads; every write lands at the entry's own
// index, keeping the output schedule-independent.
const CHUNK: usize = 2048;

#[cfg(feature = "parallel")]
fn pool_entries(columns: &[&[f64]], z_levels: &[f64], pooled: &mut [Vec<f64>]) {
    use rayon::prelude::*;

    let n_entries = columns[0].len();
    // Reshape the per-level outputs into per-chunk mutable windows.
    let mut windows: Vec<Vec<&mut [f64]>> = pooled
        .iter_mut()
        .map(|v| v.chunks_mut(CHUNK).collect())
        .collect();
    let n_chunks = (n_entries + CHUNK - 1) / CHUNK;
    let mut per_chunk: Vec<Vec<&mut [f64]>> = (0..n_chunks).map(|_| Vec::new()).collect();
    for level_windows in windows.iter_mut() {
        for (ci, w) in level_windows.drain(..).enumerate() {
            per_chunk[ci].push(w);
        }
    }
    per_chunk.into_par_iter().enumerate().for_each(|(ci, mut outs)| {
        pool_chunk(columns, z_levels, ci * CHUNK, &mut outs);
    });
}

#[cfg(not(feature = "parallel"))]
fn pool_entries(columns: &[&[f64]], z_levels: &[f64], pooled: &mut [Vec<f64>]) {
    let n_entries = columns[0].len();
    let mut start = 0;
    while start < n_entries {
        let end = (start + CHUNK).min(n_entries);
        let mut outs: Vec<&mut [f64]> = pooled.iter_mut().map(|v| &mut v[start..end]).collect();
        pool_chunk(columns, z_levels, start, &mut outs);
        start = end;
    }
}

fn pool_chunk(columns: &[&[f64]], z_levels: &[f64], base: usize, outs: &mut [&mut [f64]]) {
    let len = outs[0].len();
    let mut gather = vec![0.0f64; columns.len()];
    for local in 0..len {
        let j = base + local;
        for (slot, col) in gather.iter_mut().zip(columns) {
            *slot = col[j];
        }
        gather.sort_unstable_by(f64::total_cmp);
        for (li, &z) in z_levels.iter().enumerate() {
            outs[li][local] = quantile_of_sorted(&gather, z);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use proptest::prelude::*;

    fn spec(values: Array2<f64>, id: &str) -> Spectrogram {
        Spectrogram::new(values, id, "fp")
    }

    #[test]
    fn quantile_basics() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5).unwrap(), 2.0);
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!((quantile(&v, 0.9).unwrap() - 8.1).abs() < 1e-12);
        assert_eq!(quantile(&[5.0, -1.0, 3.0], 1.0).unwrap(), 5.0);
        assert_eq!(quantile(&[5.0, -1.0, 3.0], 0.0).unwrap(), -1.0);
    }

    #[test]
    fn quantile_errors() {
        assert_eq!(quantile(&[], 0.5).unwrap_err().name(), "EmptyInput");
        assert_eq!(quantile(&[1.0], 1.5).unwrap_err().name(), "DomainError");
    }

    #[test]
    fn singleton_reference_equals_input() {
        let s = spec(arr2(&[[1.0, 2.0], [3.0, 4.0]]), "a");
        for z in [0.0, 0.3, 1.0] {
            let r = build_reference(std::slice::from_ref(&s), z).unwrap();
            assert_eq!(r.values, s.values);
            assert_eq!(r.training_count, 1);
        }
    }

    #[test]
    fn identical_training_set_is_degenerate() {
        let s = spec(arr2(&[[7.0, -2.0]]), "a");
        let set = vec![s.clone(), s.clone(), s.clone()];
        for z in [0.0, 0.5, 0.77, 1.0] {
            let r = build_reference(&set, z).unwrap();
            assert_eq!(r.values, s.values);
        }
    }

    #[test]
    fn entrywise_hand_case() {
        // Entry (0,0) pools {1, 2, 4}: median 2, 0.75-quantile 3.
        let set = vec![
            spec(arr2(&[[1.0, 0.0], [0.0, 0.0]]), "a"),
            spec(arr2(&[[2.0, 0.0], [0.0, 0.0]]), "b"),
            spec(arr2(&[[4.0, 0.0], [0.0, 0.0]]), "c"),
        ];
        assert_eq!(build_reference(&set, 0.5).unwrap().values[[0, 0]], 2.0);
        assert_eq!(build_reference(&set, 0.75).unwrap().values[[0, 0]], 3.0);
    }

    #[test]
    fn mismatches_are_rejected() {
        let a = spec(arr2(&[[1.0, 2.0]]), "a");
        let b = spec(arr2(&[[1.0], [2.0]]), "b");
        assert_eq!(build_reference(&[a.clone(), b], 0.5).unwrap_err().name(), "ShapeMismatch");
        let c = Spectrogram::new(arr2(&[[1.0, 2.0]]), "c", "other-fp");
        assert_eq!(build_reference(&[a, c], 0.5).unwrap_err().name(), "ConfigMismatch");
        assert_eq!(build_reference(&[], 0.5).unwrap_err().name(), "EmptyInput");
    }

    #[test]
    fn multi_level_matches_single_level() {
        let set: Vec<Spectrogram> = (0..7)
            .map(|i| {
                let v: Vec<f64> = (0..12).map(|j| ((i * 31 + j * 17) % 23) as f64 - 11.0).collect();
                spec(Array2::from_shape_vec((3, 4), v).unwrap(), "s")
            })
            .collect();
        let levels = [0.1, 0.5, 0.9, 0.99];
        let multi = build_references(&set, &levels).unwrap();
        for (r, &z) in multi.iter().zip(&levels) {
            let single = build_reference(&set, z).unwrap();
            assert_eq!(r.values, single.values);
        }
    }

    proptest! {
        // Oracle equivalence: sort-and-interpolate, exact equality.
        #[test]
        fn quantile_matches_oracle(values in proptest::collection::vec(-1e3f64..1e3, 1..100), z in 0.0f64..=1.0) {
            let got = quantile(&values, z).unwrap();
            let mut sorted = values.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            let h = (sorted.len() - 1) as f64 * z;
            let lo = h.floor() as usize;
            let expect = if lo + 1 >= sorted.len() {
                sorted[sorted.len() - 1]
            } else {
                sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
            };
            prop_assert_eq!(got.to_bits(), expect.to_bits());
        }

        // Monotonicity in z and the min/max bound.
        #[test]
        fn monotone_and_bounded(values in proptest::collection::vec(-50.0f64..50.0, 1..40), z1 in 0.0f64..=1.0, z2 in 0.0f64..=1.0) {
            let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
            let a = quantile(&values, lo).unwrap();
            let b = quantile(&values, hi).unwrap();
            prop_assert!(a <= b);
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min <= a && b <= max);
        }

        // Permutation invariance of the pooled reference.
        #[test]
        fn permutation_invariant(seed in 0u64..1000, z in 0.0f64..=1.0) {
            let set: Vec<Spectrogram> = (0..5)
                .map(|i| {
                    let v: Vec<f64> = (0..6)
                        .map(|j| (((seed + 1) * (i * 7 + j * 13 + 1)) % 101) as f64)
                        .collect();
                    spec(Array2::from_shape_vec((2, 3), v).unwrap(), "s")
                })
                .collect();
            let mut shuffled = set.clone();
            shuffled.reverse();
            shuffled.swap(0, 2);
            let a = build_reference(&set, z).unwrap();
            let b = build_reference(&shuffled, z).unwrap();
            prop_assert_eq!(a.values, b.values);
        }
    }
}
