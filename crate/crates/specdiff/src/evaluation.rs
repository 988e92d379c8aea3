//! ROC-AUC and the train/validation/test split protocol.
//!
//! AUC is computed with midranks and equals the pairwise definition exactly:
//! each (anormal, normal) pair contributes 1 if the anormal sample scores
//! higher, 0.5 on a tie. Splits shuffle with a seeded ChaCha8 stream and a
//! plain modulo Fisher-Yates so plans are reproducible across platforms; the
//! JSON export pins exact membership for other implementations.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Label};
use crate::error::{Error, Result};
use crate::reference::build_reference;
use crate::scoring::{score_difference, Metric};
use crate::spectrogram::Spectrogram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocResult {
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Midrank ROC-AUC with anormal as the positive class; higher scores mean
/// more anomalous.
pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<RocResult> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(format!("score {bad} is not finite")));
    }
    let n_pos = labels.iter().filter(|&&l| l == Label::Anormal).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels(format!(
            "need both classes, got {n_pos} anormal and {n_neg} normal"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Midranks: tied scores share the average of their 1-based positions.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == Label::Anormal {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }

    let p = n_pos as f64;
    let auc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n_neg as f64);
    Ok(RocResult { auc, n_pos, n_neg })
}

/// A train/validation/test partition: validation and test are balanced, the
/// anormal samples are split 50/50 (validation gets the floor when odd), and
/// train holds the remaining normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<PlanEntry>,
    pub test: Vec<PlanEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub id: String,
    pub label: Label,
}

impl SplitPlan {
    pub fn to_json<W: Write>(&self, w: &mut W) -> Result<()> {
        serde_json::to_writer_pretty(&mut *w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<SplitPlan> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Deterministic seeded split of a manifest.
pub fn make_splits(manifest: &DatasetManifest, seed: u64) -> Result<SplitPlan> {
    let mut anormal: Vec<String> = manifest.with_label(Label::Anormal).map(|e| e.path.clone()).collect();
    let mut normal: Vec<String> = manifest.with_label(Label::Normal).map(|e| e.path.clone()).collect();
    if anormal.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "need at least 2 anormal samples, got {}",
            anormal.len()
        )));
    }
    if normal.len() < anormal.len() {
        return Err(Error::InsufficientSamples(format!(
            "need at least as many normal as anormal samples, got {} normal vs {} anormal",
            normal.len(),
            anormal.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle(&mut anormal, &mut rng);
    shuffle(&mut normal, &mut rng);

    let val_a = anormal.len() / 2;
    let test_a = anormal.len() - val_a;
    let (val_anormal, test_anormal) = anormal.split_at(val_a);
    let (val_normal, rest) = normal.split_at(val_a);
    let (test_normal, train) = rest.split_at(test_a);

    let entry = |id: &String, label: Label| PlanEntry { id: id.clone(), label };
    Ok(SplitPlan {
        seed,
        train: train.to_vec(),
        validation: val_normal
            .iter()
            .map(|id| entry(id, Label::Normal))
            .chain(val_anormal.iter().map(|id| entry(id, Label::Anormal)))
            .collect(),
        test: test_normal
            .iter()
            .map(|id| entry(id, Label::Normal))
            .chain(test_anormal.iter().map(|id| entry(id, Label::Anormal)))
            .collect(),
    })
}

/// Fisher-Yates with explicit modulo indexing on the raw 64-bit stream.
/// The slight modulo bias is irrelevant here; what matters is that the
/// algorithm is frozen, so a seed pins the same permutation everywhere.
fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    use rand::RngCore;
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Builds a reference from `train` at level `z`, scores `eval_set` with
/// `metric`, and returns the ROC-AUC.
pub fn evaluate(
    train: &[Spectrogram],
    eval_set: &[(Spectrogram, Label)],
    z: f64,
    metric: Metric,
) -> Result<RocResult> {
    let reference = build_reference(train, z)?;
    let mut scores = Vec::with_capacity(eval_set.len());
    let mut labels = Vec::with_capacity(eval_set.len());
    for (spec, label) in eval_set {
        let d = crate::scoring::difference_spectrogram(spec, &reference)?;
        scores.push(score_difference(&d, metric)?.value);
        labels.push(*label);
    }
    roc_auc(&scores, &labels)
}
