//! Grid search over (z, metric) on validation data, and the multi-seed
//! split/tune/test protocol.
//!
//! Grid search never sees test data; `run_protocol` evaluates the tuned cell
//! on the test split once per seed and averages the test AUCs.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Label};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, make_splits, roc_auc, PlanEntry};
use crate::reference::build_reference;
use crate::scoring::{csv_field, score_difference, Metric};
use crate::spectrogram::Spectrogram;

/// Hyperparameter grid. The default z grid is the 7-value search list; finer
/// levels such as 0.995 can be added through the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub z_grid: Vec<f64>,
    pub metrics: Vec<Metric>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            z_grid: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
            metrics: Metric::ALL.to_vec(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.z_grid.is_empty() || self.metrics.is_empty() {
            return Err(Error::InvalidConfig("grid must list at least one z and one metric".into()));
        }
        for &z in &self.z_grid {
            if !(z > 0.0 && z < 1.0) {
                return Err(Error::InvalidConfig(format!("grid z {z} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Validation AUC of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub z: f64,
    pub metric: Metric,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best_z: f64,
    pub best_metric: Metric,
    pub validation_auc: f64,
    /// Every evaluated cell, in grid order.
    pub cells: Vec<GridCell>,
}

/// Evaluates every (z, metric) cell on the validation set and returns the
/// argmax. Ties break deterministically: larger z first, then the metric
/// order Counting < Sum < Mean < Binomial.
pub fn grid_search(
    train: &[Spectrogram],
    validation: &[(Spectrogram, Label)],
    grid: &GridConfig,
) -> Result<GridSearchResult> {
    grid.validate()?;
    let labels: Vec<Label> = validation.iter().map(|(_, l)| *l).collect();
    let mut cells = Vec::with_capacity(grid.z_grid.len() * grid.metrics.len());
    for &z in &grid.z_grid {
        // One reference per z serves all metrics.
        let reference = build_reference(train, z)?;
        let differences: Vec<_> = validation
            .iter()
            .map(|(s, _)| crate::scoring::difference_spectrogram(s, &reference))
            .collect::<Result<_>>()?;
        for &metric in &grid.metrics {
            let scores: Vec<f64> = differences
                .iter()
                .map(|d| score_difference(d, metric).map(|s| s.value))
                .collect::<Result<_>>()?;
            let auc = roc_auc(&scores, &labels)?.auc;
            cells.push(GridCell { z, metric, auc });
        }
    }

    let best = cells
        .iter()
        .copied()
        .reduce(|best, cell| {
            let better = cell.auc > best.auc
                || (cell.auc == best.auc
                    && (cell.z > best.z || (cell.z == best.z && cell.metric < best.metric)));
            if better {
                cell
            } else {
                best
            }
        })
        .expect("grid is non-empty");

    Ok(GridSearchResult {
        best_z: best.z,
        best_metric: best.metric,
        validation_auc: best.auc,
        cells,
    })
}

/// One tuned split: the winning cell on validation and its test AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRecord {
    pub seed: u64,
    pub best_z: f64,
    pub best_metric: Metric,
    pub validation_auc: f64,
    pub test_auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub records: Vec<TuningRecord>,
    pub mean_test_auc: f64,
    /// Validation cells per seed, for the full results table.
    pub cells_by_seed: Vec<(u64, Vec<GridCell>)>,
}

/// Resolves manifest ids to spectrograms.
pub trait SpectrogramStore {
    fn load(&self, id: &str) -> Result<Spectrogram>;
}

impl SpectrogramStore for HashMap<String, Spectrogram> {
    fn load(&self, id: &str) -> Result<Spectrogram> {
        self.get(id)
            .cloned()
            .ok_or_else(|| Error::UnreadablePath(format!("no spectrogram for id {id}")))
    }
}

/// Loads SPEC1 files by path.
pub struct FileStore;

impl SpectrogramStore for FileStore {
    fn load(&self, id: &str) -> Result<Spectrogram> {
        crate::formats::load_spectrogram(std::path::Path::new(id))
    }
}

/// Full protocol: per seed, split the manifest, tune on validation, evaluate
/// the winning cell on test; the final estimate is the mean over seeds.
pub fn run_protocol<S: SpectrogramStore>(
    store: &S,
    manifest: &DatasetManifest,
    seeds: &[u64],
    grid: &GridConfig,
) -> Result<ProtocolResult> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("need at least one seed".into()));
    }
    grid.validate()?;

    let load_set = |entries: &[PlanEntry]| -> Result<Vec<(Spectrogram, Label)>> {
        entries
            .iter()
            .map(|e| Ok((store.load(&e.id)?, e.label)))
            .collect()
    };

    let mut records = Vec::with_capacity(seeds.len());
    let mut cells_by_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let plan = make_splits(manifest, seed)?;
        let train: Vec<Spectrogram> = plan.train.iter().map(|id| store.load(id)).collect::<Result<_>>()?;
        let validation = load_set(&plan.validation)?;
        let search = grid_search(&train, &validation, grid)?;
        let test = load_set(&plan.test)?;
        let test_auc = evaluate(&train, &test, search.best_z, search.best_metric)?.auc;
        records.push(TuningRecord {
            seed,
            best_z: search.best_z,
            best_metric: search.best_metric,
            validation_auc: search.validation_auc,
            test_auc,
        });
        cells_by_seed.push((seed, search.cells));
    }
    let mean_test_auc = records.iter().map(|r| r.test_auc).sum::<f64>() / records.len() as f64;
    Ok(ProtocolResult { records, mean_test_auc, cells_by_seed })
}

/// Tuning records, one row per seed:
/// `machine_type,machine_id,seed,z,metric,validation_auc,test_auc`.
pub fn write_records_csv<W: Write>(
    w: &mut W,
    machine_type: &str,
    machine_id: &str,
    records: &[TuningRecord],
) -> Result<()> {
    writeln!(w, "machine_type,machine_id,seed,z,metric,validation_auc,test_auc")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            csv_field(machine_type),
            csv_field(machine_id),
            r.seed,
            r.best_z,
            r.best_metric,
            r.validation_auc,
            r.test_auc
        )?;
    }
    Ok(())
}

/// Full per-cell results: `machine_type,machine_id,seed,z,metric,split,auc`.
/// Validation rows cover every grid cell; the test row is the tuned cell.
pub fn write_results_csv<W: Write>(
    w: &mut W,
    machine_type: &str,
    machine_id: &str,
    result: &ProtocolResult,
) -> Result<()> {
    writeln!(w, "machine_type,machine_id,seed,z,metric,split,auc")?;
    for (seed, cells) in &result.cells_by_seed {
        for cell in cells {
            writeln!(
                w,
                "{},{},{},{},{},validation,{}",
                csv_field(machine_type),
                csv_field(machine_id),
                seed,
                cell.z,
                cell.metric,
                cell.auc
            )?;
        }
    }
    for r in &result.records {
        writeln!(
            w,
            "{},{},{},{},{},test,{}",
            csv_field(machine_type),
            csv_field(machine_id),
            r.seed,
            r.best_z,
            r.best_metric,
            r.test_auc
        )?;
    }
    Ok(())
}
