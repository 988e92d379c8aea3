//! Quantile-pooling anomaly detection for sound spectrograms.
//!
//! The pipeline: decode WAV recordings, turn them into dB-scale STFT
//! spectrograms, pool a training set of normal spectrograms entry-wise into a
//! z-quantile reference, and score test spectrograms by how far they rise
//! above that reference. The difference spectrogram `max(0, W - Q)` is both
//! the scoring input and a per-entry explanation of what drove a score.
//!
//! Modules follow the pipeline stages:
//!
//! - [`wav`] / [`dataset`]: input decoding and labeled manifests
//! - [`spectrogram`]: STFT magnitudes and dB conversion
//! - [`reference`]: entry-wise quantile pooling
//! - [`scoring`]: difference spectrograms, the four deviation metrics, and
//!   explanation exports
//! - [`evaluation`]: ROC-AUC and the balanced split protocol
//! - [`tuning`]: grid search and the multi-seed protocol
//! - [`synthetic`]: seeded generators and the binomial-consistency experiment
//! - [`formats`]: SPEC1 / QREF1 containers and PGM images

pub mod binomial;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod reference;
pub mod scoring;
pub mod spectrogram;
pub mod synthetic;
pub mod tuning;
pub mod wav;

pub use dataset::{DatasetManifest, Label, LayoutRule, ManifestEntry};
pub use error::{Error, Result};
pub use evaluation::{make_splits, roc_auc, RocResult, SplitPlan};
pub use reference::{build_reference, quantile, ReferenceSpectrogram};
pub use scoring::{
    difference_spectrogram, score, AnomalyScore, DifferenceSpectrogram, ExplanationFormat, Metric,
};
pub use spectrogram::{
    amplitude_to_db, compute_spectrogram, config_fingerprint, hann_window, stft_magnitude, DbConfig,
    Spectrogram, StftConfig,
};
pub use synthetic::{exceedance_experiment, synth_generate, ExceedanceReport, SyntheticSpec};
pub use tuning::{grid_search, run_protocol, GridConfig, TuningRecord};
pub use wav::{decode_wav, encode_wav_pcm16, select_channel, AudioClip};
