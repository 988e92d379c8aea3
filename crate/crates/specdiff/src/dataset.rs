//! Dataset manifests: labeled sample lists scanned from a MIMII-style
//! directory tree or read from a CSV file.
//!
//! CSV manifest format: header `path,label,machine_type,machine_id,snr`,
//! UTF-8, label restricted to `normal` / `anormal`.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anormal,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anormal => "anormal",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Label::Normal),
            // MIMII directories spell it "abnormal"; the manifest vocabulary
            // follows the two-value convention used throughout this crate.
            "anormal" | "abnormal" => Ok(Label::Anormal),
            other => Err(Error::FormatError(format!(
                "label must be normal or anormal, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub machine_type: String,
    pub machine_id: String,
    pub snr: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyDataset("manifest has no entries".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.path.as_str()) {
                return Err(Error::FormatError(format!("duplicate manifest path {}", e.path)));
            }
        }
        Ok(DatasetManifest { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn with_label(&self, label: Label) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.label == label)
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.with_label(label).count()
    }

    /// Entries grouped by (machine_type, machine_id), in sorted group order.
    pub fn by_machine(&self) -> Vec<((String, String), Vec<&ManifestEntry>)> {
        let mut groups: std::collections::BTreeMap<(String, String), Vec<&ManifestEntry>> =
            std::collections::BTreeMap::new();
        for e in &self.entries {
            groups
                .entry((e.machine_type.clone(), e.machine_id.clone()))
                .or_default()
                .push(e);
        }
        groups.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutRule {
    /// `<...>/machine_type/id_XX/{normal,abnormal}/*.wav`, with an optional
    /// `*dB`-suffixed ancestor used as the SNR tag.
    Mimii,
    /// An explicit CSV manifest file.
    Csv,
}

impl std::str::FromStr for LayoutRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mimii" => Ok(LayoutRule::Mimii),
            "csv" => Ok(LayoutRule::Csv),
            other => Err(Error::InvalidConfig(format!("unknown layout rule {other:?}"))),
        }
    }
}

/// Enumerates a dataset into a manifest, sorted lexicographically by path so
/// two scans of the same tree yield identical manifests.
pub fn scan_dataset(root: &Path, layout: LayoutRule) -> Result<DatasetManifest> {
    match layout {
        LayoutRule::Mimii => scan_mimii(root),
        LayoutRule::Csv => read_manifest_csv(root),
    }
}

fn scan_mimii(root: &Path) -> Result<DatasetManifest> {
    if !root.is_dir() {
        return Err(Error::UnreadablePath(format!("{} is not a directory", root.display())));
    }
    let mut entries = Vec::new();
    for item in WalkDir::new(root).sort_by_file_name() {
        let item = item.map_err(|e| Error::UnreadablePath(e.to_string()))?;
        if !item.file_type().is_file() {
            continue;
        }
        let path = item.path();
        if path.extension().and_then(|e| e.to_str()).map(|e| e.eq_ignore_ascii_case("wav")) != Some(true) {
            continue;
        }
        let components: Vec<String> = path
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        // ... / [snr] / machine_type / id_XX / {normal,abnormal} / file.wav
        if components.len() < 4 {
            continue;
        }
        let label = match components[components.len() - 2].as_str() {
            "normal" => Label::Normal,
            "abnormal" | "anormal" => Label::Anormal,
            _ => continue,
        };
        let machine_id = components[components.len() - 3].clone();
        let machine_type = components[components.len() - 4].clone();
        let snr = components
            .iter()
            .rev()
            .skip(4)
            .find(|c| c.ends_with("dB") || c.ends_with("db"))
            .cloned()
            .unwrap_or_default();
        entries.push(ManifestEntry {
            path: path.to_string_lossy().into_owned(),
            label,
            machine_type,
            machine_id,
            snr,
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no {{normal,abnormal}}/*.wav files under {}",
            root.display()
        )));
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    DatasetManifest::new(entries)
}

/// Reads a CSV manifest and verifies that every listed file exists.
pub fn read_manifest_csv(path: &Path) -> Result<DatasetManifest> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::UnreadablePath(format!("{}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let expected = ["path", "label", "machine_type", "machine_id", "snr"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::FormatError(format!(
            "manifest header must be {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let entry = ManifestEntry {
            path: record.get(0).unwrap_or_default().to_string(),
            label: record.get(1).unwrap_or_default().parse()?,
            machine_type: record.get(2).unwrap_or_default().to_string(),
            machine_id: record.get(3).unwrap_or_default().to_string(),
            snr: record.get(4).unwrap_or_default().to_string(),
        };
        if !Path::new(&entry.path).is_file() {
            return Err(Error::UnreadablePath(format!("manifest names a missing file: {}", entry.path)));
        }
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset(format!("manifest {} lists no entries", path.display())));
    }
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    DatasetManifest::new(entries)
}

pub fn write_manifest_csv<W: Write>(w: &mut W, manifest: &DatasetManifest) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["path", "label", "machine_type", "machine_id", "snr"])?;
    for e in &manifest.entries {
        writer.write_record([
            e.path.as_str(),
            e.label.as_str(),
            e.machine_type.as_str(),
            e.machine_id.as_str(),
            e.snr.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
