//! Benchmark datasets.
//!
//! Files are comma-separated with a header row: the feature columns followed
//! by an integer class label. Both datasets ship with the crate.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const IRIS_CSV: &str = include_str!("../data/iris.csv");
pub const BREAST_CANCER_CSV: &str = include_str!("../data/breast_cancer.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Iris,
    BreastCancer,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Iris => "iris",
            DatasetKind::BreastCancer => "breast_cancer",
        }
    }

    pub fn samples(self) -> usize {
        match self {
            DatasetKind::Iris => 150,
            DatasetKind::BreastCancer => 569,
        }
    }

    pub fn features(self) -> usize {
        match self {
            DatasetKind::Iris => 4,
            DatasetKind::BreastCancer => 30,
        }
    }

    pub fn classes(self) -> usize {
        match self {
            DatasetKind::Iris => 3,
            DatasetKind::BreastCancer => 2,
        }
    }

    /// The vendored copy of the dataset, not yet normalized.
    pub fn load_bundled(self) -> Result<Dataset> {
        let text = match self {
            DatasetKind::Iris => IRIS_CSV,
            DatasetKind::BreastCancer => BREAST_CANCER_CSV,
        };
        parse_dataset(text.as_bytes(), self)
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "iris" => Ok(DatasetKind::Iris),
            "breast_cancer" | "breastcancer" => Ok(DatasetKind::BreastCancer),
            _ => Err(Error::InvalidConfig(format!("unknown dataset {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub names: Vec<String>,
    /// One row per sample.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// One-hot rows with entries in {0, 1}.
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

pub fn one_hot(label: usize, classes: usize) -> Vec<f64> {
    (0..classes).map(|k| if k == label { 1.0 } else { 0.0 }).collect()
}

pub fn load_dataset(path: impl AsRef<Path>, kind: DatasetKind) -> Result<Dataset> {
    parse_dataset(File::open(path)?, kind)
}

/// Parses delimited text with a header row. Line numbers in errors are
/// 1-based and count the header.
pub fn parse_dataset<R: Read>(reader: R, kind: DatasetKind) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let width = kind.features() + 1;
    let malformed = |line: usize, reason: String| Error::MalformedRow { line, reason };

    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    if header.len() != width {
        return Err(malformed(1, format!("expected {width} columns, found {}", header.len())));
    }
    let names = header.iter().take(kind.features()).map(|s| s.trim().to_string()).collect();

    let mut features = Vec::with_capacity(kind.samples());
    let mut labels = Vec::with_capacity(kind.samples());
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(malformed(line, format!("expected {width} columns, found {}", record.len())));
        }
        let row = record
            .iter()
            .take(kind.features())
            .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| malformed(line, "non-numeric feature".into()))?;
        let raw = record[kind.features()].trim();
        let label = raw
            .parse::<usize>()
            .ok()
            .filter(|l| *l < kind.classes())
            .ok_or_else(|| Error::UnknownLabel { line, label: raw.to_string() })?;
        features.push(row);
        labels.push(label);
    }
    if features.len() != kind.samples() {
        let line = features.len() + 2;
        return Err(malformed(line, format!("expected {} samples, found {}", kind.samples(), features.len())));
    }
    let targets = labels.iter().map(|&l| one_hot(l, kind.classes())).collect();
    Ok(Dataset { kind, names, features, labels, targets })
}

/// Per-feature min-max scaling to [-0.5, 0.5] V. Constant features map to 0.
pub fn normalize(dataset: &Dataset) -> Dataset {
    let d = dataset.features.first().map_or(0, Vec::len);
    let mut out = dataset.clone();
    for j in 0..d {
        let (lo, hi) = dataset
            .features
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
        for row in &mut out.features {
            row[j] = if hi > lo {
                if row[j] == hi {
                    0.5
                } else {
                    (row[j] - lo) / (hi - lo) - 0.5
                }
            } else {
                0.0
            };
        }
    }
    out
}
