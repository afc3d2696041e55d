//! Tabular datasets: CSV ingestion and a synthetic classification task.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixer::Targets;
use crate::special::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    #[default]
    Regression,
    Classification,
}

/// A column picked by zero-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delimiter {
    /// Comma if the first line has one, else tab, else runs of whitespace.
    #[default]
    Auto,
    Comma,
    Semicolon,
    Tab,
    Whitespace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    /// Target columns; empty means the last column.
    #[serde(default)]
    pub target_columns: Vec<ColumnRef>,
    #[serde(default = "yes")]
    pub has_header: bool,
    #[serde(default)]
    pub delimiter: Delimiter,
    /// Classification targets must be non-negative integers.
    #[serde(default)]
    pub task: Task,
}

fn yes() -> bool {
    true
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            target_columns: Vec::new(),
            has_header: true,
            delimiter: Delimiter::Auto,
            task: Task::Regression,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub targets: Targets,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix, targets: Targets) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::usage(format!(
                "{} feature rows but {} targets",
                features.rows(),
                targets.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            features,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn task(&self) -> Task {
        match self.targets {
            Targets::Classes { .. } => Task::Classification,
            Targets::Values(_) => Task::Regression,
        }
    }

    /// Output width a model for this dataset needs.
    pub fn output_dim(&self) -> usize {
        match &self.targets {
            Targets::Classes { num_classes, .. } => *num_classes,
            Targets::Values(m) => m.cols(),
        }
    }
}

fn split_fields(line: &str, delim: Delimiter) -> Vec<&str> {
    match delim {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Semicolon => line.split(';').map(str::trim).collect(),
        Delimiter::Tab => line.split('\t').map(str::trim).collect(),
        Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
    }
}

fn detect(first: &str) -> Delimiter {
    if first.contains(',') {
        Delimiter::Comma
    } else if first.contains(';') {
        Delimiter::Semicolon
    } else {
        Delimiter::Whitespace
    }
}

/// Reads a numeric table. Rows are numbered from 1, counting data rows only
/// (the header and blank lines are skipped).
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = match lines.clone().next() {
        Some(l) => l,
        None => return Err(Error::EmptyDataset(path.to_path_buf())),
    };
    let delim = match schema.delimiter {
        Delimiter::Auto => detect(first),
        d => d,
    };

    let header: Option<Vec<String>> = if schema.has_header {
        let h = lines.next().expect("checked non-empty");
        Some(
            split_fields(h, delim)
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
    } else {
        None
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = header.as_ref().map(Vec::len);
    for (k, line) in lines.enumerate() {
        let row = k + 1;
        let fields = split_fields(line, delim);
        let w = *width.get_or_insert(fields.len());
        if fields.len() != w {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row,
                detail: format!("expected {w} fields, found {}", fields.len()),
            });
        }
        let mut values = Vec::with_capacity(w);
        for (column, f) in fields.iter().enumerate() {
            match f.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        path: path.to_path_buf(),
                        row,
                        column: column + 1,
                        value: f.to_string(),
                    })
                }
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    let width = rows[0].len();
    if width < 2 {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            row: 1,
            detail: "need at least one feature and one target column".into(),
        });
    }

    let target_idx = resolve_targets(&schema.target_columns, header.as_deref(), width, path)?;
    let feature_idx: Vec<usize> = (0..width).filter(|c| !target_idx.contains(c)).collect();
    if feature_idx.is_empty() {
        return Err(Error::Config("every column is a target".into()));
    }

    let n = rows.len();
    let mut features = Matrix::zeros(n, feature_idx.len());
    for (i, r) in rows.iter().enumerate() {
        for (o, &c) in features.row_mut(i).iter_mut().zip(&feature_idx) {
            *o = r[c];
        }
    }
    let targets = match schema.task {
        Task::Regression => {
            let mut t = Matrix::zeros(n, target_idx.len());
            for (i, r) in rows.iter().enumerate() {
                for (o, &c) in t.row_mut(i).iter_mut().zip(&target_idx) {
                    *o = r[c];
                }
            }
            Targets::Values(t)
        }
        Task::Classification => {
            if target_idx.len() != 1 {
                return Err(Error::Config(
                    "classification needs exactly one target column".into(),
                ));
            }
            let c = target_idx[0];
            let mut labels = Vec::with_capacity(n);
            for (i, r) in rows.iter().enumerate() {
                let v = r[c];
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::MalformedRow {
                        path: path.to_path_buf(),
                        row: i + 1,
                        detail: format!("class label {v} is not a non-negative integer"),
                    });
                }
                labels.push(v as usize);
            }
            let num_classes = labels.iter().max().map_or(0, |m| m + 1);
            Targets::Classes {
                labels,
                num_classes,
            }
        }
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, features, targets)
}

fn resolve_targets(
    cols: &[ColumnRef],
    header: Option<&[String]>,
    width: usize,
    path: &Path,
) -> Result<Vec<usize>> {
    if cols.is_empty() {
        return Ok(vec![width - 1]);
    }
    let mut out = Vec::with_capacity(cols.len());
    for c in cols {
        let idx = match c {
            ColumnRef::Index(i) if *i < width => *i,
            ColumnRef::Index(i) => {
                return Err(Error::Config(format!(
                    "target column {i} out of range for {width} columns"
                )))
            }
            ColumnRef::Name(name) => header
                .and_then(|h| h.iter().position(|x| x == name))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "no column named {name:?} in {}",
                        PathBuf::from(path).display()
                    ))
                })?,
        };
        if out.contains(&idx) {
            return Err(Error::Config(format!("target column {idx} listed twice")));
        }
        out.push(idx);
    }
    Ok(out)
}

/// Two Gaussian classes with identity covariance and means ±(separation/2)
/// along the diagonal direction. The Bayes accuracy is Φ(separation / 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobsConfig {
    #[serde(default = "BlobsConfig::default_n")]
    pub n: usize,
    #[serde(default = "BlobsConfig::default_dim")]
    pub dim: usize,
    #[serde(default = "BlobsConfig::default_separation")]
    pub separation: f64,
    /// Seed of the data itself, independent of the training seeds.
    #[serde(default)]
    pub seed: u64,
}

impl BlobsConfig {
    fn default_n() -> usize {
        2000
    }
    fn default_dim() -> usize {
        10
    }
    fn default_separation() -> f64 {
        2.5
    }
}

impl Default for BlobsConfig {
    fn default() -> Self {
        Self {
            n: Self::default_n(),
            dim: Self::default_dim(),
            separation: Self::default_separation(),
            seed: 0,
        }
    }
}

pub fn gaussian_blobs(cfg: &BlobsConfig) -> Result<Dataset> {
    if cfg.n < 2 || cfg.dim == 0 {
        return Err(Error::Config("blobs need n ≥ 2 and dim ≥ 1".into()));
    }
    if !cfg.separation.is_finite() {
        return Err(Error::Config("blob separation must be finite".into()));
    }
    let mut rng = RngStream::new(cfg.seed);
    let shift = 0.5 * cfg.separation / (cfg.dim as f64).sqrt();
    let mut x = Matrix::zeros(cfg.n, cfg.dim);
    let mut labels = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let y = rng.below(2);
        let sign = if y == 1 { 1.0 } else { -1.0 };
        for v in x.row_mut(i) {
            *v = sign * shift + rng.standard_normal();
        }
        labels.push(y);
    }
    Dataset::new(
        "blobs",
        x,
        Targets::Classes {
            labels,
            num_classes: 2,
        },
    )
}
