//! Dataset files: a `tau_ps,counts` CSV plus a `<name>.meta.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fitting::Dataset;
use crate::model::HomCurve;

/// Exact ps-per-ns factor used for window half-widths.
pub const PS_PER_NS: f64 = 1e3;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected header `tau_ps,counts`, found `{found}`")]
    Header { path: PathBuf, found: String },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: line {line}: tau_ps not strictly increasing")]
    NonMonotone { path: PathBuf, line: u64 },
    #[error("{path}: line {line}: negative counts")]
    NegativeCount { path: PathBuf, line: u64 },
    #[error("missing sidecar metadata file {path}")]
    MissingSidecar { path: PathBuf },
    #[error("{path}: sidecar key `{key}`: {message}")]
    SidecarKey {
        path: PathBuf,
        key: &'static str,
        message: String,
    },
    #[error("{path}: invalid sidecar JSON: {message}")]
    SidecarJson { path: PathBuf, message: String },
}

type Result<T> = std::result::Result<T, DatasetError>;

/// Sidecar contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub window_half_width_ns: f64,
    pub fiber_length_km: f64,
    pub label: String,
}

/// `data/foo.csv` -> `data/foo.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Read a `tau_ps,counts` CSV. `#` lines are comments; decimal counts are
/// accepted so that model rates can be stored in the same format.
pub fn read_curve(path: &Path) -> Result<HomCurve> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| DatasetError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(1, |p| p.line()),
            message: e.to_string(),
        })?
        .clone();
    if header.len() != 2 || &header[0] != "tau_ps" || &header[1] != "counts" {
        return Err(DatasetError::Header {
            path: path.to_path_buf(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut tau = Vec::new();
    let mut counts = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DatasetError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize, name: &str| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DatasetError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("{name} `{}` is not a finite number", &record[k]),
                })
        };
        let (t, c) = (field(0, "tau_ps")?, field(1, "counts")?);
        if tau.last().is_some_and(|&prev| t <= prev) {
            return Err(DatasetError::NonMonotone {
                path: path.to_path_buf(),
                line,
            });
        }
        if c < 0.0 {
            return Err(DatasetError::NegativeCount {
                path: path.to_path_buf(),
                line,
            });
        }
        tau.push(t);
        counts.push(c);
    }
    Ok(HomCurve::new(tau, counts).expect("validated while parsing"))
}

pub fn write_curve(curve: &HomCurve, path: &Path) -> Result<()> {
    let mut out = String::from("tau_ps,counts\n");
    for (t, c) in curve.iter() {
        out.push_str(&format!("{t},{c}\n"));
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_meta(csv_path: &Path) -> Result<DatasetMeta> {
    let path = sidecar_path(csv_path);
    if !path.exists() {
        return Err(DatasetError::MissingSidecar { path });
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| DatasetError::SidecarJson {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let key_err = |key: &'static str, message: &str| DatasetError::SidecarKey {
        path: path.clone(),
        key,
        message: message.to_string(),
    };
    let number = |key: &'static str| -> Result<f64> {
        value
            .get(key)
            .ok_or_else(|| key_err(key, "missing"))?
            .as_f64()
            .ok_or_else(|| key_err(key, "not a number"))
    };
    let window = number("window_half_width_ns")?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(key_err("window_half_width_ns", "must be > 0"));
    }
    let length = number("fiber_length_km")?;
    if !(length >= 0.0 && length.is_finite()) {
        return Err(key_err("fiber_length_km", "must be >= 0"));
    }
    let label = value
        .get("label")
        .ok_or_else(|| key_err("label", "missing"))?
        .as_str()
        .ok_or_else(|| key_err("label", "not a string"))?
        .to_string();
    Ok(DatasetMeta {
        window_half_width_ns: window,
        fiber_length_km: length,
        label,
    })
}

pub fn write_meta(meta: &DatasetMeta, csv_path: &Path) -> Result<()> {
    let path = sidecar_path(csv_path);
    let text = serde_json::to_string_pretty(meta).expect("plain struct serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))
}

pub fn read_dataset(csv_path: &Path) -> Result<Dataset> {
    let curve = read_curve(csv_path)?;
    let meta = read_meta(csv_path)?;
    Ok(Dataset {
        curve,
        window_half_width_ps: meta.window_half_width_ns * PS_PER_NS,
        fiber_length_km: meta.fiber_length_km,
        label: meta.label,
    })
}

pub fn write_dataset(dataset: &Dataset, csv_path: &Path) -> Result<()> {
    write_curve(&dataset.curve, csv_path)?;
    write_meta(
        &DatasetMeta {
            window_half_width_ns: dataset.window_half_width_ps / PS_PER_NS,
            fiber_length_km: dataset.fiber_length_km,
            label: dataset.label.clone(),
        },
        csv_path,
    )
}

/// Every `*.csv` in `dir` with its sidecar, sorted by file name.
pub fn read_dataset_dir(dir: &Path) -> Result<Vec<(PathBuf, Dataset)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| read_dataset(&p).map(|d| (p, d))).collect()
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
