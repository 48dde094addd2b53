//! Provenance metadata and JSON/CSV emission of experiment reports.
//!
//! Every report is written as one pretty-printed JSON document holding the
//! full result plus provenance, and one or more flat CSV tables. CSV bodies
//! carry no timestamps or timings, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Where a report came from: the resolved configuration, seeds, `eps` and
/// any declared metadata (probe points, interval boundaries, ...).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub seed: u64,
    pub eps: f64,
    pub config: serde_json::Value,
    pub metadata: BTreeMap<String, serde_json::Value>,
    /// [`content_hash`] of the serialized `config` and `metadata`.
    pub input_hash: String,
    pub crate_version: String,
}

impl Provenance {
    pub fn new<C: Serialize>(
        experiment: &str,
        seed: u64,
        eps: f64,
        config: &C,
        metadata: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let mut hashed = serde_json::to_vec(&config)?;
        hashed.extend(serde_json::to_vec(&metadata)?);
        Ok(Self {
            experiment: experiment.to_owned(),
            seed,
            eps,
            config,
            metadata,
            input_hash: content_hash(&hashed),
            crate_version: env!("CARGO_PKG_VERSION").to_owned(),
        })
    }
}

/// Git-style blob hash: SHA-256 over `"blob <len>\0"` followed by the bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// One flat CSV table. `name` is empty for the main table of a report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvTable {
    pub name: String,
    pub body: Vec<u8>,
}

/// Serializes rows with a header line taken from the row's field names.
pub fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn read_csv<R: DeserializeOwned, T: Read>(reader: T) -> Result<Vec<R>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Into::into))
        .collect()
}

pub fn read_csv_file<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    read_csv(fs::File::open(path)?)
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(fs::File::open(path)?))?)
}

/// A serializable experiment result with its flat tables.
pub trait Report: Serialize + DeserializeOwned {
    fn provenance(&self) -> &Provenance;
    fn csv_tables(&self) -> Result<Vec<CsvTable>>;
}

/// `<experiment>_<timestamp>_<seed>`; a named table becomes
/// `<experiment>-<name>_<timestamp>_<seed>`.
pub fn file_stem(experiment: &str, table: &str, timestamp: &str, seed: u64) -> String {
    if table.is_empty() {
        format!("{experiment}_{timestamp}_{seed}")
    } else {
        format!("{experiment}-{table}_{timestamp}_{seed}")
    }
}

/// Writes the JSON document and every CSV table into `dir`, creating it if
/// needed. Returns the written paths, JSON first.
pub fn write_report<R: Report>(report: &R, dir: &Path, timestamp: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let prov = report.provenance();
    let mut paths = Vec::new();
    let json_path = dir.join(format!("{}.json", file_stem(&prov.experiment, "", timestamp, prov.seed)));
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    fs::write(&json_path, json)?;
    paths.push(json_path);
    for table in report.csv_tables()? {
        let p = dir.join(format!("{}.csv", file_stem(&prov.experiment, &table.name, timestamp, prov.seed)));
        fs::write(&p, &table.body)?;
        paths.push(p);
    }
    Ok(paths)
}
