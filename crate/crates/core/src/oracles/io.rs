//! Transport instances on disk: headerless decimal CSV for the cost matrix
//! (row-major, one matrix row per line) and the marginals (one value per
//! line), tied together by a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::datagen::normalize_cost;
use crate::error::{Error, Result};
use crate::oracles::TransportInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// The cost is divided by the mean of its entries when loaded.
    Mean,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub p: usize,
    pub gamma: f64,
    pub cost_file: String,
    pub mu_file: String,
    pub nu_file: String,
    pub normalization: Normalization,
}

pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for x in v {
        w.write_record([x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("{}: bad number {s:?}: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let rows = read_rows(path)?;
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument(format!("{}: ragged matrix", path.display())));
    }
    Array2::from_shape_vec((n, m), rows.concat()).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Accepts either a single row or a single column.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    Ok(read_rows(path)?.concat())
}

/// Writes `<stem>.json`, `<stem>_cost.csv`, `<stem>_mu.csv` and
/// `<stem>_nu.csv` into `dir`; returns the manifest path.
pub fn write_instance(dir: &Path, stem: &str, inst: &TransportInstance, normalization: Normalization) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let manifest = InstanceManifest {
        p: inst.p(),
        gamma: inst.gamma(),
        cost_file: format!("{stem}_cost.csv"),
        mu_file: format!("{stem}_mu.csv"),
        nu_file: format!("{stem}_nu.csv"),
        normalization,
    };
    write_matrix_csv(&dir.join(&manifest.cost_file), inst.cost())?;
    write_vector_csv(&dir.join(&manifest.mu_file), inst.mu())?;
    write_vector_csv(&dir.join(&manifest.nu_file), inst.nu())?;
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Loads an instance; file names resolve relative to the manifest.
pub fn read_instance(manifest_path: &Path) -> Result<TransportInstance> {
    let manifest: InstanceManifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut cost = read_matrix_csv(&base.join(&manifest.cost_file))?;
    if cost.nrows() != manifest.p || cost.ncols() != manifest.p {
        return Err(Error::InvalidArgument(format!(
            "cost is {}x{}, manifest says p = {}",
            cost.nrows(),
            cost.ncols(),
            manifest.p
        )));
    }
    if manifest.normalization == Normalization::Mean {
        cost = normalize_cost(&cost)?;
    }
    let mu = read_vector_csv(&base.join(&manifest.mu_file))?;
    let nu = read_vector_csv(&base.join(&manifest.nu_file))?;
    TransportInstance::new(cost, mu, nu, manifest.gamma)
}
