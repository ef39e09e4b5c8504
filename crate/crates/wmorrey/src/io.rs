//! Function import/export in the flat binary format (8-byte little-endian
//! floats plus a JSON header) and the CSV/JSON report writers.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::GridSpec;
use crate::error::{Error, Result};
use crate::lattice::{Grid, SampledFunction};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionHeader {
    pub grid: GridSpec,
    pub name: String,
}

fn header_path(base: &Path) -> PathBuf {
    base.with_extension("json")
}

fn values_path(base: &Path) -> PathBuf {
    base.with_extension("f64")
}

/// Writes `<base>.json` (header) and `<base>.f64` (values). The value file
/// holds exactly the sample array in canonical index order, so export
/// followed by import is bit-identical.
pub fn export_function(base: &Path, name: &str, f: &SampledFunction) -> Result<()> {
    let grid = f.grid();
    let header = FunctionHeader {
        grid: GridSpec { n: grid.dimension(), l: grid.half_extent(), h: grid.spacing() },
        name: name.to_string(),
    };
    fs::write(header_path(base), serde_json::to_vec_pretty(&header)?)?;
    let mut bytes = Vec::with_capacity(8 * f.values().len());
    for v in f.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(values_path(base), bytes)?;
    Ok(())
}

/// Reads a function pair written by [`export_function`]; the header grid
/// must reproduce a valid lattice matching the value count.
pub fn import_function(base: &Path) -> Result<(String, SampledFunction)> {
    let header: FunctionHeader = serde_json::from_slice(&fs::read(header_path(base))?)?;
    let grid = Arc::new(Grid::new(header.grid.n, header.grid.l, header.grid.h)?);
    let mut file = fs::File::open(values_path(base))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.sample_count() {
        return Err(Error::GridMismatch(format!(
            "value file holds {} bytes, header grid wants {}",
            bytes.len(),
            8 * grid.sample_count()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((header.name, SampledFunction::new(grid, values)?))
}

/// UTF-8, comma-separated, header row first.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Hex SHA-256 of the canonical JSON encoding of `value`.
pub fn content_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Arc::new(Grid::new(1, 1.0, 2f64.powi(-6)).unwrap());
        let f = SampledFunction::from_fn(grid, |x| (x[0] * 17.3).sin() / 3.0).unwrap();
        let base = dir.path().join("member");
        export_function(&base, "osc", &f).unwrap();
        let (name, back) = import_function(&base).unwrap();
        assert_eq!(name, "osc");
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid().spacing(), f.grid().spacing());
    }

    #[test]
    fn import_rejects_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Arc::new(Grid::new(1, 1.0, 0.25).unwrap());
        let f = SampledFunction::from_fn(grid, |x| x[0]).unwrap();
        let base = dir.path().join("member");
        export_function(&base, "x", &f).unwrap();
        // Corrupt the header to a different grid.
        let header = r#"{"grid": {"n": 1, "L": 1.0, "h": 0.125}, "name": "x"}"#;
        fs::write(base.with_extension("json"), header).unwrap();
        assert!(matches!(import_function(&base), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn content_hash_is_stable() {
        let a = serde_json::json!({"k": 1, "v": [1.5, 2.5]});
        assert_eq!(content_hash(&a).unwrap(), content_hash(&a).unwrap());
        let b = serde_json::json!({"k": 2});
        assert_ne!(content_hash(&a).unwrap(), content_hash(&b).unwrap());
    }
}
