//! Field snapshots: raw little-endian `f64` data plus a JSON sidecar.
//!
//! `<stem>.bin` holds `components * N^D` values, component-major, sites in
//! row-major order with the last axis fastest. `<stem>.json` records the
//! lattice and the seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{LatticeField, LatticeSpec};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub version: u32,
    pub spec: LatticeSpec,
    pub seed: u64,
    /// Stream index within the seed's run.
    #[serde(default)]
    pub stream: u64,
    pub dtype: String,
    pub layout: String,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut p = stem.as_os_str().to_owned();
    p.push(".");
    p.push(ext);
    PathBuf::from(p)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = dir.join(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `<stem>.bin` and `<stem>.json`; returns both paths.
pub fn write_snapshot(field: &LatticeField, seed: u64, stream: u64, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let bytes: Vec<u8> = field.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    let meta = SnapshotMeta {
        version: SNAPSHOT_VERSION,
        spec: *field.spec(),
        seed,
        stream,
        dtype: "f64-le".into(),
        layout: "component-major, row-major sites, last axis fastest".into(),
    };
    let bin = with_ext(stem, "bin");
    let json = with_ext(stem, "json");
    write_atomic(&bin, &bytes)?;
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(&json, text.as_bytes())?;
    Ok((bin, json))
}

pub fn read_snapshot(stem: &Path) -> Result<(LatticeField, SnapshotMeta)> {
    let text = fs::read_to_string(with_ext(stem, "json"))?;
    let meta: SnapshotMeta = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
    meta.spec.validate()?;
    let bytes = fs::read(with_ext(stem, "bin"))?;
    if bytes.len() != 8 * meta.spec.num_dof() {
        return Err(Error::DimensionMismatch {
            expected: 8 * meta.spec.num_dof(),
            actual: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((LatticeField::from_vec(meta.spec, data)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_measure::sample_gff;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = LatticeSpec::new(2, 8, 4.0, 2).unwrap();
        let f = sample_gff(&spec, 11);
        let stem = dir.path().join("snap");
        let (bin, _) = write_snapshot(&f, 11, 0, &stem).unwrap();
        assert_eq!(fs::metadata(&bin).unwrap().len(), 8 * 128);
        let (g, meta) = read_snapshot(&stem).unwrap();
        assert_eq!(g.data(), f.data());
        assert_eq!(meta.seed, 11);
        assert_eq!(meta.spec, spec);
    }
}
