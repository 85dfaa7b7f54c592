//! Directory archives for Tucker decompositions.
//!
//! Layout (one directory per decomposition):
//!
//! * `manifest.json` — format version, core storage flavor, and the full
//!   [`TuckerMeta`] record.
//! * `factor_<j>.bin` — factor matrix for mode `j` (1-based), binary.
//! * `core.bin` (dense) or `core.tns` (sparse) — the core tensor.
//! * `selection_<j>.txt` — for structure-preserving methods, the kept
//!   1-based original indices of mode `j`, one per line.
//!
//! The binary array format is an 8-byte magic, a little-endian `u64` mode
//! count, the dimensions as little-endian `u64`s, then the values as
//! little-endian `f64`s with the first listed dimension varying fastest.
//! Round trips are bit-exact.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tensor::{DenseTensor, Tensor};
use crate::tucker::{TuckerMeta, TuckerTensor};

use super::tns::{read_tns_with_shape, write_tns};

const MAGIC: &[u8; 8] = b"TUCKBIN1";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    /// `"dense"` or `"sparse"`, the storage flavor of the core file.
    core: String,
    meta: TuckerMeta,
}

fn archive_error(file: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Archive {
        file: file.into(),
        msg: msg.into(),
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn write_array(path: &Path, dims: &[usize], data: &[f64]) -> Result<()> {
    let name = file_name(path);
    let wrap = |e: std::io::Error| archive_error(&name, e.to_string());
    let file = fs::File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    out.write_all(MAGIC).map_err(wrap)?;
    out.write_all(&(dims.len() as u64).to_le_bytes()).map_err(wrap)?;
    for &d in dims {
        out.write_all(&(d as u64).to_le_bytes()).map_err(wrap)?;
    }
    for &v in data {
        out.write_all(&v.to_le_bytes()).map_err(wrap)?;
    }
    out.flush().map_err(wrap)?;
    Ok(())
}

fn read_array(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let name = file_name(path);
    let bytes = fs::read(path).map_err(|e| archive_error(&name, e.to_string()))?;
    let fail = |msg: &str| archive_error(&name, msg);
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(fail("not a tensor archive array (bad magic)"));
    }
    let mut cursor = &bytes[8..];
    let mut read_u64 = || -> Result<u64> {
        let mut buf = [0u8; 8];
        cursor
            .read_exact(&mut buf)
            .map_err(|_| fail("truncated header"))?;
        Ok(u64::from_le_bytes(buf))
    };
    let ndims = read_u64()? as usize;
    if ndims == 0 || ndims > 64 {
        return Err(fail("implausible mode count"));
    }
    let mut dims = Vec::with_capacity(ndims);
    let mut len: usize = 1;
    for _ in 0..ndims {
        let d = read_u64()? as usize;
        len = len
            .checked_mul(d)
            .ok_or_else(|| fail("dimension product overflows"))?;
        dims.push(d);
    }
    if cursor.len() != len * 8 {
        return Err(fail(&format!(
            "payload holds {} bytes, dimensions call for {}",
            cursor.len(),
            len * 8
        )));
    }
    let data = cursor
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, data))
}

/// Saves a decomposition into `dir` (created if absent).
pub fn save_tucker(t: &TuckerTensor, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| archive_error(dir.display().to_string(), e.to_string()))?;
    let manifest = Manifest {
        format: FORMAT_VERSION,
        core: match &t.core {
            Tensor::Dense(_) => "dense".into(),
            Tensor::Sparse(_) => "sparse".into(),
        },
        meta: t.meta.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| archive_error("manifest.json", e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)
        .map_err(|e| archive_error("manifest.json", e.to_string()))?;
    for (j, a) in t.factors.iter().enumerate() {
        let path = dir.join(format!("factor_{}.bin", j + 1));
        write_array(&path, &[a.rows(), a.cols()], a.data())?;
    }
    match &t.core {
        Tensor::Dense(c) => write_array(&dir.join("core.bin"), c.shape(), c.values())?,
        Tensor::Sparse(c) => write_tns(c, dir.join("core.tns"))?,
    }
    if let Some(selections) = &t.meta.selections {
        for (j, rows) in selections.iter().enumerate() {
            let name = format!("selection_{}.txt", j + 1);
            let mut text = String::new();
            for &i in rows {
                text.push_str(&(i + 1).to_string());
                text.push('\n');
            }
            fs::write(dir.join(&name), text).map_err(|e| archive_error(&name, e.to_string()))?;
        }
    }
    Ok(())
}

fn load_selection(dir: &Path, j: usize) -> Result<Vec<usize>> {
    let name = format!("selection_{}.txt", j + 1);
    let text =
        fs::read_to_string(dir.join(&name)).map_err(|e| archive_error(&name, e.to_string()))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let i: usize = line.parse().map_err(|_| {
            archive_error(&name, format!("line {}: '{line}' is not an index", lineno + 1))
        })?;
        if i == 0 {
            return Err(archive_error(&name, "indices are 1-based; found 0"));
        }
        rows.push(i - 1);
    }
    Ok(rows)
}

/// Loads a decomposition saved by [`save_tucker`]. Shapes, ranks, and
/// selection files are cross-checked against the manifest; mismatches are
/// reported as archive errors naming the offending file.
pub fn load_tucker(dir: impl AsRef<Path>) -> Result<TuckerTensor> {
    let dir = dir.as_ref();
    let manifest_text = fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| archive_error("manifest.json", e.to_string()))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
        .map_err(|e| archive_error("manifest.json", e.to_string()))?;
    if manifest.format != FORMAT_VERSION {
        return Err(archive_error(
            "manifest.json",
            format!("unsupported format version {}", manifest.format),
        ));
    }
    let meta = manifest.meta;
    let d = meta.shape.len();
    if d == 0 || meta.ranks.len() != d {
        return Err(archive_error(
            "manifest.json",
            "shape and ranks must be non-empty and of equal length",
        ));
    }
    let mut factors = Vec::with_capacity(d);
    for j in 0..d {
        let name = format!("factor_{}.bin", j + 1);
        let (dims, data) = read_array(&dir.join(&name))?;
        if dims != [meta.shape[j], meta.ranks[j]] {
            return Err(archive_error(
                &name,
                format!(
                    "stored shape {dims:?} does not match manifest ({} x {})",
                    meta.shape[j], meta.ranks[j]
                ),
            ));
        }
        factors.push(Matrix::from_col_major(dims[0], dims[1], data)?);
    }
    let core: Tensor = match manifest.core.as_str() {
        "dense" => {
            let (dims, data) = read_array(&dir.join("core.bin"))?;
            if dims != meta.ranks {
                return Err(archive_error(
                    "core.bin",
                    format!("stored shape {dims:?} does not match manifest ranks"),
                ));
            }
            DenseTensor::from_values(&dims, data)?.into()
        }
        "sparse" => read_tns_with_shape(dir.join("core.tns"), &meta.ranks)?.into(),
        other => {
            return Err(archive_error(
                "manifest.json",
                format!("unknown core flavor '{other}'"),
            ))
        }
    };
    if let Some(selections) = &meta.selections {
        if selections.len() != d {
            return Err(archive_error(
                "manifest.json",
                "selections must list one index set per mode",
            ));
        }
        for (j, expected) in selections.iter().enumerate() {
            let on_disk = load_selection(dir, j)?;
            if &on_disk != expected {
                return Err(archive_error(
                    format!("selection_{}.txt", j + 1),
                    "selection file disagrees with the manifest",
                ));
            }
        }
    }
    Ok(TuckerTensor { core, factors, meta })
}
