//! File formats: empirical laws, grid functions, and plain text outputs.
//!
//! Binary files start with an 8-byte magic followed by little-endian `u64`
//! header fields and little-endian `f64` payload.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::euler::{content_hash, EmpiricalLaw, LawManifest};
use crate::littlewood_paley::GridFunction;

const LAW_MAGIC: &[u8; 8] = b"SDLAW\0\0\x01";
const GRID_MAGIC: &[u8; 8] = b"SDGRID\0\x01";

/// SHA-256 of a byte string, hex encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes`, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(8 * values.len());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Format {
            path: self.path.into(),
            reason: format!("truncated at byte {}", self.pos),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn magic(&mut self, want: &[u8; 8]) -> Result<()> {
        if self.take(8)? != want {
            return Err(Error::Format {
                path: self.path.into(),
                reason: "bad magic".into(),
            });
        }
        Ok(())
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Format {
            path: self.path.into(),
            reason: "length overflow".into(),
        })?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format {
                path: self.path.into(),
                reason: format!("{} trailing bytes", self.bytes.len() - self.pos),
            });
        }
        Ok(())
    }
}

/// Binary image of a law: magic, `dim`, `kept`, then the samples.
pub fn law_bytes(law: &EmpiricalLaw) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * law.samples.len());
    out.extend_from_slice(LAW_MAGIC);
    out.extend_from_slice(&(law.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(law.len() as u64).to_le_bytes());
    put_f64s(&mut out, &law.samples);
    out
}

/// Writes `<stem>.bin` and the manifest `<stem>.json`.
pub fn write_law(dir: &Path, stem: &str, law: &EmpiricalLaw) -> Result<()> {
    write_bytes(&dir.join(format!("{stem}.bin")), &law_bytes(law))?;
    let json = serde_json::to_string_pretty(&law.manifest)? + "\n";
    write_bytes(&dir.join(format!("{stem}.json")), json.as_bytes())
}

/// Reads a law written by [`write_law`] and checks it against its manifest.
pub fn read_law(bin: &Path) -> Result<EmpiricalLaw> {
    let json_path = bin.with_extension("json");
    let manifest: LawManifest = serde_json::from_str(&read_text(&json_path)?).map_err(|e| Error::Format {
        path: json_path.clone(),
        reason: e.to_string(),
    })?;
    let bytes = read_bytes(bin)?;
    let mut r = Reader {
        path: bin,
        bytes: &bytes,
        pos: 0,
    };
    r.magic(LAW_MAGIC)?;
    let dim = r.u64()? as usize;
    let kept = r.u64()? as usize;
    let samples = r.f64s(dim.saturating_mul(kept))?;
    r.finish()?;
    let bad = |reason: String| Error::Format {
        path: bin.into(),
        reason,
    };
    if dim != manifest.dim || kept != manifest.kept {
        return Err(bad(format!(
            "header ({dim} x {kept}) disagrees with manifest ({} x {})",
            manifest.dim, manifest.kept
        )));
    }
    let hash = content_hash(&samples);
    if hash != manifest.content_hash {
        return Err(bad(format!("content hash {hash} does not match manifest {}", manifest.content_hash)));
    }
    Ok(EmpiricalLaw { samples, manifest })
}

/// Binary image of a grid function: magic, `dim`, `grid_size`, period, values.
pub fn grid_bytes(f: &GridFunction) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * f.values.len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(f.dim as u64).to_le_bytes());
    out.extend_from_slice(&(f.grid_size as u64).to_le_bytes());
    out.extend_from_slice(&f.period.to_le_bytes());
    put_f64s(&mut out, &f.values);
    out
}

pub fn write_grid(path: &Path, f: &GridFunction) -> Result<()> {
    write_bytes(path, &grid_bytes(f))
}

pub fn read_grid(path: &Path) -> Result<GridFunction> {
    let bytes = read_bytes(path)?;
    let mut r = Reader {
        path,
        bytes: &bytes,
        pos: 0,
    };
    r.magic(GRID_MAGIC)?;
    let dim = r.u64()? as usize;
    let grid_size = r.u64()? as usize;
    let period = r.f64s(1)?[0];
    if dim != 1 && dim != 2 {
        return Err(Error::Format {
            path: path.into(),
            reason: format!("dimension {dim} is not 1 or 2"),
        });
    }
    let values = r.f64s(grid_size.saturating_pow(dim as u32))?;
    r.finish()?;
    Ok(GridFunction {
        dim,
        period,
        grid_size,
        values,
    })
}

/// CSV with columns `x,value` (1D) or `x,y,value` (2D) on the nodes `kL/N`.
pub fn grid_csv(f: &GridFunction) -> String {
    let h = f.period / f.grid_size as f64;
    let mut out = String::new();
    if f.dim == 1 {
        out.push_str("x,value\n");
        for (i, v) in f.values.iter().enumerate() {
            let _ = writeln!(out, "{},{:e}", i as f64 * h, v);
        }
    } else {
        out.push_str("x,y,value\n");
        for (k, v) in f.values.iter().enumerate() {
            let (i, j) = (k % f.grid_size, k / f.grid_size);
            let _ = writeln!(out, "{},{},{:e}", i as f64 * h, j as f64 * h, v);
        }
    }
    out
}

/// One sample per row, columns `x0..x{d-1}`.
pub fn samples_csv(samples: &[f64], dim: usize) -> String {
    let mut out = (0..dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in samples.chunks(dim) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
