//! `fvecs` / `ivecs` readers and writers.
//!
//! Each record is a little-endian `i32` dimension followed by that many
//! little-endian `f32` (fvecs) or `i32` (ivecs) values.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{format_err, usage, Result};
use crate::metrics::Dataset;

fn parse_records(bytes: &[u8], what: &str) -> Result<(usize, Vec<[u8; 4]>)> {
    let mut pos = 0usize;
    let mut dim: Option<usize> = None;
    let mut words = Vec::with_capacity(bytes.len() / 4);
    let mut record = 0usize;
    while pos < bytes.len() {
        let head = bytes
            .get(pos..pos + 4)
            .ok_or_else(|| format_err(format!("{what}: truncated header in record {record}")))?;
        let d = i32::from_le_bytes(head.try_into().unwrap());
        if d <= 0 {
            return Err(format_err(format!("{what}: record {record} has dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(format_err(format!(
                    "{what}: record {record} has dimension {d}, expected {expected}"
                )))
            }
            _ => {}
        }
        pos += 4;
        let body = bytes.get(pos..pos + 4 * d).ok_or_else(|| {
            format_err(format!("{what}: record {record} truncated (claims {d} values)"))
        })?;
        words.extend(body.chunks_exact(4).map(|c| <[u8; 4]>::try_from(c).unwrap()));
        pos += 4 * d;
        record += 1;
    }
    match dim {
        Some(d) => Ok((d, words)),
        None => Err(format_err(format!("{what}: file contains no records"))),
    }
}

pub fn read_fvecs(path: impl AsRef<Path>) -> Result<Dataset> {
    let bytes = fs::read(path.as_ref())?;
    let (dim, words) = parse_records(&bytes, "fvecs")?;
    let data = words.into_iter().map(f32::from_le_bytes).collect();
    Dataset::new(dim, data).map_err(|e| format_err(format!("fvecs: {e}")))
}

pub fn write_fvecs(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    let dim = dataset.dim() as i32;
    for row in dataset.rows() {
        w.write_all(&dim.to_le_bytes())?;
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads integer rows. All rows must share one length.
pub fn read_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    let bytes = fs::read(path.as_ref())?;
    let (dim, words) = parse_records(&bytes, "ivecs")?;
    let flat: Vec<i32> = words.into_iter().map(i32::from_le_bytes).collect();
    Ok(flat.chunks_exact(dim).map(<[i32]>::to_vec).collect())
}

pub fn write_ivecs<R: AsRef<[i32]>>(rows: &[R], path: impl AsRef<Path>) -> Result<()> {
    let dim = rows.first().map_or(0, |r| r.as_ref().len());
    if dim == 0 {
        return Err(usage("ivecs rows must be non-empty"));
    }
    let mut w = BufWriter::new(fs::File::create(path.as_ref())?);
    for row in rows {
        let row = row.as_ref();
        if row.len() != dim {
            return Err(usage("ivecs rows must share one length"));
        }
        w.write_all(&(dim as i32).to_le_bytes())?;
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}
