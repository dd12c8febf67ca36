use std::fs;
use std::path::Path;

use crate::error::{format_err, Error, Result};
use crate::index::{BuildMeta, MagIndex};

pub const MAGIC: [u8; 4] = *b"MAG1";
pub const FORMAT_VERSION: u32 = 1;

fn put(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| format_err(format!("value {v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub(crate) fn encode(index: &MagIndex) -> Result<Vec<u8>> {
    let n = index.len();
    let mut out = Vec::with_capacity(24 + n * (8 + 4 * (index.k1 + index.k2)) + n);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [n, index.dim, index.k1, index.k2] {
        put(&mut out, v)?;
    }
    for node in 0..n {
        put(&mut out, index.euclid[node].len())?;
        put(&mut out, index.ip[node].len())?;
        for &e in index.euclid[node].iter().chain(&index.ip[node]) {
            out.extend_from_slice(&e.to_le_bytes());
        }
    }
    out.extend(index.self_dominator.iter().map(|&f| f as u8));
    let meta = serde_json::to_vec(&index.meta).map_err(|e| format_err(e.to_string()))?;
    put(&mut out, meta.len())?;
    out.extend_from_slice(&meta);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| format_err(format!("index file truncated while reading {what}")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub(crate) fn decode(buf: &[u8]) -> Result<MagIndex> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(format_err("bad magic; not an index file"));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion { found: version, expected: FORMAT_VERSION });
    }
    let n = r.u32("header")? as usize;
    let dim = r.u32("header")? as usize;
    let k1 = r.u32("header")? as usize;
    let k2 = r.u32("header")? as usize;
    if dim == 0 {
        return Err(format_err("dimension is zero"));
    }
    let mut euclid = Vec::with_capacity(n.min(buf.len() / 8));
    let mut ip = Vec::with_capacity(n.min(buf.len() / 8));
    for node in 0..n {
        let ne = r.u32("edge counts")? as usize;
        let ni = r.u32("edge counts")? as usize;
        if ne > k1 || ni > k2 {
            return Err(format_err(format!("node {node}: edge counts {ne}/{ni} exceed caps {k1}/{k2}")));
        }
        let mut list = |count: usize| -> Result<Vec<u32>> {
            (0..count)
                .map(|_| {
                    let e = r.u32("edges")?;
                    if e as usize >= n {
                        return Err(format_err(format!("node {node}: edge {e} out of range")));
                    }
                    Ok(e)
                })
                .collect()
        };
        euclid.push(list(ne)?);
        ip.push(list(ni)?);
    }
    let flags = r.take(n, "dominator flags")?;
    let mut self_dominator = Vec::with_capacity(n);
    for &f in flags {
        match f {
            0 => self_dominator.push(false),
            1 => self_dominator.push(true),
            other => return Err(format_err(format!("bad flag byte {other}"))),
        }
    }
    let len = r.u32("metadata length")? as usize;
    let meta: BuildMeta =
        serde_json::from_slice(r.take(len, "metadata")?).map_err(|e| format_err(format!("bad metadata: {e}")))?;
    if r.pos != buf.len() {
        return Err(format_err("trailing bytes after metadata"));
    }
    if meta.k1 != k1 || meta.k2 != k2 {
        return Err(format_err("metadata disagrees with header"));
    }
    Ok(MagIndex { dim, k1, k2, euclid, ip, self_dominator, meta })
}

pub fn save_index(index: &MagIndex, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(index)?)?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<MagIndex> {
    decode(&fs::read(path)?)
}
