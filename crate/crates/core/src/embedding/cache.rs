//! `CWB1` bundle cache.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "CWB1" | u32 sentence_dim | u32 part_dim | u32 slots | u64 count
//! count x record:
//!   u32 id_len | id bytes | sentence_dim x f64 | slots*3*part_dim x f64
//!   | slots x u8 mask | u32 crc32(record bytes before the crc)
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EmbeddingBundle, FeatureDims, PARTS};
use crate::error::{Error, Result};
use crate::extraction::MAX_TRIPLES;

pub const CACHE_MAGIC: &[u8; 4] = b"CWB1";
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;

fn encode_record(b: &EmbeddingBundle, out: &mut Vec<u8>) {
    let start = out.len();
    out.extend_from_slice(&(b.source_id.len() as u32).to_le_bytes());
    out.extend_from_slice(b.source_id.as_bytes());
    for x in b.sentence_vec.iter().chain(&b.triple_parts) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend(b.mask.iter().map(|&m| m as u8));
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
}

/// Writes all bundles; they must share one shape. Returns the record count.
pub fn save_bundles(bundles: &[EmbeddingBundle], path: &Path) -> Result<usize> {
    save_bundles_with_dims(bundles, bundles.first().map(EmbeddingBundle::dims).unwrap_or_default(), path)
}

pub fn save_bundles_with_dims(bundles: &[EmbeddingBundle], dims: FeatureDims, path: &Path) -> Result<usize> {
    let mut buf = Vec::with_capacity(HEADER_LEN);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(dims.sentence as u32).to_le_bytes());
    buf.extend_from_slice(&(dims.part as u32).to_le_bytes());
    buf.extend_from_slice(&(MAX_TRIPLES as u32).to_le_bytes());
    buf.extend_from_slice(&(bundles.len() as u64).to_le_bytes());
    for b in bundles {
        if b.dims() != dims {
            return Err(Error::Dimension(format!(
                "bundle `{}` has dims {:?}, cache holds {:?}",
                b.source_id,
                b.dims(),
                dims
            )));
        }
        encode_record(b, &mut buf);
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    f.sync_all()?;
    Ok(bundles.len())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Integrity(format!("cache truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Reads a cache written by [`save_bundles`], verifying every record.
pub fn load_bundles(path: &Path) -> Result<Vec<EmbeddingBundle>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    decode(&bytes)
}

fn decode(bytes: &[u8]) -> Result<Vec<EmbeddingBundle>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != CACHE_MAGIC {
        return Err(Error::Integrity("not a bundle cache (bad magic)".to_owned()));
    }
    let dims = FeatureDims {
        sentence: r.u32()? as usize,
        part: r.u32()? as usize,
    };
    let slots = r.u32()? as usize;
    if slots != MAX_TRIPLES {
        return Err(Error::Integrity(format!("cache has {slots} triple slots, expected {MAX_TRIPLES}")));
    }
    let count = r.u64()?;

    let mut out = Vec::new();
    for _ in 0..count {
        let start = r.pos;
        let id_len = r.u32()? as usize;
        let id = std::str::from_utf8(r.take(id_len)?)
            .map_err(|_| Error::Integrity("record id is not UTF-8".to_owned()))?
            .to_owned();
        let sentence_vec = r.f64s(dims.sentence)?;
        let triple_parts = r.f64s(MAX_TRIPLES * PARTS * dims.part)?;
        let mut mask = [false; MAX_TRIPLES];
        for (m, &byte) in mask.iter_mut().zip(r.take(MAX_TRIPLES)?) {
            *m = match byte {
                0 => false,
                1 => true,
                _ => return Err(Error::Integrity(format!("record `{id}`: bad mask byte {byte}"))),
            };
        }
        let body_end = r.pos;
        let stored = r.u32()?;
        if crc32fast::hash(&bytes[start..body_end]) != stored {
            return Err(Error::Integrity(format!("record `{id}`: checksum mismatch")));
        }
        let bundle = EmbeddingBundle {
            source_id: id,
            sentence_vec,
            triple_parts,
            mask,
        };
        bundle.validate(dims)?;
        out.push(bundle);
    }
    if r.pos != bytes.len() {
        return Err(Error::Integrity(format!("{} trailing bytes after last record", bytes.len() - r.pos)));
    }
    Ok(out)
}
