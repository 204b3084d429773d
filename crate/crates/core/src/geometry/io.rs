//! `RSAG1` geometry files: magic, u32 `N`, metric tag byte, u64 cell count,
//! f32 packed cells, then the `RSAE1` id block (u32 length + `\n`-joined ids).
//! All integers and floats little-endian.

use std::path::Path;

use super::{cell_count, Geometry, Metric};
use crate::embedding::codec_internals::{check_magic, read_trailing_ids};
use crate::error::{Error, Result};

pub const GEOMETRY_MAGIC: &[u8; 5] = b"RSAG1";
const HEADER_LEN: usize = 5 + 4 + 1 + 8;

pub fn encode_geometry(g: &Geometry) -> Result<Vec<u8>> {
    let n = u32::try_from(g.len()).map_err(|_| Error::Validation("more than u32::MAX conditions".into()))?;
    let ids = g.condition_ids().join("\n");
    let id_len = u32::try_from(ids.len()).map_err(|_| Error::Validation("id block exceeds u32::MAX bytes".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * g.cells().len() + 4 + ids.len());
    out.extend_from_slice(GEOMETRY_MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.push(g.metric().tag());
    out.extend_from_slice(&(g.cells().len() as u64).to_le_bytes());
    for c in g.cells() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out.extend_from_slice(&id_len.to_le_bytes());
    out.extend_from_slice(ids.as_bytes());
    Ok(out)
}

/// Decodes an `RSAG1` payload. The degenerate-pair counter is not persisted and reads back as 0.
pub fn decode_geometry(bytes: &[u8]) -> Result<Geometry> {
    check_magic(bytes, GEOMETRY_MAGIC)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(bytes.len() as u64, "truncated header"));
    }
    let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let metric = Metric::from_tag(bytes[9])
        .ok_or_else(|| Error::format(9, format!("unknown metric tag {}", bytes[9])))?;
    let count = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
    if count != cell_count(n) as u64 {
        return Err(Error::format(
            10,
            format!("cell count {count} does not match N={n} (expected {})", cell_count(n)),
        ));
    }
    let payload = (count as usize).checked_mul(4).filter(|&p| HEADER_LEN + p + 4 <= bytes.len());
    let Some(payload) = payload else {
        return Err(Error::format(
            bytes.len() as u64,
            format!("truncated file: {count} cells declared"),
        ));
    };
    let cells: Vec<f32> = bytes[HEADER_LEN..HEADER_LEN + payload]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(k) = cells.iter().position(|c| !c.is_finite() || !(0.0..=2.0).contains(c)) {
        return Err(Error::format(
            (HEADER_LEN + 4 * k) as u64,
            format!("cell {k} = {} outside [0, 2]", cells[k]),
        ));
    }
    let ids = read_trailing_ids(bytes, HEADER_LEN + payload, n)?;
    Geometry::from_parts(ids, cells, metric)
}

pub fn write_geometry(path: impl AsRef<Path>, g: &Geometry) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_geometry(g)?).map_err(|e| Error::io(path, e))
}

pub fn read_geometry(path: impl AsRef<Path>) -> Result<Geometry> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_geometry(&bytes)
}
