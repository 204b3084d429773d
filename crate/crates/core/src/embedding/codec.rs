//! `RSAE1` binary embedding files.
//!
//! Layout (little-endian):
//!
//! | bytes            | content                                  |
//! |------------------|------------------------------------------|
//! | 5                | magic `RSAE1`                            |
//! | 4                | `N` (u32)                                |
//! | 4                | `d` (u32)                                |
//! | 4·N·d            | f32 values, row-major                    |
//! | 4                | id block length in bytes (u32)           |
//! | id block length  | UTF-8 ids joined by `\n`                 |
//!
//! Metadata lives next to the payload in `<name>.meta.json`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::{EmbeddingMeta, EmbeddingSet};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"RSAE1";
const HEADER_LEN: u64 = 13;

/// `foo.rsae` -> `foo.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

pub fn encode(set: &EmbeddingSet) -> Result<Vec<u8>> {
    if set.is_empty() {
        return Err(Error::Validation("cannot write an empty embedding set".into()));
    }
    let n = u32::try_from(set.len())
        .map_err(|_| Error::Validation("more than u32::MAX samples".into()))?;
    let d = u32::try_from(set.dim())
        .map_err(|_| Error::Validation("dimension exceeds u32::MAX".into()))?;
    let ids = set.ids().join("\n");
    let id_len = u32::try_from(ids.len())
        .map_err(|_| Error::Validation("id block exceeds u32::MAX bytes".into()))?;

    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * set.values().len() + 4 + ids.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    for v in set.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&id_len.to_le_bytes());
    out.extend_from_slice(ids.as_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.bytes.len() as u64,
                format!(
                    "truncated file: {what} needs {len} bytes starting at byte {}",
                    self.pos
                ),
            )),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub(crate) fn check_magic(bytes: &[u8], magic: &[u8]) -> Result<()> {
    for (i, m) in magic.iter().enumerate() {
        match bytes.get(i) {
            Some(b) if b == m => {}
            Some(_) => {
                return Err(Error::format(
                    i as u64,
                    format!("bad magic, expected {:?}", String::from_utf8_lossy(magic)),
                ))
            }
            None => return Err(Error::format(i as u64, "truncated file: missing magic")),
        }
    }
    Ok(())
}

/// Splits an id block (shared by `RSAE1` and `RSAG1`) into `expected` ids.
pub(crate) fn parse_id_block(block: &[u8], offset: u64, expected: usize) -> Result<Vec<String>> {
    let text = std::str::from_utf8(block).map_err(|e| {
        Error::format(offset + e.valid_up_to() as u64, "id block is not valid UTF-8")
    })?;
    let ids: Vec<String> = if expected == 0 && text.is_empty() {
        Vec::new()
    } else {
        text.split('\n').map(str::to_owned).collect()
    };
    if ids.len() != expected {
        return Err(Error::format(
            offset,
            format!("id block holds {} ids, header declares {expected}", ids.len()),
        ));
    }
    Ok(ids)
}

/// Reads the trailing `u32 length + ids` block and checks nothing follows it.
pub(crate) fn read_trailing_ids(bytes: &[u8], pos: usize, expected: usize) -> Result<Vec<String>> {
    let mut cur = Cursor { bytes, pos };
    let len = cur.u32("id block length")? as usize;
    let start = cur.pos;
    let block = cur.take(len, "id block")?;
    let ids = parse_id_block(block, start as u64, expected)?;
    if cur.pos != bytes.len() {
        return Err(Error::format(
            cur.pos as u64,
            format!("{} unexpected trailing bytes", bytes.len() - cur.pos),
        ));
    }
    Ok(ids)
}

/// Decodes an `RSAE1` payload into `(ids, values, d)`.
pub fn decode(bytes: &[u8]) -> Result<(Vec<String>, Vec<f32>, usize)> {
    check_magic(bytes, MAGIC)?;
    let mut cur = Cursor { bytes, pos: 5 };
    let n = cur.u32("sample count")? as usize;
    let d = cur.u32("dimension")? as usize;
    if d == 0 {
        return Err(Error::format(9, "dimension mismatch: d = 0"));
    }
    let n_values = n
        .checked_mul(d)
        .ok_or_else(|| Error::format(5, "dimension mismatch: N·d overflows"))?;
    let payload_len = n_values
        .checked_mul(4)
        .ok_or_else(|| Error::format(5, "dimension mismatch: N·d overflows"))?;
    let available = bytes.len().saturating_sub(HEADER_LEN as usize);
    if available < payload_len + 4 {
        return Err(Error::format(
            bytes.len() as u64,
            format!(
                "dimension mismatch or truncated file: N={n}, d={d} needs {} payload bytes, {} present",
                payload_len + 4,
                available
            ),
        ));
    }
    let payload = cur.take(payload_len, "values")?;
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let ids = read_trailing_ids(bytes, cur.pos, n)?;
    Ok((ids, values, d))
}

/// Writes the binary payload and its metadata sidecar.
pub fn write_set(path: impl AsRef<Path>, set: &EmbeddingSet) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(set)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(set.meta())?;
    std::fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok(())
}

fn read_meta(path: &Path) -> Result<EmbeddingMeta> {
    let sidecar = sidecar_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads an `RSAE1` file and its sidecar.
pub fn read_set(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (ids, values, d) = decode(&bytes)?;
    EmbeddingSet::new(ids, values, d, read_meta(path)?)
}

/// Reads only the sample ids of an `RSAE1` file, skipping the value payload.
pub fn read_ids(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut file = File::open(path).map_err(io)?;
    let file_len = file.metadata().map_err(io)?.len();
    let mut header = [0u8; HEADER_LEN as usize];
    let got = read_up_to(&mut file, &mut header).map_err(io)?;
    check_magic(&header[..got], MAGIC)?;
    if got < HEADER_LEN as usize {
        return Err(Error::format(got as u64, "truncated header"));
    }
    let n = u32::from_le_bytes(header[5..9].try_into().unwrap()) as u64;
    let d = u32::from_le_bytes(header[9..13].try_into().unwrap()) as u64;
    let ids_at = HEADER_LEN + 4 * n * d;
    if ids_at + 4 > file_len {
        return Err(Error::format(
            file_len,
            format!("dimension mismatch or truncated file: N={n}, d={d}"),
        ));
    }
    file.seek(SeekFrom::Start(ids_at)).map_err(io)?;
    let mut rest = Vec::with_capacity((file_len - ids_at) as usize);
    file.read_to_end(&mut rest).map_err(io)?;
    // offsets in errors are relative to the id block; shift them to file offsets
    read_trailing_ids(&rest, 0, n as usize).map_err(|e| match e {
        Error::Format { offset, reason } => Error::Format {
            offset: offset + ids_at,
            reason,
        },
        other => other,
    })
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

/// Plain-text fallback: a tab-separated file with header `id\tv0\t…\tv{d-1}`.
pub fn read_tsv(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<f32>, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut offset = 0u64;

    let read = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    let header: Vec<&str> = line.trim_end_matches(['\n', '\r']).split('\t').collect();
    if header.first() != Some(&"id") || header.len() < 2 {
        return Err(Error::format(0, "TSV header must start with `id` followed by value columns"));
    }
    for (k, name) in header[1..].iter().enumerate() {
        if *name != format!("v{k}") {
            return Err(Error::format(0, format!("TSV header column {} should be `v{k}`", k + 1)));
        }
    }
    let d = header.len() - 1;
    offset += read as u64;

    let mut ids = Vec::new();
    let mut values = Vec::new();
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if !trimmed.is_empty() {
            let mut fields = trimmed.split('\t');
            let id = fields.next().unwrap_or_default();
            let before = values.len();
            for field in fields {
                let v: f32 = field.trim().parse().map_err(|_| {
                    Error::format(offset, format!("row `{id}`: cannot parse `{field}` as a number"))
                })?;
                values.push(v);
            }
            if values.len() - before != d {
                return Err(Error::format(
                    offset,
                    format!("dimension mismatch: row `{id}` has {} values, header declares {d}", values.len() - before),
                ));
            }
            ids.push(id.to_owned());
        }
        offset += read as u64;
    }
    Ok((ids, values, d))
}

/// Loads an embedding set from either format, detected by the leading magic bytes.
/// The metadata sidecar is required for both.
pub fn load_set(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let mut head = [0u8; 5];
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let got = read_up_to(&mut file, &mut head).map_err(|e| Error::io(path, e))?;
    drop(file);
    if got == 5 && &head == MAGIC {
        read_set(path)
    } else if head[..got].starts_with(b"id\t") || head[..got].starts_with(b"id") && got == 2 {
        let (ids, values, d) = read_tsv(path)?;
        EmbeddingSet::new(ids, values, d, read_meta(path)?)
    } else {
        // report as a binary file with a corrupt header
        read_set(path)
    }
}

/// Writes the TSV fallback format (mainly for interop and tests).
pub fn write_tsv(path: impl AsRef<Path>, set: &EmbeddingSet) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("id");
    for k in 0..set.dim() {
        out.push_str(&format!("\tv{k}"));
    }
    out.push('\n');
    for (id, row) in set.ids().iter().zip(set.rows()) {
        out.push_str(id);
        for v in row {
            out.push('\t');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    let sidecar = sidecar_path(path);
    std::fs::write(&sidecar, serde_json::to_string_pretty(set.meta())? + "\n")
        .map_err(|e| Error::io(&sidecar, e))
}
