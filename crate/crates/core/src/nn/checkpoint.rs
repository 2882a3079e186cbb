//! Binary parameter container.
//!
//! Layout: magic `LDC1`, `u32` entry count, then per entry `u32` name length,
//! UTF-8 name, `u32` rank, `u32` dims, `u64` byte offset into the payload.
//! The payload follows the manifest as little-endian `f32` values. All
//! integers are little-endian.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{NnError, ParamStore, Tensor};

pub const MAGIC: &[u8; 4] = b"LDC1";

pub fn to_bytes(store: &ParamStore) -> Vec<u8> {
    let mut manifest = Vec::new();
    manifest.extend_from_slice(MAGIC);
    manifest.extend_from_slice(&(store.len() as u32).to_le_bytes());
    let mut offset = 0u64;
    for (name, t) in store.iter() {
        manifest.extend_from_slice(&(name.len() as u32).to_le_bytes());
        manifest.extend_from_slice(name.as_bytes());
        manifest.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            manifest.extend_from_slice(&(d as u32).to_le_bytes());
        }
        manifest.extend_from_slice(&offset.to_le_bytes());
        offset += 4 * t.len() as u64;
    }
    let mut out = manifest;
    out.reserve(offset as usize);
    for (_, t) in store.iter() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| NnError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<ParamStore, NnError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let count = r.u32()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| NnError::Checkpoint("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let offset = r.u64()? as usize;
        entries.push((name, dims, offset));
    }
    let payload = &buf[r.pos..];
    let mut store = ParamStore::new();
    for (name, dims, offset) in entries {
        let n: usize = dims.iter().product();
        let bytes = payload
            .get(offset..offset + 4 * n)
            .ok_or_else(|| NnError::Checkpoint(format!("payload of {name} out of range")))?;
        let data = bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        if store.id(&name).is_some() {
            return Err(NnError::Checkpoint(format!("duplicate tensor {name}")));
        }
        store.add(name, Tensor::new(dims, data)?);
    }
    Ok(store)
}

pub fn save(store: &ParamStore, path: &Path) -> Result<(), NnError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&to_bytes(store))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ParamStore, NnError> {
    from_bytes(&fs::read(path)?)
}

/// Loads a checkpoint into an existing store; every stored tensor must be
/// present in the file with a matching shape.
pub fn load_into(store: &mut ParamStore, path: &Path) -> Result<(), NnError> {
    let loaded = load(path)?;
    let copied = store.copy_from(&loaded)?;
    if copied != store.len() {
        return Err(NnError::Checkpoint(format!(
            "checkpoint provides {copied} of {} expected tensors",
            store.len()
        )));
    }
    Ok(())
}
