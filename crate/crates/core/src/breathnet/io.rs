//! Binary weight files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic  "BGNW"            4 bytes
//! version                  u32 (= 1)
//! header length            u32, followed by a JSON object {config, meta}
//! tensor count             u32
//! per tensor: name length u32, UTF-8 name, rank u32, dims u64 × rank,
//!             values f64 × product(dims)
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{BreathNet, ModelConfig, Params, TrainingMeta};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"BGNW";
pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    meta: TrainingMeta,
}

pub fn encode_weights(model: &BreathNet) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 8 * model.params.count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&WEIGHTS_FORMAT_VERSION.to_le_bytes());
    let header = serde_json::to_vec(&Header { config: model.config.clone(), meta: model.meta.clone() })?;
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    let named = model.params.named();
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    for (name, t) in named {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_weights(model: &BreathNet, path: &Path) -> Result<()> {
    std::fs::write(path, encode_weights(model)?)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "truncated weight file")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decodes a weight file. When `expected` is given the stored configuration
/// must match it exactly.
pub fn decode_weights(bytes: &[u8], expected: Option<&ModelConfig>) -> Result<BreathNet> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let version_error = |found: String| Error::FormatVersionMismatch {
        expected: format!("BGNW v{WEIGHTS_FORMAT_VERSION}"),
        found,
    };
    let magic = cur.take(4).map_err(|_| version_error("truncated header".into()))?;
    if magic != MAGIC {
        return Err(version_error(format!("magic {:?}", String::from_utf8_lossy(magic))));
    }
    let version = cur.u32().map_err(|_| version_error("truncated header".into()))?;
    if version != WEIGHTS_FORMAT_VERSION {
        return Err(version_error(format!("BGNW v{version}")));
    }
    let header_len = cur.u32()? as usize;
    let header: Header = serde_json::from_slice(cur.take(header_len)?)?;
    if let Some(cfg) = expected {
        if *cfg != header.config {
            return Err(Error::ConfigMismatch(format!("file holds {:?}, expected {:?}", header.config, cfg)));
        }
    }
    header.config.validate()?;
    let mut params = Params::zeros(&header.config);
    let layout: Vec<(String, Vec<usize>)> =
        params.named().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
    let count = cur.u32()? as usize;
    if count != layout.len() {
        return Err(Error::ConfigMismatch(format!("{count} tensors stored, configuration needs {}", layout.len())));
    }
    for ((name, shape), tensor) in layout.iter().zip(params.tensors_mut()) {
        let n = cur.u32()? as usize;
        let stored_name = std::str::from_utf8(cur.take(n)?).map_err(|e| Error::Format(e.to_string()))?;
        let rank = cur.u32()? as usize;
        let dims = (0..rank).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if stored_name != name || &dims != shape {
            return Err(Error::ConfigMismatch(format!("tensor {stored_name} {dims:?}, expected {name} {shape:?}")));
        }
        for v in tensor.data_mut() {
            *v = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        }
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after the last tensor", bytes.len() - cur.pos)));
    }
    Ok(BreathNet { config: header.config, params, meta: header.meta })
}

pub fn load_weights(path: &Path, expected: Option<&ModelConfig>) -> Result<BreathNet> {
    decode_weights(&std::fs::read(path)?, expected)
}
