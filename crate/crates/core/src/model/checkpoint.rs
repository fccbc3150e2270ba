//! Binary checkpoint: magic, format version, seed, JSON echo of the model
//! configuration, then the flat parameter vector as little-endian `f64`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::params::{Model, ModelConfig};

const MAGIC: &[u8; 8] = b"BIHETCK1";
const VERSION: u32 = 1;

pub fn encode(model: &Model, seed: u64) -> Vec<u8> {
    let config = serde_json::to_vec(&model.config).expect("model config serializes");
    let mut out = Vec::with_capacity(32 + config.len() + 8 * model.params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for p in &model.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Invalid("checkpoint is truncated".into()));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

/// Returns the model and the seed it was trained with.
pub fn decode(mut bytes: &[u8]) -> Result<(Model, u64)> {
    let b = &mut bytes;
    if take(b, 8)? != MAGIC {
        return Err(Error::Invalid("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(take(b, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Invalid(format!("unsupported checkpoint version {version}")));
    }
    let seed = u64::from_le_bytes(take(b, 8)?.try_into().unwrap());
    let len = u32::from_le_bytes(take(b, 4)?.try_into().unwrap()) as usize;
    let config: ModelConfig = serde_json::from_slice(take(b, len)?)
        .map_err(|e| Error::Invalid(format!("checkpoint config: {e}")))?;
    let n = u64::from_le_bytes(take(b, 8)?.try_into().unwrap()) as usize;
    let raw = take(b, n.checked_mul(8).ok_or_else(|| Error::Invalid("checkpoint size overflow".into()))?)?;
    if !b.is_empty() {
        return Err(Error::Invalid("trailing bytes after checkpoint parameters".into()));
    }
    let params = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((Model::from_params(config, params)?, seed))
}

pub fn save(path: &Path, model: &Model, seed: u64) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(model, seed)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(Model, u64)> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode(&buf)
}
