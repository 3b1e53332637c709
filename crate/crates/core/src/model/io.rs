//! Weights file: magic `SWF0`, u32 version, u32 tensor count, then per tensor
//! a u16 name length, UTF-8 name, u8 rank, u32 dims and float32 values.
//! Everything is little-endian.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{BatchNorm, ConvLayer, ModelParams, Projection, Real, LAYERS};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"SWF0";
const VERSION: u32 = 1;

pub fn write_params<T: Real, W: Write>(p: &ModelParams<T>, w: &mut W) -> Result<()> {
    let tensors = p.named_tensors();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[t.shape().len() as u8])?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(t.len() * 4);
        for v in t.data() {
            buf.extend_from_slice(&v.to_f32().unwrap().to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Writes to a temporary sibling and renames, so a failed save never leaves
/// a truncated weights file behind.
pub fn save_params<T: Real>(p: &ModelParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    write_params(p, &mut bytes)?;
    let tmp = path.with_extension("tmp-weights");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    read_params(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// SHA-256 of the serialized weights, hex encoded.
pub fn params_checksum<T: Real>(p: &ModelParams<T>) -> String {
    let mut bytes = Vec::new();
    write_params(p, &mut bytes).expect("in-memory write");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated file: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn read_params(bytes: &[u8]) -> Result<ModelParams<f32>> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, not a weights file".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let count = c.u32()? as usize;
    let mut tensors: HashMap<String, Tensor<f32>> = HashMap::with_capacity(count);
    for _ in 0..count {
        let name_len = c.u16()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?
            .to_owned();
        let rank = c.u8()? as usize;
        let shape = (0..rank)
            .map(|_| c.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format(format!("{name}: shape overflow")))?;
        let raw = c.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::Format("size overflow".into()))?,
        )?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if tensors
            .insert(name.clone(), Tensor::from_vec(&shape, data)?)
            .is_some()
        {
            return Err(Error::Format(format!("duplicate tensor `{name}`")));
        }
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after last tensor",
            bytes.len() - c.pos
        )));
    }
    let mut take = |name: String| {
        tensors
            .remove(&name)
            .ok_or_else(|| Error::Format(format!("missing tensor `{name}`")))
    };
    let mut conv = Vec::with_capacity(LAYERS);
    let mut bn = Vec::with_capacity(LAYERS);
    for l in 0..LAYERS {
        conv.push(ConvLayer {
            weight: take(format!("conv{l}.weight"))?,
            bias: take(format!("conv{l}.bias"))?,
        });
        bn.push(BatchNorm {
            gamma: take(format!("bn{l}.gamma"))?,
            beta: take(format!("bn{l}.beta"))?,
            running_mean: take(format!("bn{l}.running_mean"))?,
            running_var: take(format!("bn{l}.running_var"))?,
        });
    }
    let proj = Projection {
        weight: take("proj.weight".into())?,
        bias: take("proj.bias".into())?,
    };
    if let Some(extra) = tensors.keys().next() {
        return Err(Error::Format(format!("unexpected tensor `{extra}`")));
    }
    let params = ModelParams { conv, bn, proj };
    params.validate()?;
    Ok(params)
}
