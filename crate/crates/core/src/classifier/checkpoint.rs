//! Binary checkpoint container.
//!
//! Layout (little-endian): the 8-byte magic `MLMCKPT\0`, `u32` version,
//! `u32` tensor count, then per tensor a `u16` name length, the UTF-8 name,
//! a `u8` rank, `rank` `u32` dims and the `f64` values.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::params::{NetworkParams, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MLMCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(params: &NetworkParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(params.len() * 8 + 256);
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(CHECKPOINT_VERSION).unwrap();
    out.write_u32::<LittleEndian>(Tensor::ALL.len() as u32).unwrap();
    for t in Tensor::ALL {
        out.write_u16::<LittleEndian>(t.name().len() as u16).unwrap();
        out.write_all(t.name().as_bytes()).unwrap();
        out.write_u8(t.shape().len() as u8).unwrap();
        for &d in t.shape() {
            out.write_u32::<LittleEndian>(d as u32).unwrap();
        }
        for &v in params.tensor(t) {
            out.write_f64::<LittleEndian>(v).unwrap();
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<NetworkParams> {
    let bad = |what: &str| Error::BadCheckpoint(what.to_owned());
    let mut cur = std::io::Cursor::new(bytes);
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::BadCheckpoint(format!("unsupported version {version}")));
    }
    let count = cur.read_u32::<LittleEndian>().map_err(|_| bad("truncated header"))?;
    if count as usize != Tensor::ALL.len() {
        return Err(Error::BadCheckpoint(format!("{count} tensors, expected {}", Tensor::ALL.len())));
    }
    let mut params = NetworkParams::zeros();
    for t in Tensor::ALL {
        let truncated = |_| Error::BadCheckpoint(format!("truncated tensor {}", t.name()));
        let name_len = cur.read_u16::<LittleEndian>().map_err(truncated)? as usize;
        let mut name = vec![0u8; name_len];
        cur.read_exact(&mut name).map_err(truncated)?;
        if name != t.name().as_bytes() {
            return Err(Error::BadCheckpoint(format!(
                "expected tensor {}, found {}",
                t.name(),
                String::from_utf8_lossy(&name)
            )));
        }
        let rank = cur.read_u8().map_err(truncated)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(cur.read_u32::<LittleEndian>().map_err(truncated)? as usize);
        }
        if dims != t.shape() {
            return Err(Error::BadCheckpoint(format!("{} has shape {dims:?}, expected {:?}", t.name(), t.shape())));
        }
        cur.read_f64_into::<LittleEndian>(params.tensor_mut(t)).map_err(truncated)?;
    }
    if cur.position() as usize != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    if !params.is_finite() {
        return Err(bad("non-finite parameter"));
    }
    Ok(params)
}

pub fn write_checkpoint(params: &NetworkParams, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<NetworkParams> {
    decode_checkpoint(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let params = NetworkParams::init(77);
        let bytes = encode_checkpoint(&params);
        assert_eq!(decode_checkpoint(&bytes).unwrap(), params);
        assert_eq!(bytes.len(), 8 + 4 + 4 + 206_922 * 8 + Tensor::ALL.iter().map(|t| 2 + t.name().len() + 1 + 4 * t.shape().len()).sum::<usize>());
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode_checkpoint(&NetworkParams::zeros());
        assert!(decode_checkpoint(&bytes[..100]).is_err());
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        assert!(decode_checkpoint(&wrong_version).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(decode_checkpoint(&trailing).is_err());
        assert!(decode_checkpoint(b"garbage!").is_err());
    }
}
