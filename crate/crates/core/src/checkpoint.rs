//! Checkpoint container.
//!
//! Layout: magic `GNHCKPT1`, then one record per parameter in name order:
//!   name length (u64 LE), UTF-8 name bytes,
//!   rank (u64 LE), dims (rank x u64 LE),
//!   raw f32 little-endian payload.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"GNHCKPT1";

pub fn save<P: AsRef<Path>>(path: P, params: &BTreeMap<String, Tensor<f32>>) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    for (name, tensor) in params {
        let nb = name.as_bytes();
        buf.extend_from_slice(&(nb.len() as u64).to_le_bytes());
        buf.extend_from_slice(nb);
        buf.extend_from_slice(&(tensor.rank() as u64).to_le_bytes());
        for &d in tensor.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in tensor.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(TensorError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

pub fn load<P: AsRef<Path>>(path: P) -> Result<BTreeMap<String, Tensor<f32>>> {
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    let mut r = Reader { buf: &raw, pos: 0 };
    let magic = r.take(8)?;
    if magic != MAGIC {
        return Err(TensorError::Checkpoint(format!(
            "unknown magic {:?}",
            &magic
        )));
    }
    let mut out = BTreeMap::new();
    while !r.done() {
        let name_len = r.u64()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| TensorError::Checkpoint("parameter name is not UTF-8".into()))?
            .to_string();
        let rank = r.u64()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64()? as usize);
        }
        let numel: usize = shape.iter().product();
        let payload = r.take(numel * 4)?;
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if out.insert(name.clone(), Tensor::new(&shape, data)?).is_some() {
            return Err(TensorError::Checkpoint(format!(
                "duplicate parameter {name}"
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join("gnh_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.ckpt");
        let mut m = BTreeMap::new();
        m.insert(
            "fuse.layer0.weight".to_string(),
            Tensor::from_fn(&[2, 3], |i| i as f32 * 0.25 - 1.0),
        );
        m.insert("render.bias".to_string(), Tensor::full(&[4], 0.5f32));
        save(&path, &m).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back["fuse.layer0.weight"], m["fuse.layer0.weight"]);
        assert_eq!(back["render.bias"], m["render.bias"]);
    }

    #[test]
    fn rejects_unknown_magic() {
        let dir = std::env::temp_dir().join("gnh_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.ckpt");
        std::fs::write(&path, b"NOTMAGIC").unwrap();
        assert!(matches!(load(&path), Err(TensorError::Checkpoint(_))));
    }

    #[test]
    fn rejects_truncation() {
        let dir = std::env::temp_dir().join("gnh_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trunc.ckpt");
        let mut m = BTreeMap::new();
        m.insert("p".to_string(), Tensor::full(&[8], 1.0f32));
        save(&path, &m).unwrap();
        let raw = std::fs::read(&path).unwrap();
        std::fs::write(&path, &raw[..raw.len() - 3]).unwrap();
        assert!(load(&path).is_err());
    }
}
