//! Model files.
//!
//! | field | encoding |
//! |---|---|
//! | magic | `FDSM` |
//! | version | u16 LE, currently 1 |
//! | layer count `L` | u32 LE |
//! | per layer | `in` u32 LE, `out` u32 LE, activation u8 (0 relu, 1 identity, 2 softmax) |
//! | `M` | u64 LE |
//! | parameters | `M` f64 LE in flat order |

use std::path::Path;

use super::{Activation, LayerSpec, ModelParams};
use crate::error::{Error, Result};
use crate::fsio::{read_file, write_atomic};

pub const MODEL_MAGIC: &[u8; 4] = b"FDSM";
pub const MODEL_VERSION: u16 = 1;

pub fn encode_model(params: &ModelParams) -> Vec<u8> {
    let spec = params.spec();
    let mut out = Vec::with_capacity(18 + 9 * spec.len() + 8 * params.dim());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    for l in spec {
        out.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
        out.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
        out.push(l.activation.code());
    }
    out.extend_from_slice(&(params.dim() as u64).to_le_bytes());
    for v in params.flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Data("model file is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelParams> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MODEL_MAGIC {
        return Err(Error::Data("not an FDSM model file".into()));
    }
    let version = u16::from_le_bytes(c.take(2)?.try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(Error::Data(format!("unsupported model version {version}")));
    }
    let layers = c.u32()? as usize;
    let mut spec = Vec::with_capacity(layers.min(1024));
    for _ in 0..layers {
        let in_dim = c.u32()? as usize;
        let out_dim = c.u32()? as usize;
        let code = c.take(1)?[0];
        let activation = Activation::from_code(code)
            .ok_or_else(|| Error::Data(format!("unknown activation code {code}")))?;
        spec.push(LayerSpec::new(in_dim, out_dim, activation));
    }
    let m = u64::from_le_bytes(c.take(8)?.try_into().unwrap()) as usize;
    let flat = c
        .take(m.checked_mul(8).ok_or_else(|| Error::Data("model size overflows".into()))?)?
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    if c.pos != bytes.len() {
        return Err(Error::Data("trailing bytes after model parameters".into()));
    }
    ModelParams::new(spec, flat).map_err(|e| Error::Data(format!("invalid model: {e}")))
}

pub fn write_model(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    write_atomic(path, &encode_model(params))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    decode_model(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, symmetric_autoencoder, InitScheme};

    #[test]
    fn round_trip() {
        let spec = symmetric_autoencoder(5, &[3, 2], Activation::Relu, Activation::Identity);
        let p = init_params(&spec, 1, InitScheme::UniformHe).unwrap();
        let bytes = encode_model(&p);
        assert_eq!(&bytes[..4], b"FDSM");
        assert_eq!(bytes.len(), 4 + 2 + 4 + 9 * 4 + 8 + 8 * p.dim());
        assert_eq!(decode_model(&bytes).unwrap(), p);
    }

    #[test]
    fn rejects_corruption() {
        let spec = vec![LayerSpec::new(2, 2, Activation::Softmax)];
        let bytes = encode_model(&ModelParams::zeros(spec).unwrap());
        assert!(decode_model(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model(&extra).is_err());
        let mut bad_act = bytes.clone();
        bad_act[18] = 9;
        assert!(decode_model(&bad_act).is_err());
        let mut bad_dim = bytes;
        bad_dim[10] = 3;
        assert!(decode_model(&bad_dim).is_err());
    }
}
