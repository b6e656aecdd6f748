//! Byte images of uplink and downlink messages.
//!
//! Every message starts with a 16-byte little-endian header:
//! `round: u32`, `client_id: u32`, `dim: u64`. A sign gradient carries
//! `ceil(dim / 8)` payload bytes; a dense vector (full-precision gradient or
//! broadcast parameters) carries `8 * dim` bytes of little-endian `f64`.

use crate::error::{Error, Result};
use crate::quantizer::SignGradient;

pub const HEADER_BYTES: usize = 16;

pub fn sign_message_len(dim: usize) -> usize {
    HEADER_BYTES + dim.div_ceil(8)
}

pub fn dense_message_len(dim: usize) -> usize {
    HEADER_BYTES + 8 * dim
}

fn header(round: u32, client_id: u32, dim: usize, payload: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + payload);
    out.extend_from_slice(&round.to_le_bytes());
    out.extend_from_slice(&client_id.to_le_bytes());
    out.extend_from_slice(&(dim as u64).to_le_bytes());
    out
}

fn parse_header(bytes: &[u8]) -> Result<(u32, u32, usize)> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Data(format!(
            "message of {} bytes is shorter than its header",
            bytes.len()
        )));
    }
    let round = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let client = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let dim = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = usize::try_from(dim).map_err(|_| Error::Data("dimension overflows usize".into()))?;
    Ok((round, client, dim))
}

pub fn encode_signs(g: &SignGradient) -> Vec<u8> {
    let mut out = header(g.round, g.client_id, g.dim(), g.bits().len());
    out.extend_from_slice(g.bits());
    out
}

pub fn decode_signs(bytes: &[u8]) -> Result<SignGradient> {
    let (round, client, dim) = parse_header(bytes)?;
    if bytes.len() != sign_message_len(dim) {
        return Err(Error::Shape {
            context: "sign message length",
            expected: sign_message_len(dim),
            actual: bytes.len(),
        });
    }
    SignGradient::from_bits(bytes[HEADER_BYTES..].to_vec(), dim, client, round)
}

/// A full-precision vector tagged with its round and peer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMessage {
    pub round: u32,
    pub client_id: u32,
    pub values: Vec<f64>,
}

pub fn encode_dense(msg: &DenseMessage) -> Vec<u8> {
    let mut out = header(msg.round, msg.client_id, msg.values.len(), 8 * msg.values.len());
    for v in &msg.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_dense(bytes: &[u8]) -> Result<DenseMessage> {
    let (round, client_id, dim) = parse_header(bytes)?;
    if bytes.len() != dense_message_len(dim) {
        return Err(Error::Shape {
            context: "dense message length",
            expected: dense_message_len(dim),
            actual: bytes.len(),
        });
    }
    let values = bytes[HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseMessage {
        round,
        client_id,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_message_layout() {
        let g = SignGradient::pack(&[1, -1, 1], 7, 2).unwrap();
        let bytes = encode_signs(&g);
        assert_eq!(bytes, [2, 0, 0, 0, 7, 0, 0, 0, 3, 0, 0, 0, 0, 0, 0, 0, 0x05]);
        assert_eq!(decode_signs(&bytes).unwrap(), g);
    }

    #[test]
    fn payload_sizes() {
        for m in [1usize, 8, 9, 1000, 4096, 5003] {
            let signs = vec![1i8; m];
            let g = SignGradient::pack(&signs, 0, 0).unwrap();
            assert_eq!(encode_signs(&g).len() - HEADER_BYTES, m.div_ceil(8));
            let d = DenseMessage { round: 0, client_id: 0, values: vec![0.5; m] };
            assert_eq!(encode_dense(&d).len() - HEADER_BYTES, 8 * m);
        }
        assert_eq!(sign_message_len(1000), 16 + 125);
        assert_eq!(dense_message_len(1000), 16 + 8000);
    }

    #[test]
    fn dense_roundtrip_and_truncation() {
        let d = DenseMessage { round: 4, client_id: 1, values: vec![1.5, -0.0, f64::MIN_POSITIVE] };
        let bytes = encode_dense(&d);
        assert_eq!(decode_dense(&bytes).unwrap(), d);
        assert!(decode_dense(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_signs(&bytes[..10]).is_err());
    }
}
