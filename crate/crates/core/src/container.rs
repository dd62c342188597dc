//! Versioned binary container shared by the split archive and checkpoints.
//!
//! ```text
//! magic[8] | version u32 | header_len u64 | header (JSON) |
//! payload_len u64 | payload (f64 LE) x payload_len | sha256[32]
//! ```
//!
//! The trailing digest covers every preceding byte.

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const DIGEST_LEN: usize = 32;

pub(crate) fn encode<H: Serialize>(
    magic: &[u8; 8],
    version: u32,
    header: &H,
    payload: impl IntoIterator<Item = f64>,
) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(header.len() + 64);
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    let len_at = out.len();
    out.extend_from_slice(&0u64.to_le_bytes());
    let mut n = 0u64;
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
        n += 1;
    }
    out[len_at..len_at + 8].copy_from_slice(&n.to_le_bytes());
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub(crate) struct Decoded<H> {
    pub header: H,
    pub payload: Vec<f64>,
}

pub(crate) fn decode<H: DeserializeOwned>(
    bytes: &[u8],
    magic: &[u8; 8],
    version: u32,
) -> Result<Decoded<H>> {
    let truncated = || Error::Format("file is truncated".into());
    if bytes.len() < 8 + 4 + 8 + 8 + DIGEST_LEN {
        return Err(truncated());
    }
    if &bytes[..8] != magic {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let found = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if found != version {
        return Err(Error::Format(format!(
            "format version {found}, expected {version}"
        )));
    }
    let body_len = bytes.len() - DIGEST_LEN;
    let (body, stored) = bytes.split_at(body_len);
    let header_len = u64::from_le_bytes(body[12..20].try_into().unwrap()) as usize;
    let header_end = 20usize.checked_add(header_len).ok_or_else(truncated)?;
    if header_end + 8 > body_len {
        return Err(truncated());
    }
    let n = u64::from_le_bytes(body[header_end..header_end + 8].try_into().unwrap()) as usize;
    let payload_start = header_end + 8;
    if n.checked_mul(8).map(|b| payload_start + b) != Some(body_len) {
        return Err(truncated());
    }
    let digest = Sha256::digest(body);
    if digest.as_slice() != stored {
        return Err(Error::Format("content digest mismatch".into()));
    }
    let header = serde_json::from_slice(&body[20..header_end])?;
    let payload = body[payload_start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Decoded { header, payload })
}

/// Hex digest stored at the end of an encoded container.
pub(crate) fn trailing_digest(bytes: &[u8]) -> String {
    hex::encode(&bytes[bytes.len() - DIGEST_LEN..])
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAGIC: &[u8; 8] = b"TESTCONT";

    #[test]
    fn round_trip_and_corruption() {
        let bytes = encode(MAGIC, 3, &vec!["a", "b"], [1.5, -0.0, f64::MIN_POSITIVE]).unwrap();
        let d: Decoded<Vec<String>> = decode(&bytes, MAGIC, 3).unwrap();
        assert_eq!(d.header, ["a", "b"]);
        assert_eq!(d.payload.len(), 3);
        assert_eq!(d.payload[1].to_bits(), (-0.0f64).to_bits());

        assert!(decode::<Vec<String>>(&bytes[..bytes.len() - 1], MAGIC, 3).is_err());
        assert!(decode::<Vec<String>>(&bytes, MAGIC, 4).is_err());
        assert!(decode::<Vec<String>>(&bytes, b"OTHERMAG", 3).is_err());
        let mut flipped = bytes.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 1;
        assert!(decode::<Vec<String>>(&flipped, MAGIC, 3).is_err());
    }
}
