//! Binary bank file format.
//!
//! Little-endian throughout:
//!
//! | field            | type       |
//! |------------------|------------|
//! | magic `"ABCB"`   | `[u8; 4]`  |
//! | version          | `u16`      |
//! | K                | `u32`      |
//! | target           | `f64`      |
//! | delta            | `f64`      |
//! | samples per model| `u64`      |
//! | generation seed  | `u64`      |
//! | sample count J   | `u64`      |
//! | SHA-256 of payload | `[u8; 32]` |
//!
//! followed by the payload: the row-major `J × K` probability matrix as
//! `f64`, then `J` model-index bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::bank::{BankFingerprint, PriorBank};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ABCB";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 4 + 8 + 8 + 8 + 8 + 8 + 32;

pub fn bank_to_bytes(bank: &PriorBank) -> Vec<u8> {
    let fp = bank.fingerprint();
    let mut payload = Vec::with_capacity(bank.raw_probs().len() * 8 + bank.len());
    for p in bank.raw_probs() {
        payload.extend_from_slice(&p.to_le_bytes());
    }
    payload.extend_from_slice(bank.raw_models());
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(fp.num_doses as u32).to_le_bytes());
    out.extend_from_slice(&fp.target.to_le_bytes());
    out.extend_from_slice(&fp.delta.to_le_bytes());
    out.extend_from_slice(&(fp.samples_per_model as u64).to_le_bytes());
    out.extend_from_slice(&fp.seed.to_le_bytes());
    out.extend_from_slice(&(bank.len() as u64).to_le_bytes());
    let digest = digest(&out, &payload);
    out.extend_from_slice(digest.as_slice());
    out.extend_from_slice(&payload);
    out
}

// Covers the header fields as well, so a flipped seed or target is caught.
fn digest(header: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut h = Sha256::new();
    h.update(header);
    h.update(payload);
    h.finalize().to_vec()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0u8; N];
        out.copy_from_slice(&self.buf[self.pos..self.pos + N]);
        self.pos += N;
        out
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn bank_from_bytes(bytes: &[u8]) -> Result<PriorBank> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::CorruptBank(format!("file too short for header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptBank("bad magic".into()));
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let version = r.u16();
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let num_doses = r.u32() as usize;
    let target = r.f64();
    let delta = r.f64();
    let samples_per_model = r.u64() as usize;
    let seed = r.u64();
    let count = r.u64() as usize;
    let checksum: [u8; 32] = r.take();
    let fingerprint = BankFingerprint { num_doses, target, delta, samples_per_model, seed };
    if count != fingerprint.bank_size() {
        return Err(Error::CorruptBank(format!(
            "sample count {count} does not equal {samples_per_model} x ({num_doses} + 1)"
        )));
    }

    let payload = &bytes[HEADER_LEN..];
    let expected_len = count
        .checked_mul(num_doses)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(count))
        .ok_or_else(|| Error::CorruptBank("header sizes overflow".into()))?;
    if payload.len() != expected_len {
        return Err(Error::CorruptBank(format!(
            "checksum mismatch: payload has {} bytes, header implies {expected_len}",
            payload.len()
        )));
    }
    if digest(&bytes[..HEADER_LEN - 32], payload).as_slice() != checksum {
        return Err(Error::CorruptBank("checksum mismatch".into()));
    }
    let (matrix, models) = payload.split_at(count * num_doses * 8);
    let probs = matrix
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    PriorBank::from_parts(fingerprint, probs, models.to_vec())
}

pub fn save_bank(bank: &PriorBank, path: impl AsRef<Path>) -> Result<()> {
    let bytes = bank_to_bytes(bank);
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(())
}

pub fn load_bank(path: impl AsRef<Path>) -> Result<PriorBank> {
    bank_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::generate_bank;
    use crate::config::TrialConfig;

    fn bank() -> PriorBank {
        let mut c = TrialConfig::new(3, 0.25, 37);
        c.samples_per_model = 300;
        generate_bank(&c, 17).unwrap()
    }

    #[test]
    fn round_trip_through_file() {
        let bank = bank();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.abcb");
        save_bank(&bank, &path).unwrap();
        let loaded = load_bank(&path).unwrap();
        assert_eq!(loaded.fingerprint(), bank.fingerprint());
        assert_eq!(
            loaded.raw_probs().iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
            bank.raw_probs().iter().map(|p| p.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(loaded.raw_models(), bank.raw_models());
        assert_eq!(bank_to_bytes(&loaded), bank_to_bytes(&bank));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = bank_to_bytes(&bank());
        let err = bank_from_bytes(&bytes[..bytes.len() - 5]).unwrap_err();
        assert!(matches!(err, Error::CorruptBank(ref m) if m.contains("checksum")), "{err}");
        assert!(matches!(bank_from_bytes(&bytes[..10]), Err(Error::CorruptBank(_))));
    }

    #[test]
    fn flipped_payload_byte_is_corrupt() {
        let mut bytes = bank_to_bytes(&bank());
        let i = HEADER_LEN + 100;
        bytes[i] ^= 0x01;
        assert!(matches!(bank_from_bytes(&bytes), Err(Error::CorruptBank(ref m)) if m == "checksum mismatch"));
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = bank_to_bytes(&bank());
        bytes[4] = 9;
        assert!(matches!(bank_from_bytes(&bytes), Err(Error::UnsupportedVersion(9))));
    }

    #[test]
    fn header_layout() {
        let bytes = bank_to_bytes(&bank());
        assert_eq!(&bytes[..4], b"ABCB");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[10..18].try_into().unwrap()), 0.25);
        assert_eq!(bytes.len(), HEADER_LEN + 1200 * 3 * 8 + 1200);
    }
}
