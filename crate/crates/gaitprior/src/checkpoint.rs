//! `.spm` checkpoint files.
//!
//! Layout: the 8-byte magic, a little-endian `u64` header length, the JSON
//! header, then for every tensor listed in the header a little-endian `u64`
//! element count followed by that many little-endian `f64` values.

use std::fs;
use std::path::Path;

use gaitprior_core::prior::{Architecture, PriorModel};
use gaitprior_core::train::{Checkpoint, LossBreakdown, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::write_file;

pub const MAGIC: [u8; 8] = *b"GAITSPM\0";
pub const EXTENSION: &str = "spm";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    architecture: Architecture,
    config: TrainConfig,
    epoch: usize,
    history: Vec<LossBreakdown>,
    velocity_frequency_pairs: Vec<(f64, f64)>,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    len: usize,
}

pub fn encode_checkpoint(checkpoint: &Checkpoint) -> Vec<u8> {
    let tensors = checkpoint.model.tensors();
    let header = Header {
        format_version: Checkpoint::FORMAT_VERSION,
        architecture: checkpoint.model.architecture().clone(),
        config: checkpoint.config.clone(),
        epoch: checkpoint.epoch,
        history: checkpoint.history.clone(),
        velocity_frequency_pairs: checkpoint.velocity_frequency_pairs.clone(),
        tensors: tensors.iter().map(|(name, t)| TensorEntry { name: name.clone(), len: t.len() }).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let body: usize = tensors.iter().map(|(_, t)| 8 + 8 * t.len()).sum();
    let mut out = Vec::with_capacity(16 + json.len() + body);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in &tensors {
        out.extend_from_slice(&(t.len() as u64).to_le_bytes());
        for v in *t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::format(self.path, None, format!("truncated file: {what} needs {n} bytes at offset {}", self.at))
        })?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_checkpoint(path: &Path, bytes: &[u8]) -> Result<Checkpoint> {
    let mut cur = Cursor { path, bytes, at: 0 };
    if cur.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::format(path, None, "not a gaitprior checkpoint"));
    }
    let header_len = cur.u64("header length")?;
    let header_len = usize::try_from(header_len).map_err(|_| Error::format(path, None, "corrupt header length"))?;
    let header_bytes = cur.take(header_len, "header")?;
    let version: serde_json::Value =
        serde_json::from_slice(header_bytes).map_err(|e| Error::format(path, None, format!("header: {e}")))?;
    let found = version.get("format_version").and_then(serde_json::Value::as_u64);
    if found != Some(Checkpoint::FORMAT_VERSION.into()) {
        return match found {
            Some(found) => Err(Error::UnsupportedVersion { path: path.to_path_buf(), found, expected: Checkpoint::FORMAT_VERSION.into() }),
            None => Err(Error::format(path, None, "header has no format_version")),
        };
    }
    let header: Header = serde_json::from_value(version).map_err(|e| Error::format(path, None, format!("header: {e}")))?;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for entry in &header.tensors {
        let len = cur.u64(&entry.name)?;
        if len != entry.len as u64 {
            return Err(Error::format(
                path,
                None,
                format!("tensor {} length field is {len}, header says {}", entry.name, entry.len),
            ));
        }
        let raw = cur.take(entry.len.checked_mul(8).ok_or_else(|| Error::format(path, None, "corrupt tensor length"))?, &entry.name)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        tensors.push((entry.name.clone(), values));
    }
    if cur.at != bytes.len() {
        return Err(Error::format(path, None, format!("{} trailing bytes after last tensor", bytes.len() - cur.at)));
    }
    let model = PriorModel::from_tensors(header.architecture, &tensors)
        .map_err(|e| Error::format(path, None, format!("invalid parameters: {e}")))?;
    Ok(Checkpoint {
        model,
        config: header.config,
        epoch: header.epoch,
        history: header.history,
        velocity_frequency_pairs: header.velocity_frequency_pairs,
    })
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    write_file(path, &encode_checkpoint(checkpoint))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaitprior_core::prior::GenerationMode;
    use gaitprior_core::reflib::CANONICAL_PAIRS;

    fn sample() -> Checkpoint {
        let config = TrainConfig { epochs: 2, ..TrainConfig::default() };
        Checkpoint {
            model: PriorModel::new(config.architecture.clone(), 11).unwrap(),
            config,
            epoch: 2,
            history: vec![LossBreakdown::new(0.1, 0.2, 1e-3), LossBreakdown::new(1.0 / 3.0, 0.7, 1e-3)],
            velocity_frequency_pairs: CANONICAL_PAIRS.to_vec(),
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let ckpt = sample();
        let bytes = encode_checkpoint(&ckpt);
        let back = decode_checkpoint(Path::new("x.spm"), &bytes).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(encode_checkpoint(&back), bytes);
        let a = ckpt.model.generate_trajectory(1.25, 2.0, 60.0, GenerationMode::Mean).unwrap();
        let b = back.model.generate_trajectory(1.25, 2.0, 60.0, GenerationMode::Mean).unwrap();
        for j in 0..10 {
            let (x, y): (Vec<u64>, Vec<u64>) = (a.joints[j].iter().map(|v| v.to_bits()).collect(), b.joints[j].iter().map(|v| v.to_bits()).collect());
            assert_eq!(x, y);
        }
    }

    #[test]
    fn truncation_anywhere_is_a_format_error() {
        let bytes = encode_checkpoint(&sample());
        for cut in [0, 7, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            let err = decode_checkpoint(Path::new("x.spm"), &bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Format { .. }), "cut {cut}: {err}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_checkpoint(Path::new("x.spm"), &extra).is_err());
    }

    #[test]
    fn corrupted_length_fields_are_rejected() {
        let bytes = encode_checkpoint(&sample());
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let first_tensor = 16 + header_len;
        let mut bad = bytes.clone();
        bad[first_tensor] ^= 1;
        assert!(matches!(decode_checkpoint(Path::new("x.spm"), &bad), Err(Error::Format { .. })));
        let mut bad = bytes.clone();
        bad[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode_checkpoint(Path::new("x.spm"), &bad), Err(Error::Format { .. })));
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(Path::new("x.spm"), &bad), Err(Error::Format { .. })));
    }

    #[test]
    fn version_zero_is_unsupported() {
        let bytes = encode_checkpoint(&sample());
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[16..16 + header_len]).unwrap().replacen("\"format_version\":1", "\"format_version\":0", 1);
        assert_eq!(header.len(), header_len);
        let mut bad = bytes[..16].to_vec();
        bad.extend_from_slice(header.as_bytes());
        bad.extend_from_slice(&bytes[16 + header_len..]);
        assert!(matches!(decode_checkpoint(Path::new("x.spm"), &bad), Err(Error::UnsupportedVersion { found: 0, .. })));
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let bytes = encode_checkpoint(&sample());
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let value = 16 + header_len + 8;
        let mut bad = bytes;
        bad[value..value + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_checkpoint(Path::new("x.spm"), &bad).is_err());
    }
}
