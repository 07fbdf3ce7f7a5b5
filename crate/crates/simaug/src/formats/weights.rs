//! Classifier weights file. All integers and floats little-endian:
//!
//! ```text
//! 8 bytes   magic "SIMAUGW1"
//! 4 x u32   layer widths: input, hidden, latent, classes
//! per class u32 byte length, then UTF-8 name
//! u64       parameter count
//! f64 * n   parameters, layer by layer, weights then biases
//! ```

use std::path::Path;

use simaug_core::learn::{Classifier, Dense, TrainedModel};

use super::FormatError;

pub const WEIGHTS_MAGIC: &[u8; 8] = b"SIMAUGW1";

pub fn encode_weights(model: &TrainedModel) -> Vec<u8> {
    let c = &model.classifier;
    let mut out = WEIGHTS_MAGIC.to_vec();
    for d in c.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for name in &model.classes {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    let flat = c.flat();
    out.extend_from_slice(&(flat.len() as u64).to_le_bytes());
    for v in flat {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| {
                FormatError::Invalid(format!(
                    "weights file truncated at byte {}",
                    self.bytes.len()
                ))
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

/// The classifier only; a discriminator is not persisted.
pub fn decode_weights(bytes: &[u8]) -> Result<TrainedModel, FormatError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != WEIGHTS_MAGIC {
        return Err(FormatError::Invalid(
            "not a weights file (bad magic)".into(),
        ));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    if dims.contains(&0) {
        return Err(FormatError::Invalid(format!(
            "zero layer width in {dims:?}"
        )));
    }
    let mut classes = Vec::with_capacity(dims[3]);
    for _ in 0..dims[3] {
        let n = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(n)?)
            .map_err(|_| FormatError::Invalid("class name is not UTF-8".into()))?;
        classes.push(name.to_string());
    }
    let mut classifier = Classifier {
        trunk1: Dense::zeros(dims[0], dims[1]),
        trunk2: Dense::zeros(dims[1], dims[2]),
        head: Dense::zeros(dims[2], dims[3]),
    };
    let count = r.u64()? as usize;
    if count != classifier.param_count() {
        return Err(FormatError::Invalid(format!(
            "{count} parameters stored, layer widths {dims:?} need {}",
            classifier.param_count()
        )));
    }
    let flat: Vec<f64> = r
        .take(
            count
                .checked_mul(8)
                .ok_or_else(|| FormatError::Invalid("parameter count overflows".into()))?,
        )?
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    if r.pos != bytes.len() {
        return Err(FormatError::Invalid(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    classifier
        .load_flat(&flat)
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(TrainedModel {
        classes,
        classifier,
        discriminator: None,
    })
}

pub fn write_weights(path: &Path, model: &TrainedModel) -> Result<(), FormatError> {
    std::fs::write(path, encode_weights(model))?;
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<TrainedModel, FormatError> {
    decode_weights(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use simaug_core::rng::RngStream;

    fn model() -> TrainedModel {
        TrainedModel {
            classes: vec!["wave".into(), "kick".into(), "böw".into()],
            classifier: Classifier::new(5, 4, 3, 3, &mut RngStream::new(1, 2)),
            discriminator: None,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let bytes = encode_weights(&m);
        assert_eq!(&bytes[..8], WEIGHTS_MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        assert_eq!(decode_weights(&bytes).unwrap(), m);
        let n = m.classifier.param_count();
        assert_eq!(
            bytes.len(),
            8 + 16 + (4 + 4) + (4 + 4) + (4 + 4) + 8 + 8 * n
        );
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode_weights(&model());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(decode_weights(&bad_magic).is_err());
        assert!(decode_weights(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_weights(&extra).is_err());
        assert!(decode_weights(&[]).is_err());
    }
}
