//! Model files.
//!
//! Layout: the 8-byte magic `MWCNN\0\r\n`, a little-endian `u32` format
//! version, a little-endian `u32` header length, a JSON header carrying the
//! network spec, normalization and parameter count, then every parameter as
//! a little-endian `f32`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cnn, CnnSpec};
use crate::data::Normalization;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MWCNN\0\r\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    spec: CnnSpec,
    normalization: Normalization,
    parameter_count: usize,
}

pub fn model_to_bytes(model: &Cnn) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        version: FORMAT_VERSION,
        spec: model.spec().clone(),
        normalization: *model.normalization(),
        parameter_count: model.params().len(),
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + 4 * model.params().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Cnn> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Format("not a model file (bad magic header)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() < header_len {
        return Err(Error::Format("truncated model header".into()));
    }
    let header: Header = serde_json::from_slice(&body[..header_len])
        .map_err(|e| Error::Format(format!("model header: {e}")))?;
    if header.version != version {
        return Err(Error::Format("header version disagrees with file version".into()));
    }
    let raw = &body[header_len..];
    if raw.len() != header.parameter_count * 4 {
        return Err(Error::Format(format!(
            "expected {} parameter bytes, found {}",
            header.parameter_count * 4,
            raw.len()
        )));
    }
    let params = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Cnn::from_parts(header.spec, header.normalization, params)
}

pub fn save_model(model: &Cnn, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Cnn> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    model_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;
    use crate::models::{build_cnn, ClassifierBackend};

    #[test]
    fn round_trip_is_bitwise() {
        let mut model = build_cnn(&CnnSpec::default(), 17).unwrap();
        model.set_normalization(Normalization {
            mean: [0.4, 0.5, 0.6],
            std: [0.2, 0.25, 0.3],
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mwcnn");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, model);
        let probe = vec![Image::from_fn(128, 128, |x, y| [x as f32, y as f32, 30.0]), Image::filled(128, 128, [255.0; 3])];
        let a = model.predict_logits(&probe).unwrap();
        let b = loaded.predict_logits(&probe).unwrap();
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_model(Path::new("/no/such/model.mwcnn")), Err(Error::NotFound(_))));
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = model_to_bytes(&build_cnn(&CnnSpec::compact(2, 2, 4), 0).unwrap());
        bytes[0] = b'X';
        assert!(matches!(model_from_bytes(&bytes), Err(Error::Format(_))));
        assert!(matches!(model_from_bytes(b"PNG"), Err(Error::Format(_))));
    }

    #[test]
    fn corrupt_payloads() {
        let bytes = model_to_bytes(&build_cnn(&CnnSpec::compact(2, 2, 4), 0).unwrap());
        assert!(matches!(model_from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        assert!(matches!(model_from_bytes(&wrong_version), Err(Error::Format(_))));
        let mut bad_header = bytes;
        bad_header[17] = b'!';
        assert!(matches!(model_from_bytes(&bad_header), Err(Error::Format(_))));
    }
}
