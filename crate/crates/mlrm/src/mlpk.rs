//! `.mlpk` model files: one JSON header line followed by the parameters as
//! little-endian `f64`.

use std::path::Path;

use mlrm_core::model::{Activation, MlpSpec, ParamVector};
use serde::{Deserialize, Serialize};

use crate::io::{FormatError, IoError};

const MAGIC: &str = "mlpk";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    activation: Activation,
    layout: Vec<usize>,
    seed: u64,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    n_params: usize,
}

pub fn encode_mlpk(spec: &MlpSpec, params: &ParamVector) -> Vec<u8> {
    let header = Header {
        format: MAGIC.into(),
        version: VERSION,
        layer_sizes: spec.layer_sizes.clone(),
        activation: spec.activation,
        layout: params.layout().to_vec(),
        seed: spec.seed,
        learning_rate: spec.learning_rate,
        epochs: spec.epochs,
        batch_size: spec.batch_size,
        n_params: params.len(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for v in params.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_mlpk(bytes: &[u8]) -> Result<(MlpSpec, ParamVector), FormatError> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::at(bytes.len(), "missing header line"))?;
    let h: Header =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| FormatError::at(e.column().saturating_sub(1), e.to_string()))?;
    if h.format != MAGIC || h.version != VERSION {
        return Err(FormatError::at(0, format!("not an mlpk v{VERSION} file")));
    }
    let body = &bytes[nl + 1..];
    if body.len() != h.n_params * 8 {
        return Err(FormatError::at(
            bytes.len(),
            format!("expected {} parameter bytes, found {}", h.n_params * 8, body.len()),
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let spec = MlpSpec {
        layer_sizes: h.layer_sizes,
        activation: h.activation,
        seed: h.seed,
        learning_rate: h.learning_rate,
        epochs: h.epochs,
        batch_size: h.batch_size,
    };
    let params = ParamVector::new(&spec, values).map_err(|e| FormatError::at(nl + 1, e.to_string()))?;
    if params.layout() != h.layout.as_slice() {
        return Err(FormatError::at(0, "layout does not match layer sizes"));
    }
    Ok((spec, params))
}

pub fn read_mlpk(path: &Path) -> Result<(MlpSpec, ParamVector), IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    Ok(decode_mlpk(&bytes).map_err(|e| e.with_path(path))?)
}

pub fn write_mlpk(path: &Path, spec: &MlpSpec, params: &ParamVector) -> Result<(), IoError> {
    std::fs::write(path, encode_mlpk(spec, params)).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> MlpSpec {
        MlpSpec {
            layer_sizes: vec![3, 4, 2],
            activation: Activation::Tanh,
            seed: 9,
            learning_rate: 0.1,
            epochs: 5,
            batch_size: 8,
        }
    }

    #[test]
    fn round_trip() {
        let s = spec();
        let p = ParamVector::init(&s).unwrap();
        let bytes = encode_mlpk(&s, &p);
        let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(bytes.len() - nl - 1, 8 * s.n_params());
        assert_eq!(decode_mlpk(&bytes).unwrap(), (s, p));
    }

    #[test]
    fn truncated_body() {
        let s = spec();
        let bytes = encode_mlpk(&s, &ParamVector::zeros(&s).unwrap());
        let e = decode_mlpk(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(e.message.contains("parameter bytes"));
    }
}
