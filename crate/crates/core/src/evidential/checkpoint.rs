//! Parameter checkpoints.
//!
//! Layout: one ASCII line `cabin-mlp <d0> <d1> ... <dn>\n` giving the layer
//! widths, followed by every parameter as a little-endian `f64`, layer by
//! layer, weights (row-major `out x in`) before biases.

use std::fs;
use std::path::Path;

use super::MlpParams;
use crate::error::{Error, Result};

const MAGIC: &str = "cabin-mlp";

pub fn write_checkpoint(params: &MlpParams) -> Vec<u8> {
    let dims: Vec<String> = params.dims().iter().map(|d| d.to_string()).collect();
    let mut out = format!("{MAGIC} {}\n", dims.join(" ")).into_bytes();
    out.reserve(params.len() * 8);
    for p in params.iter() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<MlpParams> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("checkpoint header missing".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::Format("checkpoint header is not UTF-8".into()))?;
    let mut fields = header.split(' ');
    if fields.next() != Some(MAGIC) {
        return Err(Error::Format(format!("bad checkpoint magic in {header:?}")));
    }
    let dims = fields
        .map(|f| f.parse::<usize>().map_err(|_| Error::Format(format!("bad dim {f:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut params = MlpParams::zeros(&dims).map_err(|e| Error::Format(e.to_string()))?;
    let body = &bytes[newline + 1..];
    if body.len() != params.len() * 8 {
        return Err(Error::Format(format!(
            "checkpoint body has {} bytes, expected {}",
            body.len(),
            params.len() * 8
        )));
    }
    for (p, chunk) in params.iter_mut().zip(body.chunks_exact(8)) {
        *p = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_checkpoint(params))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<MlpParams> {
    read_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let params = MlpParams::init(&[7, 5, 3], 12).unwrap();
        let bytes = write_checkpoint(&params);
        assert!(bytes.starts_with(b"cabin-mlp 7 5 3\n"));
        assert_eq!(read_checkpoint(&bytes).unwrap(), params);
    }

    #[test]
    fn truncated_body_is_rejected() {
        let params = MlpParams::init(&[2, 2], 1).unwrap();
        let mut bytes = write_checkpoint(&params);
        bytes.pop();
        assert!(read_checkpoint(&bytes).is_err());
        assert!(read_checkpoint(b"nope 2 2\n").is_err());
    }
}
