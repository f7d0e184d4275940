//! Binary checkpoint plus JSON sidecar.
//!
//! Layout (all little-endian): magic `CAPM`, `u16` version, `u32` d, h, c,
//! then U, V, U0, V0 as row-major `f64`, then the `u64` seed. The sidecar
//! lives at `<path>.json` and records shapes, the init scheme and any extra
//! provenance the caller supplies.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{InitScheme, NnError, TwoLayerNet};
use crate::fsio::write_atomic;
use crate::linalg::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CAPM";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format: String,
    pub version: u16,
    pub d: usize,
    pub h: usize,
    pub c: usize,
    pub seed: u64,
    pub init: InitScheme,
    pub layout: String,
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NnError + '_ {
    move |source| NnError::Io { path: path.display().to_string(), source }
}

/// Encodes the binary part of a checkpoint.
pub fn encode(net: &TwoLayerNet) -> Vec<u8> {
    let (d, h, c) = (net.d(), net.h(), net.c());
    let n = 2 * (h * d + c * h);
    let mut out = Vec::with_capacity(4 + 2 + 12 + 8 * n + 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for dim in [d, h, c] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for m in [net.u(), net.v(), net.u0(), net.v0()] {
        for v in m.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&net.seed().to_le_bytes());
    out
}

/// Decodes the binary part of a checkpoint.
pub fn decode(bytes: &[u8], init: InitScheme) -> Result<TwoLayerNet, NnError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != CHECKPOINT_MAGIC {
        return Err(NnError::Format("bad magic, expected CAPM".into()));
    }
    let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(NnError::Format(format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 3];
    for dim in &mut dims {
        *dim = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
    }
    let [d, h, c] = dims;
    if d == 0 || h == 0 || c == 0 {
        return Err(NnError::Format(format!("zero dimension in d={d}, h={h}, c={c}")));
    }
    let expected = 18 + 8 * 2 * (h * d + c * h) + 8;
    if bytes.len() != expected {
        return Err(NnError::Format(format!(
            "expected {expected} bytes for d={d}, h={h}, c={c}, found {}",
            bytes.len()
        )));
    }
    let mut read = |rows: usize, cols: usize| -> Result<Matrix, NnError> {
        let raw = cur.take(8 * rows * cols)?;
        let data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        Ok(Matrix::new(rows, cols, data)?)
    };
    let u = read(h, d)?;
    let v = read(c, h)?;
    let u0 = read(h, d)?;
    let v0 = read(c, h)?;
    let seed = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    TwoLayerNet::new(u, v, u0, v0, seed, init)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(NnError::Format(format!("truncated at byte {}", self.bytes.len())));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

/// Writes the checkpoint and its sidecar atomically.
pub fn save_checkpoint(net: &TwoLayerNet, path: &Path, extra: serde_json::Value) -> Result<(), NnError> {
    write_atomic(path, &encode(net)).map_err(io_err(path))?;
    let meta = CheckpointMeta {
        format: "CAPM".into(),
        version: CHECKPOINT_VERSION,
        d: net.d(),
        h: net.h(),
        c: net.c(),
        seed: net.seed(),
        init: net.init(),
        layout: "little-endian f64, row-major: U (h x d), V (c x h), U0, V0".into(),
        extra,
    };
    let side = sidecar_path(path);
    let mut json = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
    json.push(b'\n');
    write_atomic(&side, &json).map_err(io_err(&side))
}

/// Reads a checkpoint. The init scheme comes from the sidecar when present.
pub fn load_checkpoint(path: &Path) -> Result<(TwoLayerNet, Option<CheckpointMeta>), NnError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let meta: Option<CheckpointMeta> = match std::fs::read(&side) {
        Ok(raw) => Some(
            serde_json::from_slice(&raw)
                .map_err(|e| NnError::Format(format!("sidecar {}: {e}", side.display())))?,
        ),
        Err(_) => None,
    };
    let init = meta.as_ref().map_or(InitScheme::Explicit, |m| m.init);
    Ok((decode(&bytes, init)?, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_net() -> TwoLayerNet {
        let u0 = Matrix::random_normal(3, 2, 1.0, 1);
        let v0 = Matrix::random_normal(2, 3, 1.0, 2);
        let u = Matrix::random_normal(3, 2, 1.0, 3);
        let v = Matrix::random_normal(2, 3, 1.0, 4);
        TwoLayerNet::new(u, v, u0, v0, 99, InitScheme::Gaussian { sigma: 0.5 }).unwrap()
    }

    #[test]
    fn roundtrip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.capm");
        let net = sample_net();
        save_checkpoint(&net, &p, serde_json::json!({"data": "toy"})).unwrap();
        let (back, meta) = load_checkpoint(&p).unwrap();
        assert_eq!(back, net);
        let meta = meta.unwrap();
        assert_eq!((meta.d, meta.h, meta.c, meta.seed), (2, 3, 2, 99));
        assert_eq!(meta.extra["data"], "toy");
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample_net());
        assert_eq!(&bytes[..4], b"CAPM");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 18 + 8 * 24 + 8);
        assert_eq!(u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap()), 99);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&sample_net());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad, InitScheme::Explicit), Err(NnError::Format(_))));
        assert!(decode(&bytes[..bytes.len() - 1], InitScheme::Explicit).is_err());
        let mut ver = bytes;
        ver[4] = 9;
        assert!(decode(&ver, InitScheme::Explicit).is_err());
    }
}
