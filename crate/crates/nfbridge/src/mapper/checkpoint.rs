//! Checkpoint persistence.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! bytes 0..7    magic "NFBCKPT"
//! bytes 7..11   u32 format version (currently 1)
//! bytes 11..19  u64 header length H
//! bytes 19..19+H    JSON header: { "config": MapperConfig, "meta": CheckpointMeta }
//! ...           best-val parameters, packed f32 LE (weights row-major then
//!               bias, layer by layer)
//! ...           final-epoch parameters, same packing
//! last 8 bytes  CRC-64/XZ over everything before it
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::MlpParams;

use super::MapperConfig;

pub const CKPT_MAGIC: &[u8; 7] = b"NFBCKPT";
pub const CKPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub layer_dims: Vec<usize>,
    pub param_count: usize,
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub best_val_loss: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub final_val_loss: Option<f64>,
    /// CRC-64/XZ of the training dataset combined with the frozen view
    /// selection, hex.
    pub dataset_fingerprint: String,
}

/// A trained mapper: config, best-validation parameters (used by `infer`),
/// final-epoch parameters, and training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: MapperConfig,
    pub params: MlpParams,
    pub final_params: MlpParams,
    pub meta: CheckpointMeta,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: MapperConfig,
    meta: CheckpointMeta,
}

fn crc64(bytes: &[u8]) -> u64 {
    crc::Crc::<u64>::new(&crc::CRC_64_XZ).checksum(bytes)
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let header = Header {
        config: checkpoint.config.clone(),
        meta: checkpoint.meta.clone(),
    };
    let json = serde_json::to_vec(&header)
        .map_err(|e| Error::Parse(format!("checkpoint header encode: {e}")))?;

    let mut buf = Vec::new();
    buf.extend_from_slice(CKPT_MAGIC);
    buf.extend_from_slice(&CKPT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for x in checkpoint.params.pack() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in checkpoint.final_params.pack() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let crc = crc64(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let bytes = fs::read(path)?;
    if bytes.len() < 7 + 4 + 8 + 8 {
        return Err(Error::CorruptCheckpoint("file too short".into()));
    }
    if &bytes[0..7] != CKPT_MAGIC {
        return Err(Error::CorruptCheckpoint("missing NFBCKPT magic".into()));
    }
    let version = u32::from_le_bytes(bytes[7..11].try_into().unwrap());
    if version != CKPT_VERSION {
        return Err(Error::Version {
            found: version,
            supported: CKPT_VERSION,
        });
    }

    let body_len = bytes.len() - 8;
    let stored_crc = u64::from_le_bytes(bytes[body_len..].try_into().unwrap());
    if crc64(&bytes[..body_len]) != stored_crc {
        return Err(Error::CorruptCheckpoint("checksum mismatch".into()));
    }

    let json_len = u64::from_le_bytes(bytes[11..19].try_into().unwrap()) as usize;
    let json_end = 19usize
        .checked_add(json_len)
        .filter(|&e| e <= body_len)
        .ok_or_else(|| Error::CorruptCheckpoint("header length out of bounds".into()))?;
    let header: Header = serde_json::from_slice(&bytes[19..json_end])
        .map_err(|e| Error::CorruptCheckpoint(format!("header decode: {e}")))?;

    let n = header.meta.param_count;
    let expect_payload = 2 * n * 4;
    if body_len - json_end != expect_payload {
        return Err(Error::CorruptCheckpoint(format!(
            "expected {expect_payload} parameter bytes, found {}",
            body_len - json_end
        )));
    }
    let read_params = |start: usize| -> Result<MlpParams> {
        let mut flat = Vec::with_capacity(n);
        for chunk in bytes[start..start + n * 4].chunks_exact(4) {
            flat.push(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        MlpParams::unpack(&header.meta.layer_dims, &flat)
    };
    let params = read_params(json_end)?;
    let final_params = read_params(json_end + n * 4)?;

    Ok(Checkpoint {
        config: header.config,
        params,
        final_params,
        meta: header.meta,
    })
}
