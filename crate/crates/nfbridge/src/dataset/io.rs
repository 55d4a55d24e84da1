//! On-disk dataset format: `manifest.json` + `embeddings.bin`.
//!
//! Blob layout (all integers little-endian):
//!
//! ```text
//! bytes 0..8   magic "NFBRIDGE"
//! bytes 8..12  u32 format version (currently 1)
//! bytes 12..   packed f32 LE vectors at manifest-declared byte offsets
//! ```
//!
//! The manifest declares the embedding widths and, per record, the byte
//! offset of each vector: the NeRF embedding (`nerf_dim` floats), each tagged
//! view embedding and the optional caption embedding (`clip_dim` floats
//! each), plus the class-anchor table. Writers may lay vectors out in any
//! non-overlapping order; this writer packs anchors first, then records in
//! order (NeRF, views, caption). Any exporter that produces this layout can
//! feed the toolkit directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Vector;

use super::{Dataset, ObjectRecord, Split, ViewSource};

pub const BLOB_MAGIC: &[u8; 8] = b"NFBRIDGE";
pub const FORMAT_VERSION: u32 = 1;
/// Magic plus version word.
pub const BLOB_HEADER_LEN: usize = 12;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    clip_dim: usize,
    nerf_dim: usize,
    classes: Vec<String>,
    anchors: Vec<AnchorEntry>,
    records: Vec<RecordEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnchorEntry {
    label: String,
    offset: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordEntry {
    id: String,
    label: String,
    split: Split,
    nerf_offset: u64,
    views: Vec<ViewEntry>,
    caption_offset: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ViewEntry {
    source: ViewSource,
    offset: u64,
}

pub(crate) struct BlobWriter {
    buf: Vec<u8>,
}

impl BlobWriter {
    pub fn new() -> Self {
        let mut buf = Vec::with_capacity(BLOB_HEADER_LEN);
        buf.extend_from_slice(BLOB_MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        BlobWriter { buf }
    }

    /// Append a vector; returns its byte offset.
    pub fn push(&mut self, v: &Vector) -> u64 {
        let offset = self.buf.len() as u64;
        for x in v.as_slice() {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
        offset
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct BlobReader {
    data: Vec<u8>,
}

impl BlobReader {
    pub fn from_bytes(data: Vec<u8>) -> Result<Self> {
        if data.len() < BLOB_HEADER_LEN || &data[0..8] != BLOB_MAGIC {
            return Err(Error::Parse("blob missing NFBRIDGE magic".into()));
        }
        let version = u32::from_le_bytes(data[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        Ok(BlobReader { data })
    }

    /// Read `dim` floats at `offset`, validating bounds and finiteness.
    /// `record`/`field` name the owner in error messages.
    pub fn read(&self, offset: u64, dim: usize, record: &str, field: &str) -> Result<Vector> {
        let start = offset as usize;
        let end = start.checked_add(dim * 4);
        if start < BLOB_HEADER_LEN || end.is_none() || end.unwrap() > self.data.len() {
            return Err(Error::validation(
                record,
                field,
                format!(
                    "offset {offset} with {dim} floats is out of bounds (blob is {} bytes)",
                    self.data.len()
                ),
            ));
        }
        let end = end.unwrap();
        let mut out = Vec::with_capacity(dim);
        for chunk in self.data[start..end].chunks_exact(4) {
            let x = f32::from_le_bytes(chunk.try_into().unwrap());
            if !x.is_finite() {
                return Err(Error::validation(
                    record,
                    field,
                    format!("non-finite value at offset {offset}"),
                ));
            }
            out.push(x);
        }
        Ok(Vector::new(out))
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }
}

/// Serialize a dataset to `manifest_path` + `blob_path`. Byte output is a
/// pure function of the dataset.
pub fn save_dataset(
    dataset: &Dataset,
    manifest_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<()> {
    let mut blob = BlobWriter::new();

    let anchors: Vec<AnchorEntry> = dataset
        .anchors()
        .iter()
        .map(|(label, v)| AnchorEntry {
            label: label.clone(),
            offset: blob.push(v),
        })
        .collect();

    let records: Vec<RecordEntry> = dataset
        .records()
        .iter()
        .map(|rec| RecordEntry {
            id: rec.id.clone(),
            label: rec.class_label.clone(),
            split: rec.split,
            nerf_offset: blob.push(&rec.nerf_embedding),
            views: rec
                .view_embeddings
                .iter()
                .map(|(v, source)| ViewEntry {
                    source: *source,
                    offset: blob.push(v),
                })
                .collect(),
            caption_offset: rec.caption_embedding.as_ref().map(|c| blob.push(c)),
        })
        .collect();

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        clip_dim: dataset.clip_dim(),
        nerf_dim: dataset.nerf_dim(),
        classes: dataset.class_vocabulary().into_iter().collect(),
        anchors,
        records,
    };

    let mut json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Parse(format!("manifest encode: {e}")))?;
    json.push(b'\n');
    fs::write(manifest_path, json)?;
    fs::write(blob_path, blob.into_bytes())?;
    Ok(())
}

/// Load and fully validate a dataset saved by [`save_dataset`] (or any
/// exporter producing the documented layout).
pub fn load_dataset(
    manifest_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<Dataset> {
    let manifest_bytes = fs::read(manifest_path)?;
    let manifest: Manifest = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| Error::Parse(format!("manifest decode: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Version {
            found: manifest.format_version,
            supported: FORMAT_VERSION,
        });
    }
    let blob = BlobReader::from_bytes(fs::read(blob_path)?)?;

    let mut spans: Vec<(u64, usize, String)> = Vec::new();

    let mut anchors = BTreeMap::new();
    for a in &manifest.anchors {
        let v = blob.read(
            a.offset,
            manifest.clip_dim,
            &format!("<anchor:{}>", a.label),
            "anchor",
        )?;
        spans.push((
            a.offset,
            manifest.clip_dim * 4,
            format!("anchor {}", a.label),
        ));
        if anchors.insert(a.label.clone(), v).is_some() {
            return Err(Error::validation(
                format!("<anchor:{}>", a.label),
                "label",
                "duplicate anchor label",
            ));
        }
    }

    let mut records = Vec::with_capacity(manifest.records.len());
    for entry in &manifest.records {
        let nerf = blob.read(
            entry.nerf_offset,
            manifest.nerf_dim,
            &entry.id,
            "nerf_embedding",
        )?;
        spans.push((entry.nerf_offset, manifest.nerf_dim * 4, entry.id.clone()));
        let mut views = Vec::with_capacity(entry.views.len());
        for (i, ve) in entry.views.iter().enumerate() {
            let v = blob.read(
                ve.offset,
                manifest.clip_dim,
                &entry.id,
                &format!("view_embeddings[{i}]"),
            )?;
            spans.push((ve.offset, manifest.clip_dim * 4, entry.id.clone()));
            views.push((v, ve.source));
        }
        let caption = entry
            .caption_offset
            .map(|off| {
                spans.push((off, manifest.clip_dim * 4, entry.id.clone()));
                blob.read(off, manifest.clip_dim, &entry.id, "caption_embedding")
            })
            .transpose()?;
        records.push(ObjectRecord {
            id: entry.id.clone(),
            class_label: entry.label.clone(),
            nerf_embedding: nerf,
            view_embeddings: views,
            caption_embedding: caption,
            split: entry.split,
        });
    }

    // Declared spans must not overlap.
    spans.sort_by_key(|(off, _, _)| *off);
    for pair in spans.windows(2) {
        let (off_a, len_a, ref owner_a) = pair[0];
        let (off_b, _, ref owner_b) = pair[1];
        if off_a + len_a as u64 > off_b {
            return Err(Error::validation(
                owner_b.clone(),
                "offset",
                format!("overlaps the span of '{owner_a}'"),
            ));
        }
    }

    Dataset::new(records, anchors, manifest.clip_dim, manifest.nerf_dim)
}

/// Write a bare embedding blob: header plus `vectors` packed back to back.
/// Used for gallery rows and exported predictions.
pub fn write_embedding_blob(path: impl AsRef<Path>, vectors: &[Vector]) -> Result<()> {
    let mut blob = BlobWriter::new();
    for v in vectors {
        blob.push(v);
    }
    fs::write(path, blob.into_bytes())?;
    Ok(())
}

/// Read a bare embedding blob of `dim`-wide vectors. The payload length must
/// be a multiple of `4·dim`.
pub fn read_embedding_blob(path: impl AsRef<Path>, dim: usize) -> Result<Vec<Vector>> {
    let reader = BlobReader::from_bytes(fs::read(path)?)?;
    let payload = reader.len() - BLOB_HEADER_LEN;
    if dim == 0 || !payload.is_multiple_of(4 * dim) {
        return Err(Error::Parse(format!(
            "blob payload of {payload} bytes is not a whole number of {dim}-float vectors"
        )));
    }
    let count = payload / (4 * dim);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let offset = (BLOB_HEADER_LEN + i * 4 * dim) as u64;
        out.push(reader.read(offset, dim, &format!("<vector {i}>"), "data")?);
    }
    Ok(out)
}
