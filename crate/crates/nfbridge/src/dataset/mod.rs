//! Embedding datasets: domain types, validation, and the synthetic
//! benchmark generator.
//!
//! A dataset holds one [`ObjectRecord`] per 3D object (its NeRF weight-space
//! embedding, per-view image embeddings tagged by source, and optionally a
//! caption embedding) plus a class-anchor table with one text-side embedding
//! per class. The on-disk form is a JSON manifest and a packed f32 blob; see
//! [`io`].

mod io;
mod views;

pub use io::{
    load_dataset, read_embedding_blob, save_dataset, write_embedding_blob, BLOB_HEADER_LEN,
    BLOB_MAGIC, FORMAT_VERSION,
};
pub use views::{compose_syn2real, select_views, ViewSelection, SYNTHETIC_SOURCES};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::tensor::Vector;

/// Default CLIP-side embedding width.
pub const DEFAULT_CLIP_DIM: usize = 512;
/// Default NeRF-side embedding width.
pub const DEFAULT_NERF_DIM: usize = 1024;

/// Where a view embedding came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewSource {
    GroundTruth,
    Rendered,
    Generated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One object: NeRF embedding, tagged view embeddings, optional caption
/// embedding, class label, and split.
#[derive(Debug, Clone)]
pub struct ObjectRecord {
    pub id: String,
    pub class_label: String,
    pub nerf_embedding: Vector,
    pub view_embeddings: Vec<(Vector, ViewSource)>,
    pub caption_embedding: Option<Vector>,
    pub split: Split,
}

impl ObjectRecord {
    /// Indices of views whose source is in `filter`, ascending.
    pub fn matching_views(&self, filter: &[ViewSource]) -> Vec<usize> {
        self.view_embeddings
            .iter()
            .enumerate()
            .filter(|(_, (_, s))| filter.contains(s))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A validated, immutable embedding dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<ObjectRecord>,
    anchors: BTreeMap<String, Vector>,
    clip_dim: usize,
    nerf_dim: usize,
}

impl Dataset {
    /// Validates records and anchors: unique ids, at least one view each,
    /// consistent dimensions, finite entries.
    pub fn new(
        records: Vec<ObjectRecord>,
        anchors: BTreeMap<String, Vector>,
        clip_dim: usize,
        nerf_dim: usize,
    ) -> Result<Self> {
        if clip_dim == 0 || nerf_dim == 0 {
            return Err(Error::Parse("embedding dims must be positive".into()));
        }
        let mut seen = HashSet::new();
        for rec in &records {
            if !seen.insert(rec.id.as_str()) {
                return Err(Error::validation(&rec.id, "id", "duplicate id"));
            }
            check_vector(&rec.nerf_embedding, nerf_dim, &rec.id, "nerf_embedding")?;
            if rec.view_embeddings.is_empty() {
                return Err(Error::validation(
                    &rec.id,
                    "view_embeddings",
                    "record has no views",
                ));
            }
            for (i, (v, _)) in rec.view_embeddings.iter().enumerate() {
                check_vector(v, clip_dim, &rec.id, &format!("view_embeddings[{i}]"))?;
            }
            if let Some(c) = &rec.caption_embedding {
                check_vector(c, clip_dim, &rec.id, "caption_embedding")?;
            }
        }
        for (label, v) in &anchors {
            check_vector(v, clip_dim, &format!("<anchor:{label}>"), "anchor")?;
        }
        Ok(Dataset {
            records,
            anchors,
            clip_dim,
            nerf_dim,
        })
    }

    pub fn records(&self) -> &[ObjectRecord] {
        &self.records
    }

    pub fn anchors(&self) -> &BTreeMap<String, Vector> {
        &self.anchors
    }

    pub fn clip_dim(&self) -> usize {
        self.clip_dim
    }

    pub fn nerf_dim(&self) -> usize {
        self.nerf_dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn split_records(&self, split: Split) -> Vec<&ObjectRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    pub fn find(&self, id: &str) -> Option<&ObjectRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// All class labels appearing in records or the anchor table, sorted.
    pub fn class_vocabulary(&self) -> BTreeSet<String> {
        let mut vocab: BTreeSet<String> =
            self.records.iter().map(|r| r.class_label.clone()).collect();
        vocab.extend(self.anchors.keys().cloned());
        vocab
    }

    /// CRC-64/XZ over a canonical byte serialization of every record and
    /// anchor. Identifies the exact training data inside checkpoints.
    pub fn fingerprint(&self) -> u64 {
        let crc = crc::Crc::<u64>::new(&crc::CRC_64_XZ);
        let mut digest = crc.digest();
        let feed_vec = |digest: &mut crc::Digest<u64>, v: &Vector| {
            for x in v.as_slice() {
                digest.update(&x.to_le_bytes());
            }
        };
        for rec in &self.records {
            digest.update(rec.id.as_bytes());
            digest.update(&[0]);
            digest.update(rec.class_label.as_bytes());
            digest.update(&[0, split_byte(rec.split)]);
            feed_vec(&mut digest, &rec.nerf_embedding);
            for (v, s) in &rec.view_embeddings {
                digest.update(&[source_byte(*s)]);
                feed_vec(&mut digest, v);
            }
            match &rec.caption_embedding {
                Some(c) => {
                    digest.update(&[1]);
                    feed_vec(&mut digest, c);
                }
                None => digest.update(&[0]),
            }
        }
        for (label, v) in &self.anchors {
            digest.update(label.as_bytes());
            digest.update(&[0]);
            feed_vec(&mut digest, v);
        }
        digest.finalize()
    }
}

fn split_byte(s: Split) -> u8 {
    match s {
        Split::Train => 0,
        Split::Val => 1,
        Split::Test => 2,
    }
}

fn source_byte(s: ViewSource) -> u8 {
    match s {
        ViewSource::GroundTruth => 0,
        ViewSource::Rendered => 1,
        ViewSource::Generated => 2,
    }
}

fn check_vector(v: &Vector, dim: usize, record: &str, field: &str) -> Result<()> {
    if v.dim() != dim {
        return Err(Error::validation(
            record,
            field,
            format!("expected dimension {dim}, got {}", v.dim()),
        ));
    }
    if let Some(i) = v.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(Error::validation(
            record,
            field,
            format!("non-finite value at index {i}"),
        ));
    }
    Ok(())
}

/// Parameters of the synthetic benchmark generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub objects_per_class: usize,
    pub views_per_object: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Generate a class-structured synthetic dataset.
///
/// Per class, a unit-norm 512-d anchor and a unit-norm 1024-d NeRF-side
/// anchor are drawn. Every object of the class is its anchor plus
/// per-coordinate Gaussian noise of width `noise_sigma`; the caption
/// embedding is another noisy copy of the class anchor. View sources cycle
/// `ground_truth, rendered, ground_truth, generated` so that every source is
/// represented with a ground-truth majority. Splits are 80/10/10 by a seeded
/// shuffle. The output bytes are a pure function of the parameters.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    if spec.num_classes == 0 || spec.objects_per_class == 0 || spec.views_per_object == 0 {
        return Err(Error::ConfigMismatch(
            "synthetic spec requires positive class/object/view counts".into(),
        ));
    }
    if spec.noise_sigma.is_nan() || spec.noise_sigma < 0.0 {
        return Err(Error::ConfigMismatch(
            "noise_sigma must be non-negative".into(),
        ));
    }
    let mut rng = rng_from_seed(derive_seed(spec.seed, stream::SYNTH));
    let (clip_dim, nerf_dim) = (DEFAULT_CLIP_DIM, DEFAULT_NERF_DIM);

    let mut clip_anchors = Vec::with_capacity(spec.num_classes);
    let mut nerf_anchors = Vec::with_capacity(spec.num_classes);
    for _ in 0..spec.num_classes {
        clip_anchors.push(unit_gaussian(&mut rng, clip_dim));
        nerf_anchors.push(unit_gaussian(&mut rng, nerf_dim));
    }

    let mut records = Vec::with_capacity(spec.num_classes * spec.objects_per_class);
    for c in 0..spec.num_classes {
        let label = format!("class_{c:03}");
        for o in 0..spec.objects_per_class {
            let nerf = noisy_copy(&mut rng, &nerf_anchors[c], spec.noise_sigma);
            let mut views = Vec::with_capacity(spec.views_per_object);
            for v in 0..spec.views_per_object {
                let source = match v % 4 {
                    1 => ViewSource::Rendered,
                    3 => ViewSource::Generated,
                    _ => ViewSource::GroundTruth,
                };
                views.push((
                    noisy_copy(&mut rng, &clip_anchors[c], spec.noise_sigma),
                    source,
                ));
            }
            let caption = noisy_copy(&mut rng, &clip_anchors[c], spec.noise_sigma);
            records.push(ObjectRecord {
                id: format!("obj_{c:03}_{o:04}"),
                class_label: label.clone(),
                nerf_embedding: nerf,
                view_embeddings: views,
                caption_embedding: Some(caption),
                split: Split::Train, // assigned below
            });
        }
    }

    let n = records.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    for (rank, &idx) in order.iter().enumerate() {
        records[idx].split = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }

    let anchors: BTreeMap<String, Vector> = (0..spec.num_classes)
        .map(|c| {
            (
                format!("class_{c:03}"),
                Vector::new(clip_anchors[c].iter().map(|&x| x as f32).collect()),
            )
        })
        .collect();

    Dataset::new(records, anchors, clip_dim, nerf_dim)
}

fn unit_gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

fn noisy_copy(rng: &mut impl Rng, anchor: &[f64], sigma: f64) -> Vector {
    Vector::new(
        anchor
            .iter()
            .map(|&a| (a + sigma * rng.sample::<f64, _>(StandardNormal)) as f32)
            .collect(),
    )
}
