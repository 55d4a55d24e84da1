//! Exact top-k cosine-similarity search over embedding galleries.
//!
//! Rows are stored unit-normalized (original norms kept aside) so a query
//! reduces to one dot product per row, accumulated in f64. Results are
//! ordered by descending score with ties broken by ascending insertion
//! index, which makes rankings reproducible. Galleries are immutable after
//! construction and safe to query from many threads.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{read_embedding_blob, write_embedding_blob, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::mapper::{infer, Checkpoint, MapperDirection};
use crate::tensor::{mean_rows, Matrix, Vector, NORM_EPS};

#[derive(Debug, Clone)]
pub struct Gallery {
    ids: Vec<String>,
    labels: Vec<String>,
    rows: Matrix,
    norms: Vec<f32>,
    by_id: HashMap<String, usize>,
}

/// One ranked search hit.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScoredEntry {
    pub id: String,
    pub label: String,
    pub score: f32,
}

/// Ranked hits, scores non-increasing.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QueryResult {
    pub entries: Vec<ScoredEntry>,
}

impl Gallery {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    /// Original (pre-normalization) norm of entry `i`.
    pub fn norm(&self, i: usize) -> f32 {
        self.norms[i]
    }

    pub fn row(&self, i: usize) -> &[f32] {
        self.rows.row(i)
    }
}

/// Build a search-ready gallery from `(id, label, embedding)` entries.
pub fn build_gallery(entries: Vec<(String, String, Vector)>) -> Result<Gallery> {
    if entries.is_empty() {
        return Err(Error::EmptyInput("build_gallery"));
    }
    let dim = entries[0].2.dim();
    let mut ids = Vec::with_capacity(entries.len());
    let mut labels = Vec::with_capacity(entries.len());
    let mut norms = Vec::with_capacity(entries.len());
    let mut by_id = HashMap::with_capacity(entries.len());
    let mut rows = Matrix::zeros(entries.len(), dim);

    for (i, (id, label, v)) in entries.into_iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::dim(format!("gallery entry '{id}'"), dim, v.dim()));
        }
        let (unit, norm) = v.normalized().map_err(|_| Error::DegenerateVector {
            context: format!("gallery entry '{id}'"),
        })?;
        rows.row_mut(i).copy_from_slice(unit.as_slice());
        if by_id.insert(id.clone(), i).is_some() {
            return Err(Error::DuplicateId(id));
        }
        ids.push(id);
        labels.push(label);
        norms.push(norm);
    }
    Ok(Gallery {
        ids,
        labels,
        rows,
        norms,
        by_id,
    })
}

/// A gallery with one entry per class anchor; id == label == class name.
/// Insertion order is the map's (lexicographic) order, which is also the
/// documented tie-break order for identical anchors.
pub fn label_gallery_from_anchors(anchors: &BTreeMap<String, Vector>) -> Result<Gallery> {
    build_gallery(
        anchors
            .iter()
            .map(|(label, v)| (label.clone(), label.clone(), v.clone()))
            .collect(),
    )
}

fn rank_of(score: f32, idx: usize) -> (std::cmp::Reverse<ordered_score::F32Total>, usize) {
    (std::cmp::Reverse(ordered_score::F32Total(score)), idx)
}

mod ordered_score {
    /// Total order on finite f32 scores for deterministic ranking.
    #[derive(PartialEq, Clone, Copy, Debug)]
    pub struct F32Total(pub f32);
    impl Eq for F32Total {}
    impl PartialOrd for F32Total {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for F32Total {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
}

/// Exact top-k by cosine similarity: identical to sorting every eligible
/// entry by (descending score, ascending insertion index) and truncating to
/// k. `exclude_id` drops at most one entry; an id absent from the gallery
/// excludes nothing.
pub fn topk(
    gallery: &Gallery,
    query: &Vector,
    k: usize,
    exclude_id: Option<&str>,
) -> Result<QueryResult> {
    if k == 0 {
        return Err(Error::OutOfRange {
            what: "k",
            value: 0,
            limit: 1,
        });
    }
    if query.dim() != gallery.dim() {
        return Err(Error::dim("topk query", gallery.dim(), query.dim()));
    }
    let qnorm = query.norm();
    if qnorm <= NORM_EPS {
        return Err(Error::DegenerateVector {
            context: "topk query".into(),
        });
    }
    let q: Vec<f64> = query.as_slice().iter().map(|&x| x as f64 / qnorm).collect();
    let excluded = exclude_id.and_then(|id| gallery.by_id.get(id).copied());

    let mut scored: Vec<(f32, usize)> = Vec::with_capacity(gallery.len());
    for i in 0..gallery.len() {
        if Some(i) == excluded {
            continue;
        }
        let row = gallery.rows.row(i);
        let mut acc = 0.0f64;
        for (a, &b) in q.iter().zip(row) {
            acc += a * b as f64;
        }
        scored.push((acc as f32, i));
    }

    let take = k.min(scored.len());
    if take < scored.len() {
        scored.select_nth_unstable_by_key(take, |&(s, i)| rank_of(s, i));
    }
    scored.truncate(take);
    scored.sort_unstable_by_key(|&(s, i)| rank_of(s, i));

    Ok(QueryResult {
        entries: scored
            .into_iter()
            .map(|(score, i)| ScoredEntry {
                id: gallery.ids[i].clone(),
                label: gallery.labels[i].clone(),
                score,
            })
            .collect(),
    })
}

/// Multi-view retrieval: map every view through a clip2nerf checkpoint,
/// average the predicted embeddings, then search. With one view this is
/// exactly infer + topk.
pub fn multi_view_query(
    checkpoint: &Checkpoint,
    views: &[Vector],
    gallery: &Gallery,
    k: usize,
    exclude_id: Option<&str>,
) -> Result<QueryResult> {
    if views.is_empty() {
        return Err(Error::EmptyInput("multi_view_query views"));
    }
    if checkpoint.config.direction != MapperDirection::Clip2Nerf {
        return Err(Error::ConfigMismatch(
            "multi_view_query needs a clip2nerf checkpoint".into(),
        ));
    }
    let predicted: Vec<Vector> = views
        .iter()
        .map(|v| infer(checkpoint, v))
        .collect::<Result<_>>()?;
    let refs: Vec<&Vector> = predicted.iter().collect();
    let reference = mean_rows(&Matrix::from_rows(&refs)?)?;
    topk(gallery, &reference, k, exclude_id)
}

#[derive(Serialize, Deserialize)]
struct GalleryManifest {
    format_version: u32,
    kind: String,
    dim: usize,
    entries: Vec<GalleryEntryMeta>,
}

#[derive(Serialize, Deserialize)]
struct GalleryEntryMeta {
    id: String,
    label: String,
    norm: f32,
}

/// Save a gallery as `manifest.json` + `embeddings.bin` (unit rows in the
/// blob, ids/labels/norms in the manifest).
pub fn save_gallery(
    gallery: &Gallery,
    manifest_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<()> {
    let manifest = GalleryManifest {
        format_version: FORMAT_VERSION,
        kind: "gallery".into(),
        dim: gallery.dim(),
        entries: (0..gallery.len())
            .map(|i| GalleryEntryMeta {
                id: gallery.ids[i].clone(),
                label: gallery.labels[i].clone(),
                norm: gallery.norms[i],
            })
            .collect(),
    };
    let mut json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Parse(format!("gallery manifest encode: {e}")))?;
    json.push(b'\n');
    std::fs::write(manifest_path, json)?;
    let rows: Vec<Vector> = (0..gallery.len())
        .map(|i| gallery.rows.row_vector(i))
        .collect();
    write_embedding_blob(blob_path, &rows)
}

pub fn load_gallery(
    manifest_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<Gallery> {
    let manifest: GalleryManifest = serde_json::from_slice(&std::fs::read(manifest_path)?)
        .map_err(|e| Error::Parse(format!("gallery manifest decode: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Version {
            found: manifest.format_version,
            supported: FORMAT_VERSION,
        });
    }
    let rows = read_embedding_blob(blob_path, manifest.dim)?;
    if rows.len() != manifest.entries.len() {
        return Err(Error::Parse(format!(
            "gallery blob holds {} rows, manifest lists {}",
            rows.len(),
            manifest.entries.len()
        )));
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut norms = Vec::with_capacity(rows.len());
    let mut by_id = HashMap::new();
    let mut mat = Matrix::zeros(rows.len(), manifest.dim);
    for (i, (meta, row)) in manifest.entries.iter().zip(&rows).enumerate() {
        let rnorm = row.norm();
        if (rnorm - 1.0).abs() > 1e-6 {
            return Err(Error::validation(
                &meta.id,
                "row",
                format!("stored gallery row must be unit-norm, got {rnorm}"),
            ));
        }
        mat.row_mut(i).copy_from_slice(row.as_slice());
        if by_id.insert(meta.id.clone(), i).is_some() {
            return Err(Error::DuplicateId(meta.id.clone()));
        }
        ids.push(meta.id.clone());
        labels.push(meta.label.clone());
        norms.push(meta.norm);
    }
    Ok(Gallery {
        ids,
        labels,
        rows: mat,
        norms,
        by_id,
    })
}
