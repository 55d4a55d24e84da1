//! Seeded view selection and the syn2real training-view composition.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::record_rng;

use super::{ObjectRecord, ViewSource};

/// The sources treated as "synthetic" by the syn2real composition.
pub const SYNTHETIC_SOURCES: [ViewSource; 2] = [ViewSource::GroundTruth, ViewSource::Rendered];

/// Chosen view indices for one record.
#[derive(Debug, Clone)]
pub struct ViewSelection {
    pub record_index: usize,
    pub view_indices: Vec<usize>,
}

/// Select `n` distinct views of `record` matching `source_filter`, seeded
/// and without replacement. Returned indices point into
/// `record.view_embeddings` and are sorted ascending.
///
/// Selection is a prefix of a per-record seeded permutation, so for a fixed
/// seed the `n`-view selection is contained in the `n+m`-view selection, and
/// `n == available` returns every matching view in original order.
pub fn select_views(
    record: &ObjectRecord,
    n: usize,
    source_filter: &[ViewSource],
    seed: u64,
) -> Result<Vec<usize>> {
    let mut matching = record.matching_views(source_filter);
    if matching.len() < n {
        return Err(Error::InsufficientViews {
            id: record.id.clone(),
            requested: n,
            available: matching.len(),
        });
    }
    let mut rng = record_rng(seed, &record.id);
    matching.shuffle(&mut rng);
    let mut chosen: Vec<usize> = matching.into_iter().take(n).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Per record, merge `n_synthetic` ground-truth/rendered views with
/// `n_generated` generated views into one training-view list.
pub fn compose_syn2real(
    records: &[ObjectRecord],
    n_synthetic: usize,
    n_generated: usize,
    seed: u64,
) -> Result<Vec<ViewSelection>> {
    records
        .iter()
        .enumerate()
        .map(|(record_index, rec)| {
            let mut view_indices = select_views(rec, n_synthetic, &SYNTHETIC_SOURCES, seed)?;
            if n_generated > 0 {
                view_indices.extend(select_views(
                    rec,
                    n_generated,
                    &[ViewSource::Generated],
                    seed,
                )?);
                view_indices.sort_unstable();
            }
            Ok(ViewSelection {
                record_index,
                view_indices,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Split, ViewSource};
    use crate::tensor::Vector;

    fn record_with_sources(sources: &[ViewSource]) -> ObjectRecord {
        ObjectRecord {
            id: "rec_a".into(),
            class_label: "c".into(),
            nerf_embedding: Vector::zeros(8),
            view_embeddings: sources
                .iter()
                .enumerate()
                .map(|(i, &s)| (Vector::new(vec![i as f32; 4]), s))
                .collect(),
            caption_embedding: None,
            split: Split::Train,
        }
    }

    fn gt_record(n: usize) -> ObjectRecord {
        record_with_sources(&vec![ViewSource::GroundTruth; n])
    }

    #[test]
    fn full_selection_is_order_stable() {
        let rec = gt_record(6);
        let all = select_views(&rec, 6, &[ViewSource::GroundTruth], 3).unwrap();
        assert_eq!(all, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn selection_nests_with_growing_n() {
        let rec = gt_record(16);
        for seed in [0u64, 1, 99, 12345] {
            let s4 = select_views(&rec, 4, &[ViewSource::GroundTruth], seed).unwrap();
            let s8 = select_views(&rec, 8, &[ViewSource::GroundTruth], seed).unwrap();
            let s16 = select_views(&rec, 16, &[ViewSource::GroundTruth], seed).unwrap();
            assert!(s4.iter().all(|i| s8.contains(i)), "seed {seed}");
            assert!(s8.iter().all(|i| s16.contains(i)));
            assert_eq!(s8.len(), 8);
            // no duplicates
            let mut dedup = s8.clone();
            dedup.dedup();
            assert_eq!(dedup, s8);
        }
    }

    #[test]
    fn filter_without_matches_errors() {
        let rec = gt_record(4);
        let err = select_views(&rec, 1, &[ViewSource::Generated], 0).unwrap_err();
        match err {
            Error::InsufficientViews {
                id,
                requested,
                available,
            } => {
                assert_eq!(id, "rec_a");
                assert_eq!((requested, available), (1, 0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syn2real_seven_plus_seven() {
        let mut sources = vec![ViewSource::GroundTruth; 4];
        sources.extend(vec![ViewSource::Rendered; 3]);
        sources.extend(vec![ViewSource::Generated; 7]);
        let recs = vec![record_with_sources(&sources)];
        let sel = compose_syn2real(&recs, 7, 7, 42).unwrap();
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].view_indices.len(), 14);
        let mut uniq = sel[0].view_indices.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), 14);
    }

    #[test]
    fn syn2real_without_generated_reduces_to_select() {
        let recs = vec![gt_record(5)];
        let sel = compose_syn2real(&recs, 3, 0, 9).unwrap();
        let direct = select_views(&recs[0], 3, &SYNTHETIC_SOURCES, 9).unwrap();
        assert_eq!(sel[0].view_indices, direct);
    }

    #[test]
    fn syn2real_missing_generated_names_record() {
        let recs = vec![gt_record(8)];
        match compose_syn2real(&recs, 4, 2, 0).unwrap_err() {
            Error::InsufficientViews { id, .. } => assert_eq!(id, "rec_a"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
