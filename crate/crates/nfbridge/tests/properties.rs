//! Property tests for the numeric and search invariants.

mod common;

use nfbridge::dataset::{
    generate_synthetic, load_dataset, save_dataset, select_views, SynthSpec, ViewSource,
};
use nfbridge::gallery::{build_gallery, topk};
use nfbridge::mapper::init_params_with_dims;
use nfbridge::tensor::{cosine_loss_and_grad, cosine_similarity, mlp_forward, Matrix, Vector};
use proptest::prelude::*;

fn finite_vec(dim: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-100.0f32..100.0, dim)
}

/// A vector with norm comfortably above the degeneracy floor.
fn usable_vec(dim: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-100.0f32..100.0, dim).prop_filter("norm too small", |v| {
        v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt() > 1e-3
    })
}

proptest! {
    #[test]
    fn cosine_symmetry(a in usable_vec(8), b in usable_vec(8)) {
        let (va, vb) = (Vector::new(a), Vector::new(b));
        let ab = cosine_similarity(&va, &vb).unwrap();
        let ba = cosine_similarity(&vb, &va).unwrap();
        prop_assert!((ab - ba).abs() < 1e-6);
        prop_assert!((-1.0 - 1e-6..=1.0 + 1e-6).contains(&ab));
    }

    #[test]
    fn cosine_positive_scale_invariance(a in usable_vec(6), b in usable_vec(6), lambda in 1e-3f32..1e3) {
        let va = Vector::new(a.clone());
        let scaled = Vector::new(a.iter().map(|&x| x * lambda).collect());
        let vb = Vector::new(b);
        let s1 = cosine_similarity(&va, &vb).unwrap();
        let s2 = cosine_similarity(&scaled, &vb).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-5);
    }

    #[test]
    fn cosine_loss_in_range(p in usable_vec(7), t in usable_vec(7)) {
        let (loss, _) = cosine_loss_and_grad(&Vector::new(p), &Vector::new(t)).unwrap();
        prop_assert!((-1e-6..=2.0 + 1e-6).contains(&(loss as f64)));
    }

    #[test]
    fn cosine_loss_zero_iff_positively_collinear(p in usable_vec(5), lambda in 1e-2f32..1e2) {
        let vp = Vector::new(p.clone());
        let collinear = Vector::new(p.iter().map(|&x| x * lambda).collect());
        let (loss, _) = cosine_loss_and_grad(&vp, &collinear).unwrap();
        prop_assert!(loss.abs() < 1e-5);
        let flipped = Vector::new(p.iter().map(|&x| -x).collect());
        let (loss_neg, _) = cosine_loss_and_grad(&vp, &flipped).unwrap();
        prop_assert!(loss_neg > 1.0);
    }

    #[test]
    fn cosine_loss_invariant_to_target_scaling(p in usable_vec(6), t in usable_vec(6), lambda in 1e-2f32..1e2) {
        let vp = Vector::new(p);
        let vt = Vector::new(t.clone());
        let scaled = Vector::new(t.iter().map(|&x| x * lambda).collect());
        let (l1, _) = cosine_loss_and_grad(&vp, &vt).unwrap();
        let (l2, _) = cosine_loss_and_grad(&vp, &scaled).unwrap();
        prop_assert!((l1 - l2).abs() < 1e-5);
    }

    #[test]
    fn forward_is_bit_deterministic(data in finite_vec(12..=12)) {
        let params = init_params_with_dims(&[4, 5, 3], 123).unwrap();
        let input = Matrix::from_vec(data, 3, 4).unwrap();
        let (a, _) = mlp_forward(&params, &input).unwrap();
        let (b, _) = mlp_forward(&params, &input).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn topk_matches_full_sort(
        n in 1usize..200,
        dim in 2usize..16,
        k in 1usize..25,
        seed in 0u64..1000,
        exclude_first in any::<bool>(),
    ) {
        let mut r = common::rng(seed);
        let entries: Vec<(String, String, Vector)> = (0..n)
            .map(|i| (format!("e{i}"), format!("l{}", i % 3), common::random_vector(&mut r, dim)))
            .collect();
        let gallery = build_gallery(entries).unwrap();
        let query = common::random_vector(&mut r, dim);
        let exclude = exclude_first.then_some("e0");

        let got = topk(&gallery, &query, k, exclude).unwrap();

        let qnorm = query.norm();
        let q: Vec<f64> = query.as_slice().iter().map(|&x| x as f64 / qnorm).collect();
        let mut all: Vec<(f32, usize)> = (0..gallery.len())
            .filter(|&i| exclude != Some(gallery.ids()[i].as_str()))
            .map(|i| {
                let mut acc = 0.0;
                for (a, &b) in q.iter().zip(gallery.row(i)) {
                    acc += a * b as f64;
                }
                (acc as f32, i)
            })
            .collect();
        all.sort_by(|(sa, ia), (sb, ib)| sb.total_cmp(sa).then(ia.cmp(ib)));
        all.truncate(k.min(all.len()));

        prop_assert_eq!(got.entries.len(), all.len());
        for (e, (score, idx)) in got.entries.iter().zip(&all) {
            prop_assert_eq!(&e.id, &gallery.ids()[*idx]);
            prop_assert_eq!(e.score, *score);
        }
    }

    #[test]
    fn topk_with_k_equal_rows_returns_everything(n in 1usize..60, seed in 0u64..500) {
        let mut r = common::rng(seed);
        let entries: Vec<(String, String, Vector)> = (0..n)
            .map(|i| (format!("e{i}"), "l".into(), common::random_vector(&mut r, 4)))
            .collect();
        let gallery = build_gallery(entries).unwrap();
        let query = common::random_vector(&mut r, 4);
        let got = topk(&gallery, &query, n, None).unwrap();
        prop_assert_eq!(got.entries.len(), n);
        let mut ids: Vec<&str> = got.entries.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
    }

    #[test]
    fn select_views_nesting(
        total in 1usize..24,
        n in 0usize..24,
        m in 0usize..12,
        seed in 0u64..2000,
    ) {
        prop_assume!(n + m <= total);
        let rec = nfbridge::dataset::ObjectRecord {
            id: format!("rec{seed}"),
            class_label: "c".into(),
            nerf_embedding: Vector::zeros(4),
            view_embeddings: (0..total)
                .map(|i| (Vector::new(vec![i as f32]), ViewSource::GroundTruth))
                .collect(),
            caption_embedding: None,
            split: nfbridge::dataset::Split::Train,
        };
        let small = select_views(&rec, n, &[ViewSource::GroundTruth], seed).unwrap();
        let large = select_views(&rec, n + m, &[ViewSource::GroundTruth], seed).unwrap();
        prop_assert!(small.iter().all(|i| large.contains(i)));
        let mut dedup = large.clone();
        dedup.dedup();
        prop_assert_eq!(dedup.len(), n + m);
    }
}

#[test]
fn dataset_roundtrip_excercised_across_shapes() {
    for (classes, objects, views, sigma, seed) in
        [(1, 1, 1, 0.0, 0), (2, 3, 5, 0.3, 1), (4, 2, 9, 1.5, 99)]
    {
        let ds = generate_synthetic(&SynthSpec {
            num_classes: classes,
            objects_per_class: objects,
            views_per_object: views,
            noise_sigma: sigma,
            seed,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (mp, bp) = (dir.path().join("m.json"), dir.path().join("b.bin"));
        save_dataset(&ds, &mp, &bp).unwrap();
        let loaded = load_dataset(&mp, &bp).unwrap();
        assert_eq!(ds.fingerprint(), loaded.fingerprint());
    }
}
