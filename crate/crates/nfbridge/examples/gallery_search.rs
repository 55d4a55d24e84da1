//! Exact top-k cosine search: build a gallery, query it, exclude an entry,
//! and round-trip the gallery files.
//!
//! ```bash
//! cargo run --release --example gallery_search
//! ```

use nfbridge::gallery::{build_gallery, load_gallery, save_gallery, topk};
use nfbridge::tensor::Vector;

fn main() -> nfbridge::Result<()> {
    // tiny hand-made embedding database: three clusters in 4-d
    let centers = [
        ("lamp", [1.0f32, 0.2, 0.0, 0.0]),
        ("chair", [0.0, 1.0, 0.3, 0.0]),
        ("plane", [0.0, 0.0, 0.2, 1.0]),
    ];
    let mut entries = Vec::new();
    for (label, c) in &centers {
        for i in 0..4 {
            let jitter = 0.05 * i as f32;
            entries.push((
                format!("{label}_{i}"),
                label.to_string(),
                Vector::new(vec![c[0] + jitter, c[1], c[2] + jitter, c[3]]),
            ));
        }
    }
    let gallery = build_gallery(entries)?;
    println!("gallery: {} entries, dim {}", gallery.len(), gallery.dim());

    let query = Vector::new(vec![0.9, 0.25, 0.05, 0.0]);
    let hits = topk(&gallery, &query, 3, None)?;
    println!("top-3 for a lamp-like query:");
    for (rank, e) in hits.entries.iter().enumerate() {
        println!(
            "  {}. {:<8} ({})  score {:.4}",
            rank + 1,
            e.id,
            e.label,
            e.score
        );
    }

    let excluded = topk(&gallery, &query, 3, Some(&hits.entries[0].id))?;
    println!(
        "with '{}' excluded the winner becomes '{}'",
        hits.entries[0].id, excluded.entries[0].id,
    );

    let dir = std::env::temp_dir().join("nfbridge_example_gallery");
    std::fs::create_dir_all(&dir)?;
    save_gallery(
        &gallery,
        dir.join("manifest.json"),
        dir.join("embeddings.bin"),
    )?;
    let reloaded = load_gallery(dir.join("manifest.json"), dir.join("embeddings.bin"))?;
    assert_eq!(reloaded.ids(), gallery.ids());
    println!("gallery files round-tripped at {}", dir.display());
    Ok(())
}
