//! Generate a synthetic embedding dataset, save it in the on-disk format,
//! and load it back.
//!
//! ```bash
//! cargo run --release --example synthetic_dataset
//! ```

use nfbridge::dataset::{generate_synthetic, load_dataset, save_dataset, Split, SynthSpec};

fn main() -> nfbridge::Result<()> {
    let spec = SynthSpec {
        num_classes: 5,
        objects_per_class: 20,
        views_per_object: 8,
        noise_sigma: 0.05,
        seed: 42,
    };
    let dataset = generate_synthetic(&spec)?;

    println!(
        "generated {} records across {} classes",
        dataset.len(),
        dataset.anchors().len()
    );
    for split in [Split::Train, Split::Val, Split::Test] {
        println!(
            "  {:?}: {} records",
            split,
            dataset.split_records(split).len()
        );
    }
    let rec = &dataset.records()[0];
    println!(
        "first record '{}': nerf {}d, {} views, caption: {}",
        rec.id,
        rec.nerf_embedding.dim(),
        rec.view_embeddings.len(),
        rec.caption_embedding.is_some(),
    );

    let dir = std::env::temp_dir().join("nfbridge_example_dataset");
    std::fs::create_dir_all(&dir)?;
    let manifest = dir.join("manifest.json");
    let blob = dir.join("embeddings.bin");
    save_dataset(&dataset, &manifest, &blob)?;
    println!(
        "saved to {} ({} bytes of embeddings)",
        dir.display(),
        std::fs::metadata(&blob)?.len(),
    );

    let loaded = load_dataset(&manifest, &blob)?;
    assert_eq!(loaded.fingerprint(), dataset.fingerprint());
    println!(
        "reloaded bit-exact, fingerprint {:016x}",
        loaded.fingerprint()
    );
    Ok(())
}
