//! Export predicted NeRF embeddings for downstream decoding.
//!
//! The mapper's output lives in the NeRF encoder's latent space; a
//! downstream decoder can turn the exported 1024-d vectors back into
//! renderable fields. This example maps an image embedding and a caption
//! embedding and writes both predictions as embedding blobs.
//!
//! ```bash
//! cargo run --release --example nerf_generation_export
//! ```

use nfbridge::dataset::{generate_synthetic, read_embedding_blob, write_embedding_blob, SynthSpec};
use nfbridge::mapper::{infer, train_clip2nerf, MapperConfig};

fn main() -> nfbridge::Result<()> {
    let dataset = generate_synthetic(&SynthSpec {
        num_classes: 4,
        objects_per_class: 15,
        views_per_object: 8,
        noise_sigma: 0.05,
        seed: 13,
    })?;

    let mut config = MapperConfig::clip2nerf(13);
    config.epochs = 15;
    config.max_lr = 5e-3;
    config.batch_size = 32;
    config.multimodal = true; // accept captions as inputs too
    let outcome = train_clip2nerf(&dataset, &config)?;

    let rec = &dataset.records()[0];
    let from_image = infer(&outcome.checkpoint, &rec.view_embeddings[0].0)?;
    let from_text = infer(&outcome.checkpoint, rec.caption_embedding.as_ref().unwrap())?;

    let dir = std::env::temp_dir().join("nfbridge_example_generation");
    std::fs::create_dir_all(&dir)?;
    let image_path = dir.join("from_image.bin");
    let text_path = dir.join("from_text.bin");
    write_embedding_blob(&image_path, std::slice::from_ref(&from_image))?;
    write_embedding_blob(&text_path, std::slice::from_ref(&from_text))?;

    let back = read_embedding_blob(&image_path, 1024)?;
    assert_eq!(back[0].as_slice(), from_image.as_slice());

    let agree = nfbridge::tensor::cosine_similarity(&from_image, &from_text)?;
    println!("predicted embeddings written to {}", dir.display());
    println!(
        "  {} ({} bytes)",
        image_path.display(),
        std::fs::metadata(&image_path)?.len()
    );
    println!(
        "  {} ({} bytes)",
        text_path.display(),
        std::fs::metadata(&text_path)?.len()
    );
    println!("image- and text-derived predictions agree at cosine {agree:.4}");
    Ok(())
}
