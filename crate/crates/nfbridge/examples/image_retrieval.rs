//! NeRF retrieval from image embeddings: single-view queries, then
//! multi-view query averaging, against the test-split gallery with
//! self-exclusion.
//!
//! ```bash
//! cargo run --release --example image_retrieval
//! ```

use nfbridge::dataset::{generate_synthetic, SynthSpec};
use nfbridge::eval::eval_retrieval_images;
use nfbridge::mapper::{train_clip2nerf, MapperConfig};

fn main() -> nfbridge::Result<()> {
    let dataset = generate_synthetic(&SynthSpec {
        num_classes: 5,
        objects_per_class: 24,
        views_per_object: 8,
        noise_sigma: 0.2,
        seed: 17,
    })?;

    let mut config = MapperConfig::clip2nerf(17);
    config.epochs = 20;
    config.max_lr = 5e-3;
    config.batch_size = 32;
    let outcome = train_clip2nerf(&dataset, &config)?;

    println!("query views | recall@1 | recall@5 | recall@10");
    println!("------------+----------+----------+----------");
    for n in [1usize, 2, 4] {
        // one seed across rows: growing view sets nest, so rows are comparable
        let report = eval_retrieval_images(&dataset, &dataset, &outcome.checkpoint, n, 17)?;
        println!(
            "{n:>11} | {:>8.3} | {:>8.3} | {:>9.3}",
            report.metrics["recall@1"], report.metrics["recall@5"], report.metrics["recall@10"],
        );
    }
    Ok(())
}
