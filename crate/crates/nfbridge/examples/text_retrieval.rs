//! NeRF retrieval from caption embeddings, with and without multimodal
//! training (captions mixed into the clip2nerf sample pool).
//!
//! ```bash
//! cargo run --release --example text_retrieval
//! ```

use nfbridge::dataset::{generate_synthetic, SynthSpec};
use nfbridge::eval::eval_retrieval_text;
use nfbridge::mapper::{train_clip2nerf, MapperConfig};

fn main() -> nfbridge::Result<()> {
    let dataset = generate_synthetic(&SynthSpec {
        num_classes: 5,
        objects_per_class: 20,
        views_per_object: 8,
        noise_sigma: 0.2,
        seed: 23,
    })?;

    println!("training        | recall@1 | recall@5 | recall@10");
    println!("----------------+----------+----------+----------");
    for multimodal in [false, true] {
        let mut config = MapperConfig::clip2nerf(23);
        config.epochs = 15;
        config.max_lr = 2e-3;
        config.batch_size = 32;
        config.multimodal = multimodal;

        let outcome = train_clip2nerf(&dataset, &config)?;
        let report = eval_retrieval_text(&dataset, &outcome.checkpoint)?;
        println!(
            "{:<15} | {:>8.3} | {:>8.3} | {:>9.3}",
            report.method,
            report.metrics["recall@1"],
            report.metrics["recall@5"],
            report.metrics["recall@10"],
        );
    }
    Ok(())
}
