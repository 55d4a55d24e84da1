//! Zero-shot classification of NeRF embeddings: map each test embedding
//! through nerf2clip and take the nearest class anchor. Compared against
//! the view-averaging baseline at several view counts.
//!
//! ```bash
//! cargo run --release --example zero_shot_classification
//! ```

use nfbridge::dataset::{generate_synthetic, SynthSpec};
use nfbridge::eval::{eval_clip_baseline_zero_shot, eval_zero_shot};
use nfbridge::gallery::label_gallery_from_anchors;
use nfbridge::mapper::{train_nerf2clip, MapperConfig};

fn main() -> nfbridge::Result<()> {
    let dataset = generate_synthetic(&SynthSpec {
        num_classes: 6,
        objects_per_class: 24,
        views_per_object: 8,
        noise_sigma: 0.1,
        seed: 11,
    })?;
    let anchors = label_gallery_from_anchors(dataset.anchors())?;

    let mut config = MapperConfig::nerf2clip(11);
    config.epochs = 30;
    config.max_lr = 5e-3;
    config.batch_size = 16;
    config.n_views = Some(4);
    let outcome = train_nerf2clip(&dataset, &config)?;

    println!("method          | views | accuracy | time/query (ms)");
    println!("----------------+-------+----------+----------------");
    for n in [1usize, 2] {
        let b = eval_clip_baseline_zero_shot(&dataset, &anchors, n, 11)?;
        println!(
            "{:<15} | {n:>5} | {:>8.3} | {:>14.3}",
            b.method,
            b.metrics["accuracy"],
            b.timing_ms.total_ms(),
        );
    }
    let report = eval_zero_shot(&dataset, &outcome.checkpoint, &anchors)?;
    println!(
        "{:<15} | {:>5} | {:>8.3} | {:>14.3}",
        report.method,
        "-",
        report.metrics["accuracy"],
        report.timing_ms.total_ms(),
    );
    println!("(the mapper queries straight from the NeRF embedding: no views needed)");
    Ok(())
}
