//! Sweep the number of views averaged into the nerf2clip training target
//! and report zero-shot accuracy per setting, ablation-table style.
//!
//! ```bash
//! cargo run --release --example train_nerf2clip_ablation
//! ```

use nfbridge::dataset::{generate_synthetic, SynthSpec};
use nfbridge::eval::eval_zero_shot;
use nfbridge::gallery::label_gallery_from_anchors;
use nfbridge::mapper::{train_nerf2clip, MapperConfig};

fn main() -> nfbridge::Result<()> {
    let dataset = generate_synthetic(&SynthSpec {
        num_classes: 5,
        objects_per_class: 20,
        views_per_object: 8,
        noise_sigma: 0.15,
        seed: 3,
    })?;
    let anchors = label_gallery_from_anchors(dataset.anchors())?;

    println!("views | accuracy | fingerprint");
    println!("------+----------+-----------------");
    for n_views in [1usize, 2, 4] {
        let mut config = MapperConfig::nerf2clip(3);
        config.epochs = 15;
        config.batch_size = 16;
        config.n_views = Some(n_views);

        let outcome = train_nerf2clip(&dataset, &config)?;
        let report = eval_zero_shot(&dataset, &outcome.checkpoint, &anchors)?;
        println!(
            "{n_views:>5} | {:>8.3} | {}",
            report.metrics["accuracy"], outcome.checkpoint.meta.dataset_fingerprint,
        );
    }
    println!("(4 ground-truth views per object are available at 8 views per record)");
    Ok(())
}
