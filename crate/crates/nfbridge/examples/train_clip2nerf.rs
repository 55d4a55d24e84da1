//! Train a clip2nerf mapper (512 → 768 → 1024) on synthetic data and save
//! the checkpoint.
//!
//! Desk-scale settings: the learning rate is raised from the reference 1e-5
//! so the run converges in seconds on a few hundred samples.
//!
//! ```bash
//! cargo run --release --example train_clip2nerf
//! ```

use nfbridge::dataset::{generate_synthetic, SynthSpec};
use nfbridge::mapper::{load_checkpoint, save_checkpoint, train_clip2nerf, MapperConfig};

fn main() -> nfbridge::Result<()> {
    let dataset = generate_synthetic(&SynthSpec {
        num_classes: 4,
        objects_per_class: 15,
        views_per_object: 8,
        noise_sigma: 0.02,
        seed: 7,
    })?;

    let mut config = MapperConfig::clip2nerf(7);
    config.epochs = 20;
    config.max_lr = 5e-3;
    config.batch_size = 32;

    let outcome = train_clip2nerf(&dataset, &config)?;
    for e in outcome.trace.iter().step_by(4) {
        println!(
            "epoch {:>3}  train {:.5}  val {:.5}",
            e.epoch,
            e.train_loss,
            e.val_loss.unwrap_or(f64::NAN),
        );
    }
    let meta = &outcome.checkpoint.meta;
    println!(
        "best val loss {:.5} at epoch {}",
        meta.best_val_loss.unwrap(),
        meta.best_epoch.unwrap(),
    );

    let path = std::env::temp_dir().join("nfbridge_clip2nerf.ckpt");
    save_checkpoint(&outcome.checkpoint, &path)?;
    let reloaded = load_checkpoint(&path)?;
    assert_eq!(reloaded, outcome.checkpoint);
    println!("checkpoint saved to {}", path.display());
    Ok(())
}
