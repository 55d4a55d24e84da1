//! Bridge NeRF weight-space embeddings and CLIP image/text embeddings.
//!
//! Two small MLPs learn a bidirectional mapping between the 1024-d latent
//! space of a frozen NeRF-weights encoder and the 512-d space of a frozen
//! vision-language encoder. On top of them this crate provides exact top-k
//! cosine retrieval over embedding galleries, zero-shot classification
//! against class-anchor text embeddings, the matching evaluation protocols,
//! and a binary dataset format plus a seeded synthetic generator so every
//! experiment runs without any external model.
//!
//! Everything is deterministic: a dataset, a config, and a seed fix the
//! resulting checkpoint byte for byte.
//!
//! ```
//! use nfbridge::dataset::{generate_synthetic, SynthSpec};
//! use nfbridge::eval::eval_zero_shot;
//! use nfbridge::gallery::label_gallery_from_anchors;
//! use nfbridge::mapper::{train_nerf2clip, MapperConfig};
//!
//! # fn main() -> nfbridge::Result<()> {
//! let dataset = generate_synthetic(&SynthSpec {
//!     num_classes: 3,
//!     objects_per_class: 10,
//!     views_per_object: 8,
//!     noise_sigma: 0.0,
//!     seed: 7,
//! })?;
//!
//! let mut config = MapperConfig::nerf2clip(7);
//! config.epochs = 8;
//! config.max_lr = 1e-2;
//! config.batch_size = 8;
//! config.n_views = Some(2);
//! let outcome = train_nerf2clip(&dataset, &config)?;
//!
//! let anchors = label_gallery_from_anchors(dataset.anchors())?;
//! let report = eval_zero_shot(&dataset, &outcome.checkpoint, &anchors)?;
//! assert_eq!(report.metrics["accuracy"], 1.0);
//! # Ok(())
//! # }
//! ```
//!
//! The `examples/` directory walks through each capability; the `nfbridge`
//! binary (crate `nfbridge-cli`) exposes the same flows as subcommands.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod gallery;
pub mod mapper;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
