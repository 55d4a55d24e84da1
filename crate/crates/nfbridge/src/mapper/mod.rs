//! Training and inference for the two feature-mapping networks.
//!
//! `clip2nerf` (512→768→1024) learns to map a view or caption embedding to
//! the object's NeRF embedding; every selected view contributes one training
//! pair. `nerf2clip` (1024→768→512) maps a NeRF embedding to the mean of the
//! object's selected view embeddings, one pair per object, with the view
//! selection frozen for the whole run so the target never drifts. Both train
//! with the cosine distance loss, AdamW, and a per-step one-cycle schedule.
//!
//! Everything is driven by the config seed: weight init, epoch shuffling,
//! and view selection use independent derived streams, so a (dataset,
//! config) pair fully determines the checkpoint bytes.

mod checkpoint;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, CKPT_MAGIC, CKPT_VERSION,
};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{select_views, Dataset, ObjectRecord, Split, ViewSource};
use crate::error::{Error, Result};
use crate::optim::{adamw_step, init_adamw, one_cycle_lr, OneCycleSchedule};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::tensor::{
    cosine_loss_and_grad, mean_rows, mlp_backward, mlp_forward, Matrix, MlpParams, Vector,
};

/// Mapping direction; fixes the layer chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapperDirection {
    #[serde(rename = "clip2nerf")]
    Clip2Nerf,
    #[serde(rename = "nerf2clip")]
    Nerf2Clip,
}

impl MapperDirection {
    pub fn layer_dims(&self, clip_dim: usize, nerf_dim: usize, hidden_dim: usize) -> Vec<usize> {
        match self {
            MapperDirection::Clip2Nerf => vec![clip_dim, hidden_dim, nerf_dim],
            MapperDirection::Nerf2Clip => vec![nerf_dim, hidden_dim, clip_dim],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MapperDirection::Clip2Nerf => "clip2nerf",
            MapperDirection::Nerf2Clip => "nerf2clip",
        }
    }
}

/// Full training configuration. [`MapperConfig::clip2nerf`] and
/// [`MapperConfig::nerf2clip`] carry the reference defaults (150 epochs at
/// max_lr 1e-5, 100 epochs at max_lr 1e-3; weight decay 1e-2, batch 64).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperConfig {
    pub direction: MapperDirection,
    /// Views per object entering training; `None` uses every view matching
    /// `view_sources`.
    pub n_views: Option<usize>,
    pub view_sources: Vec<ViewSource>,
    /// Mix caption embeddings into the clip2nerf sample pool.
    pub multimodal: bool,
    /// How many times the caption enters the pool per object per epoch.
    pub caption_repeat: usize,
    /// Augmented training views: (synthetic count, generated count) per
    /// object, overriding `n_views`/`view_sources`. clip2nerf only.
    #[serde(default)]
    pub syn2real: Option<(usize, usize)>,
    pub epochs: usize,
    pub max_lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub hidden_dim: usize,
    pub pct_start: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl MapperConfig {
    fn base(direction: MapperDirection, epochs: usize, max_lr: f64, seed: u64) -> Self {
        MapperConfig {
            direction,
            n_views: None,
            view_sources: vec![ViewSource::GroundTruth],
            multimodal: false,
            caption_repeat: 1,
            syn2real: None,
            epochs,
            max_lr,
            weight_decay: 1e-2,
            batch_size: 64,
            hidden_dim: 768,
            pct_start: 0.3,
            div_factor: 25.0,
            final_div_factor: 1e4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed,
        }
    }

    pub fn clip2nerf(seed: u64) -> Self {
        Self::base(MapperDirection::Clip2Nerf, 150, 1e-5, seed)
    }

    pub fn nerf2clip(seed: u64) -> Self {
        Self::base(MapperDirection::Nerf2Clip, 100, 1e-3, seed)
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::ConfigMismatch("batch_size must be positive".into()));
        }
        if self.view_sources.is_empty() {
            return Err(Error::ConfigMismatch(
                "view_sources must not be empty".into(),
            ));
        }
        if self.n_views == Some(0) {
            return Err(Error::ConfigMismatch("n_views must be at least 1".into()));
        }
        if self.multimodal && self.direction == MapperDirection::Nerf2Clip {
            return Err(Error::ConfigMismatch(
                "multimodal training applies to clip2nerf only".into(),
            ));
        }
        if self.multimodal && self.caption_repeat == 0 {
            return Err(Error::ConfigMismatch(
                "caption_repeat must be at least 1 when multimodal".into(),
            ));
        }
        match self.syn2real {
            Some(_) if self.direction == MapperDirection::Nerf2Clip => {
                return Err(Error::ConfigMismatch(
                    "syn2real composition applies to clip2nerf only".into(),
                ));
            }
            Some((0, 0)) => {
                return Err(Error::ConfigMismatch(
                    "syn2real composition needs at least one view".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Kaiming-uniform initialization (entries in ±√(6/fan_in), biases zero) for
/// the direction's reference layer chain.
pub fn init_params(direction: MapperDirection, seed: u64) -> MlpParams {
    init_params_with_dims(&direction.layer_dims(512, 1024, 768), seed)
        .expect("reference dims are valid")
}

/// Kaiming-uniform initialization for an explicit layer chain.
pub fn init_params_with_dims(layer_dims: &[usize], seed: u64) -> Result<MlpParams> {
    let mut params = MlpParams::zeros(layer_dims)?;
    let mut rng = rng_from_seed(derive_seed(seed, stream::INIT));
    for (k, &fan_in) in layer_dims[..layer_dims.len() - 1].iter().enumerate() {
        let bound = (6.0 / fan_in as f64).sqrt();
        for w in params.weight_mut(k).as_mut_slice() {
            *w = rng.gen_range(-bound..bound) as f32;
        }
    }
    Ok(params)
}

/// Single forward pass through a checkpoint's best parameters.
pub fn infer(checkpoint: &Checkpoint, input: &Vector) -> Result<Vector> {
    let params = &checkpoint.params;
    if input.dim() != params.input_dim() {
        return Err(Error::dim("infer input", params.input_dim(), input.dim()));
    }
    let batch = Matrix::from_rows(&[input])?;
    let (out, _) = mlp_forward(params, &batch)?;
    Ok(out.row_vector(0))
}

/// Per-epoch losses and step counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub steps: usize,
    pub samples: usize,
}

/// Training result: the checkpoint plus the loss trace.
#[derive(Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub trace: Vec<EpochStats>,
}

/// Train a clip2nerf mapper. Every selected view of every training object
/// becomes one (view, NeRF-embedding) pair; with `multimodal`, the caption
/// embedding joins the pool `caption_repeat` times per object.
pub fn train_clip2nerf(dataset: &Dataset, config: &MapperConfig) -> Result<TrainOutcome> {
    if config.direction != MapperDirection::Clip2Nerf {
        return Err(Error::ConfigMismatch(
            "train_clip2nerf requires direction clip2nerf".into(),
        ));
    }
    train(dataset, config)
}

/// Train a nerf2clip mapper: one (NeRF-embedding, mean-of-views) pair per
/// object, the view selection frozen for the whole run.
pub fn train_nerf2clip(dataset: &Dataset, config: &MapperConfig) -> Result<TrainOutcome> {
    if config.direction != MapperDirection::Nerf2Clip {
        return Err(Error::ConfigMismatch(
            "train_nerf2clip requires direction nerf2clip".into(),
        ));
    }
    train(dataset, config)
}

/// Owned targets plus index pairs into (inputs, targets).
struct SamplePool<'a> {
    inputs: Vec<&'a Vector>,
    targets: Vec<TargetVec<'a>>,
    /// (input index, target index) per sample.
    pairs: Vec<(usize, usize)>,
}

enum TargetVec<'a> {
    Borrowed(&'a Vector),
    Owned(Vector),
}

impl TargetVec<'_> {
    fn get(&self) -> &Vector {
        match self {
            TargetVec::Borrowed(v) => v,
            TargetVec::Owned(v) => v,
        }
    }
}

fn selected_indices(rec: &ObjectRecord, config: &MapperConfig) -> Result<Vec<usize>> {
    if let Some((n_syn, n_gen)) = config.syn2real {
        let mut indices =
            select_views(rec, n_syn, &crate::dataset::SYNTHETIC_SOURCES, config.seed)?;
        if n_gen > 0 {
            indices.extend(select_views(
                rec,
                n_gen,
                &[ViewSource::Generated],
                config.seed,
            )?);
            indices.sort_unstable();
        }
        return Ok(indices);
    }
    let available = rec.matching_views(&config.view_sources).len();
    let n = match config.n_views {
        Some(n) => n,
        None => available.max(1), // errors inside select_views when 0 available
    };
    select_views(rec, n, &config.view_sources, config.seed)
}

fn build_pool<'a>(records: &[&'a ObjectRecord], config: &MapperConfig) -> Result<SamplePool<'a>> {
    let mut pool = SamplePool {
        inputs: Vec::new(),
        targets: Vec::new(),
        pairs: Vec::new(),
    };
    for rec in records {
        let indices = selected_indices(rec, config)?;
        match config.direction {
            MapperDirection::Clip2Nerf => {
                let t = pool.targets.len();
                pool.targets.push(TargetVec::Borrowed(&rec.nerf_embedding));
                for &vi in &indices {
                    let i = pool.inputs.len();
                    pool.inputs.push(&rec.view_embeddings[vi].0);
                    pool.pairs.push((i, t));
                }
                if config.multimodal {
                    let caption = rec
                        .caption_embedding
                        .as_ref()
                        .ok_or_else(|| Error::MissingCaption { id: rec.id.clone() })?;
                    let i = pool.inputs.len();
                    pool.inputs.push(caption);
                    for _ in 0..config.caption_repeat {
                        pool.pairs.push((i, t));
                    }
                }
            }
            MapperDirection::Nerf2Clip => {
                let views: Vec<&Vector> = indices
                    .iter()
                    .map(|&vi| &rec.view_embeddings[vi].0)
                    .collect();
                let mean = mean_rows(&Matrix::from_rows(&views)?)?;
                let t = pool.targets.len();
                pool.targets.push(TargetVec::Owned(mean));
                let i = pool.inputs.len();
                pool.inputs.push(&rec.nerf_embedding);
                pool.pairs.push((i, t));
            }
        }
    }
    Ok(pool)
}

/// Mean cosine-distance loss of `params` over a pool, batched.
fn pool_loss(params: &MlpParams, pool: &SamplePool<'_>, batch_size: usize) -> Result<f64> {
    let mut total = 0.0f64;
    for chunk in pool.pairs.chunks(batch_size) {
        let rows: Vec<&Vector> = chunk.iter().map(|&(i, _)| pool.inputs[i]).collect();
        let (out, _) = mlp_forward(params, &Matrix::from_rows(&rows)?)?;
        for (r, &(_, t)) in chunk.iter().enumerate() {
            let (loss, _) = cosine_loss_and_grad(&out.row_vector(r), pool.targets[t].get())?;
            total += loss as f64;
        }
    }
    Ok(total / pool.pairs.len() as f64)
}

/// Fingerprint of the effective training set: the dataset digest combined
/// with the frozen per-record view selection, so runs differing only in
/// `n_views` or sources are distinguishable from their checkpoints.
fn effective_fingerprint(
    dataset: &Dataset,
    train_records: &[&ObjectRecord],
    config: &MapperConfig,
) -> Result<u64> {
    let crc = crc::Crc::<u64>::new(&crc::CRC_64_XZ);
    let mut digest = crc.digest();
    digest.update(&dataset.fingerprint().to_le_bytes());
    for rec in train_records {
        digest.update(rec.id.as_bytes());
        digest.update(&[0]);
        for &i in &selected_indices(rec, config)? {
            digest.update(&(i as u32).to_le_bytes());
        }
        digest.update(&[0xFF]);
    }
    Ok(digest.finalize())
}

fn train(dataset: &Dataset, config: &MapperConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let train_records = dataset.split_records(Split::Train);
    if train_records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let layer_dims =
        config
            .direction
            .layer_dims(dataset.clip_dim(), dataset.nerf_dim(), config.hidden_dim);
    let mut params = init_params_with_dims(&layer_dims, config.seed)?;

    let pool = build_pool(&train_records, config)?;
    let val_records = dataset.split_records(Split::Val);
    let val_pool = if val_records.is_empty() {
        None
    } else {
        Some(build_pool(&val_records, config)?)
    };

    let n_samples = pool.pairs.len();
    let steps_per_epoch = n_samples.div_ceil(config.batch_size);
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, MlpParams)> = None;

    if config.epochs > 0 {
        let total_steps = config.epochs * steps_per_epoch;
        let schedule = OneCycleSchedule::new(
            config.max_lr,
            total_steps,
            config.pct_start,
            config.div_factor,
            config.final_div_factor,
        )?;
        let mut opt = init_adamw(&params, config.beta1, config.beta2, config.eps);
        let mut shuffle_rng = rng_from_seed(derive_seed(config.seed, stream::SHUFFLE));
        let mut order: Vec<usize> = (0..n_samples).collect();
        let mut step = 0usize;

        for epoch in 0..config.epochs {
            order.shuffle(&mut shuffle_rng);
            let mut epoch_loss = 0.0f64;
            let mut epoch_steps = 0usize;
            for chunk in order.chunks(config.batch_size) {
                let rows: Vec<&Vector> = chunk
                    .iter()
                    .map(|&s| pool.inputs[pool.pairs[s].0])
                    .collect();
                let input = Matrix::from_rows(&rows)?;
                let (out, cache) = mlp_forward(&params, &input)?;
                let mut out_grad = Matrix::zeros(chunk.len(), out.cols());
                let inv_b = 1.0 / chunk.len() as f64;
                for (r, &s) in chunk.iter().enumerate() {
                    let target = pool.targets[pool.pairs[s].1].get();
                    let (loss, grad) = cosine_loss_and_grad(&out.row_vector(r), target)?;
                    epoch_loss += loss as f64;
                    for (dst, &g) in out_grad.row_mut(r).iter_mut().zip(grad.as_slice()) {
                        *dst = (g as f64 * inv_b) as f32;
                    }
                }
                let grads = mlp_backward(&params, &cache, &out_grad)?;
                let lr = one_cycle_lr(&schedule, step)?;
                adamw_step(&mut params, &grads, &mut opt, lr, config.weight_decay)?;
                step += 1;
                epoch_steps += 1;
            }
            let train_loss = epoch_loss / n_samples as f64;
            let val_loss = match &val_pool {
                Some(vp) => Some(pool_loss(&params, vp, config.batch_size)?),
                None => None,
            };
            if let Some(vl) = val_loss {
                if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                    best = Some((vl, epoch, params.clone()));
                }
            }
            trace.push(EpochStats {
                epoch,
                train_loss,
                val_loss,
                steps: epoch_steps,
                samples: n_samples,
            });
        }
    }

    let (best_val_loss, best_epoch, best_params) = match best {
        Some((loss, epoch, p)) => (Some(loss), Some(epoch), p),
        None => (None, None, params.clone()),
    };
    let meta = CheckpointMeta {
        layer_dims,
        param_count: params.param_count(),
        epochs_run: config.epochs,
        best_epoch,
        best_val_loss,
        final_train_loss: trace.last().map(|e| e.train_loss),
        final_val_loss: trace.last().and_then(|e| e.val_loss),
        dataset_fingerprint: format!(
            "{:016x}",
            effective_fingerprint(dataset, &train_records, config)?
        ),
    };
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            config: config.clone(),
            params: best_params,
            final_params: params,
            meta,
        },
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthSpec};

    fn degenerate_dataset() -> Dataset {
        // 8 views per object -> 4 ground-truth views under the source cycle
        generate_synthetic(&SynthSpec {
            num_classes: 1,
            objects_per_class: 30,
            views_per_object: 8,
            noise_sigma: 0.0,
            seed: 5,
        })
        .unwrap()
    }

    #[test]
    fn init_params_bounded_and_seeded() {
        let a = init_params(MapperDirection::Clip2Nerf, 9);
        let b = init_params(MapperDirection::Clip2Nerf, 9);
        assert_eq!(a, b);
        let c = init_params(MapperDirection::Clip2Nerf, 10);
        assert_ne!(a, c);
        assert_eq!(a.layer_dims(), &[512, 768, 1024]);
        for k in 0..a.num_layers() {
            let bound = (6.0f64 / a.layer_dims()[k] as f64).sqrt() as f32;
            assert!(a.weight(k).as_slice().iter().all(|w| w.abs() <= bound));
            assert!(a.bias(k).as_slice().iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn clip2nerf_converges_on_degenerate_data() {
        let ds = degenerate_dataset();
        let mut cfg = MapperConfig::clip2nerf(1);
        cfg.epochs = 50;
        cfg.max_lr = 1e-2;
        cfg.batch_size = 16;
        let out = train_clip2nerf(&ds, &cfg).unwrap();
        let last = out.trace.last().unwrap();
        assert!(last.train_loss < 1e-3, "loss stuck at {}", last.train_loss);

        // infer on the training input of the converged run: cosine > 0.999
        let rec = &ds.split_records(Split::Train)[0];
        let pred = infer(&out.checkpoint, &rec.view_embeddings[0].0).unwrap();
        let cos = crate::tensor::cosine_similarity(&pred, &rec.nerf_embedding).unwrap();
        assert!(cos > 0.999, "cos = {cos}");
    }

    #[test]
    fn nerf2clip_converges_on_degenerate_data() {
        let ds = degenerate_dataset();
        let mut cfg = MapperConfig::nerf2clip(2);
        cfg.epochs = 50;
        cfg.max_lr = 1e-2;
        cfg.batch_size = 8;
        cfg.n_views = Some(4);
        let out = train_nerf2clip(&ds, &cfg).unwrap();
        assert!(out.trace.last().unwrap().train_loss < 1e-3);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = degenerate_dataset();
        let mut cfg = MapperConfig::nerf2clip(3);
        cfg.epochs = 3;
        cfg.batch_size = 8;
        let a = train_nerf2clip(&ds, &cfg).unwrap();
        let b = train_nerf2clip(&ds, &cfg).unwrap();
        assert_eq!(a.checkpoint.params, b.checkpoint.params);
        assert_eq!(a.checkpoint.final_params, b.checkpoint.final_params);
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert_eq!(x.train_loss, y.train_loss);
            assert_eq!(x.val_loss, y.val_loss);
        }
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let ds = degenerate_dataset();
        let mut cfg = MapperConfig::clip2nerf(4);
        cfg.epochs = 0;
        let out = train_clip2nerf(&ds, &cfg).unwrap();
        assert!(out.trace.is_empty());
        let dims = MapperDirection::Clip2Nerf.layer_dims(512, 1024, 768);
        let fresh = init_params_with_dims(&dims, 4).unwrap();
        assert_eq!(out.checkpoint.params, fresh);
        assert_eq!(out.checkpoint.final_params, fresh);
        assert!(out.checkpoint.meta.final_train_loss.is_none());
    }

    #[test]
    fn sample_counts_per_direction() {
        let ds = degenerate_dataset(); // 24 train records, 4 GT views each
        let train_count = ds.split_records(Split::Train).len();

        let mut c2n = MapperConfig::clip2nerf(6);
        c2n.epochs = 1;
        c2n.batch_size = 8;
        let out = train_clip2nerf(&ds, &c2n).unwrap();
        // all matching views contribute: 4 pairs per object per epoch
        assert_eq!(out.trace[0].samples, train_count * 4);
        assert_eq!(out.trace[0].steps, (train_count * 4).div_ceil(8));

        let mut n2c = MapperConfig::nerf2clip(6);
        n2c.epochs = 1;
        n2c.batch_size = 8;
        n2c.n_views = Some(4);
        let out = train_nerf2clip(&ds, &n2c).unwrap();
        // exactly one pair per object per epoch
        assert_eq!(out.trace[0].samples, train_count);
        assert_eq!(out.trace[0].steps, train_count.div_ceil(8));
    }

    #[test]
    fn n_views_sweep_yields_distinct_fingerprints() {
        let ds = degenerate_dataset();
        let mut prints = std::collections::BTreeSet::new();
        for n in [1usize, 2, 4] {
            let mut cfg = MapperConfig::nerf2clip(12);
            cfg.epochs = 0;
            cfg.n_views = Some(n);
            let out = train_nerf2clip(&ds, &cfg).unwrap();
            prints.insert(out.checkpoint.meta.dataset_fingerprint.clone());
        }
        assert_eq!(prints.len(), 3, "each n_views must fingerprint differently");
    }

    #[test]
    fn syn2real_pool_counts() {
        let ds = degenerate_dataset(); // 4 GT + 2 rendered + 2 generated views
        let train_count = ds.split_records(Split::Train).len();
        let mut cfg = MapperConfig::clip2nerf(13);
        cfg.epochs = 1;
        cfg.batch_size = 8;
        cfg.syn2real = Some((5, 2));
        let out = train_clip2nerf(&ds, &cfg).unwrap();
        assert_eq!(out.trace[0].samples, train_count * 7);

        let mut bad = MapperConfig::nerf2clip(13);
        bad.syn2real = Some((5, 2));
        assert!(matches!(
            train_nerf2clip(&ds, &bad),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn direction_mismatch_rejected() {
        let ds = degenerate_dataset();
        let cfg = MapperConfig::clip2nerf(0);
        assert!(matches!(
            train_nerf2clip(&ds, &cfg),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn multimodal_requires_captions() {
        let ds = degenerate_dataset();
        let mut records = ds.records().to_vec();
        for r in records.iter_mut() {
            r.caption_embedding = None;
        }
        let stripped = Dataset::new(records, ds.anchors().clone(), 512, 1024).unwrap();
        let mut cfg = MapperConfig::clip2nerf(0);
        cfg.epochs = 1;
        cfg.multimodal = true;
        assert!(matches!(
            train_clip2nerf(&stripped, &cfg),
            Err(Error::MissingCaption { .. })
        ));
    }

    #[test]
    fn n_views_of_one_uses_single_view_target() {
        let ds = degenerate_dataset();
        let mut cfg = MapperConfig::nerf2clip(8);
        cfg.epochs = 0;
        cfg.n_views = Some(1);
        // epochs=0 still builds the pool; target equals the chosen view
        let rec = ds.split_records(Split::Train)[0];
        let idx = select_views(rec, 1, &cfg.view_sources, cfg.seed).unwrap();
        let views: Vec<&Vector> = idx.iter().map(|&i| &rec.view_embeddings[i].0).collect();
        let mean = mean_rows(&Matrix::from_rows(&views).unwrap()).unwrap();
        assert_eq!(mean.as_slice(), views[0].as_slice());
    }

    #[test]
    fn infer_is_deterministic_and_shape_checked() {
        let ds = degenerate_dataset();
        let mut cfg = MapperConfig::clip2nerf(11);
        cfg.epochs = 0;
        let out = train_clip2nerf(&ds, &cfg).unwrap();
        let x = &ds.records()[0].view_embeddings[0].0;
        let a = infer(&out.checkpoint, x).unwrap();
        let b = infer(&out.checkpoint, x).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert_eq!(a.dim(), 1024);
        assert!(matches!(
            infer(&out.checkpoint, &ds.records()[0].nerf_embedding),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
