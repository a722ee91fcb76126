//! Alternating optimisation of the discriminators and the generator side
//! (encoders, decoder, feature transformers) for every ablation variant.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Adam, AdamConfig, Array2, Graph, Trainable, Var};
use crate::data::SplitBundle;
use crate::error::{Error, Result};
use crate::eval::{evaluate, pseudo_label_precision, MetricsReport};
use crate::losses::{
    caption_ce, caption_nll, cycle_losses, gan_discriminator_loss, gan_generator_loss, mean_step_logprob,
    triplet_loss, weighted_unpaired_ce, Latents, LossReport, LossWeights, PseudoTerms,
};
use crate::model::{Mlp, Model, ModelConfig};
use crate::params::{ParamId, UpdateSet};
use crate::pseudo::{
    assign_pseudo_captions, assign_pseudo_images, caption_pool, image_pool, sample_pool, Assignment,
    AssignmentRecord,
};
use crate::tokens::TokenSeq;

/// Rows of the ablation ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "paired-only")]
    PairedOnly,
    #[serde(rename = "cyclegan")]
    CycleGan,
    #[serde(rename = "ver1")]
    Ver1,
    #[serde(rename = "ver2")]
    Ver2,
    #[serde(rename = "final")]
    Final,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::PairedOnly,
        Variant::CycleGan,
        Variant::Ver1,
        Variant::Ver2,
        Variant::Final,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::PairedOnly => "paired-only",
            Variant::CycleGan => "cyclegan",
            Variant::Ver1 => "ver1",
            Variant::Ver2 => "ver2",
            Variant::Final => "final",
        }
    }

    /// Pair discriminator and feature-transformer game.
    pub fn uses_pair_gan(self) -> bool {
        matches!(self, Variant::Ver1 | Variant::Ver2 | Variant::Final)
    }

    pub fn uses_cycle(self) -> bool {
        self == Variant::CycleGan
    }

    pub fn uses_pseudo_labels(self) -> bool {
        matches!(self, Variant::Ver2 | Variant::Final)
    }

    /// Confidence re-weighting of pseudo-labelled samples.
    pub fn uses_confidence(self) -> bool {
        self == Variant::Final
    }

    pub fn uses_triplet(self) -> bool {
        self.uses_pair_gan()
    }

    /// Loss components this variant optimises.
    pub fn components(self) -> Vec<&'static str> {
        let mut c = vec!["cap_paired"];
        if self.uses_pair_gan() {
            c.extend(["gan_d", "gan_g", "reg", "triplet"]);
        }
        if self.uses_cycle() {
            c.extend(["gan_d", "gan_g", "cycle"]);
        }
        if self.uses_pseudo_labels() {
            c.extend(["cap_pseudo_x", "cap_pseudo_y"]);
        }
        if self.uses_confidence() {
            c.push("confidence");
        }
        c
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant {s:?} (expected paired-only, cyclegan, ver1, ver2 or final)"
                ))
            })
    }
}

/// Network sizes not implied by the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDims {
    pub latent_dim: usize,
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub transformer_layers: usize,
    pub disc_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        let c = ModelConfig::new(1, 2);
        Self {
            latent_dim: c.latent_dim,
            embed_dim: c.embed_dim,
            lstm_hidden: c.lstm_hidden,
            transformer_layers: c.transformer_layers,
            disc_hidden: c.disc_hidden,
        }
    }
}

impl ModelDims {
    pub fn config_for(&self, bundle: &SplitBundle) -> ModelConfig {
        ModelConfig {
            image_dim: bundle.image_dim,
            latent_dim: self.latent_dim,
            vocab_size: bundle.vocab_size,
            embed_dim: self.embed_dim,
            lstm_hidden: self.lstm_hidden,
            transformer_layers: self.transformer_layers,
            disc_hidden: self.disc_hidden,
            max_seq_len: bundle.max_caption_len().max(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    pub batch_size: usize,
    pub iterations: usize,
    pub warmup_iters: usize,
    pub pool_fraction: f64,
    pub seed: u64,
    pub weights: LossWeights,
    pub adam: AdamConfig,
    /// Evaluate on the test split every this many iterations (0 = only at the end).
    pub eval_every: usize,
    pub beam: usize,
    pub model: ModelDims,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Final,
            batch_size: 32,
            iterations: 3000,
            warmup_iters: 200,
            pool_fraction: 0.01,
            seed: 0,
            weights: LossWeights::default(),
            adam: AdamConfig::default(),
            eval_every: 500,
            beam: 3,
            model: ModelDims::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.iterations > 0 && self.warmup_iters >= self.iterations {
            return Err(Error::Config(format!(
                "warmup_iters ({}) must be below iterations ({})",
                self.warmup_iters, self.iterations
            )));
        }
        if !(self.pool_fraction > 0.0 && self.pool_fraction <= 1.0) {
            return Err(Error::Config("pool_fraction must be in (0, 1]".into()));
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && (0.0..1.0).contains(&a.b1) && (0.0..1.0).contains(&a.b2) && a.eps > 0.0) {
            return Err(Error::Config(
                "Adam needs lr > 0, b1 and b2 in [0, 1), eps > 0".into(),
            ));
        }
        if self.beam == 0 {
            return Err(Error::Config("beam must be at least 1".into()));
        }
        self.weights.validate()
    }
}

/// Positions into the paired set and the two unpaired pools.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batches {
    pub paired: Vec<usize>,
    pub images: Vec<usize>,
    pub captions: Vec<usize>,
    /// Triplet negatives, one image and one caption per paired sample.
    pub neg_images: Vec<usize>,
    pub neg_captions: Vec<usize>,
}

fn draw(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    index::sample(rng, n, k.min(n)).into_vec()
}

fn draw_with_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    use rand::Rng;
    if n == 0 {
        return Vec::new();
    }
    (0..k).map(|_| rng.random_range(0..n)).collect()
}

/// Model, both optimisers and the three independent random streams.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub model: Model,
    pub gen_adam: Adam,
    pub disc_adam: Adam,
    pub iteration: usize,
    data_rng: ChaCha8Rng,
    pool_rng: ChaCha8Rng,
    neg_rng: ChaCha8Rng,
    pair_disc_ids: Vec<ParamId>,
    domain_disc_ids: Vec<ParamId>,
}

fn mlp_ids(mlp: &Mlp) -> Vec<ParamId> {
    mlp.layers.iter().flat_map(|l| [l.w, l.b]).collect()
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Pseudo-labels drawn for one iteration's unpaired batches.
#[derive(Clone, Debug, Default)]
pub struct PseudoBatch {
    /// For each unpaired image in the batch, its retrieved caption.
    pub captions: Vec<Assignment>,
    /// For each unpaired caption in the batch, its retrieved image.
    pub images: Vec<Assignment>,
}

impl TrainState {
    pub fn new(config: &TrainConfig, model: Model) -> Self {
        let pair_disc_ids = mlp_ids(&model.disc.mlp);
        let mut domain_disc_ids = mlp_ids(&model.image_domain_disc.mlp);
        domain_disc_ids.extend(mlp_ids(&model.caption_domain_disc.mlp));
        Self {
            model,
            gen_adam: Adam::new(config.adam),
            disc_adam: Adam::new(config.adam),
            iteration: 0,
            data_rng: stream(config.seed, 1),
            pool_rng: stream(config.seed, 2),
            neg_rng: stream(config.seed, 3),
            pair_disc_ids,
            domain_disc_ids,
        }
    }

    pub fn sample_batches(&mut self, config: &TrainConfig, bundle: &SplitBundle) -> Batches {
        let b = config.batch_size;
        let paired = draw(&mut self.data_rng, bundle.paired.len(), b);
        let (images, captions) = if config.variant == Variant::PairedOnly {
            (Vec::new(), Vec::new())
        } else {
            (
                draw(&mut self.data_rng, bundle.unpaired_images.len(), b),
                draw(&mut self.data_rng, bundle.unpaired_captions.len(), b),
            )
        };
        let (neg_images, neg_captions) = if config.variant.uses_triplet() {
            (
                draw_with_replacement(&mut self.neg_rng, bundle.unpaired_images.len(), paired.len()),
                draw_with_replacement(&mut self.neg_rng, bundle.unpaired_captions.len(), paired.len()),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        Batches {
            paired,
            images,
            captions,
            neg_images,
            neg_captions,
        }
    }

    fn numeric(&self, component: &str, e: Error) -> Error {
        if e.is_numeric() {
            Error::NonFiniteLoss {
                iteration: self.iteration,
                component: format!("{component} ({e})"),
            }
        } else {
            e
        }
    }

    fn check(&self, component: &str, v: f64) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteLoss {
                iteration: self.iteration,
                component: component.to_string(),
            })
        }
    }

    fn latents(&self, g: &mut Graph, bundle: &SplitBundle, b: &Batches) -> Result<Latents> {
        let m = &self.model;
        let xp: Vec<&[f64]> = b.paired.iter().map(|&i| bundle.paired[i].image.as_slice()).collect();
        let yp: Vec<&TokenSeq> = b.paired.iter().map(|&i| &bundle.paired[i].caption).collect();
        let xu: Vec<&[f64]> = b
            .images
            .iter()
            .map(|&i| bundle.unpaired_images[i].image.as_slice())
            .collect();
        let yu: Vec<&TokenSeq> = b
            .captions
            .iter()
            .map(|&i| &bundle.unpaired_captions[i].caption)
            .collect();
        Ok(Latents {
            paired_x: encode_images(g, m, &xp)?,
            paired_y: m.caption_encoder.forward(g, &m.store, &yp)?,
            unpaired_x: encode_images(g, m, &xu)?,
            unpaired_y: m.caption_encoder.forward(g, &m.store, &yu)?,
        })
    }

    fn apply(&mut self, which: UpdateSet, g: &Graph, loss: Var, ids: Option<&[ParamId]>) -> Result<()> {
        let grads = g.backward(loss)?;
        let ids: Vec<ParamId> = match ids {
            Some(ids) => ids.to_vec(),
            None => self
                .model
                .store
                .ids_in(which)
                .into_iter()
                .filter(|&id| grads.contains(id))
                .collect(),
        };
        let adam = match which {
            UpdateSet::Generator => &mut self.gen_adam,
            UpdateSet::Discriminator => &mut self.disc_adam,
        };
        adam.update(&mut self.model.store, &ids, &grads)?;
        Ok(())
    }

    /// Sub-step 1: one ascent step of the pair (or domain) discriminators.
    /// Returns the discriminator loss.
    pub fn discriminator_step(&mut self, config: &TrainConfig, bundle: &SplitBundle, b: &Batches) -> Result<f64> {
        let v = config.variant;
        if !(v.uses_pair_gan() || v.uses_cycle()) {
            return Ok(0.0);
        }
        let mut g = Graph::with_trainable(Trainable::Only(UpdateSet::Discriminator));
        let z = self.latents(&mut g, bundle, b).map_err(|e| self.numeric("gan_d", e))?;
        let (loss, ids) = if v.uses_pair_gan() {
            let l = gan_discriminator_loss(&mut g, &self.model, &z);
            (l, self.pair_disc_ids.clone())
        } else {
            let l = cycle_losses(&mut g, &self.model, z.unpaired_x, z.unpaired_y).map(|c| c.disc);
            (l, self.domain_disc_ids.clone())
        };
        let loss = loss.map_err(|e| self.numeric("gan_d", e))?;
        let value = self.check("gan_d", g.item(loss))?;
        self.apply(UpdateSet::Discriminator, &g, loss, Some(&ids))
            .map_err(|e| self.numeric("gan_d", e))?;
        Ok(value)
    }

    /// Sub-step 2: generator update on the adversarial terms (plus the latent
    /// regression, or the cycle reconstruction for the baseline). Returns
    /// `(gan_g, reg, cycle)`.
    pub fn generator_step(
        &mut self,
        config: &TrainConfig,
        bundle: &SplitBundle,
        b: &Batches,
    ) -> Result<(f64, f64, f64)> {
        let v = config.variant;
        if !(v.uses_pair_gan() || v.uses_cycle()) {
            return Ok((0.0, 0.0, 0.0));
        }
        let w = &config.weights;
        let mut g = Graph::with_trainable(Trainable::Only(UpdateSet::Generator));
        let z = self.latents(&mut g, bundle, b).map_err(|e| self.numeric("gan_g", e))?;
        let (objective, parts) = if v.uses_pair_gan() {
            let l = gan_generator_loss(&mut g, &self.model, &z, w).map_err(|e| self.numeric("gan_g", e))?;
            (l.total, (g.item(l.adversarial), g.item(l.reg), 0.0))
        } else {
            let c = cycle_losses(&mut g, &self.model, z.unpaired_x, z.unpaired_y)
                .map_err(|e| self.numeric("cycle", e))?;
            (c.gen, (g.item(c.adversarial), 0.0, g.item(c.cycle)))
        };
        self.check("gan_g", parts.0)?;
        self.check("reg", parts.1)?;
        self.check("cycle", parts.2)?;
        let scaled = g.scale(objective, w.w_gan)?;
        self.apply(UpdateSet::Generator, &g, scaled, None)
            .map_err(|e| self.numeric("gan_g", e))?;
        Ok(parts)
    }

    /// Sub-step 3: pseudo-labels for the unpaired batches from freshly
    /// sampled candidate pools.
    pub fn assign_step(&mut self, config: &TrainConfig, bundle: &SplitBundle, b: &Batches) -> Result<PseudoBatch> {
        if !config.variant.uses_pseudo_labels() || self.iteration < config.warmup_iters {
            return Ok(PseudoBatch::default());
        }
        let m = &self.model;
        let cap_idx = sample_pool(bundle.unpaired_captions.len(), config.pool_fraction, &mut self.pool_rng)?;
        let img_idx = sample_pool(bundle.unpaired_images.len(), config.pool_fraction, &mut self.pool_rng)?;
        let cpool = caption_pool(m, &bundle.unpaired_captions, cap_idx)?;
        let ipool = image_pool(m, &bundle.unpaired_images, img_idx)?;

        let xu: Vec<&[f64]> = b
            .images
            .iter()
            .map(|&i| bundle.unpaired_images[i].image.as_slice())
            .collect();
        let x_ids: Vec<usize> = b.images.iter().map(|&i| bundle.unpaired_images[i].id).collect();
        let yu: Vec<&TokenSeq> = b
            .captions
            .iter()
            .map(|&i| &bundle.unpaired_captions[i].caption)
            .collect();
        let y_ids: Vec<usize> = b.captions.iter().map(|&i| bundle.unpaired_captions[i].id).collect();
        let zx = m.encode_images(&Array2::from_rows(&xu)?)?;
        let zy = m.encode_captions(&yu)?;
        Ok(PseudoBatch {
            captions: assign_pseudo_captions(m, &zx, &x_ids, &cpool)?,
            images: assign_pseudo_images(m, &zy, &y_ids, &ipool)?,
        })
    }

    /// Sub-step 4: captioner update on paired CE, the pseudo-label terms and
    /// the triplet loss. Returns `(cap_paired, cap_pseudo_x, cap_pseudo_y, triplet)`.
    pub fn captioner_step(
        &mut self,
        config: &TrainConfig,
        bundle: &SplitBundle,
        b: &Batches,
        pseudo: &PseudoBatch,
    ) -> Result<(f64, f64, f64, f64)> {
        let v = config.variant;
        let w = &config.weights;
        let m = &self.model;
        let mut g = Graph::with_trainable(Trainable::Only(UpdateSet::Generator));

        let xp: Vec<&[f64]> = b.paired.iter().map(|&i| bundle.paired[i].image.as_slice()).collect();
        let yp: Vec<&TokenSeq> = b.paired.iter().map(|&i| &bundle.paired[i].caption).collect();
        let zp = encode_images(&mut g, m, &xp)?;
        let tf = m.decoder.teacher_forced(&mut g, &m.store, zp, &yp)?;
        let cap = caption_ce(&mut g, &tf)?;
        let mut objective = cap;

        let mut px = 0.0;
        let mut py = 0.0;
        if !pseudo.captions.is_empty() || !pseudo.images.is_empty() {
            let mut x_terms = None;
            let mut y_terms = None;
            let ax: Vec<f64> = pseudo.captions.iter().map(|a| a.pair.alpha).collect();
            let ay: Vec<f64> = pseudo.images.iter().map(|a| a.pair.alpha).collect();
            // per-sample weight relative to the paired mean
            let per_sample = 1.0 / b.paired.len() as f64;
            if !pseudo.captions.is_empty() {
                let xu: Vec<&[f64]> = b
                    .images
                    .iter()
                    .map(|&i| bundle.unpaired_images[i].image.as_slice())
                    .collect();
                let ys: Vec<&TokenSeq> = pseudo
                    .captions
                    .iter()
                    .map(|a| &bundle.unpaired_captions[a.source_index].caption)
                    .collect();
                let zx = encode_images(&mut g, m, &xu)?;
                let tf = m.decoder.teacher_forced(&mut g, &m.store, zx, &ys)?;
                let nll = caption_nll(&mut g, &tf)?;
                x_terms = Some(g.scale(nll, per_sample)?);
            }
            if !pseudo.images.is_empty() {
                let xs: Vec<&[f64]> = pseudo
                    .images
                    .iter()
                    .map(|a| bundle.unpaired_images[a.source_index].image.as_slice())
                    .collect();
                let yu: Vec<&TokenSeq> = b
                    .captions
                    .iter()
                    .map(|&i| &bundle.unpaired_captions[i].caption)
                    .collect();
                let zx = encode_images(&mut g, m, &xs)?;
                let tf = m.decoder.teacher_forced(&mut g, &m.store, zx, &yu)?;
                let nll = caption_nll(&mut g, &tf)?;
                y_terms = Some(g.scale(nll, per_sample)?);
            }
            let xt = x_terms.map(|ce| PseudoTerms { ce, alpha: &ax });
            let yt = y_terms.map(|ce| PseudoTerms { ce, alpha: &ay });
            let wu = weighted_unpaired_ce(&mut g, xt.as_ref(), yt.as_ref(), w, v.uses_confidence())?;
            px = wu.x.map_or(0.0, |x| g.item(x));
            py = wu.y.map_or(0.0, |y| g.item(y));
            if let Some(t) = wu.total {
                objective = g.add(objective, t)?;
            }
        }

        let mut triplet = 0.0;
        if v.uses_triplet() && !b.neg_images.is_empty() && !b.neg_captions.is_empty() {
            let pos = mean_step_logprob(&mut g, &tf)?;
            let xn: Vec<&[f64]> = b
                .neg_images
                .iter()
                .map(|&i| bundle.unpaired_images[i].image.as_slice())
                .collect();
            let yn: Vec<&TokenSeq> = b
                .neg_captions
                .iter()
                .map(|&i| &bundle.unpaired_captions[i].caption)
                .collect();
            let zn = encode_images(&mut g, m, &xn)?;
            let tf_ni = m.decoder.teacher_forced(&mut g, &m.store, zn, &yp)?;
            let ni = mean_step_logprob(&mut g, &tf_ni)?;
            let tf_nc = m.decoder.teacher_forced(&mut g, &m.store, zp, &yn)?;
            let nc = mean_step_logprob(&mut g, &tf_nc)?;
            let t = triplet_loss(&mut g, pos, ni, nc, w.triplet_margin)?;
            triplet = g.item(t);
            let scaled = g.scale(t, w.w_triplet)?;
            objective = g.add(objective, scaled)?;
        }

        let cap_value = self.check("cap_paired", g.item(cap))?;
        self.check("cap_pseudo_x", px)?;
        self.check("cap_pseudo_y", py)?;
        self.check("triplet", triplet)?;
        self.apply(UpdateSet::Generator, &g, objective, None)
            .map_err(|e| self.numeric("cap", e))?;
        Ok((cap_value, px, py, triplet))
    }

    /// One full iteration; returns the loss report and the pseudo-labels drawn.
    pub fn train_step(
        &mut self,
        config: &TrainConfig,
        bundle: &SplitBundle,
        batches: &Batches,
    ) -> Result<(LossReport, Vec<AssignmentRecord>)> {
        let gan_d = self.discriminator_step(config, bundle, batches)?;
        let (gan_g, reg, cycle) = self.generator_step(config, bundle, batches)?;
        let pseudo = self
            .assign_step(config, bundle, batches)
            .map_err(|e| self.numeric("pseudo", e))?;
        let (cap_paired, cap_pseudo_x, cap_pseudo_y, triplet) = self
            .captioner_step(config, bundle, batches, &pseudo)
            .map_err(|e| self.numeric("cap", e))?;
        let report = LossReport {
            cap_paired,
            cap_pseudo_x,
            cap_pseudo_y,
            gan_d,
            gan_g,
            reg,
            triplet,
            cycle,
            total: 0.0,
        }
        .with_total(&config.weights);
        if let Some(c) = report.non_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: self.iteration,
                component: c.into(),
            });
        }
        let records = pseudo
            .captions
            .iter()
            .chain(&pseudo.images)
            .map(|a| AssignmentRecord {
                iteration: self.iteration,
                pair: a.pair.clone(),
            })
            .collect();
        self.iteration += 1;
        Ok((report, records))
    }
}

fn encode_images(g: &mut Graph, m: &Model, rows: &[&[f64]]) -> Result<Var> {
    let x = if rows.is_empty() {
        Array2::zeros(0, m.config.image_dim)
    } else {
        Array2::from_rows(rows)?
    };
    let x = g.constant(x)?;
    m.image_encoder.forward(g, &m.store, x)
}

/// One training iteration's losses, plus test metrics on evaluation steps.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub losses: LossReport,
    pub metrics: Option<MetricsReport>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<HistoryRow>,
    pub assignments: Vec<AssignmentRecord>,
}

impl TrainOutcome {
    /// Metrics of the last evaluation, if any.
    pub fn final_metrics(&self) -> Option<&MetricsReport> {
        self.history.iter().rev().find_map(|r| r.metrics.as_ref())
    }
}

/// Runs `config.iterations` steps from a freshly initialised model, evaluating
/// every `eval_every` iterations and after the last one.
pub fn train(config: &TrainConfig, bundle: &SplitBundle) -> Result<TrainOutcome> {
    train_with(config, bundle, |_| {})
}

/// [`train`] with a callback invoked after every history row.
pub fn train_with<F: FnMut(&HistoryRow)>(
    config: &TrainConfig,
    bundle: &SplitBundle,
    mut on_row: F,
) -> Result<TrainOutcome> {
    config.validate()?;
    if bundle.paired.is_empty() {
        return Err(Error::Config("the paired set is empty".into()));
    }
    let v = config.variant;
    if v != Variant::PairedOnly && (bundle.unpaired_images.is_empty() || bundle.unpaired_captions.is_empty()) {
        return Err(Error::Config(format!(
            "variant {v} needs non-empty unpaired image and caption pools"
        )));
    }
    let model = Model::new(config.model.config_for(bundle), config.seed)?;
    let mut state = TrainState::new(config, model);
    let concepts = bundle.concept_map();
    let has_concepts = concepts.values().all(Option::is_some);

    let mut history = Vec::with_capacity(config.iterations);
    let mut assignments = Vec::new();
    let mut window_start = 0;
    for it in 0..config.iterations {
        let batches = state.sample_batches(config, bundle);
        let (losses, records) = state.train_step(config, bundle, &batches)?;
        assignments.extend(records);
        let last = it + 1 == config.iterations;
        let due = config.eval_every > 0 && (it + 1) % config.eval_every == 0;
        let metrics = if (due || last) && !bundle.test.is_empty() {
            let mut r = evaluate(&state.model, &bundle.test, config.beam)?;
            if has_concepts {
                let (px, py) = pseudo_label_precision(&assignments[window_start..], &concepts)?;
                r.pseudo_precision_x = px;
                r.pseudo_precision_y = py;
            }
            window_start = assignments.len();
            Some(r)
        } else {
            None
        };
        let row = HistoryRow {
            iteration: it,
            losses,
            metrics,
        };
        on_row(&row);
        history.push(row);
    }
    Ok(TrainOutcome {
        model: state.model,
        history,
        assignments,
    })
}

/// Header of the metrics history CSV.
pub fn history_header() -> Vec<&'static str> {
    let mut h = vec!["iteration"];
    h.extend(LossReport::COLUMNS);
    h.extend([
        "bleu1",
        "bleu2",
        "bleu3",
        "bleu4",
        "token_f1",
        "pseudo_precision_x",
        "pseudo_precision_y",
        "n_test",
    ]);
    h
}

pub fn history_record(row: &HistoryRow) -> Vec<String> {
    let mut r = vec![row.iteration.to_string()];
    r.extend(row.losses.values().iter().map(|v| v.to_string()));
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    match &row.metrics {
        Some(m) => r.extend([
            m.bleu1.to_string(),
            m.bleu2.to_string(),
            m.bleu3.to_string(),
            m.bleu4.to_string(),
            m.token_f1.to_string(),
            opt(m.pseudo_precision_x),
            opt(m.pseudo_precision_y),
            m.n_test.to_string(),
        ]),
        None => r.extend(std::iter::repeat_n(String::new(), 8)),
    }
    r
}

pub fn write_history_csv<W: Write>(out: W, rows: &[HistoryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(history_header())?;
    for row in rows {
        w.write_record(history_record(row))?;
    }
    w.flush()?;
    Ok(())
}
