//! The networks: image encoder F, caption encoder G, caption decoder H,
//! feature transformers T (v→c, c→v), the pair discriminator D, and the two
//! single-domain discriminators used by the cycle-consistency baseline.
//!
//! Every forward pass is written against a [`Graph`] and works on batches
//! (one sample per row). Single-sample helpers on [`Model`] wrap them in a
//! throwaway inference graph.

mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};

use crate::autodiff::{Array2, Graph, Var};
use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore, Role};
use crate::tokens::{TokenSeq, PAD};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub image_dim: usize,
    /// Dimension shared by image and caption latents.
    pub latent_dim: usize,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub transformer_layers: usize,
    pub disc_hidden: usize,
    pub max_seq_len: usize,
}

impl ModelConfig {
    /// Desk-scale defaults for a given vocabulary and sequence cap.
    pub fn new(vocab_size: usize, max_seq_len: usize) -> Self {
        Self {
            image_dim: 32,
            latent_dim: 64,
            vocab_size,
            embed_dim: 32,
            lstm_hidden: 64,
            transformer_layers: 4,
            disc_hidden: 64,
            max_seq_len,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("image_dim", self.image_dim),
            ("latent_dim", self.latent_dim),
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("transformer_layers", self.transformer_layers),
            ("disc_hidden", self.disc_hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.max_seq_len < 2 {
            return Err(Error::Config("max_seq_len must be at least 2".into()));
        }
        Ok(())
    }
}

/// Direction of a feature transformer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Image latent to caption latent.
    VisionToCaption,
    /// Caption latent to image latent.
    CaptionToVision,
}

/// Where a latent pair came from, which decides the adversarial term it feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairOrigin {
    RealPaired,
    SynthFromImage,
    SynthFromCaption,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentPair {
    pub zx: Vec<f64>,
    pub zy: Vec<f64>,
    pub origin: PairOrigin,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2 {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Array2::from_vec(rows, cols, data).expect("sized")
}

fn bind(g: &mut Graph, store: &ParamStore, id: ParamId, frozen: bool) -> Result<Var> {
    Ok(if frozen {
        g.frozen(store, id)?
    } else {
        g.param(store, id)?
    })
}

/// An affine layer `x·W + b` with `W` stored `in×out`.
#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    fn new(
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
        role: Role,
        name: &str,
        fan_in: usize,
        fan_out: usize,
    ) -> Self {
        Self {
            w: store.add(role, format!("{name}.w"), glorot(rng, fan_in, fan_out)),
            b: store.add(role, format!("{name}.b"), Array2::zeros(1, fan_out)),
        }
    }

    fn lookup(store: &ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            w: find(store, &format!("{name}.w"))?,
            b: find(store, &format!("{name}.b"))?,
        })
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var, frozen: bool) -> Result<Var> {
        let w = bind(g, store, self.w, frozen)?;
        let b = bind(g, store, self.b, frozen)?;
        Ok(g.affine(x, w, b)?)
    }
}

fn find(store: &ParamStore, name: &str) -> Result<ParamId> {
    store
        .find(name)
        .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))
}

/// A stack of affine layers with ReLU between them and none after the last.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    fn new(
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
        role: Role,
        name: &str,
        dims: &[usize],
    ) -> Self {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, rng, role, &format!("{name}.l{i}"), w[0], w[1]))
            .collect();
        Self { layers }
    }

    fn lookup(store: &ParamStore, name: &str, depth: usize) -> Result<Self> {
        let layers = (0..depth)
            .map(|i| Linear::lookup(store, &format!("{name}.l{i}")))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var, frozen: bool) -> Result<Var> {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(g, store, h, frozen)?;
            if i + 1 < self.layers.len() {
                h = g.relu(h)?;
            }
        }
        Ok(h)
    }
}

/// Single-layer LSTM cell with gates ordered input, forget, candidate, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmCell {
    /// `(input + hidden) × 4·hidden`
    pub w: ParamId,
    pub b: ParamId,
    pub hidden: usize,
}

impl LstmCell {
    fn new(
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
        role: Role,
        name: &str,
        input: usize,
        hidden: usize,
    ) -> Self {
        let mut bias = Array2::zeros(1, 4 * hidden);
        for j in hidden..2 * hidden {
            bias.set(0, j, 1.0);
        }
        Self {
            w: store.add(role, format!("{name}.w"), glorot(rng, input + hidden, 4 * hidden)),
            b: store.add(role, format!("{name}.b"), bias),
            hidden,
        }
    }

    fn lookup(store: &ParamStore, name: &str, hidden: usize) -> Result<Self> {
        Ok(Self {
            w: find(store, &format!("{name}.w"))?,
            b: find(store, &format!("{name}.b"))?,
            hidden,
        })
    }

    /// One recurrence step; returns `(h', c')`.
    pub fn step(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        x: Var,
        h: Var,
        c: Var,
    ) -> Result<(Var, Var)> {
        let n = self.hidden;
        let w = g.param(store, self.w)?;
        let b = g.param(store, self.b)?;
        let xh = g.concat_cols(&[x, h])?;
        let z = g.affine(xh, w, b)?;
        let i = g.slice_cols(z, 0, n)?;
        let i = g.sigmoid(i)?;
        let f = g.slice_cols(z, n, 2 * n)?;
        let f = g.sigmoid(f)?;
        let cand = g.slice_cols(z, 2 * n, 3 * n)?;
        let cand = g.tanh(cand)?;
        let o = g.slice_cols(z, 3 * n, 4 * n)?;
        let o = g.sigmoid(o)?;
        let fc = g.mul(f, c)?;
        let ic = g.mul(i, cand)?;
        let c_next = g.add(fc, ic)?;
        let tc = g.tanh(c_next)?;
        let h_next = g.mul(o, tc)?;
        Ok((h_next, c_next))
    }
}

/// `h_old + mask·(h_new − h_old)` row-wise; rows with mask 0 keep their state.
fn masked_update(g: &mut Graph, old: Var, new: Var, mask: &[f64]) -> Result<Var> {
    if mask.iter().all(|&m| m == 1.0) {
        return Ok(new);
    }
    let m = g.constant(Array2::column(mask))?;
    let diff = g.sub(new, old)?;
    let step = g.mul_col(diff, m)?;
    Ok(g.add(old, step)?)
}

fn check_tokens(y: &TokenSeq, vocab: usize) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(&token) = y.tokens().iter().find(|&&t| t >= vocab) {
        return Err(Error::OutOfVocab { token, vocab });
    }
    Ok(())
}

/// Image encoder F: a two-layer ReLU MLP from image features to the latent space.
#[derive(Clone, Debug)]
pub struct ImageEncoder {
    pub mlp: Mlp,
}

impl ImageEncoder {
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Result<Var> {
        self.mlp.forward(g, store, x, false)
    }
}

/// Caption encoder G: embedding, single-layer LSTM, projection of the last
/// hidden state.
#[derive(Clone, Debug)]
pub struct CaptionEncoder {
    pub embed: ParamId,
    pub lstm: LstmCell,
    pub proj: Linear,
}

impl CaptionEncoder {
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, captions: &[&TokenSeq]) -> Result<Var> {
        let batch = captions.len();
        let longest = captions.iter().map(|y| y.len()).max().unwrap_or(0);
        if batch == 0 || longest == 0 {
            return Err(Error::EmptySequence);
        }
        let vocab = store.value(self.embed).rows();
        for y in captions {
            check_tokens(y, vocab)?;
        }
        let embed = g.param(store, self.embed)?;
        let mut h = g.constant(Array2::zeros(batch, self.lstm.hidden))?;
        let mut c = g.constant(Array2::zeros(batch, self.lstm.hidden))?;
        for t in 0..longest {
            let ids: Vec<usize> = captions
                .iter()
                .map(|y| y.tokens().get(t).copied().unwrap_or(PAD))
                .collect();
            let mask: Vec<f64> = captions
                .iter()
                .map(|y| if t < y.len() { 1.0 } else { 0.0 })
                .collect();
            let x = g.select_rows(embed, &ids)?;
            let (h_new, c_new) = self.lstm.step(g, store, x, h, c)?;
            h = masked_update(g, h, h_new, &mask)?;
            c = masked_update(g, c, c_new, &mask)?;
        }
        self.proj.forward(g, store, h, false)
    }
}

/// Recurrent state of the decoder for a batch of hypotheses.
#[derive(Clone, Copy, Debug)]
pub struct DecoderState {
    pub h: Var,
    pub c: Var,
}

/// Teacher-forced decoder outputs for a batch.
#[derive(Clone, Debug)]
pub struct TeacherForced {
    /// One `batch × vocab` log-probability matrix per step.
    pub logprobs: Vec<Var>,
    /// Gold next token per step and sample.
    pub targets: Vec<Vec<usize>>,
    /// 1 where the step is inside the sample's caption, else 0.
    pub masks: Vec<Vec<f64>>,
}

impl TeacherForced {
    pub fn batch(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    /// Per-sample sum of gold-token log-probabilities (`batch × 1`).
    pub fn sequence_logprob(&self, g: &mut Graph) -> Result<Var> {
        let mut total: Option<Var> = None;
        for ((lp, targets), mask) in self.logprobs.iter().zip(&self.targets).zip(&self.masks) {
            let picked = g.pick(*lp, targets)?;
            let picked = if mask.iter().all(|&m| m == 1.0) {
                picked
            } else {
                let m = g.constant(Array2::column(mask))?;
                g.mul(picked, m)?
            };
            total = Some(match total {
                Some(t) => g.add(t, picked)?,
                None => picked,
            });
        }
        total.ok_or_else(|| Error::contract("caption too short to score"))
    }

    /// Number of scored steps per sample.
    pub fn step_counts(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.batch()];
        for mask in &self.masks {
            for (c, m) in counts.iter_mut().zip(mask) {
                *c += m;
            }
        }
        counts
    }
}

/// Caption decoder H: LSTM initialised from linear maps of the image latent.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub embed: ParamId,
    pub init_h: Linear,
    pub init_c: Linear,
    pub lstm: LstmCell,
    pub out: Linear,
    pub max_seq_len: usize,
}

impl Decoder {
    pub fn init(&self, g: &mut Graph, store: &ParamStore, zx: Var) -> Result<DecoderState> {
        let h = self.init_h.forward(g, store, zx, false)?;
        let c = self.init_c.forward(g, store, zx, false)?;
        Ok(DecoderState { h, c })
    }

    /// Feeds one token per row; returns the new state and `batch × vocab`
    /// log-probabilities of the next token.
    pub fn step(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        state: DecoderState,
        tokens: &[usize],
    ) -> Result<(DecoderState, Var)> {
        let embed = g.param(store, self.embed)?;
        let x = g.select_rows(embed, tokens)?;
        let (h, c) = self.lstm.step(g, store, x, state.h, state.c)?;
        let logits = self.out.forward(g, store, h, false)?;
        let lp = g.log_softmax_rows(logits)?;
        Ok((DecoderState { h, c }, lp))
    }

    pub fn teacher_forced(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        zx: Var,
        captions: &[&TokenSeq],
    ) -> Result<TeacherForced> {
        let vocab = store.value(self.embed).rows();
        if g.shape(zx).0 != captions.len() {
            return Err(Error::Dimension {
                what: "decoder batch",
                expected: captions.len(),
                got: g.shape(zx).0,
            });
        }
        for y in captions {
            check_tokens(y, vocab)?;
            if y.len() > self.max_seq_len {
                return Err(Error::SequenceTooLong {
                    len: y.len(),
                    max: self.max_seq_len,
                });
            }
            if y.len() < 2 {
                return Err(Error::contract("caption needs at least BOS and EOS"));
            }
        }
        let longest = captions.iter().map(|y| y.len()).max().unwrap_or(0);
        let mut state = self.init(g, store, zx)?;
        let mut out = TeacherForced {
            logprobs: Vec::with_capacity(longest.saturating_sub(1)),
            targets: Vec::new(),
            masks: Vec::new(),
        };
        for t in 0..longest.saturating_sub(1) {
            let inputs: Vec<usize> = captions
                .iter()
                .map(|y| y.tokens().get(t).copied().unwrap_or(PAD))
                .collect();
            let (next, lp) = self.step(g, store, state, &inputs)?;
            state = next;
            out.logprobs.push(lp);
            out.targets.push(
                captions
                    .iter()
                    .map(|y| y.tokens().get(t + 1).copied().unwrap_or(PAD))
                    .collect(),
            );
            out.masks.push(
                captions
                    .iter()
                    .map(|y| if t + 1 < y.len() { 1.0 } else { 0.0 })
                    .collect(),
            );
        }
        Ok(out)
    }
}

/// Feature transformer: an MLP of `transformer_layers` affine layers.
#[derive(Clone, Debug)]
pub struct Transformer {
    pub mlp: Mlp,
}

impl Transformer {
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, z: Var) -> Result<Var> {
        self.mlp.forward(g, store, z, false)
    }
}

/// Pair discriminator D on `concat(zx, zy)`; the ordering (image slot, caption slot) matters.
#[derive(Clone, Debug)]
pub struct PairDiscriminator {
    pub mlp: Mlp,
}

impl PairDiscriminator {
    /// Pre-sigmoid scores, `batch × 1`. With `frozen` the parameters enter as constants.
    pub fn logits(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        zx: Var,
        zy: Var,
        frozen: bool,
    ) -> Result<Var> {
        let pair = g.concat_cols(&[zx, zy])?;
        self.mlp.forward(g, store, pair, frozen)
    }
}

/// Single-domain discriminator for the cycle-consistency baseline.
#[derive(Clone, Debug)]
pub struct DomainDiscriminator {
    pub mlp: Mlp,
}

impl DomainDiscriminator {
    pub fn logits(&self, g: &mut Graph, store: &ParamStore, z: Var, frozen: bool) -> Result<Var> {
        self.mlp.forward(g, store, z, frozen)
    }
}

/// All networks plus the parameter store they index into.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub image_encoder: ImageEncoder,
    pub caption_encoder: CaptionEncoder,
    pub decoder: Decoder,
    pub tvc: Transformer,
    pub tcv: Transformer,
    pub disc: PairDiscriminator,
    pub image_domain_disc: DomainDiscriminator,
    pub caption_domain_disc: DomainDiscriminator,
}

impl Model {
    /// Freshly initialised model; Glorot-uniform weights from `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let c = &config;
        let dz = c.latent_dim;

        let image_encoder = ImageEncoder {
            mlp: Mlp::new(&mut store, &mut rng, Role::F, "F", &[c.image_dim, dz, dz]),
        };
        let caption_encoder = CaptionEncoder {
            embed: store.add(Role::G, "G.embed", glorot(&mut rng, c.vocab_size, c.embed_dim)),
            lstm: LstmCell::new(&mut store, &mut rng, Role::G, "G.lstm", c.embed_dim, c.lstm_hidden),
            proj: Linear::new(&mut store, &mut rng, Role::G, "G.proj", c.lstm_hidden, dz),
        };
        let decoder = Decoder {
            embed: store.add(Role::H, "H.embed", glorot(&mut rng, c.vocab_size, c.embed_dim)),
            init_h: Linear::new(&mut store, &mut rng, Role::H, "H.init_h", dz, c.lstm_hidden),
            init_c: Linear::new(&mut store, &mut rng, Role::H, "H.init_c", dz, c.lstm_hidden),
            lstm: LstmCell::new(&mut store, &mut rng, Role::H, "H.lstm", c.embed_dim, c.lstm_hidden),
            out: Linear::new(&mut store, &mut rng, Role::H, "H.out", c.lstm_hidden, c.vocab_size),
            max_seq_len: c.max_seq_len,
        };
        let t_dims = vec![dz; c.transformer_layers + 1];
        let tvc = Transformer {
            mlp: Mlp::new(&mut store, &mut rng, Role::Tvc, "Tvc", &t_dims),
        };
        let tcv = Transformer {
            mlp: Mlp::new(&mut store, &mut rng, Role::Tcv, "Tcv", &t_dims),
        };
        let dh = c.disc_hidden;
        let disc = PairDiscriminator {
            mlp: Mlp::new(&mut store, &mut rng, Role::D, "D", &[2 * dz, dh, dh, 1]),
        };
        let image_domain_disc = DomainDiscriminator {
            mlp: Mlp::new(&mut store, &mut rng, Role::D, "Dx", &[dz, dh, dh, 1]),
        };
        let caption_domain_disc = DomainDiscriminator {
            mlp: Mlp::new(&mut store, &mut rng, Role::D, "Dy", &[dz, dh, dh, 1]),
        };
        Ok(Self {
            config,
            store,
            image_encoder,
            caption_encoder,
            decoder,
            tvc,
            tcv,
            disc,
            image_domain_disc,
            caption_domain_disc,
        })
    }

    /// Rebuilds the network handles over an existing store, checking every
    /// parameter is present with the shape the config implies.
    pub fn from_store(config: ModelConfig, store: ParamStore) -> Result<Self> {
        config.validate()?;
        let reference = Model::new(config.clone(), 0)?;
        if reference.store.len() != store.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, found {}",
                reference.store.len(),
                store.len()
            )));
        }
        for (_, p) in reference.store.iter() {
            let id = find(&store, &p.name)?;
            let found = store.get(id);
            if found.value.shape() != p.value.shape() || found.role != p.role {
                return Err(Error::Checkpoint(format!(
                    "parameter {} has role {} shape {:?}, expected role {} shape {:?}",
                    p.name,
                    found.role,
                    found.value.shape(),
                    p.role,
                    p.value.shape()
                )));
            }
        }
        let c = &config;
        Ok(Self {
            image_encoder: ImageEncoder {
                mlp: Mlp::lookup(&store, "F", 2)?,
            },
            caption_encoder: CaptionEncoder {
                embed: find(&store, "G.embed")?,
                lstm: LstmCell::lookup(&store, "G.lstm", c.lstm_hidden)?,
                proj: Linear::lookup(&store, "G.proj")?,
            },
            decoder: Decoder {
                embed: find(&store, "H.embed")?,
                init_h: Linear::lookup(&store, "H.init_h")?,
                init_c: Linear::lookup(&store, "H.init_c")?,
                lstm: LstmCell::lookup(&store, "H.lstm", c.lstm_hidden)?,
                out: Linear::lookup(&store, "H.out")?,
                max_seq_len: c.max_seq_len,
            },
            tvc: Transformer {
                mlp: Mlp::lookup(&store, "Tvc", c.transformer_layers)?,
            },
            tcv: Transformer {
                mlp: Mlp::lookup(&store, "Tcv", c.transformer_layers)?,
            },
            disc: PairDiscriminator {
                mlp: Mlp::lookup(&store, "D", 3)?,
            },
            image_domain_disc: DomainDiscriminator {
                mlp: Mlp::lookup(&store, "Dx", 3)?,
            },
            caption_domain_disc: DomainDiscriminator {
                mlp: Mlp::lookup(&store, "Dy", 3)?,
            },
            config,
            store,
        })
    }

    pub fn transformer(&self, direction: Direction) -> &Transformer {
        match direction {
            Direction::VisionToCaption => &self.tvc,
            Direction::CaptionToVision => &self.tcv,
        }
    }

    fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::Dimension {
                what,
                expected,
                got,
            });
        }
        Ok(())
    }

    /// Encodes a batch of images (one per row) to latents.
    pub fn encode_images(&self, images: &Array2) -> Result<Array2> {
        Self::check_dim("image", self.config.image_dim, images.cols())?;
        let mut g = Graph::inference();
        let x = g.constant(images.clone())?;
        let z = self.image_encoder.forward(&mut g, &self.store, x)?;
        Ok(g.value(z).clone())
    }

    /// Encodes a batch of captions to latents.
    pub fn encode_captions(&self, captions: &[&TokenSeq]) -> Result<Array2> {
        let mut g = Graph::inference();
        let z = self.caption_encoder.forward(&mut g, &self.store, captions)?;
        Ok(g.value(z).clone())
    }

    pub fn encode_image(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encode_images(&Array2::row(x))?.into_data())
    }

    pub fn encode_caption(&self, y: &TokenSeq) -> Result<Vec<f64>> {
        Ok(self.encode_captions(&[y])?.into_data())
    }

    /// `(len(y) − 1) × vocab` log-probabilities; row `t` predicts `y[t+1]`.
    pub fn decode_teacher_forced(&self, zx: &[f64], y: &TokenSeq) -> Result<Array2> {
        Self::check_dim("latent", self.config.latent_dim, zx.len())?;
        if y.len() > self.config.max_seq_len {
            return Err(Error::SequenceTooLong {
                len: y.len(),
                max: self.config.max_seq_len,
            });
        }
        let mut g = Graph::inference();
        let z = g.constant(Array2::row(zx))?;
        let tf = self.decoder.teacher_forced(&mut g, &self.store, z, &[y])?;
        let rows: Vec<&[f64]> = tf.logprobs.iter().map(|&v| g.value(v).data()).collect();
        Ok(Array2::from_rows(&rows)?)
    }

    pub fn transform_feature(&self, direction: Direction, z: &[f64]) -> Result<Vec<f64>> {
        Self::check_dim("latent", self.config.latent_dim, z.len())?;
        let mut g = Graph::inference();
        let zv = g.constant(Array2::row(z))?;
        let out = self.transformer(direction).forward(&mut g, &self.store, zv)?;
        Ok(g.value(out).data().to_vec())
    }

    /// Pair scores `σ(D(zx_i, zy_i))` for row-aligned latent matrices.
    pub fn discriminate_batch(&self, zx: &Array2, zy: &Array2) -> Result<Vec<f64>> {
        Self::check_dim("image latent", self.config.latent_dim, zx.cols())?;
        Self::check_dim("caption latent", self.config.latent_dim, zy.cols())?;
        let mut g = Graph::inference();
        let a = g.constant(zx.clone())?;
        let b = g.constant(zy.clone())?;
        let logits = self.disc.logits(&mut g, &self.store, a, b, true)?;
        let s = g.sigmoid(logits)?;
        Ok(g.value(s).data().to_vec())
    }

    pub fn discriminate(&self, zx: &[f64], zy: &[f64]) -> Result<f64> {
        Ok(self.discriminate_batch(&Array2::row(zx), &Array2::row(zy))?[0])
    }
}
