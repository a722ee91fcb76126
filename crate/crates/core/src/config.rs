//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! variant = final
//! iterations = 3000
//! lambda_x = 0.1
//! ```
//!
//! Every key is optional and falls back to its default; unknown and repeated
//! keys are errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{generate, load_external, split_scarcely_paired, Dataset, GenConfig, SplitBundle};
use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub gen: GenConfig,
    pub paired_fraction: f64,
    pub test_fraction: f64,
    /// Seed of the split; the training seed when unset.
    pub split_seed: Option<u64>,
    /// External JSONL dataset used instead of the synthetic generator.
    pub dataset: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            gen: GenConfig::default(),
            paired_fraction: 0.01,
            test_fraction: 0.2,
            split_seed: None,
            dataset: None,
        }
    }
}

pub const KEYS: [&str; 34] = [
    "variant",
    "batch_size",
    "iterations",
    "warmup_iters",
    "pool_fraction",
    "seed",
    "lambda_x",
    "lambda_y",
    "lambda_reg",
    "w_gan",
    "w_triplet",
    "triplet_margin",
    "lr",
    "b1",
    "b2",
    "eps",
    "eval_every",
    "beam",
    "latent_dim",
    "embed_dim",
    "lstm_hidden",
    "transformer_layers",
    "disc_hidden",
    "num_concepts",
    "attributes_per_concept",
    "attribute_vocab",
    "samples_per_concept",
    "image_dim",
    "noise_sigma",
    "data_seed",
    "paired_fraction",
    "test_fraction",
    "split_seed",
    "dataset",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn split_seed(&self) -> u64 {
        self.split_seed.unwrap_or(self.train.seed)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        let g = &mut self.gen;
        match key {
            "variant" => t.variant = value.parse()?,
            "batch_size" => t.batch_size = num(key, value)?,
            "iterations" => t.iterations = num(key, value)?,
            "warmup_iters" => t.warmup_iters = num(key, value)?,
            "pool_fraction" => t.pool_fraction = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "lambda_x" => t.weights.lambda_x = num(key, value)?,
            "lambda_y" => t.weights.lambda_y = num(key, value)?,
            "lambda_reg" => t.weights.lambda_reg = num(key, value)?,
            "w_gan" => t.weights.w_gan = num(key, value)?,
            "w_triplet" => t.weights.w_triplet = num(key, value)?,
            "triplet_margin" => t.weights.triplet_margin = num(key, value)?,
            "lr" => t.adam.lr = num(key, value)?,
            "b1" => t.adam.b1 = num(key, value)?,
            "b2" => t.adam.b2 = num(key, value)?,
            "eps" => t.adam.eps = num(key, value)?,
            "eval_every" => t.eval_every = num(key, value)?,
            "beam" => t.beam = num(key, value)?,
            "latent_dim" => t.model.latent_dim = num(key, value)?,
            "embed_dim" => t.model.embed_dim = num(key, value)?,
            "lstm_hidden" => t.model.lstm_hidden = num(key, value)?,
            "transformer_layers" => t.model.transformer_layers = num(key, value)?,
            "disc_hidden" => t.model.disc_hidden = num(key, value)?,
            "num_concepts" => g.num_concepts = num(key, value)?,
            "attributes_per_concept" => g.attributes_per_concept = num(key, value)?,
            "attribute_vocab" => g.attribute_vocab = num(key, value)?,
            "samples_per_concept" => g.samples_per_concept = num(key, value)?,
            "image_dim" => g.image_dim = num(key, value)?,
            "noise_sigma" => g.noise_sigma = num(key, value)?,
            "data_seed" => g.seed = num(key, value)?,
            "paired_fraction" => self.paired_fraction = num(key, value)?,
            "test_fraction" => self.test_fraction = num(key, value)?,
            "split_seed" => self.split_seed = Some(num(key, value)?),
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses a config document; `path` only labels errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key {key:?}")));
            }
            cfg.set(key, value).map_err(|e| match e {
                Error::Config(m) => err(m),
                other => err(other.to_string()),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.dataset.is_none() {
            self.gen.validate()?;
        }
        Ok(())
    }

    /// The external dataset when one is configured, else the generated benchmark.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            Some(path) => load_external(path),
            None => generate(&self.gen),
        }
    }

    pub fn bundle(&self) -> Result<SplitBundle> {
        split_scarcely_paired(
            &self.dataset()?,
            self.paired_fraction,
            self.test_fraction,
            self.split_seed(),
        )
    }

    /// Every key with its resolved value, parseable by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let g = &self.gen;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("variant", t.variant.to_string());
        put("batch_size", t.batch_size.to_string());
        put("iterations", t.iterations.to_string());
        put("warmup_iters", t.warmup_iters.to_string());
        put("pool_fraction", t.pool_fraction.to_string());
        put("seed", t.seed.to_string());
        put("lambda_x", t.weights.lambda_x.to_string());
        put("lambda_y", t.weights.lambda_y.to_string());
        put("lambda_reg", t.weights.lambda_reg.to_string());
        put("w_gan", t.weights.w_gan.to_string());
        put("w_triplet", t.weights.w_triplet.to_string());
        put("triplet_margin", t.weights.triplet_margin.to_string());
        put("lr", t.adam.lr.to_string());
        put("b1", t.adam.b1.to_string());
        put("b2", t.adam.b2.to_string());
        put("eps", t.adam.eps.to_string());
        put("eval_every", t.eval_every.to_string());
        put("beam", t.beam.to_string());
        put("latent_dim", t.model.latent_dim.to_string());
        put("embed_dim", t.model.embed_dim.to_string());
        put("lstm_hidden", t.model.lstm_hidden.to_string());
        put("transformer_layers", t.model.transformer_layers.to_string());
        put("disc_hidden", t.model.disc_hidden.to_string());
        put("num_concepts", g.num_concepts.to_string());
        put("attributes_per_concept", g.attributes_per_concept.to_string());
        put("attribute_vocab", g.attribute_vocab.to_string());
        put("samples_per_concept", g.samples_per_concept.to_string());
        put("image_dim", g.image_dim.to_string());
        put("noise_sigma", g.noise_sigma.to_string());
        put("data_seed", g.seed.to_string());
        put("paired_fraction", self.paired_fraction.to_string());
        put("test_fraction", self.test_fraction.to_string());
        put("split_seed", self.split_seed().to_string());
        if let Some(d) = &self.dataset {
            put("dataset", d.display().to_string());
        }
        out
    }
}
