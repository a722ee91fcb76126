//! Synthetic scarcely-paired benchmark, external JSONL datasets and splits.
//!
//! A concept is a set of `m` attributes out of `A`. Its image is the mean of
//! the attributes' embedding rows plus Gaussian noise; its caption lists the
//! attribute tokens in a random order.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokens::{attribute_token, TokenSeq, RESERVED};

pub const DATASET_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_concepts: usize,
    pub attributes_per_concept: usize,
    pub attribute_vocab: usize,
    pub samples_per_concept: usize,
    pub image_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            num_concepts: 40,
            attributes_per_concept: 4,
            attribute_vocab: 24,
            samples_per_concept: 125,
            image_dim: 32,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn vocab_size(&self) -> usize {
        self.attribute_vocab + RESERVED
    }

    pub fn num_samples(&self) -> usize {
        self.num_concepts * self.samples_per_concept
    }

    pub fn validate(&self) -> Result<()> {
        let c = self;
        if c.attributes_per_concept == 0 || c.attributes_per_concept > c.attribute_vocab {
            return Err(Error::Config(format!(
                "attributes_per_concept must be in 1..={}, got {}",
                c.attribute_vocab, c.attributes_per_concept
            )));
        }
        if c.num_concepts == 0 || c.samples_per_concept == 0 || c.image_dim == 0 {
            return Err(Error::Config(
                "num_concepts, samples_per_concept and image_dim must be positive".into(),
            ));
        }
        if !(c.noise_sigma >= 0.0 && c.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be a finite value ≥ 0".into()));
        }
        let available = binomial(c.attribute_vocab, c.attributes_per_concept);
        if (c.num_concepts as u128) > available {
            return Err(Error::Config(format!(
                "{} concepts requested but only {available} distinct {}-subsets of {} attributes exist",
                c.num_concepts, c.attributes_per_concept, c.attribute_vocab
            )));
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// One image/caption pair. `concept_id` is hidden from training and only
/// used by evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: usize,
    pub concept_id: Option<usize>,
    pub image: Vec<f64>,
    pub caption: TokenSeq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub image_dim: usize,
    pub vocab_size: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Whether every sample carries a concept id.
    pub fn has_concepts(&self) -> bool {
        self.samples.iter().all(|s| s.concept_id.is_some())
    }

    pub fn max_caption_len(&self) -> usize {
        self.samples.iter().map(|s| s.caption.len()).max().unwrap_or(0)
    }
}

/// Draws the attribute embeddings, the concepts and every sample from `config.seed`.
pub fn generate(config: &GenConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let a = config.attribute_vocab;
    let d = config.image_dim;
    let m = config.attributes_per_concept;

    let embedding: Vec<f64> = (0..a * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let concepts = draw_concepts(&mut rng, a, m, config.num_concepts);
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;

    let mut samples = Vec::with_capacity(config.num_samples());
    for (concept_id, attrs) in concepts.iter().enumerate() {
        let mut mean = vec![0.0; d];
        for &attr in attrs {
            for (acc, v) in mean.iter_mut().zip(&embedding[attr * d..(attr + 1) * d]) {
                *acc += v;
            }
        }
        for v in &mut mean {
            *v /= m as f64;
        }
        for _ in 0..config.samples_per_concept {
            let image = if config.noise_sigma == 0.0 {
                mean.clone()
            } else {
                mean.iter().map(|v| v + noise.sample(&mut rng)).collect()
            };
            let mut content: Vec<usize> = attrs.iter().map(|&x| attribute_token(x)).collect();
            content.shuffle(&mut rng);
            samples.push(Sample {
                id: samples.len(),
                concept_id: Some(concept_id),
                image,
                caption: TokenSeq::framed(&content),
            });
        }
    }
    Ok(Dataset {
        image_dim: d,
        vocab_size: config.vocab_size(),
        samples,
    })
}

/// `k` distinct sorted `m`-subsets of `0..a`.
fn draw_concepts(rng: &mut ChaCha8Rng, a: usize, m: usize, k: usize) -> Vec<Vec<usize>> {
    let total = binomial(a, m);
    if total <= 200_000 {
        let all = all_subsets(a, m);
        return index::sample(rng, all.len(), k)
            .into_iter()
            .map(|i| all[i].clone())
            .collect();
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let mut s = index::sample(rng, a, m).into_vec();
        s.sort_unstable();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

fn all_subsets(a: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..m).rev().find(|&i| cur[i] < a - m + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnpairedImage {
    pub id: usize,
    pub concept_id: Option<usize>,
    pub image: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnpairedCaption {
    pub id: usize,
    pub concept_id: Option<usize>,
    pub caption: TokenSeq,
}

/// Paired set, the two unimodal pools and the held-out test set.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitBundle {
    pub image_dim: usize,
    pub vocab_size: usize,
    pub paired: Vec<Sample>,
    pub unpaired_images: Vec<UnpairedImage>,
    pub unpaired_captions: Vec<UnpairedCaption>,
    pub test: Vec<Sample>,
}

impl SplitBundle {
    pub fn max_caption_len(&self) -> usize {
        let a = self.paired.iter().chain(&self.test).map(|s| s.caption.len());
        let b = self.unpaired_captions.iter().map(|c| c.caption.len());
        a.chain(b).max().unwrap_or(0)
    }

    /// Concept id per sample id, over every set.
    pub fn concept_map(&self) -> BTreeMap<usize, Option<usize>> {
        let mut map = BTreeMap::new();
        for s in self.paired.iter().chain(&self.test) {
            map.insert(s.id, s.concept_id);
        }
        for s in &self.unpaired_images {
            map.insert(s.id, s.concept_id);
        }
        for s in &self.unpaired_captions {
            map.insert(s.id, s.concept_id);
        }
        map
    }

    /// Concepts of unpaired images that no unpaired caption shares.
    pub fn uncovered_concepts(&self) -> Vec<usize> {
        let have: HashSet<usize> = self
            .unpaired_captions
            .iter()
            .filter_map(|c| c.concept_id)
            .collect();
        let mut missing: Vec<usize> = self
            .unpaired_images
            .iter()
            .filter_map(|s| s.concept_id)
            .filter(|c| !have.contains(c))
            .collect();
        missing.sort_unstable();
        missing.dedup();
        missing
    }
}

/// Draws the test set (`round(test_fraction·N)`) and the paired set
/// (`round(paired_fraction·train)`) uniformly; the unpaired remainder is
/// split in half within each concept, images from one half and captions from
/// the other, so no hidden true pair spans the two pools.
pub fn split_scarcely_paired(
    dataset: &Dataset,
    paired_fraction: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitBundle> {
    if !(paired_fraction > 0.0 && paired_fraction < 1.0) {
        return Err(Error::Config(format!(
            "paired_fraction must be in (0, 1), got {paired_fraction}"
        )));
    }
    if !(test_fraction >= 0.0 && paired_fraction + test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must be ≥ 0 with paired_fraction + test_fraction < 1, got {test_fraction}"
        )));
    }
    let n = dataset.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let n_train = n - n_test;
    let n_paired = (paired_fraction * n_train as f64).round() as usize;
    if n_paired == 0 {
        return Err(Error::Config(format!(
            "paired set is empty ({paired_fraction} of {n_train} training samples); use a larger dataset or paired_fraction"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let test: Vec<Sample> = order[..n_test].iter().map(|&i| dataset.samples[i].clone()).collect();
    let paired: Vec<Sample> = order[n_test..n_test + n_paired]
        .iter()
        .map(|&i| dataset.samples[i].clone())
        .collect();

    let mut to_images = true;
    let mut by_concept: BTreeMap<Option<usize>, bool> = BTreeMap::new();
    let mut unpaired_images = Vec::new();
    let mut unpaired_captions = Vec::new();
    for &i in &order[n_test + n_paired..] {
        let s = &dataset.samples[i];
        // alternate within a concept; without concepts alternate globally
        let side = match s.concept_id {
            Some(_) => {
                let next = by_concept.entry(s.concept_id).or_insert_with(|| rng.random());
                *next = !*next;
                *next
            }
            None => {
                to_images = !to_images;
                to_images
            }
        };
        if side {
            unpaired_images.push(UnpairedImage {
                id: s.id,
                concept_id: s.concept_id,
                image: s.image.clone(),
            });
        } else {
            unpaired_captions.push(UnpairedCaption {
                id: s.id,
                concept_id: s.concept_id,
                caption: s.caption.clone(),
            });
        }
    }
    Ok(SplitBundle {
        image_dim: dataset.image_dim,
        vocab_size: dataset.vocab_size,
        paired,
        unpaired_images,
        unpaired_captions,
        test,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    image_dim: usize,
    vocab_size: usize,
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: usize,
    features: Vec<f64>,
    tokens: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concept_id: Option<usize>,
}

pub fn to_jsonl(dataset: &Dataset) -> String {
    let header = Header {
        format_version: DATASET_VERSION,
        image_dim: dataset.image_dim,
        vocab_size: dataset.vocab_size,
    };
    let mut out = serde_json::to_string(&header).expect("header serialises");
    out.push('\n');
    for s in &dataset.samples {
        let r = Record {
            id: s.id,
            features: s.image.clone(),
            tokens: s.caption.tokens().to_vec(),
            concept_id: s.concept_id,
        };
        out.push_str(&serde_json::to_string(&r).expect("record serialises"));
        out.push('\n');
    }
    out
}

pub fn save(dataset: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, to_jsonl(dataset)).map_err(|e| Error::io(path, e))
}

/// Parses a dataset document; `path` only labels error messages.
pub fn parse_jsonl(text: &str, path: &Path) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (hl, head) = lines.next().ok_or_else(|| err(1, "missing header line".into()))?;
    let header: Header =
        serde_json::from_str(head).map_err(|e| err(hl, format!("bad header: {e}")))?;
    if header.format_version != DATASET_VERSION {
        return Err(err(
            hl,
            format!("unsupported format_version {}", header.format_version),
        ));
    }
    if header.image_dim == 0 || header.vocab_size <= RESERVED {
        return Err(err(hl, "image_dim must be positive and vocab_size > 3".into()));
    }

    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    for (ln, line) in lines {
        let r: Record = serde_json::from_str(line).map_err(|e| err(ln, e.to_string()))?;
        if r.features.len() != header.image_dim {
            return Err(err(
                ln,
                format!(
                    "features has {} entries, header declares image_dim {}",
                    r.features.len(),
                    header.image_dim
                ),
            ));
        }
        if let Some(&t) = r.tokens.iter().find(|&&t| t >= header.vocab_size) {
            return Err(err(
                ln,
                format!("token id {t} ≥ vocab_size {}", header.vocab_size),
            ));
        }
        let caption = TokenSeq::new(r.tokens);
        if !caption.is_framed() || caption.tokens()[1..caption.len() - 1].iter().any(|&t| t < RESERVED) {
            return Err(err(ln, "tokens must be BOS, content ids ≥ 3, EOS".into()));
        }
        if !ids.insert(r.id) {
            return Err(err(ln, format!("duplicate id {}", r.id)));
        }
        samples.push(Sample {
            id: r.id,
            concept_id: r.concept_id,
            image: r.features,
            caption,
        });
    }
    Ok(Dataset {
        image_dim: header.image_dim,
        vocab_size: header.vocab_size,
        samples,
    })
}

pub fn load_external(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&text, path)
}
