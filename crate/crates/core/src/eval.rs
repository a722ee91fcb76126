//! Beam-search decoding and caption metrics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::autodiff::{Array2, Graph};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::model::{DecoderState, Model};
use crate::pseudo::{AssignmentRecord, PseudoDirection};
use crate::tokens::{TokenSeq, BOS, EOS, PAD};

/// Incremental next-token model driven by beam search.
pub trait Stepper {
    type State: Clone;

    /// For each `(state, token)` returns the new state and next-token
    /// log-probabilities over the whole vocabulary.
    #[allow(clippy::type_complexity)]
    fn step(&mut self, states: &[Self::State], tokens: &[usize]) -> Result<(Vec<Self::State>, Vec<Vec<f64>>)>;
}

#[derive(Clone, Debug)]
struct Hyp<S> {
    tokens: Vec<usize>,
    score: f64,
    state: S,
}

fn better(a: (f64, &[usize]), b: (f64, &[usize])) -> Ordering {
    b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1))
}

/// Beam search from each root state. Every hypothesis starts at BOS, never
/// emits PAD or BOS, and is forced to EOS when it reaches `max_len − 1`
/// tokens. Returns the best finished sequence per root and its log-probability;
/// ties go to the lexicographically smaller sequence.
pub fn beam_search<S: Stepper>(
    stepper: &mut S,
    roots: Vec<S::State>,
    beam: usize,
    max_len: usize,
) -> Result<Vec<(TokenSeq, f64)>> {
    let beam = beam.max(1);
    let max_len = max_len.max(2);
    let n = roots.len();
    let mut live: Vec<Vec<Hyp<S::State>>> = roots
        .into_iter()
        .map(|state| {
            vec![Hyp {
                tokens: vec![BOS],
                score: 0.0,
                state,
            }]
        })
        .collect();
    let mut finished: Vec<Vec<(Vec<usize>, f64)>> = vec![Vec::new(); n];

    loop {
        let mut states = Vec::new();
        let mut tokens = Vec::new();
        for hyps in &live {
            for h in hyps {
                states.push(h.state.clone());
                tokens.push(*h.tokens.last().expect("non-empty"));
            }
        }
        if states.is_empty() {
            break;
        }
        let (next_states, logprobs) = stepper.step(&states, &tokens)?;
        let mut row = 0;
        for (root, hyps) in live.iter_mut().enumerate() {
            let mut cands: Vec<(f64, Vec<usize>, usize)> = Vec::new();
            for (k, h) in hyps.iter().enumerate() {
                let lp = &logprobs[row + k];
                let at_cap = h.tokens.len() + 1 >= max_len;
                for (t, &l) in lp.iter().enumerate() {
                    if t == PAD || t == BOS || (at_cap && t != EOS) {
                        continue;
                    }
                    let mut seq = h.tokens.clone();
                    seq.push(t);
                    cands.push((h.score + l, seq, row + k));
                }
            }
            row += hyps.len();
            cands.sort_by(|a, b| better((a.0, &a.1), (b.0, &b.1)));
            cands.truncate(beam);
            let mut next = Vec::new();
            for (score, seq, src) in cands {
                if seq.last() == Some(&EOS) {
                    finished[root].push((seq, score));
                } else {
                    next.push(Hyp {
                        tokens: seq,
                        score,
                        state: next_states[src].clone(),
                    });
                }
            }
            // scores only fall, so live hypotheses worse than the best
            // finished one can never overtake it
            let best_done = finished[root].iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
            next.retain(|h| h.score > best_done);
            *hyps = next;
        }
    }

    Ok(finished
        .into_iter()
        .map(|mut f| {
            f.sort_by(|a, b| better((a.1, &a.0), (b.1, &b.0)));
            let (seq, score) = f.swap_remove(0);
            (TokenSeq::new(seq), score)
        })
        .collect())
}

/// Runs the caption decoder on plain arrays, one row per hypothesis.
pub struct DecoderStepper<'m> {
    model: &'m Model,
}

#[derive(Clone, Debug)]
pub struct RowState {
    h: Vec<f64>,
    c: Vec<f64>,
}

impl<'m> DecoderStepper<'m> {
    pub fn new(model: &'m Model) -> Self {
        Self { model }
    }

    /// Initial decoder state for each latent row.
    pub fn roots(&self, latents: &Array2) -> Result<Vec<RowState>> {
        let mut g = Graph::inference();
        let z = g.constant(latents.clone())?;
        let s = self.model.decoder.init(&mut g, &self.model.store, z)?;
        let (h, c) = (g.value(s.h), g.value(s.c));
        Ok((0..latents.rows())
            .map(|r| RowState {
                h: h.row_slice(r).to_vec(),
                c: c.row_slice(r).to_vec(),
            })
            .collect())
    }
}

impl Stepper for DecoderStepper<'_> {
    type State = RowState;

    fn step(&mut self, states: &[RowState], tokens: &[usize]) -> Result<(Vec<RowState>, Vec<Vec<f64>>)> {
        let hs: Vec<&[f64]> = states.iter().map(|s| s.h.as_slice()).collect();
        let cs: Vec<&[f64]> = states.iter().map(|s| s.c.as_slice()).collect();
        let mut g = Graph::inference();
        let h = g.constant(Array2::from_rows(&hs)?)?;
        let c = g.constant(Array2::from_rows(&cs)?)?;
        let (next, lp) = self
            .model
            .decoder
            .step(&mut g, &self.model.store, DecoderState { h, c }, tokens)?;
        let (h, c, lp) = (g.value(next.h), g.value(next.c), g.value(lp));
        let states = (0..tokens.len())
            .map(|r| RowState {
                h: h.row_slice(r).to_vec(),
                c: c.row_slice(r).to_vec(),
            })
            .collect();
        let rows = (0..tokens.len()).map(|r| lp.row_slice(r).to_vec()).collect();
        Ok((states, rows))
    }
}

/// Decodes a caption for every image (one per row).
pub fn decode_images(model: &Model, images: &Array2, beam: usize) -> Result<Vec<TokenSeq>> {
    let z = model.encode_images(images)?;
    let mut stepper = DecoderStepper::new(model);
    let roots = stepper.roots(&z)?;
    let out = beam_search(&mut stepper, roots, beam, model.config.max_seq_len)?;
    Ok(out.into_iter().map(|(s, _)| s).collect())
}

/// Decodes one image latent.
pub fn decode(model: &Model, zx: &[f64], beam: usize) -> Result<TokenSeq> {
    let mut stepper = DecoderStepper::new(model);
    let roots = stepper.roots(&Array2::row(zx))?;
    let mut out = beam_search(&mut stepper, roots, beam, model.config.max_seq_len)?;
    Ok(out.remove(0).0)
}

fn ngrams(tokens: &[usize], n: usize) -> HashMap<&[usize], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU over content-token sequences with uniform weights up to
/// `max_n` and no smoothing.
pub fn bleu(candidates: &[Vec<usize>], references: &[Vec<Vec<usize>>], max_n: usize) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::contract("BLEU of an empty corpus"));
    }
    if candidates.len() != references.len() {
        return Err(Error::contract(format!(
            "{} candidates but {} reference sets",
            candidates.len(),
            references.len()
        )));
    }
    if max_n == 0 {
        return Err(Error::contract("max_n must be at least 1"));
    }
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (cand, refs) in candidates.iter().zip(references) {
        if refs.is_empty() {
            return Err(Error::contract("candidate without references"));
        }
        cand_len += cand.len();
        ref_len += refs
            .iter()
            .map(|r| r.len())
            .min_by_key(|&l| (l.abs_diff(cand.len()), l))
            .expect("non-empty");
        for n in 1..=max_n {
            let counts = ngrams(cand, n);
            let mut best: HashMap<&[usize], usize> = HashMap::new();
            for r in refs {
                for (g, c) in ngrams(r, n) {
                    let e = best.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            for (g, c) in &counts {
                matched[n - 1] += (*c).min(best.get(g).copied().unwrap_or(0));
            }
            total[n - 1] += cand.len().saturating_sub(n - 1);
        }
    }
    if matched.contains(&0) {
        return Ok(0.0);
    }
    let log_p: f64 = matched
        .iter()
        .zip(&total)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / max_n as f64;
    let bp = if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    Ok(bp * log_p.exp())
}

/// F1 of predicted against gold content-token sets.
pub fn token_f1(predicted: &[usize], gold: &[usize]) -> f64 {
    let p: HashSet<usize> = predicted.iter().copied().collect();
    let g: HashSet<usize> = gold.iter().copied().collect();
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    let hit = p.intersection(&g).count() as f64;
    if hit == 0.0 {
        return 0.0;
    }
    let precision = hit / p.len() as f64;
    let recall = hit / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Fraction of assignments, per direction, whose anchor and retrieved sample
/// share a concept. `None` for a direction without assignments.
pub fn pseudo_label_precision(
    records: &[AssignmentRecord],
    concepts: &BTreeMap<usize, Option<usize>>,
) -> Result<(Option<f64>, Option<f64>)> {
    let mut hits = [0usize; 2];
    let mut counts = [0usize; 2];
    let concept = |id: usize| -> Result<usize> {
        concepts
            .get(&id)
            .copied()
            .flatten()
            .ok_or_else(|| Error::contract(format!("no concept id for sample {id}")))
    };
    for r in records {
        let k = match r.pair.direction {
            PseudoDirection::ImageToCaption => 0,
            PseudoDirection::CaptionToImage => 1,
        };
        counts[k] += 1;
        if concept(r.pair.anchor)? == concept(r.pair.retrieved)? {
            hits[k] += 1;
        }
    }
    let frac = |k: usize| (counts[k] > 0).then(|| hits[k] as f64 / counts[k] as f64);
    Ok((frac(0), frac(1)))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub token_f1: f64,
    pub pseudo_precision_x: Option<f64>,
    pub pseudo_precision_y: Option<f64>,
    pub n_test: usize,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialise")
    }
}

/// References per test sample: every test caption of the same concept, or
/// the sample's own caption when concepts are absent.
pub fn reference_sets(test: &[Sample]) -> Vec<Vec<Vec<usize>>> {
    let mut by_concept: HashMap<usize, Vec<Vec<usize>>> = HashMap::new();
    for s in test {
        if let Some(c) = s.concept_id {
            by_concept.entry(c).or_default().push(s.caption.content());
        }
    }
    test.iter()
        .map(|s| match s.concept_id {
            Some(c) => by_concept[&c].clone(),
            None => vec![s.caption.content()],
        })
        .collect()
}

/// Caption metrics of decoded predictions against a test set.
pub fn score_predictions(predictions: &[TokenSeq], test: &[Sample]) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::contract("empty test split"));
    }
    let cands: Vec<Vec<usize>> = predictions.iter().map(|p| p.content()).collect();
    let refs = reference_sets(test);
    let f1 = cands
        .iter()
        .zip(test)
        .map(|(c, s)| token_f1(c, &s.caption.content()))
        .sum::<f64>()
        / test.len() as f64;
    Ok(MetricsReport {
        bleu1: bleu(&cands, &refs, 1)?,
        bleu2: bleu(&cands, &refs, 2)?,
        bleu3: bleu(&cands, &refs, 3)?,
        bleu4: bleu(&cands, &refs, 4)?,
        token_f1: f1,
        pseudo_precision_x: None,
        pseudo_precision_y: None,
        n_test: test.len(),
    })
}

/// Decodes every test image and scores the captions.
pub fn evaluate(model: &Model, test: &[Sample], beam: usize) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::contract("empty test split"));
    }
    let rows: Vec<&[f64]> = test.iter().map(|s| s.image.as_slice()).collect();
    let predictions = decode_images(model, &Array2::from_rows(&rows)?, beam)?;
    score_predictions(&predictions, test)
}
