//! Pseudo-label retrieval: every unpaired anchor is joined to the candidate of
//! the other modality that the pair discriminator scores highest, and the
//! score becomes the confidence α.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Array2;
use crate::data::{UnpairedCaption, UnpairedImage};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::tokens::TokenSeq;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoDirection {
    /// An unpaired image receives a caption.
    ImageToCaption,
    /// An unpaired caption receives an image.
    CaptionToImage,
}

/// A sampled subset of one unpaired pool with latents under the current
/// encoder parameters.
#[derive(Clone, Debug)]
pub struct CandidatePool {
    /// Positions into the source set, ascending.
    pub indices: Vec<usize>,
    /// Sample id of each entry.
    pub ids: Vec<usize>,
    /// One latent per entry, `len × latent_dim`.
    pub latents: Array2,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `max(1, round(fraction·n))`.
pub fn pool_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n.max(1))
}

/// Uniform positions without replacement, ascending.
pub fn sample_pool<R: Rng>(source_len: usize, fraction: f64, rng: &mut R) -> Result<Vec<usize>> {
    if source_len == 0 {
        return Err(Error::contract("cannot sample a pool from an empty source"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "pool_fraction must be in (0, 1], got {fraction}"
        )));
    }
    let k = pool_size(source_len, fraction);
    if k == source_len {
        return Ok((0..source_len).collect());
    }
    let mut picked = index::sample(rng, source_len, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Pool over unpaired captions.
pub fn caption_pool(model: &Model, source: &[UnpairedCaption], indices: Vec<usize>) -> Result<CandidatePool> {
    let caps: Vec<&TokenSeq> = indices.iter().map(|&i| &source[i].caption).collect();
    let latents = model.encode_captions(&caps)?;
    let ids = indices.iter().map(|&i| source[i].id).collect();
    Ok(CandidatePool {
        indices,
        ids,
        latents,
    })
}

/// Pool over unpaired images.
pub fn image_pool(model: &Model, source: &[UnpairedImage], indices: Vec<usize>) -> Result<CandidatePool> {
    let rows: Vec<&[f64]> = indices.iter().map(|&i| source[i].image.as_slice()).collect();
    let latents = model.encode_images(&Array2::from_rows(&rows)?)?;
    let ids = indices.iter().map(|&i| source[i].id).collect();
    Ok(CandidatePool {
        indices,
        ids,
        latents,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoPair {
    pub direction: PseudoDirection,
    pub anchor: usize,
    pub retrieved: usize,
    pub alpha: f64,
}

/// A pseudo pair plus the position of the retrieved entry in its source set.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub pair: PseudoPair,
    pub source_index: usize,
}

/// Scores of every anchor against every pool entry, `anchors × pool`.
/// `anchors_are_images` decides which slot of D the anchor occupies.
pub fn score_matrix(
    model: &Model,
    anchors: &Array2,
    pool: &CandidatePool,
    anchors_are_images: bool,
) -> Result<Array2> {
    if pool.is_empty() {
        return Err(Error::contract("empty candidate pool"));
    }
    let (b, p) = (anchors.rows(), pool.len());
    let mut a_rows = Vec::with_capacity(b * p);
    let mut c_rows = Vec::with_capacity(b * p);
    for i in 0..b {
        for j in 0..p {
            a_rows.push(i);
            c_rows.push(j);
        }
    }
    let a = anchors.select_rows(&a_rows);
    let c = pool.latents.select_rows(&c_rows);
    let scores = if anchors_are_images {
        model.discriminate_batch(&a, &c)?
    } else {
        model.discriminate_batch(&c, &a)?
    };
    Ok(Array2::from_vec(b, p, scores)?)
}

/// Position of the highest score; ties go to the lowest id.
pub fn argmax_lowest_id(scores: &[f64], ids: &[usize]) -> usize {
    let mut best = 0;
    for j in 1..scores.len() {
        if scores[j] > scores[best] || (scores[j] == scores[best] && ids[j] < ids[best]) {
            best = j;
        }
    }
    best
}

fn assign(
    model: &Model,
    anchor_latents: &Array2,
    anchor_ids: &[usize],
    pool: &CandidatePool,
    direction: PseudoDirection,
) -> Result<Vec<Assignment>> {
    if anchor_latents.rows() != anchor_ids.len() {
        return Err(Error::contract("one anchor id per latent row required"));
    }
    let images = direction == PseudoDirection::ImageToCaption;
    let scores = score_matrix(model, anchor_latents, pool, images)?;
    Ok(anchor_ids
        .iter()
        .enumerate()
        .map(|(i, &anchor)| {
            let row = scores.row_slice(i);
            let j = argmax_lowest_id(row, &pool.ids);
            Assignment {
                pair: PseudoPair {
                    direction,
                    anchor,
                    retrieved: pool.ids[j],
                    alpha: row[j],
                },
                source_index: pool.indices[j],
            }
        })
        .collect())
}

/// `ỹ = argmax_y D(F(x), G(y))` over a caption pool, for each image latent.
pub fn assign_pseudo_captions(
    model: &Model,
    image_latents: &Array2,
    image_ids: &[usize],
    pool: &CandidatePool,
) -> Result<Vec<Assignment>> {
    assign(model, image_latents, image_ids, pool, PseudoDirection::ImageToCaption)
}

/// `x̃ = argmax_x D(F(x), G(y))` over an image pool, for each caption latent.
pub fn assign_pseudo_images(
    model: &Model,
    caption_latents: &Array2,
    caption_ids: &[usize],
    pool: &CandidatePool,
) -> Result<Vec<Assignment>> {
    assign(model, caption_latents, caption_ids, pool, PseudoDirection::CaptionToImage)
}

/// Single-anchor form of [`assign_pseudo_captions`].
pub fn assign_pseudo_caption(model: &Model, image: &UnpairedImage, pool: &CandidatePool) -> Result<PseudoPair> {
    let z = model.encode_images(&Array2::row(&image.image))?;
    Ok(assign_pseudo_captions(model, &z, &[image.id], pool)?.remove(0).pair)
}

/// Single-anchor form of [`assign_pseudo_images`].
pub fn assign_pseudo_image(model: &Model, caption: &UnpairedCaption, pool: &CandidatePool) -> Result<PseudoPair> {
    let z = model.encode_captions(&[&caption.caption])?;
    Ok(assign_pseudo_images(model, &z, &[caption.id], pool)?.remove(0).pair)
}

/// One line of the assignment dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub iteration: usize,
    #[serde(flatten)]
    pub pair: PseudoPair,
}

pub fn write_assignments<W: Write>(out: &mut W, records: &[AssignmentRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn parse_assignments(text: &str, path: &Path) -> Result<Vec<AssignmentRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let r: AssignmentRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if !(0.0..=1.0).contains(&r.pair.alpha) {
            return Err(err(format!("alpha {} outside [0, 1]", r.pair.alpha)));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn read_assignments(path: &Path) -> Result<Vec<AssignmentRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_assignments(&text, path)
}
