//! Training objectives as differentiable scalars on a [`Graph`].
//!
//! Conventions: every function returns a quantity to be *minimised*. Batch
//! expectations are means over rows. Log-probabilities of the pair
//! discriminator are taken on its pre-sigmoid logits through
//! [`Graph::log_sigmoid`], so `log D = logσ(l)` and `log(1 − D) = logσ(−l)`.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Array2, Graph, Var};
use crate::error::{Error, Result};
use crate::model::{Model, TeacherForced};
use crate::tokens::TokenSeq;

/// Balance weights of the objectives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub lambda_reg: f64,
    pub w_gan: f64,
    pub w_triplet: f64,
    /// Per-ratio cap of the triplet objective; larger log-ratios add no gradient.
    pub triplet_margin: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_x: 0.1,
            lambda_y: 0.1,
            lambda_reg: 0.1,
            w_gan: 0.1,
            w_triplet: 0.1,
            triplet_margin: 4.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("lambda_x", self.lambda_x),
            ("lambda_y", self.lambda_y),
            ("lambda_reg", self.lambda_reg),
            ("w_gan", self.w_gan),
            ("w_triplet", self.w_triplet),
            ("triplet_margin", self.triplet_margin),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value ≥ 0")));
            }
        }
        Ok(())
    }
}

/// Scalar value of every objective for one training iteration.
///
/// `cap_pseudo_x`/`cap_pseudo_y` are the confidence-weighted sums before the
/// λ balance weights, on the same per-paired-sample scale as `cap_paired`; `gan_g` is the adversarial generator term (pair or
/// domain discriminators), `reg` the latent regression term and `cycle` the
/// cycle-reconstruction term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub cap_paired: f64,
    pub cap_pseudo_x: f64,
    pub cap_pseudo_y: f64,
    pub gan_d: f64,
    pub gan_g: f64,
    pub reg: f64,
    pub triplet: f64,
    pub cycle: f64,
    pub total: f64,
}

impl LossReport {
    pub const COLUMNS: [&'static str; 9] = [
        "cap_paired",
        "cap_pseudo_x",
        "cap_pseudo_y",
        "gan_d",
        "gan_g",
        "reg",
        "triplet",
        "cycle",
        "total",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.cap_paired,
            self.cap_pseudo_x,
            self.cap_pseudo_y,
            self.gan_d,
            self.gan_g,
            self.reg,
            self.triplet,
            self.cycle,
            self.total,
        ]
    }

    /// The first non-finite component, if any.
    pub fn non_finite(&self) -> Option<&'static str> {
        Self::COLUMNS
            .iter()
            .zip(self.values())
            .find(|(_, v)| !v.is_finite())
            .map(|(name, _)| *name)
    }

    /// Recomputes `total` from the components.
    pub fn with_total(mut self, weights: &LossWeights) -> Self {
        self.total = total_loss(&self, weights);
        self
    }
}

/// `cap + w_gan·(generator-side GAN terms) + w_triplet·triplet`, where
/// `cap = cap_paired + λx·cap_pseudo_x + λy·cap_pseudo_y`. The discriminator
/// loss is optimised in its own step and is not part of this scalar.
pub fn total_loss(report: &LossReport, weights: &LossWeights) -> f64 {
    let cap = report.cap_paired
        + weights.lambda_x * report.cap_pseudo_x
        + weights.lambda_y * report.cap_pseudo_y;
    cap + weights.w_gan * (report.gan_g + report.reg + report.cycle)
        + weights.w_triplet * report.triplet
}

/// Negative log-likelihood of each caption, `batch × 1`.
pub fn caption_nll(g: &mut Graph, tf: &TeacherForced) -> Result<Var> {
    let lp = tf.sequence_logprob(g)?;
    Ok(g.neg(lp)?)
}

/// Mean over the batch of `−Σ_t log p(y_{t+1} | y_{≤t}, x)`; padding excluded.
pub fn caption_ce(g: &mut Graph, tf: &TeacherForced) -> Result<Var> {
    let nll = caption_nll(g, tf)?;
    Ok(g.mean(nll)?)
}

/// Caption cross-entropy of precomputed log-probabilities (`(len−1) × vocab`).
pub fn caption_ce_rows(logprobs: &Array2, target: &TokenSeq) -> Result<f64> {
    if target.len() < 2 || logprobs.rows() != target.len() - 1 {
        return Err(Error::contract(format!(
            "caption_ce: {} log-probability rows for a target of length {}",
            logprobs.rows(),
            target.len()
        )));
    }
    let mut total = 0.0;
    for (t, &tok) in target.tokens()[1..].iter().enumerate() {
        if tok == crate::tokens::PAD {
            continue;
        }
        if tok >= logprobs.cols() {
            return Err(Error::OutOfVocab {
                token: tok,
                vocab: logprobs.cols(),
            });
        }
        total -= logprobs.get(t, tok);
    }
    Ok(total)
}

/// Length-normalised sequence log-likelihood, `batch × 1`.
pub fn mean_step_logprob(g: &mut Graph, tf: &TeacherForced) -> Result<Var> {
    let lp = tf.sequence_logprob(g)?;
    let inv: Vec<f64> = tf.step_counts().iter().map(|&n| 1.0 / n.max(1.0)).collect();
    let inv = g.constant(Array2::column(&inv))?;
    Ok(g.mul(lp, inv)?)
}

/// Per-sample cross-entropies of one pseudo-label direction and their
/// confidences.
#[derive(Clone, Debug)]
pub struct PseudoTerms<'a> {
    /// `n × 1` cross-entropy per pseudo-labelled sample.
    pub ce: Var,
    pub alpha: &'a [f64],
}

/// The two directions of the confidence-weighted pseudo-label loss.
#[derive(Clone, Copy, Debug)]
pub struct WeightedUnpaired {
    /// `Σ αᵢˣ·CEᵢ` (before `λx`).
    pub x: Option<Var>,
    /// `Σ αᵢʸ·CEᵢ` (before `λy`).
    pub y: Option<Var>,
    /// `λx·x + λy·y`.
    pub total: Option<Var>,
}

fn weighted_sum(g: &mut Graph, terms: &PseudoTerms<'_>, use_confidence: bool) -> Result<Var> {
    let n = g.shape(terms.ce).0;
    if terms.alpha.len() != n || g.shape(terms.ce).1 != 1 {
        return Err(Error::contract(format!(
            "{} confidences for {n} cross-entropy rows",
            terms.alpha.len()
        )));
    }
    if let Some(a) = terms.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::contract(format!("confidence {a} outside [0, 1]")));
    }
    let w: Vec<f64> = if use_confidence {
        terms.alpha.to_vec()
    } else {
        vec![1.0; n]
    };
    let w = g.constant(Array2::column(&w))?;
    let weighted = g.mul(terms.ce, w)?;
    Ok(g.sum(weighted)?)
}

/// `λx·Σ αᵢˣ·CE(ỹᵢ | xᵢ) + λy·Σ αᵢʸ·CE(yᵢ | x̃ᵢ)`. With `use_confidence`
/// off every α is treated as 1.
pub fn weighted_unpaired_ce(
    g: &mut Graph,
    x: Option<&PseudoTerms<'_>>,
    y: Option<&PseudoTerms<'_>>,
    weights: &LossWeights,
    use_confidence: bool,
) -> Result<WeightedUnpaired> {
    let xs = x.map(|t| weighted_sum(g, t, use_confidence)).transpose()?;
    let ys = y.map(|t| weighted_sum(g, t, use_confidence)).transpose()?;
    let xw = xs.map(|v| g.scale(v, weights.lambda_x)).transpose()?;
    let yw = ys.map(|v| g.scale(v, weights.lambda_y)).transpose()?;
    let total = match (xw, yw) {
        (Some(a), Some(b)) => Some(g.add(a, b)?),
        (a, b) => a.or(b),
    };
    Ok(WeightedUnpaired { x: xs, y: ys, total })
}

/// Latent batches used by the adversarial objectives (one sample per row).
#[derive(Clone, Copy, Debug)]
pub struct Latents {
    pub paired_x: Var,
    pub paired_y: Var,
    pub unpaired_x: Var,
    pub unpaired_y: Var,
}

fn mean_log_sigmoid(g: &mut Graph, logits: Var, sign: f64) -> Result<Var> {
    let l = if sign < 0.0 { g.neg(logits)? } else { logits };
    let ls = g.log_sigmoid(l)?;
    Ok(g.mean(ls)?)
}

/// Discriminator side of the pair-matching game:
/// `−(E[log D(zx, zy)] + ½(E[log(1 − D(zx, Tvc(zx)))] + E[log(1 − D(Tcv(zy), zy))]))`.
///
/// All latents and synthesized features are detached, so only D's parameters
/// receive gradient.
pub fn gan_discriminator_loss(g: &mut Graph, model: &Model, z: &Latents) -> Result<Var> {
    if g.shape(z.paired_x).0 == 0 {
        return Err(Error::contract("discriminator loss needs a non-empty real batch"));
    }
    let store = &model.store;
    let px = g.stop_gradient(z.paired_x)?;
    let py = g.stop_gradient(z.paired_y)?;
    let ux = g.stop_gradient(z.unpaired_x)?;
    let uy = g.stop_gradient(z.unpaired_y)?;
    let fake_y = model.tvc.forward(g, store, ux)?;
    let fake_y = g.stop_gradient(fake_y)?;
    let fake_x = model.tcv.forward(g, store, uy)?;
    let fake_x = g.stop_gradient(fake_x)?;

    let real = model.disc.logits(g, store, px, py, false)?;
    let from_image = model.disc.logits(g, store, ux, fake_y, false)?;
    let from_caption = model.disc.logits(g, store, fake_x, uy, false)?;

    let real = mean_log_sigmoid(g, real, 1.0)?;
    let fi = mean_log_sigmoid(g, from_image, -1.0)?;
    let fc = mean_log_sigmoid(g, from_caption, -1.0)?;
    let fakes = g.add(fi, fc)?;
    let fakes = g.scale(fakes, 0.5)?;
    let objective = g.add(real, fakes)?;
    Ok(g.neg(objective)?)
}

/// Generator side of the pair-matching game.
#[derive(Clone, Copy, Debug)]
pub struct GeneratorLoss {
    /// `½(E[log(1 − D(zx, Tvc(zx)))] + E[log(1 − D(Tcv(zy), zy))])`
    pub adversarial: Var,
    /// `λ_reg·E[‖Tvc(zx) − zy‖² + ‖zx − Tcv(zy)‖²]` over the paired batch.
    pub reg: Var,
    pub total: Var,
}

/// The real-pair `log D` term is left out: it carries no generator gradient.
/// D's parameters enter as constants.
pub fn gan_generator_loss(
    g: &mut Graph,
    model: &Model,
    z: &Latents,
    weights: &LossWeights,
) -> Result<GeneratorLoss> {
    let store = &model.store;
    let fake_y = model.tvc.forward(g, store, z.unpaired_x)?;
    let fake_x = model.tcv.forward(g, store, z.unpaired_y)?;
    let from_image = model.disc.logits(g, store, z.unpaired_x, fake_y, true)?;
    let from_caption = model.disc.logits(g, store, fake_x, z.unpaired_y, true)?;
    let fi = mean_log_sigmoid(g, from_image, -1.0)?;
    let fc = mean_log_sigmoid(g, from_caption, -1.0)?;
    let adv = g.add(fi, fc)?;
    let adversarial = g.scale(adv, 0.5)?;
    let reg = latent_regression(g, model, z.paired_x, z.paired_y, weights.lambda_reg)?;
    let total = g.add(adversarial, reg)?;
    Ok(GeneratorLoss {
        adversarial,
        reg,
        total,
    })
}

/// `λ_reg·mean_i(‖Tvc(zxᵢ) − zyᵢ‖² + ‖zxᵢ − Tcv(zyᵢ)‖²)`.
pub fn latent_regression(
    g: &mut Graph,
    model: &Model,
    paired_x: Var,
    paired_y: Var,
    lambda_reg: f64,
) -> Result<Var> {
    let n = g.shape(paired_x).0;
    if n == 0 {
        return Err(Error::contract("latent regression requires a paired batch"));
    }
    let store = &model.store;
    let ty = model.tvc.forward(g, store, paired_x)?;
    let tx = model.tcv.forward(g, store, paired_y)?;
    let dy = g.sub(ty, paired_y)?;
    let dx = g.sub(paired_x, tx)?;
    let ny = g.sq_frobenius(dy)?;
    let nx = g.sq_frobenius(dx)?;
    let both = g.add(ny, nx)?;
    Ok(g.scale(both, lambda_reg / n as f64)?)
}

/// Negated triplet objective on length-normalised log-likelihoods (`batch × 1`):
/// mean of `−[min(pos − neg_image, margin) + min(pos − neg_caption, margin)]`.
pub fn triplet_loss(
    g: &mut Graph,
    pos: Var,
    neg_image: Var,
    neg_caption: Var,
    margin: f64,
) -> Result<Var> {
    // −min(Δ, m) = relu(m − Δ) − m
    let capped = |g: &mut Graph, neg: Var| -> Result<Var> {
        let d = g.sub(neg, pos)?;
        let shift = g.constant(Array2::filled(g.shape(d).0, 1, margin))?;
        let h = g.add(d, shift)?;
        Ok(g.relu(h)?)
    };
    let a = capped(g, neg_image)?;
    let b = capped(g, neg_caption)?;
    let s = g.add(a, b)?;
    let m = g.mean(s)?;
    let offset = g.constant(Array2::scalar(-2.0 * margin))?;
    Ok(g.add(m, offset)?)
}

/// Objectives of the cycle-consistency baseline.
#[derive(Clone, Copy, Debug)]
pub struct CycleLosses {
    /// `E‖Tcv(Tvc(zx)) − zx‖ + E‖Tvc(Tcv(zy)) − zy‖`
    pub cycle: Var,
    /// Adversarial generator terms against the domain discriminators.
    pub adversarial: Var,
    /// `cycle + adversarial`, minimised over F, G and T.
    pub gen: Var,
    /// Negated domain-discriminator objective, minimised over D_x and D_y.
    pub disc: Var,
}

/// Cycle-consistency baseline. D_x separates real image latents from
/// translated caption latents `Tcv(zy)`; D_y separates real caption latents
/// from `Tvc(zx)`. Generator terms see the domain discriminators as constants;
/// discriminator terms see detached latents.
pub fn cycle_losses(g: &mut Graph, model: &Model, zx: Var, zy: Var) -> Result<CycleLosses> {
    if g.shape(zx).0 == 0 || g.shape(zy).0 == 0 {
        return Err(Error::contract("cycle losses need non-empty batches"));
    }
    let store = &model.store;
    let ty = model.tvc.forward(g, store, zx)?;
    let back_x = model.tcv.forward(g, store, ty)?;
    let tx = model.tcv.forward(g, store, zy)?;
    let back_y = model.tvc.forward(g, store, tx)?;
    let rx = g.sub(back_x, zx)?;
    let ry = g.sub(back_y, zy)?;
    let nx = g.row_norms(rx)?;
    let ny = g.row_norms(ry)?;
    let cx = g.mean(nx)?;
    let cy = g.mean(ny)?;
    let cycle = g.add(cx, cy)?;

    let dx_fake = model.image_domain_disc.logits(g, store, tx, true)?;
    let dy_fake = model.caption_domain_disc.logits(g, store, ty, true)?;
    let ax = mean_log_sigmoid(g, dx_fake, -1.0)?;
    let ay = mean_log_sigmoid(g, dy_fake, -1.0)?;
    let adversarial = g.add(ax, ay)?;
    let gen = g.add(cycle, adversarial)?;

    let zx_d = g.stop_gradient(zx)?;
    let zy_d = g.stop_gradient(zy)?;
    let tx_d = g.stop_gradient(tx)?;
    let ty_d = g.stop_gradient(ty)?;
    let real_x = model.image_domain_disc.logits(g, store, zx_d, false)?;
    let fake_x = model.image_domain_disc.logits(g, store, tx_d, false)?;
    let real_y = model.caption_domain_disc.logits(g, store, zy_d, false)?;
    let fake_y = model.caption_domain_disc.logits(g, store, ty_d, false)?;
    let terms = [
        mean_log_sigmoid(g, real_x, 1.0)?,
        mean_log_sigmoid(g, fake_x, -1.0)?,
        mean_log_sigmoid(g, real_y, 1.0)?,
        mean_log_sigmoid(g, fake_y, -1.0)?,
    ];
    let dsum = g.add(terms[0], terms[1])?;
    let dsum = g.add(dsum, terms[2])?;
    let dsum = g.add(dsum, terms[3])?;
    let disc = g.neg(dsum)?;
    Ok(CycleLosses {
        cycle,
        adversarial,
        gen,
        disc,
    })
}
