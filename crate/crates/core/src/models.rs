//! Per-mood binary classifiers.
//!
//! Both models minimize mean (optionally class-weighted) binary
//! cross-entropy plus `lambda / 2 * ||W||^2` on weights (biases are not
//! penalized) by full-batch gradient descent with an Armijo backtracking
//! line search. Training is deterministic given data and config.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{exp, log1p, sqrt};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evaluation::Prediction;
use crate::features::{DenseVector, FeatureVector};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_iters: usize,
    /// Stop once an accepted step lowers the loss by less than this
    /// fraction.
    pub tol: f64,
    pub initial_step: f64,
    pub step_growth: f64,
    pub step_shrink: f64,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    pub hidden_width: usize,
    /// Weight classes by inverse frequency.
    pub class_weighting: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 1e-4,
            max_iters: 500,
            tol: 1e-7,
            initial_step: 1.0,
            step_growth: 2.0,
            step_shrink: 0.5,
            armijo: 1e-4,
            hidden_width: 32,
            class_weighting: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::arg(name, alloc::format!("{v} must be positive")))
            }
        };
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::arg("l2_lambda", "must be finite and >= 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::arg("max_iters", "must be positive"));
        }
        pos("tol", self.tol)?;
        pos("initial_step", self.initial_step)?;
        pos("armijo", self.armijo)?;
        if self.step_growth.is_nan() || self.step_growth < 1.0 {
            return Err(Error::arg("step_growth", "must be >= 1"));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::arg("step_shrink", "must be in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub n_pos: usize,
    pub n_neg: usize,
    pub final_loss: f64,
    pub n_iters: usize,
    pub seed: u64,
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + log1p(exp(-z.abs()))
}

/// Binary cross-entropy of logit `z` against label `y`.
fn bce(z: f64, y: bool) -> f64 {
    softplus(z) - if y { z } else { 0.0 }
}

pub fn classify(prob: f64, threshold: f64) -> Prediction {
    if prob >= threshold {
        Prediction::Positive
    } else {
        Prediction::Negative
    }
}

/// Result of [`minimize`].
#[derive(Debug, Clone)]
pub struct Optimized {
    pub params: Vec<f64>,
    /// Loss at the start and after every accepted step.
    pub losses: Vec<f64>,
    pub iters: usize,
}

/// Gradient descent with Armijo backtracking. The step grows after every
/// accepted move and shrinks until sufficient decrease is met.
pub fn minimize<F>(objective: F, x0: Vec<f64>, cfg: &TrainConfig) -> Optimized
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    let mut losses = alloc::vec![f];
    let mut step = cfg.initial_step;
    let mut iters = 0;
    let mut trial = alloc::vec![0.0; x.len()];
    while iters < cfg.max_iters {
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 <= f64::MIN_POSITIVE {
            break;
        }
        let accepted = loop {
            for ((t, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                *t = xi - step * gi;
            }
            let (ft, gt) = objective(&trial);
            if ft.is_finite() && ft <= f - cfg.armijo * step * g2 {
                break Some((ft, gt));
            }
            step *= cfg.step_shrink;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((ft, gt)) = accepted else { break };
        iters += 1;
        core::mem::swap(&mut x, &mut trial);
        let decrease = (f - ft) / f.abs().max(f64::MIN_POSITIVE);
        f = ft;
        g = gt;
        losses.push(f);
        step *= cfg.step_growth;
        if decrease < cfg.tol {
            break;
        }
    }
    Optimized { params: x, losses, iters }
}

fn check_labels(n: usize, y: &[bool]) -> Result<(usize, usize)> {
    if n != y.len() {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let n_pos = y.iter().filter(|v| **v).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    Ok((n_pos, n_neg))
}

/// Per-example weights normalized so that they sum to `n`.
fn example_weights(y: &[bool], n_pos: usize, n_neg: usize, balanced: bool) -> Vec<f64> {
    let n = y.len() as f64;
    y.iter()
        .map(|&l| {
            if !balanced {
                1.0
            } else if l {
                n / (2.0 * n_pos as f64)
            } else {
                n / (2.0 * n_neg as f64)
            }
        })
        .collect()
}

/// Loss and gradient of the regularized logistic objective. Parameters are
/// the weights followed by the bias.
pub struct LogisticProblem<'a> {
    x: &'a [FeatureVector],
    y: &'a [bool],
    weights: Vec<f64>,
    dims: usize,
    lambda: f64,
}

impl<'a> LogisticProblem<'a> {
    pub fn new(x: &'a [FeatureVector], y: &'a [bool], config: &TrainConfig) -> Result<Self> {
        let (n_pos, n_neg) = check_labels(x.len(), y)?;
        let dims = x[0].dims();
        for (row, v) in x.iter().enumerate() {
            if v.dims() != dims {
                return Err(Error::DimensionMismatch { expected: dims, got: v.dims() });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row });
            }
        }
        Ok(LogisticProblem {
            x,
            y,
            weights: example_weights(y, n_pos, n_neg, config.class_weighting),
            dims,
            lambda: config.l2_lambda,
        })
    }

    pub fn n_params(&self) -> usize {
        self.dims + 1
    }

    pub fn loss_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (w, b) = params.split_at(self.dims);
        let b = b[0];
        let n = self.x.len() as f64;
        let mut grad = alloc::vec![0.0; self.dims + 1];
        let mut loss = 0.0;
        for ((xi, &yi), ci) in self.x.iter().zip(self.y).zip(&self.weights) {
            let z = xi.dot(w) + b;
            loss += ci * bce(z, yi);
            let dz = ci * (sigmoid(z) - if yi { 1.0 } else { 0.0 }) / n;
            xi.add_scaled_to(&mut grad[..self.dims], dz);
            grad[self.dims] += dz;
        }
        loss /= n;
        let mut reg = 0.0;
        for (gj, wj) in grad.iter_mut().zip(w) {
            reg += wj * wj;
            *gj += self.lambda * wj;
        }
        (loss + 0.5 * self.lambda * reg, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub mood: String,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
    pub train_meta: TrainMeta,
}

impl LogisticModel {
    pub fn dims(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        if x.dims() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: x.dims() });
        }
        Ok(sigmoid(x.dot(&self.weights) + self.bias))
    }
}

/// Free-function form of [`LogisticModel::predict`].
pub fn predict(model: &LogisticModel, x: &FeatureVector) -> Result<f64> {
    model.predict(x)
}

/// Trains and also returns the loss after every accepted step.
pub fn train_logistic_traced(
    mood: &str,
    x: &[FeatureVector],
    y: &[bool],
    config: &TrainConfig,
) -> Result<(LogisticModel, Vec<f64>)> {
    config.validate()?;
    let problem = LogisticProblem::new(x, y, config)?;
    let opt = minimize(|p| problem.loss_grad(p), alloc::vec![0.0; problem.n_params()], config);
    let n_pos = y.iter().filter(|v| **v).count();
    let mut params = opt.params;
    let bias = params.pop().unwrap_or(0.0);
    let model = LogisticModel {
        mood: mood.to_string(),
        weights: params,
        bias,
        l2_lambda: config.l2_lambda,
        train_meta: TrainMeta {
            n_pos,
            n_neg: y.len() - n_pos,
            final_loss: *opt.losses.last().unwrap_or(&f64::NAN),
            n_iters: opt.iters,
            seed: config.seed,
        },
    };
    Ok((model, opt.losses))
}

pub fn train_logistic(mood: &str, x: &[FeatureVector], y: &[bool], config: &TrainConfig) -> Result<LogisticModel> {
    train_logistic_traced(mood, x, y, config).map(|r| r.0)
}

/// Lyric embedding concatenated with an MLP encoding of the acoustics,
/// followed by a linear classification layer:
///
/// ```text
/// hidden = relu(W1 · acoustic + b1)
/// logit  = w2 · [embedding; hidden] + b2
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridHead {
    pub mood: String,
    pub embedding_dim: usize,
    pub acoustic_dim: usize,
    pub hidden_width: usize,
    /// `hidden_width x acoustic_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `embedding_dim + hidden_width`.
    pub w2: Vec<f64>,
    pub b2: f64,
    pub l2_lambda: f64,
    pub train_meta: TrainMeta,
}

/// Named ranges of the flat hybrid parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridLayout {
    pub embedding_dim: usize,
    pub acoustic_dim: usize,
    pub hidden_width: usize,
}

impl HybridLayout {
    pub fn w1(&self) -> core::ops::Range<usize> {
        0..self.hidden_width * self.acoustic_dim
    }

    pub fn b1(&self) -> core::ops::Range<usize> {
        let s = self.w1().end;
        s..s + self.hidden_width
    }

    pub fn w2(&self) -> core::ops::Range<usize> {
        let s = self.b1().end;
        s..s + self.embedding_dim + self.hidden_width
    }

    pub fn b2(&self) -> core::ops::Range<usize> {
        let s = self.w2().end;
        s..s + 1
    }

    pub fn n_params(&self) -> usize {
        self.b2().end
    }

    pub fn blocks(&self) -> [(&'static str, core::ops::Range<usize>); 4] {
        [("w1", self.w1()), ("b1", self.b1()), ("w2", self.w2()), ("b2", self.b2())]
    }
}

fn hybrid_logit(layout: &HybridLayout, p: &[f64], emb: &[f64], ac: &[f64], hidden: &mut [f64]) -> f64 {
    let (w1, b1, w2, b2) = (&p[layout.w1()], &p[layout.b1()], &p[layout.w2()], p[layout.b2().start]);
    let a = layout.acoustic_dim;
    for (k, h) in hidden.iter_mut().enumerate() {
        let pre: f64 = w1[k * a..(k + 1) * a].iter().zip(ac).map(|(w, x)| w * x).sum::<f64>() + b1[k];
        *h = pre.max(0.0);
    }
    let (w2e, w2h) = w2.split_at(layout.embedding_dim);
    w2e.iter().zip(emb).map(|(w, x)| w * x).sum::<f64>()
        + w2h.iter().zip(hidden.iter()).map(|(w, x)| w * x).sum::<f64>()
        + b2
}

/// Loss and gradient of the hybrid head over the flat parameter vector
/// described by [`HybridLayout`].
pub struct HybridProblem<'a> {
    embeddings: &'a [DenseVector],
    acoustics: &'a [DenseVector],
    y: &'a [bool],
    weights: Vec<f64>,
    layout: HybridLayout,
    lambda: f64,
}

impl<'a> HybridProblem<'a> {
    pub fn new(
        embeddings: &'a [DenseVector],
        acoustics: &'a [DenseVector],
        y: &'a [bool],
        config: &TrainConfig,
    ) -> Result<Self> {
        if embeddings.len() != acoustics.len() {
            return Err(Error::DimensionMismatch {
                expected: embeddings.len(),
                got: acoustics.len(),
            });
        }
        let (n_pos, n_neg) = check_labels(embeddings.len(), y)?;
        let e = embeddings[0].dims();
        let a = acoustics[0].dims();
        for (row, (ev, av)) in embeddings.iter().zip(acoustics).enumerate() {
            if ev.dims() != e {
                return Err(Error::DimensionMismatch { expected: e, got: ev.dims() });
            }
            if av.dims() != a {
                return Err(Error::DimensionMismatch { expected: a, got: av.dims() });
            }
            if !ev.values().iter().chain(av.values()).all(|v| v.is_finite()) {
                return Err(Error::NonFiniteFeature { row });
            }
        }
        Ok(HybridProblem {
            embeddings,
            acoustics,
            y,
            weights: example_weights(y, n_pos, n_neg, config.class_weighting),
            layout: HybridLayout {
                embedding_dim: e,
                acoustic_dim: a,
                hidden_width: config.hidden_width,
            },
            lambda: config.l2_lambda,
        })
    }

    pub fn layout(&self) -> HybridLayout {
        self.layout
    }

    /// Seeded uniform init on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    pub fn initial_params(&self, seed: u64) -> Vec<f64> {
        let l = self.layout;
        let mut rng = rng::substream(seed, "init");
        let mut p = alloc::vec![0.0; l.n_params()];
        let r1 = 1.0 / sqrt(l.acoustic_dim.max(1) as f64);
        let r2 = 1.0 / sqrt((l.embedding_dim + l.hidden_width).max(1) as f64);
        for i in l.w1().chain(l.b1()) {
            p[i] = rng.random_range(-r1..=r1);
        }
        for i in l.w2().chain(l.b2()) {
            p[i] = rng.random_range(-r2..=r2);
        }
        p
    }

    pub fn loss_grad(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let l = self.layout;
        let a = l.acoustic_dim;
        let n = self.y.len() as f64;
        let mut grad = alloc::vec![0.0; l.n_params()];
        let mut hidden = alloc::vec![0.0; l.hidden_width];
        let mut loss = 0.0;
        let w2h = &p[l.w2()][l.embedding_dim..];
        for i in 0..self.y.len() {
            let emb = self.embeddings[i].values();
            let ac = self.acoustics[i].values();
            let z = hybrid_logit(&l, p, emb, ac, &mut hidden);
            let ci = self.weights[i];
            loss += ci * bce(z, self.y[i]);
            let dz = ci * (sigmoid(z) - if self.y[i] { 1.0 } else { 0.0 }) / n;
            let (gw1, rest) = grad.split_at_mut(l.b1().start);
            let (gb1, rest) = rest.split_at_mut(l.hidden_width);
            let (gw2, gb2) = rest.split_at_mut(l.embedding_dim + l.hidden_width);
            for (g, x) in gw2.iter_mut().zip(emb.iter().chain(hidden.iter())) {
                *g += dz * x;
            }
            gb2[0] += dz;
            for k in 0..l.hidden_width {
                if hidden[k] > 0.0 {
                    let d = dz * w2h[k];
                    gb1[k] += d;
                    for (g, x) in gw1[k * a..(k + 1) * a].iter_mut().zip(ac) {
                        *g += d * x;
                    }
                }
            }
        }
        loss /= n;
        let mut reg = 0.0;
        for r in [l.w1(), l.w2()] {
            for j in r {
                reg += p[j] * p[j];
                grad[j] += self.lambda * p[j];
            }
        }
        (loss + 0.5 * self.lambda * reg, grad)
    }
}

impl HybridHead {
    pub fn layout(&self) -> HybridLayout {
        HybridLayout {
            embedding_dim: self.embedding_dim,
            acoustic_dim: self.acoustic_dim,
            hidden_width: self.hidden_width,
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.layout().n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    /// Checks the shape chain acoustic -> hidden, (embedding + hidden) -> 1.
    pub fn validate(&self) -> Result<()> {
        let l = self.layout();
        let checks = [
            (self.w1.len(), l.w1().len()),
            (self.b1.len(), l.b1().len()),
            (self.w2.len(), l.w2().len()),
        ];
        for (got, expected) in checks {
            if got != expected {
                return Err(Error::DimensionMismatch { expected, got });
            }
        }
        Ok(())
    }

    pub fn predict(&self, embedding: &DenseVector, acoustic: &DenseVector) -> Result<f64> {
        if embedding.dims() != self.embedding_dim {
            return Err(Error::DimensionMismatch {
                expected: self.embedding_dim,
                got: embedding.dims(),
            });
        }
        if acoustic.dims() != self.acoustic_dim {
            return Err(Error::DimensionMismatch {
                expected: self.acoustic_dim,
                got: acoustic.dims(),
            });
        }
        let mut hidden = alloc::vec![0.0; self.hidden_width];
        let p = self.flat_params();
        Ok(sigmoid(hybrid_logit(&self.layout(), &p, embedding.values(), acoustic.values(), &mut hidden)))
    }
}

pub fn train_hybrid_head_traced(
    mood: &str,
    embeddings: &[DenseVector],
    acoustics: &[DenseVector],
    y: &[bool],
    config: &TrainConfig,
) -> Result<(HybridHead, Vec<f64>)> {
    config.validate()?;
    let problem = HybridProblem::new(embeddings, acoustics, y, config)?;
    let l = problem.layout();
    let opt = minimize(|p| problem.loss_grad(p), problem.initial_params(config.seed), config);
    let p = &opt.params;
    let n_pos = y.iter().filter(|v| **v).count();
    let head = HybridHead {
        mood: mood.to_string(),
        embedding_dim: l.embedding_dim,
        acoustic_dim: l.acoustic_dim,
        hidden_width: l.hidden_width,
        w1: p[l.w1()].to_vec(),
        b1: p[l.b1()].to_vec(),
        w2: p[l.w2()].to_vec(),
        b2: p[l.b2().start],
        l2_lambda: config.l2_lambda,
        train_meta: TrainMeta {
            n_pos,
            n_neg: y.len() - n_pos,
            final_loss: *opt.losses.last().unwrap_or(&f64::NAN),
            n_iters: opt.iters,
            seed: config.seed,
        },
    };
    Ok((head, opt.losses))
}

pub fn train_hybrid_head(
    mood: &str,
    embeddings: &[DenseVector],
    acoustics: &[DenseVector],
    y: &[bool],
    config: &TrainConfig,
) -> Result<HybridHead> {
    train_hybrid_head_traced(mood, embeddings, acoustics, y, config).map(|r| r.0)
}

/// Any trained per-mood classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Logistic(LogisticModel),
    Hybrid(HybridHead),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logistic",
            Model::Hybrid(_) => "hybrid",
        }
    }

    pub fn mood(&self) -> &str {
        match self {
            Model::Logistic(m) => &m.mood,
            Model::Hybrid(h) => &h.mood,
        }
    }

    /// Input dimensionality: feature dims, or embedding + acoustic dims.
    pub fn dims(&self) -> usize {
        match self {
            Model::Logistic(m) => m.dims(),
            Model::Hybrid(h) => h.embedding_dim + h.acoustic_dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;
    use alloc::vec;

    fn dense(v: &[f64]) -> FeatureVector {
        FeatureVector::Dense(DenseVector::new(v.to_vec()).unwrap())
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1e4), 1.0);
        assert_eq!(sigmoid(-1e4), 0.0);
        assert!(sigmoid(700.0).is_finite() && sigmoid(-700.0) >= 0.0);
        assert!((bce(-800.0, true) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn classify_threshold() {
        assert_eq!(classify(0.5, 0.5), Prediction::Positive);
        assert_eq!(classify(0.49, 0.5), Prediction::Negative);
        assert_eq!(classify(0.6, 0.9), Prediction::Negative);
    }

    #[test]
    fn zero_model_predicts_half() {
        let m = LogisticModel {
            mood: "m".into(),
            weights: vec![0.0; 3],
            bias: 0.0,
            l2_lambda: 0.0,
            train_meta: TrainMeta { n_pos: 1, n_neg: 1, final_loss: 0.0, n_iters: 0, seed: 0 },
        };
        assert_eq!(m.predict(&dense(&[1.0, 2.0, 3.0])).unwrap(), 0.5);
        assert!(m.predict(&dense(&[1.0])).is_err());
    }

    #[test]
    fn separable_points() {
        let x = vec![dense(&[1.0, 0.0]), dense(&[0.0, 1.0])];
        let y = vec![true, false];
        let m = train_logistic("m", &x, &y, &TrainConfig::default()).unwrap();
        assert!(m.predict(&x[0]).unwrap() > 0.5);
        assert!(m.predict(&x[1]).unwrap() < 0.5);
    }

    #[test]
    fn input_errors() {
        let x = vec![dense(&[1.0]), dense(&[2.0])];
        assert_eq!(
            train_logistic("m", &x, &[true, true], &TrainConfig::default()),
            Err(Error::DegenerateLabels)
        );
        let bad = vec![
            dense(&[1.0]),
            FeatureVector::Sparse(SparseVector::zeros(1)),
            FeatureVector::Dense(DenseVector::new(vec![1.0]).unwrap()),
        ];
        assert!(train_logistic("m", &bad, &[true, false, true], &TrainConfig::default()).is_ok());
        let cfg = TrainConfig { max_iters: 0, ..Default::default() };
        assert!(train_logistic("m", &x, &[true, false], &cfg).is_err());
    }

    #[test]
    fn losses_never_increase() {
        let x: Vec<FeatureVector> = (0..40).map(|i| dense(&[(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])).collect();
        let y: Vec<bool> = (0..40).map(|i| (i * 7) % 5 < 2).collect();
        let (_, losses) = train_logistic_traced("m", &x, &y, &TrainConfig::default()).unwrap();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn hybrid_layout_is_contiguous() {
        let l = HybridLayout { embedding_dim: 3, acoustic_dim: 4, hidden_width: 2 };
        assert_eq!(l.w1(), 0..8);
        assert_eq!(l.b1(), 8..10);
        assert_eq!(l.w2(), 10..15);
        assert_eq!(l.b2(), 15..16);
    }
}
