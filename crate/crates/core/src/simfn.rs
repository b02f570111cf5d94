//! Symmetric similarity models over U-tuples.
//!
//! `μ_θ(x₁, …, x_U) = link(⟨f_θ(x₁), …, f_θ(x_U)⟩)` where `f_θ` is a linear
//! map or a one-hidden-layer ReLU perceptron and `⟨·⟩` is the U-way inner
//! product `Σ_k Π_u y_u[k]`.
//!
//! Parameter layout in the flat θ vector:
//! - `Linear`: the `p × K` matrix, row-major, so `f(x)_k = Σ_j θ[j·K + k] x_j`.
//! - `Mlp1`: `W₁` (`H × p`, row-major), `b₁` (`H`), `W₂` (`K × H`, row-major), `b₂` (`K`).

use std::cmp::Ordering;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::Domain;
use crate::error::{Error, Result};
use crate::hypernet::TupleView;
use crate::par::Execution;

/// Architecture of the per-node embedding `f_θ: ℝ^p → ℝ^K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Linear,
    Mlp1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingMap {
    pub kind: EmbeddingKind,
    pub p: usize,
    pub k: usize,
    /// Hidden width; ignored for `Linear`.
    pub h: usize,
}

impl EmbeddingMap {
    pub fn linear(p: usize, k: usize) -> Result<Self> {
        Self::validate(EmbeddingMap { kind: EmbeddingKind::Linear, p, k, h: 0 })
    }

    pub fn mlp1(p: usize, h: usize, k: usize) -> Result<Self> {
        Self::validate(EmbeddingMap { kind: EmbeddingKind::Mlp1, p, k, h })
    }

    fn validate(map: Self) -> Result<Self> {
        if map.k == 0 || map.p == 0 {
            return Err(Error::Config("embedding needs p >= 1 and K >= 1".into()));
        }
        if map.kind == EmbeddingKind::Mlp1 && map.h == 0 {
            return Err(Error::Config("MLP hidden width must be >= 1".into()));
        }
        Ok(map)
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            EmbeddingKind::Linear => self.p * self.k,
            EmbeddingKind::Mlp1 => self.h * self.p + self.h + self.k * self.h + self.k,
        }
    }

    /// Size of the scratch buffer `forward` needs (the hidden activations).
    pub fn scratch_len(&self) -> usize {
        match self.kind {
            EmbeddingKind::Linear => 0,
            EmbeddingKind::Mlp1 => self.h,
        }
    }

    /// Writes `f_θ(x)` into `out` (length K); hidden pre-activations go to `scratch`.
    pub fn forward(&self, theta: &[f64], x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let (p, k) = (self.p, self.k);
        match self.kind {
            EmbeddingKind::Linear => {
                out.fill(0.0);
                for (j, &xj) in x.iter().enumerate() {
                    if xj == 0.0 {
                        continue;
                    }
                    let row = &theta[j * k..(j + 1) * k];
                    for (o, &t) in out.iter_mut().zip(row) {
                        *o += t * xj;
                    }
                }
            }
            EmbeddingKind::Mlp1 => {
                let h = self.h;
                let (w1, rest) = theta.split_at(h * p);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(k * h);
                for r in 0..h {
                    let row = &w1[r * p..(r + 1) * p];
                    scratch[r] = b1[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
                for c in 0..k {
                    let row = &w2[c * h..(c + 1) * h];
                    out[c] = b2[c] + row.iter().zip(scratch.iter()).map(|(w, &z)| if z > 0.0 { w * z } else { 0.0 }).sum::<f64>();
                }
            }
        }
    }

    /// Adds `J(x)ᵀ upstream` to `grad`, where `J` is `∂f_θ(x)/∂θ`. `scratch`
    /// must hold the pre-activations written by `forward` for the same `x`.
    pub fn backward(&self, theta: &[f64], x: &[f64], scratch: &[f64], upstream: &[f64], grad: &mut [f64]) {
        let (p, k) = (self.p, self.k);
        match self.kind {
            EmbeddingKind::Linear => {
                for (j, &xj) in x.iter().enumerate() {
                    if xj == 0.0 {
                        continue;
                    }
                    let row = &mut grad[j * k..(j + 1) * k];
                    for (g, &u) in row.iter_mut().zip(upstream) {
                        *g += xj * u;
                    }
                }
            }
            EmbeddingKind::Mlp1 => {
                let h = self.h;
                let w2 = &theta[h * p + h..h * p + h + k * h];
                let (gw1, rest) = grad.split_at_mut(h * p);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(k * h);
                for c in 0..k {
                    let u = upstream[c];
                    gb2[c] += u;
                    if u == 0.0 {
                        continue;
                    }
                    let row = &mut gw2[c * h..(c + 1) * h];
                    for (g, &z) in row.iter_mut().zip(scratch) {
                        if z > 0.0 {
                            *g += u * z;
                        }
                    }
                }
                for r in 0..h {
                    // ReLU subgradient at 0 is 0
                    if scratch[r] <= 0.0 {
                        continue;
                    }
                    let delta: f64 = (0..k).map(|c| w2[c * h + r] * upstream[c]).sum();
                    gb1[r] += delta;
                    let row = &mut gw1[r * p..(r + 1) * p];
                    for (g, &xj) in row.iter_mut().zip(x) {
                        *g += delta * xj;
                    }
                }
            }
        }
    }

    fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut theta = vec![0.0; self.param_count()];
        let mut fill = |slice: &mut [f64], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for t in slice {
                *t = rng.random_range(-bound..bound);
            }
        };
        match self.kind {
            EmbeddingKind::Linear => fill(&mut theta, self.p),
            EmbeddingKind::Mlp1 => {
                let (p, h, k) = (self.p, self.h, self.k);
                fill(&mut theta[..h * p], p);
                let start = h * p + h;
                fill(&mut theta[start..start + k * h], h);
            }
        }
        theta
    }
}

/// Link applied to the U-way inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    Identity,
    Sigmoid,
    Exp,
}

impl LinkFunction {
    /// Outputs stay strictly inside the open range even where the exact
    /// value would round onto an endpoint.
    pub fn apply(&self, s: f64) -> f64 {
        match self {
            LinkFunction::Identity => s,
            LinkFunction::Sigmoid => {
                let v = if s >= 0.0 {
                    1.0 / (1.0 + (-s).exp())
                } else {
                    let e = s.exp();
                    e / (1.0 + e)
                };
                v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
            }
            LinkFunction::Exp => s.exp().clamp(f64::MIN_POSITIVE, f64::MAX),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            LinkFunction::Identity => 1.0,
            LinkFunction::Sigmoid => {
                let v = self.apply(s);
                v * (1.0 - v)
            }
            LinkFunction::Exp => s.exp(),
        }
    }

    /// Open range of the link.
    pub fn range(&self) -> Domain {
        let (lo, hi) = match self {
            LinkFunction::Identity => (f64::NEG_INFINITY, f64::INFINITY),
            LinkFunction::Sigmoid => (0.0, 1.0),
            LinkFunction::Exp => (0.0, f64::INFINITY),
        };
        Domain { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LinkFunction::Identity => "identity",
            LinkFunction::Sigmoid => "sigmoid",
            LinkFunction::Exp => "exp",
        }
    }
}

impl FromStr for LinkFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(LinkFunction::Identity),
            "sigmoid" => Ok(LinkFunction::Sigmoid),
            "exp" => Ok(LinkFunction::Exp),
            _ => Err(Error::Config(format!("unknown link {s:?}"))),
        }
    }
}

/// `Σ_k Π_u y_u[k]`.
pub fn multiway_inner(ys: &[&[f64]]) -> Result<f64> {
    let k = match ys.first() {
        Some(y) => y.len(),
        None => return Ok(0.0),
    };
    if let Some(bad) = ys.iter().find(|y| y.len() != k) {
        return Err(Error::DimMismatch { expected: k, got: bad.len() });
    }
    Ok((0..k).map(|c| ys.iter().map(|y| y[c]).product::<f64>()).sum())
}

/// A symmetric similarity function with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    pub embedding: EmbeddingMap,
    pub link: LinkFunction,
    pub arity: usize,
    pub theta: Vec<f64>,
}

/// Embeddings of every node under one parameter snapshot.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    pub k: usize,
    pub values: Vec<f64>,
    pub hidden: Vec<f64>,
    hidden_len: usize,
    stride: usize,
}

impl EmbeddingCache {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn hidden_row(&self, i: usize) -> &[f64] {
        &self.hidden[i * self.stride..i * self.stride + self.hidden_len]
    }
}

impl SimilarityModel {
    pub fn new(embedding: EmbeddingMap, link: LinkFunction, arity: usize, theta: Vec<f64>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Config("tuple order must be >= 1".into()));
        }
        if theta.len() != embedding.param_count() {
            return Err(Error::DimMismatch { expected: embedding.param_count(), got: theta.len() });
        }
        Ok(Self { embedding, link, arity, theta })
    }

    /// Weights ~ Uniform(±1/√fan_in), biases 0.
    pub fn init<R: Rng + ?Sized>(embedding: EmbeddingMap, link: LinkFunction, arity: usize, rng: &mut R) -> Result<Self> {
        let theta = embedding.init_params(rng);
        Self::new(embedding, link, arity, theta)
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.embedding.k];
        let mut scratch = vec![0.0; self.embedding.scratch_len()];
        self.embedding.forward(&self.theta, x, &mut out, &mut scratch);
        out
    }

    /// `∂f_θ(x)/∂θ` as `K` rows of length `q`.
    pub fn embed_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let k = self.embedding.k;
        let mut out = vec![0.0; k];
        let mut scratch = vec![0.0; self.embedding.scratch_len()];
        self.embedding.forward(&self.theta, x, &mut out, &mut scratch);
        (0..k)
            .map(|c| {
                let mut unit = vec![0.0; k];
                unit[c] = 1.0;
                let mut row = vec![0.0; self.param_count()];
                self.embedding.backward(&self.theta, x, &scratch, &unit, &mut row);
                row
            })
            .collect()
    }

    /// Embeds each node once.
    pub fn embed_rows(&self, vectors: &[f64], p: usize, exec: Execution) -> EmbeddingCache {
        let n = vectors.len().checked_div(p).unwrap_or(0);
        let k = self.embedding.k;
        let hl = self.embedding.scratch_len();
        let mut values = vec![0.0; n * k];
        let mut hidden = vec![0.0; n * hl.max(1)];
        let stride = hl.max(1);
        let work = |i: usize, out: &mut [f64], scratch: &mut [f64]| {
            self.embedding.forward(&self.theta, &vectors[i * p..(i + 1) * p], out, &mut scratch[..hl]);
        };
        #[cfg(feature = "parallel")]
        if exec.is_parallel() {
            use rayon::prelude::*;
            values.par_chunks_mut(k).zip(hidden.par_chunks_mut(stride)).enumerate().for_each(|(i, (o, s))| work(i, o, s));
            return EmbeddingCache { k, values, hidden, hidden_len: hl, stride };
        }
        let _ = exec;
        values.chunks_mut(k).zip(hidden.chunks_mut(stride)).enumerate().for_each(|(i, (o, s))| work(i, o, s));
        EmbeddingCache { k, values, hidden, hidden_len: hl, stride }
    }

    /// μ for a tuple of raw data vectors.
    pub fn similarity_of(&self, xs: &[&[f64]]) -> f64 {
        let order = canonical_order(xs);
        let ys: Vec<Vec<f64>> = order.iter().map(|&u| self.embed(xs[u])).collect();
        let refs: Vec<&[f64]> = ys.iter().map(|y| y.as_slice()).collect();
        self.link.apply(inner_product(&refs))
    }

    pub fn similarity(&self, tuple: &TupleView<'_>) -> f64 {
        let xs: Vec<&[f64]> = tuple.vectors().collect();
        self.similarity_of(&xs)
    }

    /// `(μ, ∂μ/∂θ)` for a tuple of raw data vectors.
    pub fn similarity_grad_of(&self, xs: &[&[f64]]) -> (f64, Vec<f64>) {
        let order = canonical_order(xs);
        let k = self.embedding.k;
        let hl = self.embedding.scratch_len();
        let mut ys = vec![0.0; order.len() * k];
        let mut hs = vec![0.0; order.len() * hl];
        for (slot, &u) in order.iter().enumerate() {
            self.embedding.forward(&self.theta, xs[u], &mut ys[slot * k..(slot + 1) * k], &mut hs[slot * hl..(slot + 1) * hl]);
        }
        let refs: Vec<&[f64]> = ys.chunks(k).collect();
        let s = inner_product(&refs);
        let mu = self.link.apply(s);
        let scale = self.link.derivative(s);
        let mut grad = vec![0.0; self.param_count()];
        let mut upstream = vec![0.0; k];
        for (slot, &u) in order.iter().enumerate() {
            others_product(&refs, slot, &mut upstream);
            upstream.iter_mut().for_each(|v| *v *= scale);
            self.embedding.backward(&self.theta, xs[u], &hs[slot * hl..(slot + 1) * hl], &upstream, &mut grad);
        }
        (mu, grad)
    }

    pub fn similarity_grad(&self, tuple: &TupleView<'_>) -> (f64, Vec<f64>) {
        let xs: Vec<&[f64]> = tuple.vectors().collect();
        self.similarity_grad_of(&xs)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: self.embedding.kind,
            p: self.embedding.p,
            k: self.embedding.k,
            h: self.embedding.h,
            link: self.link,
            arity: self.arity,
            theta: self.theta.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_checkpoint())?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        ck.into_model()
    }
}

/// Model checkpoint as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: EmbeddingKind,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "H", default)]
    pub h: usize,
    pub link: LinkFunction,
    #[serde(rename = "U", default = "default_arity")]
    pub arity: usize,
    pub theta: Vec<f64>,
}

fn default_arity() -> usize {
    2
}

impl Checkpoint {
    pub fn into_model(self) -> Result<SimilarityModel> {
        let emb = match self.kind {
            EmbeddingKind::Linear => EmbeddingMap::linear(self.p, self.k)?,
            EmbeddingKind::Mlp1 => EmbeddingMap::mlp1(self.p, self.h, self.k)?,
        };
        SimilarityModel::new(emb, self.link, self.arity, self.theta)
    }
}

/// Positions sorted by their vectors (lexicographic, total order on floats).
/// Evaluating in this order makes results bit-identical under permutation.
pub(crate) fn canonical_order(xs: &[&[f64]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| {
        xs[a].iter().zip(xs[b].iter()).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    });
    order
}

pub(crate) fn inner_product(ys: &[&[f64]]) -> f64 {
    let k = ys[0].len();
    let mut s = 0.0;
    for c in 0..k {
        let mut prod = 1.0;
        for y in ys {
            prod *= y[c];
        }
        s += prod;
    }
    s
}

/// `out[k] = Π_{u ≠ skip} ys[u][k]`.
pub(crate) fn others_product(ys: &[&[f64]], skip: usize, out: &mut [f64]) {
    out.fill(1.0);
    for (u, y) in ys.iter().enumerate() {
        if u == skip {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(y.iter()) {
            *o *= v;
        }
    }
}
