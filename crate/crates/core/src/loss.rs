//! Empirical Bregman loss over a hypernetwork and its exact gradient.
//!
//! The loss is `Q_η(θ) = (1/|I|) Σ_{i∈I} d_φ(η·w_i, μ_θ(X_i))`, written in the
//! expanded form `φ′(μ)μ − φ(μ) − ηw φ′(μ) + φ(ηw)`. With `η = 1` this is the
//! plain regression loss. The gradient is
//! `(1/|I|) Σ_i φ″(μ_i)(μ_i − η w_i) ∂μ_i/∂θ`, accumulated per node and
//! back-propagated once per node rather than once per tuple.

use smallvec::SmallVec;

use crate::divergence::{DivergenceKind, GeneratingFunction};
use crate::error::{Error, Result};
use crate::hypernet::{Hypernetwork, IndexPolicy};
use crate::par::Execution;
use crate::simfn::{others_product, EmbeddingCache, SimilarityModel};

/// Refuse to stream index sets larger than this unless forced.
pub const DEFAULT_MAX_TUPLES: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub divergence: GeneratingFunction,
    /// Multiplier η applied to every hyperlink weight.
    pub eta_scale: f64,
    /// Predictions are projected this far inside finite domain ends.
    pub clamp_margin: f64,
    pub execution: Execution,
    pub max_tuples: u128,
    pub force: bool,
}

impl LossSpec {
    pub fn new(divergence: GeneratingFunction) -> Self {
        Self {
            divergence,
            eta_scale: 1.0,
            clamp_margin: 1e-7,
            execution: Execution::Sequential,
            max_tuples: DEFAULT_MAX_TUPLES,
            force: false,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta_scale = eta;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.execution = exec;
        self
    }

    pub fn with_clamp_margin(mut self, margin: f64) -> Self {
        self.clamp_margin = margin;
        self
    }

    /// Checks η, the link range against dom(φ), and every weight.
    pub fn validate(&self, model: &SimilarityModel, net: &Hypernetwork) -> Result<()> {
        self.validate_params()?;
        self.validate_link(model)?;
        self.validate_weights(net)
    }

    pub fn validate_params(&self) -> Result<()> {
        if !(self.eta_scale > 0.0 && self.eta_scale.is_finite()) {
            return Err(Error::Config(format!("eta_scale must be positive, got {}", self.eta_scale)));
        }
        if !(self.clamp_margin >= 0.0) {
            return Err(Error::Config("clamp_margin must be non-negative".into()));
        }
        Ok(())
    }

    /// The open range of the link must lie inside dom(φ).
    pub fn validate_link(&self, model: &SimilarityModel) -> Result<()> {
        let range = model.link.range();
        let dom = self.divergence.domain();
        let lo_ok = range.lo > dom.lo || (range.lo == dom.lo && (dom.lo_closed || !range.lo_closed));
        let hi_ok = range.hi < dom.hi || (range.hi == dom.hi && (dom.hi_closed || !range.hi_closed));
        if lo_ok && hi_ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{} link range is not inside the {} domain", model.link.name(), self.divergence.name())))
        }
    }

    /// Every η·w (including the implicit zeros of unobserved tuples) must have finite φ.
    pub fn validate_weights(&self, net: &Hypernetwork) -> Result<()> {
        let g = &self.divergence;
        for (idx, w) in net.edges() {
            g.phi(self.eta_scale * w).map_err(|e| Error::TupleDomain { index: idx.as_slice().to_vec(), source: Box::new(e) })?;
        }
        let has_zeros = match net.policy() {
            IndexPolicy::Explicit => net.explicit_indices().iter().any(|i| net.weight(i.as_slice()) == 0.0),
            _ => net.index_count() > net.positives().len() as u128,
        };
        if has_zeros {
            g.phi(0.0)
                .map_err(|_| Error::Config(format!("zero weights are outside the {} domain; use a divergence defined at 0", g.name())))?;
        }
        Ok(())
    }

    /// Projects a raw prediction into the interior of dom(φ).
    pub fn clamp(&self, mu: f64) -> f64 {
        self.divergence.domain().clamp_inside(mu, self.clamp_margin)
    }

    fn guard(&self, net: &Hypernetwork) -> Result<u128> {
        let size = net.index_count();
        if size == 0 {
            return Err(Error::Config("empty index set".into()));
        }
        if size > self.max_tuples && !self.force {
            return Err(Error::TooManyTuples { size, limit: self.max_tuples });
        }
        Ok(size)
    }

    /// `φ′(μ)μ − φ(μ) − a φ′(μ) + φ(a)` for `a = η w`.
    pub(crate) fn pointwise(&self, target: f64, mu: f64) -> Result<f64> {
        let g = &self.divergence;
        let d1 = g.phi_grad(mu)?;
        Ok(d1 * mu - g.phi(mu)? - target * d1 + g.phi(target)?)
    }

    /// `φ″(μ)(μ − η w)`: the derivative of the pointwise loss in μ.
    pub(crate) fn dloss_dmu(&self, target: f64, mu: f64) -> Result<f64> {
        Ok(self.divergence.phi_hess(mu)? * (mu - target))
    }
}

pub(crate) type Sorted = SmallVec<[usize; 4]>;

pub(crate) fn sorted(index: &[usize]) -> Sorted {
    let mut s = Sorted::from_slice(index);
    s.sort_unstable();
    s
}

pub(crate) fn tuple_error(index: &[usize], e: Error) -> Error {
    Error::TupleDomain { index: index.to_vec(), source: Box::new(e) }
}

/// Raw inner product for a tuple given by sorted node ids.
pub(crate) fn inner_for(cache: &EmbeddingCache, nodes: &[usize]) -> f64 {
    let mut s = 0.0;
    for c in 0..cache.k {
        let mut prod = 1.0;
        for &i in nodes {
            prod *= cache.values[i * cache.k + c];
        }
        s += prod;
    }
    s
}

/// Adds `coeff · ∂s/∂y_{i_u}` to each member's row of `node_grads`.
pub(crate) fn scatter_tuple(cache: &EmbeddingCache, nodes: &[usize], coeff: f64, node_grads: &mut [f64], buf: &mut Vec<f64>) {
    let k = cache.k;
    let rows: SmallVec<[&[f64]; 4]> = nodes.iter().map(|&i| cache.row(i)).collect();
    buf.resize(k, 0.0);
    for (slot, &i) in nodes.iter().enumerate() {
        others_product(&rows, slot, buf);
        let dst = &mut node_grads[i * k..(i + 1) * k];
        for (d, &b) in dst.iter_mut().zip(buf.iter()) {
            *d += coeff * b;
        }
    }
}

/// Per-tuple evaluation shared by loss and gradient.
struct TupleEval {
    target: f64,
    s: f64,
    mu: f64,
}

fn evaluate(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork, cache: &EmbeddingCache, nodes: &[usize]) -> TupleEval {
    let s = inner_for(cache, nodes);
    let mu = spec.clamp(model.link.apply(s));
    TupleEval { target: spec.eta_scale * net.weight(nodes), s, mu }
}

/// Folds over every tuple of the index set, sequentially or split across
/// workers by first entry.
fn fold_tuples<A, F, R>(net: &Hypernetwork, exec: Execution, init: impl Fn() -> A + Sync + Send, fold: F, reduce: R) -> Result<A>
where
    A: Send,
    F: Fn(&mut A, &[usize]) -> Result<()> + Sync + Send,
    R: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        let chunk = |acc: &mut A, it: &mut dyn Iterator<Item = crate::hypernet::HyperIndex>| -> Result<()> {
            for idx in it {
                fold(acc, idx.as_slice())?;
            }
            Ok(())
        };
        if net.policy() == IndexPolicy::Explicit {
            return net
                .explicit_indices()
                .par_chunks(1024)
                .map(|c| {
                    let mut acc = init();
                    chunk(&mut acc, &mut c.iter().cloned())?;
                    Ok(acc)
                })
                .try_reduce(&init, |a, b| Ok(reduce(a, b)));
        }
        return (0..net.n())
            .into_par_iter()
            .map(|v0| {
                let mut acc = init();
                chunk(&mut acc, &mut net.fixed_slice(&[0], &[v0]))?;
                Ok(acc)
            })
            .try_reduce(&init, |a, b| Ok(reduce(a, b)));
    }
    let _ = (exec, &reduce);
    let mut acc = init();
    for idx in net.enumerate() {
        fold(&mut acc, idx.as_slice())?;
    }
    Ok(acc)
}

/// `Q_η(θ)` (the regression loss when η = 1), including the constant term so
/// that a perfect fit scores 0.
pub fn full_loss(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork) -> Result<f64> {
    spec.validate_params()?;
    let size = spec.guard(net)?;
    let cache = model.embed_rows(net.vectors(), net.p(), spec.execution);
    let total = fold_tuples(
        net,
        spec.execution,
        || 0.0f64,
        |acc, index| {
            let nodes = sorted(index);
            let t = evaluate(spec, model, net, &cache, &nodes);
            *acc += spec.pointwise(t.target, t.mu).map_err(|e| tuple_error(index, e))?;
            Ok(())
        },
        |a, b| a + b,
    )?;
    Ok(total / size as f64)
}

/// Exact gradient of [`full_loss`] in θ.
pub fn full_gradient(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork) -> Result<Vec<f64>> {
    full_loss_and_gradient(spec, model, net).map(|(_, g)| g)
}

/// Loss and gradient from one pass over the index set.
pub fn full_loss_and_gradient(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork) -> Result<(f64, Vec<f64>)> {
    spec.validate_params()?;
    let size = spec.guard(net)?;
    let exec = spec.execution;
    let cache = model.embed_rows(net.vectors(), net.p(), exec);
    let k = cache.k;
    let n = net.n();
    let (loss, node_grads, _) = fold_tuples(
        net,
        exec,
        || (0.0f64, vec![0.0; n * k], Vec::new()),
        |(loss, grads, buf), index| {
            let nodes = sorted(index);
            let t = evaluate(spec, model, net, &cache, &nodes);
            *loss += spec.pointwise(t.target, t.mu).map_err(|e| tuple_error(index, e))?;
            let coeff = spec.dloss_dmu(t.target, t.mu).map_err(|e| tuple_error(index, e))? * model.link.derivative(t.s);
            if coeff != 0.0 {
                scatter_tuple(&cache, &nodes, coeff, grads, buf);
            }
            Ok(())
        },
        |(la, mut ga, buf), (lb, gb, _)| {
            ga.iter_mut().zip(&gb).for_each(|(a, b)| *a += b);
            (la + lb, ga, buf)
        },
    )?;
    let scale = 1.0 / size as f64;
    let mut grad = backprop_nodes(model, net.vectors(), net.p(), &cache, &node_grads, exec);
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((loss * scale, grad))
}

/// `Σ_i J_iᵀ node_grads[i]` over nodes with a non-zero upstream row.
pub(crate) fn backprop_nodes(
    model: &SimilarityModel,
    vectors: &[f64],
    p: usize,
    cache: &EmbeddingCache,
    node_grads: &[f64],
    exec: Execution,
) -> Vec<f64> {
    let k = cache.k;
    let n = node_grads.len() / k.max(1);
    let q = model.param_count();
    let one = |grad: &mut Vec<f64>, i: usize| {
        let up = &node_grads[i * k..(i + 1) * k];
        if up.iter().any(|&v| v != 0.0) {
            model.embedding.backward(&model.theta, &vectors[i * p..(i + 1) * p], cache.hidden_row(i), up, grad);
        }
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .fold(
                || vec![0.0; q],
                |mut g, i| {
                    one(&mut g, i);
                    g
                },
            )
            .reduce(
                || vec![0.0; q],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            );
    }
    let _ = exec;
    let mut grad = vec![0.0; q];
    for i in 0..n {
        one(&mut grad, i);
    }
    grad
}

/// Closed-form losses for the logistic, KL (ε = 0), quadratic and β
/// generators, including their additive constants.
pub fn specialized_loss(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork) -> Result<f64> {
    spec.validate_params()?;
    let size = spec.guard(net)?;
    let g = spec.divergence;
    let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    let term: Box<dyn Fn(f64, f64) -> f64 + Sync + Send> = match g.kind() {
        DivergenceKind::Logistic => Box::new(move |w, mu| -w * mu.ln() - (1.0 - w) * (1.0 - mu).ln() + xlogx(w) + xlogx(1.0 - w)),
        DivergenceKind::Kl if g.epsilon() == 0.0 => Box::new(move |w, mu| -w * mu.ln() + mu + xlogx(w) - w),
        DivergenceKind::Quadratic => Box::new(|w, mu| 0.5 * (w - mu) * (w - mu)),
        DivergenceKind::Beta(b) => {
            Box::new(move |w, mu| -w * mu.powf(b) / b + mu.powf(1.0 + b) / (1.0 + b) + w.powf(1.0 + b) / (b * (1.0 + b)))
        }
        _ => return Err(Error::UnsupportedKind(g.to_string())),
    };
    let cache = model.embed_rows(net.vectors(), net.p(), spec.execution);
    let total = fold_tuples(
        net,
        spec.execution,
        || 0.0f64,
        |acc, index| {
            let nodes = sorted(index);
            let t = evaluate(spec, model, net, &cache, &nodes);
            *acc += term(t.target, t.mu);
            Ok(())
        },
        |a, b| a + b,
    )?;
    Ok(total / size as f64)
}

/// Clamped predictions `μ_θ(X_i)` for each index in order.
pub fn predictions(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork) -> Vec<f64> {
    let cache = model.embed_rows(net.vectors(), net.p(), spec.execution);
    net.enumerate()
        .map(|idx| {
            let nodes = sorted(idx.as_slice());
            evaluate(spec, model, net, &cache, &nodes).mu
        })
        .collect()
}
