//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numeric code; it only reads data
//! (vectors, weights, θ) out of library types.

#![allow(dead_code)]

use bhlr::{DivergenceKind, EmbeddingKind, Hypernetwork, IndexPolicy, LinkFunction, SimilarityModel};

/// Generating function values straight from the table of generators.
pub fn phi(kind: DivergenceKind, eps: f64, x: f64) -> f64 {
    let xlogx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    match kind {
        DivergenceKind::Logistic => xlogx(x) + xlogx(1.0 - x),
        DivergenceKind::Kl => {
            if x == 0.0 {
                0.0
            } else {
                x * (x + eps).ln() - x
            }
        }
        DivergenceKind::Beta(b) => x.powf(1.0 + b) / (b * (1.0 + b)) - x / b,
        DivergenceKind::ItakuraSaito => -x.ln(),
        DivergenceKind::Inverse => 1.0 / x,
        DivergenceKind::Quadratic => (x * x - x) / 2.0,
        DivergenceKind::Exponential => x.exp(),
        DivergenceKind::DualLogistic => (1.0 + x.exp()).ln(),
    }
}

/// Hand-derived first derivatives.
pub fn phi_prime(kind: DivergenceKind, eps: f64, x: f64) -> f64 {
    match kind {
        DivergenceKind::Logistic => (x / (1.0 - x)).ln(),
        DivergenceKind::Kl => (x + eps).ln() + x / (x + eps) - 1.0,
        DivergenceKind::Beta(b) => (x.powf(b) - 1.0) / b,
        DivergenceKind::ItakuraSaito => -1.0 / x,
        DivergenceKind::Inverse => -1.0 / (x * x),
        DivergenceKind::Quadratic => x - 0.5,
        DivergenceKind::Exponential => x.exp(),
        DivergenceKind::DualLogistic => 1.0 / (1.0 + (-x).exp()),
    }
}

/// Hand-derived second derivatives.
pub fn phi_second(kind: DivergenceKind, eps: f64, x: f64) -> f64 {
    match kind {
        DivergenceKind::Logistic => 1.0 / (x * (1.0 - x)),
        DivergenceKind::Kl => 1.0 / (x + eps) + eps / ((x + eps) * (x + eps)),
        DivergenceKind::Beta(b) => x.powf(b - 1.0),
        DivergenceKind::ItakuraSaito => 1.0 / (x * x),
        DivergenceKind::Inverse => 2.0 / (x * x * x),
        DivergenceKind::Quadratic => 1.0,
        DivergenceKind::Exponential => x.exp(),
        DivergenceKind::DualLogistic => {
            let s = 1.0 / (1.0 + (-x).exp());
            s * (1.0 - s)
        }
    }
}

/// `φ(a) − φ(b) − φ′(b)(a − b)` by definition.
pub fn bregman(kind: DivergenceKind, eps: f64, a: f64, b: f64) -> f64 {
    phi(kind, eps, a) - phi(kind, eps, b) - phi_prime(kind, eps, b) * (a - b)
}

pub fn link(l: LinkFunction, s: f64) -> f64 {
    match l {
        LinkFunction::Identity => s,
        LinkFunction::Sigmoid => 1.0 / (1.0 + (-s).exp()),
        LinkFunction::Exp => s.exp(),
    }
}

/// `f_θ(x)` from the documented θ layout.
pub fn embed(model: &SimilarityModel, theta: &[f64], x: &[f64]) -> Vec<f64> {
    let e = model.embedding;
    let (p, k, h) = (e.p, e.k, e.h);
    match e.kind {
        EmbeddingKind::Linear => (0..k).map(|c| (0..p).map(|j| theta[j * k + c] * x[j]).sum()).collect(),
        EmbeddingKind::Mlp1 => {
            let b1 = h * p;
            let w2 = b1 + h;
            let b2 = w2 + k * h;
            let hidden: Vec<f64> = (0..h)
                .map(|r| {
                    let z = theta[b1 + r] + (0..p).map(|j| theta[r * p + j] * x[j]).sum::<f64>();
                    z.max(0.0)
                })
                .collect();
            (0..k).map(|c| theta[b2 + c] + (0..h).map(|r| theta[w2 + c * h + r] * hidden[r]).sum::<f64>()).collect()
        }
    }
}

/// Hidden pre-activations of an MLP at `x`, empty for linear maps.
pub fn preactivations(model: &SimilarityModel, x: &[f64]) -> Vec<f64> {
    let e = model.embedding;
    if e.kind == EmbeddingKind::Linear {
        return Vec::new();
    }
    let b1 = e.h * e.p;
    (0..e.h).map(|r| model.theta[b1 + r] + (0..e.p).map(|j| model.theta[r * e.p + j] * x[j]).sum::<f64>()).collect()
}

pub fn similarity(model: &SimilarityModel, theta: &[f64], xs: &[&[f64]]) -> f64 {
    let ys: Vec<Vec<f64>> = xs.iter().map(|x| embed(model, theta, x)).collect();
    let s: f64 = (0..model.embedding.k).map(|c| ys.iter().map(|y| y[c]).product::<f64>()).sum();
    link(model.link, s)
}

/// The index set by brute force over `[n]^U`.
pub fn index_set(net: &Hypernetwork) -> Vec<Vec<usize>> {
    let (n, arity) = (net.n(), net.arity());
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity];
    let total = n.pow(arity as u32);
    for mut code in 0..total {
        for slot in (0..arity).rev() {
            idx[slot] = code % n;
            code /= n;
        }
        let keep = match net.policy() {
            IndexPolicy::AllTuples => true,
            IndexPolicy::DistinctEntries => (0..arity).all(|a| (a + 1..arity).all(|b| idx[a] != idx[b])),
            IndexPolicy::IncreasingOnly => idx.windows(2).all(|w| w[0] < w[1]),
            IndexPolicy::Explicit => net.explicit_indices().iter().any(|e| e.as_slice() == idx.as_slice()),
        };
        if keep {
            out.push(idx.clone());
        }
    }
    out
}

/// Weight lookup by scanning stored edges for a permutation match.
pub fn weight(net: &Hypernetwork, idx: &[usize]) -> f64 {
    let mut key = idx.to_vec();
    key.sort_unstable();
    net.edges()
        .find(|(e, _)| {
            let mut s = e.as_slice().to_vec();
            s.sort_unstable();
            s == key
        })
        .map(|(_, w)| w)
        .unwrap_or(0.0)
}

/// Mean of `d(η w, μ)` over the index set, all from the reference code.
pub fn loss(
    kind: DivergenceKind,
    eps: f64,
    eta: f64,
    model: &SimilarityModel,
    theta: &[f64],
    net: &Hypernetwork,
    tuples: &[(Vec<usize>, f64)],
) -> f64 {
    let total: f64 = tuples
        .iter()
        .map(|(idx, w)| {
            let xs: Vec<&[f64]> = idx.iter().map(|&i| net.vector(i)).collect();
            bregman(kind, eps, eta * w, similarity(model, theta, &xs))
        })
        .sum();
    total / tuples.len() as f64
}

/// Index set paired with weights, for repeated loss evaluation.
pub fn weighted_index_set(net: &Hypernetwork) -> Vec<(Vec<usize>, f64)> {
    index_set(net)
        .into_iter()
        .map(|i| {
            let w = weight(net, &i);
            (i, w)
        })
        .collect()
}

/// Central differences with step `h·max(1, |θ_i|)`.
pub fn central_difference(theta: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let step = h * theta[i].abs().max(1.0);
            probe[i] = theta[i] + step;
            let up = f(&probe);
            probe[i] = theta[i] - step;
            let down = f(&probe);
            probe[i] = theta[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pairwise definition of ROC-AUC.
pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            den += 1.0;
            num += if scores[i] > scores[j] {
                1.0
            } else if scores[i] == scores[j] {
                0.5
            } else {
                0.0
            };
        }
    }
    num / den
}
