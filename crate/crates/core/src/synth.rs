//! Synthetic hypernetworks drawn from a planted similarity model, the
//! link-to-hyperlink lifts, and the negative-candidate evaluation protocol.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypernet::{HyperIndex, Hypernetwork, IndexPolicy};
use crate::loss::inner_for;
use crate::par::Execution;
use crate::simfn::{LinkFunction, SimilarityModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Noise {
    /// `w ~ Bernoulli(μ*)`.
    Bernoulli,
    /// `w ~ Poisson(μ*)`.
    Poisson,
    /// `w = μ* + N(0, σ²)`.
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorLaw {
    /// Independent coordinates uniform on [−1, 1].
    UniformCube { p: usize },
    /// Independent standard normal coordinates.
    Gaussian { p: usize },
}

impl VectorLaw {
    pub fn dim(&self) -> usize {
        match *self {
            VectorLaw::UniformCube { p } | VectorLaw::Gaussian { p } => p,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let len = n * self.dim();
        match self {
            VectorLaw::UniformCube { .. } => (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            VectorLaw::Gaussian { .. } => (0..len).map(|_| StandardNormal.sample(rng)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    pub true_model: SimilarityModel,
    pub noise: Noise,
    pub vector_law: VectorLaw,
}

impl PlantedModel {
    pub fn validate(&self) -> Result<()> {
        if self.vector_law.dim() != self.true_model.embedding.p {
            return Err(Error::DimMismatch { expected: self.true_model.embedding.p, got: self.vector_law.dim() });
        }
        let link = self.true_model.link;
        let ok = match self.noise {
            Noise::Bernoulli => link == LinkFunction::Sigmoid,
            Noise::Poisson => matches!(link, LinkFunction::Sigmoid | LinkFunction::Exp),
            Noise::Gaussian { sigma } => sigma >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{:?} noise is incompatible with the {} link", self.noise, link.name())))
        }
    }

    /// One noisy weight for mean `mu`.
    pub fn draw_weight<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> f64 {
        match self.noise {
            Noise::Bernoulli => f64::from(rng.random::<f64>() < mu),
            Noise::Poisson => poisson(mu, rng) as f64,
            Noise::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
        }
    }
}

/// Poisson draw by sequential inversion of the CDF. Means above 30 are split
/// into chunks of at most 30, whose draws add up by Poisson additivity, so the
/// starting mass `e^{−λ}` never underflows.
pub fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    const CHUNK: f64 = 30.0;
    if !(lambda > 0.0) {
        return 0;
    }
    let mut remaining = lambda;
    let mut total = 0;
    while remaining > 0.0 {
        let lam = remaining.min(CHUNK);
        remaining -= lam;
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-lam).exp();
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= lam / k as f64;
            cdf += p;
        }
        total += k;
    }
    total
}

/// Canonical tuples of a fresh network: non-decreasing tuples for
/// `AllTuples`, strictly increasing ones otherwise.
fn canonical_tuples(n: usize, arity: usize, allow_repeats: bool) -> Vec<HyperIndex> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = if allow_repeats { vec![0; arity] } else { (0..arity).collect() };
    if !allow_repeats && arity > n {
        return out;
    }
    loop {
        out.push(HyperIndex::new(&idx));
        // rightmost entry that can still grow
        let mut pos = arity;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            let cap = if allow_repeats { n - 1 } else { n - arity + pos };
            if idx[pos] < cap {
                break;
            }
        }
        idx[pos] += 1;
        for q in pos + 1..arity {
            idx[q] = if allow_repeats { idx[q - 1] } else { idx[q - 1] + 1 };
        }
    }
}

/// Draws vectors then one weight per canonical tuple of `policy`. Self-tuples
/// only exist under `AllTuples`.
pub fn generate(planted: &PlantedModel, n: usize, arity: usize, policy: IndexPolicy, seed: u64) -> Result<Hypernetwork> {
    planted.validate()?;
    if n < arity {
        return Err(Error::Config(format!("need n >= U, got n = {n}, U = {arity}")));
    }
    if policy == IndexPolicy::Explicit {
        return Err(Error::Config("generation needs an implicit index policy".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = planted.vector_law.dim();
    let vectors = planted.vector_law.sample(n, &mut rng);
    let model = &planted.true_model;
    let cache = model.embed_rows(&vectors, p, Execution::Sequential);
    let mut edges = Vec::new();
    for idx in canonical_tuples(n, arity, policy == IndexPolicy::AllTuples) {
        let mu = model.link.apply(inner_for(&cache, idx.as_slice()));
        let w = planted.draw_weight(mu, &mut rng);
        if w != 0.0 {
            edges.push((idx, w));
        }
    }
    Hypernetwork::new(arity, p, vectors, edges, policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftMode {
    /// At least two of the three pairs linked.
    Connected,
    /// All three pairs linked.
    FullyConnected,
}

impl std::str::FromStr for LiftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "connected" => Ok(LiftMode::Connected),
            "fully-connected" => Ok(LiftMode::FullyConnected),
            _ => Err(Error::Config(format!("unknown lift mode {s:?}"))),
        }
    }
}

/// Third-order network on the same vectors: a triple is linked when its
/// induced subgraph is connected (or a triangle).
pub fn lift_links_to_hyperlinks(net2: &Hypernetwork, mode: LiftMode) -> Result<Hypernetwork> {
    if net2.arity() != 2 {
        return Err(Error::Config(format!("lifting needs a pairwise network, got U = {}", net2.arity())));
    }
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (idx, w) in net2.edges() {
        if w != 1.0 {
            return Err(Error::NonBinaryWeights { index: idx.as_slice().to_vec(), weight: w });
        }
        let (a, b) = (idx.as_slice()[0], idx.as_slice()[1]);
        if a != b {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
    }
    let linked = |a: usize, b: usize| adj.get(&a).is_some_and(|s| s.contains(&b));
    let mut triples = BTreeSet::new();
    // every connected triple has a middle node adjacent to the other two
    for (&mid, nbrs) in &adj {
        let nbrs: Vec<usize> = nbrs.iter().copied().collect();
        for (x, &a) in nbrs.iter().enumerate() {
            for &c in &nbrs[x + 1..] {
                if mode == LiftMode::FullyConnected && !linked(a, c) {
                    continue;
                }
                let mut t = [a, mid, c];
                t.sort_unstable();
                triples.insert(HyperIndex::new(&t));
            }
        }
    }
    let policy = match net2.policy() {
        IndexPolicy::AllTuples | IndexPolicy::Explicit => IndexPolicy::DistinctEntries,
        other => other,
    };
    Hypernetwork::new(3, net2.p(), net2.vectors().to_vec(), triples.into_iter().map(|t| (t, 1.0)), policy)
}

/// Evaluation tuples with their true weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    pub indices: Vec<HyperIndex>,
    pub weights: Vec<f64>,
}

impl EvalSet {
    pub fn labels(&self) -> Vec<bool> {
        self.weights.iter().map(|&w| w != 0.0).collect()
    }
}

/// For each anchor node, up to `per_anchor` distinct zero-weight canonical
/// tuples containing it, drawn uniformly, followed by every positive tuple.
/// Negatives shared between anchors appear once. Anchors whose zero tuples
/// run out contribute what was found.
pub fn negative_candidate_protocol(net: &Hypernetwork, per_anchor: usize, seed: u64) -> EvalSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = net.n();
    let arity = net.arity();
    let repeats = net.policy() == IndexPolicy::AllTuples;
    let mut negatives: BTreeSet<HyperIndex> = BTreeSet::new();
    let mut order: Vec<HyperIndex> = Vec::new();
    for anchor in 0..n {
        let mut found = 0;
        let mut attempts = 0;
        let cap = 100 * per_anchor + 1000;
        while found < per_anchor && attempts < cap {
            attempts += 1;
            let mut t = vec![anchor];
            while t.len() < arity {
                let x = rng.random_range(0..n);
                if repeats || !t.contains(&x) {
                    t.push(x);
                }
            }
            t.sort_unstable();
            if !net.contains_index(&t) || net.weight(&t) != 0.0 {
                continue;
            }
            let idx = HyperIndex::new(&t);
            if negatives.insert(idx.clone()) {
                order.push(idx);
            }
            found += 1;
        }
    }
    let positives: Vec<(HyperIndex, f64)> =
        net.edges().filter(|(i, _)| net.contains_index(i.as_slice())).map(|(i, w)| (i.clone(), w)).collect();
    let mut weights = vec![0.0; order.len()];
    for (i, w) in positives {
        order.push(i);
        weights.push(w);
    }
    EvalSet { indices: order, weights }
}
