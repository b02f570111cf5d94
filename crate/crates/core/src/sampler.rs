//! Hyper-relational minibatch sampler and the stochastic gradient it feeds.
//!
//! With `v ≥ 1` fixed positions `u`, a key `j` is drawn from the keys whose
//! slice `I(j) = {i : i[u] = j}` is non-empty. Then `m₊` positives and `m₋`
//! candidates are drawn uniformly, with replacement, from that slice. The
//! scale factors `s₊ = |P(j)|/m₊` and `s₋ = |I(j)|/m₋` make
//!
//! `g̃ = s₋ Σ_cand μφ″(μ)∂μ − η s₊ Σ_pos wφ″(μ)∂μ`
//!
//! an unbiased estimate of `α·∇Q_η`, with `α = |I|/|K_u|` (or `|I|` when no
//! position is fixed).
//!
//! Randomness comes from ChaCha8 seeded with `seed` on stream `stream`, so two
//! samplers with the same pair emit identical minibatch sequences on every
//! platform.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypernet::{binomial, HyperIndex, Hypernetwork, IndexPolicy};
use crate::loss::{backprop_nodes, inner_for, scatter_tuple, sorted, tuple_error, LossSpec};
use crate::par::Execution;
use crate::simfn::SimilarityModel;

/// Key spaces up to this size may be listed explicitly.
const MAX_LISTED_KEYS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum JDistribution {
    #[default]
    Uniform,
    /// Probabilities over the support keys in lexicographic order.
    Custom(Vec<f64>),
}

/// What to do when the drawn slice holds no positive tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyPositivePolicy {
    /// Draw a new key, up to `max_retries` times.
    #[default]
    Redraw,
    /// Keep the slice and emit no positives (`s₊ = 0`), which keeps the
    /// estimate unbiased.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Fixed positions, strictly increasing, fewer than the arity. Empty means v = 0.
    pub u: Vec<usize>,
    pub j_distribution: JDistribution,
    pub m_plus: usize,
    pub m_minus: usize,
    pub seed: u64,
    pub stream: u64,
    /// Use whole slices instead of sampling (s₊ = s₋ = 1).
    pub exhaustive: bool,
    pub empty_positive: EmptyPositivePolicy,
    pub max_retries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            u: vec![0],
            j_distribution: JDistribution::Uniform,
            m_plus: 1,
            m_minus: 5,
            seed: 0,
            stream: 0,
            exhaustive: false,
            empty_positive: EmptyPositivePolicy::Redraw,
            max_retries: 100,
        }
    }
}

impl SamplerConfig {
    pub fn new(u: Vec<usize>, m_plus: usize, m_minus: usize, seed: u64) -> Self {
        Self { u, m_plus, m_minus, seed, ..Self::default() }
    }

    /// Every tuple of the index set in every minibatch.
    pub fn full_batch() -> Self {
        Self { u: Vec::new(), exhaustive: true, ..Self::default() }
    }

    pub fn v(&self) -> usize {
        self.u.len()
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        if self.u.len() >= arity.max(1) {
            return Err(Error::Config(format!("v = {} must be below the arity {arity}", self.u.len())));
        }
        if self.u.windows(2).any(|w| w[0] >= w[1]) || self.u.iter().any(|&x| x >= arity) {
            return Err(Error::Config(format!("u = {:?} must be strictly increasing positions below {arity}", self.u)));
        }
        if !self.exhaustive && (self.m_plus == 0 || self.m_minus == 0) {
            return Err(Error::Config("m_plus and m_minus must be positive".into()));
        }
        if let JDistribution::Custom(w) = &self.j_distribution {
            if self.u.is_empty() {
                return Err(Error::Config("custom j distribution needs v >= 1".into()));
            }
            if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::Config("custom j weights must be a probability vector".into()));
            }
        }
        Ok(())
    }
}

/// One draw of the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub positives: Vec<HyperIndex>,
    pub candidates: Vec<HyperIndex>,
    pub s_plus: f64,
    pub s_minus: f64,
    pub fixed_j: Option<Vec<usize>>,
}

/// How keys are drawn from the support set.
#[derive(Debug, Clone)]
enum KeyDraw {
    /// v = 0: the single empty key.
    Whole,
    /// Closed-form uniform draw for the implicit policies.
    Implicit,
    /// Listed support keys with their sampling law.
    Listed(Vec<Vec<usize>>, Option<WeightedIndex<f64>>),
}

/// Slice-based minibatch sampler bound to one network and one RNG stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
    keys: KeyDraw,
    support_len: u128,
    positives: BTreeMap<Vec<usize>, Vec<HyperIndex>>,
    /// Slice members by key, only under the explicit policy.
    explicit_slices: BTreeMap<Vec<usize>, Vec<HyperIndex>>,
}

fn key_of(index: &[usize], u: &[usize]) -> Vec<usize> {
    u.iter().map(|&p| index[p]).collect()
}

/// `𝒦_u`: keys `j ∈ [n]^v` with a non-empty slice, in lexicographic order.
pub fn support_set(net: &Hypernetwork, u: &[usize]) -> Vec<Vec<usize>> {
    if net.policy() == IndexPolicy::Explicit {
        let mut keys: Vec<Vec<usize>> = net.explicit_indices().iter().map(|i| key_of(i.as_slice(), u)).collect();
        keys.sort_unstable();
        keys.dedup();
        return keys;
    }
    let v = u.len();
    let n = net.n();
    let mut out = Vec::new();
    if v > 0 && n == 0 {
        return out;
    }
    let mut j = vec![0usize; v];
    loop {
        if net.slice_len(u, &j) > 0 {
            out.push(j.clone());
        }
        // odometer over [n]^v
        let mut pos = v;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            j[pos] += 1;
            if j[pos] < n {
                break;
            }
            j[pos] = 0;
        }
    }
}

/// `|𝒦_u|` in closed form for the implicit policies.
pub fn support_len(net: &Hypernetwork, u: &[usize]) -> u128 {
    let n = net.n() as u128;
    let arity = net.arity() as u128;
    let v = u.len() as u128;
    if v == 0 {
        return u128::from(net.index_count() > 0);
    }
    match net.policy() {
        IndexPolicy::AllTuples => n.pow(v as u32),
        IndexPolicy::DistinctEntries if n >= arity => (0..v).map(|k| n - k).product(),
        IndexPolicy::IncreasingOnly if n >= arity => binomial(n - arity + v, v),
        IndexPolicy::Explicit => support_set(net, u).len() as u128,
        _ => 0,
    }
}

impl Sampler {
    pub fn new(net: &Hypernetwork, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate(net.arity())?;
        let u = cfg.u.clone();
        let mut positives: BTreeMap<Vec<usize>, Vec<HyperIndex>> = BTreeMap::new();
        for idx in net.positives() {
            positives.entry(key_of(idx.as_slice(), &u)).or_default().push(idx);
        }
        let mut explicit_slices: BTreeMap<Vec<usize>, Vec<HyperIndex>> = BTreeMap::new();
        if net.policy() == IndexPolicy::Explicit {
            for idx in net.explicit_indices() {
                explicit_slices.entry(key_of(idx.as_slice(), &u)).or_default().push(idx.clone());
            }
        }
        let support_len = support_len(net, &u);
        if support_len == 0 {
            return Err(Error::Config("the index set is empty".into()));
        }
        let listed = |weights: Option<&Vec<f64>>| -> Result<KeyDraw> {
            if support_len > MAX_LISTED_KEYS {
                return Err(Error::Config(format!("{support_len} support keys are too many to list")));
            }
            let keys = if net.policy() == IndexPolicy::Explicit { explicit_slices.keys().cloned().collect() } else { support_set(net, &u) };
            let law = match weights {
                None => None,
                Some(w) => {
                    if w.len() != keys.len() {
                        return Err(Error::LengthMismatch { left: w.len(), right: keys.len() });
                    }
                    Some(WeightedIndex::new(w).map_err(|e| Error::Config(format!("custom j weights: {e}")))?)
                }
            };
            Ok(KeyDraw::Listed(keys, law))
        };
        let keys = match (&cfg.j_distribution, net.policy()) {
            _ if u.is_empty() => KeyDraw::Whole,
            (JDistribution::Custom(w), _) => listed(Some(w))?,
            (JDistribution::Uniform, IndexPolicy::Explicit) => listed(None)?,
            (JDistribution::Uniform, _) => KeyDraw::Implicit,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(cfg.stream);
        Ok(Self { cfg, rng, keys, support_len, positives, explicit_slices })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    /// `|𝒦_u|`.
    pub fn support_len(&self) -> u128 {
        self.support_len
    }

    /// The factor α in `E[g̃] = α ∇Q_η`.
    pub fn alpha(&self, net: &Hypernetwork) -> f64 {
        net.index_count() as f64 / self.support_len as f64
    }

    /// Positive tuples of the slice with key `j`.
    pub fn slice_positives(&self, j: &[usize]) -> &[HyperIndex] {
        self.positives.get(j).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Draws a key, honouring the empty-positive policy.
    pub fn draw(&mut self, net: &Hypernetwork) -> Result<Minibatch> {
        let mut retries = 0;
        loop {
            let j = self.draw_key(net);
            if !self.slice_positives(&j).is_empty() || self.cfg.empty_positive == EmptyPositivePolicy::Skip {
                return self.draw_in_slice(net, j);
            }
            if retries == self.cfg.max_retries {
                return Err(Error::EmptyPositiveSlice { retries });
            }
            retries += 1;
        }
    }

    fn draw_key(&mut self, net: &Hypernetwork) -> Vec<usize> {
        let rng = &mut self.rng;
        match &self.keys {
            KeyDraw::Whole => Vec::new(),
            KeyDraw::Listed(keys, None) => keys[rng.random_range(0..keys.len())].clone(),
            KeyDraw::Listed(keys, Some(law)) => keys[law.sample(rng)].clone(),
            KeyDraw::Implicit => implicit_key(net, &self.cfg.u, rng),
        }
    }

    /// Minibatch inside the slice with key `j` (the empty key when v = 0).
    pub fn draw_in_slice(&mut self, net: &Hypernetwork, j: Vec<usize>) -> Result<Minibatch> {
        let u = &self.cfg.u;
        let slice_len = if u.is_empty() { net.index_count() } else { net.slice_len(u, &j) };
        if slice_len == 0 {
            return Err(Error::Config(format!("key {j:?} has an empty slice")));
        }
        let pos_pool = self.positives.get(&j).map(Vec::as_slice).unwrap_or(&[]);
        let fixed_j = (!u.is_empty()).then(|| j.clone());
        if self.cfg.exhaustive {
            let candidates: Vec<HyperIndex> = net.fixed_slice(u, &j).collect();
            return Ok(Minibatch { positives: pos_pool.to_vec(), candidates, s_plus: 1.0, s_minus: 1.0, fixed_j });
        }
        let (m_plus, m_minus) = (self.cfg.m_plus, self.cfg.m_minus);
        let rng = &mut self.rng;
        let positives: Vec<HyperIndex> = if pos_pool.is_empty() {
            Vec::new()
        } else {
            (0..m_plus).map(|_| pos_pool[rng.random_range(0..pos_pool.len())].clone()).collect()
        };
        let candidates: Vec<HyperIndex> = match self.explicit_slices.get(&j) {
            Some(pool) => (0..m_minus).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect(),
            None => (0..m_minus).map(|_| implicit_member(net, u, &j, rng)).collect(),
        };
        let s_plus = if positives.is_empty() { 0.0 } else { pos_pool.len() as f64 / m_plus as f64 };
        Ok(Minibatch { positives, candidates, s_plus, s_minus: slice_len as f64 / m_minus as f64, fixed_j })
    }
}

/// Uniform key over `𝒦_u` for the implicit policies.
fn implicit_key<R: Rng + ?Sized>(net: &Hypernetwork, u: &[usize], rng: &mut R) -> Vec<usize> {
    let n = net.n();
    let v = u.len();
    match net.policy() {
        IndexPolicy::AllTuples => (0..v).map(|_| rng.random_range(0..n)).collect(),
        IndexPolicy::DistinctEntries => {
            let mut j: Vec<usize> = Vec::with_capacity(v);
            while j.len() < v {
                let x = rng.random_range(0..n);
                if !j.contains(&x) {
                    j.push(x);
                }
            }
            j
        }
        IndexPolicy::IncreasingOnly => {
            // j_k − u_k is a non-decreasing sequence in [0, n − U]; draw it as
            // a v-subset of [0, n − U + v) shifted by rank (stars and bars).
            let span = n - net.arity() + v;
            let mut z = rand::seq::index::sample(rng, span, v).into_vec();
            z.sort_unstable();
            z.iter().enumerate().map(|(k, &zk)| zk - k + u[k]).collect()
        }
        IndexPolicy::Explicit => unreachable!("explicit keys are listed"),
    }
}

/// Uniform member of the slice with key `j` for the implicit policies.
fn implicit_member<R: Rng + ?Sized>(net: &Hypernetwork, u: &[usize], j: &[usize], rng: &mut R) -> HyperIndex {
    let n = net.n();
    let arity = net.arity();
    let mut entries = vec![usize::MAX; arity];
    for (&p, &x) in u.iter().zip(j) {
        entries[p] = x;
    }
    match net.policy() {
        IndexPolicy::AllTuples => {
            for e in entries.iter_mut().filter(|e| **e == usize::MAX) {
                *e = rng.random_range(0..n);
            }
        }
        IndexPolicy::DistinctEntries => {
            let mut used: Vec<usize> = j.to_vec();
            for e in entries.iter_mut().filter(|e| **e == usize::MAX) {
                let x = loop {
                    let x = rng.random_range(0..n);
                    if !used.contains(&x) {
                        break x;
                    }
                };
                used.push(x);
                *e = x;
            }
        }
        IndexPolicy::IncreasingOnly => {
            // each run of free positions picks a sorted subset of its gap
            let mut start = 0;
            let mut lo = 0usize;
            let anchors = u.iter().zip(j).map(|(&p, &x)| (p, x)).chain(std::iter::once((arity, n)));
            for (p, hi) in anchors {
                let slots = p - start;
                if slots > 0 {
                    let mut pick = rand::seq::index::sample(rng, hi - lo, slots).into_vec();
                    pick.sort_unstable();
                    for (e, x) in entries[start..p].iter_mut().zip(pick) {
                        *e = lo + x;
                    }
                }
                start = p + 1;
                lo = hi + 1;
            }
        }
        IndexPolicy::Explicit => unreachable!("explicit slices are listed"),
    }
    HyperIndex::new(&entries)
}

/// Stochastic gradient `s₋ Σ_cand μφ″(μ)∂μ − η s₊ Σ_pos wφ″(μ)∂μ`.
///
/// Only the nodes touched by the minibatch are embedded.
pub fn stochastic_gradient(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork, mb: &Minibatch) -> Result<Vec<f64>> {
    let p = net.p();
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    for idx in mb.positives.iter().chain(&mb.candidates) {
        for &i in idx.as_slice() {
            if i >= net.n() {
                return Err(Error::OutOfRange { id: i, n: net.n() });
            }
            let next = local.len();
            local.entry(i).or_insert(next);
        }
    }
    let mut vectors = vec![0.0; local.len() * p];
    for (&i, &slot) in &local {
        vectors[slot * p..(slot + 1) * p].copy_from_slice(net.vector(i));
    }
    let cache = model.embed_rows(&vectors, p, Execution::Sequential);
    let k = cache.k;
    let mut node_grads = vec![0.0; local.len() * k];
    let mut buf = Vec::new();
    let eta = spec.eta_scale;
    let g = &spec.divergence;
    let mut add = |idx: &HyperIndex, positive: bool| -> Result<()> {
        let nodes = sorted(idx.as_slice());
        let remapped: crate::loss::Sorted = nodes.iter().map(|i| local[i]).collect();
        let s = inner_for(&cache, &remapped);
        let mu = spec.clamp(model.link.apply(s));
        let hess = g.phi_hess(mu).map_err(|e| tuple_error(idx.as_slice(), e))?;
        let coeff = if positive { -eta * mb.s_plus * net.weight(&nodes) * hess } else { mb.s_minus * mu * hess } * model.link.derivative(s);
        if coeff != 0.0 {
            scatter_tuple(&cache, &remapped, coeff, &mut node_grads, &mut buf);
        }
        Ok(())
    };
    for idx in &mb.candidates {
        add(idx, false)?;
    }
    for idx in &mb.positives {
        add(idx, true)?;
    }
    let grad = backprop_nodes(model, &vectors, p, &cache, &node_grads, Execution::Sequential);
    if let Some(position) = grad.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteGradient { position });
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::GeneratingFunction;
    use crate::loss::full_gradient;
    use crate::simfn::{EmbeddingMap, LinkFunction};
    use std::collections::BTreeSet;

    fn small_net() -> Hypernetwork {
        // 0-based version of the 7-node skip-gram illustration; node 4 links to 0, 2, 5, 6
        let edges: Vec<_> = [0, 2, 5, 6].iter().map(|&b| (HyperIndex::new(&[4, b]), 1.0)).collect();
        Hypernetwork::new(2, 1, vec![0.0; 7], edges, IndexPolicy::AllTuples).unwrap()
    }

    #[test]
    fn skip_gram_slice() {
        let net = small_net();
        let mut s = Sampler::new(&net, SamplerConfig::new(vec![0], 1, 3, 1)).unwrap();
        let pos: Vec<_> = s.slice_positives(&[4]).iter().map(|i| i.as_slice().to_vec()).collect();
        assert_eq!(pos, vec![vec![4, 0], vec![4, 2], vec![4, 5], vec![4, 6]]);
        let mb = s.draw_in_slice(&net, vec![4]).unwrap();
        assert_eq!(mb.s_minus, 7.0 / 3.0);
        assert_eq!(mb.s_plus, 4.0);
        assert_eq!(mb.candidates.len(), 3);
        assert!(mb.candidates.iter().all(|c| c.as_slice()[0] == 4));
        assert_eq!(mb.fixed_j, Some(vec![4]));
    }

    #[test]
    fn exhaustive_v0_is_full_batch() {
        let net = small_net();
        let mut s = Sampler::new(&net, SamplerConfig::full_batch()).unwrap();
        let mb = s.draw(&net).unwrap();
        assert_eq!(mb.candidates.len(), 49);
        assert_eq!((mb.s_plus, mb.s_minus), (1.0, 1.0));
        assert_eq!(mb.positives.len(), 8);
    }

    #[test]
    fn exhaustive_gradient_is_scaled_full_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vectors: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let edges = vec![(HyperIndex::new(&[0, 1]), 0.7), (HyperIndex::new(&[2, 3]), 0.2), (HyperIndex::new(&[1, 1]), 0.9)];
        let net = Hypernetwork::new(2, 3, vectors, edges, IndexPolicy::AllTuples).unwrap();
        let model = SimilarityModel::init(EmbeddingMap::mlp1(3, 4, 2).unwrap(), LinkFunction::Sigmoid, 2, &mut rng).unwrap();
        let spec = LossSpec::new(GeneratingFunction::logistic());
        let mb = Sampler::new(&net, SamplerConfig::full_batch()).unwrap().draw(&net).unwrap();
        let g = stochastic_gradient(&spec, &model, &net, &mb).unwrap();
        let full = full_gradient(&spec, &model, &net).unwrap();
        for (a, b) in g.iter().zip(&full) {
            assert!((a - 16.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn support_sets() {
        let net = Hypernetwork::new(2, 1, vec![0.0; 4], Vec::new(), IndexPolicy::AllTuples).unwrap();
        assert_eq!(support_set(&net, &[0]), vec![vec![0], vec![1], vec![2], vec![3]]);
        let explicit =
            Hypernetwork::with_explicit(2, 1, vec![0.0; 4], Vec::new(), vec![HyperIndex::new(&[0, 1]), HyperIndex::new(&[0, 2])]).unwrap();
        assert_eq!(support_set(&explicit, &[0]), vec![vec![0]]);
        assert_eq!(explicit.fixed_slice(&[0], &[3]).count(), 0);
    }

    #[test]
    fn support_len_closed_forms() {
        for policy in [IndexPolicy::AllTuples, IndexPolicy::DistinctEntries, IndexPolicy::IncreasingOnly] {
            for arity in 1..=4 {
                let net = Hypernetwork::new(arity, 1, vec![0.0; 6], Vec::new(), policy).unwrap();
                for v in 0..arity {
                    for u in position_sets(arity, v) {
                        let listed = if v == 0 { 1 } else { support_set(&net, &u).len() as u128 };
                        assert_eq!(support_len(&net, &u), listed, "{policy:?} U={arity} u={u:?}");
                    }
                }
            }
        }
    }

    fn position_sets(arity: usize, v: usize) -> Vec<Vec<usize>> {
        (0..1usize << arity).filter(|m| m.count_ones() as usize == v).map(|m| (0..arity).filter(|b| m >> b & 1 == 1).collect()).collect()
    }

    #[test]
    fn implicit_draws_stay_in_slice_and_cover_it() {
        for policy in [IndexPolicy::AllTuples, IndexPolicy::DistinctEntries, IndexPolicy::IncreasingOnly] {
            let net = Hypernetwork::new(3, 1, vec![0.0; 6], Vec::new(), policy).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for u in [vec![], vec![0], vec![1], vec![0, 2], vec![1, 2]] {
                let keys = if u.is_empty() { vec![vec![]] } else { support_set(&net, &u) };
                for _ in 0..200 {
                    let j = if u.is_empty() { vec![] } else { implicit_key(&net, &u, &mut rng) };
                    assert!(keys.contains(&j), "{policy:?} {u:?} {j:?}");
                }
                let j = keys[keys.len() / 2].clone();
                let slice: BTreeSet<HyperIndex> = net.fixed_slice(&u, &j).collect();
                let mut seen = BTreeSet::new();
                for _ in 0..4000 {
                    let m = implicit_member(&net, &u, &j, &mut rng);
                    assert!(slice.contains(&m), "{policy:?} {u:?} {m:?}");
                    seen.insert(m);
                }
                assert_eq!(seen, slice);
            }
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let net = small_net();
        let cfg = SamplerConfig::new(vec![1], 2, 4, 77);
        let mut a = Sampler::new(&net, cfg.clone()).unwrap();
        let mut b = Sampler::new(&net, cfg.clone()).unwrap();
        for _ in 0..50 {
            assert_eq!(a.draw(&net).unwrap(), b.draw(&net).unwrap());
        }
        let mut c = Sampler::new(&net, SamplerConfig { stream: 1, ..cfg }).unwrap();
        let differs = (0..20).any(|_| a.draw(&net).unwrap() != c.draw(&net).unwrap());
        assert!(differs);
    }

    #[test]
    fn empty_positive_policies() {
        let net = Hypernetwork::new(2, 1, vec![0.0; 3], Vec::new(), IndexPolicy::AllTuples).unwrap();
        let mut redraw = Sampler::new(&net, SamplerConfig::new(vec![0], 1, 2, 0)).unwrap();
        assert!(matches!(redraw.draw(&net), Err(Error::EmptyPositiveSlice { retries: 100 })));
        let cfg = SamplerConfig { empty_positive: EmptyPositivePolicy::Skip, ..SamplerConfig::new(vec![0], 1, 2, 0) };
        let mb = Sampler::new(&net, cfg).unwrap().draw(&net).unwrap();
        assert!(mb.positives.is_empty());
        assert_eq!(mb.s_plus, 0.0);
    }

    #[test]
    fn custom_key_law() {
        let net = small_net();
        let cfg = SamplerConfig {
            j_distribution: JDistribution::Custom(vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            ..SamplerConfig::new(vec![0], 1, 1, 5)
        };
        let mut s = Sampler::new(&net, cfg).unwrap();
        for _ in 0..20 {
            assert_eq!(s.draw(&net).unwrap().fixed_j, Some(vec![4]));
        }
        let bad = SamplerConfig { j_distribution: JDistribution::Custom(vec![0.5, 0.5]), ..SamplerConfig::new(vec![0], 1, 1, 5) };
        assert!(Sampler::new(&net, bad).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(vec![0, 1], 1, 1, 0).validate(2).is_err());
        assert!(SamplerConfig::new(vec![1, 0], 1, 1, 0).validate(3).is_err());
        assert!(SamplerConfig::new(vec![0], 0, 1, 0).validate(2).is_err());
        assert!(SamplerConfig::new(vec![0, 2], 1, 1, 0).validate(3).is_ok());
    }

    #[test]
    fn uniform_key_frequencies() {
        let net = Hypernetwork::new(2, 1, vec![0.0; 5], vec![(HyperIndex::new(&[0, 0]), 1.0)], IndexPolicy::DistinctEntries).unwrap();
        let cfg = SamplerConfig { empty_positive: EmptyPositivePolicy::Skip, ..SamplerConfig::new(vec![1], 1, 1, 11) };
        let mut s = Sampler::new(&net, cfg).unwrap();
        let draws = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            counts[s.draw(&net).unwrap().fixed_j.unwrap()[0]] += 1;
        }
        let p = 0.2;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * se, "{counts:?}");
        }
    }
}
