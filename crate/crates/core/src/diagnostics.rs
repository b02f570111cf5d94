//! Self-checks behind the `gradcheck` command: analytic versus
//! finite-difference gradients, and the sampler's expected gradient versus
//! the scaled full gradient.

use crate::error::Result;
use crate::hypernet::Hypernetwork;
use crate::loss::{full_gradient, full_loss, LossSpec};
use crate::sampler::{stochastic_gradient, support_set, EmptyPositivePolicy, Minibatch, Sampler, SamplerConfig};
use crate::simfn::SimilarityModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub expected: Vec<f64>,
    pub actual: Vec<f64>,
    /// `‖actual − expected‖∞ / max(1, ‖expected‖∞)`.
    pub rel_error: f64,
    pub abs_error: f64,
}

impl Comparison {
    fn new(expected: Vec<f64>, actual: Vec<f64>) -> Self {
        let abs_error = expected.iter().zip(&actual).map(|(e, a)| (e - a).abs()).fold(0.0, f64::max);
        let scale = expected.iter().map(|e| e.abs()).fold(1.0, f64::max);
        Self { rel_error: abs_error / scale, abs_error, expected, actual }
    }
}

/// Central differences of [`full_loss`] with step `h·max(1, |θ_i|)`.
pub fn finite_difference_gradient(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork, h: f64) -> Result<Vec<f64>> {
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(model.param_count());
    for i in 0..model.param_count() {
        let step = h * model.theta[i].abs().max(1.0);
        probe.theta[i] = model.theta[i] + step;
        let up = full_loss(spec, &probe, net)?;
        probe.theta[i] = model.theta[i] - step;
        let down = full_loss(spec, &probe, net)?;
        probe.theta[i] = model.theta[i];
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

pub fn gradient_check(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork, h: f64) -> Result<Comparison> {
    let numeric = finite_difference_gradient(spec, model, net, h)?;
    Ok(Comparison::new(numeric, full_gradient(spec, model, net)?))
}

/// Exact expectation of the stochastic gradient over the sampler's
/// randomness. Given the key, with-replacement draws make the expected sum
/// over a slice equal to the whole-slice sum, so each key contributes its
/// exhaustive minibatch, weighted by the key law (conditioned on a positive
/// when empty slices are redrawn).
pub fn expected_stochastic_gradient(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    let sampler = Sampler::new(net, cfg.clone())?;
    let keys = if cfg.u.is_empty() { vec![Vec::new()] } else { support_set(net, &cfg.u) };
    let mut probs: Vec<f64> = match &cfg.j_distribution {
        crate::sampler::JDistribution::Uniform => vec![1.0; keys.len()],
        crate::sampler::JDistribution::Custom(w) => w.clone(),
    };
    if cfg.empty_positive == EmptyPositivePolicy::Redraw {
        for (p, j) in probs.iter_mut().zip(&keys) {
            if sampler.slice_positives(j).is_empty() {
                *p = 0.0;
            }
        }
    }
    let total: f64 = probs.iter().sum();
    let mut expected = vec![0.0; model.param_count()];
    for (j, p) in keys.iter().zip(&probs) {
        if *p == 0.0 {
            continue;
        }
        let mb = Minibatch {
            positives: sampler.slice_positives(j).to_vec(),
            candidates: net.fixed_slice(&cfg.u, j).collect(),
            s_plus: 1.0,
            s_minus: 1.0,
            fixed_j: None,
        };
        let g = stochastic_gradient(spec, model, net, &mb)?;
        for (e, gi) in expected.iter_mut().zip(&g) {
            *e += p / total * gi;
        }
    }
    Ok(expected)
}

/// Compares the expected stochastic gradient with `α · ∇Q_η`.
pub fn unbiasedness_check(spec: &LossSpec, model: &SimilarityModel, net: &Hypernetwork, cfg: &SamplerConfig) -> Result<Comparison> {
    let alpha = Sampler::new(net, cfg.clone())?.alpha(net);
    let scaled: Vec<f64> = full_gradient(spec, model, net)?.iter().map(|g| alpha * g).collect();
    Ok(Comparison::new(scaled, expected_stochastic_gradient(spec, model, net, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::GeneratingFunction;
    use crate::hypernet::{HyperIndex, IndexPolicy};
    use crate::simfn::{EmbeddingMap, LinkFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checks_pass_on_a_small_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let vectors: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let edges = vec![(HyperIndex::new(&[0, 1]), 1.0), (HyperIndex::new(&[2, 3]), 1.0), (HyperIndex::new(&[4, 1]), 1.0)];
        let net = Hypernetwork::new(2, 2, vectors, edges, IndexPolicy::DistinctEntries).unwrap();
        let model = SimilarityModel::init(EmbeddingMap::mlp1(2, 3, 2).unwrap(), LinkFunction::Sigmoid, 2, &mut rng).unwrap();
        let spec = LossSpec::new(GeneratingFunction::logistic());
        assert!(gradient_check(&spec, &model, &net, 1e-5).unwrap().rel_error < 1e-6);
        let cfg = SamplerConfig::new(vec![0], 1, 2, 0);
        assert!(unbiasedness_check(&spec, &model, &net, &cfg).unwrap().abs_error < 1e-12);
    }
}
