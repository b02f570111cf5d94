//! Projected SGD with constant or `γ/t` steps, Adam, the random stopping
//! time τ, and the training loop that ties them to the sampler.

use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypernet::Hypernetwork;
use crate::loss::{full_loss, full_loss_and_gradient, LossSpec};
use crate::sampler::{stochastic_gradient, Sampler, SamplerConfig};
use crate::simfn::SimilarityModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepRule {
    Constant {
        gamma: f64,
    },
    /// `γ^(t) = γ / t`.
    InverseT {
        gamma: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "beta1")]
        beta1: f64,
        #[serde(default = "beta2")]
        beta2: f64,
        #[serde(default = "adam_eps")]
        eps: f64,
    },
}

fn beta1() -> f64 {
    0.9
}
fn beta2() -> f64 {
    0.999
}
fn adam_eps() -> f64 {
    1e-8
}

impl StepRule {
    pub fn adam(lr: f64) -> Self {
        StepRule::Adam { lr, beta1: beta1(), beta2: beta2(), eps: adam_eps() }
    }

    /// Base step size γ (the learning rate for Adam).
    pub fn gamma(&self) -> f64 {
        match *self {
            StepRule::Constant { gamma } | StepRule::InverseT { gamma } => gamma,
            StepRule::Adam { lr, .. } => lr,
        }
    }

    /// Step size at iteration `t ≥ 1` for the plain SGD rules.
    pub fn step_size(&self, t: usize) -> f64 {
        match *self {
            StepRule::InverseT { gamma } => gamma / t as f64,
            _ => self.gamma(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub rule: StepRule,
    pub weight_decay: f64,
    /// Iteration budget T.
    pub iterations: usize,
    /// Stop at a random τ ∈ [T] with `P(τ = t) ∝ 2γ/t − Hγ²/t²`.
    pub tau_sampling: bool,
    /// Smoothness constant H for τ sampling.
    pub h_estimate: Option<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { rule: StepRule::adam(1e-2), weight_decay: 0.0, iterations: 1000, tau_sampling: false, h_estimate: None }
    }
}

impl Schedule {
    pub fn new(rule: StepRule, iterations: usize) -> Self {
        Self { rule, iterations, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.rule.gamma();
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::Config(format!("step size must be positive, got {g}")));
        }
        if let StepRule::Adam { beta1, beta2, eps, .. } = self.rule {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::Config("Adam needs beta1, beta2 in [0, 1) and eps > 0".into()));
            }
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.tau_sampling {
            let h = self.h_estimate.ok_or_else(|| Error::Config("tau_sampling needs h_estimate".into()))?;
            if !(h > 0.0) {
                return Err(Error::Config("h_estimate must be positive".into()));
            }
            if g >= 2.0 / h {
                return Err(Error::Config(format!("gamma = {g} must be below 2/H = {}", 2.0 / h)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Projection {
    #[default]
    None,
    NonNegative,
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl Projection {
    pub fn validate(&self, q: usize) -> Result<()> {
        if let Projection::Box { lo, hi } = self {
            if lo.len() != q || hi.len() != q {
                return Err(Error::DimMismatch { expected: q, got: lo.len().min(hi.len()) });
            }
            if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                return Err(Error::Config("box projection needs lo <= hi".into()));
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the feasible set, in place.
    pub fn apply(&self, theta: &mut [f64]) {
        match self {
            Projection::None => {}
            Projection::NonNegative => theta.iter_mut().for_each(|x| *x = x.max(0.0)),
            Projection::Box { lo, hi } => {
                for ((x, &l), &h) in theta.iter_mut().zip(lo).zip(hi) {
                    *x = x.clamp(l, h);
                }
            }
        }
    }
}

fn check_finite(grad: &[f64]) -> Result<()> {
    match grad.iter().position(|g| !g.is_finite()) {
        Some(position) => Err(Error::NonFiniteGradient { position }),
        None => Ok(()),
    }
}

fn decayed(theta: &[f64], grad: &[f64], weight_decay: f64) -> Vec<f64> {
    grad.iter().zip(theta).map(|(g, x)| g + weight_decay * x).collect()
}

/// One projected SGD step at iteration `t ≥ 1`.
pub fn sgd_step(theta: &[f64], grad: &[f64], schedule: &Schedule, t: usize, projection: &Projection) -> Result<Vec<f64>> {
    check_finite(grad)?;
    let gamma = schedule.rule.step_size(t.max(1));
    let g = decayed(theta, grad, schedule.weight_decay);
    let mut next: Vec<f64> = theta.iter().zip(&g).map(|(x, g)| x - gamma * g).collect();
    projection.apply(&mut next);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(q: usize) -> Self {
        Self { m: vec![0.0; q], v: vec![0.0; q] }
    }
}

/// One bias-corrected Adam step at iteration `t ≥ 1`, then projection.
pub fn adam_step(
    state: &mut AdamState,
    theta: &[f64],
    grad: &[f64],
    t: usize,
    schedule: &Schedule,
    projection: &Projection,
) -> Result<Vec<f64>> {
    check_finite(grad)?;
    let StepRule::Adam { lr, beta1, beta2, eps } = schedule.rule else {
        return Err(Error::Config("adam_step needs an Adam step rule".into()));
    };
    let g = decayed(theta, grad, schedule.weight_decay);
    let t = t.max(1) as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let mut next = theta.to_vec();
    for i in 0..next.len() {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        next[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    projection.apply(&mut next);
    Ok(next)
}

/// Unnormalized masses `2γ/t − Hγ²/t²` for `t = 1..=T`.
pub fn tau_masses(schedule: &Schedule) -> Result<Vec<f64>> {
    let g = schedule.rule.gamma();
    let h = schedule.h_estimate.ok_or_else(|| Error::Config("tau sampling needs h_estimate".into()))?;
    if !(h > 0.0) || g >= 2.0 / h || !(g > 0.0) {
        return Err(Error::Config(format!("tau sampling needs 0 < gamma < 2/H, got gamma = {g}, H = {h}")));
    }
    if schedule.iterations == 0 {
        return Err(Error::Config("tau sampling needs at least one iteration".into()));
    }
    Ok((1..=schedule.iterations)
        .map(|t| {
            let t = t as f64;
            2.0 * g / t - h * g * g / (t * t)
        })
        .collect())
}

/// Draws the stopping iteration τ ∈ [1, T].
pub fn sample_tau<R: Rng + ?Sized>(schedule: &Schedule, rng: &mut R) -> Result<usize> {
    let masses = tau_masses(schedule)?;
    let law = WeightedIndex::new(&masses).map_err(|e| Error::Config(format!("tau masses: {e}")))?;
    Ok(law.sample(rng) + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub schedule: Schedule,
    pub projection: Projection,
    pub sampler: SamplerConfig,
    /// Follow the exact gradient of the mean loss instead of sampling.
    pub full_batch: bool,
    /// Use `s₊ = s₋ = 1` and `η = 1` regardless of slice sizes.
    pub practical_scaling: bool,
    /// Record history every this many iterations (0 disables it).
    pub eval_every: usize,
    /// Sweep the full training loss at each record (NaN when off).
    pub track_loss: bool,
    /// Whether a larger validation metric is better.
    pub maximize_metric: bool,
    /// Stop after this many records without validation improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::default(),
            projection: Projection::None,
            sampler: SamplerConfig::default(),
            full_batch: false,
            practical_scaling: false,
            eval_every: 100,
            track_loss: true,
            maximize_metric: true,
            patience: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iter: usize,
    /// Full training loss, or NaN when the index set is too large to sweep.
    pub train_loss: f64,
    pub val_metric: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

pub type ValidateFn<'a> = &'a mut dyn FnMut(&SimilarityModel) -> Result<f64>;
pub type RecordFn<'a> = &'a mut dyn FnMut(&HistoryRecord, &SimilarityModel) -> Control;

/// Optional observers of the training loop.
#[derive(Default)]
pub struct Hooks<'a> {
    /// Validation metric computed at every record.
    pub validate: Option<ValidateFn<'a>>,
    /// Called after every record; returning `Stop` ends training early.
    pub on_record: Option<RecordFn<'a>>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: SimilarityModel,
    /// Best model by validation metric, with its iteration and score.
    pub best: Option<(usize, f64, SimilarityModel)>,
    pub history: Vec<HistoryRecord>,
    pub iterations_run: usize,
    pub tau: Option<usize>,
    pub adam: Option<AdamState>,
}

/// Runs projected SGD or Adam from `model` for T iterations (or τ).
pub fn train(net: &Hypernetwork, spec: &LossSpec, model: SimilarityModel, cfg: &TrainConfig, mut hooks: Hooks<'_>) -> Result<TrainedModel> {
    cfg.schedule.validate()?;
    cfg.projection.validate(model.param_count())?;
    spec.validate(&model, net)?;
    if model.arity != net.arity() {
        return Err(Error::DimMismatch { expected: net.arity(), got: model.arity });
    }
    let mut spec = *spec;
    if cfg.practical_scaling {
        spec.eta_scale = 1.0;
    }
    let mut sampler = if cfg.full_batch { None } else { Some(Sampler::new(net, cfg.sampler.clone())?) };
    let tau = if cfg.schedule.tau_sampling {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.sampler.seed);
        rng.set_stream(cfg.sampler.stream.wrapping_add(1 << 32));
        Some(sample_tau(&cfg.schedule, &mut rng)?)
    } else {
        None
    };
    let total = tau.unwrap_or(cfg.schedule.iterations);
    let mut model = model;
    let mut adam = matches!(cfg.schedule.rule, StepRule::Adam { .. }).then(|| AdamState::new(model.param_count()));
    let mut history = Vec::new();
    let mut best: Option<(usize, f64, SimilarityModel)> = None;
    let mut stale = 0usize;
    let start = Instant::now();
    let mut iterations_run = 0;

    let mut record = |iter: usize, model: &SimilarityModel, last_loss: Option<f64>| -> Result<Control> {
        let train_loss = match last_loss {
            Some(l) => l,
            None if !cfg.track_loss => f64::NAN,
            None => match full_loss(&spec, model, net) {
                Ok(l) => l,
                Err(Error::TooManyTuples { .. }) => f64::NAN,
                Err(e) => return Err(e),
            },
        };
        let val_metric = match hooks.validate.as_mut() {
            Some(f) => Some(f(model)?),
            None => None,
        };
        let rec = HistoryRecord { iter, train_loss, val_metric, elapsed_ms: start.elapsed().as_secs_f64() * 1e3 };
        let mut control = Control::Continue;
        if let Some(m) = val_metric {
            let better = match &best {
                None => true,
                Some((_, b, _)) => (cfg.maximize_metric && m > *b) || (!cfg.maximize_metric && m < *b),
            };
            if better {
                best = Some((iter, m, model.clone()));
                stale = 0;
            } else {
                stale += 1;
                if cfg.patience.is_some_and(|p| stale >= p) {
                    control = Control::Stop;
                }
            }
        }
        if let Some(f) = hooks.on_record.as_mut() {
            if f(&rec, model) == Control::Stop {
                control = Control::Stop;
            }
        }
        history.push(rec);
        Ok(control)
    };

    for t in 1..=total {
        let (loss_before, grad) = match sampler.as_mut() {
            None => {
                let (l, g) = full_loss_and_gradient(&spec, &model, net)?;
                (Some(l), g)
            }
            Some(s) => {
                let mut mb = s.draw(net)?;
                if cfg.practical_scaling {
                    mb.s_plus = if mb.positives.is_empty() { 0.0 } else { 1.0 };
                    mb.s_minus = 1.0;
                }
                (None, stochastic_gradient(&spec, &model, net, &mb)?)
            }
        };
        let at_record = cfg.eval_every > 0 && (t - 1) % cfg.eval_every == 0;
        if at_record && record(t - 1, &model, loss_before)? == Control::Stop {
            break;
        }
        model.theta = match adam.as_mut() {
            Some(state) => adam_step(state, &model.theta, &grad, t, &cfg.schedule, &cfg.projection)?,
            None => sgd_step(&model.theta, &grad, &cfg.schedule, t, &cfg.projection)?,
        };
        iterations_run = t;
    }
    if cfg.eval_every > 0 {
        record(iterations_run, &model, None)?;
    }
    Ok(TrainedModel { model, best, history, iterations_run, tau, adam })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projected_sgd_example() {
        let s = Schedule::new(StepRule::Constant { gamma: 0.5 }, 1);
        let next = sgd_step(&[1.0, -2.0], &[1.0, 1.0], &s, 1, &Projection::NonNegative).unwrap();
        assert_eq!(next, vec![0.5, 0.0]);
        let same = sgd_step(&[1.0, -2.0], &[0.0, 0.0], &s, 1, &Projection::None).unwrap();
        assert_eq!(same, vec![1.0, -2.0]);
    }

    #[test]
    fn inverse_t_halves() {
        let s = Schedule::new(StepRule::InverseT { gamma: 0.8 }, 2);
        let a = sgd_step(&[0.0], &[1.0], &s, 1, &Projection::None).unwrap()[0];
        let b = sgd_step(&[0.0], &[1.0], &s, 2, &Projection::None).unwrap()[0];
        assert_eq!(a, 2.0 * b);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let s = Schedule::new(StepRule::Constant { gamma: 0.5 }, 1);
        assert!(matches!(sgd_step(&[0.0, 0.0], &[0.0, f64::NAN], &s, 1, &Projection::None), Err(Error::NonFiniteGradient { position: 1 })));
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        let s = Schedule::new(StepRule::adam(0.01), 1);
        let mut st = AdamState::new(3);
        let next = adam_step(&mut st, &[0.0; 3], &[3.0, -0.2, 0.0], 1, &s, &Projection::None).unwrap();
        assert!((next[0] + 0.01).abs() < 1e-9);
        assert!((next[1] - 0.01).abs() < 1e-9);
        assert_eq!(next[2], 0.0);
    }

    #[test]
    fn box_projection_is_idempotent_clamp() {
        let p = Projection::Box { lo: vec![-1.0, 0.0], hi: vec![1.0, 0.5] };
        let mut x = vec![3.0, -2.0];
        p.apply(&mut x);
        assert_eq!(x, vec![1.0, 0.0]);
        let y = x.clone();
        p.apply(&mut x);
        assert_eq!(x, y);
        assert!(Projection::Box { lo: vec![1.0], hi: vec![0.0] }.validate(1).is_err());
    }

    #[test]
    fn tau_two_point_law() {
        let s = Schedule { tau_sampling: true, h_estimate: Some(1.0), ..Schedule::new(StepRule::InverseT { gamma: 1.0 }, 2) };
        let m = tau_masses(&s).unwrap();
        let total: f64 = m.iter().sum();
        assert!((m[0] / total - 4.0 / 7.0).abs() < 1e-15);
        assert!((m[1] / total - 3.0 / 7.0).abs() < 1e-15);
        let one = Schedule { iterations: 1, ..s };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..100).all(|_| sample_tau(&one, &mut rng).unwrap() == 1));
        let bad = Schedule { rule: StepRule::InverseT { gamma: 2.0 }, ..s };
        assert!(sample_tau(&bad, &mut rng).is_err());
        assert!(bad.validate().is_err());
    }
}
