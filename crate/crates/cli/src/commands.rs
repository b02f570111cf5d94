use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bhlr::diagnostics::{gradient_check, unbiasedness_check};
use bhlr::hypernet::{load_hyperedges, load_vectors, write_hyperedges, write_vectors, TensorFile};
use bhlr::loss::DEFAULT_MAX_TUPLES;
use bhlr::metrics::{mse, roc_auc};
use bhlr::optim::{train, HistoryRecord, Hooks};
use bhlr::synth::{generate, lift_links_to_hyperlinks, negative_candidate_protocol, EvalSet, LiftMode, Noise, PlantedModel, VectorLaw};
use bhlr::{
    DivergenceKind, EmbeddingKind, EmbeddingMap, GeneratingFunction, HyperIndex, Hypernetwork, IndexPolicy, LinkFunction, LossSpec,
    SamplerConfig, SimilarityModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Metric, NetworkFiles, RunConfig};
use crate::error::{CliError, CliResult, WithPath};

pub fn load_network(files: &NetworkFiles, arity: usize, policy: IndexPolicy) -> CliResult<Hypernetwork> {
    let (_, p, vectors) = load_vectors(&files.vectors).at(&files.vectors)?;
    let edges = match &files.edges {
        Some(path) => load_hyperedges(path, arity).at(path)?,
        None => BTreeMap::new(),
    };
    let blame = files.edges.as_deref().unwrap_or(&files.vectors);
    Hypernetwork::new(arity, p, vectors, edges, policy).at(blame)
}

fn load_model(path: &Path) -> CliResult<SimilarityModel> {
    SimilarityModel::load(path).at(path)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Held-out scoring for one metric, with the AUC candidate set fixed up front.
pub struct Scorer {
    eval: Option<EvalSet>,
}

impl Scorer {
    pub fn new(metric: Metric, net: &Hypernetwork, per_anchor: usize, seed: u64) -> Self {
        let eval = (metric == Metric::RocAuc).then(|| negative_candidate_protocol(net, per_anchor, seed));
        Self { eval }
    }

    pub fn score(&self, model: &SimilarityModel, net: &Hypernetwork) -> bhlr::Result<f64> {
        match &self.eval {
            Some(eval) => {
                let scores: Vec<f64> = eval.indices.iter().map(|i| model.similarity(&net.tuple(i.as_slice()))).collect();
                roc_auc(&scores, &eval.labels())
            }
            None => {
                let mut predicted = Vec::new();
                let mut observed = Vec::new();
                for idx in net.enumerate() {
                    predicted.push(model.similarity(&net.tuple(idx.as_slice())));
                    observed.push(net.weight(idx.as_slice()));
                }
                mse(&predicted, &observed)
            }
        }
    }
}

fn write_history(path: &Path, history: &[HistoryRecord]) -> CliResult<()> {
    let fail = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(["iter", "train_loss", "val_metric", "elapsed_ms"]).map_err(fail)?;
    for r in history {
        let val = r.val_metric.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.iter.to_string(), r.train_loss.to_string(), val, r.elapsed_ms.to_string()]).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn cmd_train(cfg: &RunConfig) -> CliResult<()> {
    let net = match (&cfg.data.train, &cfg.data.tensor) {
        (Some(files), _) => load_network(files, cfg.data.arity, cfg.data.policy)?,
        (None, Some(path)) => {
            let tensor = TensorFile::load(path).at(path)?;
            tensor.to_hypernetwork().at(path)?
        }
        (None, None) => unreachable!("validated"),
    };
    let validation = match &cfg.data.validation {
        Some(files) => Some(load_network(files, net.arity(), cfg.data.policy)?),
        None => None,
    };
    if let Some(v) = &validation {
        if v.p() != net.p() {
            return Err(CliError::data(format!("validation vectors have dimension {} but training vectors have {}", v.p(), net.p())));
        }
    }
    let model = match &cfg.model.init {
        Some(path) => load_model(path)?,
        None => {
            let m = &cfg.model;
            let emb = match m.embedding {
                EmbeddingKind::Linear => EmbeddingMap::linear(net.p(), m.k)?,
                EmbeddingKind::Mlp1 => EmbeddingMap::mlp1(net.p(), m.hidden, m.k)?,
            };
            SimilarityModel::init(emb, m.link, net.arity(), &mut ChaCha8Rng::seed_from_u64(m.seed))?
        }
    };
    let spec = cfg.loss.spec()?;
    let tc = cfg.train_config();

    let scorer = validation.as_ref().map(|v| Scorer::new(cfg.metric, v, cfg.protocol.per_anchor, cfg.protocol.seed));
    let mut validate = |m: &SimilarityModel| match (&scorer, &validation) {
        (Some(s), Some(v)) => s.score(m, v),
        _ => unreachable!(),
    };
    let hooks = Hooks { validate: if scorer.is_some() { Some(&mut validate) } else { None }, on_record: None };
    spec.validate(&model, &net)?;
    // inputs are valid from here on, so domain failures mean divergence
    let out = train(&net, &spec, model, &tc, hooks).map_err(|e| match e {
        bhlr::Error::TupleDomain { .. } | bhlr::Error::Domain { .. } => CliError::numeric(e.to_string()),
        other => other.into(),
    })?;

    let guarded = !spec.force && net.index_count() > DEFAULT_MAX_TUPLES;
    if tc.track_loss && !guarded {
        if let Some(r) = out.history.iter().find(|r| !r.train_loss.is_finite()) {
            return Err(CliError::numeric(format!("training loss is {} at iteration {}", r.train_loss, r.iter)));
        }
    }
    if let Some(i) = out.model.theta.iter().position(|t| !t.is_finite()) {
        return Err(CliError::numeric(format!("parameter {i} is not finite after training")));
    }

    let o = &cfg.output;
    out.model.save(&o.checkpoint).at(&o.checkpoint)?;
    let best = out.best.as_ref().map(|b| &b.2).unwrap_or(&out.model);
    best.save(&o.best_checkpoint).at(&o.best_checkpoint)?;
    write_history(&o.history, &out.history)?;
    if let (Some(path), Some(state)) = (&o.optimizer_state, &out.adam) {
        let text = serde_json::to_string_pretty(state).map_err(|e| CliError::data(e.to_string()))?;
        write_text(path, &text)?;
    }
    match &out.best {
        Some((iter, value, _)) => {
            println!("trained {} iterations; best validation {} = {value} at iteration {iter}", out.iterations_run, cfg.metric.key())
        }
        None => println!("trained {} iterations", out.iterations_run),
    }
    Ok(())
}

/// Reads whitespace-separated node ids, one tuple per line.
fn read_tuples(path: &Path, arity: usize, n: usize) -> CliResult<Vec<Vec<usize>>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::data(format!("{}:{}: bad node id in {line:?}", path.display(), k + 1)))?;
        if ids.len() != arity {
            return Err(CliError::data(format!(
                "{}:{}: expected {arity} ids for the model's arity, got {}",
                path.display(),
                k + 1,
                ids.len()
            )));
        }
        if let Some(&id) = ids.iter().find(|&&i| i >= n) {
            return Err(CliError::data(format!("{}:{}: node id {id} out of range for n = {n}", path.display(), k + 1)));
        }
        out.push(ids);
    }
    Ok(out)
}

pub fn cmd_predict(model: &Path, vectors: &Path, tuples: &Path, out: Option<&Path>) -> CliResult<()> {
    let model = load_model(model)?;
    let (n, p, data) = load_vectors(vectors).at(vectors)?;
    if n > 0 && p != model.embedding.p {
        return Err(CliError::data(format!("{}: vectors have dimension {p}, model expects {}", vectors.display(), model.embedding.p)));
    }
    let mut text = String::new();
    for t in read_tuples(tuples, model.arity, n)? {
        let xs: Vec<&[f64]> = t.iter().map(|&i| &data[i * p..(i + 1) * p]).collect();
        text.push_str(&format!("{}\n", model.similarity_of(&xs)));
    }
    emit(out, &text)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_text(path, text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::data(format!("stdout: {e}"))),
    }
}

pub struct EvalArgs<'a> {
    pub model: &'a Path,
    pub files: NetworkFiles,
    pub policy: IndexPolicy,
    pub metric: Metric,
    pub per_anchor: usize,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

pub fn cmd_eval(a: EvalArgs<'_>) -> CliResult<()> {
    let model = load_model(a.model)?;
    let net = load_network(&a.files, model.arity, a.policy)?;
    if net.p() != model.embedding.p {
        return Err(CliError::data(format!(
            "{}: vectors have dimension {}, model expects {}",
            a.files.vectors.display(),
            net.p(),
            model.embedding.p
        )));
    }
    let value = Scorer::new(a.metric, &net, a.per_anchor, a.seed).score(&model, &net)?;
    let mut obj = serde_json::Map::new();
    obj.insert(a.metric.key().into(), serde_json::json!(value));
    emit(a.out, &format!("{}\n", serde_json::Value::Object(obj)))
}

pub struct GenerateArgs {
    pub n: usize,
    pub arity: usize,
    pub p: usize,
    pub k: usize,
    pub hidden: Option<usize>,
    pub link: LinkFunction,
    pub noise: Noise,
    pub gaussian_vectors: bool,
    pub policy: IndexPolicy,
    pub theta_scale: f64,
    pub seed: u64,
    /// Reuse a saved true model; shape and scale options are then ignored.
    pub planted: Option<PathBuf>,
    pub vectors: PathBuf,
    pub edges: PathBuf,
    pub model: Option<PathBuf>,
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let truth = match &a.planted {
        Some(path) => load_model(path)?,
        None => {
            let emb = match a.hidden {
                Some(h) => EmbeddingMap::mlp1(a.p, h, a.k)?,
                None => EmbeddingMap::linear(a.p, a.k)?,
            };
            let mut m = SimilarityModel::init(emb, a.link, a.arity, &mut rng)?;
            m.theta.iter_mut().for_each(|t| *t *= a.theta_scale);
            m
        }
    };
    let p = truth.embedding.p;
    let vector_law = if a.gaussian_vectors { VectorLaw::Gaussian { p } } else { VectorLaw::UniformCube { p } };
    let planted = PlantedModel { true_model: truth, noise: a.noise, vector_law };
    let net = generate(&planted, a.n, planted.true_model.arity, a.policy, rng.random())?;
    write_vectors(&a.vectors, &net).at(&a.vectors)?;
    write_hyperedges(&a.edges, &net).at(&a.edges)?;
    if let Some(path) = &a.model {
        planted.true_model.save(path).at(path)?;
    }
    println!("{} nodes, {} hyperlinks", net.n(), net.edge_count());
    Ok(())
}

pub fn cmd_lift(files: &NetworkFiles, mode: LiftMode, out: &Path) -> CliResult<()> {
    let net = load_network(files, 2, IndexPolicy::DistinctEntries)?;
    let lifted = lift_links_to_hyperlinks(&net, mode).at(files.edges.as_deref().unwrap_or(&files.vectors))?;
    write_hyperedges(out, &lifted).at(out)?;
    println!("{} links lifted to {} hyperlinks", net.edge_count(), lifted.edge_count());
    Ok(())
}

fn link_for(kind: DivergenceKind) -> LinkFunction {
    match kind {
        DivergenceKind::Logistic => LinkFunction::Sigmoid,
        DivergenceKind::Kl | DivergenceKind::Beta(_) | DivergenceKind::ItakuraSaito | DivergenceKind::Inverse => LinkFunction::Exp,
        _ => LinkFunction::Identity,
    }
}

/// Random instance with every canonical tuple weighted, so generators that
/// are infinite at zero stay usable.
fn check_instance(rng: &mut ChaCha8Rng, kind: DivergenceKind, n: usize, arity: usize, policy: IndexPolicy) -> CliResult<Hypernetwork> {
    let p = 3;
    let vectors: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shell = Hypernetwork::new(arity, p, vectors.clone(), Vec::new(), policy)?;
    let dense = matches!(kind, DivergenceKind::ItakuraSaito | DivergenceKind::Inverse);
    let mut edges = Vec::new();
    for idx in shell.enumerate().filter(HyperIndex::is_canonical) {
        if !dense && rng.random_bool(0.5) {
            continue;
        }
        let w = match kind {
            DivergenceKind::Logistic => f64::from(rng.random_bool(0.5)),
            DivergenceKind::Kl | DivergenceKind::Beta(_) => rng.random_range(0.0..3.0),
            DivergenceKind::ItakuraSaito | DivergenceKind::Inverse => rng.random_range(0.2..3.0),
            _ => rng.random_range(-2.0..2.0),
        };
        if w != 0.0 {
            edges.push((idx, w));
        }
    }
    Ok(Hypernetwork::new(arity, p, vectors, edges, policy)?)
}

fn check_model(rng: &mut ChaCha8Rng, kind: EmbeddingKind, link: LinkFunction, arity: usize) -> CliResult<SimilarityModel> {
    let emb = match kind {
        EmbeddingKind::Linear => EmbeddingMap::linear(3, 2)?,
        EmbeddingKind::Mlp1 => EmbeddingMap::mlp1(3, 4, 2)?,
    };
    let theta = (0..emb.param_count()).map(|_| rng.random_range(-0.8..0.8)).collect();
    Ok(SimilarityModel::new(emb, link, arity, theta)?)
}

/// Finite-difference and exact-expectation self checks. Returns whether all passed.
pub fn cmd_gradcheck(seed: u64, tol_fd: f64, tol_unbiased: f64) -> CliResult<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = true;
    let mut report = |name: String, rel: f64, tol: f64| {
        let ok = rel <= tol;
        all &= ok;
        println!("{} {name}: max rel error {rel:.2e} (tolerance {tol:.0e})", if ok { "PASS" } else { "FAIL" });
    };
    for g in GeneratingFunction::all_kinds() {
        for kind in [EmbeddingKind::Linear, EmbeddingKind::Mlp1] {
            let net = check_instance(&mut rng, g.kind(), 5, 2, IndexPolicy::DistinctEntries)?;
            let model = check_model(&mut rng, kind, link_for(g.kind()), 2)?;
            let c = gradient_check(&LossSpec::new(g), &model, &net, 1e-5)?;
            report(format!("gradient {} {kind:?}", g.name()), c.rel_error, tol_fd);
        }
    }
    let cases: [(usize, &[usize]); 4] = [(2, &[]), (2, &[0]), (3, &[1]), (3, &[0, 2])];
    for (arity, u) in cases {
        let g = GeneratingFunction::logistic();
        let net = check_instance(&mut rng, g.kind(), 4, arity, IndexPolicy::DistinctEntries)?;
        let model = check_model(&mut rng, EmbeddingKind::Mlp1, LinkFunction::Sigmoid, arity)?;
        let mut cfg = SamplerConfig::new(u.to_vec(), 2, 3, seed);
        cfg.empty_positive = bhlr::sampler::EmptyPositivePolicy::Skip;
        let c = unbiasedness_check(&LossSpec::new(g), &model, &net, &cfg)?;
        report(format!("unbiasedness U={arity} v={}", u.len()), c.rel_error, tol_unbiased);
    }
    Ok(all)
}
