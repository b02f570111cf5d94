//! Bregman hyperlink regression.
//!
//! Fit a similarity model `μ_θ(X_i) = link(Σ_k Π_u f_θ(x_{i_u})[k])` to the
//! weights of a hypernetwork by minimising a mean Bregman divergence, either
//! over every candidate tuple or with the unbiased slice-based stochastic
//! gradient.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod divergence;
pub mod error;
pub mod hypernet;
pub mod loss;
pub mod metrics;
pub mod optim;
pub mod par;
pub mod sampler;
pub mod simfn;
pub mod synth;

pub use divergence::{DivergenceKind, Domain, GeneratingFunction};
pub use error::{Error, Result};
pub use hypernet::{HyperIndex, Hypernetwork, IndexPolicy};
pub use loss::LossSpec;
pub use optim::{Projection, Schedule, StepRule, TrainConfig};
pub use par::Execution;
pub use sampler::{Minibatch, Sampler, SamplerConfig};
pub use simfn::{EmbeddingKind, EmbeddingMap, LinkFunction, SimilarityModel};
