//! Execution mode for tuple sums and Monte-Carlo loops.
//!
//! `Parallel` uses rayon when the `parallel` feature is enabled and silently
//! falls back to the sequential path otherwise. Only `Sequential` guarantees a
//! fixed reduction order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}
