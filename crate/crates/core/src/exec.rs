//! Sample fan-out.
//!
//! Sample ids are cut into fixed-size chunks; each chunk is folded in id
//! order and the chunk results are merged in chunk order. The arithmetic is
//! therefore the same whether chunks run on one thread or many.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Samples folded into one partial accumulator.
pub const CHUNK: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ExecPolicy {
    #[default]
    Sequential,
    /// Rayon pool with the given worker count (0 = rayon default). Runs
    /// sequentially when built without the `parallel` feature.
    Parallel { workers: usize },
}

/// Evaluates sample chunks under an [`ExecPolicy`].
pub struct Executor {
    policy: ExecPolicy,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("policy", &self.policy).finish()
    }
}

impl Executor {
    pub fn new(policy: ExecPolicy) -> Self {
        #[cfg(feature = "parallel")]
        let pool = match policy {
            ExecPolicy::Sequential => None,
            ExecPolicy::Parallel { workers } => rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .ok(),
        };
        Self {
            policy,
            #[cfg(feature = "parallel")]
            pool,
        }
    }

    pub fn sequential() -> Self {
        Self::new(ExecPolicy::Sequential)
    }

    pub fn policy(&self) -> ExecPolicy {
        self.policy
    }

    /// Folds `ids` chunk by chunk with `fold`, then merges the chunk
    /// accumulators in order into `into`.
    pub fn fold_ids<A, I, F, M>(&self, ids: Range<u64>, into: &mut A, init: I, fold: F, merge: M) -> Result<()>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64) -> Result<()> + Sync,
        M: Fn(&mut A, &A),
    {
        let chunks: Vec<Range<u64>> = chunk_ranges(ids);
        let run = |r: &Range<u64>| -> Result<A> {
            let mut acc = init();
            for id in r.clone() {
                fold(&mut acc, id)?;
            }
            Ok(acc)
        };
        let partials: Vec<Result<A>> = self.map(&chunks, run);
        for p in partials {
            merge(into, &p?);
        }
        Ok(())
    }

    /// Order-preserving map over `items`.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}

fn chunk_ranges(ids: Range<u64>) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut start = ids.start;
    while start < ids.end {
        let end = (start + CHUNK).min(ids.end);
        out.push(start..end);
        start = end;
    }
    out
}
