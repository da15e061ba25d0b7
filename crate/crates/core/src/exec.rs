//! Ordered map over independent work items.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it, or with [`Execution::Sequential`], items run in order on the
//! calling thread. Output order always matches input order, so results never
//! depend on scheduling.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// `workers = None` uses rayon's global pool.
    #[default]
    Parallel,
    Workers(usize),
}

impl Execution {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            None => Execution::Parallel,
            Some(0) | Some(1) => Execution::Sequential,
            Some(n) => Execution::Workers(n),
        }
    }
}

pub fn map_ordered<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match exec {
            Execution::Sequential => items.iter().map(f).collect(),
            Execution::Parallel => items.par_iter().map(f).collect(),
            Execution::Workers(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                Err(_) => items.iter().map(f).collect(),
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = exec;
        items.iter().map(f).collect()
    }
}
