//! Data-parallel helpers. Without the `parallel` feature every call runs
//! sequentially.

use serde::{Deserialize, Serialize};

/// How independent work items are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether work actually runs on the thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

impl std::str::FromStr for Execution {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "parallel" => Ok(Execution::Parallel),
            "sequential" => Ok(Execution::Sequential),
            other => Err(crate::Error::InvalidInput(format!("unknown execution mode `{other}`"))),
        }
    }
}

/// `items.iter().map(f)`, on the rayon pool when `exec` is parallel. Output
/// order always matches input order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let par = map(Execution::Parallel, &items, |x| x * x);
        let seq = map(Execution::Sequential, &items, |x| x * x);
        assert_eq!(par, seq);
        assert_eq!(par[999], 999 * 999);
    }
}
