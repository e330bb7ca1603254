//! Order-preserving job execution, data-parallel when the `parallel`
//! feature is enabled.

/// How a batch of independent jobs is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// `workers = 0` uses every available core.
    Parallel {
        workers: usize,
    },
}

impl Execution {
    /// `1` is serial, anything else parallel.
    pub fn from_workers(workers: usize) -> Self {
        if workers == 1 {
            Execution::Serial
        } else {
            Execution::Parallel { workers }
        }
    }
}

/// Applies `f` to every item; results keep the input order whatever the
/// execution mode. Without the `parallel` feature everything runs serially.
pub fn map_ordered<T, U, F>(items: &[T], execution: Execution, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match execution {
        Execution::Serial => items.iter().map(f).collect(),
        Execution::Parallel { workers } => parallel(items, workers, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running serially");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, U, F>(items: &[T], _workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let serial = map_ordered(&items, Execution::Serial, |x| x * x);
        let parallel = map_ordered(&items, Execution::Parallel { workers: 3 }, |x| x * x);
        assert_eq!(serial, parallel);
        assert_eq!(serial[17], 289);
    }

    #[test]
    fn worker_count_selects_mode() {
        assert_eq!(Execution::from_workers(1), Execution::Serial);
        assert_eq!(Execution::from_workers(0), Execution::Parallel { workers: 0 });
    }
}
