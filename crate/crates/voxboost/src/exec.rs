use std::sync::atomic::{AtomicUsize, Ordering};

use voxboost_core::Executor;

/// Scoped worker threads pulling item indices from a shared counter.
/// Results are returned in index order, so output never depends on `workers`.
#[derive(Debug, Clone, Copy)]
pub struct ThreadExecutor {
    workers: usize,
}

impl ThreadExecutor {
    pub fn new(workers: usize) -> Self {
        Self { workers: workers.max(1) }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Executor for ThreadExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        if self.workers == 1 || n < 2 {
            return (0..n).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let mut parts: Vec<Vec<(usize, T)>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..self.workers.min(n))
                .map(|_| {
                    s.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= n {
                                break out;
                            }
                            out.push((i, f(i)));
                        }
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
        for (i, v) in parts.drain(..).flatten() {
            slots[i] = Some(v);
        }
        slots.into_iter().map(|v| v.expect("every index visited")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        for w in [1, 2, 5] {
            let v = ThreadExecutor::new(w).map(37, |i| i * i);
            assert_eq!(v, (0..37).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
