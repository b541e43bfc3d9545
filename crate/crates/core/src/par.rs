//! Index-ordered parallel map with a sequential fallback.
//!
//! Results always come back in index order, so any reduction done afterwards
//! is independent of how work was scheduled.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// `Parallel` only when the crate was built with the `parallel` feature.
    pub fn effective(self) -> ExecMode {
        if cfg!(feature = "parallel") {
            self
        } else {
            ExecMode::Sequential
        }
    }
}

/// Maps `work` over `0..n` with one `init()` scratch value per worker.
pub fn map_indexed<T, S, I, F>(n: usize, mode: ExecMode, init: I, work: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    match mode.effective() {
        ExecMode::Sequential => {
            let mut scratch = init();
            (0..n).map(|i| work(&mut scratch, i)).collect()
        }
        ExecMode::Parallel => parallel(n, init, work),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, S, I, F>(n: usize, init: I, work: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map_init(init, work).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, S, I, F>(n: usize, init: I, work: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    let mut scratch = init();
    (0..n).map(|i| work(&mut scratch, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let f = |buf: &mut Vec<u64>, i: usize| {
            buf.push(i as u64);
            (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        };
        let a = map_indexed(1000, ExecMode::Sequential, Vec::new, f);
        let b = map_indexed(1000, ExecMode::Parallel, Vec::new, f);
        assert_eq!(a, b);
        assert_eq!(a[3], 3u64.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
}
