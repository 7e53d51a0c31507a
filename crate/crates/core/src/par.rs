//! Data-parallel map over slices. With the `parallel` feature this runs on
//! rayon; without it, or with one worker, it is a plain sequential loop.
//! Results always come back in input order.

#[cfg(feature = "parallel")]
pub struct Pool {
    pool: Option<rayon::ThreadPool>,
    sequential: bool,
}

#[cfg(not(feature = "parallel"))]
pub struct Pool;

impl Pool {
    /// `None` uses the global pool, `Some(1)` runs sequentially.
    #[cfg(feature = "parallel")]
    pub fn new(workers: Option<usize>) -> Result<Pool, String> {
        let pool = match workers {
            Some(n) if n > 1 => {
                Some(rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?)
            }
            _ => None,
        };
        Ok(Pool { pool, sequential: workers == Some(1) })
    }

    #[cfg(not(feature = "parallel"))]
    pub fn new(_workers: Option<usize>) -> Result<Pool, String> {
        Ok(Pool)
    }

    #[cfg(feature = "parallel")]
    pub fn map<T: Sync, R: Send>(&self, xs: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        use rayon::prelude::*;
        if self.sequential || xs.len() < 2 {
            return xs.iter().map(f).collect();
        }
        match &self.pool {
            Some(pool) => pool.install(|| xs.par_iter().map(&f).collect()),
            None => xs.par_iter().map(f).collect(),
        }
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map<T: Sync, R: Send>(&self, xs: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        xs.iter().map(f).collect()
    }
}

/// Order-preserving parallel filter-map on the global pool.
pub fn par_filter_map<T: Sync, R: Send>(xs: &[T], f: impl Fn(&T) -> Option<R> + Sync + Send) -> Vec<R> {
    let pool = Pool::new(None).expect("the global pool needs no setup");
    pool.map(xs, f).into_iter().flatten().collect()
}
