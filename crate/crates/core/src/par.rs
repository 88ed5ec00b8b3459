//! Thin wrappers that run on rayon when the `parallel` feature is on and
//! sequentially otherwise (e.g. for wasm builds).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

pub fn map_range<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

pub fn sum<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync + Send) -> f64 {
    #[cfg(feature = "parallel")]
    {
        // Fixed chunking keeps the summation order deterministic.
        items.par_chunks(4096).map(|c| c.iter().map(&f).sum::<f64>()).collect::<Vec<_>>().iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks(4096).map(|c| c.iter().map(&f).sum::<f64>()).collect::<Vec<_>>().iter().sum()
    }
}

pub fn fold3<T: Sync>(items: &[T], f: impl Fn(&T) -> (f64, f64, f64) + Sync + Send) -> (f64, f64, f64) {
    let chunk = |c: &[T]| {
        c.iter().map(&f).fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64, f64)> = items.par_chunks(4096).map(chunk).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64, f64)> = items.chunks(4096).map(chunk).collect();
    parts.into_iter().fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
}
