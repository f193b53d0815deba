//! Data-parallel kernels with a sequential fallback.
//!
//! With the `parallel` feature (default) these run on the rayon global pool;
//! without it they run on the calling thread. Reductions are always split
//! into fixed-size chunks whose partial sums are combined in chunk order, so
//! results are bitwise identical across worker counts and across the two
//! builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Elements per reduction chunk.
pub const CHUNK: usize = 1 << 12;

/// `out[i] = f(i)` for every index.
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
    #[cfg(not(feature = "parallel"))]
    out.iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
}

/// Evaluates `f(0..n)` and collects in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

fn chunk_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product with a fixed-order chunked reduction.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| chunk_dot(x, y))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let partial: Vec<f64> = a
        .chunks(CHUNK)
        .zip(b.chunks(CHUNK))
        .map(|(x, y)| chunk_dot(x, y))
        .collect();
    partial.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    #[cfg(feature = "parallel")]
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
    #[cfg(not(feature = "parallel"))]
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn scale(alpha: f64, y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    y.par_iter_mut().for_each(|yi| *yi *= alpha);
    #[cfg(not(feature = "parallel"))]
    y.iter_mut().for_each(|yi| *yi *= alpha);
}

/// `[⟨b, w⟩ for b in basis]` in one sweep over `w`. Each entry is bitwise
/// equal to [`dot`]`(b, w)`.
pub fn project(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let chunk_partials = |(ci, wc): (usize, &[f64])| -> Vec<f64> {
        let lo = ci * CHUNK;
        basis.iter().map(|b| chunk_dot(&b[lo..lo + wc.len()], wc)).collect()
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<Vec<f64>> = w.par_chunks(CHUNK).enumerate().map(chunk_partials).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Vec<f64>> = w.chunks(CHUNK).enumerate().map(chunk_partials).collect();
    (0..basis.len()).map(|i| partials.iter().map(|p| p[i]).sum()).collect()
}

/// `w += alpha · Σ coeffs[i] · basis[i]`, one sweep over `w`.
pub fn add_combination(alpha: f64, basis: &[Vec<f64>], coeffs: &[f64], w: &mut [f64]) {
    let update = |(ci, wc): (usize, &mut [f64])| {
        let lo = ci * CHUNK;
        for (b, &c) in basis.iter().zip(coeffs) {
            let a = alpha * c;
            for (x, y) in wc.iter_mut().zip(&b[lo..lo + CHUNK.min(b.len() - lo)]) {
                *x += a * y;
            }
        }
    };
    #[cfg(feature = "parallel")]
    w.par_chunks_mut(CHUNK).enumerate().for_each(update);
    #[cfg(not(feature = "parallel"))]
    w.chunks_mut(CHUNK).enumerate().for_each(update);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_chunked_sequential_sum() {
        let n = 3 * CHUNK + 17;
        let a: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let expect: f64 = a
            .chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum();
        assert_eq!(dot(&a, &b).to_bits(), expect.to_bits());
    }

    #[test]
    fn blocked_projection_matches_dots() {
        let n = 2 * CHUNK + 5;
        let basis: Vec<Vec<f64>> =
            (0..3).map(|k| (0..n).map(|i| ((i * (k + 1)) as f64).sin()).collect()).collect();
        let w: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let c = project(&basis, &w);
        for (b, ci) in basis.iter().zip(&c) {
            assert_eq!(dot(b, &w).to_bits(), ci.to_bits());
        }
        let mut y = w.clone();
        add_combination(-1.0, &basis, &c, &mut y);
        let mut z = w.clone();
        for (b, ci) in basis.iter().zip(&c) {
            axpy(-ci, b, &mut z);
        }
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn map_range_preserves_order() {
        assert_eq!(map_range(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn axpy_and_scale() {
        let mut y = vec![1.0, 2.0];
        axpy(2.0, &[1.0, -1.0], &mut y);
        scale(0.5, &mut y);
        assert_eq!(y, vec![1.5, 0.0]);
    }
}
