//! Deterministic reductions. Partial sums are taken over fixed-size chunks
//! and combined in index order, so results do not depend on thread count.

use rayon::prelude::*;

const CHUNK: usize = 8192;

pub fn sum(values: &[f64]) -> f64 {
    sum_by(values, |v| v)
}

pub fn sum_by(values: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    if values.len() <= CHUNK {
        return values.iter().map(|&v| f(v)).sum();
    }
    let partial: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&v| f(v)).sum())
        .collect();
    partial.iter().sum()
}

/// `Σ_idx f(idx)` over `0..len`, chunked like [`sum`].
pub fn sum_indexed(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    if len <= CHUNK {
        return (0..len).map(&f).sum();
    }
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum()
        })
        .collect();
    partial.iter().sum()
}

/// Trapezoid rule on a (possibly non-uniform) abscissa.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_is_order_stable() {
        let v: Vec<f64> = (0..100_003).map(|i| ((i * 7919) % 1000) as f64 * 1e-3).collect();
        let a = sum(&v);
        let b = sum(&v);
        assert_eq!(a.to_bits(), b.to_bits());
        let naive: f64 = v.iter().sum();
        assert!((a - naive).abs() < 1e-6);
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let x = [0.0, 0.3, 1.0, 2.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((trapezoid(&x, &y) - (2.5 * 2.5 + 2.5)).abs() < 1e-14);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert!((linear_slope(&x, &y).unwrap() - 2.0).abs() < 1e-14);
    }
}
