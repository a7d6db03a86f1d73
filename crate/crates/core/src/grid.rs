//! Sample grids.

use crate::error::{invalid, Result};

/// `n` points from `lo` to `hi` inclusive, uniformly spaced.
pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("grid", format!("need n >= 2 and lo < hi, got n={n}, [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    v[n - 1] = hi;
    Ok(v)
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn logarithmic(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) {
        return Err(invalid("grid", format!("logarithmic grids need lo > 0, got {lo}")));
    }
    let mut v: Vec<f64> = linear(lo.ln(), hi.ln(), n)?.into_iter().map(f64::exp).collect();
    v[0] = lo;
    v[n - 1] = hi;
    Ok(v)
}

/// Uniform grid `0, dt, 2 dt, ...` with `n` points.
pub fn uniform_from_zero(dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * dt).collect()
}
