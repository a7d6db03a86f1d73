//! Long-time magnetization, coupling sweeps and the localization onset.

use rayon::prelude::*;

use crate::dynamics::{ensemble_polarization, EnsembleConfig, PolarizationTrace, SpinParams};
use crate::error::{invalid, Error, Result};
use crate::fit::fit_line;
use crate::membrane::ModeSet;

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.25;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Tail average of the polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Magnetization {
    pub value: f64,
    /// Mean of the pointwise standard errors over the window; an upper bound
    /// on the standard error of the average.
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub uncertainty: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub g_values: Vec<f64>,
    /// `None` where the ensemble run failed; the reason is in `failures`.
    pub magnetizations: Vec<Option<Magnetization>>,
    pub failures: Vec<(usize, Error)>,
    pub g_c: Option<f64>,
    pub scaling: Option<ScalingFit>,
    pub window_fraction: f64,
}

/// Time average of `p_mean` over the last `window_fraction` of the trace.
/// The window must span at least five Rabi periods.
pub fn magnetization(trace: &PolarizationTrace, window_fraction: f64) -> Result<Magnetization> {
    if !(window_fraction > 0.0 && window_fraction <= 0.5) {
        return Err(invalid("window_fraction", format!("must lie in (0, 0.5], got {window_fraction}")));
    }
    let n = trace.p_mean.len();
    if n < 2 {
        return Err(Error::InsufficientData("trace has fewer than two points".into()));
    }
    let start = ((1.0 - window_fraction) * (n - 1) as f64).floor() as usize;
    let span = trace.times[n - 1] - trace.times[start];
    let needed = 5.0 * 2.0 * std::f64::consts::PI / trace.rabi;
    if span < needed {
        return Err(invalid(
            "window_fraction",
            format!("tail window spans {span}, shorter than five Rabi periods ({needed})"),
        ));
    }
    let len = (n - start) as f64;
    Ok(Magnetization {
        value: trace.p_mean[start..].iter().sum::<f64>() / len,
        stderr: trace.p_stderr[start..].iter().sum::<f64>() / len,
    })
}

/// Magnetization across couplings. Each point rescales every coupling of
/// `template` so the fundamental coupling equals `g0`, and runs the ensemble
/// with seed `cfg.seed + index`. Failed points are recorded, not fatal.
pub fn coupling_sweep(
    template: &ModeSet,
    spin: &SpinParams,
    cfg: &EnsembleConfig,
    g_grid: &[f64],
    window_fraction: f64,
    threshold: f64,
) -> Result<SweepResult> {
    if template.is_empty() {
        return Err(invalid("modes", "a sweep needs a non-empty bath"));
    }
    cfg.validate(template, spin)?;
    let upper = 0.1 * template.cutoff();
    if g_grid.is_empty() || g_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("g_grid", "must be a non-empty increasing sequence"));
    }
    if g_grid.iter().any(|&g| !(g > 0.0 && g <= upper * (1.0 + 1e-12))) {
        return Err(invalid("g_grid", format!("couplings must lie in (0, {upper}]")));
    }
    let base = template.couplings()[0];
    let outcomes: Vec<Result<Magnetization>> = g_grid
        .par_iter()
        .enumerate()
        .map(|(i, &g0)| {
            let modes = template.scaled_couplings(g0 / base)?;
            let point_cfg = EnsembleConfig { seed: cfg.seed.wrapping_add(i as u64), ..cfg.clone() };
            let trace = ensemble_polarization(&modes, spin, &point_cfg)?;
            magnetization(&trace, window_fraction)
        })
        .collect();
    let mut magnetizations = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(m) => magnetizations.push(Some(m)),
            Err(e) => {
                magnetizations.push(None);
                failures.push((i, e));
            }
        }
    }
    let mut sweep =
        SweepResult { g_values: g_grid.to_vec(), magnetizations, failures, g_c: None, scaling: None, window_fraction };
    sweep.g_c = estimate_critical_coupling(&sweep, threshold);
    sweep.scaling = sweep.g_c.and_then(|gc| fit_magnetization_scaling(&sweep, gc).ok());
    Ok(sweep)
}

/// Coupling where `M` crosses `threshold`, linearly interpolated across the
/// last upward crossing. `None` without a bracket.
pub fn estimate_critical_coupling(sweep: &SweepResult, threshold: f64) -> Option<f64> {
    let points: Vec<(f64, f64)> =
        sweep.g_values.iter().zip(&sweep.magnetizations).filter_map(|(&g, m)| m.map(|m| (g, m.value))).collect();
    let below = points.iter().rposition(|&(_, m)| m < threshold)?;
    let &(g_hi, m_hi) = points.get(below + 1)?;
    let (g_lo, m_lo) = points[below];
    Some(g_lo + (threshold - m_lo) * (g_hi - g_lo) / (m_hi - m_lo))
}

/// Slope of `log M` against `log((g0 - g_c)/g_c)` over points above `g_c`
/// whose magnetization exceeds twice its standard error.
pub fn fit_magnetization_scaling(sweep: &SweepResult, g_c: f64) -> Result<ScalingFit> {
    if !(g_c > 0.0) {
        return Err(invalid("g_c", format!("must be positive, got {g_c}")));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = sweep
        .g_values
        .iter()
        .zip(&sweep.magnetizations)
        .filter_map(|(&g, m)| {
            let m = (*m)?;
            (g > g_c && m.value > 0.0 && m.value > 2.0 * m.stderr).then(|| (((g - g_c) / g_c).ln(), m.value.ln()))
        })
        .unzip();
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!("{} usable points above g_c = {g_c}, need at least 4", xs.len())));
    }
    let line = fit_line(&xs, &ys)?;
    Ok(ScalingFit { exponent: line.slope, uncertainty: line.slope_stderr, n_points: xs.len() })
}
