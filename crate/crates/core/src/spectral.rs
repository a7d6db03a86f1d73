//! Continuous spectral density of a [`ModeSet`] and power-law fits.
//!
//! Each mode contributes a unit-area Lorentzian of full width `gamma_k`
//! weighted by `g_k^2`, so `J(nu) = sum_k g_k^2 Lbar_k(nu)` and the sharp
//! line limit reproduces the exact mode-sum dephasing function.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fit::fit_line;
use crate::grid;
use crate::membrane::ModeSet;

/// Spectral density view over a borrowed mode set.
#[derive(Debug, Clone, Copy)]
pub struct SpectralDensity<'a> {
    modes: &'a ModeSet,
}

/// How `J` is sampled for exponent fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Average of `J` over the cell of the mode nearest to each sample
    /// frequency, bounded by the midpoints to the neighbouring modes. This is
    /// the coarse-grained density and does not depend on whether a sample
    /// lands on a peak or in a valley.
    #[default]
    CellAverage,
    /// Raw point values `J(nu)`.
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// Fitted exponent of `J ~ nu^s`.
    pub s: f64,
    pub nu_lo: f64,
    pub nu_hi: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// Coupling strength of the standard form `2 pi alpha nu_c^{1-s} = g0^2`.
    pub alpha: f64,
    /// Distinct samples that entered the fit.
    pub n_samples: usize,
}

fn lorentzian(nu: f64, omega: f64, gamma: f64) -> f64 {
    let hw = 0.5 * gamma;
    hw / (PI * (hw * hw + (nu - omega) * (nu - omega)))
}

fn lorentzian_weight(a: f64, b: f64, omega: f64, gamma: f64) -> f64 {
    let hw = 0.5 * gamma;
    (((b - omega) / hw).atan() - ((a - omega) / hw).atan()) / PI
}

impl<'a> SpectralDensity<'a> {
    pub fn new(modes: &'a ModeSet) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> &'a ModeSet {
        self.modes
    }

    /// `J(nu)`, summed over every mode.
    pub fn evaluate(&self, nu: f64) -> f64 {
        self.modes.iter().map(|(w, g, gamma)| g * g * lorentzian(nu, w, gamma)).sum()
    }

    /// `int_a^b J(nu) dnu`, exact through the Lorentzian antiderivative.
    pub fn weight_between(&self, a: f64, b: f64) -> f64 {
        self.modes.iter().map(|(w, g, gamma)| g * g * lorentzian_weight(a, b, w, gamma)).sum()
    }

    /// Bounds of the cell around mode `k`: midpoints to the neighbours, with
    /// the outer cells mirrored.
    fn cell(&self, k: usize) -> (f64, f64) {
        let w = self.modes.omegas();
        let n = w.len();
        let left = if k > 0 {
            0.5 * (w[k - 1] + w[k])
        } else if n > 1 {
            (w[0] - 0.5 * (w[1] - w[0])).max(0.0)
        } else {
            0.0
        };
        let right = if k + 1 < n {
            0.5 * (w[k] + w[k + 1])
        } else if n > 1 {
            w[k] + 0.5 * (w[k] - w[k - 1])
        } else {
            2.0 * w[k]
        };
        (left, right)
    }

    /// Coarse-grained density at mode `k`: spectral weight in its cell over
    /// the cell width.
    pub fn cell_average(&self, k: usize) -> f64 {
        let (a, b) = self.cell(k);
        self.weight_between(a, b) / (b - a)
    }

    fn nearest_mode(&self, nu: f64) -> usize {
        let w = self.modes.omegas();
        match w.binary_search_by(|x| x.total_cmp(&nu)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= w.len() => w.len() - 1,
            Err(i) => {
                if nu - w[i - 1] <= w[i] - nu {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Sample `J` at the given frequencies.
    pub fn sample(&self, nus: &[f64]) -> Vec<(f64, f64)> {
        nus.iter().map(|&nu| (nu, self.evaluate(nu))).collect()
    }
}

/// Least-squares exponent of `log J` against `log nu` over `n_points`
/// log-spaced samples in `[nu_lo, nu_hi]`.
pub fn fit_power_exponent(
    sd: &SpectralDensity<'_>,
    nu_lo: f64,
    nu_hi: f64,
    n_points: usize,
    sampling: Sampling,
) -> Result<PowerLawFit> {
    let modes = sd.modes();
    if modes.len() < 2 {
        return Err(invalid("modes", "an exponent fit needs at least two modes"));
    }
    if n_points < 8 {
        return Err(invalid("n_points", format!("need at least 8 samples, got {n_points}")));
    }
    if !(modes.fundamental() < nu_lo && nu_lo < nu_hi && nu_hi < modes.cutoff()) {
        return Err(invalid(
            "window",
            format!(
                "need omega_0 < nu_lo < nu_hi < nu_c, got {} < {nu_lo} < {nu_hi} < {}",
                modes.fundamental(),
                modes.cutoff()
            ),
        ));
    }
    let nus = grid::logarithmic(nu_lo, nu_hi, n_points)?;
    let samples: Vec<(f64, f64)> = match sampling {
        Sampling::Point => sd.sample(&nus),
        Sampling::CellAverage => {
            let mut ks: Vec<usize> = nus.iter().map(|&nu| sd.nearest_mode(nu)).collect();
            ks.dedup();
            ks.iter().map(|&k| (modes.omegas()[k], sd.cell_average(k))).collect()
        }
    };
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} distinct modes in [{nu_lo}, {nu_hi}]", samples.len())));
    }
    if let Some((nu, j)) = samples.iter().find(|(_, j)| !(*j > 0.0)) {
        return Err(Error::InsufficientData(format!("non-positive J = {j} at nu = {nu}")));
    }
    let xs: Vec<f64> = samples.iter().map(|(nu, _)| nu.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, j)| j.ln()).collect();
    let line = fit_line(&xs, &ys)?;
    let s = line.slope;
    let g0 = modes.couplings()[0];
    Ok(PowerLawFit {
        s,
        nu_lo,
        nu_hi,
        residual: line.residual_rms,
        alpha: g0 * g0 / (2.0 * PI * modes.cutoff().powf(1.0 - s)),
        n_samples: samples.len(),
    })
}

/// `alpha` of the standard form `J = 2 pi alpha nu_c^{1-s} nu^s` matched to
/// `g0^2`, with `nu_c` the highest mode frequency.
pub fn standard_form_params(sd: &SpectralDensity<'_>, s: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(invalid("s", format!("exponent must lie in [-1, 1], got {s}")));
    }
    let modes = sd.modes();
    if modes.is_empty() {
        return Err(invalid("modes", "empty mode set"));
    }
    let g0 = modes.couplings()[0];
    Ok(g0 * g0 / (2.0 * PI * modes.cutoff().powf(1.0 - s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membrane::{build_mode_set, Boundary, FrequencyUnit, MembraneSpec};
    use crate::quadrature::{integrate_panels, Tolerance};
    use approx::assert_abs_diff_eq;

    fn single(omega: f64, g: f64, gamma: f64) -> ModeSet {
        ModeSet::from_parts(vec![omega], vec![g], vec![gamma], FrequencyUnit::Fundamental).unwrap()
    }

    fn membrane(boundary: Boundary, n_modes: usize, q: f64) -> ModeSet {
        build_mode_set(&MembraneSpec {
            boundary,
            n_modes,
            g0: 1.0,
            quality_factor: q,
            frequency_unit: FrequencyUnit::Fundamental,
        })
        .unwrap()
    }

    #[test]
    fn single_lorentzian_peak_and_tail() {
        let m = single(1.0, 1.0, 0.01);
        let sd = SpectralDensity::new(&m);
        let peak = sd.evaluate(1.0);
        assert_abs_diff_eq!(peak, 1.0 / (PI * 0.005), epsilon = 1e-3);
        assert_abs_diff_eq!(peak, 63.662, epsilon = 1e-3);
        assert!(sd.evaluate(1.0 + 50.0 * 0.01) <= 1e-3 * peak);
    }

    #[test]
    fn single_mode_unit_area() {
        for &(w, gamma) in &[(1.0, 0.01), (7.0, 0.3), (100.0, 1e-3)] {
            let m = single(w, 1.0, gamma);
            let sd = SpectralDensity::new(&m);
            let lo = w - 200.0 * gamma;
            let hi = w + 200.0 * gamma;
            let breaks: Vec<f64> = (0..=40).map(|i| lo + (hi - lo) * i as f64 / 40.0).collect();
            let (area, _) = integrate_panels(&|nu| sd.evaluate(nu), &breaks, Tolerance::default()).unwrap();
            // Tails beyond +-200 gamma carry 2 atan(1/400)/pi of the weight.
            let tails = 2.0 * (1.0f64 / 400.0).atan() / PI;
            assert!((area - 1.0).abs() < 5e-3);
            assert_abs_diff_eq!(area + tails, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn strained_total_weight() {
        let m = membrane(Boundary::Strained, 200, 1000.0);
        let sd = SpectralDensity::new(&m);
        let total: f64 = m.couplings().iter().map(|g| g * g).sum();
        let mut breaks = vec![0.0];
        for (w, _, gamma) in m.iter() {
            breaks.push(w - 50.0 * gamma);
            breaks.push(w + 50.0 * gamma);
        }
        breaks.push(2.0 * m.cutoff());
        breaks.retain(|&b| b >= 0.0);
        breaks.sort_by(f64::total_cmp);
        let tol = Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 100_000 };
        let (integral, _) = integrate_panels(&|nu| sd.evaluate(nu), &breaks, tol).unwrap();
        assert!((integral / total - 1.0).abs() < 0.01, "{integral} vs {total}");
        assert_abs_diff_eq!(sd.weight_between(0.0, 2.0 * m.cutoff()), integral, epsilon = 1e-6 * total);
    }

    #[test]
    fn fitted_exponents() {
        let clamped = membrane(Boundary::Clamped, 1000, 1000.0);
        let sd = SpectralDensity::new(&clamped);
        let fit = fit_power_exponent(&sd, 10.0, clamped.cutoff() / 10.0, 64, Sampling::CellAverage).unwrap();
        assert!((fit.s + 1.0).abs() < 0.1, "clamped s = {}", fit.s);

        let strained = membrane(Boundary::Strained, 1000, 1000.0);
        let sd = SpectralDensity::new(&strained);
        let fit = fit_power_exponent(&sd, 10.0, strained.cutoff() / 10.0, 64, Sampling::CellAverage).unwrap();
        assert!(fit.s.abs() < 0.05, "strained s = {}", fit.s);
    }

    #[test]
    fn ohmic_synthetic_bath() {
        // Uniform grid with g_k ~ omega_k^{1/2}: J ~ nu.
        let ohmic = |spacing: f64, n: usize, q: f64| {
            let omegas: Vec<f64> = (1..=n).map(|k| k as f64 * spacing).collect();
            let couplings: Vec<f64> = omegas.iter().map(|w| w.sqrt()).collect();
            ModeSet::with_quality_factor(omegas, couplings, q, FrequencyUnit::Fundamental).unwrap()
        };
        // Resolved lines: only the coarse-grained density has a clean slope.
        let m = ohmic(0.01, 2000, 1000.0);
        let sd = SpectralDensity::new(&m);
        let fit = fit_power_exponent(&sd, 0.5, 5.0, 32, Sampling::CellAverage).unwrap();
        assert!((fit.s - 1.0).abs() < 0.02, "cell average: s = {}", fit.s);

        // Overlapping lines: point samples agree.
        let m = ohmic(0.001, 20_000, 200.0);
        let sd = SpectralDensity::new(&m);
        let fit = fit_power_exponent(&sd, 0.5, 5.0, 32, Sampling::Point).unwrap();
        assert!((fit.s - 1.0).abs() < 0.05, "point: s = {}", fit.s);
        let direct = (sd.evaluate(5.0) / sd.evaluate(0.5)).ln() / 10.0f64.ln();
        assert!((direct - 1.0).abs() < 0.05);
    }

    #[test]
    fn fit_window_is_validated() {
        let m = membrane(Boundary::Strained, 50, 100.0);
        let sd = SpectralDensity::new(&m);
        assert!(fit_power_exponent(&sd, 0.5, 10.0, 16, Sampling::CellAverage).is_err());
        assert!(fit_power_exponent(&sd, 2.0, 1e6, 16, Sampling::CellAverage).is_err());
        assert!(fit_power_exponent(&sd, 2.0, 10.0, 4, Sampling::CellAverage).is_err());
    }

    #[test]
    fn standard_form() {
        let m = ModeSet::with_quality_factor(vec![0.5, 1.0], vec![1.0, 1.0], 10.0, FrequencyUnit::Cutoff).unwrap();
        let sd = SpectralDensity::new(&m);
        for s in [-1.0, 0.0, 0.5, 1.0] {
            assert_abs_diff_eq!(standard_form_params(&sd, s).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-15);
        }
        let m =
            ModeSet::with_quality_factor(vec![1.0, 1000.0], vec![0.1, 0.1], 10.0, FrequencyUnit::Fundamental).unwrap();
        let sd = SpectralDensity::new(&m);
        assert_abs_diff_eq!(standard_form_params(&sd, 0.0).unwrap(), 1.5915e-6, epsilon = 1e-10);
        assert_abs_diff_eq!(standard_form_params(&sd, 1.0).unwrap(), 0.01 / (2.0 * PI), epsilon = 1e-15);
        assert!(standard_form_params(&sd, 1.5).is_err());
    }

    #[test]
    fn smoothing_when_lines_overlap() {
        let m = membrane(Boundary::Strained, 400, 10.0);
        let sd = SpectralDensity::new(&m);
        let w = m.omegas();
        for k in 100..399 {
            let (a, b) = (sd.evaluate(w[k]), sd.evaluate(w[k + 1]));
            assert!((a / b - 1.0).abs() < 0.1);
            let mid = sd.evaluate(0.5 * (w[k] + w[k + 1]));
            assert!((mid / a - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn fundamental_peak_dominates_low_edge() {
        for boundary in [Boundary::Clamped, Boundary::Strained] {
            let m = membrane(boundary, 100, 1000.0);
            let sd = SpectralDensity::new(&m);
            let gamma0 = m.dampings()[0];
            let nus = grid::linear(1e-3, 3.0, 300_001).unwrap();
            let (best, _) =
                nus.iter()
                    .map(|&nu| (nu, sd.evaluate(nu)))
                    .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
            assert!((best - 1.0).abs() <= gamma0, "{boundary:?}: max at {best}");
        }
    }
}
