//! Exact pure-dephasing dynamics: decoherence function, coherence envelope
//! and the BLP non-Markovianity measure.

use crate::error::{invalid, Error, Result};
use crate::grid;
use crate::membrane::ModeSet;
use crate::quadrature::{integrate_panels, integrate_to_infinity, Tolerance};

/// Evaluation route for the decoherence function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Sharp-line sum over modes.
    #[default]
    ModeSum,
    /// Frequency integral against the Lorentzian-broadened density. Only
    /// defined at `T = 0`.
    Quadrature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DephasingTrace {
    pub times: Vec<f64>,
    /// `Gamma(t) <= 0`.
    pub gamma_tilde: Vec<f64>,
    /// `G(t) = exp(Gamma(t))`.
    pub envelope: Vec<f64>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonMarkovianityResult {
    pub measure: f64,
    /// `(t_i, t_f)` of every ascending run, in time order.
    pub ascending_intervals: Vec<(f64, f64)>,
}

/// `coth(omega / 2T)`, identically 1 at `T = 0`.
pub fn thermal_factor(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        1.0
    } else {
        1.0 / (omega / (2.0 * temperature)).tanh()
    }
}

/// `(1 - cos(nu t)) / nu^2`, written as `2 sin^2(nu t / 2) / nu^2` and
/// expanded for small `nu t`.
pub(crate) fn one_minus_cos_over_square(nu: f64, t: f64) -> f64 {
    let x = nu * t;
    if x.abs() < 1e-4 {
        0.5 * t * t * (1.0 - x * x / 12.0)
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / (nu * nu)
    }
}

/// `sum_k g_k^2 coth(omega_k/2T) (1 - cos omega_k t) / omega_k^2`, the
/// positive phase function shared by the dephasing and NIBA routes.
pub(crate) fn phase_sum(modes: &ModeSet, temperature: f64, t: f64) -> f64 {
    modes.iter().map(|(w, g, _)| g * g * thermal_factor(w, temperature) * one_minus_cos_over_square(w, t)).sum()
}

fn validate_inputs(temperature: f64, times: &[f64]) -> Result<()> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(invalid("temperature", format!("must be finite and >= 0, got {temperature}")));
    }
    if times.first() != Some(&0.0) {
        return Err(invalid("times", "time grid must start at t = 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(invalid("times", "time grid must be strictly increasing and finite"));
    }
    Ok(())
}

/// `int_0^inf Lbar(nu) (1 - cos nu t)/nu^2 dnu` for one unit-area line.
fn broadened_line(omega: f64, gamma: f64, t: f64, tol: Tolerance) -> Result<f64> {
    let hw = 0.5 * gamma;
    let f = |nu: f64| {
        let lorentz = hw / (std::f64::consts::PI * (hw * hw + (nu - omega) * (nu - omega)));
        lorentz * one_minus_cos_over_square(nu, t)
    };
    let mut breaks = vec![0.0];
    for w in [-50.0, -5.0, -1.0, 0.0, 1.0, 5.0, 50.0] {
        let b = omega + w * gamma;
        if b > *breaks.last().unwrap() {
            breaks.push(b);
        }
    }
    // Resolve the cos(nu t) oscillation on the finite part.
    let far = breaks.last().unwrap() + omega.max(1.0);
    breaks.push(far);
    let mut refined = vec![breaks[0]];
    for w in breaks.windows(2) {
        let cycles = ((w[1] - w[0]) * t / (2.0 * std::f64::consts::PI)).ceil().max(1.0) as usize;
        for i in 1..=cycles {
            refined.push(w[0] + (w[1] - w[0]) * i as f64 / cycles as f64);
        }
    }
    let budget = Tolerance { max_intervals: tol.max_intervals + refined.len() * 20, ..tol };
    let (body, _) = integrate_panels(&f, &refined, budget)?;
    // The Lorentzian decreases beyond `far`, so the tail is at most
    // L(far) * int_far^inf 2/nu^2 = 2 L(far)/far.
    let bound = 2.0 * hw / (std::f64::consts::PI * (hw * hw + (far - omega) * (far - omega))) / far;
    if bound < tol.abs {
        return Ok(body);
    }
    let (tail, _) = integrate_to_infinity(f, far, tol)?;
    Ok(body + tail)
}

fn quadrature_gamma(modes: &ModeSet, temperature: f64, t: f64) -> Result<f64> {
    if temperature > 0.0 {
        return Err(Error::InfraredDivergence { temperature });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (w, g, gamma) in modes.iter() {
        // A line integrates to at most min(t^2/2, 2/omega^2); the absolute
        // floor keeps panels far from the line from chasing roundoff.
        let scale = (t * t).min(1.0 / (w * w));
        let tol = Tolerance { abs: 1e-10 * scale, rel: 1e-9, max_intervals: 2000 };
        let line =
            broadened_line(w, gamma, t, tol).map_err(|e| Error::QuadratureAtTime { time: t, source: Box::new(e) })?;
        total += g * g * line;
    }
    Ok(-total)
}

/// Decoherence function `Gamma(t)` on `times` (starting at 0).
///
/// The quadrature route integrates `J(nu) (1 - cos nu t)/nu^2` line by line,
/// which is the same integral as summing over the full density. At `T > 0`
/// it diverges because the Lorentzian density is nonzero at `nu = 0`.
pub fn decoherence_function(
    modes: &ModeSet,
    temperature: f64,
    times: &[f64],
    method: Method,
) -> Result<DephasingTrace> {
    validate_inputs(temperature, times)?;
    let gamma_tilde = match method {
        Method::ModeSum => times.iter().map(|&t| -phase_sum(modes, temperature, t)).collect(),
        Method::Quadrature => {
            times.iter().map(|&t| quadrature_gamma(modes, temperature, t)).collect::<Result<Vec<_>>>()?
        }
    };
    Ok(from_gamma(times.to_vec(), gamma_tilde, temperature))
}

fn from_gamma(times: Vec<f64>, gamma_tilde: Vec<f64>, temperature: f64) -> DephasingTrace {
    let envelope = gamma_tilde.iter().map(|g: &f64| g.exp()).collect();
    DephasingTrace { times, gamma_tilde, envelope, temperature }
}

/// `<sigma_x(t)> = <sigma_x(0)> G(t)`.
pub fn coherence(trace: &DephasingTrace, initial_sx: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&initial_sx) {
        return Err(invalid("initial_sx", format!("must lie in [-1, 1], got {initial_sx}")));
    }
    Ok(trace.envelope.iter().map(|g| initial_sx * g).collect())
}

/// Interior indices `i` with `v[i-1] < v[i] >= v[i+1]`.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i - 1] < values[i] && values[i] >= values[i + 1]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlpOptions {
    /// Refine run endpoints with a 3-point parabola through the extremum.
    pub interpolate: bool,
    /// Largest allowed `|G_{i+1} - G_i|`; `None` skips the check.
    pub max_step: Option<f64>,
}

impl Default for BlpOptions {
    fn default() -> Self {
        Self { interpolate: true, max_step: Some(0.01) }
    }
}

/// Vertex of the parabola through `(t[i-1..=i+1], v[i-1..=i+1])`, if `i` is
/// interior and the samples are not collinear.
fn parabolic_vertex(t: &[f64], v: &[f64], i: usize) -> Option<(f64, f64)> {
    if i == 0 || i + 1 >= v.len() {
        return None;
    }
    let (t0, t1, t2) = (t[i - 1], t[i], t[i + 1]);
    let (v0, v1, v2) = (v[i - 1], v[i], v[i + 1]);
    let d01 = (v1 - v0) / (t1 - t0);
    let d12 = (v2 - v1) / (t2 - t1);
    let a = (d12 - d01) / (t2 - t0);
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let b = d01 - a * (t0 + t1);
    let tv = -b / (2.0 * a);
    if !(tv > t0 && tv < t2) {
        return None;
    }
    let vv = v1 + (tv - t1) * (d01 + a * (tv - t0));
    Some((tv, vv))
}

/// BLP measure of sampled `G`: the summed rise over maximal ascending runs.
pub fn blp_from_samples(times: &[f64], envelope: &[f64], opts: BlpOptions) -> Result<NonMarkovianityResult> {
    if times.len() != envelope.len() {
        return Err(invalid("envelope", "times and envelope lengths differ"));
    }
    if let Some(limit) = opts.max_step {
        for i in 1..envelope.len() {
            let jump = (envelope[i] - envelope[i - 1]).abs();
            if jump >= limit {
                return Err(Error::GridTooCoarse { time: times[i - 1], jump });
            }
        }
    }
    let mut measure = 0.0;
    let mut intervals = Vec::new();
    let n = envelope.len();
    let mut i = 0;
    while i + 1 < n {
        if envelope[i + 1] > envelope[i] {
            let start = i;
            while i + 1 < n && envelope[i + 1] > envelope[i] {
                i += 1;
            }
            let (mut t_lo, mut g_lo) = (times[start], envelope[start]);
            let (mut t_hi, mut g_hi) = (times[i], envelope[i]);
            if opts.interpolate {
                if let Some((t, g)) = parabolic_vertex(times, envelope, start) {
                    if g < g_lo {
                        (t_lo, g_lo) = (t, g);
                    }
                }
                if let Some((t, g)) = parabolic_vertex(times, envelope, i) {
                    if g > g_hi {
                        (t_hi, g_hi) = (t, g);
                    }
                }
            }
            measure += g_hi - g_lo;
            intervals.push((t_lo, t_hi));
        } else {
            i += 1;
        }
    }
    Ok(NonMarkovianityResult { measure, ascending_intervals: intervals })
}

/// BLP measure of a trace with the default resolution check and endpoint
/// refinement.
pub fn blp_measure(trace: &DephasingTrace) -> Result<NonMarkovianityResult> {
    blp_from_samples(&trace.times, &trace.envelope, BlpOptions::default())
}

/// Mode-sum trace on `n_points` uniform points over `[0, t_end]`, bisecting
/// intervals where `G` jumps by `max_jump` or more until the grid is fine
/// enough for [`blp_measure`].
pub fn refined_trace(
    modes: &ModeSet,
    temperature: f64,
    t_end: f64,
    n_points: usize,
    max_jump: f64,
) -> Result<DephasingTrace> {
    if !(max_jump > 0.0) {
        return Err(invalid("max_jump", format!("must be positive, got {max_jump}")));
    }
    let mut times = grid::linear(0.0, t_end, n_points)?;
    validate_inputs(temperature, &times)?;
    let mut gamma: Vec<f64> = times.iter().map(|&t| -phase_sum(modes, temperature, t)).collect();
    for _ in 0..40 {
        let coarse: Vec<usize> =
            (1..times.len()).filter(|&i| (gamma[i].exp() - gamma[i - 1].exp()).abs() >= max_jump).collect();
        if coarse.is_empty() {
            break;
        }
        let mut next_t = Vec::with_capacity(times.len() + coarse.len());
        let mut next_g = Vec::with_capacity(times.len() + coarse.len());
        let mut c = coarse.iter().peekable();
        for i in 0..times.len() {
            if c.peek() == Some(&&i) {
                c.next();
                let mid = 0.5 * (times[i - 1] + times[i]);
                if !(mid > times[i - 1] && mid < times[i]) {
                    return Err(Error::GridTooCoarse {
                        time: times[i - 1],
                        jump: (gamma[i].exp() - gamma[i - 1].exp()).abs(),
                    });
                }
                next_t.push(mid);
                next_g.push(-phase_sum(modes, temperature, mid));
            }
            next_t.push(times[i]);
            next_g.push(gamma[i]);
        }
        times = next_t;
        gamma = next_g;
    }
    Ok(from_gamma(times, gamma, temperature))
}
