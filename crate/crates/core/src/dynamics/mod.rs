//! Relaxation dynamics at zero detuning by the hybrid Ehrenfest and
//! noninteracting-blip scheme.
//!
//! Modes below `omega_star` are classical oscillators sampled from the Wigner
//! distribution; they shift the spin through the bias
//! `eps(t) = sum_k g_k sqrt(2 omega_k) x_k(t)` and feel the mean-field force
//! `-(g_k sqrt(2 omega_k)/2) P(t)` of their own trajectory. Modes above it
//! enter the memory kernel through the phase functions `Q1` and `Q2`.

mod gme;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dephasing::{phase_sum, thermal_factor};
use crate::error::{invalid, Error, Result};
use crate::membrane::ModeSet;

pub use gme::{MemoryKernel, MemorySolver, INSTABILITY_LIMIT};

/// Trajectories per reduction leaf. Fixed so the summation order does not
/// depend on the number of workers.
const CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinParams {
    pub rabi: f64,
    /// Must be zero; the master equation holds only at zero detuning.
    pub detuning: f64,
}

impl SpinParams {
    pub fn new(rabi: f64) -> Result<Self> {
        let s = Self { rabi, detuning: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi > 0.0 && self.rabi.is_finite()) {
            return Err(invalid("rabi", format!("must be positive, got {}", self.rabi)));
        }
        if self.detuning != 0.0 {
            return Err(invalid("detuning", "only zero detuning is supported"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSplit {
    /// Modes with `omega < omega_star`.
    pub slow: ModeSet,
    pub fast: ModeSet,
    pub omega_star: f64,
}

/// Partition by the strict threshold `omega < omega_star`.
pub fn split_bath(modes: &ModeSet, omega_star: f64) -> Result<BathSplit> {
    if !(omega_star > 0.0 && omega_star.is_finite()) {
        return Err(invalid("omega_star", format!("must be positive, got {omega_star}")));
    }
    Ok(BathSplit { slow: modes.select(|_, w| w < omega_star), fast: modes.select(|_, w| w >= omega_star), omega_star })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub dt: f64,
    pub t_max: f64,
    /// Memory cutoff `t_mem`, in `(0, t_max]`.
    pub memory_cutoff: f64,
    pub temperature: f64,
    pub seed: u64,
    pub omega_star: f64,
    pub solver: MemorySolver,
}

impl EnsembleConfig {
    /// Defaults: 2000 trajectories, `omega_star = Omega`, full memory
    /// `t_mem = t_max` and `dt = min(0.05/nu_c, 0.02/Omega)`. A shorter memory
    /// is unstable at weak coupling, where `e^{-Q2}` has not decayed.
    pub fn with_defaults(modes: &ModeSet, spin: &SpinParams, t_max: f64, seed: u64) -> Self {
        Self {
            n_traj: 2000,
            dt: max_dt(modes, spin),
            t_max,
            memory_cutoff: t_max,
            temperature: 0.0,
            seed,
            omega_star: spin.rabi,
            solver: MemorySolver::Fft,
        }
    }

    pub fn validate(&self, modes: &ModeSet, spin: &SpinParams) -> Result<()> {
        spin.validate()?;
        if self.n_traj == 0 {
            return Err(invalid("n_traj", "at least one trajectory is required"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(invalid("t_max", format!("must be positive, got {}", self.t_max)));
        }
        let limit = max_dt(modes, spin);
        if !(self.dt > 0.0 && self.dt <= limit * (1.0 + 1e-12)) {
            return Err(invalid("dt", format!("must lie in (0, {limit}], got {}", self.dt)));
        }
        if !(self.memory_cutoff > 0.0 && self.memory_cutoff <= self.t_max) {
            return Err(invalid("memory_cutoff", format!("must lie in (0, t_max], got {}", self.memory_cutoff)));
        }
        let floor = 10.0 / spin.rabi;
        if self.memory_cutoff < floor * (1.0 - 1e-12) {
            return Err(invalid(
                "memory_cutoff",
                format!("must be at least 10/rabi = {floor}, got {}", self.memory_cutoff),
            ));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(invalid("temperature", format!("must be finite and >= 0, got {}", self.temperature)));
        }
        if !(self.omega_star > 0.0 && self.omega_star.is_finite()) {
            return Err(invalid("omega_star", format!("must be positive, got {}", self.omega_star)));
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil() as usize
    }

    fn n_mem(&self) -> usize {
        ((self.memory_cutoff / self.dt).round() as usize).max(1)
    }
}

/// `min(0.05/nu_c, 0.02/Omega)`; only the Rabi bound applies to an empty bath.
pub fn max_dt(modes: &ModeSet, spin: &SpinParams) -> f64 {
    let rabi_bound = 0.02 / spin.rabi;
    if modes.is_empty() {
        rabi_bound
    } else {
        rabi_bound.min(0.05 / modes.cutoff())
    }
}

/// `Q1(tau) = sum g^2 sin(omega tau)/omega^2` and
/// `Q2(tau) = sum g^2 coth(omega/2T) (1 - cos omega tau)/omega^2` over the
/// fast modes. `Q2` is the negated decoherence function of the same modes.
pub fn niba_phase_functions(fast: &ModeSet, temperature: f64, tau_grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let q1 = tau_grid.iter().map(|&tau| fast.iter().map(|(w, g, _)| g * g * (w * tau).sin() / (w * w)).sum()).collect();
    let q2 = tau_grid.iter().map(|&tau| phase_sum(fast, temperature, tau)).collect();
    (q1, q2)
}

/// Wigner sample of the slow modes in mass-weighted coordinates:
/// `Var x = coth(omega/2T)/(2 omega)`, `Var p = omega coth(omega/2T)/2`.
pub fn sample_slow_initial(slow: &ModeSet, temperature: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(slow.len());
    let mut p = Vec::with_capacity(slow.len());
    for &w in slow.omegas() {
        let c = thermal_factor(w, temperature);
        let zx: f64 = StandardNormal.sample(rng);
        let zp: f64 = StandardNormal.sample(rng);
        x.push(zx * (c / (2.0 * w)).sqrt());
        p.push(zp * (0.5 * w * c).sqrt());
    }
    (x, p)
}

/// Independent stream for trajectory `index` under master `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-mode constants of the exact harmonic step of length `dt`.
#[derive(Debug, Clone)]
pub struct SlowPropagator {
    omega: Vec<f64>,
    /// `g sqrt(2 omega)`.
    coupling: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    dt: f64,
}

impl SlowPropagator {
    pub fn new(slow: &ModeSet, dt: f64) -> Self {
        let omega = slow.omegas().to_vec();
        let coupling = slow.iter().map(|(w, g, _)| g * (2.0 * w).sqrt()).collect();
        let cos = omega.iter().map(|w| (w * dt).cos()).collect();
        let sin = omega.iter().map(|w| (w * dt).sin()).collect();
        Self { omega, coupling, cos, sin, dt }
    }

    /// Bias `eps = sum c_k x_k`.
    pub fn bias(&self, x: &[f64]) -> f64 {
        self.coupling.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Advance one step under the spin force set by `p_spin`, held fixed over
    /// the step, and return `int eps dt` over it.
    pub fn step(&self, x: &mut [f64], p: &mut [f64], p_spin: f64) -> f64 {
        let mut phase = 0.0;
        for k in 0..x.len() {
            let (w, c, co, si) = (self.omega[k], self.coupling[k], self.cos[k], self.sin[k]);
            let x_eq = -0.5 * c * p_spin / (w * w);
            let dx = x[k] - x_eq;
            let integral = x_eq * self.dt + dx * si / w + p[k] * (1.0 - co) / (w * w);
            x[k] = x_eq + dx * co + p[k] * si / w;
            p[k] = -dx * w * si + p[k] * co;
            phase += c * integral;
        }
        phase
    }
}

/// One hybrid trajectory from the given slow-mode initial state; `P` on the
/// step grid.
pub fn run_trajectory(
    kernel: &MemoryKernel,
    propagator: &SlowPropagator,
    init: (Vec<f64>, Vec<f64>),
    index: u64,
) -> Result<Vec<f64>> {
    let (mut x, mut p) = init;
    let mut phi = 0.0;
    kernel.solve(index, &mut |_, p_spin| {
        phi += propagator.step(&mut x, &mut p, p_spin);
        phi
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationTrace {
    pub times: Vec<f64>,
    pub p_mean: Vec<f64>,
    pub p_stderr: Vec<f64>,
    /// Trajectories that entered the mean.
    pub n_traj: usize,
    pub n_failed: usize,
    pub rabi: f64,
}

/// Running mean and sum of squared deviations, mergeable in a fixed order.
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    failed: usize,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self { count: 0, mean: vec![0.0; len], m2: vec![0.0; len], failed: 0 }
    }

    fn push(&mut self, sample: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.failed += other.failed;
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return Self { failed: self.failed, ..other };
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
        self
    }
}

fn tree_merge(mut parts: Vec<Moments>) -> Moments {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one chunk")
}

/// Ensemble-averaged polarization. Trajectory `i` draws from stream `i` of
/// `cfg.seed`; the mean is reduced over fixed chunks in index order, so the
/// result is bit-identical for any thread count. Without slow modes the
/// dynamics are deterministic and a single solve is returned.
pub fn ensemble_polarization(modes: &ModeSet, spin: &SpinParams, cfg: &EnsembleConfig) -> Result<PolarizationTrace> {
    cfg.validate(modes, spin)?;
    let split = split_bath(modes, cfg.omega_star)?;
    let n_steps = cfg.n_steps();
    let n_mem = cfg.n_mem().min(n_steps);
    let lags: Vec<f64> = (0..=n_mem).map(|l| l as f64 * cfg.dt).collect();
    let (q1, q2) = niba_phase_functions(&split.fast, cfg.temperature, &lags);
    let kernel = MemoryKernel::new(spin.rabi, cfg.dt, n_steps, &q1, &q2, cfg.solver)?;
    let times: Vec<f64> = (0..=n_steps).map(|m| m as f64 * cfg.dt).collect();

    if split.slow.is_empty() {
        let p = kernel.solve(0, &mut |_, _| 0.0)?;
        return Ok(PolarizationTrace {
            p_stderr: vec![0.0; p.len()],
            p_mean: p,
            times,
            n_traj: 1,
            n_failed: 0,
            rabi: spin.rabi,
        });
    }

    let propagator = SlowPropagator::new(&split.slow, cfg.dt);
    let chunks: Vec<std::ops::Range<usize>> =
        (0..cfg.n_traj).step_by(CHUNK).map(|lo| lo..(lo + CHUNK).min(cfg.n_traj)).collect();
    let parts: Vec<Moments> = chunks
        .into_par_iter()
        .map(|range| {
            let mut acc = Moments::new(n_steps + 1);
            for i in range {
                let mut rng = trajectory_rng(cfg.seed, i as u64);
                let init = sample_slow_initial(&split.slow, cfg.temperature, &mut rng);
                match run_trajectory(&kernel, &propagator, init, i as u64) {
                    Ok(p) => acc.push(&p),
                    Err(Error::Unstable { .. }) => acc.failed += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = tree_merge(parts);
    if total.failed * 100 > cfg.n_traj || total.count == 0 {
        return Err(Error::TooManyFailures { failed: total.failed, total: cfg.n_traj });
    }
    let n = total.count as f64;
    let p_stderr = if total.count > 1 {
        total.m2.iter().map(|s| (s.max(0.0) / (n - 1.0) / n).sqrt()).collect()
    } else {
        vec![0.0; total.mean.len()]
    };
    Ok(PolarizationTrace {
        times,
        p_mean: total.mean,
        p_stderr,
        n_traj: total.count,
        n_failed: total.failed,
        rabi: spin.rabi,
    })
}
