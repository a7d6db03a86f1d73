//! Time stepping of the polarization master equation
//!
//! `dP/dt = -int_0^t [K_s(t,s) P(s) + K_a(t,s)] ds`
//!
//! with `K_s = kc(t-s) cos(Phi_t - Phi_s)` and `K_a = ks(t-s) sin(Phi_t - Phi_s)`,
//! where `kc = Omega^2 e^{-Q2} cos Q1`, `ks = Omega^2 e^{-Q2} sin Q1` and `Phi`
//! is the accumulated slow-mode bias phase.
//!
//! Writing `z_j = e^{i Phi_j} P_j` and `y_j = e^{i Phi_j}`, the history sum at
//! step `m` is `Re(e^{-i Phi_m} U_m) - Im(e^{-i Phi_m} V_m)` with the causal
//! convolutions `U_m = sum_{j<m} kc[m-j] z_j` and `V_m = sum_{j<m} ks[m-j] y_j`.
//! Both are accumulated online by divide and conquer: once the left half of a
//! block is final, its contribution to the right half is one FFT product.
//! The trapezoid weights in the lag variable are folded into the stored
//! kernel and the stored `z_0`, `y_0`; the lag-zero endpoint is implicit in
//! the update of `P_m`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Blocks at or below this size are convolved directly.
const LEAF: usize = 32;

/// Trajectories whose polarization leaves `[-LIMIT, LIMIT]` are aborted.
/// Near the localization onset the hybrid equations overshoot `|P| = 1` by
/// up to about 0.9 without diverging; numerical blow-up grows without bound.
pub const INSTABILITY_LIMIT: f64 = 3.0;

/// How the history convolutions are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemorySolver {
    /// Online FFT convolution, `O(N log^2 N)` per trajectory.
    #[default]
    Fft,
    /// Plain sums over the memory window, `O(N N_mem)`.
    Direct,
}

struct Level {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kc_hat: Vec<Complex64>,
    ks_hat: Vec<Complex64>,
}

/// Trajectory-independent part of the master equation: lag kernels on the
/// step grid and their transforms.
pub struct MemoryKernel {
    rabi: f64,
    dt: f64,
    n_steps: usize,
    n_mem: usize,
    /// Lag-indexed, trapezoid-weighted, zero at lag 0 and beyond `n_mem`.
    kc: Vec<f64>,
    ks: Vec<f64>,
    /// Extra weight for `j = 0` at `m = n_mem`, where both trapezoid
    /// endpoints coincide.
    tail_c: f64,
    tail_s: f64,
    solver: MemorySolver,
    size: usize,
    /// Indexed by block size exponent.
    levels: Vec<Option<Level>>,
}

impl std::fmt::Debug for MemoryKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MemoryKernel")
            .field("rabi", &self.rabi)
            .field("dt", &self.dt)
            .field("n_steps", &self.n_steps)
            .field("n_mem", &self.n_mem)
            .field("solver", &self.solver)
            .finish_non_exhaustive()
    }
}

impl MemoryKernel {
    /// `q1`, `q2` are the fast-bath phase functions on lags `0..=n_mem`.
    pub fn new(rabi: f64, dt: f64, n_steps: usize, q1: &[f64], q2: &[f64], solver: MemorySolver) -> Result<Self> {
        if q1.len() != q2.len() || q1.is_empty() {
            return Err(Error::InvalidParameter {
                field: "phase functions",
                reason: "Q1 and Q2 must be non-empty and equally long".into(),
            });
        }
        let n_mem = q1.len() - 1;
        let om2 = rabi * rabi;
        let raw_c = |l: usize| om2 * (-q2[l]).exp() * q1[l].cos();
        let raw_s = |l: usize| om2 * (-q2[l]).exp() * q1[l].sin();
        let mut kc = vec![0.0; n_steps + 1];
        let mut ks = vec![0.0; n_steps + 1];
        for l in 1..=n_steps.min(n_mem) {
            kc[l] = raw_c(l);
            ks[l] = raw_s(l);
        }
        let (mut tail_c, mut tail_s) = (0.0, 0.0);
        if n_mem >= 1 && n_mem <= n_steps {
            kc[n_mem] *= 0.5;
            ks[n_mem] *= 0.5;
            tail_c = 0.25 * raw_c(n_mem);
            tail_s = 0.25 * raw_s(n_mem);
        }
        let size = (n_steps + 1).next_power_of_two().max(LEAF);
        let mut levels: Vec<Option<Level>> = Vec::new();
        if solver == MemorySolver::Fft {
            let mut planner = FftPlanner::new();
            let mut s = 2 * LEAF;
            levels.resize_with(size.trailing_zeros() as usize + 1, || None);
            while s <= size {
                let forward = planner.plan_fft_forward(s);
                let inverse = planner.plan_fft_inverse(s);
                let lagged = |k: &[f64]| {
                    let mut v: Vec<Complex64> =
                        (0..s).map(|l| Complex64::new(k.get(l).copied().unwrap_or(0.0), 0.0)).collect();
                    forward.process(&mut v);
                    v
                };
                let kc_hat = lagged(&kc);
                let ks_hat = lagged(&ks);
                levels[s.trailing_zeros() as usize] = Some(Level { forward: forward.clone(), inverse, kc_hat, ks_hat });
                s *= 2;
            }
        }
        Ok(Self { rabi, dt, n_steps, n_mem, kc, ks, tail_c, tail_s, solver, size, levels })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Integrate from `P(0) = 1`. `phase(m, p_prev)` must advance the slow
    /// bath from step `m - 1` to `m` under the force set by `p_prev` and
    /// return `Phi_m`; it is called once for each `m = 1..=n_steps`, in order.
    /// `index` labels instability errors.
    pub fn solve(&self, index: u64, phase: &mut dyn FnMut(usize, f64) -> f64) -> Result<Vec<f64>> {
        let mut st = State {
            p: vec![0.0; self.n_steps + 1],
            z: vec![Complex64::new(0.0, 0.0); self.size],
            y: vec![Complex64::new(0.0, 0.0); self.size],
            u: vec![Complex64::new(0.0, 0.0); self.size],
            v: vec![Complex64::new(0.0, 0.0); self.size],
            last_i: 0.0,
            index,
            scratch: Vec::new(),
        };
        match self.solver {
            MemorySolver::Fft => self.divide(&mut st, 0, self.size, phase)?,
            MemorySolver::Direct => {
                for m in 0..=self.n_steps {
                    let lo = m.saturating_sub(self.n_mem);
                    for j in lo..m {
                        st.u[m] += st.z[j] * self.kc[m - j];
                        st.v[m] += st.y[j] * self.ks[m - j];
                    }
                    self.finalize(&mut st, m, phase)?;
                }
            }
        }
        Ok(st.p)
    }

    fn finalize(&self, st: &mut State, m: usize, phase: &mut dyn FnMut(usize, f64) -> f64) -> Result<()> {
        if m == 0 {
            st.p[0] = 1.0;
            st.z[0] = Complex64::new(0.5, 0.0);
            st.y[0] = Complex64::new(0.5, 0.0);
            st.last_i = 0.0;
            return Ok(());
        }
        let dt = self.dt;
        let p_prev = st.p[m - 1];
        let phi = phase(m, p_prev);
        let rot = Complex64::from_polar(1.0, phi);
        let back = rot.conj();
        let mut a = (back * st.u[m]).re - (back * st.v[m]).im;
        if m == self.n_mem {
            // z_0 = y_0 = 1 unhalved, Phi_0 = 0.
            a += self.tail_c * back.re - self.tail_s * back.im;
        }
        a *= dt;
        let om2 = self.rabi * self.rabi;
        let p = (p_prev - 0.5 * dt * (st.last_i + a)) / (1.0 + 0.25 * dt * dt * om2);
        if !(p.abs() <= INSTABILITY_LIMIT) {
            return Err(Error::Unstable { index: st.index, time: m as f64 * dt, value: p });
        }
        st.last_i = a + 0.5 * dt * om2 * p;
        st.p[m] = p;
        st.z[m] = rot * p;
        st.y[m] = rot;
        Ok(())
    }

    fn divide(&self, st: &mut State, lo: usize, hi: usize, phase: &mut dyn FnMut(usize, f64) -> f64) -> Result<()> {
        if lo > self.n_steps {
            return Ok(());
        }
        if hi - lo <= LEAF {
            let end = hi.min(self.n_steps + 1);
            for m in lo..end {
                self.finalize(st, m, phase)?;
                let (zm, ym) = (st.z[m], st.y[m]);
                for r in m + 1..end {
                    st.u[r] += zm * self.kc[r - m];
                    st.v[r] += ym * self.ks[r - m];
                }
            }
            return Ok(());
        }
        let mid = lo + (hi - lo) / 2;
        self.divide(st, lo, mid, phase)?;
        if mid <= self.n_steps {
            self.cross(st, lo, mid, hi);
        }
        self.divide(st, mid, hi, phase)
    }

    /// Add the contribution of `z[lo..mid]`, `y[lo..mid]` to `u`, `v` on
    /// `[mid, hi)`. Lags lie in `[1, hi - lo)`, so a circular product of
    /// length `hi - lo` does not wrap.
    fn cross(&self, st: &mut State, lo: usize, mid: usize, hi: usize) {
        let s = hi - lo;
        let level =
            self.levels[s.trailing_zeros() as usize].as_ref().expect("levels cover every block above the leaf size");
        let zero = Complex64::new(0.0, 0.0);
        let mut a: Vec<Complex64> = Vec::with_capacity(s);
        a.extend_from_slice(&st.z[lo..mid]);
        a.resize(s, zero);
        let mut b: Vec<Complex64> = Vec::with_capacity(s);
        b.extend_from_slice(&st.y[lo..mid]);
        b.resize(s, zero);
        let scratch_len = level.forward.get_inplace_scratch_len().max(level.inverse.get_inplace_scratch_len());
        st.scratch.resize(scratch_len, zero);
        level.forward.process_with_scratch(&mut a, &mut st.scratch);
        level.forward.process_with_scratch(&mut b, &mut st.scratch);
        for ((x, y), (kc, ks)) in a.iter_mut().zip(b.iter_mut()).zip(level.kc_hat.iter().zip(&level.ks_hat)) {
            *x *= kc;
            *y *= ks;
        }
        level.inverse.process_with_scratch(&mut a, &mut st.scratch);
        level.inverse.process_with_scratch(&mut b, &mut st.scratch);
        let norm = 1.0 / s as f64;
        let end = hi.min(self.n_steps + 1);
        for m in mid..end {
            st.u[m] += a[m - lo] * norm;
            st.v[m] += b[m - lo] * norm;
        }
    }
}

struct State {
    p: Vec<f64>,
    z: Vec<Complex64>,
    y: Vec<Complex64>,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    last_i: f64,
    index: u64,
    scratch: Vec<Complex64>,
}
