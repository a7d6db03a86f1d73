//! Bessel functions of the first kind (orders 0 and 1), exponentially scaled
//! modified Bessel functions, and root finders for the two characteristic
//! equations that fix the axisymmetric membrane spectra.
//!
//! `J0`/`J1` use the ascending power series up to `x = 8` and, beyond, the
//! Hankel form `sqrt(2/(pi x)) (P cos chi - Q sin chi)` with the rational
//! approximations of P and Q on `x >= 8` from the FreeBSD msun library
//! (`e_j0.c`, `e_j1.c`; coefficient tables `pR8/pS8/qR8/qS8` reproduced
//! below). Scaled `e^{-x} I_n(x)` uses the power series up to `x = 20` and the
//! large-argument asymptotic series beyond, where its smallest term is below
//! `e^{-40}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const SERIES_LIMIT_J: f64 = 8.0;
const SERIES_LIMIT_I: f64 = 20.0;

// P0(x) = 1 + R/S on x >= 8, z = 1/x^2.
const P0_R8: [f64; 6] = [
    0.00000000000000000000e+00,
    -7.03124999999900357484e-02,
    -8.08167041275349795626e+00,
    -2.57063105679704847262e+02,
    -2.48521641009428822144e+03,
    -5.25304380490729545272e+03,
];
const P0_S8: [f64; 5] = [
    1.16534364619668181717e+02,
    3.83374475364121826715e+03,
    4.05978572648472545552e+04,
    1.16752972564375915681e+05,
    4.76277284146730962675e+04,
];
// Q0(x) = (-1/8 + R/S)/x on x >= 8.
const Q0_R8: [f64; 6] = [
    0.00000000000000000000e+00,
    7.32421874999935051953e-02,
    1.17682064682252693899e+01,
    5.57673380256401856059e+02,
    8.85919720756468632317e+03,
    3.70146267776887834771e+04,
];
const Q0_S8: [f64; 6] = [
    1.63776026895689824414e+02,
    8.09834494656449805916e+03,
    1.42538291419120476348e+05,
    8.03309257119514397345e+05,
    8.40501579819060512818e+05,
    -3.43899293537866615225e+05,
];
// P1(x) = 1 + R/S on x >= 8.
const P1_R8: [f64; 6] = [
    0.00000000000000000000e+00,
    1.17187499999988647970e-01,
    1.32394806593073575129e+01,
    4.12051854307378562225e+02,
    3.87474538913960532227e+03,
    7.91447954031891731574e+03,
];
const P1_S8: [f64; 5] = [
    1.14207370375678408436e+02,
    3.65093083420853463394e+03,
    3.69562060269033463555e+04,
    9.76027935934950801311e+04,
    3.08042720627888811578e+04,
];
// Q1(x) = (3/8 + R/S)/x on x >= 8.
const Q1_R8: [f64; 6] = [
    0.00000000000000000000e+00,
    -1.02539062499992714161e-01,
    -1.62717534544589987888e+01,
    -7.59601722513950107896e+02,
    -1.18498066702429587167e+04,
    -4.84385124285750353010e+04,
];
const Q1_S8: [f64; 6] = [
    1.61395369700722909556e+02,
    7.82538599923348465381e+03,
    1.33875336287249578163e+05,
    7.19657723683240939863e+05,
    6.66601232617776375264e+05,
    -2.94490264303834643215e+05,
];

fn horner(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// `1 + z (s0 + z (s1 + ...))`
fn horner_monic(coeffs: &[f64], z: f64) -> f64 {
    1.0 + z * horner(coeffs, z)
}

fn check_argument(function: &'static str, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain { function, reason: format!("argument must be finite and non-negative, got {x}") });
    }
    Ok(())
}

fn check_order(function: &'static str, order: u32) -> Result<()> {
    if order > 1 {
        return Err(Error::Domain { function, reason: format!("only orders 0 and 1 are supported, got {order}") });
    }
    Ok(())
}

/// Bessel function of the first kind `J_order(x)` for `order` in {0, 1}.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    check_order("bessel_j", order)?;
    check_argument("bessel_j", x)?;
    Ok(match order {
        0 => j0(x),
        _ => j1(x),
    })
}

/// Exponentially scaled modified Bessel function `e^{-x} I_order(x)`.
pub fn bessel_i_scaled(order: u32, x: f64) -> Result<f64> {
    check_order("bessel_i_scaled", order)?;
    check_argument("bessel_i_scaled", x)?;
    Ok(match order {
        0 => i0_scaled(x),
        _ => i1_scaled(x),
    })
}

/// `J0(x)` for finite `x >= 0`; callers inside the crate guarantee the domain.
pub(crate) fn j0(x: f64) -> f64 {
    if x <= SERIES_LIMIT_J {
        // sum_k (-1)^k (x^2/4)^k / (k!)^2
        let q = 0.25 * x * x;
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-3) {
            term *= -q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        let z = 1.0 / (x * x);
        let p = 1.0 + horner(&P0_R8, z) / horner_monic(&P0_S8, z);
        let q = (-0.125 + horner(&Q0_R8, z) / horner_monic(&Q0_S8, z)) / x;
        let (s, c) = x.sin_cos();
        let cos_chi = (s + c) * FRAC_1_SQRT_2;
        let sin_chi = (s - c) * FRAC_1_SQRT_2;
        (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
    }
}

/// `J1(x)` for finite `x >= 0`.
pub(crate) fn j1(x: f64) -> f64 {
    if x <= SERIES_LIMIT_J {
        // (x/2) sum_k (-1)^k (x^2/4)^k / (k! (k+1)!)
        let q = 0.25 * x * x;
        let mut term: f64 = 1.0;
        let mut sum: f64 = 1.0;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-3) {
            term *= -q / (k * (k + 1.0));
            sum += term;
            k += 1.0;
        }
        0.5 * x * sum
    } else {
        let z = 1.0 / (x * x);
        let p = 1.0 + horner(&P1_R8, z) / horner_monic(&P1_S8, z);
        let q = (0.375 + horner(&Q1_R8, z) / horner_monic(&Q1_S8, z)) / x;
        let (s, c) = x.sin_cos();
        let cos_chi = (s - c) * FRAC_1_SQRT_2;
        let sin_chi = -(s + c) * FRAC_1_SQRT_2;
        (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
    }
}

fn i_scaled_series(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let nu = f64::from(order);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * (k + nu));
        sum += term;
        k += 1.0;
    }
    let prefactor = if order == 0 { 1.0 } else { 0.5 * x };
    prefactor * sum * (-x).exp()
}

fn i_scaled_asymptotic(order: u32, x: f64) -> f64 {
    // e^{-x} I_nu(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(nu) / x^k,
    // a_k = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k)
    let mu = 4.0 * f64::from(order * order);
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    for k in 1..200 {
        let j = f64::from(k);
        let next = -term * (mu - (2.0 * j - 1.0).powi(2)) / (j * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

pub(crate) fn i0_scaled(x: f64) -> f64 {
    if x <= SERIES_LIMIT_I {
        i_scaled_series(0, x)
    } else {
        i_scaled_asymptotic(0, x)
    }
}

pub(crate) fn i1_scaled(x: f64) -> f64 {
    if x <= SERIES_LIMIT_I {
        i_scaled_series(1, x)
    } else {
        i_scaled_asymptotic(1, x)
    }
}

/// Which characteristic equation a [`RootList`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RootKind {
    /// `J0(beta) = 0`: edge-tensioned membrane.
    J0Zero,
    /// `J0(a) I1(a) + J1(a) I0(a) = 0`: clamped plate.
    ClampedPlate,
}

impl RootKind {
    /// The characteristic function whose positive roots are sought. For the
    /// clamped plate this is the form divided through by `I0`, which stays
    /// finite for large arguments and has the same roots.
    pub fn characteristic(self, x: f64) -> f64 {
        match self {
            RootKind::J0Zero => j0(x),
            RootKind::ClampedPlate => j0(x) * (i1_scaled(x) / i0_scaled(x)) + j1(x),
        }
    }
}

/// Strictly increasing positive roots of one characteristic equation.
#[derive(Debug, Clone, PartialEq)]
pub struct RootList {
    values: Vec<f64>,
    kind: RootKind,
}

impl RootList {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> RootKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First root (the fundamental).
    pub fn first(&self) -> f64 {
        self.values[0]
    }
}

const SCAN_START: f64 = 0.5;
const SCAN_STEP: f64 = 0.1;
const BISECTION_WIDTH: f64 = 1e-12;

/// First `count` positive zeros of `J0`.
pub fn zeros_j0(count: usize) -> Result<RootList> {
    find_roots(RootKind::J0Zero, count)
}

/// First `count` positive roots of the clamped-plate equation
/// `J0(a) I1(a) + J1(a) I0(a) = 0`.
pub fn clamped_plate_roots(count: usize) -> Result<RootList> {
    find_roots(RootKind::ClampedPlate, count)
}

fn find_roots(kind: RootKind, count: usize) -> Result<RootList> {
    if count == 0 {
        return Err(Error::InvalidParameter { field: "count", reason: "at least one root must be requested".into() });
    }
    let f = |x: f64| kind.characteristic(x);
    let mut values = Vec::with_capacity(count);
    // Roots are spaced by roughly pi; the scan limit leaves generous slack.
    let limit = (count as f64 + 2.0) * PI + 10.0;
    let mut a = SCAN_START;
    let mut fa = f(a);
    let mut step = 0usize;
    while values.len() < count {
        step += 1;
        let b = SCAN_START + step as f64 * SCAN_STEP;
        if b > limit {
            return Err(Error::RootFinding(format!(
                "found only {} of {count} roots of {kind:?} below {limit}",
                values.len()
            )));
        }
        let fb = f(b);
        if fa == 0.0 {
            values.push(a);
        } else if fa * fb < 0.0 {
            values.push(refine(&f, a, b, fa, fb));
        }
        a = b;
        fa = fb;
    }
    Ok(RootList { values, kind })
}

/// Bisection down to [`BISECTION_WIDTH`] followed by one secant step that is
/// kept only if it stays inside the final bracket.
fn refine(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    while b - a > BISECTION_WIDTH {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    let secant = b - fb * (b - a) / (fb - fa);
    if secant.is_finite() && secant >= a && secant <= b {
        secant
    } else {
        0.5 * (a + b)
    }
}
