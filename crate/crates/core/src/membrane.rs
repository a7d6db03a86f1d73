//! Discretized bath of a circular membrane with the defect at its center.
//!
//! Only axisymmetric modes couple to a centered defect, so every mode is
//! non-degenerate. Frequencies are dimensionless and expressed either in
//! units of the fundamental (`omegas[0] = 1`) or of the highest mode
//! (`omegas[n-1] = 1`).

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_panels, Tolerance};
use crate::special_functions::{clamped_plate_roots, i0_scaled, j0, zeros_j0, RootList};

/// Largest mode count accepted by [`build_mode_set`].
pub const MAX_MODES: usize = 20_000;

/// Edge condition of the membrane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Clamped plate, bending dominated; gives a `1/f` bath.
    Clamped,
    /// Dominant tension at the rim; gives a white-noise bath.
    Strained,
    /// Bending plus tension through `omega(q) = sqrt(q^4 + tau q^2)` with
    /// tension-limit wavenumbers and profiles. An approximation: the exact
    /// mixed boundary problem is not solved.
    Intermediate { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrequencyUnit {
    /// Frequencies in units of the fundamental mode.
    Fundamental,
    /// Frequencies in units of the highest retained mode.
    Cutoff,
}

impl FrequencyUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            FrequencyUnit::Fundamental => "fundamental",
            FrequencyUnit::Cutoff => "cutoff",
        }
    }
}

impl std::str::FromStr for FrequencyUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fundamental" => Ok(FrequencyUnit::Fundamental),
            "cutoff" => Ok(FrequencyUnit::Cutoff),
            other => Err(Error::Table(format!("unknown frequency unit `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembraneSpec {
    pub boundary: Boundary,
    pub n_modes: usize,
    /// Coupling of the fundamental mode, in the chosen frequency unit.
    pub g0: f64,
    pub quality_factor: f64,
    pub frequency_unit: FrequencyUnit,
}

impl MembraneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_modes < 2 {
            return Err(invalid("n_modes", format!("need at least 2 modes, got {}", self.n_modes)));
        }
        if self.n_modes > MAX_MODES {
            return Err(invalid("n_modes", format!("{} exceeds the supported maximum of {MAX_MODES}", self.n_modes)));
        }
        if !(self.g0 > 0.0 && self.g0.is_finite()) {
            return Err(invalid("g0", format!("must be positive and finite, got {}", self.g0)));
        }
        if !(self.quality_factor > 0.0 && self.quality_factor.is_finite()) {
            return Err(invalid("quality_factor", format!("must be positive and finite, got {}", self.quality_factor)));
        }
        if let Boundary::Intermediate { tau } = self.boundary {
            if !(tau >= 0.0 && tau.is_finite()) {
                return Err(invalid("tau", format!("must be finite and >= 0, got {tau}")));
            }
        }
        Ok(())
    }
}

/// Bath modes: frequencies, couplings and damping rates, index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    omegas: Vec<f64>,
    couplings: Vec<f64>,
    dampings: Vec<f64>,
    unit: FrequencyUnit,
}

impl ModeSet {
    /// Assemble a mode set, checking ordering and positivity. Empty sets are
    /// allowed; they arise when a bath is partitioned.
    pub fn from_parts(omegas: Vec<f64>, couplings: Vec<f64>, dampings: Vec<f64>, unit: FrequencyUnit) -> Result<Self> {
        if omegas.len() != couplings.len() || omegas.len() != dampings.len() {
            return Err(invalid("modes", "frequency, coupling and damping lengths differ"));
        }
        if omegas.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("omegas", "frequencies must be positive and finite"));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("omegas", "frequencies must be strictly increasing"));
        }
        if couplings.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(invalid("couplings", "couplings must be positive and finite"));
        }
        if dampings.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(invalid("dampings", "damping rates must be positive and finite"));
        }
        Ok(Self { omegas, couplings, dampings, unit })
    }

    /// Mode set with uniform quality factor, `gamma_k = omega_k / q`.
    pub fn with_quality_factor(
        omegas: Vec<f64>,
        couplings: Vec<f64>,
        quality_factor: f64,
        unit: FrequencyUnit,
    ) -> Result<Self> {
        if !(quality_factor > 0.0 && quality_factor.is_finite()) {
            return Err(invalid("quality_factor", format!("must be positive, got {quality_factor}")));
        }
        let dampings = omegas.iter().map(|w| w / quality_factor).collect();
        Self::from_parts(omegas, couplings, dampings, unit)
    }

    pub fn empty(unit: FrequencyUnit) -> Self {
        Self { omegas: Vec::new(), couplings: Vec::new(), dampings: Vec::new(), unit }
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn dampings(&self) -> &[f64] {
        &self.dampings
    }

    pub fn unit(&self) -> FrequencyUnit {
        self.unit
    }

    /// Lowest frequency. Panics on an empty set.
    pub fn fundamental(&self) -> f64 {
        self.omegas[0]
    }

    /// Highest frequency, the bath cutoff. Panics on an empty set.
    pub fn cutoff(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    /// Iterate `(omega, g, gamma)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.omegas.iter().zip(&self.couplings).zip(&self.dampings).map(|((&w, &g), &d)| (w, g, d))
    }

    /// Same frequencies and dampings, every coupling multiplied by `factor`.
    pub fn scaled_couplings(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(invalid("coupling scale", format!("must be positive, got {factor}")));
        }
        Ok(Self {
            omegas: self.omegas.clone(),
            couplings: self.couplings.iter().map(|g| g * factor).collect(),
            dampings: self.dampings.clone(),
            unit: self.unit,
        })
    }

    /// Modes whose index satisfies `keep`, in order.
    pub fn select(&self, keep: impl Fn(usize, f64) -> bool) -> Self {
        let mut out = Self::empty(self.unit);
        for (i, (w, g, d)) in self.iter().enumerate() {
            if keep(i, w) {
                out.omegas.push(w);
                out.couplings.push(g);
                out.dampings.push(d);
            }
        }
        out
    }

    /// Plain-text table: a unit header, a column header, then one row per
    /// mode with 17 significant digits, which round-trips exactly.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# unit = {}", self.unit.as_str());
        let _ = writeln!(s, "# index omega coupling damping");
        for (i, (w, g, d)) in self.iter().enumerate() {
            let _ = writeln!(s, "{i} {w:.16e} {g:.16e} {d:.16e}");
        }
        s
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let unit_line = lines.next().ok_or_else(|| Error::Table("empty table".into()))?;
        let unit = unit_line
            .trim()
            .strip_prefix('#')
            .and_then(|rest| rest.trim().strip_prefix("unit"))
            .and_then(|rest| rest.trim().strip_prefix('='))
            .ok_or_else(|| Error::Table(format!("expected `# unit = ...`, found `{unit_line}`")))?
            .trim()
            .parse()?;
        let (mut omegas, mut couplings, mut dampings) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in lines.enumerate() {
            if line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Table(format!("row {lineno}: expected 4 columns, found {}", fields.len())));
            }
            let index: usize =
                fields[0].parse().map_err(|_| Error::Table(format!("row {lineno}: bad index `{}`", fields[0])))?;
            if index != omegas.len() {
                return Err(Error::Table(format!("row {lineno}: index {index} out of sequence")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Table(format!("row {lineno}: bad number `{s}`")));
            omegas.push(num(fields[1])?);
            couplings.push(num(fields[2])?);
            dampings.push(num(fields[3])?);
        }
        Self::from_parts(omegas, couplings, dampings, unit)
    }
}

/// `omega(q) = sqrt(q^4 + tau q^2)`: bending plus tension.
pub fn dimensionless_dispersion(q: f64, tau: f64) -> f64 {
    debug_assert!(q > 0.0 && tau >= 0.0);
    (q.powi(4) + tau * q * q).sqrt()
}

/// Wavenumbers and frequency ratios `omega_k / omega_0` for a boundary.
fn spectrum_ratios(boundary: Boundary, n_modes: usize) -> Result<(RootList, Vec<f64>)> {
    match boundary {
        Boundary::Clamped => {
            let alpha = clamped_plate_roots(n_modes)?;
            let a0 = alpha.first();
            let ratios = alpha.values().iter().map(|a| (a / a0).powi(2)).collect();
            Ok((alpha, ratios))
        }
        Boundary::Strained => {
            let beta = zeros_j0(n_modes)?;
            let b0 = beta.first();
            let ratios = beta.values().iter().map(|b| b / b0).collect();
            Ok((beta, ratios))
        }
        Boundary::Intermediate { tau } => {
            let beta = zeros_j0(n_modes)?;
            let w0 = dimensionless_dispersion(beta.first(), tau);
            let ratios = beta.values().iter().map(|&b| dimensionless_dispersion(b, tau) / w0).collect();
            Ok((beta, ratios))
        }
    }
}

/// Build the bath for `spec` using the closed-form coupling laws
/// (`g_k = g0 (omega_k/omega_0)^{-1/4}` clamped, `g_k = g0` strained). The
/// intermediate case takes its couplings from the profile integrals.
pub fn build_mode_set(spec: &MembraneSpec) -> Result<ModeSet> {
    spec.validate()?;
    let (_, ratios) = spectrum_ratios(spec.boundary, spec.n_modes)?;
    let coupling_ratios: Vec<f64> = match spec.boundary {
        Boundary::Clamped => ratios.iter().map(|r| r.powf(-0.25)).collect(),
        Boundary::Strained => vec![1.0; spec.n_modes],
        Boundary::Intermediate { .. } => profile_coupling_ratios(spec.boundary, spec.n_modes)?,
    };
    let scale = match spec.frequency_unit {
        FrequencyUnit::Fundamental => 1.0,
        FrequencyUnit::Cutoff => ratios[spec.n_modes - 1],
    };
    let omegas = ratios.iter().map(|r| r / scale).collect();
    let couplings = coupling_ratios.iter().map(|c| spec.g0 * c).collect();
    ModeSet::with_quality_factor(omegas, couplings, spec.quality_factor, spec.frequency_unit)
}

/// Radial profile normalized to unit amplitude at the center, `u = r/R`.
fn profile(boundary: Boundary, root: f64, u: f64) -> f64 {
    match boundary {
        Boundary::Clamped => {
            // J0(a u) - J0(a)/I0(a) I0(a u); the I0 ratio is taken from scaled
            // values to stay finite for large a.
            let i0_root = i0_scaled(root);
            let center = 1.0 - j0(root) * (-root).exp() / i0_root;
            let value = j0(root * u) - j0(root) * (root * (u - 1.0)).exp() * i0_scaled(root * u) / i0_root;
            value / center
        }
        Boundary::Strained | Boundary::Intermediate { .. } => j0(root * u),
    }
}

/// Effective mass over `mu pi R^2`: `2 int_0^1 psi(u)^2 u du`.
fn mass_fraction(boundary: Boundary, root: f64) -> Result<f64> {
    let panels = (root / PI).ceil() as usize + 1;
    let breaks: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
    let tol = Tolerance { abs: 1e-16, rel: 1e-11, max_intervals: 20 * panels + 200 };
    let f = |u: f64| {
        let p = profile(boundary, root, u);
        2.0 * p * p * u
    };
    integrate_panels(&f, &breaks, tol).map(|(v, _)| v)
}

/// `g_k / g0` for every mode, from the zero-point amplitude at the center:
/// `sqrt(m_0 omega_0 / (m_k omega_k))` with effective masses from profile
/// quadrature.
pub fn profile_coupling_ratios(boundary: Boundary, n_modes: usize) -> Result<Vec<f64>> {
    if n_modes == 0 {
        return Err(invalid("n_modes", "at least one mode is required"));
    }
    let (roots, ratios) = spectrum_ratios(boundary, n_modes)?;
    let masses = roots.values().iter().map(|&r| mass_fraction(boundary, r)).collect::<Result<Vec<_>>>()?;
    let reference = masses[0];
    Ok(masses.iter().zip(&ratios).map(|(m, w)| (reference / (m * w)).sqrt()).collect())
}

/// `g_k / g0` for a single mode index `k` (0-based).
pub fn coupling_from_profile(boundary: Boundary, k: usize) -> Result<f64> {
    let ratios = profile_coupling_ratios(boundary, k + 1)?;
    Ok(ratios[k])
}

/// Effective mass fraction of mode `k` (0-based), exposed for checks against
/// closed-form identities.
pub fn effective_mass_fraction(boundary: Boundary, k: usize) -> Result<f64> {
    let (roots, _) = spectrum_ratios(boundary, k + 1)?;
    mass_fraction(boundary, roots.values()[k])
}

/// SI material and geometry parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Radius R (m).
    pub radius: f64,
    /// Thickness h (m).
    pub thickness: f64,
    /// Areal mass density (kg/m^2).
    pub mass_density: f64,
    /// Young's modulus E (Pa).
    pub elastic_modulus: f64,
    pub poisson_ratio: f64,
    pub tensile_strain: f64,
    /// Lattice constant a (m).
    pub lattice_constant: f64,
    /// Magnetic field gradient (T/m).
    pub field_gradient: f64,
    pub g_factor: f64,
    /// Bohr magneton (J/T).
    pub bohr_magneton: f64,
}

/// Result of [`physical_to_dimensionless`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessMap {
    /// Fundamental angular frequency (rad/s).
    pub omega0: f64,
    /// `floor(R / a)`.
    pub n_modes: usize,
    /// Tension-to-bending ratio `12 (1 - sigma^2) eps (R/h)^2`.
    pub tau: f64,
    /// Boundary regime whose closed-form fundamental frequency was used.
    pub regime: Boundary,
    /// Fundamental-mode coupling `g_e mu_B eta x_zp / hbar` (rad/s).
    pub g0: f64,
}

const HBAR: f64 = 1.054_571_817e-34;

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("thickness", self.thickness),
            ("mass_density", self.mass_density),
            ("elastic_modulus", self.elastic_modulus),
            ("lattice_constant", self.lattice_constant),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(invalid("poisson_ratio", format!("must lie in [0, 0.5), got {}", self.poisson_ratio)));
        }
        if !(self.tensile_strain >= 0.0 && self.tensile_strain.is_finite()) {
            return Err(invalid("tensile_strain", format!("must be >= 0, got {}", self.tensile_strain)));
        }
        Ok(())
    }
}

/// Map SI parameters to the inputs of the dimensionless core. The clamped
/// formula `(a1/R)^2 sqrt(E h^3 / 12 mu (1 - sigma^2))` is used for
/// `tau <= 1`, the strained formula `(b1/R) sqrt(E h eps / mu)` above.
pub fn physical_to_dimensionless(phys: &PhysicalParams) -> Result<DimensionlessMap> {
    phys.validate()?;
    let ratio = phys.radius / phys.lattice_constant;
    // Absorb representation error in ratios like 150e-9 / 0.15e-9.
    let n_modes = (ratio * (1.0 + 1e-12)).floor() as usize;
    let aspect = phys.radius / phys.thickness;
    let sigma2 = phys.poisson_ratio * phys.poisson_ratio;
    let tau = 12.0 * (1.0 - sigma2) * phys.tensile_strain * aspect * aspect;
    let (regime, omega0) = if tau <= 1.0 {
        let a1 = clamped_plate_roots(1)?.first();
        let rigidity = phys.elastic_modulus * phys.thickness.powi(3) / (12.0 * phys.mass_density * (1.0 - sigma2));
        (Boundary::Clamped, (a1 / phys.radius).powi(2) * rigidity.sqrt())
    } else {
        let b1 = zeros_j0(1)?.first();
        let wave_speed = (phys.elastic_modulus * phys.thickness * phys.tensile_strain / phys.mass_density).sqrt();
        (Boundary::Strained, b1 / phys.radius * wave_speed)
    };
    let mass = phys.mass_density * PI * phys.radius * phys.radius * effective_mass_fraction(regime, 0)?;
    let x_zp = (HBAR / (2.0 * mass * omega0)).sqrt();
    let g0 = phys.g_factor * phys.bohr_magneton * phys.field_gradient * x_zp / HBAR;
    Ok(DimensionlessMap { omega0, n_modes, tau, regime, g0 })
}
