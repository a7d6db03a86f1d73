use std::f64::consts::PI;

use rayon::prelude::*;

use sbm_core::critical::coupling_sweep;
use sbm_core::dephasing::{blp_measure, decoherence_function, refined_trace, DephasingTrace, Method};
use sbm_core::dynamics::{ensemble_polarization, EnsembleConfig, MemorySolver, SpinParams};
use sbm_core::grid;
use sbm_core::membrane::{build_mode_set, Boundary, ModeSet};
use sbm_core::spectral::{fit_power_exponent, Sampling, SpectralDensity};

use crate::config::{DynamicsConfig, GridKind, MethodKind, RunConfig, SamplingKind, SolverKind, UnitKind};
use crate::error::CliError;
use crate::output::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Modes,
    Spectrum,
    ExponentScan,
    Dephase,
    BlpScan,
    Dynamics,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Spectrum => "spectrum",
            Command::ExponentScan => "exponent-scan",
            Command::Dephase => "dephase",
            Command::BlpScan => "blp-scan",
            Command::Dynamics => "dynamics",
            Command::Sweep => "sweep",
        }
    }

    fn default_unit(self) -> UnitKind {
        match self {
            Command::Dynamics | Command::Sweep => UnitKind::Cutoff,
            _ => UnitKind::Fundamental,
        }
    }
}

/// Output of one command: named files plus the mode set it was computed on.
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub modes: ModeSet,
}

/// Fill per-command defaults that the manifest should record explicitly.
pub fn resolve(command: Command, cfg: &mut RunConfig) {
    cfg.membrane.frequency_unit.get_or_insert(command.default_unit());
}

/// Validate the whole configuration for `command` before any heavy work.
pub fn run(command: Command, cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let spec = cfg.membrane.spec()?;
    let modes = build_mode_set(&spec)?;
    let files = match command {
        Command::Modes => vec![("modes.txt".to_string(), modes.to_table())],
        Command::Spectrum => vec![("spectrum.txt".into(), spectrum(cfg, &modes)?)],
        Command::ExponentScan => vec![("exponent_scan.txt".into(), exponent_scan(cfg)?)],
        Command::Dephase => vec![("dephase.txt".into(), dephase(cfg, &modes)?)],
        Command::BlpScan => vec![("blp_scan.txt".into(), blp_scan(cfg, &modes)?)],
        Command::Dynamics => vec![("polarization.txt".into(), dynamics(cfg, &modes)?)],
        Command::Sweep => vec![("sweep.txt".into(), sweep(cfg, &modes)?)],
    };
    Ok(RunOutput { files, modes })
}

fn spectrum(cfg: &RunConfig, modes: &ModeSet) -> Result<String, CliError> {
    let c = &cfg.spectrum;
    let lo = c.nu_lo.unwrap_or(0.1 * modes.fundamental());
    let hi = c.nu_hi.unwrap_or(2.0 * modes.cutoff());
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::config("spectrum.nu_hi", format!("need 0 < nu_lo < nu_hi, got [{lo}, {hi}]")));
    }
    if c.n_points < 2 {
        return Err(CliError::config("spectrum.n_points", "need at least 2 points"));
    }
    let nus = match c.grid {
        GridKind::Log => grid::logarithmic(lo, hi, c.n_points)?,
        GridKind::Linear => grid::linear(lo, hi, c.n_points)?,
    };
    let sd = SpectralDensity::new(modes);
    let mut t = Table::new(&["nu", "J"]);
    for (nu, j) in sd.sample(&nus) {
        t.row(&[nu, j]);
    }
    Ok(t.finish())
}

fn exponent_scan(cfg: &RunConfig) -> Result<String, CliError> {
    let c = &cfg.exponent_scan;
    if c.tau_values.is_empty() {
        return Err(CliError::config("exponent_scan.tau_values", "must not be empty"));
    }
    if let Some(tau) = c.tau_values.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(CliError::config("exponent_scan.tau_values", format!("must be finite and >= 0, got {tau}")));
    }
    if !(c.lo_factor > 0.0 && c.hi_factor > 0.0) {
        return Err(CliError::config("exponent_scan.lo_factor", "window factors must be positive"));
    }
    let sampling = match c.sampling {
        SamplingKind::CellAverage => Sampling::CellAverage,
        SamplingKind::Point => Sampling::Point,
    };
    let base = cfg.membrane.spec()?;
    let fits = c
        .tau_values
        .par_iter()
        .map(|&tau| {
            let spec = sbm_core::membrane::MembraneSpec { boundary: Boundary::Intermediate { tau }, ..base };
            let modes = build_mode_set(&spec)?;
            let sd = SpectralDensity::new(&modes);
            fit_power_exponent(
                &sd,
                c.lo_factor * modes.fundamental(),
                c.hi_factor * modes.cutoff(),
                c.n_points,
                sampling,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["tau", "s", "residual"]);
    for (&tau, fit) in c.tau_values.iter().zip(&fits) {
        t.row(&[tau, fit.s, fit.residual]);
    }
    Ok(t.finish())
}

fn dephasing_trace(
    modes: &ModeSet,
    temperature: f64,
    periods: f64,
    n_points: usize,
    max_jump: f64,
    method: MethodKind,
) -> Result<DephasingTrace, CliError> {
    if !(periods > 0.0 && periods.is_finite()) {
        return Err(CliError::config("dephasing.periods", format!("must be positive, got {periods}")));
    }
    let t_end = periods * 2.0 * PI / modes.fundamental();
    Ok(match method {
        MethodKind::ModeSum => refined_trace(modes, temperature, t_end, n_points, max_jump)?,
        MethodKind::Quadrature => {
            let times = grid::linear(0.0, t_end, n_points)?;
            decoherence_function(modes, temperature, &times, Method::Quadrature)?
        }
    })
}

fn dephase(cfg: &RunConfig, modes: &ModeSet) -> Result<String, CliError> {
    let c = &cfg.dephasing;
    let trace = dephasing_trace(modes, c.temperature, c.periods, c.n_points, c.max_jump, c.method)?;
    let mut t = Table::new(&["t", "gamma_tilde", "G"]);
    for i in 0..trace.times.len() {
        t.row(&[trace.times[i], trace.gamma_tilde[i], trace.envelope[i]]);
    }
    if let Ok(blp) = blp_measure(&trace) {
        t.note("blp_measure", format!("{:.16e}", blp.measure));
    }
    Ok(t.finish())
}

fn blp_scan(cfg: &RunConfig, modes: &ModeSet) -> Result<String, CliError> {
    let c = &cfg.blp_scan;
    if c.g0_values.is_empty() || c.temperatures.is_empty() {
        return Err(CliError::config("blp_scan.g0_values", "g0_values and temperatures must not be empty"));
    }
    if let Some(g) = c.g0_values.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(CliError::config("blp_scan.g0_values", format!("must be positive, got {g}")));
    }
    if let Some(temp) = c.temperatures.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(CliError::config("blp_scan.temperatures", format!("must be finite and >= 0, got {temp}")));
    }
    let base = modes.couplings()[0];
    let points: Vec<(f64, f64)> =
        c.g0_values.iter().flat_map(|&g| c.temperatures.iter().map(move |&temp| (g, temp))).collect();
    let measures = points
        .par_iter()
        .map(|&(g, temp)| -> Result<f64, CliError> {
            let scaled = modes.scaled_couplings(g / base)?;
            let trace = dephasing_trace(&scaled, temp, c.periods, c.n_points, c.max_jump, MethodKind::ModeSum)?;
            Ok(blp_measure(&trace)?.measure)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["g0", "T", "N"]);
    for (&(g, temp), n) in points.iter().zip(measures) {
        t.row(&[g, temp, n]);
    }
    Ok(t.finish())
}

fn ensemble_config(
    c: &DynamicsConfig,
    seed: u64,
    modes: &ModeSet,
    spin: &SpinParams,
) -> Result<EnsembleConfig, CliError> {
    let mut e = EnsembleConfig::with_defaults(modes, spin, c.t_max, seed);
    e.n_traj = c.n_traj;
    e.temperature = c.temperature;
    if let Some(dt) = c.dt {
        e.dt = dt;
    }
    e.memory_cutoff = c.memory_cutoff.unwrap_or(c.t_max);
    if let Some(w) = c.omega_star {
        e.omega_star = w;
    }
    e.solver = match c.solver {
        SolverKind::Fft => MemorySolver::Fft,
        SolverKind::Direct => MemorySolver::Direct,
    };
    e.validate(modes, spin)?;
    Ok(e)
}

fn dynamics(cfg: &RunConfig, modes: &ModeSet) -> Result<String, CliError> {
    let spin = SpinParams::new(cfg.dynamics.rabi)?;
    let e = ensemble_config(&cfg.dynamics, cfg.seed, modes, &spin)?;
    let trace = ensemble_polarization(modes, &spin, &e)?;
    let mut t = Table::new(&["t", "P", "stderr"]);
    for i in 0..trace.times.len() {
        t.row(&[trace.times[i], trace.p_mean[i], trace.p_stderr[i]]);
    }
    t.note("n_traj", trace.n_traj);
    t.note("n_failed", trace.n_failed);
    t.note("dt", format!("{:.16e}", e.dt));
    Ok(t.finish())
}

fn sweep(cfg: &RunConfig, modes: &ModeSet) -> Result<String, CliError> {
    let c = &cfg.sweep;
    let spin = SpinParams::new(cfg.dynamics.rabi)?;
    let e = ensemble_config(&cfg.dynamics, cfg.seed, modes, &spin)?;
    let result = coupling_sweep(modes, &spin, &e, &c.g0_values, c.window_fraction, c.threshold)?;
    let mut t = Table::new(&["g0", "M", "stderr_M"]);
    for (&g, m) in result.g_values.iter().zip(&result.magnetizations) {
        match m {
            Some(m) => t.row(&[g, m.value, m.stderr]),
            None => t.row(&[g, f64::NAN, f64::NAN]),
        }
    }
    for (i, err) in &result.failures {
        t.note("failed", format!("g0={:.16e} {err}", result.g_values[*i]));
    }
    match result.g_c {
        Some(gc) => t.note("g_c", format!("{gc:.16e}")),
        None => t.note("g_c", "none"),
    }
    match result.scaling {
        Some(fit) => {
            t.note("exponent", format!("{:.16e}", fit.exponent));
            t.note("uncertainty", format!("{:.16e}", fit.uncertainty));
        }
        None => t.note("exponent", "none"),
    }
    Ok(t.finish())
}
