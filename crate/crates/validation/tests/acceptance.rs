//! Acceptance suite. Runs every criterion in sequence, prints one line each
//! and exits nonzero if any failed. Sequential on purpose: the runtime
//! budgets are measured per criterion and must not share the CPU.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use sbm_cli::commands::Command;
use sbm_cli::Args;
use sbm_core::critical::{coupling_sweep, magnetization};
use sbm_core::dephasing::{blp_measure, decoherence_function, local_maxima, refined_trace, Method};
use sbm_core::dynamics::{ensemble_polarization, niba_phase_functions, EnsembleConfig, SpinParams};
use sbm_core::grid;
use sbm_core::membrane::{
    build_mode_set, coupling_from_profile, profile_coupling_ratios, Boundary, FrequencyUnit, MembraneSpec, ModeSet,
};
use sbm_core::spectral::{fit_power_exponent, Sampling, SpectralDensity};

const CLAMPED_SPAN: (f64, f64) = (8e5, 1.2e6);
const STRAINED_SPAN: (f64, f64) = (1.0e3, 1.5e3);
const CLAMPED_EXPONENT: (f64, f64) = (-1.0, 0.1);
const STRAINED_EXPONENT: (f64, f64) = (0.0, 0.05);
const CLAMPED_LAW_TOL: f64 = 0.03;
const STRAINED_LAW_TOL: f64 = 0.05;
const ORACLE_REL_TOL: f64 = 1e-3;
const REVIVAL_WINDOW: (f64, f64) = (0.9, 1.1);
const WEAK_BLP_LIMIT: f64 = 1e-3;
const BARE_TOL: f64 = 1e-4;
const IDENTITY_REL_TOL: f64 = 1e-14;
const LOCALIZED_M: f64 = 0.1;
const DELOCALIZED_M: f64 = 0.05;
const GC_BAND: (f64, f64) = (0.001, 0.005);
const SCALING_EXPONENT: (f64, f64) = (1.0, 0.3);

/// Dynamics runs: `t_max = 1600/nu_c` gives a last-quarter window of about
/// six Rabi periods at `Omega = 0.1 nu_c`.
const RABI: f64 = 0.1;
const T_MAX: f64 = 1600.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = Result<Outcome, String>;
type Criterion = (&'static str, u64, fn() -> Check);

fn spec(boundary: Boundary, n_modes: usize, g0: f64, q: f64, unit: FrequencyUnit) -> MembraneSpec {
    MembraneSpec { boundary, n_modes, g0, quality_factor: q, frequency_unit: unit }
}

fn modes(boundary: Boundary, n_modes: usize, g0: f64, q: f64, unit: FrequencyUnit) -> Result<ModeSet, String> {
    build_mode_set(&spec(boundary, n_modes, g0, q, unit)).map_err(|e| e.to_string())
}

fn within(x: f64, (center, tol): (f64, f64)) -> bool {
    (x - center).abs() <= tol
}

fn span(boundary: Boundary, band: (f64, f64)) -> Check {
    let m = modes(boundary, 1000, 0.2, 1e3, FrequencyUnit::Fundamental)?;
    let ratio = m.omegas()[999] / m.omegas()[0];
    Ok(outcome(ratio >= band.0 && ratio <= band.1, format!("omega_999/omega_0 = {ratio:.6e}")))
}

fn c3_exponents() -> Check {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, boundary, target) in
        [("clamped", Boundary::Clamped, CLAMPED_EXPONENT), ("strained", Boundary::Strained, STRAINED_EXPONENT)]
    {
        let m = modes(boundary, 1000, 0.2, 1e3, FrequencyUnit::Fundamental)?;
        let sd = SpectralDensity::new(&m);
        let fit = fit_power_exponent(&sd, 10.0 * m.fundamental(), 0.1 * m.cutoff(), 64, Sampling::CellAverage)
            .map_err(|e| e.to_string())?;
        pass &= within(fit.s, target);
        detail.push(format!("{name} s = {:.4}", fit.s));
    }
    Ok(outcome(pass, detail.join(", ")))
}

fn c4_coupling_laws() -> Check {
    let clamped = modes(Boundary::Clamped, 101, 1.0, 1e3, FrequencyUnit::Fundamental)?;
    let ratios = profile_coupling_ratios(Boundary::Clamped, 101).map_err(|e| e.to_string())?;
    let worst_clamped = ratios
        .iter()
        .zip(clamped.omegas())
        .map(|(r, w)| (r / (w / clamped.omegas()[0]).powf(-0.25) - 1.0).abs())
        .fold(0.0, f64::max);
    let ratios = profile_coupling_ratios(Boundary::Strained, 1000).map_err(|e| e.to_string())?;
    let worst_strained = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    // Single-mode entry point agrees with the batch routine.
    let spot = coupling_from_profile(Boundary::Strained, 37).map_err(|e| e.to_string())?;
    let consistent = (spot - ratios[37]).abs() < 1e-12;
    Ok(outcome(
        worst_clamped <= CLAMPED_LAW_TOL && worst_strained <= STRAINED_LAW_TOL && consistent,
        format!(
            "clamped worst {:.2}% (k <= 100), strained worst {:.2}%",
            100.0 * worst_clamped,
            100.0 * worst_strained
        ),
    ))
}

fn c5_oracle_equivalence() -> Check {
    let m = modes(Boundary::Strained, 200, 0.2, 1e4, FrequencyUnit::Fundamental)?;
    let times: Vec<f64> = (0..=50).map(|i| i as f64 * PI / 50.0).collect();
    let a = decoherence_function(&m, 0.0, &times, Method::ModeSum).map_err(|e| e.to_string())?;
    let b = decoherence_function(&m, 0.0, &times, Method::Quadrature).map_err(|e| e.to_string())?;
    let worst =
        a.gamma_tilde[1..].iter().zip(&b.gamma_tilde[1..]).map(|(x, y)| ((x - y) / x).abs()).fold(0.0, f64::max);
    Ok(outcome(worst <= ORACLE_REL_TOL, format!("worst relative difference {worst:.3e} on 50 points")))
}

fn c6_revivals() -> Check {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, boundary) in [("clamped", Boundary::Clamped), ("strained", Boundary::Strained)] {
        let m = modes(boundary, 1000, 0.2, 1e3, FrequencyUnit::Fundamental)?;
        let trace = refined_trace(&m, 0.0, 1.5 * 2.0 * PI, 1500, 0.01).map_err(|e| e.to_string())?;
        let period = 2.0 * PI / m.fundamental();
        let hit = local_maxima(&trace.envelope)
            .into_iter()
            .map(|i| trace.times[i] / period)
            .find(|x| *x >= REVIVAL_WINDOW.0 && *x <= REVIVAL_WINDOW.1);
        pass &= hit.is_some();
        detail.push(match hit {
            Some(x) => format!("{name} maximum at {x:.4} periods"),
            None => format!("{name} no maximum in window"),
        });
    }
    Ok(outcome(pass, detail.join(", ")))
}

fn blp(boundary: Boundary, g0: f64, temperature: f64) -> Result<f64, String> {
    let m = modes(boundary, 1000, g0, 1e3, FrequencyUnit::Fundamental)?;
    let trace = refined_trace(&m, temperature, 10.0 * 2.0 * PI, 2000, 0.01).map_err(|e| e.to_string())?;
    blp_measure(&trace).map(|r| r.measure).map_err(|e| e.to_string())
}

fn c7_non_markovianity() -> Check {
    let n_clamped = blp(Boundary::Clamped, 0.2, 1e-3)?;
    let n_strained = blp(Boundary::Strained, 0.2, 1e-3)?;
    let ordering = n_clamped > n_strained && n_strained > 0.0;
    let weak_clamped = blp(Boundary::Clamped, 0.01, 1e-3)?;
    let weak_strained = blp(Boundary::Strained, 0.01, 1e-3)?;
    let weak = weak_clamped < WEAK_BLP_LIMIT && weak_strained < WEAK_BLP_LIMIT;
    let mut monotone = true;
    let mut series = Vec::new();
    for boundary in [Boundary::Clamped, Boundary::Strained] {
        let values = [1e-3, 1e-2, 1e-1, 1.0].iter().map(|&t| blp(boundary, 0.2, t)).collect::<Result<Vec<_>, _>>()?;
        monotone &= values.windows(2).all(|w| w[1] <= w[0]);
        series.push(format!("{values:.4?}"));
    }
    Ok(outcome(
        ordering && weak && monotone,
        format!(
            "N(I) = {n_clamped:.4} vs N(II) = {n_strained:.4} [{}]; g0 = 0.01: {weak_clamped:.2e}, {weak_strained:.2e} [{}]; \
             over T: I {} II {} [{}]",
            ok(ordering),
            ok(weak),
            series[0],
            series[1],
            ok(monotone)
        ),
    ))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fails"
    }
}

fn c8_bare_limit() -> Check {
    let empty = ModeSet::empty(FrequencyUnit::Cutoff);
    let spin = SpinParams::new(1.0).map_err(|e| e.to_string())?;
    let mut cfg = EnsembleConfig::with_defaults(&empty, &spin, 20.0, 0);
    cfg.dt = 0.005;
    let trace = ensemble_polarization(&empty, &spin, &cfg).map_err(|e| e.to_string())?;
    let worst = trace.times.iter().zip(&trace.p_mean).map(|(t, p)| (p - t.cos()).abs()).fold(0.0, f64::max);
    Ok(outcome(worst <= BARE_TOL, format!("max |P - cos t| = {worst:.2e} at dt = 0.005")))
}

fn c9_identity() -> Check {
    let m = modes(Boundary::Clamped, 1000, 0.2, 1e3, FrequencyUnit::Fundamental)?;
    let taus = grid::linear(0.0, 20.0, 401).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for temperature in [0.0, 0.05, 1.0] {
        let (_, q2) = niba_phase_functions(&m, temperature, &taus);
        let trace = decoherence_function(&m, temperature, &taus, Method::ModeSum).map_err(|e| e.to_string())?;
        for (a, b) in q2.iter().zip(&trace.gamma_tilde) {
            let scale = a.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((a + b).abs() / scale);
        }
    }
    Ok(outcome(worst <= IDENTITY_REL_TOL, format!("max |Q2 + Gamma| / |Q2| = {worst:.1e}")))
}

fn dynamics_magnetization(m: &ModeSet, g0: f64, n_traj: usize, seed: u64) -> Result<f64, String> {
    let spin = SpinParams::new(RABI).map_err(|e| e.to_string())?;
    let scaled = m.scaled_couplings(g0 / m.couplings()[0]).map_err(|e| e.to_string())?;
    let mut cfg = EnsembleConfig::with_defaults(&scaled, &spin, T_MAX, seed);
    cfg.n_traj = n_traj;
    let trace = ensemble_polarization(&scaled, &spin, &cfg).map_err(|e| e.to_string())?;
    magnetization(&trace, 0.25).map(|mm| mm.value).map_err(|e| e.to_string())
}

fn c10_localization() -> Check {
    let m = modes(Boundary::Strained, 200, 0.02, 1e3, FrequencyUnit::Cutoff)?;
    let strong = dynamics_magnetization(&m, 0.02, 2000, 1)?;
    let weak = dynamics_magnetization(&m, 0.001, 2000, 2)?;
    Ok(outcome(
        strong > LOCALIZED_M && weak.abs() < DELOCALIZED_M,
        format!("M(0.02) = {strong:.4}, M(0.001) = {weak:.4}"),
    ))
}

/// Criteria 11 and 12 share one sweep.
fn c11_c12_sweep() -> Result<(Outcome, Outcome), String> {
    let m = modes(Boundary::Strained, 1000, 0.001, 1e3, FrequencyUnit::Cutoff)?;
    let spin = SpinParams::new(RABI).map_err(|e| e.to_string())?;
    let mut cfg = EnsembleConfig::with_defaults(&m, &spin, T_MAX, 100);
    cfg.n_traj = 2000;
    let g_grid: Vec<f64> = (1..=15).map(|i| i as f64 * 1e-3).collect();
    let sweep = coupling_sweep(&m, &spin, &cfg, &g_grid, 0.25, 0.05).map_err(|e| e.to_string())?;
    let values: Vec<String> = sweep
        .magnetizations
        .iter()
        .map(|mm| mm.map_or("failed".to_string(), |mm| format!("{:.3}", mm.value)))
        .collect();
    let c11 = match sweep.g_c {
        Some(gc) => outcome(
            gc >= GC_BAND.0 && gc <= GC_BAND.1,
            format!("g_c = {gc:.5} nu_c; M over g0 = 0.001..0.015: [{}]", values.join(", ")),
        ),
        None => outcome(false, format!("no threshold crossing; M = [{}]", values.join(", "))),
    };
    let c12 = match sweep.scaling {
        Some(fit) => outcome(
            within(fit.exponent, SCALING_EXPONENT),
            format!("exponent = {:.3} +- {:.3} from {} points", fit.exponent, fit.uncertainty, fit.n_points),
        ),
        None => outcome(false, "no scaling fit (fewer than 4 usable points above g_c)"),
    };
    Ok((c11, c12))
}

fn cli(command: Command, config: Option<&Path>, out: &Path, workers: usize, overrides: &[&str]) -> Result<(), String> {
    let args = Args {
        command,
        config: config.map(Path::to_path_buf),
        out: out.to_path_buf(),
        workers: Some(workers),
        seed: None,
        overrides: overrides.iter().map(|s| s.to_string()).collect(),
    };
    sbm_cli::execute(&args).map_err(|e| e.structured())
}

fn c13_reproducibility() -> Check {
    let runs: [(Command, &[&str]); 7] = [
        (Command::Modes, &["membrane.n_modes=200"]),
        (Command::Spectrum, &["membrane.n_modes=200", "spectrum.n_points=500"]),
        (Command::ExponentScan, &["membrane.n_modes=200", "exponent_scan.tau_values=[0.0, 1e3, 1e9]"]),
        (Command::Dephase, &["membrane.n_modes=200"]),
        (Command::BlpScan, &["membrane.n_modes=200", "blp_scan.g0_values=[0.1, 0.2]"]),
        (Command::Dynamics, &["membrane.n_modes=60", "membrane.g0=0.02", "dynamics.n_traj=64", "dynamics.t_max=400"]),
        (
            Command::Sweep,
            &["membrane.n_modes=60", "dynamics.n_traj=32", "dynamics.t_max=800", "sweep.g0_values=[0.005, 0.02]"],
        ),
    ];
    let mut mismatches = Vec::new();
    for (command, overrides) in runs {
        let first = tempfile::tempdir().map_err(|e| e.to_string())?;
        let second = tempfile::tempdir().map_err(|e| e.to_string())?;
        cli(command, None, first.path(), 1, overrides)?;
        let manifest = first.path().join("manifest.toml");
        cli(command, Some(&manifest), second.path(), 4, &[])?;
        let mut names: Vec<_> = fs::read_dir(first.path())
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.file_name()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        names.sort();
        for name in names {
            let a = fs::read(first.path().join(&name)).map_err(|e| e.to_string())?;
            let b = fs::read(second.path().join(&name)).unwrap_or_default();
            if a != b {
                mismatches.push(format!("{}/{}", command.name(), name.to_string_lossy()));
            }
        }
    }
    Ok(outcome(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "7 subcommands byte-identical with 1 vs 4 workers".to_string()
        } else {
            format!("differs: {}", mismatches.join(", "))
        },
    ))
}

fn report(id: &str, budget: Duration, elapsed: Duration, result: Check) -> bool {
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_budget = elapsed <= budget;
    let verdict = if pass && in_budget { "PASS" } else { "FAIL" };
    let timing = format!("{:.1}s of {}s", elapsed.as_secs_f64(), budget.as_secs());
    let timing = if in_budget { timing } else { format!("{timing}, over budget") };
    println!("criterion {id:>2}: {verdict} ({timing}) {detail}");
    pass && in_budget
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let single: [Criterion; 10] = [
        ("1", 5, || span(Boundary::Clamped, CLAMPED_SPAN)),
        ("2", 5, || span(Boundary::Strained, STRAINED_SPAN)),
        ("3", 30, c3_exponents),
        ("4", 60, c4_coupling_laws),
        ("5", 60, c5_oracle_equivalence),
        ("6", 30, c6_revivals),
        ("7", 300, c7_non_markovianity),
        ("8", 1, c8_bare_limit),
        ("9", 1, c9_identity),
        ("10", 1800, c10_localization),
    ];
    let mut all = true;
    for (id, budget, check) in single {
        let (result, elapsed) = timed(check);
        all &= report(id, secs(budget), elapsed, result);
    }
    let (result, elapsed) = timed(c11_c12_sweep);
    match result {
        Ok((c11, c12)) => {
            all &= report("11", secs(7200), elapsed, Ok(c11));
            all &= report("12", secs(7200), elapsed, Ok(c12));
        }
        Err(e) => {
            all &= report("11", secs(7200), elapsed, Err(e.clone()));
            all &= report("12", secs(7200), elapsed, Err(e));
        }
    }
    // Criterion 13 has no budget of its own; the bound only guards against hangs.
    let (result, elapsed) = timed(c13_reproducibility);
    all &= report("13", secs(600), elapsed, result);
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
