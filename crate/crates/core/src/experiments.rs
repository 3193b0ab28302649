//! End-to-end runs behind the command-line subcommands.

use crate::config::{free_particle, ScenarioConfig, WindowConfig};
use crate::error::{BomcaError, Result};
use crate::hierarchy::{propagate_path, TrajectoryState, TruncationOrder};
use crate::manifold::{
    build_manifold, reconstruct_wavefunction, relative_divergence, transmission_probability, Launch, ManifoldSample,
    MarchWindow, OrderTransmission, ReconstructedWavefunction, ReconstructionMeta, TransmissionCurve,
    TransmissionEntry,
};
use crate::model::{GaussianWavepacket, SystemSpec};
use crate::numerics::uniform_grid;
use crate::reference::{analytic_free_gaussian, asymptotic_time, propagate_gaussian, transmission_exact, ExactTransmission, GridWavefunction};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Arrival spacing for open-ended transmission marches.
pub const DEFAULT_TRANSMISSION_STEP: f64 = 0.04;
/// Cap on marched samples per direction.
const MAX_SAMPLES: usize = 2000;

fn launch_for(cfg: &ScenarioConfig, wp: GaussianWavepacket, sys: &SystemSpec, order: TruncationOrder, t_f: f64) -> Launch {
    Launch {
        wp,
        sys: *sys,
        order,
        t_f,
        integrator: cfg.integrator_for(t_f),
        settings: cfg.manifold,
    }
}

/// Samples of the manifold landing in `window`, one step past each end.
pub fn window_manifold(launch: &Launch, window: &WindowConfig, dx_real: f64) -> Result<Vec<ManifoldSample>> {
    build_manifold(
        launch,
        &MarchWindow {
            lo: window.lo,
            hi: Some(window.hi),
            anchor: window.anchor.unwrap_or(window.hi),
            dx_real,
            tail_cutoff: f64::MIN_POSITIVE,
            max_samples: MAX_SAMPLES,
        },
    )
}

/// Seed target for the transmitted manifold: three packet widths beyond the
/// free-flight centre, never left of the barrier.
pub fn transmitted_anchor(wp: &GaussianWavepacket, sys: &SystemSpec, t_f: f64) -> f64 {
    let spread = Complex64::new(1.0, 2.0 * sys.hbar * wp.alpha * t_f / sys.mass).norm();
    (wp.x_c + wp.p_c * t_f / sys.mass).max(0.0) + 3.0 * wp.width() * spread
}

#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    pub order: usize,
    pub t_f: f64,
    pub samples: Vec<ManifoldSample>,
    /// Dense paths of the ok samples, in sample order.
    pub paths: Vec<Vec<TrajectoryState>>,
}

/// Marches the manifold over the first configured window and records dense paths.
pub fn run_trajectories(cfg: &ScenarioConfig) -> Result<Vec<TrajectoryRun>> {
    let t_f = cfg.t_f()?;
    let sys = cfg.system_spec()?;
    let wp = cfg.wavepacket()?;
    let window = *cfg
        .run
        .windows
        .first()
        .ok_or_else(|| BomcaError::Config("run.windows needs at least one window".into()))?;
    let times = uniform_grid(0.0, t_f, cfg.run.path_samples.max(2));
    let times = &times[..times.len() - 1];
    cfg.orders()?
        .into_par_iter()
        .map(|order| {
            let launch = launch_for(cfg, wp, &sys, order, t_f);
            let samples = window_manifold(&launch, &window, cfg.march_step(window.hi - window.lo))?;
            let paths = samples
                .par_iter()
                .filter(|s| s.is_ok())
                .map(|s| propagate_path(s.x0, &wp, &sys, order, t_f, times, &launch.integrator).map(|p| p.states))
                .collect::<Result<Vec<_>>>()?;
            Ok(TrajectoryRun { order: order.get(), t_f, samples, paths })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OrderWavefunction {
    pub order: usize,
    pub samples: Vec<ManifoldSample>,
    pub psi: ReconstructedWavefunction,
    /// `(Σ(|ψ| − |ψ_exact|)² dx)^½` over the window grid.
    pub l2: f64,
    /// `l2` divided by `(Σ|ψ_exact|² dx)^½`.
    pub relative_l2: f64,
}

#[derive(Debug, Clone)]
pub struct WindowWavefunction {
    pub window: WindowConfig,
    pub grid: Vec<f64>,
    pub exact: Vec<Complex64>,
    pub orders: Vec<(usize, Result<OrderWavefunction>)>,
}

#[derive(Debug, Clone)]
pub struct WavefunctionRun {
    pub t_f: f64,
    pub exact: GridWavefunction,
    pub windows: Vec<WindowWavefunction>,
}

impl WavefunctionRun {
    pub fn failures(&self) -> usize {
        self.windows.iter().flat_map(|w| &w.orders).filter(|(_, r)| r.is_err()).count()
    }
}

/// Reconstructs each window for each order on the oracle grid points inside it
/// and compares `|ψ|` with the split-operator result.
pub fn run_wavefunction(cfg: &ScenarioConfig) -> Result<WavefunctionRun> {
    let t_f = cfg.t_f()?;
    let sys = cfg.system_spec()?;
    let wp = cfg.wavepacket()?;
    if cfg.run.windows.is_empty() {
        return Err(BomcaError::Config("run.windows needs at least one window".into()));
    }
    let exact = propagate_gaussian(&wp, &sys, t_f, cfg.oracle.grid, cfg.oracle.dt)?;
    let x = exact.positions();
    let dx = exact.grid.dx();
    let orders = cfg.orders()?;
    let windows = cfg
        .run
        .windows
        .iter()
        .map(|window| {
            let idx: Vec<usize> = (0..x.len()).filter(|&j| x[j] >= window.lo && x[j] <= window.hi).collect();
            let grid: Vec<f64> = idx.iter().map(|&j| x[j]).collect();
            let reference: Vec<Complex64> = idx.iter().map(|&j| exact.psi[j]).collect();
            let reference_norm = (reference.iter().map(|p| p.norm_sqr()).sum::<f64>() * dx).sqrt();
            let results = orders
                .par_iter()
                .map(|&order| {
                    let launch = launch_for(cfg, wp, &sys, order, t_f);
                    let result = window_manifold(&launch, window, cfg.march_step(window.hi - window.lo)).and_then(|samples| {
                        let meta = ReconstructionMeta {
                            order: order.get(),
                            trajectories: samples.len(),
                            landing_tolerance: launch.settings.landing_tolerance,
                        };
                        let psi = reconstruct_wavefunction(&samples, &grid, &sys, meta, t_f)?;
                        let l2 = (psi
                            .psi
                            .iter()
                            .zip(&reference)
                            .map(|(a, b)| (a.norm() - b.norm()).powi(2))
                            .sum::<f64>()
                            * dx)
                            .sqrt();
                        Ok(OrderWavefunction { order: order.get(), samples, psi, l2, relative_l2: l2 / reference_norm })
                    });
                    (order.get(), result)
                })
                .collect();
            WindowWavefunction { window: *window, grid, exact: reference, orders: results }
        })
        .collect();
    Ok(WavefunctionRun { t_f, exact, windows })
}

/// Full pipeline for the transmitted probability at one order: seed, open-ended
/// march, reconstruction on a uniform grid through `x = 0`, Simpson quadrature.
pub fn transmission_bomca(
    launch: &Launch,
    lo: f64,
    dx_real: f64,
    tail_cutoff: f64,
    grid_spacing: f64,
) -> Result<(f64, Vec<ManifoldSample>)> {
    let window = MarchWindow {
        lo,
        hi: None,
        anchor: transmitted_anchor(&launch.wp, &launch.sys, launch.t_f),
        dx_real,
        tail_cutoff,
        max_samples: MAX_SAMPLES,
    };
    let samples = build_manifold(launch, &window)?;
    let arrivals: Vec<f64> = samples.iter().filter(|s| s.is_ok()).map(|s| s.x_f.re).collect();
    let (Some(&first), Some(&last)) = (arrivals.first(), arrivals.last()) else {
        return Err(BomcaError::InsufficientCoverage("no ok samples".into()));
    };
    if first > 0.0 {
        return Err(BomcaError::InsufficientCoverage(format!(
            "transmitted arrivals start at x = {first:.4}, right of the barrier centre"
        )));
    }
    let h = grid_spacing;
    let grid: Vec<f64> = ((first / h).ceil() as i64..=(last / h).floor() as i64).map(|j| j as f64 * h).collect();
    let meta = ReconstructionMeta {
        order: launch.order.get(),
        trajectories: samples.len(),
        landing_tolerance: launch.settings.landing_tolerance,
    };
    let psi = reconstruct_wavefunction(&samples, &grid, &launch.sys, meta, launch.t_f)?;
    Ok((transmission_probability(&psi)?, samples))
}

fn describe(e: &BomcaError) -> String {
    format!("{}: {e}", e.kind())
}

/// `T(E)` from the oracle and from the pipeline at every configured order.
/// Failures are recorded per point and never abort the sweep.
pub fn run_transmission(cfg: &ScenarioConfig) -> Result<TransmissionCurve> {
    let sys = cfg.system_spec()?;
    let orders = cfg.orders()?;
    let energies = cfg.energies();
    let dx_real = cfg.run.march_step.unwrap_or(DEFAULT_TRANSMISSION_STEP);
    let entries = energies
        .par_iter()
        .map(|&energy| -> Result<TransmissionEntry> {
            let wp = cfg.wavepacket_for(energy)?;
            let exact = exact_transmission(cfg, &wp, &sys);
            let t_f = match (&exact, cfg.run.t_f) {
                (Ok(e), _) => Some(e.t),
                (Err(_), t_f) => t_f,
            };
            let orders = orders
                .par_iter()
                .map(|&order| {
                    let result = match t_f {
                        Some(t_f) => transmission_bomca(
                            &launch_for(cfg, wp, &sys, order, t_f),
                            cfg.run.transmission_lo,
                            dx_real,
                            cfg.run.tail_cutoff,
                            cfg.grid_spacing(),
                        )
                        .map(|(t, _)| t),
                        None => Err(BomcaError::Config("no final time: the oracle found no asymptotic time".into())),
                    };
                    let exact_value = exact.as_ref().ok().map(|e| e.transmission);
                    match result {
                        Ok(t) => OrderTransmission {
                            order: order.get(),
                            transmission: Some(t),
                            relative_divergence: exact_value.map(|e| relative_divergence(t, e)),
                            error: None,
                        },
                        Err(e) => OrderTransmission {
                            order: order.get(),
                            transmission: None,
                            relative_divergence: None,
                            error: Some(describe(&e)),
                        },
                    }
                })
                .collect();
            Ok(TransmissionEntry {
                energy,
                t_f: t_f.unwrap_or(f64::NAN),
                exact: exact.as_ref().ok().map(|e| e.transmission),
                exact_error: exact.as_ref().err().map(describe),
                orders,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransmissionCurve { entries })
}

fn exact_transmission(cfg: &ScenarioConfig, wp: &GaussianWavepacket, sys: &SystemSpec) -> Result<ExactTransmission> {
    let o = &cfg.oracle;
    match cfg.run.t_f {
        Some(t_f) => transmission_exact(wp, sys, t_f, o.grid, o.dt),
        None => asymptotic_time(wp, sys, o.grid, o.dt, o.asymptotic.t_start, o.asymptotic.t_step, o.asymptotic.t_max),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSummary {
    pub energy: f64,
    pub t_f: f64,
    pub transmission: f64,
    pub flux_at_origin: f64,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub summary: OracleSummary,
    pub psi: GridWavefunction,
}

/// Split-operator propagation for every configured energy, to `t_f` or to the
/// asymptotic time when no `t_f` is given.
pub fn run_oracle(cfg: &ScenarioConfig) -> Result<Vec<OracleRun>> {
    let sys = cfg.system_spec()?;
    let o = &cfg.oracle;
    cfg.energies()
        .par_iter()
        .map(|&energy| {
            let wp = cfg.wavepacket_for(energy)?;
            let t_f = match cfg.run.t_f {
                Some(t) => t,
                None => {
                    asymptotic_time(&wp, &sys, o.grid, o.dt, o.asymptotic.t_start, o.asymptotic.t_step, o.asymptotic.t_max)?.t
                }
            };
            let psi = propagate_gaussian(&wp, &sys, t_f, o.grid, o.dt)?;
            let summary = OracleSummary {
                energy,
                t_f: psi.t,
                transmission: psi.transmitted_probability(),
                flux_at_origin: psi.flux_at(0.0, &sys),
                norm: psi.norm(),
            };
            Ok(OracleRun { summary, psi })
        })
        .collect()
}

/// Max `|ψ_bomca − ψ_analytic|` for the free packet at `N = 1` over the first
/// configured window, on `n_points` uniform points.
pub fn free_particle_error(cfg: &ScenarioConfig, n_points: usize) -> Result<f64> {
    let t_f = cfg.t_f()?;
    let sys = cfg.system_spec()?;
    let wp = cfg.wavepacket()?;
    let window = *cfg
        .run
        .windows
        .first()
        .ok_or_else(|| BomcaError::Config("run.windows needs at least one window".into()))?;
    let order = TruncationOrder::new(1)?;
    let launch = launch_for(cfg, wp, &sys, order, t_f);
    let samples = window_manifold(&launch, &window, cfg.march_step(window.hi - window.lo))?;
    let grid = uniform_grid(window.lo, window.hi, n_points);
    let meta = ReconstructionMeta { order: 1, trajectories: samples.len(), landing_tolerance: launch.settings.landing_tolerance };
    let psi = reconstruct_wavefunction(&samples, &grid, &sys, meta, t_f)?;
    Ok(grid
        .iter()
        .zip(&psi.psi)
        .map(|(&x, p)| (p - analytic_free_gaussian(&wp, &sys, Complex64::new(x, 0.0), t_f)).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, result: Result<(bool, String)>) -> SelfTestCheck {
    match result {
        Ok((passed, detail)) => SelfTestCheck { name: name.into(), passed, detail },
        Err(e) => SelfTestCheck { name: name.into(), passed: false, detail: describe(&e) },
    }
}

/// Quick end-to-end checks of the engine and both oracles.
pub fn selftest() -> Vec<SelfTestCheck> {
    let mut out = Vec::new();
    out.push(check("free_particle_exactness", (|| {
        let err = free_particle_error(&free_particle(2.0, 1.0, 3.0), 201)?;
        Ok((err <= 1e-6, format!("max |Δψ| = {err:.3e}")))
    })()));
    out.push(check("first_order_specialisation", (|| {
        let cfg = crate::config::preset("fig2a")?;
        let sys = cfg.system_spec()?;
        let wp = cfg.wavepacket()?;
        let ic = cfg.integrator_for(0.85);
        let x0 = Complex64::new(-0.65, 0.02);
        let generic = propagate_path(x0, &wp, &sys, TruncationOrder::new(1)?, 0.85, &[], &ic)?.states.pop().expect("final state");
        let hand = crate::hierarchy::propagate_first_order(x0, &wp, &sys, 0.85, &ic)?;
        let rel = (generic.x - hand.x).norm() / hand.x.norm();
        Ok((rel <= 1e-12, format!("relative |Δx| = {rel:.3e}")))
    })()));
    out.push(check("oracle_norm", (|| {
        let cfg = crate::config::preset("fig2a")?;
        let sys = cfg.system_spec()?;
        let psi = propagate_gaussian(&cfg.wavepacket()?, &sys, 0.1, cfg.oracle.grid, cfg.oracle.dt)?;
        let drift = (psi.norm() - 1.0).abs();
        Ok((drift <= 1e-10, format!("norm drift = {drift:.3e}")))
    })()));
    out.push(check("fig1_tunnelling", (|| {
        let runs = run_trajectories(&crate::config::preset("fig1")?)?;
        let ok = runs[0].samples.iter().filter(|s| s.is_ok() && s.x_f.re > 0.0).count();
        Ok((ok >= 10, format!("{ok} ok samples with Re x_f > 0")))
    })()));
    out
}
