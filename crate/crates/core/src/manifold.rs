//! The launch manifold: complex initial positions whose trajectories arrive on the
//! real axis at `t_f`, how to find and march it, and what can be rebuilt from it.

use crate::error::{BomcaError, Result};
use crate::hierarchy::{propagate_trajectory, TrajectoryState, TruncationOrder};
use crate::model::{GaussianWavepacket, SystemSpec};
use crate::numerics::{simpson, ComplexSpline};
use crate::ode::IntegratorConfig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tunables of the seed search and march.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldSettings {
    /// Largest `|Im x_f|` an ok sample may have.
    pub landing_tolerance: f64,
    /// Largest `|Re x_f − target|` a seed may have.
    pub seed_window: f64,
    pub max_newton_iters: usize,
    /// Finite-difference step for `∂x_f/∂x₀`.
    pub probe_step: f64,
    /// Cap on a single Newton update `|Δx₀|`.
    pub max_newton_step: f64,
    /// Minimum `|δx_j|` between consecutive arrivals.
    pub stall_threshold: f64,
    /// An arrival farther than this fraction of `dx_real` from its target is a branch jump.
    pub jump_fraction: f64,
    /// Secant re-centering passes for an arrival that missed its target.
    pub max_recentering: usize,
    /// The march stops after this many dead samples in a row.
    pub max_consecutive_dead: usize,
}

impl Default for ManifoldSettings {
    fn default() -> Self {
        ManifoldSettings {
            landing_tolerance: 1e-4,
            seed_window: 1e-3,
            max_newton_iters: 40,
            probe_step: 1e-6,
            max_newton_step: 0.1,
            stall_threshold: 1e-9,
            jump_fraction: 0.5,
            max_recentering: 4,
            max_consecutive_dead: 3,
        }
    }
}

impl ManifoldSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("landing_tolerance", self.landing_tolerance),
            ("seed_window", self.seed_window),
            ("probe_step", self.probe_step),
            ("max_newton_step", self.max_newton_step),
            ("stall_threshold", self.stall_threshold),
            ("jump_fraction", self.jump_fraction),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(BomcaError::InvalidParameter(format!("manifold {name} must be positive (got {value})")));
            }
        }
        if self.max_newton_iters == 0 || self.max_consecutive_dead == 0 {
            return Err(BomcaError::InvalidParameter(
                "manifold max_newton_iters and max_consecutive_dead must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a trajectory launch depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct Launch {
    pub wp: GaussianWavepacket,
    pub sys: SystemSpec,
    pub order: TruncationOrder,
    pub t_f: f64,
    pub integrator: IntegratorConfig,
    pub settings: ManifoldSettings,
}

impl Launch {
    /// Default integrator and manifold settings for a run to `t_f`.
    pub fn new(wp: GaussianWavepacket, sys: SystemSpec, order: TruncationOrder, t_f: f64) -> Self {
        Launch {
            wp,
            sys,
            order,
            t_f,
            integrator: IntegratorConfig::for_duration(t_f),
            settings: ManifoldSettings::default(),
        }
    }

    pub fn arrive(&self, x0: Complex64) -> Result<TrajectoryState> {
        propagate_trajectory(x0, &self.wp, &self.sys, self.order, self.t_f, &self.integrator)
    }

    /// `∂x_f/∂x₀` by a one-sided difference, falling back to the other side if the probe dies.
    fn map_derivative(&self, x0: Complex64, arrival: Complex64) -> Result<Complex64> {
        let h = self.settings.probe_step * x0.norm().max(1.0);
        match self.arrive(x0 + h) {
            Ok(p) => Ok((p.x - arrival) / h),
            Err(e) if e.is_trajectory_death() => self.arrive(x0 - h).map(|p| (arrival - p.x) / h),
            Err(e) => Err(e),
        }
    }

    /// Launch point the free-Gaussian map sends to `target`:
    /// `x₀ = x_c + (target − x_c − p_c t/m)/(1 + 2iħαt/m)`.
    pub fn free_guess(&self, target: f64) -> Complex64 {
        let m = self.sys.mass;
        let spread = Complex64::new(1.0, 2.0 * self.sys.hbar * self.wp.alpha * self.t_f / m);
        self.wp.x_c + (target - self.wp.x_c - self.wp.p_c * self.t_f / m) / spread
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "kind", rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    Dead(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSample {
    pub x0: Complex64,
    pub x_f: Complex64,
    pub s_f: Complex64,
    pub v_f: Complex64,
    pub status: SampleStatus,
}

impl ManifoldSample {
    fn ok(x0: Complex64, arrival: &TrajectoryState) -> Self {
        ManifoldSample {
            x0,
            x_f: arrival.x,
            s_f: arrival.action,
            v_f: arrival.v[0],
            status: SampleStatus::Ok,
        }
    }

    fn dead(x0: Complex64, kind: &str) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        ManifoldSample { x0, x_f: nan, s_f: nan, v_f: nan, status: SampleStatus::Dead(kind.to_string()) }
    }

    pub fn is_ok(&self) -> bool {
        self.status == SampleStatus::Ok
    }

    /// `|exp(iS_f/ħ)|²` at the arrival point.
    pub fn density(&self, hbar: f64) -> f64 {
        (-2.0 * self.s_f.im / hbar).exp()
    }
}

/// A launch point on the manifold with its arrival and the local map derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub x0: Complex64,
    pub arrival: TrajectoryState,
    /// `∂x_f/∂x₀` at the seed.
    pub derivative: Complex64,
    pub iterations: usize,
}

impl Seed {
    pub fn sample(&self) -> ManifoldSample {
        ManifoldSample::ok(self.x0, &self.arrival)
    }
}

/// Offsets tried, in order, for the auxiliary target of a continuation seed search.
const CONTINUATION_OFFSETS: [f64; 8] = [0.5, 1.0, 1.5, 2.0, -0.5, -1.0, -1.5, -2.0];
const CONTINUATION_STEP: f64 = 0.05;

/// Damped Newton iteration on `x₀ ↦ x_f(t_f; x₀)` for a launch point landing on
/// `target_x`, starting from the free-Gaussian inverse map.
///
/// If that fails, a seed is found for a target further away, the manifold is
/// marched back to `target_x`, and Newton is restarted from the marched point.
pub fn find_seed(launch: &Launch, target_x: f64) -> Result<Seed> {
    let direct = match find_seed_from(launch, target_x, launch.free_guess(target_x)) {
        Err(e @ (BomcaError::SeedNotFound { .. } | BomcaError::DeadRegion { .. })) => e,
        other => return other,
    };
    for offset in CONTINUATION_OFFSETS {
        let Ok(far) = find_seed_from(launch, target_x + offset, launch.free_guess(target_x + offset)) else {
            continue;
        };
        let direction = if offset > 0.0 { -1 } else { 1 };
        let steps = (offset.abs() / CONTINUATION_STEP).ceil() as usize + 2;
        let path = march_while(launch, &far, direction, CONTINUATION_STEP, steps, |s| {
            (s.x_f.re - target_x) * offset > 0.0
        })?;
        let ok: Vec<&ManifoldSample> = path.iter().filter(|s| s.is_ok()).collect();
        let [.., a, b] = ok.as_slice() else { continue };
        if (b.x_f.re - target_x) * offset > 0.0 {
            continue;
        }
        let guess = a.x0 + (b.x0 - a.x0) * ((target_x - a.x_f.re) / (b.x_f.re - a.x_f.re));
        if let Ok(seed) = find_seed_from(launch, target_x, guess) {
            return Ok(seed);
        }
    }
    Err(direct)
}

/// [`find_seed`] with an explicit initial guess.
pub fn find_seed_from(launch: &Launch, target_x: f64, guess: Complex64) -> Result<Seed> {
    launch.settings.validate()?;
    let s = &launch.settings;
    let target = Complex64::new(target_x, 0.0);
    let converged = 1e-11 * target_x.abs().max(1.0);
    let mut x0 = guess;
    let mut arrival = match launch.arrive(x0) {
        Ok(a) => a,
        Err(e) if e.is_trajectory_death() => return Err(BomcaError::DeadRegion { target: target_x }),
        Err(e) => return Err(e),
    };
    let mut residual = (arrival.x - target).norm();
    for iteration in 0..s.max_newton_iters {
        let derivative = launch.map_derivative(x0, arrival.x).map_err(|e| {
            if e.is_trajectory_death() {
                BomcaError::DeadRegion { target: target_x }
            } else {
                e
            }
        })?;
        if residual <= converged {
            return accept_seed(launch, target_x, x0, arrival, derivative, iteration);
        }
        let mut step = (target - arrival.x) / derivative;
        if step.norm() > s.max_newton_step {
            step *= s.max_newton_step / step.norm();
        }
        let mut improved = None;
        for _ in 0..16 {
            let candidate = x0 + step;
            match launch.arrive(candidate) {
                Ok(a) if (a.x - target).norm() < residual => {
                    improved = Some((candidate, a));
                    break;
                }
                Ok(_) => {}
                Err(e) if e.is_trajectory_death() => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some((next, a)) = improved else {
            if residual <= 1e3 * converged {
                return accept_seed(launch, target_x, x0, arrival, derivative, iteration);
            }
            return Err(BomcaError::SeedNotFound { target: target_x, iterations: iteration + 1, residual });
        };
        x0 = next;
        arrival = a;
        residual = (arrival.x - target).norm();
    }
    Err(BomcaError::SeedNotFound { target: target_x, iterations: s.max_newton_iters, residual })
}

fn accept_seed(
    launch: &Launch,
    target_x: f64,
    x0: Complex64,
    arrival: TrajectoryState,
    derivative: Complex64,
    iterations: usize,
) -> Result<Seed> {
    let s = &launch.settings;
    if arrival.x.im.abs() > s.landing_tolerance || (arrival.x.re - target_x).abs() > s.seed_window {
        return Err(BomcaError::SeedNotFound {
            target: target_x,
            iterations,
            residual: (arrival.x - target_x).norm(),
        });
    }
    Ok(Seed { x0, arrival, derivative, iterations })
}

/// Marches the manifold from `seed` along the real axis.
///
/// The first step uses the seed's map derivative; afterwards
/// `x₀_{j+1} = x₀_j + (δx₀_j/δx_j)Δ` with `Δ` the offset from `x_f_j` to the next
/// real target `Re x_f_j ± dx_real`. Off-axis or jumped arrivals are re-centered by
/// secant corrections; samples that still miss are recorded as dead. Returns the seed
/// sample followed by `count` marched samples.
pub fn march_manifold(launch: &Launch, seed: &Seed, direction: i32, count: usize, dx_real: f64) -> Result<Vec<ManifoldSample>> {
    march_while(launch, seed, direction, dx_real, count, |_| true)
}

/// [`march_manifold`] that also stops once `keep_going` rejects an ok sample or
/// the dead-sample limit is reached.
pub fn march_while<F>(
    launch: &Launch,
    seed: &Seed,
    direction: i32,
    dx_real: f64,
    max_count: usize,
    mut keep_going: F,
) -> Result<Vec<ManifoldSample>>
where
    F: FnMut(&ManifoldSample) -> bool,
{
    if direction != 1 && direction != -1 {
        return Err(BomcaError::InvalidParameter(format!("march direction must be ±1 (got {direction})")));
    }
    if !(dx_real > 0.0 && dx_real.is_finite()) {
        return Err(BomcaError::InvalidParameter(format!("dx_real must be positive (got {dx_real})")));
    }
    let s = launch.settings;
    let dir = direction as f64;
    let mut samples = vec![seed.sample()];
    // last accepted (x₀, x_f) and the local inverse slope δx₀/δx_f
    let mut last = (seed.x0, seed.arrival.x);
    let mut slope = 1.0 / seed.derivative;
    let mut target = seed.arrival.x.re;
    let mut dead_run = 0;
    for _ in 0..max_count {
        target += dir * dx_real;
        let goal = Complex64::new(target, 0.0);
        let predicted = last.0 + slope * (goal - last.1);
        let landed = |a: &TrajectoryState| {
            a.x.im.abs() <= s.landing_tolerance && (a.x.re - target).abs() <= s.jump_fraction * dx_real
        };
        let mut x0 = predicted;
        let mut outcome = launch.arrive(x0);
        let mut local = slope;
        for _ in 0..s.max_recentering {
            let Ok(a) = &outcome else { break };
            if landed(a) {
                break;
            }
            let next = x0 + local * (goal - a.x);
            let next_outcome = launch.arrive(next);
            if let Ok(b) = &next_outcome {
                if b.x != a.x {
                    local = (next - x0) / (b.x - a.x);
                }
            }
            x0 = next;
            outcome = next_outcome;
        }
        let sample = match outcome {
            Ok(a) if landed(&a) => ManifoldSample::ok(x0, &a),
            Ok(_) => ManifoldSample::dead(x0, BomcaError::LandingMissed { distance: 0.0 }.kind()),
            Err(e) if e.is_trajectory_death() => ManifoldSample::dead(x0, e.kind()),
            Err(e) => return Err(e),
        };
        if sample.is_ok() {
            let step = (sample.x_f - last.1).norm();
            if step < s.stall_threshold {
                return Err(BomcaError::ManifoldStall { index: samples.len(), step });
            }
            slope = (sample.x0 - last.0) / (sample.x_f - last.1);
            last = (sample.x0, sample.x_f);
            dead_run = 0;
            let more = keep_going(&sample);
            samples.push(sample);
            if !more {
                break;
            }
        } else {
            dead_run += 1;
            samples.push(sample);
            if dead_run >= s.max_consecutive_dead {
                break;
            }
        }
    }
    Ok(samples)
}

/// Real-axis window covered by a two-sided march.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarchWindow {
    /// Left end; the march passes it by one step.
    pub lo: f64,
    /// Right end; `None` marches right until the tail cutoff.
    pub hi: Option<f64>,
    /// Where the seed should land.
    pub anchor: f64,
    pub dx_real: f64,
    /// Relative `|ψ|²` below which an open-ended march stops.
    pub tail_cutoff: f64,
    /// Cap on samples per direction.
    pub max_samples: usize,
}

/// Seeds at `window.anchor`, marches left past `lo`, then right past `hi` (or
/// into the tail). Returns samples in manifold order, which is increasing `Re x_f`.
pub fn build_manifold(launch: &Launch, window: &MarchWindow) -> Result<Vec<ManifoldSample>> {
    if !(window.dx_real > 0.0) || window.hi.is_some_and(|hi| hi <= window.lo) {
        return Err(BomcaError::InvalidParameter("march window needs lo < hi and dx_real > 0".into()));
    }
    let seed = find_seed(launch, window.anchor)?;
    let hbar = launch.sys.hbar;
    let mut peak = seed.sample().density(hbar);
    let lo = window.lo;
    let left = if seed.arrival.x.re > lo {
        march_while(launch, &seed, -1, window.dx_real, window.max_samples, |s| {
            peak = peak.max(s.density(hbar));
            s.x_f.re >= lo
        })?
    } else {
        vec![seed.sample()]
    };
    let right = match window.hi {
        Some(hi) if seed.arrival.x.re >= hi => vec![seed.sample()],
        Some(hi) => march_while(launch, &seed, 1, window.dx_real, window.max_samples, |s| s.x_f.re <= hi)?,
        None => march_while(launch, &seed, 1, window.dx_real, window.max_samples, |s| {
            peak = peak.max(s.density(hbar));
            s.density(hbar) >= window.tail_cutoff * peak
        })?,
    };
    let mut out: Vec<ManifoldSample> = left.into_iter().skip(1).rev().collect();
    out.extend(right);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionMeta {
    pub order: usize,
    pub trajectories: usize,
    pub landing_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedWavefunction {
    pub grid: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub t_f: f64,
    pub meta: ReconstructionMeta,
}

impl ReconstructedWavefunction {
    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }

    /// `∫|ψ|²dx` over the whole grid.
    pub fn norm(&self) -> Result<f64> {
        let dx = uniform_spacing(&self.grid)?;
        Ok(simpson(&self.density(), dx))
    }
}

/// The projected action `S(Re x_f) ≈ S_f + m v_f (Re x_f − x_f)` of the ok samples,
/// in the given order. Consecutive samples at the same `Re x_f` are merged.
pub fn projected_actions(samples: &[ManifoldSample], sys: &SystemSpec) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let mut knots: Vec<f64> = Vec::new();
    let mut values: Vec<Complex64> = Vec::new();
    for s in samples.iter().filter(|s| s.is_ok()) {
        let x = s.x_f.re;
        let projected = s.s_f + sys.mass * s.v_f * (x - s.x_f);
        if let Some(&prev) = knots.last() {
            if (x - prev).abs() <= 1e-12 * x.abs().max(1.0) {
                continue;
            }
        }
        knots.push(x);
        values.push(projected);
    }
    if knots.len() >= 2 && knots[1] < knots[0] {
        knots.reverse();
        values.reverse();
    }
    if let Some(w) = knots.windows(2).find(|w| w[1] <= w[0]) {
        return Err(BomcaError::NonMonotonicArrivals { at: w[0] });
    }
    Ok((knots, values))
}

/// Rebuilds `ψ(x, t_f)` on `grid` from a marched manifold: Taylor projection of each
/// action onto the real axis, a complex cubic spline of `S` over `Re x_f`, then
/// `ψ = exp(iS/ħ)`.
pub fn reconstruct_wavefunction(
    samples: &[ManifoldSample],
    grid: &[f64],
    sys: &SystemSpec,
    meta: ReconstructionMeta,
    t_f: f64,
) -> Result<ReconstructedWavefunction> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BomcaError::InvalidParameter("reconstruction grid must be strictly increasing".into()));
    }
    let (knots, values) = projected_actions(samples, sys)?;
    if knots.len() < 4 {
        return Err(BomcaError::InsufficientCoverage(format!(
            "{} ok samples; at least 4 are needed",
            knots.len()
        )));
    }
    let (a, b) = (knots[0], knots[knots.len() - 1]);
    if let (Some(&g0), Some(&g1)) = (grid.first(), grid.last()) {
        let slack = 1e-12 * (b - a);
        if g0 < a - slack || g1 > b + slack {
            return Err(BomcaError::InsufficientCoverage(format!(
                "grid [{g0}, {g1}] extends beyond arrivals [{a}, {b}]"
            )));
        }
    }
    let mean = (b - a) / (knots.len() - 1) as f64;
    if let Some(w) = knots.windows(2).find(|w| w[1] - w[0] > 4.0 * mean) {
        return Err(BomcaError::InsufficientCoverage(format!(
            "gap [{}, {}] exceeds four mean arrival spacings ({mean:.3e})",
            w[0], w[1]
        )));
    }
    let spline = ComplexSpline::new(&knots, &values)?;
    let psi = grid.iter().map(|&x| (I * spline.eval(x) / sys.hbar).exp()).collect();
    Ok(ReconstructedWavefunction { grid: grid.to_vec(), psi, t_f, meta })
}

/// Relative `|ψ|²` allowed at the right grid edge when integrating the transmitted part.
pub const SUPPORT_CUTOFF: f64 = 1e-4;

fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(BomcaError::InvalidParameter("grid needs at least two points".into()));
    }
    let dx = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if grid.windows(2).any(|w| ((w[1] - w[0]) - dx).abs() > 1e-9 * dx) {
        return Err(BomcaError::InvalidParameter("quadrature needs a uniform grid".into()));
    }
    Ok(dx)
}

/// `T = ∫_{x>0}|ψ|²dx` by composite Simpson on the (uniform) grid points with `x ≥ 0`;
/// a partial first cell is added by the trapezoid rule when 0 is not a grid point.
pub fn transmission_probability(psi: &ReconstructedWavefunction) -> Result<f64> {
    let dx = uniform_spacing(&psi.grid)?;
    let density = psi.density();
    let peak = density.iter().copied().fold(0.0, f64::max);
    let edge = *density.last().unwrap();
    if peak > 0.0 && edge > SUPPORT_CUTOFF * peak {
        return Err(BomcaError::SupportNotContained { density: edge / peak });
    }
    let start = psi.grid.partition_point(|&x| x < 0.0);
    if start == psi.grid.len() {
        return Ok(0.0);
    }
    let mut total = simpson(&density[start..], dx);
    let x_s = psi.grid[start];
    if start > 0 && x_s > 0.0 {
        let (x_p, d_p, d_s) = (psi.grid[start - 1], density[start - 1], density[start]);
        let d_zero = d_p + (d_s - d_p) * (0.0 - x_p) / (x_s - x_p);
        total += 0.5 * x_s * (d_zero + d_s);
    }
    Ok(total)
}

/// `|ψ|` below which `ln ψ` is treated as undefined.
pub const NODE_CUTOFF: f64 = 1e-250;

/// `S = −iħ ln ψ` with `arg ψ` followed continuously from the point of largest `|ψ|`.
pub fn unwrapped_action(psi: &[Complex64], grid: &[f64], hbar: f64) -> Result<Vec<Complex64>> {
    if let Some(j) = psi.iter().position(|p| !(p.norm() >= NODE_CUTOFF)) {
        return Err(BomcaError::NodeOnGrid { at: grid[j], magnitude: psi[j].norm() });
    }
    let anchor = (0..psi.len()).max_by(|&a, &b| psi[a].norm().total_cmp(&psi[b].norm())).unwrap_or(0);
    let mut phase = vec![0.0; psi.len()];
    phase[anchor] = psi[anchor].arg();
    let follow = |prev: f64, p: Complex64| {
        let raw = p.arg();
        raw + 2.0 * std::f64::consts::PI * ((prev - raw) / (2.0 * std::f64::consts::PI)).round()
    };
    for j in anchor + 1..psi.len() {
        phase[j] = follow(phase[j - 1], psi[j]);
    }
    for j in (0..anchor).rev() {
        phase[j] = follow(phase[j + 1], psi[j]);
    }
    Ok(psi
        .iter()
        .zip(phase)
        .map(|(p, ph)| -I * hbar * Complex64::new(p.norm().ln(), ph))
        .collect())
}

/// Residual of `S_t + S_x²/2m + V − (iħ/2m)S_xx = 0` on the interior grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjResidual {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
}

impl HjResidual {
    pub fn max(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    /// Root mean square over the points with `lo ≤ x ≤ hi`.
    pub fn rms_within(&self, lo: f64, hi: f64) -> f64 {
        let inside: Vec<f64> = self
            .x
            .iter()
            .zip(&self.residual)
            .filter(|(x, _)| (lo..=hi).contains(*x))
            .map(|(_, r)| r * r)
            .collect();
        (inside.iter().sum::<f64>() / inside.len().max(1) as f64).sqrt()
    }
}

/// Central-difference residual of the complex quantum Hamilton–Jacobi equation
/// from wavefunctions at `t − δ`, `t`, `t + δ` on one uniform grid.
pub fn hj_residual(slices: [&ReconstructedWavefunction; 3], delta: f64, sys: &SystemSpec) -> Result<HjResidual> {
    let [before, now, after] = slices;
    if before.grid != now.grid || after.grid != now.grid {
        return Err(BomcaError::InvalidParameter("residual slices must share one grid".into()));
    }
    if !(delta > 0.0) {
        return Err(BomcaError::InvalidParameter(format!("time spacing must be positive (got {delta})")));
    }
    let grid = &now.grid;
    let h = uniform_spacing(grid)?;
    if grid.len() < 3 {
        return Err(BomcaError::InvalidParameter("residual needs at least three grid points".into()));
    }
    let hbar = sys.hbar;
    let s_now = unwrapped_action(&now.psi, grid, hbar)?;
    // align the neighbouring slices on the branch of the middle one
    let align = |psi: &[Complex64]| -> Result<Vec<Complex64>> {
        let s = unwrapped_action(psi, grid, hbar)?;
        let j = (0..grid.len()).max_by(|&a, &b| now.psi[a].norm().total_cmp(&now.psi[b].norm())).unwrap();
        let period = 2.0 * std::f64::consts::PI * hbar;
        let shift = ((s_now[j].re - s[j].re) / period).round() * period;
        Ok(s.into_iter().map(|v| v + shift).collect())
    };
    let s_before = align(&before.psi)?;
    let s_after = align(&after.psi)?;
    let m = sys.mass;
    let mut x = Vec::with_capacity(grid.len() - 2);
    let mut residual = Vec::with_capacity(grid.len() - 2);
    for j in 1..grid.len() - 1 {
        let s_t = (s_after[j] - s_before[j]) / (2.0 * delta);
        let s_x = (s_now[j + 1] - s_now[j - 1]) / (2.0 * h);
        let s_xx = (s_now[j + 1] - 2.0 * s_now[j] + s_now[j - 1]) / (h * h);
        let v = sys.potential.value_real(grid[j]);
        let r = s_t + s_x * s_x / (2.0 * m) + v - I * hbar / (2.0 * m) * s_xx;
        x.push(grid[j]);
        residual.push(r.norm());
    }
    Ok(HjResidual { x, residual })
}

/// BOMCA result for one truncation order at one energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderTransmission {
    pub order: usize,
    pub transmission: Option<f64>,
    pub relative_divergence: Option<f64>,
    /// Error kind and message when the pipeline failed at this point.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionEntry {
    pub energy: f64,
    pub t_f: f64,
    pub exact: Option<f64>,
    pub exact_error: Option<String>,
    pub orders: Vec<OrderTransmission>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCurve {
    pub entries: Vec<TransmissionEntry>,
}

impl TransmissionCurve {
    /// Number of failed (energy, order) points, counting failed oracle runs.
    pub fn failures(&self) -> usize {
        self.entries
            .iter()
            .map(|e| usize::from(e.exact.is_none()) + e.orders.iter().filter(|o| o.transmission.is_none()).count())
            .sum()
    }
}

/// `|T_bomca − T_exact| / T_exact`.
pub fn relative_divergence(bomca: f64, exact: f64) -> f64 {
    (bomca - exact).abs() / exact
}
