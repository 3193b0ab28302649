//! Exact oracles: Strang split-operator propagation on a periodic real grid and
//! closed-form Gaussian evolution for the free particle and harmonic oscillator.

use crate::error::{BomcaError, Result};
use crate::model::{GaussianWavepacket, PotentialModel, SystemSpec};
use crate::numerics::simpson;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Probability allowed in the outer 5% of the grid before the run is declared too small.
pub const EDGE_MASS_LIMIT: f64 = 1e-10;
/// Relative spectral density defining the momentum content for the Nyquist check.
const SPECTRAL_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.n_points.is_power_of_two() || self.n_points < 16 {
            return Err(BomcaError::InvalidParameter(format!(
                "grid point count must be a power of two ≥ 16 (got {})",
                self.n_points
            )));
        }
        if !(self.x_max > self.x_min) {
            return Err(BomcaError::InvalidParameter("grid needs x_max > x_min".into()));
        }
        Ok(())
    }

    /// Periodic grid: `x_j = x_min + j dx`, `dx = (x_max − x_min)/n`, right end excluded.
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_points).map(|j| self.x_min + dx * j as f64).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..n)
            .map(|j| if j < n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk })
            .collect()
    }

    pub fn doubled(&self) -> GridSpec {
        GridSpec { n_points: self.n_points * 2, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub grid: GridSpec,
    pub psi: Vec<Complex64>,
    pub t: f64,
}

impl GridWavefunction {
    pub fn from_wavepacket(wp: &GaussianWavepacket, hbar: f64, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let psi = grid
            .positions()
            .iter()
            .map(|&x| wp.psi(Complex64::new(x, 0.0), hbar))
            .collect();
        Ok(GridWavefunction { grid, psi, t: 0.0 })
    }

    pub fn positions(&self) -> Vec<f64> {
        self.grid.positions()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }

    /// `Σ |ψ|² dx` (spectrally exact for band-limited periodic data).
    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Probability in the outer 5% at either end of the grid.
    pub fn edge_mass(&self) -> f64 {
        let n = self.psi.len();
        let band = (n / 20).max(1);
        let dx = self.grid.dx();
        self.psi[..band]
            .iter()
            .chain(&self.psi[n - band..])
            .map(|p| p.norm_sqr())
            .sum::<f64>()
            * dx
    }

    /// `∫_{x>0} |ψ|² dx` by composite Simpson over the grid points with `x ≥ 0`.
    pub fn transmitted_probability(&self) -> f64 {
        let x = self.positions();
        let start = x.partition_point(|&xi| xi < 0.0);
        let density: Vec<f64> = self.psi[start..].iter().map(|p| p.norm_sqr()).collect();
        // the grid is periodic; the last point's neighbour is the first one
        simpson(&density, self.grid.dx())
    }

    /// Probability current `(ħ/m) Im(ψ* ψ_x)` at the grid point nearest `x`,
    /// with `ψ_x` from a spectral derivative.
    pub fn flux_at(&self, x: f64, sys: &SystemSpec) -> f64 {
        let n = self.psi.len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut spec = self.psi.clone();
        fwd.process(&mut spec);
        for (s, k) in spec.iter_mut().zip(self.grid.wavenumbers()) {
            *s *= I * k / n as f64;
        }
        inv.process(&mut spec);
        let j = ((x - self.grid.x_min) / self.grid.dx()).round().clamp(0.0, (n - 1) as f64) as usize;
        sys.hbar / sys.mass * (self.psi[j].conj() * spec[j]).im
    }

    /// Largest `|p| = ħ|k|` carrying spectral density above a relative floor.
    pub fn momentum_extent(&self, hbar: f64) -> f64 {
        let n = self.psi.len();
        let mut spec = self.psi.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut spec);
        let peak = spec.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
        spec.iter()
            .zip(self.grid.wavenumbers())
            .filter(|(s, _)| s.norm_sqr() > SPECTRAL_FLOOR * peak)
            .map(|(_, k)| hbar * k.abs())
            .fold(0.0, f64::max)
    }
}

/// Cosine-ramp absorbing layer on both grid ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorberSpec {
    /// Fraction of the grid length covered by each layer.
    pub width_fraction: f64,
    /// Damping rate at the outer edge (a.u. of inverse time).
    pub strength: f64,
}

impl Default for AbsorberSpec {
    fn default() -> Self {
        AbsorberSpec { width_fraction: 0.1, strength: 50.0 }
    }
}

impl AbsorberSpec {
    fn mask(&self, grid: &GridSpec, dt: f64) -> Vec<f64> {
        let len = grid.x_max - grid.x_min;
        let width = self.width_fraction * len;
        grid.positions()
            .iter()
            .map(|&x| {
                let depth = (grid.x_min + width - x).max(x - (grid.x_max - width)).max(0.0);
                let ramp = 1.0 - (0.5 * PI * depth / width).cos();
                (-self.strength * ramp * dt).exp()
            })
            .collect()
    }
}

struct SplitPropagator {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SplitPropagator {
    fn new(grid: &GridSpec, sys: &SystemSpec, dt: f64) -> Self {
        let n = grid.n_points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let half_potential = grid
            .positions()
            .iter()
            .map(|&x| (-I * sys.potential.value_real(x) * dt / (2.0 * sys.hbar)).exp())
            .collect();
        let norm = 1.0 / n as f64;
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|&k| (-I * sys.hbar * k * k * dt / (2.0 * sys.mass)).exp() * norm)
            .collect();
        let scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        SplitPropagator { forward, inverse, half_potential, kinetic, scratch }
    }

    fn step(&mut self, psi: &mut [Complex64]) {
        for (p, v) in psi.iter_mut().zip(&self.half_potential) {
            *p *= v;
        }
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (p, k) in psi.iter_mut().zip(&self.kinetic) {
            *p *= k;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
        for (p, v) in psi.iter_mut().zip(&self.half_potential) {
            *p *= v;
        }
    }
}

/// Verify the grid resolves `psi`'s momentum content plus what the potential can add.
pub fn check_nyquist(psi: &GridWavefunction, sys: &SystemSpec) -> Result<()> {
    let v_max = psi
        .positions()
        .iter()
        .map(|&x| sys.potential.value_real(x))
        .fold(0.0, f64::max);
    let v_min = psi
        .positions()
        .iter()
        .map(|&x| sys.potential.value_real(x))
        .fold(f64::INFINITY, f64::min);
    let gain = (2.0 * sys.mass * (v_max - v_min).max(0.0)).sqrt();
    let required = psi.momentum_extent(sys.hbar) + gain;
    let limit = sys.hbar * PI / psi.grid.dx();
    if required > limit {
        return Err(BomcaError::NyquistViolation { required, limit });
    }
    Ok(())
}

/// Nyquist check from the packet parameters, which catches initial data that is
/// already aliased on the grid: `|p_c| + 8ħ√α` plus the momentum the potential can add.
pub fn check_nyquist_for(wp: &GaussianWavepacket, sys: &SystemSpec, grid: &GridSpec) -> Result<()> {
    let values: Vec<f64> = grid.positions().iter().map(|&x| sys.potential.value_real(x)).collect();
    let v_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let v_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let required = wp.p_c.abs() + 8.0 * sys.hbar * wp.alpha.sqrt() + (2.0 * sys.mass * (v_max - v_min)).sqrt();
    let limit = sys.hbar * PI / grid.dx();
    if required > limit {
        return Err(BomcaError::NyquistViolation { required, limit });
    }
    Ok(())
}

/// Strang-split propagation `e^{−iVdt/2ħ} e^{−iTdt/ħ} e^{−iVdt/2ħ}` for `n_steps` steps.
///
/// Without an absorber the run fails with [`BomcaError::GridTooSmall`] once the
/// probability in the outer grid band exceeds [`EDGE_MASS_LIMIT`].
pub fn split_operator_propagate(
    psi0: &GridWavefunction,
    sys: &SystemSpec,
    dt: f64,
    n_steps: usize,
    absorber: Option<&AbsorberSpec>,
) -> Result<GridWavefunction> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(BomcaError::InvalidParameter(format!("dt must be positive (got {dt})")));
    }
    psi0.grid.validate()?;
    check_nyquist(psi0, sys)?;
    let mut prop = SplitPropagator::new(&psi0.grid, sys, dt);
    let mask = absorber.map(|a| a.mask(&psi0.grid, dt));
    let mut out = psi0.clone();
    for step in 0..n_steps {
        prop.step(&mut out.psi);
        if let Some(mask) = &mask {
            for (p, m) in out.psi.iter_mut().zip(mask) {
                *p *= m;
            }
        } else if (step + 1) % 250 == 0 || step + 1 == n_steps {
            let mass = out.edge_mass();
            if mass > EDGE_MASS_LIMIT {
                return Err(BomcaError::GridTooSmall { mass });
            }
        }
    }
    out.t = psi0.t + dt * n_steps as f64;
    Ok(out)
}

/// Exact free evolution of the Gaussian, valid at complex `x`:
/// `ψ = N/√(1+iτ) · exp{[−α(x−x_c)² + i k₀(x−x_c) − i k₀² ħ t/2m]/(1+iτ)}`, `τ = 2ħαt/m`.
pub fn analytic_free_gaussian(wp: &GaussianWavepacket, sys: &SystemSpec, x: Complex64, t: f64) -> Complex64 {
    let hbar = sys.hbar;
    let k0 = wp.p_c / hbar;
    let spread = Complex64::new(1.0, 2.0 * hbar * wp.alpha * t / sys.mass);
    let d = x - wp.x_c;
    let exponent = (-wp.alpha * d * d + I * k0 * d - I * k0 * k0 * hbar * t / (2.0 * sys.mass)) / spread;
    wp.norm_prefactor / spread.sqrt() * exponent.exp()
}

/// Exact evolution of the Gaussian in `V = kx²/2`, written as
/// `ψ = exp{(i/ħ)[a(x−q)² + p(x−q) + γ]}` with closed-form `q, p, a, γ`.
pub fn analytic_harmonic_gaussian(wp: &GaussianWavepacket, sys: &SystemSpec, x: Complex64, t: f64) -> Result<Complex64> {
    let PotentialModel::Harmonic { k } = sys.potential else {
        return Err(BomcaError::InvalidParameter("harmonic oracle needs a harmonic potential".into()));
    };
    let (m, hbar) = (sys.mass, sys.hbar);
    let omega = (k / m).sqrt();
    let theta = omega * t;
    let (s, c) = theta.sin_cos();
    let q = wp.x_c * c + wp.p_c / (m * omega) * s;
    let p = wp.p_c * c - m * omega * wp.x_c * s;
    let squeeze = 2.0 * hbar * wp.alpha / (m * omega);
    let z = Complex64::new(c, squeeze * s);
    let zdot = Complex64::new(-omega * s, squeeze * omega * c);
    let a = 0.5 * m * zdot / z;
    // z winds once around the origin per period; follow the continuous branch of arg z
    let principal = z.arg();
    let arg = principal + 2.0 * PI * ((theta - principal) / (2.0 * PI)).round();
    let log_z = Complex64::new(z.norm().ln(), arg);
    let gamma = -I * hbar * wp.norm_prefactor.ln() + 0.5 * I * hbar * log_z + 0.5 * (p * q - wp.p_c * wp.x_c);
    let d = x - q;
    Ok((I / hbar * (a * d * d + p * d + gamma)).exp())
}

/// Split-operator transmission at time `t_f` together with the flux through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactTransmission {
    pub t: f64,
    pub transmission: f64,
    pub flux: f64,
}

/// The flux criterion: the current through the origin, relative to the transmitted
/// probability, must be below this rate (per a.u. time).
pub const ASYMPTOTIC_FLUX_RATE: f64 = 1e-3;

fn is_asymptotic(transmission: f64, flux: f64) -> bool {
    flux.abs() <= ASYMPTOTIC_FLUX_RATE * transmission.max(f64::MIN_POSITIVE)
}

/// `T_exact` at `t_f`; fails with [`BomcaError::NotAsymptotic`] if probability is
/// still flowing through the origin.
pub fn transmission_exact(
    wp: &GaussianWavepacket,
    sys: &SystemSpec,
    t_f: f64,
    grid: GridSpec,
    dt: f64,
) -> Result<ExactTransmission> {
    let psi = propagate_gaussian(wp, sys, t_f, grid, dt)?;
    let transmission = psi.transmitted_probability();
    let flux = psi.flux_at(0.0, sys);
    if !is_asymptotic(transmission, flux) {
        return Err(BomcaError::NotAsymptotic { t: psi.t, flux });
    }
    Ok(ExactTransmission { t: psi.t, transmission, flux })
}

/// Propagate the Gaussian to `t_f` (rounded to a whole number of `dt` steps).
pub fn propagate_gaussian(
    wp: &GaussianWavepacket,
    sys: &SystemSpec,
    t_f: f64,
    grid: GridSpec,
    dt: f64,
) -> Result<GridWavefunction> {
    if !(t_f >= 0.0) {
        return Err(BomcaError::InvalidParameter(format!("t_f must be ≥ 0 (got {t_f})")));
    }
    let psi0 = GridWavefunction::from_wavepacket(wp, sys.hbar, grid)?;
    check_nyquist_for(wp, sys, &grid)?;
    let steps = (t_f / dt).round() as usize;
    split_operator_propagate(&psi0, sys, dt, steps, None)
}

/// Earliest time on the lattice `t_start + j·t_step` (≤ `t_max`) at which the
/// transmission is asymptotic by the flux criterion.
pub fn asymptotic_time(
    wp: &GaussianWavepacket,
    sys: &SystemSpec,
    grid: GridSpec,
    dt: f64,
    t_start: f64,
    t_step: f64,
    t_max: f64,
) -> Result<ExactTransmission> {
    let mut psi = propagate_gaussian(wp, sys, t_start, grid, dt)?;
    let chunk = (t_step / dt).round().max(1.0) as usize;
    loop {
        let transmission = psi.transmitted_probability();
        let flux = psi.flux_at(0.0, sys);
        if is_asymptotic(transmission, flux) {
            return Ok(ExactTransmission { t: psi.t, transmission, flux });
        }
        if psi.t + 0.5 * dt * chunk as f64 > t_max {
            return Err(BomcaError::NotAsymptotic { t: psi.t, flux });
        }
        let t_prev = psi.t;
        psi = split_operator_propagate(&psi, sys, dt, chunk, None)?;
        // keep the time lattice exact
        psi.t = t_prev + chunk as f64 * dt;
    }
}
