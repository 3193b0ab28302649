//! Physical scenario: analytic potentials, the Gaussian initial state, and the
//! complex-analytic quantities a trajectory needs at launch.

use crate::error::{BomcaError, Result};
use crate::jet::Jet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `|cosh(βx)|` below this aborts the trajectory; past it the jet overflows at order ≥ 2.
pub const POLE_THRESHOLD: f64 = 1e-8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Analytic potential evaluable at complex argument with any number of derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialModel {
    /// `V(x) = height / cosh²(beta x)`
    Eckart { height: f64, beta: f64 },
    /// `V(x) = k x² / 2`
    Harmonic { k: f64 },
    Free,
}

impl PotentialModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialModel::Eckart { height, beta } => {
                if !height.is_finite() || !(beta.is_finite() && beta > 0.0) {
                    return Err(BomcaError::InvalidParameter(format!(
                        "eckart barrier needs finite height and beta > 0 (got {height}, {beta})"
                    )));
                }
            }
            PotentialModel::Harmonic { k } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(BomcaError::InvalidParameter(format!(
                        "harmonic force constant must be positive (got {k})"
                    )));
                }
            }
            PotentialModel::Free => {}
        }
        Ok(())
    }

    /// Potential value on the real axis.
    pub fn value_real(&self, x: f64) -> f64 {
        match *self {
            PotentialModel::Eckart { height, beta } => {
                let c = (beta * x).cosh();
                height / (c * c)
            }
            PotentialModel::Harmonic { k } => 0.5 * k * x * x,
            PotentialModel::Free => 0.0,
        }
    }

    pub fn value(&self, x: Complex64) -> Result<Complex64> {
        Ok(potential_jet(self, x, 0)?.values[0])
    }
}

/// Physical constants of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub mass: f64,
    pub hbar: f64,
    pub potential: PotentialModel,
}

impl SystemSpec {
    pub fn new(mass: f64, hbar: f64, potential: PotentialModel) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(BomcaError::InvalidParameter(format!("mass must be positive (got {mass})")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(BomcaError::InvalidParameter(format!("hbar must be positive (got {hbar})")));
        }
        potential.validate()?;
        Ok(SystemSpec { mass, hbar, potential })
    }

    /// Atomic units, ħ = 1.
    pub fn atomic(mass: f64, potential: PotentialModel) -> Result<Self> {
        SystemSpec::new(mass, 1.0, potential)
    }
}

/// `ψ(x,0) = (2α/π)^¼ exp[−α(x−x_c)² + (i/ħ) p_c (x−x_c)]`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWavepacket {
    pub alpha: f64,
    pub x_c: f64,
    pub p_c: f64,
    pub norm_prefactor: f64,
}

impl GaussianWavepacket {
    pub fn new(alpha: f64, x_c: f64, p_c: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(BomcaError::InvalidParameter(format!("alpha must be positive (got {alpha})")));
        }
        if !x_c.is_finite() || !p_c.is_finite() {
            return Err(BomcaError::InvalidParameter("x_c and p_c must be finite".into()));
        }
        Ok(GaussianWavepacket {
            alpha,
            x_c,
            p_c,
            norm_prefactor: (2.0 * alpha / PI).powf(0.25),
        })
    }

    /// Rightward-moving packet with translational energy `E = p_c²/2m`.
    pub fn with_energy(alpha: f64, x_c: f64, energy: f64, mass: f64) -> Result<Self> {
        if !(energy.is_finite() && energy >= 0.0) {
            return Err(BomcaError::InvalidParameter(format!("energy must be ≥ 0 (got {energy})")));
        }
        GaussianWavepacket::new(alpha, x_c, (2.0 * mass * energy).sqrt())
    }

    pub fn energy(&self, mass: f64) -> f64 {
        self.p_c * self.p_c / (2.0 * mass)
    }

    /// The exponent `ln ψ(x,0)` in closed form (no branch cut is ever involved).
    pub fn log_psi(&self, x: Complex64, hbar: f64) -> Complex64 {
        let d = x - self.x_c;
        Complex64::new(self.norm_prefactor.ln(), 0.0) - self.alpha * d * d
            + I * (self.p_c / hbar) * d
    }

    pub fn psi(&self, x: Complex64, hbar: f64) -> Complex64 {
        self.log_psi(x, hbar).exp()
    }

    /// Standard deviation of `|ψ(x,0)|²`.
    pub fn width(&self) -> f64 {
        0.5 / self.alpha.sqrt()
    }
}

/// Values `f(x), f'(x), …, f^(K)(x)` at one (complex) base point.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeJet {
    pub base_point: Complex64,
    pub values: Vec<Complex64>,
}

impl DerivativeJet {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

/// `V` and its first `order` derivatives at complex `x`.
pub fn potential_jet(potential: &PotentialModel, x: Complex64, order: usize) -> Result<DerivativeJet> {
    let values = match *potential {
        PotentialModel::Free => vec![Complex64::new(0.0, 0.0); order + 1],
        PotentialModel::Harmonic { k } => {
            let mut v = vec![Complex64::new(0.0, 0.0); order + 1];
            v[0] = 0.5 * k * x * x;
            if order >= 1 {
                v[1] = k * x;
            }
            if order >= 2 {
                v[2] = Complex64::new(k, 0.0);
            }
            v
        }
        PotentialModel::Eckart { height, beta } => {
            let arg = Jet::variable(x, order).scale(Complex64::new(beta, 0.0));
            let (cosh, _) = arg.cosh_sinh();
            let magnitude = cosh.value().norm();
            if magnitude < POLE_THRESHOLD || !magnitude.is_finite() {
                return Err(BomcaError::PoleProximity { x, magnitude });
            }
            let sech = cosh.recip().ok_or(BomcaError::PoleProximity { x, magnitude })?;
            sech.square().scale(Complex64::new(height, 0.0)).derivatives()
        }
    };
    Ok(DerivativeJet { base_point: x, values })
}

/// Launch values `v^(n)(0; x0) = (1/m) ∂ⁿ S_x/∂xⁿ` for the Gaussian, `n = 0..=n_max`.
///
/// The Gaussian's log-derivative is linear in `x`, so only the first two entries
/// are nonzero.
pub fn initial_velocity_jet(
    wp: &GaussianWavepacket,
    sys: &SystemSpec,
    x0: Complex64,
    n_max: usize,
) -> DerivativeJet {
    let mut values = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let slope = 2.0 * I * sys.hbar * wp.alpha / sys.mass;
    values[0] = wp.p_c / sys.mass + slope * (x0 - wp.x_c);
    if n_max >= 1 {
        values[1] = slope;
    }
    DerivativeJet { base_point: x0, values }
}

/// `S(x0, 0) = −iħ ln ψ(x0, 0)` evaluated from the exponent.
pub fn initial_action(wp: &GaussianWavepacket, sys: &SystemSpec, x0: Complex64) -> Complex64 {
    -I * sys.hbar * wp.log_psi(x0, sys.hbar)
}

/// `ψ = exp(iS/ħ)`
pub fn psi_from_action(action: Complex64, hbar: f64) -> Complex64 {
    (I * action / hbar).exp()
}
