//! Single-trajectory propagation under the truncated velocity-derivative hierarchy.
//!
//! The ODE state is packed as `[x, v⁽⁰⁾, …, v⁽ᴺ⁾, S]`. Position follows the
//! velocity, each `v⁽ⁿ⁾` obeys
//!
//! ```text
//! dv⁽ⁿ⁾/dt = −V⁽ⁿ⁺¹⁾/m + (iħ/2m) v⁽ⁿ⁺²⁾ − Σ_{j=1..n} C(n,j) v⁽ʲ⁾ v⁽ⁿ⁻ʲ⁺¹⁾
//! ```
//!
//! with `v⁽ᴺ⁺¹⁾ = v⁽ᴺ⁺²⁾ = 0`, and the action accumulates
//! `dS/dt = ½ m (v⁽⁰⁾)² − V + (iħ/2) v⁽¹⁾`.

use crate::error::{BomcaError, Result};
use crate::model::{initial_action, initial_velocity_jet, potential_jet, GaussianWavepacket, SystemSpec};
use crate::ode::{integrate, IntegrationStats, IntegratorConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const MAX_TRUNCATION_ORDER: usize = 8;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Number of velocity derivatives carried along a trajectory (`1..=8`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TruncationOrder(usize);

impl TruncationOrder {
    pub fn new(n: usize) -> Result<Self> {
        if (1..=MAX_TRUNCATION_ORDER).contains(&n) {
            Ok(TruncationOrder(n))
        } else {
            Err(BomcaError::InvalidParameter(format!(
                "truncation order must be in 1..={MAX_TRUNCATION_ORDER} (got {n})"
            )))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Length of the packed ODE state.
    pub fn state_len(self) -> usize {
        self.0 + 3
    }
}

impl TryFrom<usize> for TruncationOrder {
    type Error = BomcaError;
    fn try_from(n: usize) -> Result<Self> {
        TruncationOrder::new(n)
    }
}

impl From<TruncationOrder> for usize {
    fn from(n: TruncationOrder) -> usize {
        n.0
    }
}

impl std::fmt::Display for TruncationOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub t: f64,
    pub x: Complex64,
    /// `v⁽⁰⁾ … v⁽ᴺ⁾`
    pub v: Vec<Complex64>,
    pub action: Complex64,
}

impl TrajectoryState {
    pub fn launch(x0: Complex64, wp: &GaussianWavepacket, sys: &SystemSpec, order: TruncationOrder) -> Self {
        TrajectoryState {
            t: 0.0,
            x: x0,
            v: initial_velocity_jet(wp, sys, x0, order.get()).values,
            action: initial_action(wp, sys, x0),
        }
    }

    pub fn order(&self) -> usize {
        self.v.len() - 1
    }

    pub fn pack(&self) -> Vec<Complex64> {
        let mut y = Vec::with_capacity(self.v.len() + 2);
        y.push(self.x);
        y.extend_from_slice(&self.v);
        y.push(self.action);
        y
    }

    pub fn unpack(t: f64, y: &[Complex64]) -> Self {
        let n = y.len();
        TrajectoryState {
            t,
            x: y[0],
            v: y[1..n - 1].to_vec(),
            action: y[n - 1],
        }
    }

    /// `ψ = exp(iS/ħ)` at the trajectory's current position.
    pub fn psi(&self, hbar: f64) -> Complex64 {
        crate::model::psi_from_action(self.action, hbar)
    }
}

/// Time derivative of a [`TrajectoryState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub dx: Complex64,
    pub dv: Vec<Complex64>,
    pub daction: Complex64,
}

/// `g̃ₙ = Σ_{j=1..n} C(n,j) v⁽ʲ⁾ v⁽ⁿ⁻ʲ⁺¹⁾`; zero for `n = 0`. Entries past the
/// stack are treated as zero.
pub fn convective_term(v: &[Complex64], n: usize) -> Complex64 {
    let at = |k: usize| v.get(k).copied().unwrap_or_default();
    let mut binom = 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..=n {
        binom = binom * (n + 1 - j) as f64 / j as f64;
        acc += binom * at(j) * at(n - j + 1);
    }
    acc
}

fn rhs_packed(sys: &SystemSpec, y: &[Complex64], dy: &mut [Complex64]) -> Result<()> {
    let len = y.len();
    let order = len - 3;
    let v = &y[1..len - 1];
    let pot = potential_jet(&sys.potential, y[0], order + 1)?.values;
    let m = sys.mass;
    let quantum = I * sys.hbar / (2.0 * m);
    let at = |k: usize| v.get(k).copied().unwrap_or_default();

    dy[0] = v[0];
    for n in 0..=order {
        dy[1 + n] = -pot[n + 1] / m + quantum * at(n + 2) - convective_term(v, n);
    }
    dy[len - 1] = 0.5 * m * v[0] * v[0] - pot[0] + 0.5 * I * sys.hbar * at(1);
    Ok(())
}

/// Time derivative of `(x, v⁽⁰⁾..v⁽ᴺ⁾, S)` with the stack closed at the state's own order.
pub fn hierarchy_rhs(state: &TrajectoryState, sys: &SystemSpec) -> Result<StateDerivative> {
    let y = state.pack();
    let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
    rhs_packed(sys, &y, &mut dy)?;
    let n = dy.len();
    Ok(StateDerivative {
        dx: dy[0],
        dv: dy[1..n - 1].to_vec(),
        daction: dy[n - 1],
    })
}

fn blowup_check(cfg: &IntegratorConfig) -> impl FnMut(f64, &[Complex64]) -> Result<()> + '_ {
    move |t, y| {
        let n = y.len();
        for (order, v) in y[1..n - 1].iter().enumerate() {
            let magnitude = v.norm();
            if !(magnitude <= cfg.blowup_threshold) {
                return Err(BomcaError::Blowup { order, magnitude, t });
            }
        }
        Ok(())
    }
}

/// A propagated trajectory: its state at each requested output time plus the final state.
#[derive(Debug, Clone)]
pub struct TrajectoryPath {
    pub states: Vec<TrajectoryState>,
    pub stats: IntegrationStats,
}

/// Integrate one trajectory launched at `x0` to time `t_f`.
pub fn propagate_trajectory(
    x0: Complex64,
    wp: &GaussianWavepacket,
    sys: &SystemSpec,
    order: TruncationOrder,
    t_f: f64,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryState> {
    let path = propagate_path(x0, wp, sys, order, t_f, &[], cfg)?;
    Ok(path.states.into_iter().last().expect("final state always recorded"))
}

/// Like [`propagate_trajectory`], additionally recording states at `times`
/// (sorted, within `[0, t_f]`). The final state is always the last entry.
pub fn propagate_path(
    x0: Complex64,
    wp: &GaussianWavepacket,
    sys: &SystemSpec,
    order: TruncationOrder,
    t_f: f64,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryPath> {
    if !(t_f >= 0.0 && t_f.is_finite()) {
        return Err(BomcaError::InvalidParameter(format!("t_f must be ≥ 0 (got {t_f})")));
    }
    if times.iter().any(|&t| !(0.0..=t_f).contains(&t)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(BomcaError::InvalidParameter("output times must be sorted within [0, t_f]".into()));
    }
    let start = TrajectoryState::launch(x0, wp, sys, order);
    let y0 = start.pack();
    let (y, recorded, stats) = integrate(
        |_, y, dy| rhs_packed(sys, y, dy),
        blowup_check(cfg),
        &y0,
        0.0,
        t_f,
        times,
        cfg,
    )?;
    let mut states: Vec<TrajectoryState> = recorded
        .iter()
        .zip(times)
        .map(|(y, &t)| TrajectoryState::unpack(t, y))
        .collect();
    states.push(TrajectoryState::unpack(t_f, &y));
    Ok(TrajectoryPath { states, stats })
}

/// First-order truncation written out by hand:
/// `dx/dt = v`, `dv/dt = −V'/m`, `dv_x/dt = −V''/m − v_x²`, and the action equation.
///
/// Uses closed-form potential derivatives rather than jets; kept as an independent
/// route for checking the generic hierarchy at `N = 1`.
pub fn propagate_first_order(
    x0: Complex64,
    wp: &GaussianWavepacket,
    sys: &SystemSpec,
    t_f: f64,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryState> {
    use crate::model::PotentialModel;
    let m = sys.mass;
    let hbar = sys.hbar;
    let derivs = |x: Complex64| -> Result<(Complex64, Complex64, Complex64)> {
        Ok(match sys.potential {
            PotentialModel::Free => Default::default(),
            PotentialModel::Harmonic { k } => (0.5 * k * x * x, k * x, Complex64::new(k, 0.0)),
            PotentialModel::Eckart { height, beta } => {
                let c = (beta * x).cosh();
                if c.norm() < crate::model::POLE_THRESHOLD {
                    return Err(BomcaError::PoleProximity { x, magnitude: c.norm() });
                }
                let sech2 = (c * c).inv();
                let tanh = (beta * x).sinh() / c;
                (
                    height * sech2,
                    -2.0 * height * beta * sech2 * tanh,
                    2.0 * height * beta * beta * sech2 * (2.0 - 3.0 * sech2),
                )
            }
        })
    };
    let start = TrajectoryState::launch(x0, wp, sys, TruncationOrder(1));
    let (y, _, _) = integrate(
        |_, y, dy| {
            let (pot, force, curvature) = derivs(y[0])?;
            let (v, vx) = (y[1], y[2]);
            dy[0] = v;
            dy[1] = -force / m;
            dy[2] = -curvature / m - vx * vx;
            dy[3] = 0.5 * m * v * v - pot + 0.5 * I * hbar * vx;
            Ok(())
        },
        blowup_check(cfg),
        &start.pack(),
        0.0,
        t_f,
        &[],
        cfg,
    )?;
    Ok(TrajectoryState::unpack(t_f, &y))
}
