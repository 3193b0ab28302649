//! Adaptive Dormand–Prince 5(4) integration of complex-valued ODE systems.
//!
//! Each complex component counts as two real components in the error norm.

use crate::error::{BomcaError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub blowup_threshold: f64,
}

impl IntegratorConfig {
    /// Defaults for a propagation of length `duration`.
    pub fn for_duration(duration: f64) -> Self {
        let span = if duration > 0.0 { duration } else { 1.0 };
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            initial_step: span * 1e-4,
            max_step: span / 100.0,
            max_steps: 200_000,
            blowup_threshold: 1e6,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("initial_step", self.initial_step),
            ("max_step", self.max_step),
            ("blowup_threshold", self.blowup_threshold),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(BomcaError::InvalidParameter(format!(
                    "integrator {name} must be positive (got {value})"
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(BomcaError::InvalidParameter("integrator max_steps must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Integrate `y' = f(t, y)` from `t0` to `t1`, stopping exactly at every time in
/// `outputs` (sorted, inside `[t0, t1]`) and recording the state there.
///
/// `check` runs on every accepted state; an error from it aborts the integration.
/// Returns the final state, the recorded output states, and step statistics.
pub fn integrate<F, C>(
    mut rhs: F,
    mut check: C,
    y0: &[Complex64],
    t0: f64,
    t1: f64,
    outputs: &[f64],
    cfg: &IntegratorConfig,
) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>, IntegrationStats)>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]) -> Result<()>,
    C: FnMut(f64, &[Complex64]) -> Result<()>,
{
    cfg.validate()?;
    if t1 < t0 {
        return Err(BomcaError::InvalidParameter(format!(
            "integration must run forward in time ({t0} → {t1})"
        )));
    }
    let n = y0.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut stats = IntegrationStats::default();
    let mut recorded = Vec::with_capacity(outputs.len());

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k = vec![vec![zero; n]; 7];
    let mut y_stage = vec![zero; n];
    let mut y_new = vec![zero; n];

    rhs(t, &y, &mut k[0])?;
    stats.evaluations += 1;

    let mut h = cfg.initial_step.min(cfg.max_step);
    let mut out_iter = outputs.iter().copied().peekable();

    loop {
        // emit every output time we are sitting on
        while let Some(&to) = out_iter.peek() {
            if to <= t {
                recorded.push(y.clone());
                out_iter.next();
            } else {
                break;
            }
        }
        if t >= t1 {
            break;
        }
        let stop = out_iter.peek().copied().unwrap_or(t1).min(t1);
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(BomcaError::StepLimitExceeded { max_steps: cfg.max_steps, t });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(BomcaError::StepSizeUnderflow { t });
        }

        let remaining = stop - t;
        let hits_stop = h >= remaining * (1.0 - 1e-12);
        let step = if hits_stop { remaining } else { h };

        macro_rules! stage {
            ($($coef:expr => $idx:expr),+) => {{
                for i in 0..n {
                    let mut acc = y[i];
                    $( acc += k[$idx][i] * (step * $coef); )+
                    y_stage[i] = acc;
                }
            }};
        }

        stage!(A21 => 0);
        rhs(t + C2 * step, &y_stage, &mut k[1])?;
        stage!(A31 => 0, A32 => 1);
        rhs(t + C3 * step, &y_stage, &mut k[2])?;
        stage!(A41 => 0, A42 => 1, A43 => 2);
        rhs(t + C4 * step, &y_stage, &mut k[3])?;
        stage!(A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        rhs(t + C5 * step, &y_stage, &mut k[4])?;
        stage!(A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        rhs(t + step, &y_stage, &mut k[5])?;
        for i in 0..n {
            y_new[i] = y[i]
                + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76)
                    * step;
        }
        rhs(t + step, &y_new, &mut k[6])?;
        stats.evaluations += 6;

        let mut err_sq = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * step;
            let sc_re = cfg.abs_tol + cfg.rel_tol * y[i].re.abs().max(y_new[i].re.abs());
            let sc_im = cfg.abs_tol + cfg.rel_tol * y[i].im.abs().max(y_new[i].im.abs());
            err_sq += (e.re / sc_re).powi(2) + (e.im / sc_im).powi(2);
        }
        let err = (err_sq / (2 * n).max(1) as f64).sqrt();

        if !err.is_finite() {
            stats.rejected += 1;
            h = step * MIN_FACTOR;
            continue;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            t = if hits_stop { stop } else { t + step };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            check(t, &y)?;
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            // a step shortened to land on an output time says little about the next one
            let base = if hits_stop { h.max(step) } else { step };
            h = (base * factor).min(cfg.max_step);
        } else {
            stats.rejected += 1;
            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h = step * factor;
        }
    }
    Ok((y, recorded, stats))
}
