//! Property checks shared by the property suite and the acceptance run.

#![allow(dead_code)]

use bomca_core::hierarchy::{convective_term, propagate_trajectory, TruncationOrder};
use bomca_core::jet::Jet;
use bomca_core::model::{initial_action, initial_velocity_jet, potential_jet, psi_from_action};
use bomca_core::ode::IntegratorConfig;
use bomca_core::{Complex64, GaussianWavepacket, PotentialModel, SystemSpec};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use std::f64::consts::PI;

pub fn complex(re: std::ops::Range<f64>, im: std::ops::Range<f64>) -> impl Strategy<Value = Complex64> {
    (re, im).prop_map(|(a, b)| Complex64::new(a, b))
}

pub fn stack(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(-3.0..3.0, -3.0..3.0), len)
}

fn close(a: Complex64, b: Complex64, rel: f64, what: &str) -> Result<(), TestCaseError> {
    let scale = a.norm().max(b.norm()).max(1.0);
    prop_assert!((a - b).norm() <= rel * scale, "{what}: {a} vs {b}");
    Ok(())
}

/// `g̃ₙ` against the Cauchy product of the Taylor series of `v` and `v_x`:
/// `∂ⁿ(v v_x) − v v⁽ⁿ⁺¹⁾`.
pub fn convective_matches_series_product(v: Vec<Complex64>, n: usize) -> Result<(), TestCaseError> {
    let mut padded = v.clone();
    padded.resize(v.len().max(n + 2), Complex64::new(0.0, 0.0));
    let field = Jet::from_derivatives(&padded);
    let slope = Jet::from_derivatives(&padded[1..]);
    let product = field.mul_jet(&slope).derivatives();
    let expected = product[n] - padded[0] * padded[n + 1];
    close(convective_term(&v, n), expected, 1e-12, &format!("g̃_{n}"))
}

fn eckart(height: f64, beta: f64) -> PotentialModel {
    PotentialModel::Eckart { height, beta }
}

/// Derivative `k + 1` of the jet against a central difference of derivative `k`.
pub fn jet_matches_central_difference(height: f64, beta: f64, x: Complex64, k: usize) -> Result<(), TestCaseError> {
    let pot = eckart(height, beta);
    let h = 1e-6;
    let Ok(jet) = potential_jet(&pot, x, k + 1) else { return Ok(()) };
    let (Ok(plus), Ok(minus)) = (potential_jet(&pot, x + h, k), potential_jet(&pot, x - h, k)) else { return Ok(()) };
    let fd = (plus.values[k] - minus.values[k]) / (2.0 * h);
    let exact = jet.values[k + 1];
    prop_assert!((fd - exact).norm() <= 1e-6 * exact.norm().max(1.0), "order {k}: {fd} vs {exact}");
    Ok(())
}

/// Derivative 1 of the jet against the complex-step derivative of the value on
/// the real axis.
pub fn jet_matches_complex_step(height: f64, beta: f64, x: f64) -> Result<(), TestCaseError> {
    let pot = eckart(height, beta);
    let h = 1e-20;
    let step = potential_jet(&pot, Complex64::new(x, h), 0).unwrap().values[0].im / h;
    let exact = potential_jet(&pot, Complex64::new(x, 0.0), 1).unwrap().values[1];
    prop_assert!(exact.im.abs() < 1e-12 * exact.norm().max(1.0));
    prop_assert!((step - exact.re).abs() <= 1e-10 * exact.re.abs().max(1.0), "{step} vs {exact}");
    Ok(())
}

pub fn eckart_odd_derivatives_vanish_at_origin(height: f64, beta: f64) -> Result<(), TestCaseError> {
    let jet = potential_jet(&eckart(height, beta), Complex64::new(0.0, 0.0), 6).unwrap();
    for n in [1, 3, 5] {
        prop_assert!(jet.values[n].norm() <= 1e-12 * jet.values[n + 1].norm().max(height), "V^({n})(0) = {}", jet.values[n]);
    }
    prop_assert!((jet.values[0] - height).norm() < 1e-12 * height);
    Ok(())
}

pub fn eckart_is_even(height: f64, beta: f64, x: Complex64) -> Result<(), TestCaseError> {
    let pot = eckart(height, beta);
    if let (Ok(a), Ok(b)) = (pot.value(x), pot.value(-x)) {
        close(a, b, 1e-12, "V(x) vs V(-x)")?;
    }
    Ok(())
}

/// `exp(iS₀/ħ)` against the Gaussian written out directly.
pub fn action_round_trip(alpha: f64, x_c: f64, p_c: f64, hbar: f64, offset: Complex64) -> Result<(), TestCaseError> {
    let wp = GaussianWavepacket::new(alpha, x_c, p_c).unwrap();
    let sys = SystemSpec::new(30.0, hbar, PotentialModel::Free).unwrap();
    let x0 = x_c + offset;
    let d = x0 - x_c;
    let direct = (2.0 * alpha / PI).powf(0.25) * (-alpha * d * d + Complex64::i() * p_c * d / hbar).exp();
    let round = psi_from_action(initial_action(&wp, &sys, x0), hbar);
    prop_assert!((round - direct).norm() <= 1e-12 * direct.norm(), "{round} vs {direct}");
    Ok(())
}

/// `v⁽¹⁾` and `v⁽²⁾` of the launch jet against first and second central
/// differences of `v⁽⁰⁾` over `x₀`.
pub fn velocity_jet_matches_differences(alpha: f64, p_c: f64, x0: Complex64) -> Result<(), TestCaseError> {
    let wp = GaussianWavepacket::new(alpha, -0.7, p_c).unwrap();
    let sys = SystemSpec::new(30.0, 1.0, PotentialModel::Free).unwrap();
    let h = 1e-4;
    let v0 = |x: Complex64| initial_velocity_jet(&wp, &sys, x, 0).values[0];
    let jet = initial_velocity_jet(&wp, &sys, x0, 4);
    let first = (v0(x0 + h) - v0(x0 - h)) / (2.0 * h);
    let second = (v0(x0 + h) - 2.0 * v0(x0) + v0(x0 - h)) / (h * h);
    prop_assert!((first - jet.values[1]).norm() <= 1e-6 * jet.values[1].norm().max(1.0));
    prop_assert!((second - jet.values[2]).norm() <= 1e-6 * jet.values[1].norm().max(1.0), "{second}");
    prop_assert!(jet.values[3..].iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    Ok(())
}

/// Free Gaussian data keeps `v⁽ⁿ⁾ = 0` for `n ≥ 2`, so every order agrees with `N = 1`.
pub fn free_truncation_is_consistent(x0: Complex64, order: usize) -> Result<(), TestCaseError> {
    let wp = GaussianWavepacket::new(30.0 * PI, -0.7, 5.0).unwrap();
    let sys = SystemSpec::new(30.0, 1.0, PotentialModel::Free).unwrap();
    let cfg = IntegratorConfig::for_duration(1.0);
    let base = propagate_trajectory(x0, &wp, &sys, TruncationOrder::new(1).unwrap(), 1.0, &cfg).unwrap();
    let high = propagate_trajectory(x0, &wp, &sys, TruncationOrder::new(order).unwrap(), 1.0, &cfg).unwrap();
    close(base.x, high.x, 1e-9, "x")?;
    close(base.v[0], high.v[0], 1e-9, "v0")?;
    close(base.v[1], high.v[1], 1e-9, "v1")?;
    close(base.action, high.action, 1e-9, "S")?;
    prop_assert!(high.v[2..].iter().all(|v| v.norm() < 1e-12));
    Ok(())
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn height() -> std::ops::Range<f64> {
    1.0..100.0
}

pub fn beta() -> std::ops::Range<f64> {
    0.5..6.0
}

/// Every suite with its case count, in a fixed order.
pub fn suites() -> Vec<(&'static str, Result<(), String>)> {
    vec![
        (
            "convective term vs series product, n <= 8",
            run(256, (2usize..=10).prop_flat_map(|len| (stack(len), 0..=8usize)), |(v, n)| {
                convective_matches_series_product(v, n)
            }),
        ),
        (
            "potential jet vs central difference",
            run(100, (height(), beta(), complex(-1.0..1.0, -0.3..0.3), 0..4usize), |(d, b, x, k)| {
                jet_matches_central_difference(d, b, x, k)
            }),
        ),
        ("potential jet vs complex step", run(100, (height(), beta(), -1.5..1.5f64), |(d, b, x)| jet_matches_complex_step(d, b, x))),
        ("Eckart parity at the origin", run(100, (height(), beta()), |(d, b)| eckart_odd_derivatives_vanish_at_origin(d, b))),
        ("Eckart even symmetry", run(100, (height(), beta(), complex(-2.0..2.0, -0.3..0.3)), |(d, b, x)| eckart_is_even(d, b, x))),
        (
            "initial action round trip",
            run(100, (1.0..200.0f64, -2.0..2.0f64, -10.0..10.0f64, 0.5..2.0f64, complex(-1.4..1.4, -1.4..1.4)), |(a, x, p, h, d)| {
                action_round_trip(a, x, p, h, d)
            }),
        ),
        (
            "initial velocity jet vs differences",
            run(100, (1.0..200.0f64, -10.0..10.0f64, complex(-2.0..1.0, -1.0..1.0)), |(a, p, x)| {
                velocity_jet_matches_differences(a, p, x)
            }),
        ),
        (
            "free truncation consistency",
            run(32, (complex(-0.9..-0.5, -0.3..0.3), 2..=8usize), |(x, n)| free_truncation_is_consistent(x, n)),
        ),
    ]
}
