//! Method-of-steps integrator: order, superposition and period maps.

use std::f64::consts::FRAC_PI_2;

use floquet_dde::analytic_undamped::UndampedChain;
use floquet_dde::monodromy::{monodromy_numeric, verdict};
use floquet_dde::steps::{delayed_value, integrate, simulate_periods, StepSize};
use floquet_dde::{EquationSpec, InitialCondition};

fn harmonic(period: f64) -> EquationSpec {
    EquationSpec::undamped_ramp(1.0, 0.0, 0.5, period)
}

/// Error of x2 = sin at the period end for `x'' + x = 0`.
fn harmonic_error(period: f64, h: f64) -> f64 {
    let (x, v) = integrate(&harmonic(period), (0.0, 1.0), StepSize::Fixed(h))
        .unwrap()
        .final_state();
    (x - period.sin()).abs().max((v - period.cos()).abs())
}

#[test]
fn fourth_order_on_harmonic_reference() {
    // a long horizon keeps truncation error well above rounding
    let ratio = harmonic_error(1000.0, 1e-3) / harmonic_error(1000.0, 5e-4);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn fourth_order_against_analytic_chain() {
    // stiffer undamped example so the error is visible at h = 1e-3
    let (a, b, tau, period) = (100.0, -0.5, 0.5, 20.0);
    let spec = EquationSpec::undamped_ramp(a, b, tau, period);
    let exact = UndampedChain::build(a, b, tau, period, InitialCondition::UnitVelocity)
        .unwrap()
        .eval(period)
        .unwrap();
    let err = |h: f64| {
        let (x, v) = integrate(&spec, (0.0, 1.0), StepSize::Fixed(h)).unwrap().final_state();
        (x - exact.0).abs().max((v - exact.1).abs())
    };
    let ratio = err(1e-3) / err(5e-4);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn sine_at_quarter_period() {
    let (x, v) = integrate(&harmonic(FRAC_PI_2), (0.0, 1.0), StepSize::Fixed(1e-3))
        .unwrap()
        .final_state();
    assert!((x - 1.0).abs() <= 1e-8);
    assert!(v.abs() <= 1e-8);
}

#[test]
fn pure_damping_second_solution() {
    for period in [0.5, 1.0, 4.0] {
        let spec = EquationSpec::damped_ramp(1.0, 0.0, 0.5, period);
        let (x, _) = integrate(&spec, (0.0, 1.0), StepSize::Default).unwrap().final_state();
        assert!((x - (1.0 - (-period).exp())).abs() <= 1e-8);
    }
}

#[test]
fn dense_output_reproduces_sine() {
    let traj = integrate(&harmonic(3.0), (0.0, 1.0), StepSize::Fixed(1e-3)).unwrap();
    for k in 0..300 {
        let t = 0.0123 + k as f64 * 0.00997;
        assert!((delayed_value(&traj, t).unwrap() - t.sin()).abs() <= 1e-9);
    }
}

#[test]
fn period_map_is_linear() {
    let spec = EquationSpec::damped_ramp(0.5, 1.0, 0.5, 3.0);
    let m = monodromy_numeric(&spec, StepSize::Default).unwrap();
    for init in [(0.3, -1.7), (-2.0, 0.25), (1e-3, 5.0)] {
        let direct = integrate(&spec, init, StepSize::Default).unwrap().final_state();
        let mapped = m.apply(init);
        let scale = direct.0.abs().max(direct.1.abs());
        assert!((direct.0 - mapped.0).abs() <= 1e-8 * scale);
        assert!((direct.1 - mapped.1).abs() <= 1e-8 * scale);
    }
}

#[test]
fn period_orbit_is_matrix_power() {
    let spec = EquationSpec::undamped_ramp(1.0, -0.5, 0.5, 3.0);
    let m = monodromy_numeric(&spec, StepSize::Default).unwrap();
    let init = (0.6, -0.8);
    let orbit = simulate_periods(&spec, init, 10, StepSize::Default).unwrap();
    for (k, &s) in orbit.iter().enumerate() {
        let expected = m.pow(k as u32).apply(init);
        let scale = expected.0.abs().max(expected.1.abs());
        assert!((s.0 - expected.0).abs() <= 1e-6 * scale, "k={k}");
        assert!((s.1 - expected.1).abs() <= 1e-6 * scale, "k={k}");
    }
}

#[test]
fn orbit_examples() {
    let spec = EquationSpec::damped_ramp(1.0, 0.0, 0.5, 1.0);
    assert!(simulate_periods(&spec, (0.0, 0.0), 5, StepSize::Default)
        .unwrap()
        .iter()
        .all(|&s| s == (0.0, 0.0)));
    let orbit = simulate_periods(&spec, (0.0, 1.0), 5, StepSize::Default).unwrap();
    for (k, s) in orbit.iter().enumerate() {
        assert!((s.1 - (-(k as f64)).exp()).abs() <= 1e-9, "k={k}");
    }
}

#[test]
fn orbit_growth_matches_spectral_radius() {
    // the multipliers here are a complex pair, so consecutive norms oscillate;
    // the area spanned by consecutive states shrinks by exactly det M = rho^2
    let spec = EquationSpec::undamped_ramp(1.0, -0.5, 0.5, 3.0);
    let v = verdict(&monodromy_numeric(&spec, StepSize::Default).unwrap());
    assert!(v.lambda1.im != 0.0);
    let orbit = simulate_periods(&spec, (1.0, 0.0), 30, StepSize::Default).unwrap();
    let area = |k: usize| (orbit[k].0 * orbit[k + 1].1 - orbit[k].1 * orbit[k + 1].0).abs();
    let ratio = (area(29) / area(28)).sqrt();
    assert!((ratio - v.rho).abs() <= 1e-4, "{ratio} vs {}", v.rho);
}

#[test]
fn norm_ratio_approaches_real_dominant_multiplier() {
    // real multipliers -0.974 and -0.869: the subdominant part dies off as 0.89^k
    let spec = EquationSpec::damped_ramp(0.5, 1.0, 0.5, 3.3);
    let v = verdict(&monodromy_numeric(&spec, StepSize::Default).unwrap());
    assert_eq!(v.lambda1.im, 0.0);
    let orbit = simulate_periods(&spec, (1.0, 0.0), 120, StepSize::Default).unwrap();
    let norm = |s: (f64, f64)| s.0.hypot(s.1);
    let ratio = norm(orbit[120]) / norm(orbit[119]);
    assert!((ratio - v.rho).abs() <= 1e-4, "{ratio} vs {}", v.rho);
}
