//! Floquet solutions and decay of period-boundary orbits.

mod common;

use floquet_dde::family::{Family, Path};
use floquet_dde::monodromy::{decay_estimate, fit_orbit_decay, floquet_initial_state};
use floquet_dde::steps::{simulate_periods, StepSize};
use floquet_dde::{Model, StabilityClass};
use num_complex::Complex64;

use common::floquet_defect;

fn damped_example() -> Family {
    Family::damped(0.5, 1.0, 0.5).unwrap()
}

#[test]
fn real_multiplier_solution_scales_by_lambda() {
    // both multipliers are real and negative here
    let fam = damped_example();
    let eval = Model::Family(fam).evaluate(3.3, Path::Auto).unwrap();
    let lambda = eval.verdict.dominant_real().expect("real dominant multiplier");
    assert!(lambda < -0.9);
    let defect = floquet_defect(&fam.spec(3.3), &eval.matrix, Complex64::new(lambda, 0.0), 100, 1e-6);
    assert!(defect <= 1e-5, "defect {defect}");
}

#[test]
fn complex_pair_solution_rotates_by_lambda() {
    let fam = damped_example();
    let eval = Model::Family(fam).evaluate(3.0, Path::Auto).unwrap();
    assert!(eval.verdict.dominant_real().is_none());
    let defect = floquet_defect(&fam.spec(3.0), &eval.matrix, eval.verdict.lambda1, 100, 1e-6);
    assert!(defect <= 1e-5, "defect {defect}");
}

#[test]
fn real_eigenvector_state_maps_onto_itself() {
    let fam = damped_example();
    let spec = fam.spec(6.6);
    let eval = Model::Family(fam).evaluate(6.6, Path::Auto).unwrap();
    for lambda in [eval.verdict.lambda1.re, eval.verdict.lambda2.re] {
        let c = floquet_initial_state(&eval.matrix, lambda).unwrap();
        let orbit = simulate_periods(&spec, c, 3, StepSize::Default).unwrap();
        for (k, s) in orbit.iter().enumerate().skip(1) {
            let want = lambda.powi(k as i32);
            assert!((s.0 - want * c.0).abs() <= 1e-9 && (s.1 - want * c.1).abs() <= 1e-9);
        }
    }
}

#[test]
fn fitted_decay_matches_spectral_radius() {
    let fam = Family::undamped(1.0, -0.5, 0.5).unwrap();
    let spec = fam.spec(3.0);
    let eval = Model::Family(fam).evaluate(3.0, Path::Auto).unwrap();
    assert_eq!(eval.verdict.class, StabilityClass::ExponentiallyStable);
    let est = decay_estimate(&eval.verdict, &spec, StepSize::Default).unwrap();
    let fit = est.fit.clone().unwrap();
    assert!((fit.rho - eval.verdict.rho).abs() <= 1e-3, "{} vs {}", fit.rho, eval.verdict.rho);
    assert!(fit.residual < 1e-6 && est.fit_holds());
    assert!((est.per_unit_time.unwrap() - eval.verdict.rho.powf(1.0 / 3.0)).abs() < 1e-14);
    assert!((est.rate.unwrap() + eval.verdict.rho.ln() / 3.0).abs() < 1e-15);
}

#[test]
fn decay_fit_on_real_multipliers() {
    let fam = damped_example();
    let eval = Model::Family(fam).evaluate(3.3, Path::Auto).unwrap();
    let fit = fit_orbit_decay(&fam.spec(3.3), 30, StepSize::Default).unwrap();
    assert!((fit.rho - eval.verdict.rho).abs() <= 1e-6);
}

#[test]
fn no_fit_for_unstable_orbit() {
    let fam = Family::damped(2.0, 2.5, 1.0).unwrap();
    let eval = Model::Family(fam).evaluate(2.7, Path::Auto).unwrap();
    assert_eq!(eval.verdict.class, StabilityClass::Unstable);
    let est = decay_estimate(&eval.verdict, &fam.spec(2.7), StepSize::Default).unwrap();
    assert!(est.rate.is_none() && est.fit.is_none());
}
