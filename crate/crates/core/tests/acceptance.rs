//! Acceptance checks, one PASS/FAIL line each. Exits nonzero if any fails.
//!
//! Run with `cargo test -p floquet-dde --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use floquet_dde::family::{Family, Path};
use floquet_dde::monodromy::{decay_estimate, monodromy_numeric, verdict};
use floquet_dde::steps::{integrate, StepSize};
use floquet_dde::sweep::{d_subdivision_damped, d_subdivision_undamped, sweep_omega, Interval, SweepResult};
use floquet_dde::{EquationSpec, Model, StabilityClass};

use common::{examples, floquet_defect, rel_close};

const SWEEP_STEP: f64 = 0.01;
const REFINE_TOL: f64 = 1e-4;
const ENDPOINT_TOL: f64 = 0.05;
const SWEEP_BUDGET: Duration = Duration::from_secs(60);
const ORACLE_TOL: f64 = 1e-6;
const NO_DELAY_DAMPED_TOL: f64 = 1e-12;
const NO_DELAY_UNDAMPED_TOL: f64 = 1e-10;
const FLOQUET_TOL: f64 = 1e-5;
const FLOQUET_FLOOR: f64 = 1e-6;
const FLOQUET_SAMPLES: usize = 100;
const DECAY_TOL: f64 = 1e-3;
const ORDER_RANGE: (f64, f64) = (12.0, 20.0);
const CROSSING_TOL: f64 = 1e-10;
const ORIGIN_TOL: f64 = 1e-3;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn sweep(family: Family, lo: f64, hi: f64) -> SweepResult {
    sweep_omega(&Model::Family(family), lo, hi, SWEEP_STEP, REFINE_TOL, Path::Auto).unwrap()
}

fn class_at(family: Family, omega: f64) -> StabilityClass {
    Model::Family(family).evaluate(omega, Path::Auto).unwrap().verdict.class
}

fn show(ivs: &[Interval]) -> String {
    let parts: Vec<String> = ivs.iter().map(|iv| format!("[{:.3}, {:.3}]", iv.lo, iv.hi)).collect();
    format!("{{{}}}", parts.join(", "))
}

fn near(iv: &Interval, lo: f64, hi: f64) -> bool {
    (iv.lo - lo).abs() <= ENDPOINT_TOL && (iv.hi - hi).abs() <= ENDPOINT_TOL
}

fn stable_at(family: Family, omegas: &[f64]) -> (bool, String) {
    let classes: Vec<String> = omegas
        .iter()
        .map(|&w| format!("{w}: {}", class_at(family, w)))
        .collect();
    let ok = omegas
        .iter()
        .all(|&w| class_at(family, w) == StabilityClass::ExponentiallyStable);
    (ok, classes.join(", "))
}

fn undamped_sweep() -> Outcome {
    let family = Family::undamped(1.0, -0.5, 0.5).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let r = pool.install(|| sweep(family, 0.5, 21.0));
    let elapsed = start.elapsed();
    let shape = r.intervals.len() == 2 && near(&r.intervals[0], 0.51, 0.6) && near(&r.intervals[1], 2.8, 20.0);
    let (mids, classes) = stable_at(family, &[0.55, 10.0]);
    let ok = shape && mids && elapsed <= SWEEP_BUDGET;
    (
        ok,
        format!(
            "intervals {} (want [0.51, 0.6] and [2.8, 20.0]); {classes}; {:.2} s on one thread",
            show(&r.intervals),
            elapsed.as_secs_f64()
        ),
    )
}

fn second_undamped_sweep() -> Outcome {
    let family = Family::undamped(1.0, -1.0, 0.5).unwrap();
    let r = sweep(family, 0.5, 21.0);
    let found = r.intervals.iter().any(|iv| near(iv, 0.51, 1.2));
    let (mid, classes) = stable_at(family, &[0.8]);
    (
        found && mid,
        format!("intervals {} (want [0.51, 1.2]); {classes}", show(&r.intervals)),
    )
}

fn damped_sweep() -> Outcome {
    let family = Family::damped(0.5, 1.0, 0.5).unwrap();
    let r = sweep(family, 0.5, 21.0);
    let covers = r.intervals.iter().any(|iv| iv.lo <= 0.55 && iv.hi >= 5.95);
    let (mid, classes) = stable_at(family, &[3.0]);
    (
        covers && mid,
        format!("intervals {} (want one covering [0.55, 5.95]); {classes}", show(&r.intervals)),
    )
}

fn damped_windows() -> Outcome {
    let first = Family::damped(2.0, 2.5, 1.0).unwrap();
    let (mids, classes) = stable_at(first, &[2.7, 5.6, 8.5, 11.4, 14.3]);
    let third = Family::damped(2.0, 3.3, 1.0).unwrap();
    let (at, third_class) = stable_at(third, &[2.5]);
    let r = sweep(third, 1.0, 4.0);
    let width = r
        .intervals
        .iter()
        .find(|iv| iv.lo <= 2.5 && iv.hi >= 2.5)
        .map(|iv| iv.hi - iv.lo);
    let narrow = width.is_some_and(|w| w <= 0.3);
    (
        mids && at && narrow,
        format!(
            "b=2.5 at {classes}; b=3.3 at {third_class}, intervals {}, width around 2.5: {width:?} (want <= 0.3)",
            show(&r.intervals)
        ),
    )
}

fn cross_path() -> Outcome {
    let mut worst_entry: f64 = 0.0;
    let mut worst_rho: f64 = 0.0;
    let mut bad = Vec::new();
    for ex in examples() {
        let model = Model::Family(ex.family);
        for &omega in ex.periods.iter().filter(|&&w| w <= 20.0) {
            let analytic = model.evaluate(omega, Path::Analytic).unwrap();
            let numeric = monodromy_numeric(&ex.family.spec(omega), StepSize::Oracle).unwrap();
            let scale = numeric.max_abs();
            for (x, y) in analytic.matrix.entries().iter().zip(numeric.entries()) {
                let s = x.abs().max(scale);
                worst_entry = worst_entry.max((x - y).abs() / s);
                if !rel_close(*x, y, s, ORACLE_TOL) {
                    bad.push(format!("{} at {omega}", ex.name));
                }
            }
            let d = (analytic.verdict.rho - verdict(&numeric).rho).abs();
            worst_rho = worst_rho.max(d);
            if d > ORACLE_TOL {
                bad.push(format!("{} rho at {omega}", ex.name));
            }
        }
    }
    (
        bad.is_empty(),
        format!("worst entry {worst_entry:.2e}, worst rho {worst_rho:.2e}; mismatches {bad:?}"),
    )
}

fn without_delay_term() -> Outcome {
    let damped = Model::Family(Family::damped(1.0, 0.0, 0.5).unwrap())
        .evaluate(1.0, Path::Auto)
        .unwrap()
        .verdict;
    let want = [1.0, (-1.0f64).exp()];
    let got = [damped.lambda1, damped.lambda2];
    let damped_err = got
        .iter()
        .zip(want)
        .map(|(l, w)| (l - w).norm())
        .fold(0.0, f64::max);
    let damped_ok = damped_err <= NO_DELAY_DAMPED_TOL && damped.class == StabilityClass::Marginal;

    let mut undamped_err: f64 = 0.0;
    for (a, tau) in [(1.0, 0.5), (4.0, 1.0), (0.3, 0.2)] {
        let model = Model::Family(Family::undamped(a, 0.0, tau).unwrap());
        for omega in [tau, 1.0, 3.7, 12.0] {
            let v = model.evaluate(omega.max(tau), Path::Auto).unwrap().verdict;
            for l in [v.lambda1, v.lambda2] {
                undamped_err = undamped_err.max((l.norm() - 1.0).abs());
            }
        }
    }
    let undamped_ok = undamped_err <= NO_DELAY_UNDAMPED_TOL;
    (
        damped_ok && undamped_ok,
        format!(
            "damped multipliers off by {damped_err:.2e}, class {}; undamped | |lambda| - 1 | <= {undamped_err:.2e}",
            damped.class
        ),
    )
}

fn floquet_relation() -> Outcome {
    let family = Family::damped(0.5, 1.0, 0.5).unwrap();
    let model = Model::Family(family);
    let at_three = model.evaluate(3.0, Path::Auto).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;

    // the relation itself, for the dominant multiplier whatever its type
    let d3 = floquet_defect(
        &family.spec(3.0),
        &at_three.matrix,
        at_three.verdict.lambda1,
        FLOQUET_SAMPLES,
        FLOQUET_FLOOR,
    );
    ok &= d3 <= FLOQUET_TOL;
    let kind = if at_three.verdict.dominant_real().is_some() { "real" } else { "complex pair" };
    notes.push(format!("period 3: dominant {:.6} ({kind}), defect {d3:.2e}", at_three.verdict.lambda1));

    // nearest period with a real dominant multiplier, for the real eigenvector path
    let real_omega = 3.3;
    let e = model.evaluate(real_omega, Path::Auto).unwrap();
    match e.verdict.dominant_real() {
        Some(l) => {
            let d = floquet_defect(
                &family.spec(real_omega),
                &e.matrix,
                e.verdict.lambda1,
                FLOQUET_SAMPLES,
                FLOQUET_FLOOR,
            );
            ok &= d <= FLOQUET_TOL;
            notes.push(format!("period {real_omega}: real dominant {l:.6}, defect {d:.2e}"));
        }
        None => {
            ok = false;
            notes.push(format!("period {real_omega}: dominant multiplier not real"));
        }
    }
    (ok, notes.join("; "))
}

fn decay_law() -> Outcome {
    let family = Family::undamped(1.0, -0.5, 0.5).unwrap();
    let spec = family.spec(3.0);
    let v = Model::Family(family).evaluate(3.0, Path::Auto).unwrap().verdict;
    let est = decay_estimate(&v, &spec, StepSize::Default).unwrap();
    match est.fit {
        Some(fit) => {
            let d = (fit.rho - v.rho).abs();
            (
                d <= DECAY_TOL,
                format!(
                    "fitted rho {:.10} vs spectral radius {:.10} (diff {d:.2e}), N = {:.4}, fit residual {:.2e}",
                    fit.rho, v.rho, fit.bound, fit.residual
                ),
            )
        }
        None => (false, format!("no decay (rho {})", v.rho)),
    }
}

fn integrator_order() -> Outcome {
    // long horizon so truncation error dominates rounding
    let period = 1000.0;
    let spec = EquationSpec::undamped_ramp(1.0, 0.0, 0.5, period);
    let err = |h: f64| {
        let (x, v) = integrate(&spec, (0.0, 1.0), StepSize::Fixed(h)).unwrap().final_state();
        (x - period.sin()).abs().max((v - period.cos()).abs())
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    let ratio = e1 / e2;
    (
        (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&ratio),
        format!("error {e1:.3e} -> {e2:.3e}, ratio {ratio:.3}"),
    )
}

fn d_subdivision() -> Outcome {
    let curves = [
        d_subdivision_damped(1.0, (0.0, 20.0), 4000, (-5.0, 5.0)).unwrap(),
        d_subdivision_damped(0.5, (0.0, 40.0), 4000, (-5.0, 5.0)).unwrap(),
        d_subdivision_undamped(0.5, (-20.0, 20.0), 2000, 6).unwrap(),
        d_subdivision_undamped(1.0, (-20.0, 20.0), 2000, 6).unwrap(),
    ];
    let worst = curves
        .iter()
        .flat_map(|c| c.points.iter())
        .map(|p| p.residual)
        .fold(0.0, f64::max);
    let small = d_subdivision_damped(1e-6, (0.0, 1.0), 1001, (-1.0, 1.0)).unwrap();
    let nearest = small
        .points
        .iter()
        .filter(|p| p.mu > 0.0)
        .map(|p| p.a.hypot(p.b))
        .fold(f64::INFINITY, f64::min);
    (
        worst <= CROSSING_TOL && nearest <= ORIGIN_TOL,
        format!("worst residual {worst:.2e}; tau = 1e-6 curve reaches {nearest:.2e} of the origin"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("undamped a=1 b=-0.5 tau=0.5: two stable period intervals", undamped_sweep),
        ("undamped a=1 b=-1 tau=0.5: stable period interval", second_undamped_sweep),
        ("damped a=0.5 b=1 tau=0.5: stable period interval", damped_sweep),
        ("damped a=2 tau=1: stable windows for b=2.5 and b=3.3", damped_windows),
        ("closed-form and integrator monodromy agree", cross_path),
        ("b=0 multipliers are exact", without_delay_term),
        ("Floquet solution scales by its multiplier", floquet_relation),
        ("period orbit decays at the spectral radius", decay_law),
        ("integrator is fourth order", integrator_order),
        ("D-subdivision points solve the crossing equations", d_subdivision),
    ];
    // keep panic messages out of the report; a panic counts as a failure
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
