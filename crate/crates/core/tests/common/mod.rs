#![allow(dead_code)]

use floquet_dde::family::Family;

/// A parameter set from the worked examples with the periods probed in tests.
pub struct Example {
    pub name: &'static str,
    pub family: Family,
    pub periods: &'static [f64],
}

pub fn examples() -> Vec<Example> {
    vec![
        Example {
            name: "undamped a=1 b=-0.5 tau=0.5",
            family: Family::undamped(1.0, -0.5, 0.5).unwrap(),
            periods: &[0.55, 3.0, 10.0, 20.0],
        },
        Example {
            name: "undamped a=1 b=-1 tau=0.5",
            family: Family::undamped(1.0, -1.0, 0.5).unwrap(),
            periods: &[0.8, 1.2],
        },
        Example {
            name: "damped a=0.5 b=1 tau=0.5",
            family: Family::damped(0.5, 1.0, 0.5).unwrap(),
            periods: &[0.55, 3.0, 5.95, 12.0, 20.0],
        },
        Example {
            name: "damped a=2 b=2.5 tau=1",
            family: Family::damped(2.0, 2.5, 1.0).unwrap(),
            periods: &[2.7, 5.6, 8.5, 11.4, 14.3, 17.2, 20.0],
        },
        Example {
            name: "damped a=2 b=3 tau=1",
            family: Family::damped(2.0, 3.0, 1.0).unwrap(),
            periods: &[2.55],
        },
        Example {
            name: "damped a=2 b=3.3 tau=1",
            family: Family::damped(2.0, 3.3, 1.0).unwrap(),
            periods: &[2.5],
        },
        Example {
            name: "damped a=2.5 b=4.6 tau=1",
            family: Family::damped(2.5, 4.6, 1.0).unwrap(),
            periods: &[2.275],
        },
    ]
}

pub fn rel_close(x: f64, y: f64, scale: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}

/// Worst relative defect of `x(t + w) = lambda x(t)` for the solution started
/// from the eigenvector of `lambda`, over `samples` points of the first period
/// where `|x|` exceeds `floor` times its maximum.
///
/// Complex multipliers use the complex solution `xr + i xi` built from the
/// real and imaginary parts of the eigenvector.
pub fn floquet_defect(
    spec: &floquet_dde::EquationSpec,
    m: &floquet_dde::MonodromyMatrix,
    lambda: num_complex::Complex64,
    samples: usize,
    floor: f64,
) -> f64 {
    use floquet_dde::monodromy::floquet_initial_state_complex;
    use floquet_dde::steps::{simulate_trajectories, StepSize};
    use num_complex::Complex64;

    let c = floquet_initial_state_complex(m, lambda).unwrap();
    let run = |init: (f64, f64)| simulate_trajectories(spec, init, 2, StepSize::Default).unwrap();
    let re = run((c.0.re, c.1.re));
    let im = run((c.0.im, c.1.im));
    let at = |k: usize, t: f64| Complex64::new(re[k].eval(t).unwrap().0, im[k].eval(t).unwrap().0);

    let w = spec.period;
    let pts: Vec<(Complex64, Complex64)> = (0..samples)
        .map(|j| {
            let t = j as f64 * w / samples as f64;
            (at(0, t), at(1, t))
        })
        .collect();
    let max = pts.iter().fold(0.0, |m: f64, p| m.max(p.0.norm()));
    pts.iter()
        .filter(|p| p.0.norm() > floor * max)
        .map(|(now, next)| (next - lambda * now).norm() / (lambda * now).norm())
        .fold(0.0, f64::max)
}
