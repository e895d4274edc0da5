use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use floquet_dde::family::{FamilyKind, Route, CROSS_CHECK_TOL};
use floquet_dde::monodromy::{decay_estimate, DecayEstimate, MARGINAL_TOL};
use floquet_dde::report::{fmt_f64, write_csv, write_json, Meta};
use floquet_dde::steps::{simulate_trajectories, StepSize};
use floquet_dde::sweep::{
    d_subdivision_damped, d_subdivision_undamped, sweep_omega, sweep_plane, DSubdivisionCurve, Interval, PlaneScan,
    Sample,
};
use floquet_dde::{validate_spec, Error, EquationConfig, Evaluation, Family, Model, MonodromyMatrix, Path, StabilityVerdict};

use crate::args::{
    Command, DSubdivisionArgs, EquationArgs, FamilyArg, MonodromyArgs, NumericArgs, OutputArgs, PropagateArgs, SimulateArgs,
    SweepOmegaArgs, SweepPlaneArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numeric() => 2,
            CliError::Core(_) => 1,
            CliError::Output { .. } => 3,
            CliError::Usage(_) => 64,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// A finished command: a human summary plus the artifact in both formats.
pub struct Report {
    pub summary: String,
    pub csv: Vec<u8>,
    pub json: Vec<u8>,
}

pub fn run(command: &Command) -> Result<(Report, &OutputArgs)> {
    match command {
        Command::Propagate(args) => Ok((propagate(args)?, &args.output)),
        Command::Monodromy(args) => Ok((monodromy(args)?, &args.output)),
        Command::SweepOmega(args) => Ok((sweep(args)?, &args.output)),
        Command::SweepPlane(args) => Ok((plane(args)?, &args.output)),
        Command::DSubdivision(args) => Ok((dsub(args)?, &args.output)),
        Command::Simulate(args) => Ok((simulate(args)?, &args.output)),
    }
}

fn kind(f: FamilyArg) -> FamilyKind {
    match f {
        FamilyArg::Damped => FamilyKind::Damped,
        FamilyArg::Undamped => FamilyKind::Undamped,
    }
}

fn model(eq: &EquationArgs) -> Result<Model> {
    if let Some(path) = &eq.config {
        return Ok(Model::Config(EquationConfig::load(path)?));
    }
    let family = eq.family.ok_or_else(|| CliError::Usage("either --family or --config is required".into()))?;
    let (Some(a), Some(b), Some(tau)) = (eq.a, eq.b, eq.tau) else {
        return Err(CliError::Usage("--family needs --a, --b and --tau".into()));
    };
    Ok(Model::Family(Family::new(kind(family), a, b, tau)?))
}

fn period(model: &Model, omega: Option<f64>) -> Result<f64> {
    match (omega, model) {
        (Some(w), _) => Ok(w),
        (None, Model::Config(c)) => c
            .period
            .ok_or_else(|| CliError::Usage("--omega is required when the config has no period".into())),
        (None, Model::Family(_)) => Err(CliError::Usage("--omega is required".into())),
    }
}

/// Refuses to dispatch on a spec that breaks the structural assumptions.
fn validate(model: &Model, omega: f64) -> Result<()> {
    let report = validate_spec(&model.spec(omega)?);
    if report.is_ok() {
        Ok(())
    } else {
        Err(Error::Invalid(report).into())
    }
}

fn step(h: Option<f64>) -> StepSize {
    h.map_or(StepSize::Default, StepSize::Fixed)
}

fn path(n: &NumericArgs) -> Path {
    if n.numeric {
        Path::Numeric(step(n.h))
    } else if n.cross_check {
        Path::CrossCheck(step(n.h))
    } else {
        Path::Auto
    }
}

fn path_name(n: &NumericArgs) -> &'static str {
    if n.numeric {
        "numeric"
    } else if n.cross_check {
        "cross-check"
    } else {
        "auto"
    }
}

fn meta(model: serde_json::Value, n: Option<&NumericArgs>, extra: serde_json::Value) -> Meta {
    let mut tolerances = json!({ "marginal": MARGINAL_TOL });
    if let Some(n) = n {
        tolerances["path"] = json!(path_name(n));
        tolerances["h"] = json!(n.h);
        if n.cross_check {
            tolerances["cross_check"] = json!(CROSS_CHECK_TOL);
        }
    }
    if let serde_json::Value::Object(map) = extra {
        for (k, v) in map {
            tolerances[k] = v;
        }
    }
    Meta::new(model, tolerances)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("writing to memory");
    buf
}

fn csv_bytes<T>(header: &[&str], rows: impl IntoIterator<Item = T>, row: impl Fn(&T) -> Vec<String>) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows, row).expect("writing to memory");
    buf
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Analytic => "analytic",
        Route::Numeric => "numeric",
    }
}

fn describe_verdict(v: &StabilityVerdict) -> String {
    let mut s = format!("{} (rho = {}, margin = {})", v.class, fmt_f64(v.rho), fmt_f64(v.margin));
    let _ = write!(
        s,
        "\nlambda1 = {} {:+}i\nlambda2 = {} {:+}i",
        fmt_f64(v.lambda1.re),
        v.lambda1.im,
        fmt_f64(v.lambda2.re),
        v.lambda2.im
    );
    s
}

#[derive(Serialize)]
struct PropagateDoc {
    meta: Meta,
    omega: f64,
    initial: [f64; 2],
    state: [f64; 2],
    route: Route,
}

fn propagate(args: &PropagateArgs) -> Result<Report> {
    let model = model(&args.equation)?;
    let omega = period(&model, args.omega)?;
    validate(&model, omega)?;
    let eval = model.evaluate(omega, path(&args.numeric))?;
    let init = (args.x0, args.v0);
    let (x, v) = eval.matrix.apply(init);
    let doc = PropagateDoc {
        meta: meta(model.describe(), Some(&args.numeric), json!({})),
        omega,
        initial: [init.0, init.1],
        state: [x, v],
        route: eval.route,
    };
    Ok(Report {
        summary: format!(
            "x({omega}) = {}\nx'({omega}) = {}\nroute: {}",
            fmt_f64(x),
            fmt_f64(v),
            route_name(eval.route)
        ),
        csv: csv_bytes(&["omega", "x", "x_prime"], [(omega, x, v)], |r| {
            vec![fmt_f64(r.0), fmt_f64(r.1), fmt_f64(r.2)]
        }),
        json: json_bytes(&doc),
    })
}

#[derive(Serialize)]
struct MonodromyDoc {
    meta: Meta,
    omega: f64,
    route: Route,
    matrix: MonodromyMatrix,
    verdict: StabilityVerdict,
    decay: DecayEstimate,
}

fn monodromy(args: &MonodromyArgs) -> Result<Report> {
    let model = model(&args.equation)?;
    let omega = period(&model, args.omega)?;
    validate(&model, omega)?;
    let Evaluation { matrix, verdict, route } = model.evaluate(omega, path(&args.numeric))?;
    let decay = decay_estimate(&verdict, &model.spec(omega)?, step(args.numeric.h))?;
    let mut summary = format!("omega = {omega}: {}\nroute: {}", describe_verdict(&verdict), route_name(route));
    if let Some(rate) = decay.rate {
        let _ = write!(summary, "\ndecay rate = {} per unit time", fmt_f64(rate));
    }
    let m = matrix;
    let csv = csv_bytes(
        &["omega", "m11", "m12", "m21", "m22", "rho", "class"],
        [(omega, m, verdict)],
        |(w, m, v)| {
            let mut row: Vec<String> = std::iter::once(*w).chain(m.entries()).map(fmt_f64).collect();
            row.push(fmt_f64(v.rho));
            row.push(v.class.to_string());
            row
        },
    );
    let doc = MonodromyDoc {
        meta: meta(model.describe(), Some(&args.numeric), json!({})),
        omega,
        route,
        matrix,
        verdict,
        decay,
    };
    Ok(Report {
        summary,
        csv,
        json: json_bytes(&doc),
    })
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    meta: Meta,
    intervals: &'a [Interval],
    samples: &'a [Sample],
}

fn sweep(args: &SweepOmegaArgs) -> Result<Report> {
    let model = model(&args.equation)?;
    validate(&model, args.from)?;
    validate(&model, args.to)?;
    let r = sweep_omega(&model, args.from, args.to, args.step, args.refine_tol, path(&args.numeric))?;

    let mut summary = format!(
        "{} samples on [{}, {}] step {}, {} failed\n{} stable interval(s)",
        r.samples.len(),
        args.from,
        args.to,
        args.step,
        r.failed(),
        r.intervals.len()
    );
    for iv in &r.intervals {
        let flag = if iv.lower.degenerate || iv.upper.degenerate { " (degenerate endpoint)" } else { "" };
        let _ = write!(summary, "\n  [{:.6}, {:.6}]{flag}", iv.lo, iv.hi);
    }
    let csv = if args.intervals {
        csv_bytes(&["lo", "hi"], &r.intervals, |iv| vec![fmt_f64(iv.lo), fmt_f64(iv.hi)])
    } else {
        csv_bytes(&["omega", "rho", "class"], &r.samples, |s| {
            vec![fmt_f64(s.omega), fmt_f64(s.outcome.rho()), s.outcome.label().to_string()]
        })
    };
    let extra = json!({ "step": args.step, "refine_tol": args.refine_tol });
    let doc = SweepDoc {
        meta: meta(model.describe(), Some(&args.numeric), extra),
        intervals: &r.intervals,
        samples: &r.samples,
    };
    Ok(Report {
        summary,
        csv,
        json: json_bytes(&doc),
    })
}

#[derive(Serialize)]
struct PlaneDoc<'a> {
    meta: Meta,
    #[serde(flatten)]
    scan: &'a PlaneScan,
}

fn plane(args: &SweepPlaneArgs) -> Result<Report> {
    let kind = kind(args.family);
    // the grid corner validates the delay and period; coefficients do not matter
    validate(&Model::Family(Family::new(kind, 1.0, 0.0, args.tau)?), args.omega)?;
    let scan = sweep_plane(
        kind,
        (args.a_from, args.a_to),
        (args.b_from, args.b_to),
        (args.a_points, args.b_points),
        args.tau,
        args.omega,
        path(&args.numeric),
    )?;
    let stable = scan.cells.iter().filter(|c| c.outcome.is_stable()).count();
    let failed = scan.cells.iter().filter(|c| c.outcome.verdict().is_none()).count();
    let summary = format!(
        "{} cells at omega = {}, tau = {}: {stable} exponentially stable, {failed} failed",
        scan.cells.len(),
        args.omega,
        args.tau
    );
    let csv = csv_bytes(&["a", "b", "rho", "class"], &scan.cells, |c| {
        vec![fmt_f64(c.a), fmt_f64(c.b), fmt_f64(c.outcome.rho()), c.outcome.label().to_string()]
    });
    let template = json!({ "family": kind.as_str(), "tau": args.tau, "omega": args.omega });
    let doc = PlaneDoc {
        meta: meta(template, Some(&args.numeric), json!({})),
        scan: &scan,
    };
    Ok(Report {
        summary,
        csv,
        json: json_bytes(&doc),
    })
}

#[derive(Serialize)]
struct CurveDoc<'a> {
    meta: Meta,
    #[serde(flatten)]
    curve: &'a DSubdivisionCurve,
}

fn dsub(args: &DSubdivisionArgs) -> Result<Report> {
    let curve = match args.family {
        FamilyArg::Damped => {
            d_subdivision_damped(args.tau, (args.mu_from, args.mu_to), args.points, (args.a_from, args.a_to))?
        }
        FamilyArg::Undamped => d_subdivision_undamped(args.tau, (args.a_from, args.a_to), args.points, args.k_max)?,
    };
    let worst = curve.points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let summary = format!(
        "{} boundary points at tau = {}, largest residual {worst:.3e}",
        curve.points.len(),
        args.tau
    );
    let csv = csv_bytes(&["mu", "a", "b", "residual"], &curve.points, |p| {
        vec![fmt_f64(p.mu), fmt_f64(p.a), fmt_f64(p.b), fmt_f64(p.residual)]
    });
    let template = json!({ "family": kind(args.family).as_str(), "tau": args.tau, "points": args.points });
    let tolerances = json!({ "crossing": floquet_dde::sweep::CROSSING_TOL, "pole_guard": floquet_dde::sweep::POLE_GUARD });
    let doc = CurveDoc {
        meta: Meta::new(template, tolerances),
        curve: &curve,
    };
    Ok(Report {
        summary,
        csv,
        json: json_bytes(&doc),
    })
}

#[derive(Serialize)]
struct OrbitDoc {
    meta: Meta,
    omega: f64,
    /// `[x, x']` at the end of each period, starting with the initial state.
    orbit: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<Vec<[f64; 3]>>,
}

fn simulate(args: &SimulateArgs) -> Result<Report> {
    let model = model(&args.equation)?;
    let omega = period(&model, args.omega)?;
    validate(&model, omega)?;
    let spec = model.spec(omega)?;
    let init = (args.x0, args.v0);
    let trajs = simulate_trajectories(&spec, init, args.periods, step(args.h))?;

    let orbit: Vec<[f64; 2]> = std::iter::once([init.0, init.1])
        .chain(trajs.iter().map(|t| {
            let (x, v) = t.final_state();
            [x, v]
        }))
        .collect();
    // absolute-time nodes; each period after the first drops its repeated start node
    let nodes: Vec<[f64; 3]> = trajs
        .iter()
        .enumerate()
        .flat_map(|(k, t)| {
            let offset = k as f64 * omega;
            let skip = usize::from(k > 0);
            t.times()
                .iter()
                .zip(t.positions())
                .zip(t.velocities())
                .skip(skip)
                .map(move |((&t, &x), &v)| [offset + t, x, v])
        })
        .collect();

    let last = orbit.last().copied().unwrap_or([init.0, init.1]);
    let summary = format!(
        "{} periods of {omega}: final state x = {}, x' = {}",
        args.periods,
        fmt_f64(last[0]),
        fmt_f64(last[1])
    );
    let csv = if args.trajectory {
        csv_bytes(&["t", "x", "x_prime"], &nodes, |n| n.iter().map(|v| fmt_f64(*v)).collect())
    } else {
        csv_bytes(&["k", "x", "x_prime"], orbit.iter().enumerate(), |(k, s)| {
            vec![k.to_string(), fmt_f64(s[0]), fmt_f64(s[1])]
        })
    };
    let doc = OrbitDoc {
        meta: meta(model.describe(), None, json!({ "h": args.h })),
        omega,
        orbit,
        trajectory: args.trajectory.then_some(nodes),
    };
    Ok(Report {
        summary,
        csv,
        json: json_bytes(&doc),
    })
}
