//! Recognition of the two closed-form families and dispatch between the
//! analytic recurrences and the integrator.

use serde::Serialize;

use crate::analytic_damped::DampedChain;
use crate::analytic_undamped::UndampedChain;
use crate::chain::InitialCondition;
use crate::eqmodel::{validate_spec, DelayKind, EquationConfig, EquationSpec};
use crate::error::{Error, Result};
use crate::monodromy::{monodromy_numeric, verdict, MonodromyMatrix, StabilityVerdict};
use crate::steps::StepSize;

/// Relative agreement on `rho` demanded by [`Path::CrossCheck`].
pub const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `x'' + a x' + b x(t - tau(t)) = 0`
    Damped,
    /// `x'' + a x + b x(t - tau(t)) = 0`
    Undamped,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Damped => "damped",
            FamilyKind::Undamped => "undamped",
        }
    }
}

/// Constant-coefficient equation with the saturating-ramp delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Family {
    #[serde(rename = "family")]
    pub kind: FamilyKind,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl Family {
    pub fn new(kind: FamilyKind, a: f64, b: f64, tau: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidRequest("coefficients must be finite".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidRequest(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { kind, a, b, tau })
    }

    pub fn damped(a: f64, b: f64, tau: f64) -> Result<Self> {
        Self::new(FamilyKind::Damped, a, b, tau)
    }

    pub fn undamped(a: f64, b: f64, tau: f64) -> Result<Self> {
        Self::new(FamilyKind::Undamped, a, b, tau)
    }

    pub fn spec(&self, period: f64) -> EquationSpec {
        match self.kind {
            FamilyKind::Damped => EquationSpec::damped_ramp(self.a, self.b, self.tau, period),
            FamilyKind::Undamped => EquationSpec::undamped_ramp(self.a, self.b, self.tau, period),
        }
    }

    /// Whether the recurrences apply: they divide by `a` (damped) or need
    /// `sqrt(a)` real and nonzero (undamped).
    pub fn analytic_supported(&self) -> bool {
        match self.kind {
            FamilyKind::Damped => self.a != 0.0,
            FamilyKind::Undamped => self.a > 0.0,
        }
    }

    /// Recognizes a spec built from constants and one ramp delay.
    pub fn detect(spec: &EquationSpec) -> Option<Self> {
        let damping = spec.damping.as_constant()?;
        let ramp = |t: &crate::eqmodel::DelayTerm| match t.delay.kind() {
            DelayKind::SaturatingRamp { tau } => Some(*tau),
            _ => None,
        };
        let undelayed = |t: &crate::eqmodel::DelayTerm| {
            matches!(t.delay.kind(), DelayKind::Constant { tau } if *tau == 0.0)
        };
        match spec.terms.as_slice() {
            [t] => {
                let tau = ramp(t)?;
                Self::damped(damping, t.coefficient.as_constant()?, tau).ok()
            }
            [p, q] if damping == 0.0 => {
                let (plain, delayed) = if undelayed(p) { (p, q) } else { (q, p) };
                if !undelayed(plain) {
                    return None;
                }
                let tau = ramp(delayed)?;
                Self::undamped(plain.coefficient.as_constant()?, delayed.coefficient.as_constant()?, tau).ok()
            }
            _ => None,
        }
    }
}

/// An equation with the period left open, as used by sweeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Family(Family),
    Config(EquationConfig),
}

impl Model {
    pub fn spec(&self, period: f64) -> Result<EquationSpec> {
        match self {
            Model::Family(f) => Ok(f.spec(period)),
            Model::Config(c) => c.instantiate(Some(period)),
        }
    }

    /// The closed-form family this model reduces to, if any.
    pub fn family(&self) -> Option<Family> {
        match self {
            Model::Family(f) => Some(*f),
            Model::Config(c) => {
                // constants and ramp delays do not depend on the period
                let probe = c.period.unwrap_or(1.0);
                Family::detect(&c.instantiate(Some(probe)).ok()?)
            }
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        match self {
            Model::Family(f) => serde_json::to_value(f),
            Model::Config(c) => serde_json::to_value(c),
        }
        .unwrap_or(serde_json::Value::Null)
    }

    /// Precomputes what can be shared between periods up to `horizon`.
    pub fn prepare(&self, path: Path, horizon: f64) -> Result<Prepared> {
        let family = self.family().filter(|f| f.analytic_supported());
        let chains = match (path, family) {
            (Path::Numeric(_), _) | (_, None) => None,
            (_, Some(f)) => Some(FamilyChains::build(&f, horizon.max(f.tau))?),
        };
        if chains.is_none() && path == Path::Analytic {
            return Err(Error::Unsupported("model is not a supported closed-form family".into()));
        }
        Ok(Prepared {
            model: self.clone(),
            path,
            chains,
        })
    }

    pub fn evaluate(&self, period: f64, path: Path) -> Result<Evaluation> {
        self.prepare(path, period)?.evaluate(period)
    }
}

/// How a monodromy matrix is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Path {
    /// Recurrences when the model allows them, else (or on precision loss)
    /// the integrator at the default step.
    Auto,
    /// Recurrences only.
    Analytic,
    Numeric(StepSize),
    /// Both; fails when `rho` disagrees.
    CrossCheck(StepSize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub matrix: MonodromyMatrix,
    pub verdict: StabilityVerdict,
    pub route: Route,
}

#[derive(Debug, Clone)]
enum Chain {
    Damped(DampedChain),
    Undamped(UndampedChain),
}

impl Chain {
    fn eval_checked(&self, t: f64) -> Result<(f64, f64)> {
        match self {
            Chain::Damped(c) => c.eval_checked(t),
            Chain::Undamped(c) => c.eval_checked(t),
        }
    }
}

/// Both fundamental solutions of a family, valid for every period up to the
/// horizon: the ramp saturates after `tau`, so `[0, period]` of the periodic
/// equation coincides with the first `period` time units of the chain.
#[derive(Debug, Clone)]
pub struct FamilyChains {
    family: Family,
    x1: Chain,
    x2: Chain,
}

impl FamilyChains {
    pub fn build(family: &Family, horizon: f64) -> Result<Self> {
        let build = |ic| -> Result<Chain> {
            let Family { a, b, tau, .. } = *family;
            Ok(match family.kind {
                FamilyKind::Damped => Chain::Damped(DampedChain::build(a, b, tau, horizon, ic)?),
                FamilyKind::Undamped => Chain::Undamped(UndampedChain::build(a, b, tau, horizon, ic)?),
            })
        };
        Ok(Self {
            family: *family,
            x1: build(InitialCondition::UnitDisplacement)?,
            x2: build(InitialCondition::UnitVelocity)?,
        })
    }

    pub fn matrix(&self, period: f64) -> Result<MonodromyMatrix> {
        if period < self.family.tau {
            return Err(Error::Invalid(validate_spec(&self.family.spec(period))));
        }
        MonodromyMatrix::from_pair(self.x1.eval_checked(period)?, self.x2.eval_checked(period)?)
    }
}

/// A model with its shared precomputation.
#[derive(Debug, Clone)]
pub struct Prepared {
    model: Model,
    path: Path,
    chains: Option<FamilyChains>,
}

impl Prepared {
    pub fn evaluate(&self, period: f64) -> Result<Evaluation> {
        let numeric = |h: StepSize| -> Result<Evaluation> {
            let m = monodromy_numeric(&self.model.spec(period)?, h)?;
            Ok(Evaluation {
                matrix: m,
                verdict: verdict(&m),
                route: Route::Numeric,
            })
        };
        let analytic = || -> Result<Evaluation> {
            let chains = self
                .chains
                .as_ref()
                .ok_or_else(|| Error::Unsupported("model is not a supported closed-form family".into()))?;
            let m = chains.matrix(period)?;
            Ok(Evaluation {
                matrix: m,
                verdict: verdict(&m),
                route: Route::Analytic,
            })
        };
        match self.path {
            Path::Numeric(h) => numeric(h),
            Path::Analytic => analytic(),
            Path::Auto => match analytic() {
                Err(Error::Unsupported(_) | Error::PrecisionLoss { .. }) => numeric(StepSize::Default),
                other => other,
            },
            Path::CrossCheck(h) => {
                let a = analytic()?;
                let n = numeric(h)?;
                let (ra, rn) = (a.verdict.rho, n.verdict.rho);
                if (ra - rn).abs() > CROSS_CHECK_TOL * ra.abs().max(rn.abs()).max(1.0) {
                    return Err(Error::CrossCheck {
                        analytic: ra,
                        numeric: rn,
                    });
                }
                Ok(a)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::StabilityClass;

    #[test]
    fn detects_builtin_families() {
        let f = Family::detect(&EquationSpec::damped_ramp(0.5, 1.0, 0.5, 3.0)).unwrap();
        assert_eq!(f, Family::damped(0.5, 1.0, 0.5).unwrap());
        let f = Family::detect(&EquationSpec::undamped_ramp(1.0, -0.5, 0.5, 3.0)).unwrap();
        assert_eq!(f, Family::undamped(1.0, -0.5, 0.5).unwrap());
        assert_eq!(Family::detect(&EquationSpec::act_and_wait(1.0, 1.0, 0.5, 3.0)), None);
    }

    #[test]
    fn detects_family_in_config() {
        let cfg = EquationConfig::from_json(
            r#"{"damping": 2.0, "terms": [{"coefficient": 2.5, "delay": {"kind": "saturating_ramp", "tau": 1.0}}]}"#,
        )
        .unwrap();
        assert_eq!(Model::Config(cfg).family(), Some(Family::damped(2.0, 2.5, 1.0).unwrap()));
    }

    #[test]
    fn zero_damping_falls_back_to_numeric() {
        let model = Model::Family(Family::damped(0.0, 1.0, 0.5).unwrap());
        let e = model.evaluate(1.0, Path::Auto).unwrap();
        assert_eq!(e.route, Route::Numeric);
        assert!(matches!(model.evaluate(1.0, Path::Analytic), Err(Error::Unsupported(_))));
    }

    #[test]
    fn short_period_is_invalid() {
        let model = Model::Family(Family::damped(1.0, 1.0, 0.5).unwrap());
        assert!(matches!(model.evaluate(0.4, Path::Auto), Err(Error::Invalid(_))));
        assert!(matches!(model.evaluate(0.4, Path::Numeric(StepSize::Default)), Err(Error::Invalid(_))));
    }

    #[test]
    fn cross_check_agrees_on_damped_example() {
        let model = Model::Family(Family::damped(0.5, 1.0, 0.5).unwrap());
        let e = model.evaluate(3.0, Path::CrossCheck(StepSize::Default)).unwrap();
        assert_eq!(e.route, Route::Analytic);
        assert_eq!(e.verdict.class, StabilityClass::ExponentiallyStable);
    }

    #[test]
    fn shared_chain_matches_fresh_build() {
        let model = Model::Family(Family::undamped(1.0, -0.5, 0.5).unwrap());
        let prepared = model.prepare(Path::Analytic, 10.0).unwrap();
        for period in [0.5, 1.3, 3.0, 9.99] {
            let shared = prepared.evaluate(period).unwrap().matrix;
            let fresh = model.evaluate(period, Path::Analytic).unwrap().matrix;
            for (s, f) in shared.entries().iter().zip(fresh.entries()) {
                assert!((s - f).abs() <= 1e-12 * f.abs().max(1.0), "{period}: {s} vs {f}");
            }
        }
    }
}
