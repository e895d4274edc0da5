//! Stability of second-order delay equations with periodic coefficients
//! and delays, decided through the one-period monodromy matrix.
//!
//! ```
//! use floquet_dde::{Family, Model, Path, StabilityClass};
//!
//! let model = Model::Family(Family::damped(0.5, 1.0, 0.5).unwrap());
//! let eval = model.evaluate(3.0, Path::Auto).unwrap();
//! assert_eq!(eval.verdict.class, StabilityClass::ExponentiallyStable);
//! ```

pub mod analytic_damped;
pub mod analytic_undamped;
pub mod chain;
pub mod eqmodel;
pub mod error;
pub mod family;
pub mod monodromy;
pub mod poly;
pub mod report;
pub mod steps;
pub mod sweep;
mod wide;

pub use chain::InitialCondition;
pub use eqmodel::{validate_spec, EquationConfig, EquationSpec, ValidationReport};
pub use error::{Error, Result};
pub use family::{Evaluation, Family, FamilyKind, Model, Path, Route};
pub use monodromy::{classify, multipliers, MonodromyMatrix, StabilityClass, StabilityVerdict};
pub use steps::StepSize;
pub use sweep::{sweep_omega, sweep_plane, SweepResult};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/equations.md")]
    struct Equations;
    #[doc = include_str!("../../../book/src/monodromy.md")]
    struct Monodromy;
    #[doc = include_str!("../../../book/src/recurrences.md")]
    struct Recurrences;
    #[doc = include_str!("../../../book/src/integrator.md")]
    struct Integrator;
    #[doc = include_str!("../../../book/src/sweeps.md")]
    struct Sweeps;
}
