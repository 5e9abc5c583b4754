// SPDX-License-Identifier: Apache-2.0
//! Time-dependent Dyson maps, metric operators and invariants for a pair of
//! coupled oscillators with a non-Hermitian `iλK3` coupling.

pub mod algebra;
pub mod dyson;
pub mod energy;
pub mod error;
pub mod fock;
pub mod invariants;
pub mod modes;
pub mod numerics;
pub mod profiles;
pub mod static_models;
pub mod validation;

pub use algebra::{AlgebraElement, DysonParams};
pub use dyson::{EPConstants, GammaTrajectory, OdeTolerance};
pub use energy::Scenario;
pub use error::{Error, Result};
pub use fock::{FockOperator, FockSpace};
pub use invariants::{Branch, InvariantCoeffs};
pub use modes::{Channel, Driver, ModeSpec};
pub use profiles::{ProfileKind, TimeGrid, TimeProfile};
pub use validation::{CriterionReport, Settings, SuiteProfile, Tolerances};
