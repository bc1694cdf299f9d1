//! Secret-key rates for Gaussian-modulated coherent-state CV-QKD with
//! heterodyne detection under individual, collective and hybrid
//! (partially stored) entangling-cloner attacks, asymptotic and finite-size.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod error;
pub mod exec;
pub mod finite_size;
pub mod gaussian;
pub mod optimize;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
pub mod protocol;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Execution;
pub use gaussian::{CovarianceMatrix, Quadrature};
pub use protocol::{MemoryParams, SystemModel};
pub use finite_size::{AttackClass, KeyRateReport, Regime, SecurityBudget};
