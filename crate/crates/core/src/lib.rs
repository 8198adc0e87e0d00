//! Gamma-Pareto type I convolution (GPC) evaluators at arbitrary precision,
//! with pharmacokinetic fitting, multidose superposition and bootstrap
//! statistics built on top.

pub mod error;
pub mod mp;

pub use error::{Error, Result};
pub use mp::{MpReal, PrecisionContext};
pub mod gpc;
pub mod pk;
pub mod dosing;
pub mod resample;
pub mod io;
