//! Valuation of collateralized, default-risky option deals with asymmetric
//! funding rates.
//!
//! The full price solves a recursive nonlinear equation: the funding account
//! accrues at the borrowing or the lending rate depending on its sign, and the
//! hedge depends on the value being computed. [`lsmc`] solves it by backward
//! least-squares Monte Carlo, [`pde`] solves the continuous-time counterpart on
//! a grid, and [`adjustments`] splits prices into CVA, DVA, LVA, FVA and NVA.

pub mod adjustments;
pub mod cashflows;
pub mod config;
pub mod credit;
pub mod error;
pub mod experiments;
pub mod lsmc;
pub mod market;
pub mod newton;
pub mod pde;
pub mod regression;
pub mod report;

pub use error::{Error, Result};
