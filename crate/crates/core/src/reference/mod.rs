//! Independent oracles and baselines: exhaustive exact tests, parametric
//! distribution functions and the FWER/power simulation harness.

pub mod distributions;
pub mod exact;
pub mod fwer;
