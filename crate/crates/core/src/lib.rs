// Reference values in the unit tests keep every digit the oracle printed.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod assembly;
pub mod fractional;
pub mod kernels;
pub mod nodes;
pub mod params;
pub mod precondition;
pub mod problems;
pub mod series;
pub mod solver;
pub mod tables;
