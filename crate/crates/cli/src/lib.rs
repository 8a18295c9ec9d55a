//! Batch front-end for `fracrbf`: single runs with CSV/JSON artifacts and
//! regeneration of the two published convergence tables.

pub mod backend;
pub mod config;
pub mod output;
pub mod run;
