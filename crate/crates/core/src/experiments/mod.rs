//! Monte Carlo excess-risk experiments.
//!
//! Excess risk is estimated from the representation
//! `E(f) = 2 E_Q[|η_Q(X) − ½| · 1{f(X) ≠ f*(X)}]` with the analytic `η_Q` of
//! the generator, on test features drawn from the target marginal.

mod config;
mod grid;
mod report;
mod risk;

pub use config::{ExperimentConfig, GeneratorPair, Method, Preset, GROWING_GRID};
pub use grid::{run_cell, run_grid, ExperimentRecord, Flag};
pub use report::{format_float, summarize, write_csv, write_csv_to, CellSummary, SummaryTable, CSV_HEADER};
pub use risk::{estimate_excess_risk, RiskEstimate, TestSet};
