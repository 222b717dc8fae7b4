//! Residual suites and figure tables.

mod figdata;
mod report;
mod suites;

pub use figdata::{fig4_value, fig4_zero_hit_time, fig5_value, figdata, FigureTable};
pub use report::{ResidualReport, Verdict};
pub use suites::{run_suite, run_suite_named, Suite, SuiteOptions};
