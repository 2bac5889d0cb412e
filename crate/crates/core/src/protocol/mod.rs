//! Cross-validated experiment grids, significance tests and result tables.
//!
//! Every cell of a comparison table is `n_folds × n_seeds` runs (3 × 5 by
//! default). A run's score is its maximum test accuracy, stored as a
//! percentage. SSL cells are compared to the labeled-only baseline with a
//! t-test over runs paired by `(fold, trial)`.

mod grid;
mod runlog;
mod stats;
mod table;

pub use grid::{model_rng, run_grid, split_rng, ExperimentGrid, Job, Method, DEFAULT_RATES};
pub use runlog::{format_log, parse_log, read_log, write_log, RunKey, RunResult, LOG_HEADER, SUPERVISED};
pub use stats::{
    paired_t_test, t_test, Pairing, Significance, TTestConfig, TTestResult, Tails, DEFAULT_ALPHA,
};
pub use table::{
    build_tables, format_series, labeled_fraction_series, CellResult, ComparisonTable, TableRow,
    ORACLE,
};
