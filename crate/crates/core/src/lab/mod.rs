//! Experiment harness: the A2 sweep, the strong, weak and chain experiments,
//! the invariant suite, exponent fits and report output.
//!
//! Every experiment sweeps `alpha = 2^-a` over a list of integers `a`, computes
//! one [`Row`] per value (in parallel; rows are sorted by `a` afterwards) and
//! fits `log2` of the measured quantity against `log2(1/alpha)`.

mod char_sweep;
pub mod chain;
pub mod check;
pub mod fit;
pub mod quadrature;
pub mod report;
pub mod strong;
pub mod weak;

pub use chain::{
    chain_measure, exp_chain, flatten_chain, project_interval, Annulus, ChainConfig, ChainInput, ChainMeasure,
    ChainState,
};
pub use char_sweep::{char_row, characterize, exp_char, CharConfig, CharSummary};
pub use check::{run_checks, CheckConfig};
pub use fit::{fit_exponent, fit_log2, Fit};
pub use report::{emit_report, parse_formats, Assertion, ExperimentReport, Format, Row};
pub use strong::{exp_strong_lower, strong_oracle, strong_row, StrongConfig};
pub use weak::{exp_weak_lower, weak_row, WeakConfig};

/// Default sweeps of the acceptance runs.
pub const CHAR_SWEEP: [u32; 7] = [4, 5, 6, 7, 8, 9, 10];
pub const STRONG_SWEEP: [u32; 5] = [6, 7, 8, 9, 10];
pub const WEAK_SWEEP: [u32; 6] = [5, 6, 7, 8, 9, 10];
pub const CHAIN_SWEEP: [u32; 6] = [4, 5, 6, 7, 8, 9];
