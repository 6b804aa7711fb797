// Range checks are written as negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod combinatorics;
pub mod curves;
pub mod error;
pub mod io;
pub mod limit;
pub mod losses;
pub mod sample;
pub mod simulate;

pub use error::{LalError, Result};
pub use limit::{lal, BatchSize, LalOutcome, LalQuery};
pub use sample::CalibrationSample;
