//! Command-line front end for `globcert`: Matrix Market input, JSON results
//! and CSV certificate traces.

pub mod app;
pub mod mm;
pub mod output;
