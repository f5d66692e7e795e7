//! Command-line front end: scenario files, run orchestration and CSV/JSON/SVG output.

pub mod args;
pub mod commands;
pub mod plot;
pub mod scenario;
