//! Front end for the `augmap` command: configuration loading, analysis
//! reports, SVG portraits, verification suites and orbit export.

pub mod analysis;
pub mod config;
pub mod expr;
pub mod portrait;
pub mod simulate;
pub mod verify;
