//! Experiment harness for the contiflow library: config parsing, ε-sweep
//! pipelines, constants estimation, deterministic seeding, CSV/JSON
//! emission and the acceptance-suite driver.

pub mod acceptance;
pub mod config;
pub mod csvout;
pub mod manifest;
pub mod pipelines;
pub mod runner;

/// Exit-code contract: 0 pass, 2 invalid config, 3 tolerance unmet,
/// 4 acceptance-test failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    InvalidConfig = 2,
    ToleranceUnmet = 3,
    AcceptanceFailed = 4,
}
