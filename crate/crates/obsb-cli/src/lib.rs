//! Library surface of the scenario CLI: parsing, execution, and report
//! emission, kept separate from the binary so integration tests can drive
//! full runs in-process.

pub mod report;
pub mod runner;
pub mod scenario;
